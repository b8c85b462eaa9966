#pragma once
// Loading of samples.json splits written by the scene generator.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lira/generation.hpp"
#include "lira/ilvc.hpp"
#include "lira/image.hpp"
#include "lira/vocab.hpp"

namespace lira::data {

struct Region {
  std::string mask_ref;
  BinaryMask mask;
  std::string description;
};

struct Sample {
  std::size_t id = 0;
  std::string scene;
  std::string image_ref;
  gen::Task task = gen::Task::RefSeg;
  std::string query;
  bool ilvc = true;
  std::string instruction;
  std::shared_ptr<const ImageBuffer> image;  // shared between samples of one scene
  std::vector<Region> regions;
};

// Reads <split_dir>/samples.json and the referenced image and mask files.
// limit == 0 loads everything.
std::vector<Sample> load_samples(const std::filesystem::path& split_dir, std::size_t limit = 0);

std::vector<ilvc::RegionAnnotation> annotations(const Sample& s, const Vocab& vocab);

}  // namespace lira::data
