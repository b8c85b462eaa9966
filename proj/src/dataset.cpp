#include "lira/dataset.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace lira::data {

std::vector<Sample> load_samples(const std::filesystem::path& split_dir, std::size_t limit) {
  const auto path = split_dir / "samples.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }

  std::map<std::string, std::shared_ptr<const ImageBuffer>> images;
  std::vector<Sample> out;
  for (const auto& j : doc) {
    if (limit != 0 && out.size() == limit) break;
    Sample s;
    s.id = j.at("id").get<std::size_t>();
    s.scene = j.at("scene").get<std::string>();
    s.image_ref = j.at("image").get<std::string>();
    s.task = gen::parse_task(j.at("task").get<std::string>());
    s.query = j.at("query").get<std::string>();
    s.ilvc = j.at("ilvc").get<bool>();
    s.instruction = j.at("instruction").get<std::string>();
    auto& img = images[s.image_ref];
    if (!img) img = std::make_shared<const ImageBuffer>(read_ppm(split_dir / s.image_ref));
    s.image = img;
    for (const auto& r : j.at("regions")) {
      Region reg;
      reg.mask_ref = r.at("mask").get<std::string>();
      reg.mask = read_pgm_mask(split_dir / reg.mask_ref);
      reg.description = r.at("description").get<std::string>();
      if (reg.mask.height != s.image->height || reg.mask.width != s.image->width)
        throw std::runtime_error(reg.mask_ref + ": mask size differs from " + s.image_ref);
      s.regions.push_back(std::move(reg));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ilvc::RegionAnnotation> annotations(const Sample& s, const Vocab& vocab) {
  std::vector<ilvc::RegionAnnotation> out;
  out.reserve(s.regions.size());
  for (const auto& r : s.regions) out.push_back({r.mask, vocab.encode(r.description)});
  return out;
}

}  // namespace lira::data
