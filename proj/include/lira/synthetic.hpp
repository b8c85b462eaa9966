#pragma once
// Seeded shape scenes: colored squares, circles and triangles on a dark noisy
// canvas, each with an exact mask, referring descriptions and an attribute
// record. Shapes sit on the patch grid so patch-level masks can cover them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lira/attr_eval.hpp"
#include "lira/image.hpp"

namespace lira::synth {

struct ObjectSpec {
  std::string shape;
  std::string color;
  std::string location;
  std::size_t top = 0, left = 0, size = 0;  // bounding square in pixels
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct SceneSpec {
  std::size_t height = 0, width = 0;
  std::vector<ObjectSpec> objects;
  std::uint64_t seed = 0;
  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct SceneObject {
  ObjectSpec spec;
  BinaryMask mask;
  // Full description first, then variants each omitting one attribute class.
  std::vector<std::string> descriptions;
  std::string local_description;  // "<color> <shape>", used inside <p> ... </p>
};

struct Scene {
  SceneSpec spec;
  ImageBuffer image;
  std::vector<SceneObject> objects;
};

struct SceneOptions {
  std::size_t canvas = 64;
  std::size_t patch = 8;
  int background_level = 26;  // out of 255
  int noise_levels = 8;       // +- uniform jitter, out of 255
  std::size_t max_retries = 100;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pixel-center rasterization inside a size x size box at (top, left).
BinaryMask rasterize(const std::string& shape, std::size_t size, std::size_t top,
                     std::size_t left, std::size_t height, std::size_t width);

// Location word for a box center; nullopt on the diagonals, where the
// horizontal and vertical offsets from the canvas center are equal.
std::optional<std::string> location_of(double cy, double cx, std::size_t height,
                                       std::size_t width);

std::vector<std::string> describe(const ObjectSpec& o);

// Indices of scene objects consistent with every attribute word in the text.
std::vector<std::size_t> resolve(const std::string& description, const SceneSpec& scene);

Scene generate_scene(std::uint64_t seed, std::size_t n_objects, const SceneOptions& opts = {});

std::uint64_t splitmix64(std::uint64_t& state);

enum class Split { Train, Eval };

// Scene seeds for a split. Train and eval streams come from distinct
// splitmix64 states and are checked for collisions.
std::vector<std::uint64_t> split_seeds(std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_eval, Split which);

struct SplitOptions {
  SceneOptions scene;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  double train_ilvc_fraction = 0.5;
  double eval_ilvc_fraction = 1.0;
  bool gcg = true;  // one grounded-caption sample per scene
};

struct SplitSummary {
  std::size_t train_scenes = 0, eval_scenes = 0;
  std::size_t train_samples = 0, eval_samples = 0;
};

// Writes <out>/vocab.txt and, per split, images/*.ppm, masks/*.pgm,
// samples.json and attr_records.json.
SplitSummary make_split(std::uint64_t seed, std::size_t n_train, std::size_t n_eval,
                        const std::filesystem::path& out, const SplitOptions& opts = {});

}  // namespace lira::synth
