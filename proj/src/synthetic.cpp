#include "lira/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "lira/vocab.hpp"

namespace lira::synth {
namespace {

struct Rgb {
  int r, g, b;
};

Rgb color_levels(const std::string& color) {
  static const std::map<std::string, Rgb> table = {
      {"red", {225, 40, 40}},     {"green", {40, 200, 60}},   {"blue", {40, 70, 230}},
      {"yellow", {230, 215, 40}}, {"purple", {150, 50, 205}}, {"cyan", {40, 205, 215}},
      {"white", {240, 240, 240}}};
  auto it = table.find(color);
  if (it == table.end()) throw std::invalid_argument("no palette entry for color " + color);
  return it->second;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int jitter(std::mt19937_64& rng, int levels) {
  return static_cast<int>(pick(rng, 2 * static_cast<std::size_t>(levels) + 1)) - levels;
}

double level(int v) { return static_cast<double>(std::clamp(v, 0, 255)) / 255.0; }

bool boxes_overlap(const ObjectSpec& a, const ObjectSpec& b) {
  return a.top < b.top + b.size && b.top < a.top + a.size && a.left < b.left + b.size &&
         b.left < a.left + a.size;
}

std::set<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::set<std::string> out;
  for (std::string w; is >> w;) out.insert(w);
  return out;
}

std::string scene_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05zu", i);
  return buf;
}

std::optional<std::vector<ObjectSpec>> try_place(std::mt19937_64& rng, std::size_t n,
                                                 const SceneOptions& o) {
  std::vector<std::string> colors = color_words();
  std::vector<std::string> locations = location_words();
  const auto& shapes = category_words();
  std::vector<ObjectSpec> placed;
  for (std::size_t i = 0; i < n; ++i) {
    ObjectSpec obj;
    obj.shape = shapes[pick(rng, shapes.size())];
    // Triangles lose too much area to patch-level masks below three patches.
    obj.size = obj.shape == "triangle" ? 3 * o.patch : (2 + pick(rng, 2)) * o.patch;
    const std::size_t ci = pick(rng, colors.size());
    obj.color = colors[ci];
    colors.erase(colors.begin() + static_cast<std::ptrdiff_t>(ci));

    const std::size_t li = pick(rng, locations.size());
    obj.location = locations[li];
    std::vector<std::pair<std::size_t, std::size_t>> spots;
    for (std::size_t top = 0; top + obj.size <= o.canvas; top += o.patch)
      for (std::size_t left = 0; left + obj.size <= o.canvas; left += o.patch) {
        const double half = static_cast<double>(obj.size) / 2.0;
        auto loc = location_of(static_cast<double>(top) + half, static_cast<double>(left) + half,
                               o.canvas, o.canvas);
        if (!loc || *loc != obj.location) continue;
        ObjectSpec probe = obj;
        probe.top = top;
        probe.left = left;
        if (std::none_of(placed.begin(), placed.end(),
                         [&](const ObjectSpec& q) { return boxes_overlap(q, probe); }))
          spots.emplace_back(top, left);
      }
    if (spots.empty()) return std::nullopt;
    locations.erase(locations.begin() + static_cast<std::ptrdiff_t>(li));
    std::tie(obj.top, obj.left) = spots[pick(rng, spots.size())];
    placed.push_back(obj);
  }
  return placed;
}

}  // namespace

BinaryMask rasterize(const std::string& shape, std::size_t size, std::size_t top,
                     std::size_t left, std::size_t height, std::size_t width) {
  if (top + size > height || left + size > width)
    throw std::invalid_argument("rasterize: shape box leaves the canvas");
  BinaryMask m = BinaryMask::empty(height, width);
  const double s = static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double cx = static_cast<double>(x) + 0.5, cy = static_cast<double>(y) + 0.5;
      bool in = false;
      if (shape == "square") {
        in = true;
      } else if (shape == "circle") {
        in = (cx - s / 2) * (cx - s / 2) + (cy - s / 2) * (cy - s / 2) <= s * s / 4;
      } else if (shape == "triangle") {
        in = std::abs(cx - s / 2) <= cy / 2;  // apex at the top, base on the bottom edge
      } else {
        throw std::invalid_argument("unknown shape " + shape);
      }
      if (in) m.set(top + y, left + x, true);
    }
  return m;
}

std::optional<std::string> location_of(double cy, double cx, std::size_t height,
                                       std::size_t width) {
  const double dx = cx - static_cast<double>(width) / 2.0;
  const double dy = cy - static_cast<double>(height) / 2.0;
  const double near = static_cast<double>(std::min(height, width)) / 16.0;
  if (std::abs(dx) <= near && std::abs(dy) <= near) return "center";
  if (std::abs(dx) > std::abs(dy)) return dx < 0 ? "left" : "right";
  if (std::abs(dy) > std::abs(dx)) return dy < 0 ? "top" : "bottom";
  return std::nullopt;
}

std::vector<std::string> describe(const ObjectSpec& o) {
  return {"the " + o.color + " " + o.shape + " on the " + o.location,
          "the " + o.shape + " on the " + o.location, "the " + o.color + " " + o.shape,
          "the " + o.color + " object on the " + o.location};
}

std::vector<std::size_t> resolve(const std::string& description, const SceneSpec& scene) {
  const auto w = words(description);
  auto consistent = [&](const std::string& value, const std::vector<std::string>& lexicon) {
    return std::none_of(lexicon.begin(), lexicon.end(), [&](const std::string& word) {
      return word != value && w.count(word) != 0;
    });
  };
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    if (consistent(o.shape, category_words()) && consistent(o.color, color_words()) &&
        consistent(o.location, location_words()))
      out.push_back(i);
  }
  return out;
}

Scene generate_scene(std::uint64_t seed, std::size_t n_objects, const SceneOptions& opts) {
  if (n_objects < 1) throw std::invalid_argument("generate_scene: n_objects must be >= 1");
  if (n_objects > location_words().size() || n_objects > color_words().size())
    throw PlacementError("generate_scene: more objects than distinct colors or locations");
  if (opts.patch == 0 || opts.canvas % opts.patch != 0)
    throw std::invalid_argument("generate_scene: canvas must be a multiple of the patch size");
  std::mt19937_64 rng(seed);

  std::optional<std::vector<ObjectSpec>> placed;
  for (std::size_t attempt = 0; attempt < opts.max_retries && !placed; ++attempt)
    placed = try_place(rng, n_objects, opts);
  if (!placed)
    throw PlacementError("could not place " + std::to_string(n_objects) + " objects after " +
                         std::to_string(opts.max_retries) + " attempts (seed " +
                         std::to_string(seed) + ")");

  Scene scene;
  scene.spec = SceneSpec{opts.canvas, opts.canvas, *placed, seed};
  scene.image = ImageBuffer::filled(opts.canvas, opts.canvas);
  for (double& v : scene.image.values)
    v = level(opts.background_level + jitter(rng, opts.noise_levels));

  for (const auto& o : scene.spec.objects) {
    SceneObject so;
    so.spec = o;
    so.mask = rasterize(o.shape, o.size, o.top, o.left, opts.canvas, opts.canvas);
    so.descriptions = describe(o);
    so.local_description = o.color + " " + o.shape;
    const Rgb c = color_levels(o.color);
    for (std::size_t y = 0; y < opts.canvas; ++y)
      for (std::size_t x = 0; x < opts.canvas; ++x) {
        if (!so.mask.at(y, x)) continue;
        scene.image.at(y, x, 0) = level(c.r + jitter(rng, opts.noise_levels));
        scene.image.at(y, x, 1) = level(c.g + jitter(rng, opts.noise_levels));
        scene.image.at(y, x, 2) = level(c.b + jitter(rng, opts.noise_levels));
      }
    scene.objects.push_back(std::move(so));
  }
  return scene;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::uint64_t> split_seeds(std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_eval, Split which) {
  std::uint64_t train_state = seed;
  std::uint64_t eval_state = seed ^ 0xe7a1c0de5eedULL;
  std::vector<std::uint64_t> train, eval;
  std::set<std::uint64_t> seen;
  auto fill = [&](std::uint64_t& state, std::size_t n, std::vector<std::uint64_t>& out) {
    while (out.size() < n) {
      const std::uint64_t s = splitmix64(state);
      if (seen.insert(s).second) out.push_back(s);
    }
  };
  fill(train_state, n_train, train);
  fill(eval_state, n_eval, eval);
  return which == Split::Train ? train : eval;
}

namespace {

std::size_t write_split(const std::vector<std::uint64_t>& seeds, const std::filesystem::path& dir,
                        double ilvc_fraction, const SplitOptions& opts, const Vocab& vocab) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  nlohmann::json samples = nlohmann::json::array();
  nlohmann::json records = nlohmann::json::array();
  auto instruction_text = [](const std::string& prefix, const std::string& query, bool ilvc) {
    std::string s = prefix;
    if (!query.empty()) s += " " + query;
    if (ilvc) s += " with local regions";
    return s;
  };
  // Check that every string we emit is in the vocabulary.
  auto checked = [&](const std::string& s) -> const std::string& {
    vocab.encode(s);
    return s;
  };

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::uint64_t meta_state = seeds[i];
    std::mt19937_64 rng(splitmix64(meta_state));
    const std::size_t span = opts.max_objects - opts.min_objects + 1;
    const std::size_t n_objects = opts.min_objects + pick(rng, span);
    const Scene scene = generate_scene(seeds[i], n_objects, opts.scene);
    const std::string name = scene_name(i);
    const std::string image_ref = "images/" + name + ".ppm";
    write_ppm(dir / image_ref, scene.image);

    std::vector<std::string> mask_refs;
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      const auto& obj = scene.objects[k];
      mask_refs.push_back("masks/" + name + "_" + std::to_string(k + 1) + ".pgm");
      write_pgm(dir / mask_refs.back(), obj.mask);

      attr::AttrRecord rec;
      rec.object_id = name + "_" + std::to_string(k + 1);
      rec.image = image_ref;
      rec.mask = mask_refs.back();
      rec.descriptions = obj.descriptions;
      rec.attributes = {{AttributeClass::Category, obj.spec.shape},
                        {AttributeClass::Color, obj.spec.color},
                        {AttributeClass::Location, obj.spec.location}};
      records.push_back(attr::to_json(rec));

      const std::string& query = checked(obj.descriptions[pick(rng, obj.descriptions.size())]);
      const bool ilvc = unit(rng) < ilvc_fraction;
      samples.push_back({{"id", samples.size()},
                         {"scene", name},
                         {"image", image_ref},
                         {"task", "refseg"},
                         {"query", query},
                         {"ilvc", ilvc},
                         {"instruction", instruction_text("please segment", query, ilvc)},
                         {"regions", nlohmann::json::array({{{"mask", mask_refs.back()},
                                                             {"description",
                                                              checked(obj.local_description)}}})}});
    }
    if (opts.gcg) {
      // Regions in raster order of their boxes.
      std::vector<std::size_t> order(scene.objects.size());
      for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& sa = scene.objects[a].spec;
        const auto& sb = scene.objects[b].spec;
        return std::tie(sa.top, sa.left) < std::tie(sb.top, sb.left);
      });
      nlohmann::json regions = nlohmann::json::array();
      for (std::size_t k : order)
        regions.push_back(
            {{"mask", mask_refs[k]}, {"description", scene.objects[k].local_description}});
      const bool ilvc = unit(rng) < ilvc_fraction;
      samples.push_back(
          {{"id", samples.size()},
           {"scene", name},
           {"image", image_ref},
           {"task", "gcg"},
           {"query", ""},
           {"ilvc", ilvc},
           {"instruction",
            instruction_text("please describe the image and segment each object", "", ilvc)},
           {"regions", regions}});
    }
  }
  std::ofstream(dir / "samples.json") << samples.dump(1) << '\n';
  std::ofstream(dir / "attr_records.json") << records.dump(1) << '\n';
  return samples.size();
}

}  // namespace

SplitSummary make_split(std::uint64_t seed, std::size_t n_train, std::size_t n_eval,
                        const std::filesystem::path& out, const SplitOptions& opts) {
  if (opts.min_objects < 1 || opts.max_objects < opts.min_objects)
    throw std::invalid_argument("make_split: invalid object count range");
  std::filesystem::create_directories(out);
  const Vocab vocab = Vocab::standard();
  vocab.save(out / "vocab.txt");
  SplitSummary s;
  s.train_scenes = n_train;
  s.eval_scenes = n_eval;
  s.train_samples = write_split(split_seeds(seed, n_train, n_eval, Split::Train), out / "train",
                                opts.train_ilvc_fraction, opts, vocab);
  s.eval_samples = write_split(split_seeds(seed, n_train, n_eval, Split::Eval), out / "eval",
                               opts.eval_ilvc_fraction, opts, vocab);
  return s;
}

}  // namespace lira::synth
