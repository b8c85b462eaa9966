#include "lira/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lira {

ImageBuffer ImageBuffer::filled(std::size_t h, std::size_t w, double v) {
  return ImageBuffer{h, w, std::vector<double>(h * w * 3, v)};
}

bool ImageBuffer::valid() const {
  if (height == 0 || width == 0 || values.size() != height * width * 3) return false;
  return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

BinaryMask BinaryMask::empty(std::size_t h, std::size_t w) {
  return BinaryMask{h, w, std::vector<std::uint8_t>(h * w, 0)};
}

std::size_t BinaryMask::area() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BinaryMask binarize(const MaskMap& m, double threshold) {
  BinaryMask out = BinaryMask::empty(m.height, m.width);
  for (std::size_t i = 0; i < m.values.size(); ++i) out.bits[i] = m.values[i] > threshold ? 1 : 0;
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t out_h, std::size_t out_w) {
  if (img.height == 0 || img.width == 0 || out_h == 0 || out_w == 0)
    throw nn::ShapeError("resize_bilinear: empty image or target");
  ImageBuffer out = ImageBuffer::filled(out_h, out_w);
  const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

nn::Tensor patchify(const ImageBuffer& img, std::size_t patch) {
  if (patch == 0 || img.height % patch != 0 || img.width % patch != 0)
    throw nn::ShapeError("patchify: image " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " not divisible by patch " +
                         std::to_string(patch));
  const std::size_t gh = img.height / patch, gw = img.width / patch;
  const std::size_t row = 3 * patch * patch;
  nn::Tensor out({gh * gw, row});
  for (std::size_t py = 0; py < gh; ++py)
    for (std::size_t px = 0; px < gw; ++px) {
      double* dst = out.data().data() + (py * gw + px) * row;
      for (std::size_t dy = 0; dy < patch; ++dy)
        for (std::size_t dx = 0; dx < patch; ++dx)
          for (std::size_t c = 0; c < 3; ++c)
            *dst++ = img.at(py * patch + dy, px * patch + dx, c);
    }
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_netpbm(const std::filesystem::path& path, const char* magic, std::size_t h,
                  std::size_t w, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << magic << "\n" << w << " " << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::uint8_t> read_netpbm(const std::filesystem::path& path, const std::string& magic,
                                      std::size_t channels, std::size_t& h, std::size_t& w) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  auto token = [&]() {
    std::string t;
    while (is >> t) {
      if (t[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return t;
    }
    throw std::runtime_error("truncated netpbm header in " + path.string());
  };
  if (token() != magic) throw std::runtime_error(path.string() + " is not " + magic);
  w = std::stoul(token());
  h = std::stoul(token());
  if (std::stoul(token()) != 255)
    throw std::runtime_error(path.string() + ": only 8-bit netpbm is supported");
  is.get();  // single whitespace after maxval
  std::vector<std::uint8_t> bytes(h * w * channels);
  if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw std::runtime_error("truncated pixel data in " + path.string());
  return bytes;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const ImageBuffer& img) {
  std::vector<std::uint8_t> bytes(img.values.size());
  std::transform(img.values.begin(), img.values.end(), bytes.begin(), to_byte);
  write_netpbm(path, "P6", img.height, img.width, bytes);
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  ImageBuffer img;
  const auto bytes = read_netpbm(path, "P6", 3, img.height, img.width);
  img.values.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) img.values[i] = bytes[i] / 255.0;
  return img;
}

void write_pgm(const std::filesystem::path& path, const MaskMap& m) {
  std::vector<std::uint8_t> bytes(m.values.size());
  std::transform(m.values.begin(), m.values.end(), bytes.begin(), to_byte);
  write_netpbm(path, "P5", m.height, m.width, bytes);
}

void write_pgm(const std::filesystem::path& path, const BinaryMask& m) {
  std::vector<std::uint8_t> bytes(m.bits.size());
  std::transform(m.bits.begin(), m.bits.end(), bytes.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
  write_netpbm(path, "P5", m.height, m.width, bytes);
}

std::vector<std::uint8_t> read_pgm_bytes(const std::filesystem::path& path, std::size_t& height,
                                         std::size_t& width) {
  return read_netpbm(path, "P5", 1, height, width);
}

BinaryMask read_pgm_mask(const std::filesystem::path& path) {
  BinaryMask m;
  const auto bytes = read_pgm_bytes(path, m.height, m.width);
  m.bits.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) m.bits[i] = bytes[i] > 127 ? 1 : 0;
  return m;
}

}  // namespace lira
