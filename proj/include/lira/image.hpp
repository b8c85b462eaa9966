#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lira/tensor.hpp"

namespace lira {

// H x W x 3, interleaved RGB, values in [0, 1].
struct ImageBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  static ImageBuffer filled(std::size_t h, std::size_t w, double v = 0.0);
  double& at(std::size_t y, std::size_t x, std::size_t c) { return values[(y * width + x) * 3 + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return values[(y * width + x) * 3 + c];
  }
  bool valid() const;
  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// Per-pixel foreground probability.
struct MaskMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  static BinaryMask empty(std::size_t h, std::size_t w);
  bool at(std::size_t y, std::size_t x) const { return bits[y * width + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v) { bits[y * width + x] = v ? 1 : 0; }
  std::size_t area() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// Pixel-wise probability > threshold.
BinaryMask binarize(const MaskMap& m, double threshold = 0.5);

// Bilinear resize with pixel-center alignment and edge clamping.
ImageBuffer resize_bilinear(const ImageBuffer& img, std::size_t out_h, std::size_t out_w);

// Non-overlapping patches in raster order -> [T x 3*patch*patch], each row
// laid out (dy, dx, channel).
nn::Tensor patchify(const ImageBuffer& img, std::size_t patch);

// Netpbm I/O. Images are P6 8-bit, masks P5 8-bit. Soft masks are written as
// round(p * 255); binary masks read back as value > 127.
void write_ppm(const std::filesystem::path& path, const ImageBuffer& img);
ImageBuffer read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const MaskMap& m);
void write_pgm(const std::filesystem::path& path, const BinaryMask& m);
std::vector<std::uint8_t> read_pgm_bytes(const std::filesystem::path& path, std::size_t& height,
                                         std::size_t& width);
BinaryMask read_pgm_mask(const std::filesystem::path& path);

}  // namespace lira
