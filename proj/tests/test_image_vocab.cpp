#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "lira/image.hpp"
#include "lira/vocab.hpp"
#include "test_util.hpp"

namespace {

using namespace lira;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lira_test_" + name);
}

ImageBuffer quantized_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  ImageBuffer img = ImageBuffer::filled(h, w);
  for (double& v : img.values) v = static_cast<double>(rng() % 256) / 255.0;
  return img;
}

TEST(Image, PpmRoundTripIsExactOnQuantizedValues) {
  std::mt19937_64 rng(1);
  const ImageBuffer img = quantized_image(5, 7, rng);
  const auto path = temp_file("img.ppm");
  write_ppm(path, img);
  EXPECT_EQ(read_ppm(path), img);
  std::filesystem::remove(path);
}

TEST(Image, SoftMaskPgmRoundsToNearestLevel) {
  const MaskMap m{1, 4, {0.0, 0.5, 0.2, 1.0}};
  const auto path = temp_file("soft.pgm");
  write_pgm(path, m);
  std::size_t h = 0, w = 0;
  const auto bytes = read_pgm_bytes(path, h, w);
  EXPECT_EQ(h, 1u);
  EXPECT_EQ(w, 4u);
  EXPECT_EQ(bytes, (std::vector<std::uint8_t>{0, 128, 51, 255}));
  std::filesystem::remove(path);
}

TEST(Image, BinaryMaskPgmRoundTrip) {
  std::mt19937_64 rng(2);
  const BinaryMask m = testutil::random_mask(9, 6, 0.4, rng);
  const auto path = temp_file("bin.pgm");
  write_pgm(path, m);
  EXPECT_EQ(read_pgm_mask(path), m);
  std::filesystem::remove(path);
}

TEST(Image, ReadRejectsWrongMagic) {
  const auto path = temp_file("wrong.ppm");
  write_pgm(path, BinaryMask::empty(2, 2));
  EXPECT_THROW(read_ppm(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Image, BinarizeIsStrictAndElementwise) {
  const MaskMap half{2, 2, {0.5, 0.5, 0.5, 0.5}};
  EXPECT_EQ(binarize(half).area(), 0u);
  const MaskMap high{2, 2, {0.9, 0.9, 0.9, 0.9}};
  EXPECT_EQ(binarize(high).area(), 4u);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  MaskMap r{6, 5, std::vector<double>(30)};
  for (double& v : r.values) v = u(rng);
  const BinaryMask b = binarize(r, 0.3);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(b.bits[i] != 0, r.values[i] > 0.3);
}

TEST(Image, ResizeBilinearPreservesConstantsAndIdentity) {
  std::mt19937_64 rng(4);
  const ImageBuffer img = quantized_image(6, 6, rng);
  EXPECT_EQ(resize_bilinear(img, 6, 6), img);
  const ImageBuffer flat = ImageBuffer::filled(3, 5, 0.25);
  for (double v : resize_bilinear(flat, 8, 4).values) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Image, ResizeBilinearUsesPixelCenters) {
  // 1x2 -> 1x4: centers at 0.25 and 0.75 of each source pixel.
  ImageBuffer img = ImageBuffer::filled(1, 2);
  for (std::size_t c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0.0;
    img.at(0, 1, c) = 1.0;
  }
  const ImageBuffer out = resize_bilinear(img, 1, 4);
  const double want[] = {0.0, 0.25, 0.75, 1.0};
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(out.at(0, x, 0), want[x], 1e-15);
}

TEST(Image, PatchifyLayout) {
  std::mt19937_64 rng(5);
  const ImageBuffer img = quantized_image(4, 6, rng);
  const nn::Tensor t = patchify(img, 2);
  ASSERT_EQ(t.shape(), (nn::Shape{6, 12}));
  // patch (1, 2): rows 2..3, cols 4..5
  const std::size_t row = 1 * 3 + 2;
  for (std::size_t dy = 0; dy < 2; ++dy)
    for (std::size_t dx = 0; dx < 2; ++dx)
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_EQ(t.at(row, (dy * 2 + dx) * 3 + c), img.at(2 + dy, 4 + dx, c));
  EXPECT_THROW(patchify(img, 4), nn::ShapeError);
}

TEST(Vocab, SpecialsComeFirstInFixedOrder) {
  const Vocab v = Vocab::standard();
  EXPECT_EQ(v.word(0), "<pad>");
  EXPECT_EQ(v.word(1), "<eos>");
  EXPECT_EQ(v.word(2), "<seg>");
  EXPECT_EQ(v.word(3), "<p>");
  EXPECT_EQ(v.word(4), "</p>");
  EXPECT_EQ(v.word(5), "<image_id>");
  EXPECT_EQ(v.specials().seg, v.id("<seg>"));
  EXPECT_TRUE(v.is_special(5));
  EXPECT_FALSE(v.is_special(6));
}

TEST(Vocab, LexiconsCoverAttributeWords) {
  const Vocab v = Vocab::standard();
  EXPECT_EQ(v.lexicon(AttributeClass::Category).size(), category_words().size());
  EXPECT_EQ(v.lexicon(AttributeClass::Color).size(), color_words().size());
  EXPECT_EQ(v.lexicon(AttributeClass::Location).size(), location_words().size());
  EXPECT_EQ(v.lexicon_of(v.id("red")), AttributeClass::Color);
  EXPECT_EQ(v.lexicon_of(v.id("left")), AttributeClass::Location);
  EXPECT_EQ(v.lexicon_of(v.id("the")), std::nullopt);
}

TEST(Vocab, EncodeDecodeAndErrors) {
  const Vocab v = Vocab::standard();
  const std::string text = "please segment the red square on the left";
  EXPECT_EQ(v.decode(v.encode(text)), text);
  EXPECT_THROW(v.encode("the zebra"), std::out_of_range);
  EXPECT_THROW(v.word(v.size()), std::out_of_range);
}

TEST(Vocab, FileRoundTrip) {
  const Vocab v = Vocab::standard();
  const auto path = temp_file("vocab.txt");
  v.save(path);
  EXPECT_EQ(Vocab::load(path), v);
  std::filesystem::remove(path);
}

TEST(Vocab, AttributeNames) {
  for (auto c : kAttributeClasses) EXPECT_EQ(parse_attribute(attribute_name(c)), c);
  EXPECT_THROW(parse_attribute("size"), std::invalid_argument);
}

}  // namespace
