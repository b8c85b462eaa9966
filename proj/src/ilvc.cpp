#include "lira/ilvc.hpp"

#include <algorithm>

#include "lira/sefe.hpp"

namespace lira::ilvc {

BoundingBox tight_bbox(const BinaryMask& mask) {
  BoundingBox box{mask.height, mask.width, 0, 0};
  bool any = false;
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.at(y, x)) continue;
      any = true;
      box.row_min = std::min(box.row_min, y);
      box.col_min = std::min(box.col_min, x);
      box.row_max = std::max(box.row_max, y);
      box.col_max = std::max(box.col_max, x);
    }
  if (!any) throw EmptyMaskError("crop_region: mask is empty");
  return box;
}

RegionCrop crop_region(const ImageBuffer& img, const BinaryMask& mask, std::size_t local_res) {
  if (mask.height != img.height || mask.width != img.width)
    throw nn::ShapeError("crop_region: mask " + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " vs image " + std::to_string(img.height) +
                         "x" + std::to_string(img.width));
  const BoundingBox box = tight_bbox(mask);
  const std::size_t h = box.row_max - box.row_min + 1, w = box.col_max - box.col_min + 1;
  ImageBuffer sub = ImageBuffer::filled(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) sub.at(y, x, c) = img.at(box.row_min + y, box.col_min + x, c);
  return RegionCrop{box, resize_bilinear(sub, local_res, local_res)};
}

InterleavedSequence build_training_sequence(const FeatureGrid& global, const TokenSeq& instruction,
                                            std::span<const RegionAnnotation> regions,
                                            const ImageBuffer& img, const LocalEncoder& encode,
                                            const ModelConfig& cfg, const SpecialTokens& sp,
                                            bool ilvc) {
  InterleavedSequence seq;
  seq.push_block(global, BlockSource::Global);
  seq.push_text(instruction);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& r = regions[i];
    if (r.description.empty())
      throw std::invalid_argument("region " + std::to_string(i + 1) + " has an empty description");
    const std::size_t index = seq.push_seg();
    if (ilvc) {
      if (r.mask.area() == 0)
        throw EmptyMaskError("region " + std::to_string(index) + " has an empty GT mask");
      const RegionCrop crop = crop_region(img, r.mask, cfg.local_res);
      seq.push_text(sp.image_id);
      seq.push_block(encode(index, crop.region), BlockSource::Local, index);
    }
    seq.push_text(sp.p_open);
    seq.push_text(r.description);
    seq.push_text(sp.p_close);
  }
  seq.push_text(sp.eos);
  return seq;
}

InterleavedSequence build_training_sequence(const FeatureGrid& global, const TokenSeq& instruction,
                                            std::span<const RegionAnnotation> regions,
                                            const ImageBuffer& img, nn::ParamBinding& p,
                                            const ModelConfig& cfg, const SpecialTokens& sp,
                                            bool ilvc) {
  return build_training_sequence(
      global, instruction, regions, img,
      [&](std::size_t, const ImageBuffer& crop) { return sefe::encode_local(crop, p, cfg); }, cfg,
      sp, ilvc);
}

InterleavedSequence build_inference_prefix(const FeatureGrid& global, const TokenSeq& instruction) {
  InterleavedSequence seq;
  seq.push_block(global, BlockSource::Global);
  seq.push_text(instruction);
  return seq;
}

ParsedSequence parse_training_sequence(const InterleavedSequence& seq, const SpecialTokens& sp) {
  const auto& el = seq.elements();
  auto bad = [](const std::string& m) { throw std::invalid_argument("malformed sequence: " + m); };
  auto text_at = [&](std::size_t i) -> std::optional<TokenId> {
    if (i >= el.size()) return std::nullopt;
    if (const auto* t = std::get_if<TextElement>(&el[i])) return t->id;
    return std::nullopt;
  };

  ParsedSequence out;
  std::size_t i = 0;
  if (el.empty() || kind_of(el[0]) != ElementKind::Feature ||
      std::get<FeatureElement>(el[0]).source != BlockSource::Global)
    bad("must start with the global feature block");
  ++i;
  while (i < el.size() && kind_of(el[i]) == ElementKind::Text) {
    const TokenId t = *text_at(i);
    if (t == sp.eos) break;
    out.instruction.push_back(t);
    ++i;
  }
  bool layout_known = false;
  while (i < el.size() && kind_of(el[i]) == ElementKind::Seg) {
    const auto& s = std::get<SegElement>(el[i]);
    if (s.index != out.region_count + 1) bad("seg indices must count up from 1");
    ++out.region_count;
    ++i;
    const bool has_local = text_at(i) == sp.image_id;
    if (layout_known && has_local != out.ilvc) bad("mixed coupled and uncoupled regions");
    out.ilvc = has_local;
    layout_known = true;
    if (has_local) {
      ++i;
      if (i >= el.size() || kind_of(el[i]) != ElementKind::Feature) bad("missing local block");
      const auto& f = std::get<FeatureElement>(el[i]);
      if (f.source != BlockSource::Local || f.region != out.region_count)
        bad("local block region index mismatch");
      ++i;
    }
    if (text_at(i) != sp.p_open) bad("expected <p>");
    ++i;
    TokenSeq desc;
    while (true) {
      auto t = text_at(i);
      if (!t) bad("unterminated description");
      ++i;
      if (*t == sp.p_close) break;
      desc.push_back(*t);
    }
    out.descriptions.push_back(std::move(desc));
  }
  if (text_at(i) != sp.eos || i + 1 != el.size()) bad("must end with a single <eos>");
  return out;
}

}  // namespace lira::ilvc
