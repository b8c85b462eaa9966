#pragma once
// Interleaved local visual coupling: mask-defined region crops and the
// sequence layout
//   global block, instruction, then per region i:
//   <seg>_i, <image_id>, local block i, <p>, description i, </p>
// closed by <eos>. Without the coupling the per-region part is
// <seg>_i, <p>, description i, </p>.

#include <functional>
#include <span>
#include <stdexcept>

#include "lira/config.hpp"
#include "lira/image.hpp"
#include "lira/param_store.hpp"
#include "lira/sequence.hpp"

namespace lira::ilvc {

class EmptyMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inclusive pixel bounds.
struct BoundingBox {
  std::size_t row_min = 0, col_min = 0, row_max = 0, col_max = 0;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct RegionCrop {
  BoundingBox box;
  ImageBuffer region;  // local_res x local_res
};

BoundingBox tight_bbox(const BinaryMask& mask);

// Tight box around the mask, background pixels kept, bilinearly resized.
RegionCrop crop_region(const ImageBuffer& img, const BinaryMask& mask, std::size_t local_res);

struct RegionAnnotation {
  BinaryMask mask;
  TokenSeq description;
};

// Produces the local feature block for region `index` (1-based) from its crop.
using LocalEncoder = std::function<FeatureGrid(std::size_t index, const ImageBuffer& crop)>;

InterleavedSequence build_training_sequence(const FeatureGrid& global, const TokenSeq& instruction,
                                            std::span<const RegionAnnotation> regions,
                                            const ImageBuffer& img, const LocalEncoder& encode,
                                            const ModelConfig& cfg, const SpecialTokens& sp,
                                            bool ilvc = true);

// Convenience overload encoding GT-mask crops with sefe::encode_local.
InterleavedSequence build_training_sequence(const FeatureGrid& global, const TokenSeq& instruction,
                                            std::span<const RegionAnnotation> regions,
                                            const ImageBuffer& img, nn::ParamBinding& p,
                                            const ModelConfig& cfg, const SpecialTokens& sp,
                                            bool ilvc = true);

InterleavedSequence build_inference_prefix(const FeatureGrid& global, const TokenSeq& instruction);

struct ParsedSequence {
  TokenSeq instruction;
  std::size_t region_count = 0;
  std::vector<TokenSeq> descriptions;
  bool ilvc = true;
  friend bool operator==(const ParsedSequence&, const ParsedSequence&) = default;
};

// Inverse of build_training_sequence; throws std::invalid_argument when the
// layout is malformed.
ParsedSequence parse_training_sequence(const InterleavedSequence& seq, const SpecialTokens& sp);

}  // namespace lira::ilvc
