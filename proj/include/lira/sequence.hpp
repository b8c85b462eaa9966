#pragma once
// Mixed text / feature / seg-slot sequence consumed by the language model.

#include <cstddef>
#include <variant>
#include <vector>

#include "lira/feature_grid.hpp"
#include "lira/vocab.hpp"

namespace lira {

enum class BlockSource { Global, Local };
enum class ElementKind { Text, Feature, Seg };

struct TextElement {
  TokenId id;
};

struct FeatureElement {
  FeatureGrid grid;
  BlockSource source = BlockSource::Global;
  std::size_t region = 0;  // 1-based region index for local blocks
};

struct SegElement {
  std::size_t index;  // 1-based
};

using SequenceElement = std::variant<TextElement, FeatureElement, SegElement>;

ElementKind kind_of(const SequenceElement& e);

// Text and seg elements occupy one position and are supervised; a feature
// block occupies one position per token and is never supervised.
class InterleavedSequence {
 public:
  void push_text(TokenId id);
  void push_text(const TokenSeq& ids);
  void push_block(FeatureGrid grid, BlockSource source, std::size_t region = 0);
  // Appends the next seg slot (indices count up from 1); returns its index.
  std::size_t push_seg();

  const std::vector<SequenceElement>& elements() const { return elements_; }
  std::size_t length() const { return length_; }
  bool empty() const { return elements_.empty(); }
  std::size_t seg_count() const { return seg_count_; }

  std::vector<bool> supervision() const;
  // Token id per position; feature rows carry the pad id.
  TokenSeq position_tokens(const SpecialTokens& sp) const;
  std::vector<std::size_t> seg_positions() const;
  // Kind per element, in order.
  std::vector<ElementKind> kinds() const;

 private:
  std::vector<SequenceElement> elements_;
  std::size_t length_ = 0;
  std::size_t seg_count_ = 0;
};

struct NextTokenTargets {
  TokenSeq targets;        // targets[t] = token at t + 1
  std::vector<bool> mask;  // mask[t] = position t + 1 is supervised
};

NextTokenTargets next_token_targets(const InterleavedSequence& seq, const SpecialTokens& sp);

}  // namespace lira
