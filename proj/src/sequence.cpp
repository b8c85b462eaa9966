#include "lira/sequence.hpp"

namespace lira {

ElementKind kind_of(const SequenceElement& e) {
  if (std::holds_alternative<TextElement>(e)) return ElementKind::Text;
  if (std::holds_alternative<FeatureElement>(e)) return ElementKind::Feature;
  return ElementKind::Seg;
}

void InterleavedSequence::push_text(TokenId id) {
  elements_.emplace_back(TextElement{id});
  ++length_;
}

void InterleavedSequence::push_text(const TokenSeq& ids) {
  for (auto id : ids) push_text(id);
}

void InterleavedSequence::push_block(FeatureGrid grid, BlockSource source, std::size_t region) {
  length_ += grid.tokens();
  elements_.emplace_back(FeatureElement{std::move(grid), source, region});
}

std::size_t InterleavedSequence::push_seg() {
  elements_.emplace_back(SegElement{++seg_count_});
  ++length_;
  return seg_count_;
}

std::vector<bool> InterleavedSequence::supervision() const {
  std::vector<bool> out;
  out.reserve(length_);
  for (const auto& e : elements_) {
    if (const auto* f = std::get_if<FeatureElement>(&e))
      out.insert(out.end(), f->grid.tokens(), false);
    else
      out.push_back(true);
  }
  return out;
}

TokenSeq InterleavedSequence::position_tokens(const SpecialTokens& sp) const {
  TokenSeq out;
  out.reserve(length_);
  for (const auto& e : elements_) {
    if (const auto* t = std::get_if<TextElement>(&e))
      out.push_back(t->id);
    else if (const auto* f = std::get_if<FeatureElement>(&e))
      out.insert(out.end(), f->grid.tokens(), sp.pad);
    else
      out.push_back(sp.seg);
  }
  return out;
}

std::vector<std::size_t> InterleavedSequence::seg_positions() const {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  for (const auto& e : elements_) {
    if (const auto* f = std::get_if<FeatureElement>(&e)) {
      pos += f->grid.tokens();
      continue;
    }
    if (std::holds_alternative<SegElement>(e)) out.push_back(pos);
    ++pos;
  }
  return out;
}

std::vector<ElementKind> InterleavedSequence::kinds() const {
  std::vector<ElementKind> out;
  for (const auto& e : elements_) out.push_back(kind_of(e));
  return out;
}

NextTokenTargets next_token_targets(const InterleavedSequence& seq, const SpecialTokens& sp) {
  const auto tokens = seq.position_tokens(sp);
  const auto sup = seq.supervision();
  NextTokenTargets out;
  out.targets.assign(tokens.size(), sp.pad);
  out.mask.assign(tokens.size(), false);
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    out.targets[t] = tokens[t + 1];
    out.mask[t] = sup[t + 1];
  }
  return out;
}

}  // namespace lira
