#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lira {

using TokenId = std::size_t;
using TokenSeq = std::vector<TokenId>;

enum class AttributeClass { Category, Color, Location };
inline constexpr std::array kAttributeClasses = {AttributeClass::Category, AttributeClass::Color,
                                                 AttributeClass::Location};
std::string_view attribute_name(AttributeClass c);
AttributeClass parse_attribute(std::string_view name);

struct SpecialTokens {
  TokenId pad = 0;
  TokenId eos = 1;
  TokenId seg = 2;
  TokenId p_open = 3;
  TokenId p_close = 4;
  TokenId image_id = 5;
};

// Closed word-level vocabulary. Ids follow file order: the six special tokens
// first, then the attribute lexicons, then ordinary words.
//
// File layout (one token per line, section headers in brackets):
//   [special]   <pad> <eos> <seg> <p> </p> <image_id>   (fixed order)
//   [category] / [color] / [location]                    lexicon words
//   [word]                                               everything else
class Vocab {
 public:
  static Vocab standard();
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return words_.size(); }
  const SpecialTokens& specials() const { return specials_; }
  bool is_special(TokenId id) const { return id < 6; }

  TokenId id(std::string_view word) const;  // throws std::out_of_range
  std::optional<TokenId> find(std::string_view word) const;
  const std::string& word(TokenId id) const;

  TokenSeq encode(std::string_view text) const;  // whitespace split
  std::string decode(const TokenSeq& tokens) const;

  const std::vector<TokenId>& lexicon(AttributeClass c) const;
  std::optional<AttributeClass> lexicon_of(TokenId id) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.words_ == b.words_ && a.lexicons_ == b.lexicons_;
  }

 private:
  void add(const std::string& word);
  std::vector<std::string> words_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::map<AttributeClass, std::vector<TokenId>> lexicons_;
  SpecialTokens specials_;
};

// Word lists behind Vocab::standard(); the scene generator draws from these.
const std::vector<std::string>& category_words();
const std::vector<std::string>& color_words();
const std::vector<std::string>& location_words();

}  // namespace lira
