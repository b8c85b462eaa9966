#include "lira/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lira {
namespace {

const std::array<std::string, 6> kSpecials = {"<pad>", "<eos>", "<seg>", "<p>", "</p>", "<image_id>"};

const std::vector<std::string> kPlainWords = {
    "the",    "please", "segment", "describe", "image", "and", "each", "object", "with",
    "local",  "regions", "answer", "question", "is",   "in",  "on",   "a",      "?",
    "yes",    "no",     "or"};

}  // namespace

const std::vector<std::string>& category_words() {
  static const std::vector<std::string> w = {"square", "circle", "triangle"};
  return w;
}

const std::vector<std::string>& color_words() {
  static const std::vector<std::string> w = {"red",    "green", "blue", "yellow",
                                             "purple", "cyan",  "white"};
  return w;
}

const std::vector<std::string>& location_words() {
  static const std::vector<std::string> w = {"left", "right", "top", "bottom", "center"};
  return w;
}

std::string_view attribute_name(AttributeClass c) {
  switch (c) {
    case AttributeClass::Category:
      return "category";
    case AttributeClass::Color:
      return "color";
    case AttributeClass::Location:
      return "location";
  }
  return "?";
}

AttributeClass parse_attribute(std::string_view name) {
  for (auto c : kAttributeClasses)
    if (attribute_name(c) == name) return c;
  throw std::invalid_argument("unknown attribute class: " + std::string(name));
}

void Vocab::add(const std::string& word) {
  if (!index_.emplace(word, words_.size()).second)
    throw std::invalid_argument("duplicate vocabulary entry: " + word);
  words_.push_back(word);
}

Vocab Vocab::standard() {
  Vocab v;
  for (const auto& s : kSpecials) v.add(s);
  auto lex = [&](AttributeClass c, const std::vector<std::string>& words) {
    for (const auto& w : words) {
      v.lexicons_[c].push_back(v.words_.size());
      v.add(w);
    }
  };
  lex(AttributeClass::Category, category_words());
  lex(AttributeClass::Color, color_words());
  lex(AttributeClass::Location, location_words());
  for (const auto& w : kPlainWords) v.add(w);
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write vocabulary " + path.string());
  os << "[special]\n";
  for (std::size_t i = 0; i < kSpecials.size(); ++i) os << words_[i] << "\n";
  for (auto c : kAttributeClasses) {
    os << "[" << attribute_name(c) << "]\n";
    auto it = lexicons_.find(c);
    if (it != lexicons_.end())
      for (auto id : it->second) os << words_[id] << "\n";
  }
  os << "[word]\n";
  for (std::size_t i = kSpecials.size(); i < words_.size(); ++i) {
    auto lc = lexicon_of(i);
    if (!lc) os << words_[i] << "\n";
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open vocabulary " + path.string());
  Vocab v;
  std::string line, section;
  std::size_t specials_seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    if (section == "special") {
      if (specials_seen >= kSpecials.size() || line != kSpecials[specials_seen])
        throw std::runtime_error("vocabulary special block must list " +
                                 std::string("<pad> <eos> <seg> <p> </p> <image_id> in order"));
      ++specials_seen;
      v.add(line);
    } else if (section == "word") {
      v.add(line);
    } else if (!section.empty()) {
      const AttributeClass c = parse_attribute(section);
      v.lexicons_[c].push_back(v.words_.size());
      v.add(line);
    } else {
      throw std::runtime_error("vocabulary entry before any section header: " + line);
    }
    if (section != "special" && specials_seen != kSpecials.size())
      throw std::runtime_error("vocabulary must start with the [special] block");
  }
  if (specials_seen != kSpecials.size()) throw std::runtime_error("vocabulary missing specials");
  return v;
}

TokenId Vocab::id(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw std::out_of_range("word not in vocabulary: " + std::string(word));
  return it->second;
}

std::optional<TokenId> Vocab::find(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::word(TokenId id) const {
  if (id >= words_.size()) throw std::out_of_range("token id out of range: " + std::to_string(id));
  return words_[id];
}

TokenSeq Vocab::encode(std::string_view text) const {
  TokenSeq out;
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) out.push_back(id(w));
  return out;
}

std::string Vocab::decode(const TokenSeq& tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += word(tokens[i]);
  }
  return out;
}

const std::vector<TokenId>& Vocab::lexicon(AttributeClass c) const {
  static const std::vector<TokenId> none;
  auto it = lexicons_.find(c);
  return it == lexicons_.end() ? none : it->second;
}

std::optional<AttributeClass> Vocab::lexicon_of(TokenId id) const {
  for (const auto& [c, ids] : lexicons_)
    for (auto x : ids)
      if (x == id) return c;
  return std::nullopt;
}

}  // namespace lira
