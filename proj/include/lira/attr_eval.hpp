#pragma once
// Attribute probing: paired yes/no questions about attributes a referring
// description leaves out, scored with the both-correct rule, and top-k
// ranking of attribute tokens in the seg-token logits.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lira/language_model.hpp"
#include "lira/vocab.hpp"

namespace lira::attr {

struct AttrRecord {
  std::string object_id;
  std::string image;
  std::string mask;
  std::vector<std::string> descriptions;
  std::map<AttributeClass, std::string> attributes;
};

enum class Answer { Yes, No };

struct AttrProbe {
  std::size_t id = 0;
  std::string object_id;
  std::string image;
  std::string mask;
  std::string description;  // referring text without the probed attribute
  AttributeClass attribute = AttributeClass::Color;
  std::string true_value;
  std::string false_value;
  std::string positive_question;
  std::string negative_question;
  Answer gt_positive = Answer::Yes;
  Answer gt_negative = Answer::No;
};

// "is <description> in <color> ?" / "on the <location> ?" / "a <category> ?",
// each followed by "please answer yes or no".
std::string make_question(AttributeClass c, const std::string& description,
                          const std::string& value);

// One probe per (record, attribute class) whose lexicon is absent from at
// least one description; the first such description is used. Classes with a
// single-word lexicon are skipped and reported through `warnings`.
std::vector<AttrProbe> build_probes(std::span<const AttrRecord> records, const Vocab& vocab,
                                    std::uint64_t seed,
                                    std::vector<std::string>* warnings = nullptr);

using AnswerMap = std::map<std::size_t, std::pair<Answer, Answer>>;  // probe id -> (pos, neg)

// Fraction of probes with pos == yes and neg == no.
double score_vqa(std::span<const AttrProbe> probes, const AnswerMap& answers);

struct LogitScores {
  double acc1 = 0.0;
  double acc3 = 0.0;
  std::size_t n = 0;
};

LogitScores score_logits(std::span<const AttrProbe> probes,
                         const std::map<std::size_t, lm::SegState>& seg_states, const Vocab& vocab);
// Same, from raw seg-position logit vectors.
LogitScores score_logits(std::span<const AttrProbe> probes,
                         const std::map<std::size_t, std::vector<double>>& seg_logits,
                         const Vocab& vocab);

nlohmann::json to_json(const AttrRecord& r);
AttrRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttrProbe& p);
AttrProbe probe_from_json(const nlohmann::json& j);
std::string_view answer_name(Answer a);
Answer parse_answer(std::string_view s);

}  // namespace lira::attr
