#include "lira/attr_eval.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lira/logging.hpp"

namespace lira::attr {
namespace {

std::set<std::string> words_of(const std::string& s) {
  std::istringstream is(s);
  std::set<std::string> out;
  std::string w;
  while (is >> w) out.insert(w);
  return out;
}

bool mentions_class(const std::string& description, AttributeClass c, const Vocab& vocab) {
  const auto words = words_of(description);
  for (auto id : vocab.lexicon(c))
    if (words.count(vocab.word(id))) return true;
  return false;
}

}  // namespace

std::string make_question(AttributeClass c, const std::string& description,
                          const std::string& value) {
  std::string middle;
  switch (c) {
    case AttributeClass::Color:
      middle = "in " + value;
      break;
    case AttributeClass::Location:
      middle = "on the " + value;
      break;
    case AttributeClass::Category:
      middle = "a " + value;
      break;
  }
  return "is " + description + " " + middle + " ? please answer yes or no";
}

std::vector<AttrProbe> build_probes(std::span<const AttrRecord> records, const Vocab& vocab,
                                    std::uint64_t seed, std::vector<std::string>* warnings) {
  std::mt19937_64 rng(seed);
  std::vector<AttrProbe> out;
  for (const auto& rec : records) {
    if (rec.descriptions.empty())
      throw std::invalid_argument("attribute record " + rec.object_id + " has no descriptions");
    for (auto c : kAttributeClasses) {
      auto it = rec.attributes.find(c);
      if (it == rec.attributes.end()) continue;
      const auto& lex = vocab.lexicon(c);
      const std::string& truth = it->second;
      auto truth_id = vocab.find(truth);
      if (!truth_id || std::find(lex.begin(), lex.end(), *truth_id) == lex.end())
        throw std::invalid_argument("attribute value '" + truth + "' is not in the " +
                                    std::string(attribute_name(c)) + " lexicon");
      auto desc = std::find_if(rec.descriptions.begin(), rec.descriptions.end(),
                               [&](const std::string& d) { return !mentions_class(d, c, vocab); });
      if (desc == rec.descriptions.end()) continue;
      if (lex.size() < 2) {
        const std::string msg = "skipping " + std::string(attribute_name(c)) + " probe for " +
                                rec.object_id + ": lexicon has a single value";
        log(LogLevel::Warn, msg);
        if (warnings) warnings->push_back(msg);
        continue;
      }
      std::vector<TokenId> negatives;
      for (auto id : lex)
        if (id != *truth_id) negatives.push_back(id);
      const TokenId neg = negatives[rng() % negatives.size()];

      AttrProbe p;
      p.id = out.size();
      p.object_id = rec.object_id;
      p.image = rec.image;
      p.mask = rec.mask;
      p.description = *desc;
      p.attribute = c;
      p.true_value = truth;
      p.false_value = vocab.word(neg);
      p.positive_question = make_question(c, p.description, p.true_value);
      p.negative_question = make_question(c, p.description, p.false_value);
      out.push_back(std::move(p));
    }
  }
  return out;
}

double score_vqa(std::span<const AttrProbe> probes, const AnswerMap& answers) {
  if (probes.empty()) throw std::invalid_argument("score_vqa: no probes");
  std::size_t credit = 0;
  for (const auto& p : probes) {
    auto it = answers.find(p.id);
    if (it == answers.end())
      throw std::invalid_argument("score_vqa: missing answer for probe " + std::to_string(p.id));
    if (it->second.first == p.gt_positive && it->second.second == p.gt_negative) ++credit;
  }
  return static_cast<double>(credit) / static_cast<double>(probes.size());
}

LogitScores score_logits(std::span<const AttrProbe> probes,
                         const std::map<std::size_t, std::vector<double>>& seg_logits,
                         const Vocab& vocab) {
  if (probes.empty()) throw std::invalid_argument("score_logits: no probes");
  LogitScores s;
  std::size_t hit1 = 0, hit3 = 0;
  for (const auto& p : probes) {
    auto it = seg_logits.find(p.id);
    if (it == seg_logits.end())
      throw std::invalid_argument("score_logits: missing seg state for probe " +
                                  std::to_string(p.id));
    auto truth = vocab.find(p.true_value);
    if (!truth) throw std::invalid_argument("attribute token absent from vocab: " + p.true_value);
    const auto& lex = vocab.lexicon(p.attribute);
    const auto ranked = lm::top_k_attribute(it->second, lex, std::min<std::size_t>(3, lex.size()));
    if (ranked.front() == *truth) ++hit1;
    if (std::find(ranked.begin(), ranked.end(), *truth) != ranked.end()) ++hit3;
  }
  s.n = probes.size();
  s.acc1 = static_cast<double>(hit1) / static_cast<double>(s.n);
  s.acc3 = static_cast<double>(hit3) / static_cast<double>(s.n);
  return s;
}

LogitScores score_logits(std::span<const AttrProbe> probes,
                         const std::map<std::size_t, lm::SegState>& seg_states,
                         const Vocab& vocab) {
  std::map<std::size_t, std::vector<double>> raw;
  for (const auto& [id, s] : seg_states) raw.emplace(id, s.logits.value().storage());
  return score_logits(probes, raw, vocab);
}

std::string_view answer_name(Answer a) { return a == Answer::Yes ? "yes" : "no"; }

Answer parse_answer(std::string_view s) {
  if (s == "yes") return Answer::Yes;
  if (s == "no") return Answer::No;
  throw std::invalid_argument("answer must be yes or no, got " + std::string(s));
}

nlohmann::json to_json(const AttrRecord& r) {
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [c, v] : r.attributes) attrs[std::string(attribute_name(c))] = v;
  return {{"object_id", r.object_id},
          {"image", r.image},
          {"mask", r.mask},
          {"descriptions", r.descriptions},
          {"attributes", attrs}};
}

AttrRecord record_from_json(const nlohmann::json& j) {
  AttrRecord r;
  r.object_id = j.at("object_id").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.mask = j.at("mask").get<std::string>();
  r.descriptions = j.at("descriptions").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("attributes").items())
    r.attributes[parse_attribute(k)] = v.get<std::string>();
  return r;
}

nlohmann::json to_json(const AttrProbe& p) {
  return {{"id", p.id},
          {"object_id", p.object_id},
          {"image", p.image},
          {"mask", p.mask},
          {"description", p.description},
          {"attribute", std::string(attribute_name(p.attribute))},
          {"true_value", p.true_value},
          {"false_value", p.false_value},
          {"positive_question", p.positive_question},
          {"negative_question", p.negative_question},
          {"gt_positive", std::string(answer_name(p.gt_positive))},
          {"gt_negative", std::string(answer_name(p.gt_negative))}};
}

AttrProbe probe_from_json(const nlohmann::json& j) {
  AttrProbe p;
  p.id = j.at("id").get<std::size_t>();
  p.object_id = j.at("object_id").get<std::string>();
  p.image = j.at("image").get<std::string>();
  p.mask = j.at("mask").get<std::string>();
  p.description = j.at("description").get<std::string>();
  p.attribute = parse_attribute(j.at("attribute").get<std::string>());
  p.true_value = j.at("true_value").get<std::string>();
  p.false_value = j.at("false_value").get<std::string>();
  p.positive_question = j.at("positive_question").get<std::string>();
  p.negative_question = j.at("negative_question").get<std::string>();
  p.gt_positive = parse_answer(j.at("gt_positive").get<std::string>());
  p.gt_negative = parse_answer(j.at("gt_negative").get<std::string>());
  return p;
}

}  // namespace lira::attr
