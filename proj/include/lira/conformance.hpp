#pragma once
// Scripted generation backend and a standalone reference interpreter of the
// generation protocol. The interpreter walks a token stream directly and
// shares no code with gen::generate, so agreement between the two traces is
// evidence that the loop follows the protocol.

#include <cstdint>
#include <random>
#include <vector>

#include "lira/generation.hpp"

namespace lira::conformance {

struct Script {
  TokenSeq tokens;                 // emitted in order, then <eos> forever
  std::vector<bool> empty_masks;   // per seg event; missing entries are non-empty
  std::size_t image_side = 16;
  std::size_t instruction_length = 3;
  std::size_t global_tokens = 8;
  std::size_t local_tokens = 4;
  std::size_t max_length = 256;
  std::size_t vocab_size = 32;
};

class ScriptedBackend final : public gen::GenerationBackend {
 public:
  ScriptedBackend(Script script, SpecialTokens sp) : script_(std::move(script)), sp_(sp) {}

  InterleavedSequence begin(const ImageBuffer& img, const TokenSeq& instruction) override;
  std::vector<double> next_logits(const InterleavedSequence& seq) override;
  MaskMap decode_last_seg(const InterleavedSequence& seq) override;
  FeatureGrid encode_region(const ImageBuffer& crop) override;
  const SpecialTokens& specials() const override { return sp_; }
  std::size_t local_res() const override { return 8; }
  std::size_t local_tokens() const override { return script_.local_tokens; }
  std::size_t max_length() const override { return script_.max_length; }

  std::size_t crops_encoded() const { return crops_; }

 private:
  Script script_;
  SpecialTokens sp_;
  std::size_t cursor_ = 0;
  std::size_t crops_ = 0;
};

struct ReferenceResult {
  std::vector<gen::TraceEvent> trace;
  std::size_t mask_count = 0;
  TokenSeq output_tokens;
  bool truncated = false;
  bool protocol_error = false;
};

ReferenceResult interpret(const Script& script, const SpecialTokens& sp, bool ilvc_enabled,
                          std::size_t max_steps);

// Random token streams over {<seg>, <image_id>, <eos>, <p>, </p>, plain words}
// with occasional empty masks and tight budgets.
Script random_script(std::mt19937_64& rng, const SpecialTokens& sp);

// The named scenarios plus `n_random` random streams, each run with the
// coupling on and off.
struct Scenario {
  std::string name;
  Script script;
  bool ilvc_enabled = true;
  std::size_t max_steps = 64;
};
std::vector<Scenario> standard_scenarios(std::uint64_t seed, std::size_t n_random,
                                         const SpecialTokens& sp);

struct ScenarioOutcome {
  std::string name;
  bool agree = false;
  bool no_crop_guarantee = true;  // ilvc off -> no crop events and no crops encoded
  std::size_t events = 0;
  bool protocol_error = false;
};

ScenarioOutcome run_scenario(const Scenario& sc, const SpecialTokens& sp);

}  // namespace lira::conformance
