#include "lira/conformance.hpp"

#include <algorithm>

namespace lira::conformance {

InterleavedSequence ScriptedBackend::begin(const ImageBuffer&, const TokenSeq& instruction) {
  cursor_ = 0;
  crops_ = 0;
  InterleavedSequence seq;
  seq.push_block(FeatureGrid{nn::Var::constant(nn::Tensor({script_.global_tokens, 4}))},
                 BlockSource::Global);
  seq.push_text(instruction);
  return seq;
}

std::vector<double> ScriptedBackend::next_logits(const InterleavedSequence&) {
  const TokenId tok = cursor_ < script_.tokens.size() ? script_.tokens[cursor_] : sp_.eos;
  ++cursor_;
  std::vector<double> logits(script_.vocab_size, 0.0);
  logits.at(tok) = 1.0;
  return logits;
}

MaskMap ScriptedBackend::decode_last_seg(const InterleavedSequence& seq) {
  const std::size_t k = seq.seg_count() - 1;
  const bool empty = k < script_.empty_masks.size() && script_.empty_masks[k];
  const std::size_t n = script_.image_side;
  MaskMap m{n, n, std::vector<double>(n * n, 0.0)};
  if (!empty)
    for (std::size_t y = n / 4; y < n / 2; ++y)
      for (std::size_t x = n / 4; x < n / 2; ++x) m.values[y * n + x] = 0.9;
  return m;
}

FeatureGrid ScriptedBackend::encode_region(const ImageBuffer&) {
  ++crops_;
  return FeatureGrid{nn::Var::constant(nn::Tensor({script_.local_tokens, 4}))};
}

ReferenceResult interpret(const Script& script, const SpecialTokens& sp, bool ilvc_enabled,
                          std::size_t max_steps) {
  ReferenceResult r;
  std::size_t length = script.global_tokens + script.instruction_length;
  std::size_t segs = 0;
  int current = -1;  // -1: no mask yet, 0: last mask empty, 1: last mask non-empty
  std::size_t step = 0;
  for (; step < max_steps; ++step) {
    const TokenId tok = step < script.tokens.size() ? script.tokens[step] : sp.eos;
    using gen::EventKind;
    if (tok == sp.eos) {
      r.trace.push_back({step, EventKind::Eos, tok, 0, ""});
      r.mask_count = segs;
      return r;
    }
    if (tok == sp.image_id && ilvc_enabled) {
      if (length + 1 + script.local_tokens > script.max_length) break;
      if (current == -1 || current == 0) {
        r.trace.push_back(
            {step, EventKind::Error, tok, segs, current == -1 ? "crop requested before any seg mask" : "empty decoded mask"});
        r.protocol_error = true;
        r.mask_count = segs;
        return r;
      }
      length += 1 + script.local_tokens;
      r.trace.push_back({step, EventKind::Crop, tok, segs - 1, ""});
      r.output_tokens.push_back(tok);
      continue;
    }
    if (length + 1 > script.max_length) break;
    length += 1;
    r.output_tokens.push_back(tok);
    if (tok == sp.seg) {
      const bool empty = segs < script.empty_masks.size() && script.empty_masks[segs];
      current = empty ? 0 : 1;
      r.trace.push_back({step, EventKind::Seg, tok, segs, ""});
      ++segs;
    } else {
      r.trace.push_back({step, EventKind::Text, tok, 0, ""});
    }
  }
  r.mask_count = segs;
  r.truncated = true;
  return r;
}

Script random_script(std::mt19937_64& rng, const SpecialTokens& sp) {
  Script s;
  const std::size_t n = 1 + rng() % 24;
  const TokenId plain[] = {sp.p_open, sp.p_close, 6, 7, 9, 12, 20};
  for (std::size_t i = 0; i < n; ++i) {
    switch (rng() % 8) {
      case 0:
      case 1:
        s.tokens.push_back(sp.seg);
        break;
      case 2:
      case 3:
        s.tokens.push_back(sp.image_id);
        break;
      case 4:
        if (rng() % 3 == 0) s.tokens.push_back(sp.eos);
        break;
      default:
        s.tokens.push_back(plain[rng() % std::size(plain)]);
    }
  }
  for (std::size_t i = 0; i < 8; ++i) s.empty_masks.push_back(rng() % 6 == 0);
  if (rng() % 4 == 0) s.max_length = s.global_tokens + s.instruction_length + 2 + rng() % 12;
  return s;
}

std::vector<Scenario> standard_scenarios(std::uint64_t seed, std::size_t n_random,
                                         const SpecialTokens& sp) {
  std::vector<Scenario> out;
  auto add = [&](std::string name, TokenSeq tokens, std::vector<bool> empty = {},
                 std::size_t max_steps = 64) {
    Script s;
    s.tokens = std::move(tokens);
    s.empty_masks = std::move(empty);
    for (bool on : {true, false})
      out.push_back({name + (on ? "/ilvc" : "/plain"), s, on, max_steps});
  };
  add("seg-crop-text", {sp.seg, sp.image_id, 6, 7, sp.eos});
  add("crop-before-seg", {sp.image_id, 6, sp.eos});
  add("eos-only", {sp.eos});
  add("crop-on-empty-mask", {sp.seg, sp.image_id, 6, sp.eos}, {true});
  add("two-regions", {sp.seg, sp.image_id, sp.p_open, 6, sp.p_close, sp.seg, sp.image_id,
                      sp.p_open, 7, sp.p_close, sp.eos});
  add("no-eos", {sp.seg, 6, 7, 8}, {}, 6);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_random; ++i) {
    Script s = random_script(rng, sp);
    const std::size_t steps = 1 + rng() % 40;
    for (bool on : {true, false})
      out.push_back({"random-" + std::to_string(i) + (on ? "/ilvc" : "/plain"), s, on, steps});
  }
  return out;
}

ScenarioOutcome run_scenario(const Scenario& sc, const SpecialTokens& sp) {
  ScriptedBackend backend(sc.script, sp);
  const ImageBuffer img = ImageBuffer::filled(sc.script.image_side, sc.script.image_side, 0.5);
  const TokenSeq instruction(sc.script.instruction_length, 6);
  gen::GenerateOptions opts;
  opts.ilvc_enabled = sc.ilvc_enabled;
  opts.max_steps = sc.max_steps;
  const gen::GenerationResult got = gen::generate(backend, img, instruction, opts);
  const ReferenceResult want = interpret(sc.script, sp, sc.ilvc_enabled, sc.max_steps);

  ScenarioOutcome o;
  o.name = sc.name;
  o.events = want.trace.size();
  o.protocol_error = want.protocol_error;
  o.agree = got.trace == want.trace && got.output_tokens == want.output_tokens &&
            got.truncated == want.truncated && got.protocol_error == want.protocol_error &&
            got.masks.size() == want.mask_count;
  if (!sc.ilvc_enabled) {
    const bool any_crop = std::any_of(got.trace.begin(), got.trace.end(), [](const auto& e) {
      return e.kind == gen::EventKind::Crop;
    });
    o.no_crop_guarantee = !any_crop && backend.crops_encoded() == 0;
  }
  return o;
}

}  // namespace lira::conformance
