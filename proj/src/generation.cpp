#include "lira/generation.hpp"

#include <optional>
#include <stdexcept>

#include "lira/ilvc.hpp"
#include "lira/language_model.hpp"

namespace lira::gen {
namespace {

constexpr std::string_view kIlvcSuffix = "with local regions";

std::string_view task_prefix(Task t) {
  switch (t) {
    case Task::RefSeg:
      return "please segment";
    case Task::Gcg:
      return "please describe the image and segment each object";
    case Task::Vqa:
      return "please answer the question";
  }
  throw std::invalid_argument("unknown task");
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "refseg") return Task::RefSeg;
  if (name == "gcg") return Task::Gcg;
  if (name == "vqa") return Task::Vqa;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::RefSeg:
      return "refseg";
    case Task::Gcg:
      return "gcg";
    case Task::Vqa:
      return "vqa";
  }
  return "?";
}

TokenSeq prompt_template(Task task, bool ilvc, const Vocab& vocab) {
  return compose_instruction(task, ilvc, {}, vocab);
}

TokenSeq compose_instruction(Task task, bool ilvc, const TokenSeq& query, const Vocab& vocab) {
  TokenSeq out = vocab.encode(task_prefix(task));
  out.insert(out.end(), query.begin(), query.end());
  if (ilvc) {
    const TokenSeq suffix = vocab.encode(kIlvcSuffix);
    out.insert(out.end(), suffix.begin(), suffix.end());
  }
  return out;
}

std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::Seg:
      return "SEG";
    case EventKind::Crop:
      return "CROP";
    case EventKind::Text:
      return "TEXT";
    case EventKind::Eos:
      return "EOS";
    case EventKind::Error:
      return "ERROR";
  }
  return "?";
}

GenerationResult generate(GenerationBackend& backend, const ImageBuffer& img,
                          const TokenSeq& instruction, const GenerateOptions& opts) {
  if (opts.max_steps < 1) throw std::invalid_argument("generate: max_steps must be >= 1");
  const SpecialTokens& sp = backend.specials();
  GenerationResult res;
  InterleavedSequence seq = backend.begin(img, instruction);
  std::optional<BinaryMask> current;  // M_current
  bool finished = false;

  auto fail = [&](std::size_t step, TokenId tok, std::string msg) {
    res.trace.push_back({step, EventKind::Error, tok, res.masks.size(), std::move(msg)});
    res.protocol_error = true;
  };

  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    std::vector<double> logits = backend.next_logits(seq);
    const TokenId tok = lm::argmax(logits);
    if (opts.record_logits) res.step_logits.push_back(std::move(logits));

    if (tok == sp.eos) {
      res.trace.push_back({step, EventKind::Eos, tok, 0, {}});
      finished = true;
      break;
    }
    const bool crop = tok == sp.image_id && opts.ilvc_enabled;
    const std::size_t needed = crop ? 1 + backend.local_tokens() : 1;
    if (seq.length() + needed > backend.max_length()) break;

    if (tok == sp.seg) {
      seq.push_seg();
      res.masks.push_back(backend.decode_last_seg(seq));
      current = binarize(res.masks.back(), opts.threshold);
      res.trace.push_back({step, EventKind::Seg, tok, res.masks.size() - 1, {}});
      res.output_tokens.push_back(tok);
    } else if (crop) {
      if (!current) {
        fail(step, tok, "crop requested before any seg mask");
        break;
      }
      if (current->area() == 0) {
        fail(step, tok, "empty decoded mask");
        break;
      }
      ilvc::RegionCrop rc = ilvc::crop_region(img, *current, backend.local_res());
      if (opts.crop_hook) opts.crop_hook(rc.region);
      FeatureGrid local = backend.encode_region(rc.region);
      seq.push_text(tok);
      seq.push_block(std::move(local), BlockSource::Local, seq.seg_count());
      res.trace.push_back({step, EventKind::Crop, tok, res.masks.size() - 1, {}});
      res.output_tokens.push_back(tok);
    } else {
      seq.push_text(tok);
      res.trace.push_back({step, EventKind::Text, tok, 0, {}});
      res.output_tokens.push_back(tok);
    }
  }
  res.truncated = !finished && !res.protocol_error;
  res.sequence = std::move(seq);
  return res;
}

}  // namespace lira::gen
