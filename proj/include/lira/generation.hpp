#pragma once
// Token-driven generation loop with event handling for <seg>, <image_id> and
// <eos>, plus the prompt templates that switch region coupling on or off.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lira/image.hpp"
#include "lira/sequence.hpp"
#include "lira/vocab.hpp"

namespace lira::gen {

enum class Task { RefSeg, Gcg, Vqa };
Task parse_task(std::string_view name);
std::string_view task_name(Task t);

// Task prefix followed, when coupling is on, by the fixed control suffix
// "with local regions".
TokenSeq prompt_template(Task task, bool ilvc, const Vocab& vocab);
// prefix + query + optional suffix
TokenSeq compose_instruction(Task task, bool ilvc, const TokenSeq& query, const Vocab& vocab);

enum class EventKind { Seg, Crop, Text, Eos, Error };
std::string_view event_name(EventKind k);

struct TraceEvent {
  std::size_t step = 0;
  EventKind kind = EventKind::Text;
  TokenId token = 0;
  std::size_t mask_index = 0;  // Seg: index into masks; Crop: mask used
  std::string message;         // Error only
  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct GenerationResult {
  std::vector<MaskMap> masks;
  TokenSeq output_tokens;  // every emitted token except <eos>
  std::vector<TraceEvent> trace;
  bool truncated = false;
  bool protocol_error = false;
  std::vector<std::vector<double>> step_logits;  // filled when requested
  InterleavedSequence sequence;                  // final S
};

// What the loop needs from a model. Implementations may cache the last
// forward pass; within one episode the sequence only grows.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Runs the feature extractor once and returns {global block, instruction}.
  virtual InterleavedSequence begin(const ImageBuffer& img, const TokenSeq& instruction) = 0;
  virtual std::vector<double> next_logits(const InterleavedSequence& seq) = 0;
  // Mask for the seg slot that is the last element of seq.
  virtual MaskMap decode_last_seg(const InterleavedSequence& seq) = 0;
  virtual FeatureGrid encode_region(const ImageBuffer& crop) = 0;
  virtual const SpecialTokens& specials() const = 0;
  virtual std::size_t local_res() const = 0;
  virtual std::size_t local_tokens() const = 0;
  virtual std::size_t max_length() const = 0;
};

struct GenerateOptions {
  bool ilvc_enabled = true;
  std::size_t max_steps = 256;
  double threshold = 0.5;
  bool record_logits = false;
  // Applied to each region crop before encoding (used to probe the coupling).
  std::function<void(ImageBuffer&)> crop_hook;
};

GenerationResult generate(GenerationBackend& backend, const ImageBuffer& img,
                          const TokenSeq& instruction, const GenerateOptions& opts);

}  // namespace lira::gen
