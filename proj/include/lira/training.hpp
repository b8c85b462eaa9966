#pragma once
// Run configuration, the two-stage training loop and the evaluation tasks.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lira/attr_eval.hpp"
#include "lira/config.hpp"
#include "lira/grad_check.hpp"
#include "lira/losses.hpp"
#include "lira/metrics.hpp"
#include "lira/model.hpp"

namespace lira::train {

struct RunConfig {
  ModelConfig model;
  losses::LossConfig loss;
  int stage = 1;
  bool train_encoders = false;  // stage 2 also updates both encoders
  std::uint64_t seed = 0;

  std::string data_dir = "data";
  std::string train_split = "train";
  std::string eval_split = "eval";
  std::size_t train_limit = 0;  // 0: all samples
  std::size_t eval_limit = 0;
  bool ilvc_enabled = true;

  std::string optimizer = "adam";  // adam | sgd
  double lr = 2e-3;
  std::string lr_schedule = "cosine";  // constant | cosine
  std::size_t warmup = 0;
  std::size_t steps = 200;
  std::size_t batch_size = 1;
  double clip_norm = 1.0;  // <= 0 disables clipping

  std::string init_checkpoint;  // empty: fresh initialization from seed
  std::string checkpoint = "run/model.ckpt";
  std::string log = "run/train.jsonl";
  std::string report = "run/report.json";
  std::string trace;  // optional JSON-lines generation trace

  std::size_t max_steps = 256;  // generation budget
  double threshold = 0.5;
  std::size_t eval_threads = 1;
  std::size_t conformance_streams = 60;
  std::size_t gradcheck_configs = 20;
  std::size_t gradcheck_probes = 32;  // per tensor; 0 probes every entry

  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

struct StepRecord {
  std::size_t step = 0;
  losses::LossReport loss;
  double lr = 0.0;
  double grad_norm = 0.0;
};
nlohmann::json to_json(const StepRecord& r);

struct TrainResult {
  std::vector<StepRecord> log;
  std::size_t trainable_scalars = 0;
  double seconds = 0.0;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Loads or creates the model, applies the stage's trainable set, runs
// cfg.steps optimizer steps and writes the checkpoint and the JSON-lines log.
// Throws std::runtime_error naming the step when the loss goes non-finite.
TrainResult train(const RunConfig& cfg, const StepCallback& on_step = {});

// Same, on an in-memory model and sample list (nothing written).
TrainResult train_model(LiraModel& model, const std::vector<data::Sample>& samples,
                        const RunConfig& cfg, const StepCallback& on_step = {});

enum class EvalTask { RefSeg, Attr, GradCheck, Conformance };
EvalTask parse_eval_task(std::string_view name);
std::string_view eval_task_name(EvalTask t);

struct EvalOutcome {
  nlohmann::json report;
  bool ok = true;  // false on protocol errors or failed checks
};

// Runs one task and writes cfg.report.
EvalOutcome evaluate(const RunConfig& cfg, EvalTask task);

// Task bodies, usable without touching the filesystem.
struct RefSegEval {
  metrics::MetricReport metrics;
  double desc_token_accuracy = 0.0;
  std::size_t desc_tokens = 0;
  std::size_t protocol_errors = 0;
  std::size_t truncated = 0;
  nlohmann::json traces = nlohmann::json::array();
};
RefSegEval evaluate_refseg(const LiraModel& model, const std::vector<data::Sample>& samples,
                           const RunConfig& cfg);

// Teacher-forced accuracy on tokens inside <p> ... </p>, closing tag included.
std::pair<std::size_t, std::size_t> description_token_hits(const LiraModel& model,
                                                           const data::Sample& s);

struct AttrScore {
  double vqa_acc = 0.0;
  attr::LogitScores logits;
  attr::AnswerMap answers;
};
// VQA answers compare the "yes" and "no" logits after the question; seg
// logits come from a <seg> slot appended to the referring instruction.
AttrScore score_probes(const LiraModel& model, const std::vector<attr::AttrProbe>& probes,
                       const std::filesystem::path& image_root, const RunConfig& cfg);

// Toy configuration used by the gradient-check task.
ModelConfig gradcheck_model_config();
struct GradCheckCase {
  std::uint64_t seed = 0;
  nn::GradCheckReport report;
};
std::vector<GradCheckCase> run_gradchecks(std::size_t n_configs, std::uint64_t seed,
                                          const losses::LossConfig& loss_cfg,
                                          nn::GradCheckOptions opts = {});

}  // namespace lira::train
