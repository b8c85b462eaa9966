// lira: data generation, training, evaluation and generation from the shell.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lira/attr_eval.hpp"
#include "lira/generation.hpp"
#include "lira/logging.hpp"
#include "lira/model.hpp"
#include "lira/synthetic.hpp"
#include "lira/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lira;

namespace {

// Flags that override fields of the JSON run config.
struct Overrides {
  std::string config;
  std::optional<std::string> data_dir, checkpoint, init_checkpoint, log, report, trace;
  std::optional<int> stage;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps, batch_size, train_limit, eval_limit, eval_threads, max_steps;
  std::optional<double> lr;
  std::optional<bool> ilvc, train_encoders;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run config");
    app->add_option("--data-dir", data_dir, "dataset root (vocab.txt, train/, eval/)");
    app->add_option("--checkpoint", checkpoint, "checkpoint to write (train) or read (eval)");
    app->add_option("--init-checkpoint", init_checkpoint, "start training from this checkpoint");
    app->add_option("--log", log, "JSON-lines training log");
    app->add_option("--report", report, "report output path");
    app->add_option("--trace", trace, "JSON-lines generation trace");
    app->add_option("--stage", stage, "training stage (1 or 2)");
    app->add_option("--seed", seed);
    app->add_option("--steps", steps);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", lr);
    app->add_option("--train-limit", train_limit);
    app->add_option("--eval-limit", eval_limit);
    app->add_option("--eval-threads", eval_threads, "worker threads for evaluation");
    app->add_option("--max-steps", max_steps, "generation step budget");
    app->add_option("--ilvc", ilvc, "couple local regions during generation (true/false)");
    app->add_option("--train-encoders", train_encoders, "stage 2 also updates the encoders");
  }

  train::RunConfig resolve() const {
    train::RunConfig c = config.empty() ? train::RunConfig{} : train::load_config(config);
    if (data_dir) c.data_dir = *data_dir;
    if (checkpoint) c.checkpoint = *checkpoint;
    if (init_checkpoint) c.init_checkpoint = *init_checkpoint;
    if (log) c.log = *log;
    if (report) c.report = *report;
    if (trace) c.trace = *trace;
    if (stage) c.stage = *stage;
    if (seed) c.seed = *seed;
    if (steps) c.steps = *steps;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.lr = *lr;
    if (train_limit) c.train_limit = *train_limit;
    if (eval_limit) c.eval_limit = *eval_limit;
    if (eval_threads) c.eval_threads = *eval_threads;
    if (max_steps) c.max_steps = *max_steps;
    if (ilvc) c.ilvc_enabled = *ilvc;
    if (train_encoders) c.train_encoders = *train_encoders;
    c.validate();
    return c;
  }
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lira: segmentation-capable toy multimodal model"};
  app.require_subcommand(1);

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "write a synthetic train/eval split");
  std::uint64_t data_seed = 0;
  std::size_t n_train = 512, n_eval = 64;
  std::string data_out = "data";
  synth::SplitOptions split_opts;
  gen_data->add_option("--seed", data_seed);
  gen_data->add_option("--n-train", n_train, "training scenes");
  gen_data->add_option("--n-eval", n_eval, "held-out scenes");
  gen_data->add_option("--out", data_out, "output directory");
  gen_data->add_option("--max-objects", split_opts.max_objects, "objects per scene, at most");
  gen_data->add_option("--train-ilvc-fraction", split_opts.train_ilvc_fraction);

  // train / eval / grad-check share the run-config overrides
  auto* train_cmd = app.add_subcommand("train", "run one training stage");
  Overrides train_ov;
  train_ov.attach(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  Overrides eval_ov;
  eval_ov.attach(eval_cmd);
  std::string eval_task = "refseg";
  eval_cmd->add_option("--task", eval_task, "refseg | attr | gradcheck | conformance");

  auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference check of the full loss");
  Overrides gc_ov;
  gc_ov.attach(gc_cmd);
  std::optional<std::size_t> gc_configs;
  gc_cmd->add_option("--configs", gc_configs, "number of seeded toy configurations");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "run the generation loop on one image");
  Overrides gen_ov;
  gen_ov.attach(gen_cmd);
  std::string gen_image, gen_query, gen_task = "refseg", gen_out = "gen_out";
  gen_cmd->add_option("--image", gen_image, "P6 image")->required();
  gen_cmd->add_option("--task", gen_task, "refseg | gcg | vqa");
  gen_cmd->add_option("--query", gen_query, "referring expression or question");
  gen_cmd->add_option("--out", gen_out, "directory for masks and trace");

  // attr-build / attr-score
  auto* ab_cmd = app.add_subcommand("attr-build", "build attribute probes from records");
  std::string ab_records, ab_vocab, ab_out = "probes.json";
  std::uint64_t ab_seed = 0;
  ab_cmd->add_option("--records", ab_records, "attr_records.json")->required();
  ab_cmd->add_option("--vocab", ab_vocab, "vocab.txt (default: standard vocabulary)");
  ab_cmd->add_option("--out", ab_out);
  ab_cmd->add_option("--seed", ab_seed);

  auto* as_cmd = app.add_subcommand("attr-score", "score attribute probes");
  Overrides as_ov;
  as_ov.attach(as_cmd);
  std::string as_probes, as_answers, as_image_root;
  as_cmd->add_option("--probes", as_probes)->required();
  as_cmd->add_option("--answers", as_answers,
                     "JSON {probe id: [pos, neg]}; without it the model answers");
  as_cmd->add_option("--image-root", as_image_root, "directory probe image paths are under");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_data) {
      const auto s = synth::make_split(data_seed, n_train, n_eval, data_out, split_opts);
      std::cout << "wrote " << s.train_samples << " train samples (" << s.train_scenes
                << " scenes) and " << s.eval_samples << " eval samples (" << s.eval_scenes
                << " scenes) to " << data_out << '\n';
      return 0;
    }

    if (*train_cmd) {
      const auto cfg = train_ov.resolve();
      const auto res = train::train(cfg);
      std::printf("stage %d: %zu steps, %zu trainable scalars, %.1f s\n", cfg.stage,
                  res.log.size(), res.trainable_scalars, res.seconds);
      if (!res.log.empty())
        std::printf("loss %.6f -> %.6f\n", res.log.front().loss.total, res.log.back().loss.total);
      std::cout << "checkpoint " << cfg.checkpoint << ", log " << cfg.log << '\n';
      return 0;
    }

    if (*eval_cmd || *gc_cmd) {
      auto cfg = (*eval_cmd ? eval_ov : gc_ov).resolve();
      const auto task = *eval_cmd ? train::parse_eval_task(eval_task) : train::EvalTask::GradCheck;
      if (gc_configs) cfg.gradcheck_configs = *gc_configs;
      const auto out = train::evaluate(cfg, task);
      std::cout << out.report.dump(2) << '\n';
      return out.ok ? 0 : 1;
    }

    if (*gen_cmd) {
      const auto cfg = gen_ov.resolve();
      const Vocab vocab = Vocab::load(fs::path(cfg.data_dir) / "vocab.txt");
      const LiraModel model = LiraModel::load(cfg.model, vocab, cfg.checkpoint);
      const ImageBuffer img = read_ppm(gen_image);
      const auto task = gen::parse_task(gen_task);
      const TokenSeq instr =
          gen::compose_instruction(task, cfg.ilvc_enabled, vocab.encode(gen_query), vocab);
      LiraBackend backend(model.params(), model.config(), vocab);
      gen::GenerateOptions opts;
      opts.ilvc_enabled = cfg.ilvc_enabled;
      opts.max_steps = cfg.max_steps;
      opts.threshold = cfg.threshold;
      const auto res = gen::generate(backend, img, instr, opts);

      fs::create_directories(gen_out);
      std::ofstream trace(fs::path(gen_out) / "trace.jsonl");
      for (const auto& ev : res.trace) {
        json line = {{"step", ev.step},
                     {"event", std::string(gen::event_name(ev.kind))},
                     {"token", vocab.word(ev.token)}};
        if (ev.kind == gen::EventKind::Seg)
          line["mask"] = "mask_" + std::to_string(ev.mask_index + 1) + ".pgm";
        if (ev.kind == gen::EventKind::Error) line["message"] = ev.message;
        trace << line.dump() << '\n';
      }
      for (std::size_t k = 0; k < res.masks.size(); ++k)
        write_pgm(fs::path(gen_out) / ("mask_" + std::to_string(k + 1) + ".pgm"), res.masks[k]);
      std::cout << vocab.decode(res.output_tokens) << '\n';
      if (res.truncated) std::cerr << "warning: step budget exhausted\n";
      if (res.protocol_error) {
        std::cerr << "protocol error: " << res.trace.back().message << '\n';
        return 1;
      }
      return 0;
    }

    if (*ab_cmd) {
      const Vocab vocab = ab_vocab.empty() ? Vocab::standard() : Vocab::load(ab_vocab);
      std::vector<attr::AttrRecord> records;
      for (const auto& j : read_json(ab_records)) records.push_back(attr::record_from_json(j));
      std::vector<std::string> warnings;
      const auto probes = attr::build_probes(records, vocab, ab_seed, &warnings);
      json arr = json::array();
      for (const auto& p : probes) arr.push_back(attr::to_json(p));
      write_json(ab_out, arr);
      std::cout << "wrote " << probes.size() << " probes to " << ab_out << '\n';
      return 0;
    }

    if (*as_cmd) {
      const auto cfg = as_ov.resolve();
      std::vector<attr::AttrProbe> probes;
      for (const auto& j : read_json(as_probes)) probes.push_back(attr::probe_from_json(j));
      json report = {{"n", probes.size()}};
      if (!as_answers.empty()) {
        attr::AnswerMap answers;
        for (const auto& [k, v] : read_json(as_answers).items())
          answers[std::stoul(k)] = {attr::parse_answer(v.at(0).get<std::string>()),
                                    attr::parse_answer(v.at(1).get<std::string>())};
        report["vqa_acc"] = attr::score_vqa(probes, answers);
      } else {
        const Vocab vocab = Vocab::load(fs::path(cfg.data_dir) / "vocab.txt");
        const LiraModel model = LiraModel::load(cfg.model, vocab, cfg.checkpoint);
        const fs::path root =
            as_image_root.empty() ? fs::path(cfg.data_dir) / cfg.eval_split : fs::path(as_image_root);
        const auto s = train::score_probes(model, probes, root, cfg);
        report["vqa_acc"] = s.vqa_acc;
        report["acc1"] = s.logits.acc1;
        report["acc3"] = s.logits.acc3;
      }
      write_json(cfg.report, report);
      std::cout << report.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
