#include "lira/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>
#include <variant>

#include "lira/attr_eval.hpp"
#include "lira/conformance.hpp"
#include "lira/ilvc.hpp"
#include "lira/logging.hpp"
#include "lira/optimizer.hpp"
#include "lira/pixel_decoder.hpp"
#include "lira/synthetic.hpp"

namespace lira::train {
namespace {

using nlohmann::json;

json model_json(const ModelConfig& m) {
  return {{"d_model", m.d_model},     {"heads", m.heads},         {"lm_layers", m.lm_layers},
          {"enc_dim", m.enc_dim},     {"enc_heads", m.enc_heads}, {"enc_layers", m.enc_layers},
          {"patch", m.patch},         {"canvas", m.canvas},       {"local_res", m.local_res},
          {"max_len", m.max_len},     {"mlp_ratio", m.mlp_ratio}};
}

json loss_json(const losses::LossConfig& l) {
  return {{"alpha", l.alpha},
          {"w_ce", l.w_ce},
          {"w_dice", l.w_dice},
          {"dice_eps", l.dice_eps},
          {"ce_clamp", l.ce_clamp}};
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw std::invalid_argument("unknown " + where + " key: " + k);
}

std::set<std::string> keys_of(const json& j) {
  std::set<std::string> out;
  for (const auto& [k, v] : j.items()) out.insert(k);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Vocab load_vocab(const RunConfig& cfg) {
  return Vocab::load(std::filesystem::path(cfg.data_dir) / "vocab.txt");
}

double schedule(const RunConfig& cfg, std::size_t step) {
  if (cfg.warmup > 0 && step < cfg.warmup)
    return cfg.lr * static_cast<double>(step + 1) / static_cast<double>(cfg.warmup);
  if (cfg.lr_schedule == "constant") return cfg.lr;
  const double span = static_cast<double>(std::max<std::size_t>(1, cfg.steps - cfg.warmup));
  const double t = static_cast<double>(step - cfg.warmup) / span;
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

bool encoders_frozen(const nn::ParamStore& store) {
  for (const char* prefix : {sefe::kSemanticEncoder, sefe::kPixelEncoder})
    for (const auto& name : store.names_with_prefix(prefix))
      if (store.is_trainable(name)) return false;
  return true;
}

}  // namespace

void RunConfig::validate() const {
  if (stage != 1 && stage != 2) throw std::invalid_argument("stage must be 1 or 2");
  if (model.patch == 0 || model.local_res % model.patch != 0)
    throw std::invalid_argument("local_res must be divisible by patch");
  if (optimizer != "adam" && optimizer != "sgd")
    throw std::invalid_argument("optimizer must be adam or sgd");
  if (lr_schedule != "constant" && lr_schedule != "cosine")
    throw std::invalid_argument("lr_schedule must be constant or cosine");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (max_steps == 0) throw std::invalid_argument("max_steps must be >= 1");
  if (eval_threads == 0) throw std::invalid_argument("eval_threads must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
}

json to_json(const RunConfig& c) {
  return {{"model", model_json(c.model)},
          {"loss", loss_json(c.loss)},
          {"stage", c.stage},
          {"seed", c.seed},
          {"data_dir", c.data_dir},
          {"train_split", c.train_split},
          {"eval_split", c.eval_split},
          {"train_limit", c.train_limit},
          {"eval_limit", c.eval_limit},
          {"ilvc_enabled", c.ilvc_enabled},
          {"train_encoders", c.train_encoders},
          {"optimizer", c.optimizer},
          {"lr", c.lr},
          {"lr_schedule", c.lr_schedule},
          {"warmup", c.warmup},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"clip_norm", c.clip_norm},
          {"init_checkpoint", c.init_checkpoint},
          {"checkpoint", c.checkpoint},
          {"log", c.log},
          {"report", c.report},
          {"trace", c.trace},
          {"max_steps", c.max_steps},
          {"threshold", c.threshold},
          {"eval_threads", c.eval_threads},
          {"conformance_streams", c.conformance_streams},
          {"gradcheck_configs", c.gradcheck_configs},
          {"gradcheck_probes", c.gradcheck_probes}};
}

RunConfig config_from_json(const json& j, RunConfig c) {
  reject_unknown(j, keys_of(to_json(c)), "config");
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, keys_of(model_json(c.model)), "model");
    read_field(m, "d_model", c.model.d_model);
    read_field(m, "heads", c.model.heads);
    read_field(m, "lm_layers", c.model.lm_layers);
    read_field(m, "enc_dim", c.model.enc_dim);
    read_field(m, "enc_heads", c.model.enc_heads);
    read_field(m, "enc_layers", c.model.enc_layers);
    read_field(m, "patch", c.model.patch);
    read_field(m, "canvas", c.model.canvas);
    read_field(m, "local_res", c.model.local_res);
    read_field(m, "max_len", c.model.max_len);
    read_field(m, "mlp_ratio", c.model.mlp_ratio);
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, keys_of(loss_json(c.loss)), "loss");
    read_field(l, "alpha", c.loss.alpha);
    read_field(l, "w_ce", c.loss.w_ce);
    read_field(l, "w_dice", c.loss.w_dice);
    read_field(l, "dice_eps", c.loss.dice_eps);
    read_field(l, "ce_clamp", c.loss.ce_clamp);
  }
  read_field(j, "stage", c.stage);
  read_field(j, "seed", c.seed);
  read_field(j, "data_dir", c.data_dir);
  read_field(j, "train_split", c.train_split);
  read_field(j, "eval_split", c.eval_split);
  read_field(j, "train_limit", c.train_limit);
  read_field(j, "eval_limit", c.eval_limit);
  read_field(j, "ilvc_enabled", c.ilvc_enabled);
  read_field(j, "train_encoders", c.train_encoders);
  read_field(j, "optimizer", c.optimizer);
  read_field(j, "lr", c.lr);
  read_field(j, "lr_schedule", c.lr_schedule);
  read_field(j, "warmup", c.warmup);
  read_field(j, "steps", c.steps);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "clip_norm", c.clip_norm);
  read_field(j, "init_checkpoint", c.init_checkpoint);
  read_field(j, "checkpoint", c.checkpoint);
  read_field(j, "log", c.log);
  read_field(j, "report", c.report);
  read_field(j, "trace", c.trace);
  read_field(j, "max_steps", c.max_steps);
  read_field(j, "threshold", c.threshold);
  read_field(j, "eval_threads", c.eval_threads);
  read_field(j, "conformance_streams", c.conformance_streams);
  read_field(j, "gradcheck_configs", c.gradcheck_configs);
  read_field(j, "gradcheck_probes", c.gradcheck_probes);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

json to_json(const StepRecord& r) {
  return {{"step", r.step},           {"total", r.loss.total}, {"text", r.loss.text},
          {"mask", r.loss.mask},      {"ce", r.loss.ce},       {"dice", r.loss.dice},
          {"lr", r.lr},               {"grad_norm", r.grad_norm}};
}

TrainResult train_model(LiraModel& model, const std::vector<data::Sample>& samples,
                        const RunConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  if (samples.empty() && cfg.steps > 0) throw std::invalid_argument("train: no training samples");
  nn::ParamStore& store = model.params();
  configure_trainable(cfg.stage, store);
  if (cfg.stage == 2 && cfg.train_encoders) {
    auto names = store.trainable();
    for (const char* prefix : {sefe::kSemanticEncoder, sefe::kPixelEncoder})
      for (const auto& n : store.names_with_prefix(prefix)) names.insert(n);
    store.set_trainable(names);
  }
  const bool cache = encoders_frozen(store);

  TrainResult result;
  for (const auto& name : store.trainable()) result.trainable_scalars += store.get(name).size();

  std::vector<std::optional<RawFeatures>> raw(samples.size());
  std::mt19937_64 order_rng(cfg.seed ^ 0x0de5eed5ULL);
  std::vector<std::size_t> order(samples.size());
  std::size_t cursor = order.size();
  auto next_index = [&] {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[order_rng() % i]);
      cursor = 0;
    }
    return order[cursor++];
  };

  std::variant<nn::Adam, nn::Sgd> opt = cfg.optimizer == "sgd"
                                            ? std::variant<nn::Adam, nn::Sgd>(nn::Sgd(cfg.lr))
                                            : std::variant<nn::Adam, nn::Sgd>(nn::Adam(cfg.lr));
  const auto start = std::chrono::steady_clock::now();
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.lr = schedule(cfg, step);
    nn::GradMap grads;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const std::size_t idx = next_index();
      const data::Sample& s = samples[idx];
      if (cache && !raw[idx]) raw[idx] = encode_raw(s, store, model.config());
      nn::ParamBinding p(store, true);
      SampleLoss sl = sample_loss(s, cache ? &*raw[idx] : nullptr, p, model.config(),
                                  model.vocab(), cfg.loss);
      const auto& r = sl.loss.report;
      if (!std::isfinite(r.total))
        throw std::runtime_error("training diverged: non-finite loss at step " +
                                 std::to_string(step) + " (sample " + std::to_string(s.id) + ")");
      sl.loss.total.backward();
      for (auto& [name, g] : p.gradients()) {
        auto& acc = grads[name];
        if (acc.empty()) acc.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * inv_batch;
      }
      rec.loss.total += r.total * inv_batch;
      rec.loss.text += r.text * inv_batch;
      rec.loss.mask += r.mask * inv_batch;
      rec.loss.ce += r.ce * inv_batch;
      rec.loss.dice += r.dice * inv_batch;
    }
    if (cfg.clip_norm > 0.0) {
      rec.grad_norm = nn::clip_grad_norm(grads, cfg.clip_norm);
    } else {
      double sq = 0.0;
      for (const auto& [name, g] : grads)
        for (double v : g) sq += v * v;
      rec.grad_norm = std::sqrt(sq);
    }
    if (!std::isfinite(rec.grad_norm))
      throw std::runtime_error("training diverged: non-finite gradient at step " +
                               std::to_string(step));
    std::visit(
        [&](auto& o) {
          if constexpr (std::is_same_v<std::decay_t<decltype(o)>, nn::Adam>) {
            o.set_lr(rec.lr);
            o.step(store, grads);
          } else {
            nn::Sgd(rec.lr).step(store, grads);
          }
        },
        opt);
    result.log.push_back(rec);
    if (on_step) on_step(rec);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train(const RunConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  const Vocab vocab = load_vocab(cfg);
  LiraModel model = cfg.init_checkpoint.empty()
                        ? LiraModel::create(cfg.model, vocab, cfg.seed)
                        : LiraModel::load(cfg.model, vocab, cfg.init_checkpoint);
  const auto samples =
      data::load_samples(std::filesystem::path(cfg.data_dir) / cfg.train_split, cfg.train_limit);
  log(LogLevel::Info, "stage " + std::to_string(cfg.stage) + ": " +
                          std::to_string(samples.size()) + " samples, " +
                          std::to_string(cfg.steps) + " steps");
  TrainResult res = train_model(model, samples, cfg, [&](const StepRecord& r) {
    if (log_level() >= LogLevel::Info && (r.step % 50 == 0 || r.step + 1 == cfg.steps))
      log(LogLevel::Info, "step " + std::to_string(r.step) + " loss " +
                              std::to_string(r.loss.total));
    if (on_step) on_step(r);
  });
  std::string lines;
  for (const auto& r : res.log) lines += to_json(r).dump() + "\n";
  write_text(cfg.log, lines);
  const std::filesystem::path ckpt(cfg.checkpoint);
  if (ckpt.has_parent_path()) std::filesystem::create_directories(ckpt.parent_path());
  model.params().save(ckpt);
  return res;
}

EvalTask parse_eval_task(std::string_view name) {
  if (name == "refseg") return EvalTask::RefSeg;
  if (name == "attr") return EvalTask::Attr;
  if (name == "gradcheck") return EvalTask::GradCheck;
  if (name == "conformance") return EvalTask::Conformance;
  throw std::invalid_argument("unknown eval task: " + std::string(name));
}

std::string_view eval_task_name(EvalTask t) {
  switch (t) {
    case EvalTask::RefSeg:
      return "refseg";
    case EvalTask::Attr:
      return "attr";
    case EvalTask::GradCheck:
      return "gradcheck";
    case EvalTask::Conformance:
      return "conformance";
  }
  return "?";
}

std::pair<std::size_t, std::size_t> description_token_hits(const LiraModel& model,
                                                           const data::Sample& s) {
  nn::ParamBinding p(model.params(), false);
  const auto& sp = model.vocab().specials();
  const InterleavedSequence seq = sample_sequence(s, nullptr, p, model.config(), model.vocab());
  const lm::ForwardResult fwd = lm::forward(seq, p, model.config(), sp);
  const TokenSeq tokens = seq.position_tokens(sp);
  const auto& logits = fwd.logits.value();
  const std::size_t v = logits.dim(1);
  std::size_t hits = 0, total = 0;
  bool inside = false;
  for (std::size_t j = 1; j < tokens.size(); ++j) {
    const TokenId tok = tokens[j];
    if (tok == sp.p_open && !inside) {
      inside = true;
      continue;
    }
    if (!inside) continue;
    ++total;
    if (lm::argmax(logits.data().subspan((j - 1) * v, v)) == tok) ++hits;
    if (tok == sp.p_close) inside = false;
  }
  return {hits, total};
}

RefSegEval evaluate_refseg(const LiraModel& model, const std::vector<data::Sample>& samples,
                           const RunConfig& cfg) {
  const Vocab& vocab = model.vocab();
  std::vector<const data::Sample*> refseg;
  for (const auto& s : samples)
    if (s.task == gen::Task::RefSeg) refseg.push_back(&s);
  if (refseg.empty()) throw std::invalid_argument("evaluate_refseg: no refseg samples");

  struct Slot {
    std::pair<BinaryMask, BinaryMask> pair;
    bool protocol_error = false;
    bool truncated = false;
    std::vector<gen::TraceEvent> trace;
    std::vector<MaskMap> masks;
  };
  std::vector<Slot> slots(refseg.size());
  auto run = [&](std::size_t begin, std::size_t step) {
    LiraBackend backend(model.params(), model.config(), vocab);
    for (std::size_t i = begin; i < refseg.size(); i += step) {
      const data::Sample& s = *refseg[i];
      const TokenSeq instr =
          gen::compose_instruction(gen::Task::RefSeg, cfg.ilvc_enabled, vocab.encode(s.query), vocab);
      gen::GenerateOptions opts;
      opts.ilvc_enabled = cfg.ilvc_enabled;
      opts.max_steps = cfg.max_steps;
      opts.threshold = cfg.threshold;
      gen::GenerationResult g = gen::generate(backend, *s.image, instr, opts);
      const BinaryMask& gt = s.regions.at(0).mask;
      BinaryMask pred = g.masks.empty() ? BinaryMask::empty(gt.height, gt.width)
                                        : binarize(g.masks.front(), cfg.threshold);
      slots[i] = Slot{{std::move(pred), gt}, g.protocol_error, g.truncated, std::move(g.trace),
                      std::move(g.masks)};
    }
  };
  const std::size_t threads = std::min(cfg.eval_threads, refseg.size());
  if (threads <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run, t, threads);
    for (auto& th : pool) th.join();
  }

  RefSegEval out;
  metrics::MaskPairs pairs;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    pairs.push_back(slots[i].pair);
    out.protocol_errors += slots[i].protocol_error ? 1 : 0;
    out.truncated += slots[i].truncated ? 1 : 0;
    for (std::size_t e = 0; e < slots[i].trace.size(); ++e) {
      const auto& ev = slots[i].trace[e];
      json line = {{"sample", refseg[i]->id},
                   {"step", ev.step},
                   {"event", std::string(gen::event_name(ev.kind))},
                   {"token", vocab.word(ev.token)}};
      if (ev.kind == gen::EventKind::Seg)
        line["mask"] = "masks/sample_" + std::to_string(refseg[i]->id) + "_" +
                       std::to_string(ev.mask_index + 1) + ".pgm";
      if (ev.kind == gen::EventKind::Error) line["message"] = ev.message;
      out.traces.push_back(std::move(line));
    }
  }
  out.metrics = metrics::aggregate(pairs);

  std::size_t hits = 0;
  for (const auto& s : samples) {
    if (!s.ilvc) continue;
    const auto [h, n] = description_token_hits(model, s);
    hits += h;
    out.desc_tokens += n;
  }
  out.desc_token_accuracy =
      out.desc_tokens ? static_cast<double>(hits) / static_cast<double>(out.desc_tokens) : 0.0;

  if (!cfg.trace.empty()) {
    const std::filesystem::path trace(cfg.trace);
    std::string lines;
    for (const auto& l : out.traces) lines += l.dump() + "\n";
    write_text(trace, lines);
    const auto dir = (trace.has_parent_path() ? trace.parent_path() : ".") / "masks";
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < slots.size(); ++i)
      for (std::size_t k = 0; k < slots[i].masks.size(); ++k)
        write_pgm(dir / ("sample_" + std::to_string(refseg[i]->id) + "_" + std::to_string(k + 1) +
                         ".pgm"),
                  slots[i].masks[k]);
  }
  return out;
}

AttrScore score_probes(const LiraModel& model, const std::vector<attr::AttrProbe>& probes,
                       const std::filesystem::path& image_root, const RunConfig& cfg) {
  const Vocab& vocab = model.vocab();
  const TokenId yes = vocab.id("yes"), no = vocab.id("no");
  std::map<std::string, ImageBuffer> images;
  LiraBackend backend(model.params(), model.config(), vocab);
  std::map<std::size_t, std::vector<double>> seg_logits;
  AttrScore out;

  auto ask = [&](const ImageBuffer& img, const std::string& question) {
    const TokenSeq instr =
        gen::compose_instruction(gen::Task::Vqa, false, vocab.encode(question), vocab);
    const auto logits = backend.next_logits(backend.begin(img, instr));
    return logits[yes] > logits[no] ? attr::Answer::Yes : attr::Answer::No;
  };

  for (const auto& probe : probes) {
    auto it = images.find(probe.image);
    if (it == images.end())
      it = images.emplace(probe.image, read_ppm(image_root / probe.image)).first;
    const ImageBuffer& img = it->second;
    out.answers[probe.id] = {ask(img, probe.positive_question), ask(img, probe.negative_question)};

    const TokenSeq instr = gen::compose_instruction(gen::Task::RefSeg, cfg.ilvc_enabled,
                                                    vocab.encode(probe.description), vocab);
    InterleavedSequence seq = backend.begin(img, instr);
    seq.push_seg();
    const auto& state = backend.forward(seq).seg_states.back();
    seg_logits[probe.id] = state.logits.value().storage();
  }
  out.vqa_acc = attr::score_vqa(probes, out.answers);
  out.logits = attr::score_logits(probes, seg_logits, vocab);
  return out;
}

ModelConfig gradcheck_model_config() {
  ModelConfig m;
  m.d_model = 8;
  m.heads = 2;
  m.lm_layers = 1;
  m.enc_dim = 8;
  m.enc_heads = 2;
  m.enc_layers = 1;
  m.patch = 4;
  m.canvas = 16;
  m.local_res = 8;
  m.max_len = 64;
  m.mlp_ratio = 2;
  return m;
}

std::vector<GradCheckCase> run_gradchecks(std::size_t n_configs, std::uint64_t seed,
                                          const losses::LossConfig& loss_cfg,
                                          nn::GradCheckOptions opts) {
  const Vocab vocab = Vocab::standard();
  const ModelConfig mcfg = gradcheck_model_config();
  synth::SceneOptions so;
  so.canvas = mcfg.canvas;
  so.patch = mcfg.patch;
  std::vector<GradCheckCase> out;
  std::uint64_t state = seed;
  for (std::size_t c = 0; c < n_configs; ++c) {
    const std::uint64_t s = synth::splitmix64(state);
    synth::Scene scene;
    const std::size_t wanted = 1 + c % 2;
    try {
      scene = synth::generate_scene(s, wanted, so);
    } catch (const synth::PlacementError&) {
      scene = synth::generate_scene(s, 1, so);
    }
    data::Sample sample;
    sample.id = c;
    sample.image = std::make_shared<const ImageBuffer>(scene.image);
    sample.ilvc = c % 4 != 3;
    sample.task = scene.objects.size() > 1 ? gen::Task::Gcg : gen::Task::RefSeg;
    sample.query = scene.objects[0].descriptions[0];
    sample.instruction = vocab.decode(gen::compose_instruction(
        sample.task, sample.ilvc,
        sample.task == gen::Task::RefSeg ? vocab.encode(sample.query) : TokenSeq{}, vocab));
    for (const auto& o : scene.objects)
      sample.regions.push_back({"", o.mask, o.local_description});

    LiraModel model = LiraModel::create(mcfg, vocab, s);
    nn::ParamStore& store = model.params();
    // Open the fusion path so its gradients are not trivially zero.
    std::mt19937_64 rng(s);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (double& v : store.get_mut(std::string(sefe::kMhca) + "o.w").data()) v = nd(rng);
    const auto names = store.names();
    store.set_trainable(std::set<std::string>(names.begin(), names.end()));

    const ModelConfig& cfg = model.config();
    nn::Objective f = [&](nn::ParamBinding& p) {
      return sample_loss(sample, nullptr, p, cfg, vocab, loss_cfg).loss.total;
    };
    out.push_back({s, nn::grad_check(f, store, opts)});
  }
  return out;
}

EvalOutcome evaluate(const RunConfig& cfg, EvalTask task) {
  cfg.validate();
  EvalOutcome out;
  json& r = out.report;
  r["task"] = std::string(eval_task_name(task));
  const std::filesystem::path eval_dir = std::filesystem::path(cfg.data_dir) / cfg.eval_split;

  switch (task) {
    case EvalTask::RefSeg: {
      const LiraModel model = LiraModel::load(cfg.model, load_vocab(cfg), cfg.checkpoint);
      const auto samples = data::load_samples(eval_dir, cfg.eval_limit);
      const RefSegEval e = evaluate_refseg(model, samples, cfg);
      r["refseg"] = metrics::to_json(e.metrics);
      r["desc_token_accuracy"] = e.desc_token_accuracy;
      r["desc_tokens"] = e.desc_tokens;
      r["protocol_errors"] = e.protocol_errors;
      r["truncated"] = e.truncated;
      out.ok = e.protocol_errors == 0;
      break;
    }
    case EvalTask::Attr: {
      const LiraModel model = LiraModel::load(cfg.model, load_vocab(cfg), cfg.checkpoint);
      std::ifstream in(eval_dir / "attr_records.json");
      if (!in) throw std::runtime_error("cannot open " + (eval_dir / "attr_records.json").string());
      std::vector<attr::AttrRecord> records;
      for (const auto& j : json::parse(in)) records.push_back(attr::record_from_json(j));
      std::vector<std::string> warnings;
      const auto probes = attr::build_probes(records, model.vocab(), cfg.seed, &warnings);
      if (probes.empty()) throw std::runtime_error("attr: no probes could be built");
      const auto scored = score_probes(model, probes, eval_dir, cfg);
      r["vqa_acc"] = scored.vqa_acc;
      r["acc1"] = scored.logits.acc1;
      r["acc3"] = scored.logits.acc3;
      r["n"] = probes.size();
      r["warnings"] = warnings;
      break;
    }
    case EvalTask::GradCheck: {
      nn::GradCheckOptions opts;
      opts.max_per_tensor = cfg.gradcheck_probes;
      const auto cases = run_gradchecks(cfg.gradcheck_configs, cfg.seed, cfg.loss, opts);
      json list = json::array();
      double worst = 0.0;
      bool passed = true;
      for (const auto& c : cases) {
        list.push_back({{"seed", c.seed},
                        {"max_rel_error", c.report.max_rel_error},
                        {"checked_scalars", c.report.checked_scalars},
                        {"passed", c.report.passed()}});
        worst = std::max(worst, c.report.max_rel_error);
        passed = passed && c.report.passed();
      }
      r["configs"] = list;
      r["max_rel_error"] = worst;
      r["tol"] = nn::GradCheckOptions{}.tol;
      r["passed"] = passed;
      out.ok = passed;
      break;
    }
    case EvalTask::Conformance: {
      const SpecialTokens sp;
      const auto scenarios = conformance::standard_scenarios(cfg.seed, cfg.conformance_streams, sp);
      std::size_t agree = 0, crop_violations = 0, errors = 0;
      json failures = json::array();
      for (const auto& sc : scenarios) {
        const auto o = conformance::run_scenario(sc, sp);
        agree += o.agree ? 1 : 0;
        crop_violations += o.no_crop_guarantee ? 0 : 1;
        errors += o.protocol_error ? 1 : 0;
        if (!o.agree || !o.no_crop_guarantee) failures.push_back(o.name);
      }
      r["scenarios"] = scenarios.size();
      r["agree"] = agree;
      r["protocol_error_scenarios"] = errors;
      r["no_crop_violations"] = crop_violations;
      r["failures"] = failures;
      out.ok = agree == scenarios.size() && crop_violations == 0;
      break;
    }
  }
  write_text(cfg.report, r.dump(2) + "\n");
  return out;
}

}  // namespace lira::train
