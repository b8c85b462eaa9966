#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lira/synthetic.hpp"
#include "lira/training.hpp"

namespace {

using namespace lira;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Training : public ::testing::Test {
 protected:
  static inline fs::path root;

  static void SetUpTestSuite() {
    root = fs::temp_directory_path() / "lira_training_test";
    fs::remove_all(root);
    synth::make_split(2, 24, 6, root / "data");
  }
  static void TearDownTestSuite() { fs::remove_all(root); }

  train::RunConfig config(const std::string& run, int stage, std::size_t steps) const {
    train::RunConfig c;
    c.data_dir = (root / "data").string();
    c.stage = stage;
    c.steps = steps;
    c.checkpoint = (root / run / "model.ckpt").string();
    c.log = (root / run / "train.jsonl").string();
    c.report = (root / run / "report.json").string();
    return c;
  }

  static LiraModel fresh(std::uint64_t seed = 0) {
    return LiraModel::create(ModelConfig{}, Vocab::load(root / "data" / "vocab.txt"), seed);
  }
};

bool all_in_groups(const std::set<std::string>& names, std::initializer_list<std::string> groups) {
  for (const auto& n : names) {
    bool ok = false;
    for (const auto& g : groups) ok |= n.rfind(g, 0) == 0;
    if (!ok) return false;
  }
  return true;
}

TEST_F(Training, StageTrainableSets) {
  auto m = fresh();
  auto& store = m.params();
  const auto s1 = stage_trainable(1, store);
  const auto s2 = stage_trainable(2, store);
  EXPECT_TRUE(all_in_groups(s1, {"mlp_p.", "pixel_decoder."}));
  EXPECT_TRUE(all_in_groups(s2, {"mlp_p.", "pixel_decoder.", "mhca.", "lm.", "mlp_s."}));
  EXPECT_TRUE(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
  EXPECT_EQ(s1.count("mhca.o.w"), 0u);
  EXPECT_EQ(s2.count("mhca.o.w"), 1u);
  EXPECT_EQ(s2.count("lm.head.w"), 1u);
  for (const auto& n : store.names_with_prefix("pix_enc.")) EXPECT_EQ(s2.count(n), 0u);
  configure_trainable(1, store);
  EXPECT_EQ(store.trainable(), s1);
  EXPECT_THROW(configure_trainable(3, store), std::invalid_argument);
  nn::ParamStore partial;
  partial.add("mlp_p.net.fc1.w", nn::Tensor({2, 2}));
  EXPECT_THROW(configure_trainable(1, partial), std::invalid_argument);
}

TEST_F(Training, StageOneLeavesFrozenGroupsBitIdentical) {
  auto m = fresh(3);
  const nn::ParamStore before = m.params();
  const auto samples = data::load_samples(root / "data" / "train", 8);
  train_model(m, samples, config("s1", 1, 4));
  std::size_t changed = 0;
  for (const auto& name : before.names()) {
    const bool same = before.get(name).storage() == m.params().get(name).storage();
    const bool frozen = name.rfind("mlp_p.", 0) != 0 && name.rfind("pixel_decoder.", 0) != 0;
    if (frozen) EXPECT_TRUE(same) << name;
    changed += !same;
  }
  EXPECT_GT(changed, 0u);
}

TEST_F(Training, TrainEncodersOptionOnlyAffectsStageTwo) {
  const auto samples = data::load_samples(root / "data" / "train", 4);
  auto cfg = config("enc", 2, 2);
  cfg.train_encoders = true;
  auto m = fresh(4);
  const nn::ParamStore before = m.params();
  train_model(m, samples, cfg);
  EXPECT_NE(before.get("pix_enc.patch.w").storage(), m.params().get("pix_enc.patch.w").storage());
  cfg.stage = 1;
  auto m1 = fresh(4);
  train_model(m1, samples, cfg);
  EXPECT_EQ(before.get("pix_enc.patch.w").storage(), m1.params().get("pix_enc.patch.w").storage());
}

TEST_F(Training, ZeroStepsWritesInitialization) {
  const auto cfg = config("zero", 2, 0);
  train::train(cfg);
  fresh(cfg.seed).params().save(root / "zero" / "init.ckpt");
  EXPECT_EQ(slurp(cfg.checkpoint), slurp(root / "zero" / "init.ckpt"));
  EXPECT_EQ(slurp(cfg.log), "");
}

TEST_F(Training, RerunIsIdentical) {
  auto a = config("det_a", 2, 6);
  auto b = config("det_b", 2, 6);
  a.batch_size = b.batch_size = 2;
  const auto ra = train::train(a);
  train::train(b);
  EXPECT_EQ(slurp(a.log), slurp(b.log));
  EXPECT_EQ(slurp(a.checkpoint), slurp(b.checkpoint));
  EXPECT_EQ(ra.log.size(), 6u);
  auto c = config("det_c", 2, 6);
  c.batch_size = 2;
  c.seed = 1;
  train::train(c);
  EXPECT_NE(slurp(a.log), slurp(c.log));
}

TEST_F(Training, LossDecreases) {
  auto cfg = config("decrease", 2, 200);
  cfg.lr = 1e-3;
  const auto res = train::train(cfg);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    head += res.log[i].loss.total;
    tail += res.log[180 + i].loss.total;
  }
  EXPECT_LT(tail, head);
}

TEST_F(Training, NonFiniteLossNamesStep) {
  auto m = fresh();
  m.params().get_mut("pixel_decoder.bias")[0] = std::numeric_limits<double>::quiet_NaN();
  const auto samples = data::load_samples(root / "data" / "train", 2);
  try {
    train_model(m, samples, config("nan", 1, 3));
    FAIL() << "expected divergence error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos) << e.what();
  }
}

TEST_F(Training, ConfigJsonRoundTrip) {
  auto c = config("cfg", 2, 17);
  c.lr = 3e-4;
  c.model.lm_layers = 3;
  c.loss.alpha = 0.25;
  c.train_encoders = true;
  const auto back = train::config_from_json(train::to_json(c));
  EXPECT_EQ(train::to_json(back), train::to_json(c));
  EXPECT_THROW(train::config_from_json({{"stpes", 3}}), std::invalid_argument);
  EXPECT_THROW(train::config_from_json({{"stage", 4}}), std::invalid_argument);
  const auto partial = train::config_from_json({{"steps", 9}});
  EXPECT_EQ(partial.steps, 9u);
  EXPECT_EQ(partial.lr, train::RunConfig{}.lr);
}

TEST_F(Training, EvaluateTasksWriteReports) {
  auto cfg = config("eval", 2, 0);
  train::train(cfg);
  cfg.eval_limit = 4;
  cfg.max_steps = 24;
  const auto rs = train::evaluate(cfg, train::EvalTask::RefSeg);
  EXPECT_TRUE(rs.report.contains("refseg"));
  EXPECT_EQ(nlohmann::json::parse(slurp(cfg.report)), rs.report);
  cfg.conformance_streams = 10;
  const auto conf = train::evaluate(cfg, train::EvalTask::Conformance);
  EXPECT_TRUE(conf.ok);
  cfg.gradcheck_configs = 1;
  const auto gc = train::evaluate(cfg, train::EvalTask::GradCheck);
  EXPECT_TRUE(gc.ok) << gc.report.dump();
  EXPECT_THROW(train::parse_eval_task("bleu"), std::invalid_argument);
  cfg.checkpoint = (root / "missing.ckpt").string();
  EXPECT_ANY_THROW(train::evaluate(cfg, train::EvalTask::RefSeg));
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(LIRA_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST_F(Training, CliSurface) {
  const fs::path d = root / "cli";
  EXPECT_EQ(run_cli("gen-data --seed 4 --n-train 3 --n-eval 2 --out " + (d / "data").string()), 0);
  const std::string common = " --data-dir " + (d / "data").string() + " --checkpoint " +
                             (d / "m.ckpt").string();
  EXPECT_EQ(run_cli("train --stage 1 --steps 2 --log " + (d / "log.jsonl").string() + common), 0);
  EXPECT_EQ(run_cli("eval --task conformance --report " + (d / "c.json").string() + common), 0);
  EXPECT_TRUE(fs::exists(d / "c.json"));
  EXPECT_EQ(run_cli("generate --image " + (d / "data/eval/images/scene_00000.ppm").string() +
                    " --query \"the red square\" --max-steps 5 --ilvc false --out " + (d / "gen").string() +
                    common),
            0);
  EXPECT_TRUE(fs::exists(d / "gen" / "trace.jsonl"));
  EXPECT_EQ(run_cli("attr-build --records " + (d / "data/eval/attr_records.json").string() +
                    " --out " + (d / "probes.json").string()),
            0);
  EXPECT_EQ(run_cli("train --stage 5" + common), 2);
  EXPECT_NE(run_cli("frobnicate"), 0);
}

}  // namespace
