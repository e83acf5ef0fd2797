// Copyright (c) 2026 The guided-ssl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "engine_fixtures.hpp"
#include "gssl/data/image.hpp"
#include "gssl/errors.hpp"
#include "test_helpers.hpp"

using namespace gssl;
using namespace gssl::engine;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gssl_test_engine_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

model::ParamSet single(double v) {
  model::ParamSet ps;
  ps.add("x", Tensor({1}, v), false);
  return ps;
}

}  // namespace

TEST(Schedules, MomentumEndpointsAndMidpoint) {
  EXPECT_EQ(momentum_at(0, 100), 0.996);
  EXPECT_EQ(momentum_at(100, 100), 1.0);
  EXPECT_NEAR(momentum_at(50, 100), 0.998, 1e-15);
  EXPECT_EQ(momentum_at(150, 100), 1.0);
  for (std::size_t t = 1; t <= 1000; ++t) EXPECT_GE(momentum_at(t, 1000), momentum_at(t - 1, 1000));
}

TEST(Schedules, LearningRate) {
  EXPECT_EQ(lr_at(0, 100, 0.1, 4e-3), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(10, 100, 0.1, 4e-3), 4e-3);
  EXPECT_NEAR(lr_at(100, 100, 0.1, 4e-3), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(lr_at(5, 100, 0.1, 4e-3), 2e-3);
  // both branches meet at the junction
  const double warm_side = 4e-3 * 10.0 / 10.0;
  EXPECT_NEAR(lr_at(10, 100, 0.1, 4e-3), warm_side, 1e-12);
  for (std::size_t t = 10; t < 100; ++t) EXPECT_LE(lr_at(t + 1, 100, 0.1, 4e-3), lr_at(t, 100, 0.1, 4e-3));
  EXPECT_DOUBLE_EQ(lr_at(0, 100, 0.0, 1.0), 1.0);
}

TEST(Ema, Examples) {
  Tensor t({3}, std::vector<double>{1, 2, 3}), s({3}, std::vector<double>{-1, 0, 5});
  Tensor a = t;
  ema_update(a, s, 1.0);
  EXPECT_EQ(a, t);
  a = t;
  ema_update(a, s, 0.0);
  EXPECT_EQ(a, s);
  Tensor scalar({1}, 2.0);
  ema_update(scalar, Tensor({1}, 1.0), 0.996);
  EXPECT_NEAR(scalar[0], 1.996, 1e-15);
  EXPECT_THROW(ema_update(a, Tensor({2}, 0.0), 0.5), DimensionError);
}

TEST(Ema, Convexity) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor t = test::random_tensor({17}, 2 * trial), s = test::random_tensor({17}, 2 * trial + 1);
    Tensor u = t;
    ema_update(u, s, rng.uniform());
    for (std::size_t k = 0; k < 17; ++k) {
      EXPECT_GE(u[k], std::min(t[k], s[k]));
      EXPECT_LE(u[k], std::max(t[k], s[k]));
    }
  }
}

TEST(AdamW, FirstStepIsSignOfGradient) {
  for (double g : {3.0, -0.02, 1e-3}) {
    model::ParamSet p = single(1.0);
    auto st = OptimizerState::zeros_for(p);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    const Tensor grads[] = {Tensor({1}, g)};
    adamw_step(st, cfg, p, grads, 0.01);
    EXPECT_NEAR(p.value(0)[0], 1.0 - 0.01 * (g > 0 ? 1.0 : -1.0), 1e-7);
  }
}

TEST(AdamW, ZeroGradientWithoutDecayIsNoOp) {
  model::ParamSet p = single(0.7);
  auto st = OptimizerState::zeros_for(p);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  const Tensor grads[] = {Tensor({1}, 0.0)};
  for (int i = 0; i < 5; ++i) adamw_step(st, cfg, p, grads, 0.1);
  EXPECT_EQ(p.value(0)[0], 0.7);
}

TEST(AdamW, DecoupledDecayOnlyForFlaggedParameters) {
  model::ParamSet p;
  p.add("w", Tensor({1}, 2.0), true);
  p.add("pos", Tensor({1}, 2.0), false);
  auto st = OptimizerState::zeros_for(p);
  const Tensor grads[] = {Tensor({1}, 0.0), Tensor({1}, 0.0)};
  adamw_step(st, AdamWConfig{}, p, grads, 0.5);
  EXPECT_DOUBLE_EQ(p.value(0)[0], 2.0 - 0.5 * 0.04 * 2.0);
  EXPECT_EQ(p.value(1)[0], 2.0);
}

// Reference update rule, written out independently of the library.
TEST(AdamW, QuadraticMatchesReferenceAndConverges) {
  double x = 5.0, m = 0.0, v = 0.0;
  std::vector<double> ref;
  for (int t = 1; t <= 50; ++t) {
    const double g = 2.0 * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    ref.push_back(x);
  }

  model::ParamSet p = single(5.0);
  auto st = OptimizerState::zeros_for(p);
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<double> got;
  for (int t = 0; t < 50; ++t) {
    const Tensor grads[] = {Tensor({1}, 2.0 * p.value(0)[0])};
    adamw_step(st, cfg, p, grads, 0.1);
    got.push_back(p.value(0)[0]);
  }
  for (int t = 0; t < 50; ++t) EXPECT_NEAR(got[t], ref[t], 1e-12);
  for (int t = 5; t < 50; ++t) EXPECT_LT(std::abs(got[t]), std::abs(got[t - 1]));
  EXPECT_LT(std::abs(got.back()), 1.0);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  model::ParamSet p;
  p.add("backbone.ok", Tensor({2}, 1.0), true);
  p.add("head.bad", Tensor({2}, 1.0), true);
  auto st = OptimizerState::zeros_for(p);
  const Tensor grads[] = {Tensor({2}, 0.1), Tensor({2}, std::vector<double>{0.0, NAN})};
  try {
    adamw_step(st, AdamWConfig{}, p, grads, 0.1, 42);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("head.bad"), std::string::npos);
    EXPECT_EQ(e.step(), 42);
  }
  EXPECT_EQ(p.value(0)[0], 1.0);
  EXPECT_EQ(st.t, 0u);
}

TEST(ClipGradNorm, RescalesOnlyAboveThreshold) {
  std::vector<Tensor> g{Tensor({2}, std::vector<double>{3, 0}), Tensor({1}, 4.0)};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 10.0), 5.0);
  EXPECT_EQ(g[1][0], 4.0);
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0][0], 0.6, 1e-15);
  EXPECT_NEAR(g[1][0], 0.8, 1e-15);
}

TEST(Collapse, Examples) {
  EXPECT_EQ(collapse_metric(Tensor({3, 4}, 0.25)), 0.0);
  EXPECT_DOUBLE_EQ(collapse_metric(Tensor({2, 2}, std::vector<double>{1, 0, 0, 1})), 0.5);
  EXPECT_THROW(collapse_metric(Tensor({1, 4}, 0.25)), ValidationError);
}

TEST(Mask, SizeRangeAndDistinct) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    auto m = sample_mask(rng, 64, {0.1, 0.5});
    EXPECT_GE(m.size(), 6u);
    EXPECT_LE(m.size(), 32u);
    for (std::size_t i = 1; i < m.size(); ++i) EXPECT_LT(m[i - 1], m[i]);
    EXPECT_LT(m.back(), 64u);
  }
  EXPECT_EQ(sample_mask(rng, 4, {0.01, 0.01}).size(), 1u);
}

TEST(Config, UnknownKeysAndCrossChecks) {
  auto key_of = [](const nlohmann::json& j) {
    try {
      parse_run_config(j);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of({{"trian", nlohmann::json::object()}}), "trian");
  EXPECT_EQ(key_of({{"train", {{"lr", 0.1}}}}), "train.lr");
  EXPECT_EQ(key_of({{"train", {{"batch_size", 0}}}}), "train.batch_size");
  EXPECT_EQ(key_of({{"loss", {{"tau_t_end", 0.5}}}}), "loss.tau_t_end");
  EXPECT_EQ(key_of({{"augment", {{"local", {{"size", 24}}}}}}), "model.view_sizes");
  EXPECT_EQ(key_of({{"loss", {{"weights", {0, 0, 0}}}}}), "loss.weights");
  EXPECT_EQ(key_of(nlohmann::json::object()), "<none>");
  RunConfig c = test::tiny_run_config();
  EXPECT_EQ(run_config_to_json(parse_run_config(run_config_to_json(c))), run_config_to_json(c));
}

TEST(TrainStep, TeacherIsExactEmaOfUpdatedStudent) {
  RunConfig cfg = test::tiny_run_config();
  DatasetManifest m = test::phantom_manifest(8, 1);
  std::vector<GrayscaleImage> imgs;
  for (std::size_t i = 0; i < 4; ++i) imgs.push_back(m.load(i));
  const GrayscaleImage* batch[] = {&imgs[0], &imgs[1], &imgs[2], &imgs[3]};
  const std::size_t ids[] = {0, 1, 2, 3};
  TrainState st = init_state(cfg);
  for (int s = 0; s < 3; ++s) {
    model::ParamSet old_teacher = st.teacher;
    StepReport r = train_step(cfg, batch, ids, st, 10);
    EXPECT_EQ(r.teacher_grads, 0u);
    EXPECT_EQ(r.step, static_cast<std::size_t>(s));
    for (std::size_t i = 0; i < st.teacher.size(); ++i) {
      auto t = old_teacher.value(i).data();
      auto stu = st.student.value(i).data();
      auto now = st.teacher.value(i).data();
      for (std::size_t k = 0; k < t.size(); ++k) ASSERT_EQ(now[k], r.lambda * t[k] + (1.0 - r.lambda) * stu[k]);
    }
  }
  EXPECT_EQ(st.step, 3u);
}

TEST(TrainStep, ZeroLearningRateFreezesStudent) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.base_lr = 0.0;
  DatasetManifest m = test::phantom_manifest(4, 2);
  std::vector<GrayscaleImage> imgs;
  for (std::size_t i = 0; i < 4; ++i) imgs.push_back(m.load(i));
  const GrayscaleImage* batch[] = {&imgs[0], &imgs[1], &imgs[2], &imgs[3]};
  const std::size_t ids[] = {0, 1, 2, 3};
  TrainState st = init_state(cfg);
  // make the teacher differ from the student so the drift is visible
  for (std::size_t i = 0; i < st.teacher.size(); ++i) st.teacher.value(i) = test::random_tensor(st.teacher.value(i).shape(), i);
  model::ParamSet student0 = st.student, teacher0 = st.teacher;
  st.step = 5;
  StepReport r = train_step(cfg, batch, ids, st, 10);
  EXPECT_TRUE(st.student == student0);
  for (std::size_t i = 0; i < st.teacher.size(); ++i) {
    auto t0 = teacher0.value(i).data();
    auto s0 = student0.value(i).data();
    auto t1 = st.teacher.value(i).data();
    for (std::size_t k = 0; k < t0.size(); ++k) EXPECT_NEAR(t1[k] - t0[k], (1.0 - r.lambda) * (s0[k] - t0[k]), 1e-15);
  }
}

TEST(Pretrain, UnitMomentumLeavesTeacherBitIdentical) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.momentum = {1.0, 1.0};
  cfg.train.steps = 4;
  DatasetManifest m = test::phantom_manifest(8, 3);
  PretrainResult r = pretrain(cfg, m);
  EXPECT_TRUE(r.state.teacher == init_state(cfg).teacher);
  EXPECT_FALSE(r.state.student == init_state(cfg).student);
}

TEST(Pretrain, SmokeRunWritesOneCheckpointAndTenLogLines) {
  RunConfig cfg = test::tiny_run_config();
  DatasetManifest m = test::phantom_manifest(12, 4);
  auto dir = fresh_dir("smoke");
  PretrainResult r = pretrain(cfg, m, {dir, std::nullopt, {}});
  std::size_t ckpts = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) ckpts += e.path().extension() == ".ckpt" ? 1 : 0;
  EXPECT_EQ(ckpts, 1u);
  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"].get<std::size_t>(), lines);
    for (const char* k : {"L_image", "L_patch", "L_koleo", "L_total", "lr", "lambda", "tau_t"}) EXPECT_TRUE(j.contains(k)) << k;
    ++lines;
  }
  EXPECT_EQ(lines, 10u);
  EXPECT_EQ(r.final_checkpoint.filename(), "checkpoint_000010.ckpt");
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.steps = 3;
  PretrainResult r = pretrain(cfg, test::phantom_manifest(8, 5));
  const auto bytes = encode_archive(make_checkpoint(cfg, r.state, r.total_steps));
  LoadedCheckpoint back = restore_checkpoint(decode_archive(bytes));
  EXPECT_EQ(encode_archive(make_checkpoint(back.config, back.state, back.total_steps)), bytes);
  EXPECT_TRUE(back.state.student == r.state.student);
  EXPECT_TRUE(back.state.teacher == r.state.teacher);
  EXPECT_EQ(back.state.center.c, r.state.center.c);
  EXPECT_EQ(back.state.opt.t, 3u);
  EXPECT_EQ(back.state.step, 3u);
}

TEST(Checkpoint, ByteLayout) {
  TensorArchive a;
  a.header["k"] = 1;
  a.tensors.emplace_back("ab", Tensor({1, 2}, std::vector<double>{1.0, -2.0}));
  const auto b = encode_archive(a);
  ASSERT_GE(b.size(), 16u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "GSSLCKPT");
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i) hlen |= std::uint64_t{b[8 + i]} << (8 * i);
  const std::string header(b.begin() + 16, b.begin() + 16 + static_cast<long>(hlen));
  EXPECT_EQ(header, R"({"k":1,"tensors":[{"name":"ab","shape":[1,2]}]})");
  std::size_t pos = 16 + hlen;
  EXPECT_EQ(b[pos], 2u);       // name length
  EXPECT_EQ(b[pos + 8], 'a');  // name
  EXPECT_EQ(b[pos + 10], 2u);  // rank
  // 1.0 = 0x3FF0000000000000 little-endian
  const std::size_t first = pos + 10 + 8 + 16;
  EXPECT_EQ(b[first + 7], 0x3Fu);
  EXPECT_EQ(b[first + 6], 0xF0u);
  EXPECT_EQ(b.size(), first + 16);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  TensorArchive a;
  a.tensors.emplace_back("x", Tensor({3}, 1.5));
  auto b = encode_archive(a);
  auto truncated = b;
  truncated.resize(b.size() - 3);
  EXPECT_THROW(decode_archive(truncated), DecodeError);
  auto bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_archive(bad), DecodeError);
  auto trailing = b;
  trailing.push_back(0);
  EXPECT_THROW(decode_archive(trailing), DecodeError);
  EXPECT_EQ(decode_archive(b).at("x"), Tensor({3}, 1.5));
}

TEST(Pretrain, IdenticalRunsAreByteIdentical) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.steps = 4;
  DatasetManifest m = test::phantom_manifest(10, 6);
  auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  pretrain(cfg, m, {a, std::nullopt, {}});
  pretrain(cfg, m, {b, std::nullopt, {}});
  EXPECT_EQ(slurp(a / "train_log.jsonl"), slurp(b / "train_log.jsonl"));
  EXPECT_EQ(slurp(a / checkpoint_name(4)), slurp(b / checkpoint_name(4)));
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Pretrain, ResumeMatchesUninterruptedRun) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.checkpoint_every = 5;
  DatasetManifest m = test::phantom_manifest(10, 7);
  auto full = fresh_dir("full"), part = fresh_dir("part");
  pretrain(cfg, m, {full, std::nullopt, {}});
  pretrain(cfg, m, {part, std::nullopt, {}});
  // simulate an interruption after step 7: drop later log lines and the final checkpoint
  {
    std::ifstream in(part / "train_log.jsonl");
    std::string line, kept;
    for (int i = 0; i < 7 && std::getline(in, line); ++i) kept += line + "\n";
    in.close();
    std::ofstream(part / "train_log.jsonl", std::ios::trunc) << kept;
    std::filesystem::remove(part / checkpoint_name(10));
  }
  pretrain(cfg, m, {part, part / checkpoint_name(5), {}});
  EXPECT_EQ(slurp(full / "train_log.jsonl"), slurp(part / "train_log.jsonl"));
  EXPECT_EQ(slurp(full / checkpoint_name(10)), slurp(part / checkpoint_name(10)));
  std::filesystem::remove_all(full);
  std::filesystem::remove_all(part);
}

TEST(Pretrain, ResumeRejectsDifferentConfig) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.steps = 2;
  DatasetManifest m = test::phantom_manifest(8, 8);
  auto dir = fresh_dir("mismatch");
  pretrain(cfg, m, {dir, std::nullopt, {}});
  RunConfig other = cfg;
  other.train.base_lr = 1e-3;
  EXPECT_THROW(pretrain(other, m, {dir, dir / checkpoint_name(2), {}}), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Pretrain, NonFiniteLossRaisesTrainingError) {
  RunConfig cfg = test::tiny_run_config();
  cfg.train.steps = 2;
  DatasetManifest m = test::phantom_manifest(4, 9);
  TrainState st = init_state(cfg);
  st.student.value(st.student.index("head.fc1.weight")).data()[0] = NAN;
  std::vector<GrayscaleImage> imgs{m.load(0), m.load(1)};
  const GrayscaleImage* batch[] = {&imgs[0], &imgs[1]};
  const std::size_t ids[] = {0, 1};
  try {
    train_step(cfg, batch, ids, st, 2);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.step(), 0);
  }
}
