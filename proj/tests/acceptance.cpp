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


// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gssl/augment/guided_crop.hpp"
#include "gssl/data/dataset.hpp"
#include "gssl/engine/trainer.hpp"
#include "gssl/numerics/autograd.hpp"
#include "gssl/probe/probe.hpp"
#include "gssl/ssl/objectives.hpp"
#include "gssl/verify/gradcheck_suite.hpp"

namespace fs = std::filesystem;
using namespace gssl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

DatasetManifest phantoms(std::size_t count, std::uint64_t seed) {
  DatasetManifest m;
  m.seed = seed;
  PhantomTemplate tmpl;
  Rng rng(derive_seed({seed, 0x6163636570}));
  for (std::size_t i = 0; i < count; ++i) {
    ManifestRecord r;
    PhantomSpec spec = sample_phantom_spec(tmpl, rng);
    r.label = spec.label();
    r.source = PhantomSource{spec, std::nullopt};
    m.records.push_back(std::move(r));
  }
  return m;
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return read_file_bytes(p); }

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gssl_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Shared by criteria 5, 6 and 8.
struct DeskRun {
  engine::RunConfig cfg;
  DatasetManifest corpus = phantoms(500, 2024);
  engine::PretrainResult result;
  fs::path dir;
  bool done = false;
};

DeskRun& desk_run() {
  static DeskRun run;
  if (!run.done) {
    run.cfg.train.seed = 2024;
    run.cfg.train.steps = 200;
    run.dir = scratch("desk");
    run.result = engine::pretrain(run.cfg, run.corpus, {run.dir, std::nullopt, {}});
    run.done = true;
  }
  return run;
}

Outcome gradient_oracle() {
  const auto results = verify::run_gradcheck_suite(verify::SuiteOptions{});
  std::size_t ops = 0, model = 0, losses = 0, failed = 0;
  double worst = 0;
  std::string worst_name;
  for (const auto& r : results) {
    if (r.name.rfind("model:", 0) == 0) ++model;
    else if (r.name.rfind("loss:", 0) == 0) ++losses;
    else ++ops;
    failed += r.passed ? 0 : 1;
    if (r.max_rel_error > worst) worst = r.max_rel_error, worst_name = r.name;
  }
  const bool pass = failed == 0 && ops > 0 && model > 0 && losses == 3;
  return {pass, fmt("%zu ops, %zu backbone tensors, %zu losses x 20 seeds; worst rel. error %.2e (%s); %zu failing",
                    ops, model, losses, worst, worst_name.c_str(), failed)};
}

Outcome crop_containment() {
  augment::MultiCropConfig cfg;
  PhantomTemplate tmpl;
  Rng spec_rng(77);
  std::size_t crops = 0, outside_region = 0, outside_image = 0, fallbacks = 0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const Phantom ph = generate_phantom(sample_phantom_spec(tmpl, spec_rng), derive_seed({77, k}));
    Rng rng(derive_seed({78, k}));
    const auto views = augment::multi_crop(ph.image, cfg, rng);
    for (const auto* group : {&views.global_crops, &views.local_crops}) {
      for (const auto& c : *group) {
        ++crops;
        outside_region += views.sampling_region.contains(c.i, c.j) ? 0 : 1;
        outside_image += (c.i + c.h <= ph.image.height() && c.j + c.w <= ph.image.width()) ? 0 : 1;
        fallbacks += c.fallback ? 1 : 0;
      }
    }
  }
  const bool pass = crops == 10000 && outside_region == 0 && outside_image == 0 && fallbacks == 0;
  return {pass, fmt("%zu crops on 1000 phantoms; start outside B' %zu, rectangle outside image %zu, fallbacks %zu",
                    crops, outside_region, outside_image, fallbacks)};
}

Outcome guidance_effectiveness() {
  // Centered round body covering a quarter of the 64x64 canvas.
  augment::MultiCropConfig cfg;
  const double radius = std::sqrt(0.25 * 64.0 * 64.0 / std::numbers::pi);
  double guided = 0, unguided = 0, fraction = 0;
  const std::size_t images = 10, per_image = 1000;
  for (std::size_t k = 0; k < images; ++k) {
    PhantomSpec spec;
    spec.body = {32, 32, radius, radius, 0.55};
    spec.lungs = {Ellipse{25, 32, 4, 9, 0.2}, Ellipse{39, 32, 4, 9, 0.2}};
    const Phantom ph = generate_phantom(spec, derive_seed({91, k}));
    const auto r = augment::compare_guidance(ph.image, cfg, cfg.global, per_image, derive_seed({92, k}));
    guided += r.guided / images;
    unguided += r.unguided / images;
    fraction += r.content_fraction / images;
  }
  const double ratio = guided / unguided;
  return {ratio >= 2.0, fmt("content %.3f of canvas; %zu global crops; overlap guided %.4f vs unguided %.4f, "
                            "ratio %.3f (need >= 2)",
                            fraction, images * per_image, guided, unguided, ratio)};
}

Outcome ema_asymmetry() {
  engine::RunConfig cfg;
  cfg.train.batch_size = 4;
  const std::size_t total = 50;
  const DatasetManifest m = phantoms(40, 5);
  std::vector<GrayscaleImage> images;
  for (std::size_t i = 0; i < m.records.size(); ++i) images.push_back(m.load(i));
  engine::TrainState st = engine::init_state(cfg);
  std::vector<Tensor> expected;
  for (std::size_t i = 0; i < st.teacher.size(); ++i) expected.push_back(st.teacher.value(i));
  std::size_t teacher_grads = 0, mismatched = 0;
  for (std::size_t step = 0; step < total; ++step) {
    const auto batch = epoch_batches(m.records.size(), 4, 5, step / 10).at(step % 10);
    std::vector<const GrayscaleImage*> ptr;
    for (auto i : batch) ptr.push_back(&images[i]);
    const auto rep = engine::train_step(cfg, ptr, batch, st, total);
    teacher_grads += rep.teacher_grads;
    const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total);
    const double lambda = 1.0 - (1.0 - 0.996) * (1.0 + std::cos(phase)) / 2.0;
    mismatched += lambda == rep.lambda ? 0 : 1;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      auto t = expected[i].data();
      const auto s = st.student.value(i).data();
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = lambda * t[k] + (1.0 - lambda) * s[k];
    }
  }
  std::size_t differing = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) differing += expected[i] == st.teacher.value(i) ? 0 : 1;
  const bool endpoints = engine::momentum_at(0, total) == 0.996 && engine::momentum_at(total, total) == 1.0;
  const bool pass = differing == 0 && mismatched == 0 && teacher_grads == 0 && endpoints;
  return {pass, fmt("50 steps: %zu of %zu teacher tensors differ from the recomputed recursion; teacher gradients "
                    "%zu; momentum(0)=%.17g momentum(T)=%.17g",
                    differing, expected.size(), teacher_grads, engine::momentum_at(0, total),
                    engine::momentum_at(total, total))};
}

Outcome training_sanity() {
  const DeskRun& run = desk_run();
  const auto& reps = run.result.reports;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    first += reps[i].L_total / 20;
    last += reps[reps.size() - 1 - i].L_total / 20;
  }
  const bool pass = reps.size() == 200 && last < first && run.result.collapse > 1e-3;
  return {pass, fmt("200 steps on 500 phantoms: mean L_total first 20 %.4f, last 20 %.4f; collapse %.3e (need > 1e-3)",
                    first, last, run.result.collapse)};
}

Outcome probing_protocol() {
  const DeskRun& run = desk_run();
  const DatasetManifest eval = phantoms(400, 4242);
  const engine::TrainState random_init = engine::init_state(run.cfg);
  auto measure = [&](const engine::TrainState& state, double& acc, double& auc) {
    const auto train_f = probe::extract_features(run.cfg, state, run.corpus);
    const auto eval_f = probe::extract_features(run.cfg, state, eval);
    const auto p = probe::train_linear_probe(train_f);
    acc = probe::evaluate(p, eval_f, "accuracy", 0).value;
    auc = probe::evaluate(p, eval_f, "auroc", 0).value;
  };
  double acc_t, auc_t, acc_r, auc_r;
  measure(run.result.state, acc_t, auc_t);
  measure(random_init, acc_r, auc_r);
  const bool pass = acc_t - acc_r >= 0.10 && auc_t - auc_r >= 0.05;
  return {pass, fmt("N=400 eval: trained acc %.4f AUROC %.4f; random-init acc %.4f AUROC %.4f; gaps %+.4f / %+.4f "
                    "(need >= 0.10 / 0.05)",
                    acc_t, auc_t, acc_r, auc_r, acc_t - acc_r, auc_t - auc_r)};
}

Outcome metric_correctness() {
  std::size_t mismatches = 0, variant = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed({seed, 7}));
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 80));
    std::vector<double> s(n), t(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, 15)) / 4.0;
      y[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1;
          wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    mismatches += probe::auroc(s, y) == wins / pairs ? 0 : 1;
    const double a = rng.uniform(0.2, 3.0), b = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(a * s[i]) + b + std::tanh(s[i]);
    variant += probe::auroc(t, y) == probe::auroc(s, y) ? 0 : 1;
  }
  return {mismatches == 0 && variant == 0,
          fmt("100 sets vs pair enumeration: %zu mismatches; 100 monotone transforms: %zu changed", mismatches,
              variant)};
}

Outcome determinism() {
  DeskRun& run = desk_run();
  engine::RunConfig cfg = run.cfg;
  cfg.train.steps = 10;
  cfg.train.checkpoint_every = 5;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  engine::pretrain(cfg, run.corpus, {a, std::nullopt, {}});
  engine::pretrain(cfg, run.corpus, {b, std::nullopt, {}});
  std::size_t compared = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++compared;
    differing += bytes_of(e.path()) == bytes_of(b / e.path().filename()) ? 0 : 1;
  }
  const fs::path ck = run.result.final_checkpoint;
  const fs::path again = run.dir / "resaved.ckpt";
  const auto loaded = engine::load_checkpoint(ck);
  engine::save_checkpoint(again, loaded.config, loaded.state, loaded.total_steps);
  const bool round_trip = bytes_of(ck) == bytes_of(again);
  const bool pass = compared >= 4 && differing == 0 && round_trip;
  return {pass, fmt("two runs: %zu files compared, %zu differ; save-load-save of the desk checkpoint %s", compared,
                    differing, round_trip ? "byte-identical" : "differs")};
}

Outcome loss_identities() {
  const std::size_t K = 256;
  const Tensor uniform({1, K}, 1.0 / K);
  const Tensor log_uniform({1, K}, -std::log(static_cast<double>(K)));
  const Tensor teacher[] = {uniform};
  const ag::Var student[] = {ag::Var::constant(log_uniform), ag::Var::constant(log_uniform)};
  const double l_image = ssl::dino_image_loss(teacher, student).value().item();
  Tensor onehot({1, K}, 0.0);
  onehot.at(0, 3) = 1.0;
  const double k_uniform = ssl::koleo_loss(ag::Var::constant(uniform)).value().item();
  const double k_onehot = ssl::koleo_loss(ag::Var::constant(onehot)).value().item();
  const double lnk = std::log(static_cast<double>(K));
  std::size_t nonlinear = 0;
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const ssl::LossWeights w{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
    const double a = rng.uniform(0, 10), b = rng.uniform(0, 10), c = rng.uniform(0, 10), d = rng.uniform(-5, 5);
    const double base = ssl::total_loss(w, a, b, c);
    // linear in each component separately
    const bool ok = std::abs(ssl::total_loss(w, a + d, b, c) - base - w.image * d) <= 1e-12 &&
                    std::abs(ssl::total_loss(w, a, b + d, c) - base - w.patch * d) <= 1e-12 &&
                    std::abs(ssl::total_loss(w, a, b, c + d) - base - w.koleo * d) <= 1e-12;
    nonlinear += ok ? 0 : 1;
  }
  const bool pass = std::abs(l_image - lnk) <= 1e-12 && std::abs(k_uniform) <= 1e-12 &&
                    std::abs(k_onehot - lnk) <= 1e-12 && nonlinear == 0;
  return {pass, fmt("L_image(uniform) - ln K = %.1e; koleo(uniform) = %.1e; koleo(one-hot) - ln K = %.1e; "
                    "%d of 100 weightings nonlinear",
                    l_image - lnk, k_uniform, k_onehot - lnk, static_cast<int>(nonlinear))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"crop containment", crop_containment},
      {"guidance effectiveness", guidance_effectiveness},
      {"EMA teacher asymmetry", ema_asymmetry},
      {"training sanity", training_sanity},
      {"probing protocol", probing_protocol},
      {"metric correctness", metric_correctness},
      {"determinism and persistence", determinism},
      {"loss identities", loss_identities},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
