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


#include "gssl/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gssl/augment/guided_crop.hpp"
#include "gssl/data/dataset.hpp"
#include "gssl/engine/trainer.hpp"
#include "gssl/errors.hpp"
#include "gssl/json_util.hpp"
#include "gssl/probe/probe.hpp"
#include "gssl/verify/gradcheck_suite.hpp"

namespace gssl::cli {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError(key, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(key, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Maps library errors onto the exit-code contract.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: invalid configuration (" << (e.key().empty() ? std::string("?") : e.key()) << "): " << e.what() << '\n';
    return kInputError;
  } catch (const TrainingError& e) {
    err << "error: numerical divergence at step " << e.step() << ": " << e.what() << '\n';
    return kDiverged;
  } catch (const DecodeError& e) {
    err << "error: cannot decode input: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

DatasetManifest subset(const DatasetManifest& m, const std::vector<std::size_t>& idx) {
  DatasetManifest s;
  s.seed = m.seed;
  s.base_dir = m.base_dir;
  for (std::size_t i : idx) {
    ManifestRecord r = m.records[i];
    // pin derived phantom seeds to the original index
    if (auto* ph = std::get_if<PhantomSource>(&r.source); ph && !ph->seed) ph->seed = derive_seed({m.seed, i});
    s.records.push_back(std::move(r));
  }
  return s;
}

bool env_deterministic() {
  const char* v = std::getenv(kDeterministicEnv);
  return v != nullptr && std::string(v) != "0";
}

}  // namespace

int cmd_pretrain(const PretrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    engine::RunConfig cfg = engine::load_run_config(a.config);
    if (cfg.manifest.empty()) throw ConfigError("manifest", "no manifest given");
    fs::path manifest = cfg.manifest;
    if (manifest.is_relative()) manifest = a.config.parent_path() / manifest;
    DatasetManifest m = load_manifest(manifest);
    fs::path dir = !a.out.empty() ? a.out : fs::path(cfg.output_dir);
    if (dir.empty()) throw ConfigError("output_dir", "no output directory given");
    // Execution is single-threaded, so deterministic mode changes nothing; it is reported for the record.
    const bool deterministic = a.deterministic || env_deterministic();
    engine::PretrainOptions opts{dir, a.resume, {}};
    engine::PretrainResult r = engine::pretrain(cfg, m, opts);
    out << "trained " << r.total_steps << " steps (" << r.reports.size() << " in this run"
        << (deterministic ? ", deterministic" : "") << "); collapse " << r.collapse << "; checkpoint "
        << r.final_checkpoint.string() << '\n';
    return kOk;
  });
}

int cmd_probe(const ProbeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    engine::LoadedCheckpoint ck = engine::load_checkpoint(a.ckpt);
    DatasetManifest eval_m = load_manifest(a.manifest);
    DatasetManifest train_m;
    if (a.train_manifest) {
      train_m = load_manifest(*a.train_manifest);
    } else {
      if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0))
        throw ConfigError("train-fraction", "must lie in (0, 1)");
      const std::size_t n = eval_m.records.size();
      auto order = epoch_batches(n, n, a.seed, 0).front();
      const std::size_t cut = static_cast<std::size_t>(std::lround(a.train_fraction * static_cast<double>(n)));
      if (cut == 0 || cut == n) throw ValidationError("manifest too small to split into train and eval sets");
      std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<long>(cut));
      std::vector<std::size_t> ev(order.begin() + static_cast<long>(cut), order.end());
      train_m = subset(eval_m, tr);
      eval_m = subset(eval_m, ev);
    }
    probe::FrozenFeatureSet train_f = probe::extract_features(ck, train_m);
    probe::FrozenFeatureSet eval_f = probe::extract_features(ck, eval_m);
    probe::LinearProbe p = probe::train_linear_probe(train_f);
    probe::MetricReport rep = probe::evaluate(p, eval_f, a.metric, a.seed);
    write_text(a.out, rep.to_json().dump(2) + "\n");
    out << rep.metric << " = " << rep.value << " (n=" << rep.n << ", classes=" << rep.classes << ")\n";
    return kOk;
  });
}

int cmd_augment_preview(const AugmentPreviewArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    augment::MultiCropConfig cfg;
    if (a.config) cfg = read_json(*a.config, "config").get<augment::MultiCropConfig>();
    cfg.validate();
    GrayscaleImage img = load_image(a.image);
    img.validate();
    Rng rng(a.seed);
    augment::AugmentedViewSet views = augment::multi_crop(img, cfg, rng);

    nlohmann::ordered_json side;
    side["image"] = a.image.filename().string();
    side["seed"] = a.seed;
    side["theta"] = cfg.theta;
    side["B"] = views.content_box ? nlohmann::ordered_json(augment::box_to_json(*views.content_box)) : nlohmann::ordered_json(nullptr);
    side["B_prime"] = nlohmann::ordered_json(augment::box_to_json(views.sampling_region));
    side["views"] = nlohmann::json::array();
    fs::create_directories(a.out);
    auto emit = [&](const std::string& kind, std::size_t k, const GrayscaleImage& v, const augment::CropSample& c,
                    bool flipped) {
      const std::string name = kind + "_" + std::to_string(k) + ".pgm";
      write_pgm(a.out / name, v);
      nlohmann::json j = augment::crop_to_json(c);
      j["file"] = name;
      j["kind"] = kind;
      j["flipped"] = flipped;
      side["views"].push_back(nlohmann::ordered_json(j));
    };
    for (std::size_t k = 0; k < views.global_views.size(); ++k)
      emit("global", k, views.global_views[k], views.global_crops[k], views.global_flipped[k]);
    for (std::size_t k = 0; k < views.local_views.size(); ++k)
      emit("local", k, views.local_views[k], views.local_crops[k], views.local_flipped[k]);
    write_text(a.out / "views.json", side.dump(2) + "\n");
    out << "wrote " << side["views"].size() << " views to " << a.out.string() << '\n';
    return kOk;
  });
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    verify::SuiteOptions opts;
    opts.seeds = a.seeds;
    opts.base_seed = a.seed;
    if (a.config) {
      const nlohmann::json j = read_json(*a.config, "config");
      json_util::reject_unknown_keys(j, {"seeds", "seed", "ops", "backbone", "losses", "eps", "tolerance"}, "");
      json_util::read_optional(j, "seeds", opts.seeds, "");
      json_util::read_optional(j, "seed", opts.base_seed, "");
      json_util::read_optional(j, "ops", opts.ops, "");
      json_util::read_optional(j, "backbone", opts.backbone, "");
      json_util::read_optional(j, "losses", opts.losses, "");
      json_util::read_optional(j, "eps", opts.eps, "");
      json_util::read_optional(j, "tolerance", opts.tolerance, "");
    }
    if (opts.seeds == 0) throw ConfigError("seeds", "must be positive");
    ag::set_gradient_fault(a.fault);
    std::vector<GradCheckResult> results;
    try {
      results = verify::run_gradcheck_suite(opts);
    } catch (...) {
      ag::set_gradient_fault("");
      throw;
    }
    ag::set_gradient_fault("");

    nlohmann::ordered_json report;
    report["seeds"] = opts.seeds;
    report["tolerance"] = opts.tolerance;
    report["eps"] = opts.eps;
    report["checks"] = nlohmann::json::array();
    bool ok = true;
    for (const auto& r : results) {
      ok = ok && r.passed;
      report["checks"].push_back({{"name", r.name}, {"max_rel_error", r.max_rel_error}, {"passed", r.passed}});
      if (!r.passed) err << "FAIL " << r.name << " max relative error " << r.max_rel_error << '\n';
    }
    report["passed"] = ok;
    if (a.out) write_text(*a.out, report.dump(2) + "\n");
    else out << report.dump(2) << '\n';
    out << (ok ? "all " : "not all ") << results.size() << " gradient checks passed\n";
    return ok ? kOk : kCheckFailed;
  });
}

int cmd_phantom_gen(const PhantomGenArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    PhantomTemplate tmpl;
    if (a.spec_template) tmpl = read_json(*a.spec_template, "template").get<PhantomTemplate>();
    tmpl.validate();
    if (a.count == 0) throw ConfigError("count", "must be positive");
    fs::create_directories(a.out);
    DatasetManifest m;
    m.seed = a.seed;
    Rng rng(derive_seed({a.seed, 0x7068616e746f6dULL}));
    std::size_t positives = 0;
    for (std::size_t i = 0; i < a.count; ++i) {
      PhantomSpec spec = sample_phantom_spec(tmpl, rng);
      Phantom ph = generate_phantom(spec, derive_seed({a.seed, i}));
      char name[32];
      std::snprintf(name, sizeof name, "phantom_%05zu.pgm", i);
      write_pgm(a.out / name, ph.image);
      ManifestRecord r;
      r.source = fs::path(name);
      r.label = ph.label;
      r.box = ph.box;
      positives += ph.label == 1 ? 1 : 0;
      m.records.push_back(std::move(r));
    }
    write_text(a.out / "manifest.json", manifest_to_json(m).dump(2) + "\n");
    out << "wrote " << a.count << " phantoms (" << positives << " with nodules) to " << a.out.string() << '\n';
    return kOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content-guided self-distillation for grayscale images"};
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* p = app.add_subcommand("pretrain", "Self-supervised pre-training");
  p->add_option("--config", pre.config, "Run configuration (JSON)")->required();
  p->add_option("--out", pre.out, "Output directory for checkpoints and the training log");
  p->add_option("--resume", pre.resume, "Checkpoint to resume from");
  p->add_flag("--deterministic", pre.deterministic, "Force deterministic mode");

  ProbeArgs pr;
  auto* q = app.add_subcommand("probe", "Linear probe on frozen features");
  q->add_option("--ckpt", pr.ckpt, "Checkpoint")->required();
  q->add_option("--manifest", pr.manifest, "Labeled manifest (evaluation set)")->required();
  q->add_option("--train-manifest", pr.train_manifest, "Labeled manifest for probe training");
  q->add_option("--metric", pr.metric, "auroc or accuracy")->check(CLI::IsMember({"auroc", "accuracy"}));
  q->add_option("--out", pr.out, "Report path (JSON)")->required();
  q->add_option("--seed", pr.seed, "Split seed");
  q->add_option("--train-fraction", pr.train_fraction, "Share of --manifest used for training when no --train-manifest");

  AugmentPreviewArgs ap;
  auto* v = app.add_subcommand("augment-preview", "Write the multi-crop views of one image");
  v->add_option("--image", ap.image, "PGM or PNG image")->required();
  v->add_option("--config", ap.config, "Augmentation configuration (JSON)");
  v->add_option("--seed", ap.seed, "Sampling seed");
  v->add_option("--out", ap.out, "Output directory")->required();

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference checks of ops, backbone and losses");
  g->add_option("--config", gc.config, "Suite options (JSON)");
  g->add_option("--seed", gc.seed, "First seed");
  g->add_option("--seeds", gc.seeds, "Number of seeds");
  g->add_option("--out", gc.out, "Report path (JSON); stdout otherwise");
  g->add_option("--fault", gc.fault, "Corrupt the backward pass of this op (testing)")->group("");

  PhantomGenArgs pg;
  auto* f = app.add_subcommand("phantom-gen", "Render a labeled phantom corpus");
  f->add_option("--template", pg.spec_template, "Phantom template (JSON)");
  f->add_option("--count", pg.count, "Number of images");
  f->add_option("--seed", pg.seed, "Corpus seed");
  f->add_option("--out", pg.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (p->parsed()) return cmd_pretrain(pre, out, err);
  if (q->parsed()) return cmd_probe(pr, out, err);
  if (v->parsed()) return cmd_augment_preview(ap, out, err);
  if (g->parsed()) return cmd_gradcheck(gc, out, err);
  return cmd_phantom_gen(pg, out, err);
}

}  // namespace gssl::cli
