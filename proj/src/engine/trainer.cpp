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


#include "gssl/engine/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gssl/errors.hpp"

namespace gssl::engine {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;  // "init"

struct ImageTerms {
  std::vector<Tensor> teacher_cls_logits;
  ag::Var image_loss;
  ag::Var patch_loss;
  ag::Var student_patch_probs;
};

ImageTerms image_terms(const RunConfig& cfg, const model::BoundParams& student, const model::BoundParams& teacher,
                       const ssl::CenterState& center, double tau_t, const GrayscaleImage& img, Rng& rng) {
  const auto& m = cfg.model;
  const double tau_s = cfg.loss.temperatures.student;
  augment::AugmentedViewSet views = augment::multi_crop(img, cfg.augment, rng);
  const std::size_t n = m.tokens(cfg.augment.global.size);
  const std::vector<std::size_t> mask = sample_mask(rng, n, cfg.train.mask_ratio);

  ImageTerms out;
  std::vector<Tensor> teacher_probs;
  Tensor teacher_patch_probs;
  for (std::size_t g = 0; g < views.global_views.size(); ++g) {
    model::BackboneOutput t = model::encode(m, teacher, views.global_views[g]);
    Tensor logits = model::project(m, teacher, t.cls).value();
    teacher_probs.push_back(ssl::teacher_distribution(logits, center.c, tau_t));
    out.teacher_cls_logits.push_back(std::move(logits));
    if (g == 0) teacher_patch_probs = ssl::teacher_distribution(model::project(m, teacher, t.patches).value(), center.c, tau_t);
  }

  std::vector<ag::Var> student_log_probs;
  for (std::size_t g = 0; g < views.global_views.size(); ++g) {
    model::BackboneOutput s = g == 0 ? model::encode(m, student, views.global_views[g], mask)
                                     : model::encode(m, student, views.global_views[g]);
    student_log_probs.push_back(ag::log_softmax(model::project(m, student, s.cls), tau_s));
    if (g == 0) {
      ag::Var patch_logits = model::project(m, student, s.patches);
      out.patch_loss = ssl::ibot_patch_loss(teacher_patch_probs, ag::log_softmax(patch_logits, tau_s), mask);
      out.student_patch_probs = ag::softmax(patch_logits, tau_s);
    }
  }
  for (const auto& local : views.local_views) {
    model::BackboneOutput s = model::encode(m, student, local);
    student_log_probs.push_back(ag::log_softmax(model::project(m, student, s.cls), tau_s));
  }
  out.image_loss = ssl::dino_image_loss(teacher_probs, student_log_probs, cfg.loss.raw_sum);
  return out;
}

ag::Var mean_of(const std::vector<ag::Var>& terms) {
  ag::Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ag::add(total, terms[i]);
  return ag::scale(total, 1.0 / static_cast<double>(terms.size()));
}

std::vector<std::size_t> batch_for(const TrainConfig& t, std::size_t records, std::size_t step) {
  const std::size_t per_epoch = t.batches_per_epoch(records);
  return epoch_batches(records, t.batch_size, t.seed, step / per_epoch).at(step % per_epoch);
}

nlohmann::json comparable(const RunConfig& c) {
  nlohmann::json j = run_config_to_json(c);
  j.erase("manifest");
  j.erase("output_dir");
  return j;
}

void truncate_log(const std::filesystem::path& log, std::size_t keep_below) {
  if (!std::filesystem::exists(log)) return;
  std::ifstream in(log);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("step") || j["step"].get<std::size_t>() >= keep_below) continue;
    kept += line + "\n";
  }
  in.close();
  std::ofstream(log, std::ios::trunc) << kept;
}

}  // namespace

TrainState init_state(const RunConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.student = model::init_params(cfg.model, derive_seed({cfg.train.seed, kInitTag}));
  s.teacher = s.student;
  s.center = ssl::CenterState::zeros(cfg.model.prototypes, cfg.loss.center_momentum);
  s.opt = OptimizerState::zeros_for(s.student);
  return s;
}

std::string StepReport::log_line() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["L_image"] = L_image;
  j["L_patch"] = L_patch;
  j["L_koleo"] = L_koleo;
  j["L_total"] = L_total;
  j["lr"] = lr;
  j["lambda"] = lambda;
  j["tau_t"] = tau_t;
  return j.dump();
}

std::vector<std::size_t> sample_mask(Rng& rng, std::size_t n, augment::Range ratio) {
  if (n == 0) throw ParameterError("cannot mask an empty patch grid");
  const double r = rng.uniform(ratio.lo, ratio.hi);
  const std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(r * static_cast<double>(n))), 1, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[rng.uniform_int(i, n - 1)]);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

StepReport train_step(const RunConfig& cfg, std::span<const GrayscaleImage* const> images,
                      std::span<const std::size_t> ids, TrainState& state, std::size_t total_steps) {
  if (images.empty() || images.size() != ids.size()) throw ValidationError("batch must be nonempty with one id per image");
  const std::size_t step = state.step;
  StepReport rep;
  rep.step = step;
  rep.lr = lr_at(step, total_steps, cfg.train.warmup_frac, cfg.train.base_lr);
  rep.lambda = cfg.train.momentum.at(step, total_steps);
  rep.tau_t = cfg.loss.temperatures.teacher_at(step, total_steps);

  model::BoundParams student(state.student, true);
  model::BoundParams teacher(state.teacher, false);

  std::vector<ag::Var> image_losses, patch_losses, patch_probs;
  std::vector<ag::Var> teacher_logits;
  for (std::size_t b = 0; b < images.size(); ++b) {
    Rng rng(derive_seed({cfg.train.seed, step, ids[b]}));
    ImageTerms t = image_terms(cfg, student, teacher, state.center, rep.tau_t, *images[b], rng);
    image_losses.push_back(t.image_loss);
    patch_losses.push_back(t.patch_loss);
    patch_probs.push_back(t.student_patch_probs);
    for (auto& l : t.teacher_cls_logits) teacher_logits.push_back(ag::Var::constant(std::move(l)));
  }
  ag::Var l_image = mean_of(image_losses);
  ag::Var l_patch = mean_of(patch_losses);
  ag::Var l_koleo = ssl::koleo_loss(ag::concat_rows(patch_probs));
  ag::Var total = ssl::total_loss(cfg.loss.weights, l_image, l_patch, l_koleo);
  rep.L_image = l_image.value().item();
  rep.L_patch = l_patch.value().item();
  rep.L_koleo = l_koleo.value().item();
  rep.L_total = total.value().item();
  if (!std::isfinite(rep.L_total))
    throw TrainingError(static_cast<long>(step), "non-finite loss at step " + std::to_string(step));

  ag::backward(total);
  for (std::size_t i = 0; i < teacher.size(); ++i) rep.teacher_grads += teacher.at(i).has_grad() ? 1 : 0;

  std::vector<Tensor> grads;
  grads.reserve(student.size());
  for (std::size_t i = 0; i < student.size(); ++i)
    grads.push_back(student.at(i).has_grad() ? student.at(i).grad() : Tensor::zeros_like(state.student.value(i)));
  rep.grad_norm = clip_grad_norm(grads, cfg.train.grad_clip);
  adamw_step(state.opt, cfg.train.adamw, state.student, grads, rep.lr, step);
  ema_update(state.teacher, state.student, rep.lambda);
  ssl::update_center(state.center, ag::concat_rows(teacher_logits).value());
  state.step += 1;
  return rep;
}

double collapse_metric(const Tensor& probs) {
  if (probs.rank() != 2 || probs.rows() < 2) throw ValidationError("collapse metric needs at least two distributions");
  const std::size_t n = probs.rows(), k = probs.cols();
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += probs.at(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (probs.at(r, c) - mean) * (probs.at(r, c) - mean);
    total += std::sqrt(var / static_cast<double>(n));
  }
  return total / static_cast<double>(k);
}

Tensor teacher_class_distributions(const RunConfig& cfg, const TrainState& state,
                                   std::span<const GrayscaleImage> images, double tau_t) {
  model::BoundParams teacher(state.teacher, false);
  std::vector<ag::Var> rows;
  for (const auto& img : images) {
    GrayscaleImage view = augment::content_view(img, cfg.augment.theta, cfg.augment.global.size);
    rows.push_back(model::project(cfg.model, teacher, model::encode(cfg.model, teacher, view).cls));
  }
  return ssl::teacher_distribution(ag::concat_rows(rows).value(), state.center.c, tau_t);
}

TensorArchive make_checkpoint(const RunConfig& cfg, const TrainState& state, std::size_t total_steps) {
  TensorArchive a;
  a.header["format"] = "gssl-checkpoint";
  a.header["version"] = 1;
  a.header["config"] = run_config_to_json(cfg);
  a.header["step"] = state.step;
  a.header["total_steps"] = total_steps;
  a.header["optimizer_t"] = state.opt.t;
  for (std::size_t i = 0; i < state.student.size(); ++i) a.tensors.emplace_back("student." + state.student.name(i), state.student.value(i));
  for (std::size_t i = 0; i < state.teacher.size(); ++i) a.tensors.emplace_back("teacher." + state.teacher.name(i), state.teacher.value(i));
  a.tensors.emplace_back("center", state.center.c);
  for (std::size_t i = 0; i < state.student.size(); ++i) a.tensors.emplace_back("adam.m." + state.student.name(i), state.opt.m[i]);
  for (std::size_t i = 0; i < state.student.size(); ++i) a.tensors.emplace_back("adam.v." + state.student.name(i), state.opt.v[i]);
  return a;
}

LoadedCheckpoint restore_checkpoint(const TensorArchive& a) {
  if (a.header.value("format", std::string()) != "gssl-checkpoint" || a.header.value("version", 0) != 1)
    throw DecodeError("unsupported checkpoint format");
  LoadedCheckpoint out;
  try {
    out.config = parse_run_config(a.header.at("config"));
    out.state.step = a.header.at("step").get<std::size_t>();
    out.total_steps = a.header.at("total_steps").get<std::size_t>();
    out.state.opt.t = a.header.at("optimizer_t").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("checkpoint header: ") + e.what());
  }
  TrainState layout = init_state(out.config);
  auto fill = [&](model::ParamSet& dst, const std::string& prefix) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const Tensor& t = a.at(prefix + dst.name(i));
      if (t.shape() != dst.value(i).shape()) throw DecodeError("checkpoint tensor " + prefix + dst.name(i) + " has the wrong shape");
      dst.value(i) = t;
    }
  };
  out.state.student = layout.student;
  out.state.teacher = layout.student;
  fill(out.state.student, "student.");
  fill(out.state.teacher, "teacher.");
  out.state.center = ssl::CenterState{a.at("center"), out.config.loss.center_momentum};
  if (out.state.center.c.shape() != Shape{out.config.model.prototypes}) throw DecodeError("checkpoint center has the wrong shape");
  model::ParamSet m = layout.student, v = layout.student;
  fill(m, "adam.m.");
  fill(v, "adam.v.");
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.state.opt.m.push_back(m.value(i));
    out.state.opt.v.push_back(v.value(i));
  }
  if (a.tensors.size() != 4 * layout.student.size() + 1) throw DecodeError("checkpoint has unexpected tensors");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  LoadedCheckpoint out;
  try {
    out = restore_checkpoint(decode_archive(bytes));
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
  out.id = hex64(fnv1a(bytes.data(), bytes.size()));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& cfg, const TrainState& state,
                     std::size_t total_steps) {
  save_archive(path, make_checkpoint(cfg, state, total_steps));
}

std::filesystem::path checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint_%06zu.ckpt", step);
  return buf;
}

PretrainResult pretrain(const RunConfig& cfg, const DatasetManifest& manifest, const PretrainOptions& opts) {
  cfg.validate();
  manifest.validate();
  const std::size_t n = manifest.records.size();
  PretrainResult res;
  res.total_steps = cfg.train.total_steps(n);

  if (opts.resume) {
    LoadedCheckpoint ck = load_checkpoint(*opts.resume);
    if (comparable(ck.config) != comparable(cfg))
      throw ConfigError("resume", "checkpoint was written with a different configuration");
    if (ck.state.step > res.total_steps) throw ConfigError("resume", "checkpoint is past the end of the schedule");
    res.state = std::move(ck.state);
  } else {
    res.state = init_state(cfg);
  }

  std::vector<GrayscaleImage> images;
  images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) images.push_back(manifest.load(i));

  std::ofstream log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto log_path = opts.out_dir / "train_log.jsonl";
    if (opts.resume) truncate_log(log_path, res.state.step);
    log.open(log_path, opts.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw Error("cannot write " + log_path.string());
  }

  while (res.state.step < res.total_steps) {
    const auto ids = batch_for(cfg.train, n, res.state.step);
    std::vector<const GrayscaleImage*> batch;
    for (std::size_t id : ids) batch.push_back(&images[id]);
    StepReport rep = train_step(cfg, batch, ids, res.state, res.total_steps);
    if (log.is_open()) log << rep.log_line() << '\n' << std::flush;
    if (opts.on_step) opts.on_step(rep);
    res.reports.push_back(rep);
    const bool last = res.state.step == res.total_steps;
    const bool cadence = cfg.train.checkpoint_every > 0 && res.state.step % cfg.train.checkpoint_every == 0;
    if (!opts.out_dir.empty() && (last || cadence)) {
      res.final_checkpoint = opts.out_dir / checkpoint_name(res.state.step);
      save_checkpoint(res.final_checkpoint, cfg, res.state, res.total_steps);
    }
  }

  const std::size_t probe = std::min<std::size_t>(n, 64);
  if (probe >= 2) {
    const double tau = cfg.loss.temperatures.teacher_at(res.total_steps, res.total_steps);
    res.collapse = collapse_metric(
        teacher_class_distributions(cfg, res.state, std::span<const GrayscaleImage>(images.data(), probe), tau));
  }
  if (!opts.out_dir.empty()) {
    nlohmann::ordered_json summary;
    summary["steps"] = res.total_steps;
    summary["collapse"] = res.collapse;
    summary["checkpoint"] = res.final_checkpoint.filename().string();
    std::ofstream(opts.out_dir / "summary.json") << summary.dump(2) << '\n';
  }
  return res;
}

}  // namespace gssl::engine
