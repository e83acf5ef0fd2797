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


#include "gssl/probe/probe.hpp"

#include <algorithm>
#include <cmath>

#include "gssl/errors.hpp"
#include "gssl/numerics/autograd.hpp"

namespace gssl::probe {

namespace {

std::uint64_t manifest_hash(const DatasetManifest& m) {
  const std::string text = manifest_to_json(m).dump();
  return engine::fnv1a(text.data(), text.size());
}

Tensor standardized(const LinearProbe& p, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != p.mean.size())
    throw DimensionError("probe expects " + std::to_string(p.mean.size()) + " features, got " + shape_string(x.shape()));
  Tensor out = x;
  const std::size_t d = x.cols();
  auto v = out.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - p.mean[i % d]) / p.scale[i % d];
  return out;
}

}  // namespace

std::uint64_t FrozenFeatureSet::compute_hash() const {
  std::uint64_t h = engine::fnv1a(features);
  for (int l : labels) {
    const std::int64_t v = l;
    h = engine::fnv1a(&v, sizeof v, h);
  }
  return h;
}

void FrozenFeatureSet::verify() const {
  if (compute_hash() != content_hash) throw ValidationError("frozen features were modified after extraction");
}

int FrozenFeatureSet::class_count() const {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

FrozenFeatureSet extract_features(const engine::RunConfig& cfg, const engine::TrainState& state,
                                  const DatasetManifest& manifest, const std::string& checkpoint_id) {
  manifest.validate();
  model::BoundParams teacher(state.teacher, false);
  FrozenFeatureSet out;
  const std::size_t n = manifest.records.size();
  out.features = Tensor({n, cfg.model.dim});
  for (std::size_t i = 0; i < n; ++i) {
    if (!manifest.records[i].label) throw ValidationError("record " + std::to_string(i) + " has no label");
    out.labels.push_back(*manifest.records[i].label);
    GrayscaleImage view = augment::content_view(manifest.load(i), cfg.augment.theta, cfg.augment.global.size);
    const Tensor cls = model::encode(cfg.model, teacher, view).cls.value();
    std::copy(cls.data().begin(), cls.data().end(), out.features.data().begin() + i * cfg.model.dim);
  }
  out.checkpoint_id = checkpoint_id;
  out.manifest_hash = engine::hex64(manifest_hash(manifest));
  out.content_hash = out.compute_hash();
  return out;
}

FrozenFeatureSet extract_features(const engine::LoadedCheckpoint& ckpt, const DatasetManifest& manifest) {
  return extract_features(ckpt.config, ckpt.state, manifest, ckpt.id);
}

Tensor LinearProbe::logits(const Tensor& features) const {
  ag::Var x = ag::Var::constant(standardized(*this, features));
  return ag::add_rowwise(ag::matmul(x, ag::Var::constant(weight)), ag::Var::constant(bias)).value();
}

Tensor LinearProbe::probabilities(const Tensor& features) const {
  return ag::softmax(ag::Var::constant(logits(features))).value();
}

std::vector<int> LinearProbe::predict(const Tensor& features) const {
  const Tensor z = logits(features);
  std::vector<int> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.cols(); ++c)
      if (z.at(r, c) > z.at(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

LinearProbe train_linear_probe(const FrozenFeatureSet& data, const ProbeConfig& cfg) {
  data.verify();
  const std::size_t n = data.features.rows(), d = data.features.cols();
  if (data.labels.size() != n) throw ValidationError("feature and label counts differ");
  const int classes = data.class_count();
  std::vector<bool> seen(static_cast<std::size_t>(std::max(classes, 0)), false);
  for (int l : data.labels) {
    if (l < 0) throw ValidationError("labels must be nonnegative");
    seen[static_cast<std::size_t>(l)] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) throw ValidationError("probe training needs at least two classes");

  const std::size_t c = static_cast<std::size_t>(classes);
  LinearProbe p;
  p.config = cfg;
  p.weight = Tensor({d, c}, 0.0);
  p.bias = Tensor({c}, 0.0);
  p.mean = Tensor({d}, 0.0);
  p.scale = Tensor({d}, 1.0);
  if (cfg.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double mu = 0.0, var = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += data.features.at(i, j);
      mu /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) var += (data.features.at(i, j) - mu) * (data.features.at(i, j) - mu);
      p.mean[j] = mu;
      p.scale[j] = std::max(std::sqrt(var / static_cast<double>(n)), 1e-12);
    }
  }

  Tensor onehot({n, c}, 0.0);
  for (std::size_t i = 0; i < n; ++i) onehot.at(i, static_cast<std::size_t>(data.labels[i])) = 1.0;
  const ag::Var x = ag::Var::constant(standardized(p, data.features));
  const ag::Var target = ag::Var::constant(onehot);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    ag::Var w = ag::Var::parameter(p.weight), b = ag::Var::parameter(p.bias);
    ag::Var logp = ag::log_softmax(ag::add_rowwise(ag::matmul(x, w), b));
    ag::Var loss = ag::scale(ag::sum(ag::mul(target, logp)), -1.0 / static_cast<double>(n));
    ag::backward(loss);
    auto wd = p.weight.data();
    auto gw = w.grad().data();
    for (std::size_t k = 0; k < wd.size(); ++k) wd[k] -= cfg.lr * gw[k];
    auto bd = p.bias.data();
    auto gb = b.grad().data();
    for (std::size_t k = 0; k < bd.size(); ++k) bd[k] -= cfg.lr * gb[k];
  }
  data.verify();
  return p;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1)
      pos.push_back(scores[i]);
    else if (labels[i] == 0)
      neg.push_back(scores[i]);
    else
      throw ValidationError("AUROC labels must be 0 or 1");
  }
  if (pos.empty() || neg.empty()) throw ValidationError("AUROC needs both classes present");
  // Sorted negatives turn each positive's count into two binary searches.
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double s : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), s);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ValidationError("predictions and labels differ in length");
  if (predictions.empty()) throw ValidationError("accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = metric;
  j["value"] = value;
  j["n"] = n;
  j["classes"] = classes;
  j["seed"] = seed;
  return j;
}

MetricReport evaluate(const LinearProbe& probe, const FrozenFeatureSet& eval, const std::string& metric,
                      std::uint64_t seed) {
  eval.verify();
  MetricReport r{metric, 0.0, eval.labels.size(), static_cast<int>(probe.classes()), seed};
  if (metric == "accuracy") {
    r.value = accuracy(probe.predict(eval.features), eval.labels);
  } else if (metric == "auroc") {
    const Tensor prob = probe.probabilities(eval.features);
    const std::size_t c = probe.classes();
    std::vector<double> scores(eval.labels.size());
    std::vector<int> binary(eval.labels.size());
    double total = 0.0;
    const std::size_t first = c == 2 ? 1 : 0;
    for (std::size_t k = first; k < c; ++k) {
      for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = prob.at(i, k);
        binary[i] = eval.labels[i] == static_cast<int>(k) ? 1 : 0;
      }
      total += auroc(scores, binary);
    }
    r.value = total / static_cast<double>(c - first);
  } else {
    throw ConfigError("metric", "unknown metric " + metric + " (expected auroc or accuracy)");
  }
  return r;
}

}  // namespace gssl::probe
