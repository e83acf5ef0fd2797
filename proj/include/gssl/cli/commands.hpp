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


#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gssl::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInputError = 2, kDiverged = 3 };

/// Set to any value other than "0" to force deterministic mode.
inline constexpr const char* kDeterministicEnv = "GSSL_DETERMINISTIC";

struct PretrainArgs {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  bool deterministic = false;
};

struct ProbeArgs {
  std::filesystem::path ckpt;
  std::filesystem::path manifest;        // evaluation set
  std::optional<std::filesystem::path> train_manifest;  // otherwise split `manifest`
  std::string metric = "auroc";
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
};

struct AugmentPreviewArgs {
  std::filesystem::path image;
  std::optional<std::filesystem::path> config;  // MultiCropConfig JSON
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct GradcheckArgs {
  std::optional<std::filesystem::path> config;  // {"seeds","seed","ops","backbone","losses","eps","tolerance"}
  std::uint64_t seed = 0;
  std::size_t seeds = 20;
  std::optional<std::filesystem::path> out;
  std::string fault;  // test hook: corrupt this op's backward
};

struct PhantomGenArgs {
  std::optional<std::filesystem::path> spec_template;
  std::size_t count = 500;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

int cmd_pretrain(const PretrainArgs& a, std::ostream& out, std::ostream& err);
int cmd_probe(const ProbeArgs& a, std::ostream& out, std::ostream& err);
int cmd_augment_preview(const AugmentPreviewArgs& a, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err);
int cmd_phantom_gen(const PhantomGenArgs& a, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand first) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gssl::cli
