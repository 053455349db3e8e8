// Copyright 2026 The Psychstate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "psychstate/corpus.hpp"
#include "psychstate/eval.hpp"
#include "psychstate/feedback.hpp"
#include "psychstate/fusion.hpp"
#include "psychstate/kg.hpp"

namespace psychstate::cli {

/// Everything a command needs. Every field is a config-file key and a
/// `--key value` flag with the same name.
struct RunConfig {
  std::uint64_t seed = 42;

  corpus::GenConfig gen;
  fusion::TrainConfig train;
  eval::SvmConfig svm;
  feedback::PolicyConfig policy;
  feedback::RiskCriteria risk;
  kg::KgTrainConfig kg;

  std::string protocol = "split";
  double test_fraction = 0.2;
  std::string stratify_by = "stress";
  int min_count = 2;

  std::string dataset = "run/dataset.jsonl";
  std::string checkpoint = "run/model.psym";
  std::string history = "run/history.csv";
  std::string report_dir = "run/report";
  std::string series;       // psychometric CSV for `report`
  std::string predictions;  // JSON lines written by `infer`, read by `report`
  std::string graph;        // empty: bundled course graph

  // infer
  std::string text;
  std::string wav;
  std::string record_id = "infer-0";
  std::string student_id = "s000";
  int session_index = 0;
  std::string topic;
  std::size_t top_k = 5;

  // verify
  bool quick = false;
  std::string inject_fault;

  /// Stamped into log lines written to files, so reruns stay byte-identical.
  std::string timestamp = "1970-01-01T00:00:00Z";

  /// Copies the shared seed into the sub-configs and checks every field.
  /// Throws ConfigError naming the offending key.
  void finalize();

  Dimension stratify_dimension() const;
};

/// Registers every RunConfig field on `app` plus `--config <file>`. Unknown
/// config-file keys are errors.
void add_options(CLI::App& app, RunConfig& config);

}  // namespace psychstate::cli
