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

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace psychstate::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitMissingArtifact = 3,
  kExitVerification = 4,
};

// Each command writes data to `out` (and to files named in the config) and
// progress to `log`. They throw psychstate::Error subclasses; run() maps them
// to exit codes.
int cmd_gen(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_infer(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Markdown tally table in the layout of the annotated-corpus table.
std::string tally_table(const ClassCounts& counts);

/// One JSON-lines prediction record, as printed by `infer` and read back by
/// `report`.
std::string prediction_line(const std::string& record_id, const std::string& student_id, int session_index,
                            bool voiced, const Prediction& prediction);

struct PredictionRow {
  std::string student_id;
  feedback::Observation observation;
};
/// Lines whose "type" is not "prediction" are skipped. Throws ParseError.
std::vector<PredictionRow> parse_prediction_lines(const std::string& content);

/// Parses `args` (without the program name), dispatches and maps errors to
/// an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

}  // namespace psychstate::cli
