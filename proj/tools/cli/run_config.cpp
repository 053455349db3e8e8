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

#include "run_config.hpp"

#include <cmath>

#include "psychstate/error.hpp"

namespace psychstate::cli {
namespace {

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) throw ConfigError(key + ": " + why);
}

}  // namespace

void add_options(CLI::App& app, RunConfig& c) {
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--seed", c.seed, "Seed for every random stream");

  auto* g = "Generation";
  app.add_option("--total", c.gen.total, "Number of synthetic records")->group(g);
  app.add_option("--voice_fraction", c.gen.voice_fraction, "Share of records with audio")->group(g);
  app.add_option("--num_students", c.gen.num_students)->group(g);
  app.add_option("--stress_motivation_correlation", c.gen.stress_motivation_correlation)->group(g);
  app.add_option("--text_marker_rate", c.gen.text_marker_rate)->group(g);
  app.add_option("--voice_text_marker_rate", c.gen.voice_text_marker_rate)->group(g);

  auto* t = "Training";
  app.add_option("--epochs", c.train.epochs)->group(t);
  app.add_option("--batch_size", c.train.batch_size)->group(t);
  app.add_option("--lr", c.train.lr)->group(t);
  app.add_option("--dropout", c.train.dropout)->group(t);
  app.add_option("--gamma", c.train.gamma, "Focal-loss focusing parameter")->group(t);
  app.add_option("--max_grad_norm", c.train.max_grad_norm, "0 disables clipping")->group(t);
  app.add_option("--d_text", c.train.model.d_text)->group(t);
  app.add_option("--hidden", c.train.model.hidden)->group(t);
  app.add_option("--embedding_scale", c.train.model.embedding_scale)->group(t);
  app.add_option("--min_count", c.min_count, "Vocabulary frequency cutoff")->group(t);

  auto* e = "Evaluation";
  app.add_option("--protocol", c.protocol, "split or kfold<k>")->group(e);
  app.add_option("--test_fraction", c.test_fraction)->group(e);
  app.add_option("--stratify_by", c.stratify_by)->group(e);
  app.add_option("--svm_lambda", c.svm.lambda)->group(e);
  app.add_option("--svm_epochs", c.svm.epochs)->group(e);

  auto* p = "Policy";
  app.add_option("--threshold_engagement", c.policy.thresholds[index(Dimension::Engagement)])->group(p);
  app.add_option("--threshold_stress", c.policy.thresholds[index(Dimension::Stress)])->group(p);
  app.add_option("--threshold_motivation", c.policy.thresholds[index(Dimension::Motivation)])->group(p);
  app.add_option("--threshold_understanding", c.policy.thresholds[index(Dimension::Understanding)])->group(p);
  app.add_option("--policy_step", c.policy.step)->group(p);
  app.add_option("--policy_lower", c.policy.lower)->group(p);
  app.add_option("--policy_upper", c.policy.upper)->group(p);
  app.add_option("--target_rate", c.policy.target_rate)->group(p);
  app.add_option("--dead_zone", c.policy.dead_zone)->group(p);
  app.add_option("--high_margin", c.policy.high_margin)->group(p);
  app.add_option("--policy_window", c.policy.window)->group(p);
  app.add_option("--risk_window", c.risk.window)->group(p);
  app.add_option("--risk_threshold", c.risk.threshold)->group(p);

  auto* k = "Knowledge graph";
  app.add_option("--graph", c.graph, "Graph file; bundled course graph when empty")->group(k);
  app.add_option("--kg_epochs", c.kg.epochs)->group(k);
  app.add_option("--kg_dim", c.kg.dim)->group(k);
  app.add_option("--topic", c.topic, "Concept id the learner is working on")->group(k);
  app.add_option("--top_k", c.top_k)->group(k);

  auto* f = "Files";
  app.add_option("--dataset", c.dataset)->group(f);
  app.add_option("--checkpoint", c.checkpoint)->group(f);
  app.add_option("--history", c.history)->group(f);
  app.add_option("--report_dir", c.report_dir)->group(f);
  app.add_option("--series", c.series, "Psychometric CSV (instrument,time,mean,std)")->group(f);
  app.add_option("--predictions", c.predictions, "Prediction JSON lines from infer")->group(f);
  app.add_option("--timestamp", c.timestamp)->group(f);

  auto* i = "Inference";
  app.add_option("--text", c.text)->group(i);
  app.add_option("--wav", c.wav)->group(i);
  app.add_option("--record_id", c.record_id)->group(i);
  app.add_option("--student_id", c.student_id)->group(i);
  app.add_option("--session_index", c.session_index)->group(i);

  auto* v = "Verification";
  app.add_flag("--quick", c.quick, "Gradient check only")->group(v);
  app.add_option("--inject_fault", c.inject_fault, "Corrupt this tensor's gradient (negative test)")
      ->group(v);
}

Dimension RunConfig::stratify_dimension() const {
  const auto d = parse_dimension(stratify_by);
  if (!d) throw ConfigError("stratify_by: unknown dimension '" + stratify_by + "'");
  return *d;
}

void RunConfig::finalize() {
  train.seed = seed;
  svm.seed = seed;
  corpus::validate(gen);
  train.validate();
  policy.validate();
  require(gen.total >= 0, "total", "must be >= 0");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction", "must be in (0, 1)");
  require(min_count >= 1, "min_count", "must be >= 1");
  require(svm.lambda > 0.0 && std::isfinite(svm.lambda), "svm_lambda", "must be > 0");
  require(svm.epochs >= 0, "svm_epochs", "must be >= 0");
  require(risk.window >= 1, "risk_window", "must be >= 1");
  require(risk.threshold >= 0.0 && risk.threshold <= 1.0, "risk_threshold", "must be in [0, 1]");
  require(kg.epochs >= 0, "kg_epochs", "must be >= 0");
  require(kg.dim >= 1, "kg_dim", "must be >= 1");
  require(top_k >= 1, "top_k", "must be >= 1");
  require(train.model.embedding_scale > 0.0, "embedding_scale", "must be > 0");
  stratify_dimension();
  eval::parse_protocol(protocol);
}

}  // namespace psychstate::cli
