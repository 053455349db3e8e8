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

#include <charconv>
#include <cstdio>
#include <unordered_map>

#include "psychstate/error.hpp"
#include "psychstate/eval.hpp"

namespace psychstate::eval {
namespace {

std::vector<std::size_t> indices_of(const corpus::DatasetManifest& part,
                                    const std::unordered_map<std::string, std::size_t>& by_id) {
  std::vector<std::size_t> out;
  out.reserve(part.records.size());
  for (const auto& r : part.records) out.push_back(by_id.at(r.record_id));
  return out;
}

std::string_view display_name(std::string_view model) {
  if (model == name(ModelKind::Fusion)) return "Multimodal BiLSTM + attention";
  if (model == name(ModelKind::TextOnly)) return "Text-only (mean embedding)";
  if (model == name(ModelKind::ProsodySvm)) return "Prosody-only SVM";
  return model;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void csv_row(std::string& out, std::string_view model, std::string_view dim, std::string_view fold,
             const Metrics& m) {
  out += std::string(model) + "," + std::string(dim) + "," + std::string(fold);
  for (double v : {m.accuracy, m.precision, m.recall, m.f1, m.kappa}) out += "," + fmt(v, "%.6f");
  out += '\n';
}

}  // namespace

std::string_view name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Fusion: return "fusion";
    case ModelKind::TextOnly: return "text_only";
    case ModelKind::ProsodySvm: return "prosody_svm";
  }
  return "?";
}

Protocol parse_protocol(std::string_view text) {
  Protocol p;
  if (text == "split") return p;
  if (text.starts_with("kfold")) {
    const auto digits = text.substr(5);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      p.kind = Protocol::Kind::KFold;
      p.folds = k;
      return p;
    }
  }
  throw ConfigError("protocol must be 'split' or 'kfold<k>', got '" + std::string(text) + "'");
}

std::vector<Partition> partitions(const corpus::DatasetManifest& manifest, const Protocol& protocol,
                                  std::uint64_t seed) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) by_id.emplace(manifest.records[i].record_id, i);
  std::vector<Partition> out;
  if (protocol.kind == Protocol::Kind::Split) {
    const auto split = corpus::stratified_split(manifest, protocol.test_fraction, protocol.stratify_by, seed);
    out.push_back({indices_of(split.train, by_id), indices_of(split.test, by_id)});
  } else {
    for (const auto& fold : corpus::kfold(manifest, protocol.folds, protocol.stratify_by, seed)) {
      out.push_back({indices_of(fold.train, by_id), indices_of(fold.validation, by_id)});
    }
  }
  return out;
}

std::vector<MetricsReport> evaluate(const std::vector<ModelKind>& kinds,
                                    const corpus::DatasetManifest& manifest, const Protocol& protocol,
                                    const EvalConfig& config, std::uint64_t seed) {
  const auto parts = partitions(manifest, protocol, seed);
  const auto raws = extract_raw(manifest, textproc::default_stoplist());
  std::vector<MetricsReport> reports;
  for (ModelKind k : kinds) reports.push_back({std::string(name(k)), {}});

  for (std::size_t f = 0; f < parts.size(); ++f) {
    std::vector<RawRecord> train_raw, test_raw;
    for (std::size_t i : parts[f].train) train_raw.push_back(raws[i]);
    for (std::size_t i : parts[f].test) test_raw.push_back(raws[i]);
    if (train_raw.empty() || test_raw.empty()) throw TrainingError("evaluation partition is empty");
    const auto space = FeatureSpace::fit(train_raw, config.min_count);
    const auto train_set = space.transform(train_raw);
    const auto test_set = space.transform(test_raw);
    std::vector<StateLabels> truth;
    for (const auto& r : test_set) truth.push_back(r.labels);

    for (std::size_t m = 0; m < kinds.size(); ++m) {
      std::vector<Prediction> preds;
      switch (kinds[m]) {
        case ModelKind::Fusion: {
          const auto result = fusion::train(train_set, test_set, space.vocabulary, config.train);
          preds = fusion::predict_all(result.params, test_set);
          break;
        }
        case ModelKind::TextOnly: {
          const auto model = train_text_only(train_set, space.vocabulary, config.train);
          for (const auto& r : test_set) preds.push_back(predict(model, r));
          break;
        }
        case ModelKind::ProsodySvm: {
          const auto model = train_prosody_svm(train_set, config.svm);
          for (const auto& r : test_set) preds.push_back(predict(model, r));
          break;
        }
      }
      reports[m].folds.push_back(score_fold(static_cast<int>(f), truth, preds));
    }
  }
  return reports;
}

MetricsReport evaluate(ModelKind kind, const corpus::DatasetManifest& manifest, const Protocol& protocol,
                       const EvalConfig& config, std::uint64_t seed) {
  return evaluate(std::vector<ModelKind>{kind}, manifest, protocol, config, seed).front();
}

std::string report_csv(const std::vector<MetricsReport>& reports) {
  std::string out = "model,dimension,fold,accuracy,precision,recall,f1,kappa\n";
  for (const auto& r : reports) {
    for (const auto& f : r.folds) {
      const std::string fold = std::to_string(f.fold);
      for (Dimension d : kAllDimensions) csv_row(out, r.model, key(d), fold, f.dimensions[index(d)]);
      csv_row(out, r.model, "all", fold, f.overall());
    }
    const auto dims = r.per_dimension();
    for (Dimension d : kAllDimensions) csv_row(out, r.model, key(d), "mean", dims[index(d)]);
    csv_row(out, r.model, "all", "mean", r.mean());
    csv_row(out, r.model, "all", "std", r.stddev());
  }
  return out;
}

std::string report_markdown(const std::vector<MetricsReport>& reports) {
  std::string out = "| Model | Accuracy | Precision | Recall | F1-score | Cohen's Kappa |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const Metrics m = r.mean();
    const Metrics s = r.stddev();
    const bool cv = r.folds.size() > 1;
    const auto cell = [&](double mean, double sd) {
      return cv ? fmt(mean, "%.3f") + " ± " + fmt(sd, "%.3f") : fmt(mean, "%.3f");
    };
    out += "| " + std::string(display_name(r.model)) + " | " + cell(m.accuracy, s.accuracy) + " | " +
           cell(m.precision, s.precision) + " | " + cell(m.recall, s.recall) + " | " + cell(m.f1, s.f1) +
           " | " + cell(m.kappa, s.kappa) + " |\n";
  }
  return out;
}

std::string confusion_markdown(const std::vector<MetricsReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += "### " + std::string(display_name(r.model)) + "\n\n";
    for (Dimension d : kAllDimensions) {
      DimensionConfusion sum{};
      for (const auto& f : r.folds) {
        for (std::size_t i = 0; i < kNumLevels; ++i) {
          for (std::size_t j = 0; j < kNumLevels; ++j) {
            sum[index(d)].counts[i][j] += f.confusion[index(d)].counts[i][j];
          }
        }
      }
      const auto& cm = sum[index(d)];
      out += std::string(name(d)) + " (rows true, columns predicted)\n\n";
      out += "| | Negative | Neutral | Positive |\n|---|---|---|---|\n";
      for (Level l : kAllLevels) {
        out += "| " + std::string(name(l));
        for (std::size_t j = 0; j < kNumLevels; ++j) out += " | " + std::to_string(cm.counts[index(l)][j]);
        out += " |\n";
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace psychstate::eval
