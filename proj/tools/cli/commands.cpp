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

#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "psychstate/error.hpp"
#include "psychstate/features.hpp"

namespace psychstate::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path, const std::string& what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifactError("cannot open " + what + ": " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

eval::Protocol protocol_of(const RunConfig& c) {
  eval::Protocol p = eval::parse_protocol(c.protocol);
  p.test_fraction = c.test_fraction;
  p.stratify_by = c.stratify_dimension();
  return p;
}

eval::EvalConfig eval_config_of(const RunConfig& c) {
  eval::EvalConfig e;
  e.train = c.train;
  e.svm = c.svm;
  e.min_count = c.min_count;
  return e;
}

kg::KnowledgeGraph graph_of(const RunConfig& c) {
  return c.graph.empty() ? kg::load_default_graph() : kg::load_graph(c.graph);
}

/// First Concept whose label occurs in the text (case-insensitive), else the
/// graph's first Concept.
std::string guess_topic(const kg::KnowledgeGraph& graph, std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char ch) { return std::tolower(ch); });
  const kg::Entity* fallback = nullptr;
  for (const auto& e : graph.entities()) {
    if (e.kind != kg::EntityKind::Concept) continue;
    if (!fallback) fallback = &e;
    if (text.find(e.label) != std::string::npos) return e.id;
  }
  if (!fallback) throw LookupError("topic: graph has no Concept entities");
  return fallback->id;
}

}  // namespace

std::string tally_table(const ClassCounts& counts) {
  std::string out = "| State | Negative | Neutral | Positive |\n|---|---|---|---|\n";
  for (Dimension d : kAllDimensions) {
    out += "| " + std::string(name(d));
    for (long n : counts[index(d)]) out += " | " + std::to_string(n);
    out += " |\n";
  }
  return out;
}

std::string prediction_line(const std::string& record_id, const std::string& student_id, int session_index,
                            bool voiced, const Prediction& prediction) {
  Json j;
  j["type"] = "prediction";
  j["record_id"] = record_id;
  j["student_id"] = student_id;
  j["session_index"] = session_index;
  j["modality_indicator"] = voiced ? 1 : 0;
  Json probs = Json::object();
  Json labels = Json::object();
  for (Dimension d : kAllDimensions) {
    const auto& p = prediction[d];
    probs[std::string(key(d))] = {p[0], p[1], p[2]};
    labels[std::string(key(d))] = name(prediction.argmax(d));
  }
  j["probs"] = std::move(probs);
  j["labels"] = std::move(labels);
  return j.dump();
}

std::vector<PredictionRow> parse_prediction_lines(const std::string& content) {
  std::vector<PredictionRow> rows;
  std::istringstream in(content);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(e.what(), number);
    }
    if (!j.is_object() || j.value("type", "") != "prediction") continue;
    try {
      PredictionRow row;
      row.student_id = j.at("student_id").get<std::string>();
      row.observation.session_index = j.at("session_index").get<int>();
      for (Dimension d : kAllDimensions) {
        const auto& p = j.at("probs").at(std::string(key(d)));
        if (!p.is_array() || p.size() != kNumLevels) throw ParseError("probs must hold 3 values", number);
        for (std::size_t l = 0; l < kNumLevels; ++l) row.observation.prediction.probs[index(d)][l] = p[l].get<double>();
      }
      if (!row.observation.prediction.valid()) throw ParseError("probabilities do not sum to 1", number);
      rows.push_back(std::move(row));
    } catch (const Json::exception& e) {
      throw ParseError(e.what(), number);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const auto manifest = corpus::generate_synthetic_corpus(c.gen, c.seed);
  ensure_parent(c.dataset);
  corpus::save_dataset(manifest, c.dataset);
  log << "wrote " << manifest.records.size() << " records to " << c.dataset << '\n';
  out << tally_table(manifest.class_counts);
  return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& log) {
  const auto manifest = corpus::load_dataset(c.dataset);
  const auto split = corpus::stratified_split(manifest, c.test_fraction, c.stratify_dimension(), c.seed);
  const auto& stoplist = textproc::default_stoplist();
  const auto train_raw = extract_raw(split.train, stoplist);
  const auto val_raw = extract_raw(split.test, stoplist);
  const auto space = FeatureSpace::fit(train_raw, c.min_count);
  const auto train_set = space.transform(train_raw);
  const auto val_set = space.transform(val_raw);
  log << "training on " << train_set.size() << " records, validating on " << val_set.size()
      << ", vocabulary " << space.vocabulary.size() << '\n';

  const auto result = fusion::train(train_set, val_set, space.vocabulary, c.train);
  ensure_parent(c.checkpoint);
  fusion::save_checkpoint(c.checkpoint, {result.params, space.stats});
  ensure_parent(c.history);
  fusion::write_history_csv(c.history, result.history);

  out << "epochs " << result.history.size();
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    char buf[128];
    std::snprintf(buf, sizeof buf, ", final train loss %.6f, val macro-F1", last.train_loss);
    out << buf;
    for (Dimension d : kAllDimensions) {
      std::snprintf(buf, sizeof buf, " %s=%.3f", std::string(key(d)).c_str(), last.val_f1[index(d)]);
      out << buf;
    }
  }
  out << "\ncheckpoint " << c.checkpoint << "\nhistory " << c.history << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& log) {
  // The checkpoint is loaded first so a missing one fails before any work.
  const auto checkpoint = fusion::load_checkpoint(c.checkpoint);
  const auto manifest = corpus::load_dataset(c.dataset);
  const auto protocol = protocol_of(c);
  auto config = eval_config_of(c);
  config.train.model.d_text = checkpoint.params.config.d_text;
  config.train.model.hidden = checkpoint.params.config.hidden;

  std::vector<eval::MetricsReport> reports;
  if (protocol.kind == eval::Protocol::Kind::Split) {
    // The held-out split is the one `train` validated on; the fusion model is
    // the trained checkpoint, the baselines are fitted here.
    const auto part = eval::partitions(manifest, protocol, c.seed).front();
    const auto raws = extract_raw(manifest, textproc::default_stoplist());
    FeatureSpace space{checkpoint.params.embedding.vocabulary, checkpoint.stats};
    std::vector<StateLabels> truth;
    std::vector<Prediction> preds;
    for (std::size_t i : part.test) {
      const auto f = space.transform(raws[i]);
      truth.push_back(f.labels);
      preds.push_back(fusion::predict(checkpoint.params, f).prediction);
    }
    reports.push_back({std::string(eval::name(eval::ModelKind::Fusion)), {eval::score_fold(0, truth, preds)}});
    log << "scored checkpoint on " << part.test.size() << " held-out records\n";
    auto baselines =
        eval::evaluate({eval::ModelKind::TextOnly, eval::ModelKind::ProsodySvm}, manifest, protocol, config, c.seed);
    for (auto& r : baselines) reports.push_back(std::move(r));
  } else {
    log << "cross-validating " << protocol.folds << " folds (fusion retrained per fold)\n";
    reports = eval::evaluate({eval::ModelKind::Fusion, eval::ModelKind::TextOnly, eval::ModelKind::ProsodySvm},
                             manifest, protocol, config, c.seed);
  }

  const fs::path dir(c.report_dir);
  const std::string table = eval::report_markdown(reports);
  write_text(dir / "metrics.csv", eval::report_csv(reports));
  write_text(dir / "comparison.md", table + "\n" + eval::confusion_markdown(reports));
  out << table;
  return kExitOk;
}

int cmd_infer(const RunConfig& c, std::ostream& out, std::ostream& log) {
  if (c.text.empty()) throw ConfigError("text: required for infer");
  const auto checkpoint = fusion::load_checkpoint(c.checkpoint);

  corpus::InteractionRecord record;
  record.record_id = c.record_id;
  record.student_id = c.student_id;
  record.session_index = c.session_index;
  record.text = c.text;
  if (!c.wav.empty()) {
    record.modality = corpus::Modality::TextPlusVoice;
    record.audio = corpus::AudioRef{c.wav, read_wav(c.wav)};
  }
  const auto raw = extract_raw(record, textproc::default_stoplist());
  if (raw.track) {
    log << "prosody: " << raw.track->frames.size() << " frames, " << raw.track->duration << " s, speech rate "
        << raw.track->speech_rate << "/s\n";
  } else {
    log << "prosody: none (text-only record, modality indicator 0)\n";
  }
  const FeatureSpace space{checkpoint.params.embedding.vocabulary, checkpoint.stats};
  const auto features = space.transform(raw);
  const auto inference = fusion::predict(checkpoint.params, features);

  const auto graph = graph_of(c);
  const std::string topic = c.topic.empty() ? guess_topic(graph, c.text) : c.topic;
  if (!graph.has_entity(topic)) throw LookupError("topic: unknown entity '" + topic + "'");
  log << "topic: " << topic << '\n';
  const auto embeddings = kg::train_kg_embeddings(graph, c.kg, c.seed);
  const auto triples = kg::top_k_triples(graph, embeddings, topic, inference.prediction, c.top_k);
  const std::string prompt = kg::render_prompt(graph, triples, inference.prediction);
  const auto plan = feedback::select_intervention(inference.prediction, c.policy, prompt);

  out << prediction_line(record.record_id, record.student_id, record.session_index, features.voiced,
                         inference.prediction)
      << '\n';
  Json j;
  j["type"] = "intervention";
  const Json logged = Json::parse(feedback::intervention_log_line(c.timestamp, record.student_id, plan));
  for (const auto& [k, v] : logged.items()) j[k] = v;
  Json used = Json::array();
  for (const auto& t : triples) used.push_back({t.head, t.relation, t.tail});
  j["kg_triples"] = std::move(used);
  j["kg_prompt"] = prompt;
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_report(const RunConfig& c, std::ostream& out, std::ostream& log) {
  std::vector<feedback::PsychometricSeries> series;
  if (!c.series.empty()) series = feedback::load_series(c.series);
  std::vector<PredictionRow> rows;
  if (!c.predictions.empty()) rows = parse_prediction_lines(read_text(c.predictions, "predictions"));

  const fs::path dir(c.report_dir);
  if (series.empty() && rows.empty()) {
    write_text(dir / "report.md", "no data\n");
    out << "no data\n";
    return kExitOk;
  }

  std::string report = "# Learner state report\n";
  if (!series.empty()) {
    const auto trend = feedback::trend_report(series);
    write_text(dir / "trend.svg", trend.svg);
    report += "\n## Psychometric trends\n\n" + trend.markdown;
    log << "trend chart: " << (dir / "trend.svg").string() << '\n';
  }
  if (!rows.empty()) {
    std::map<std::string, std::vector<feedback::Observation>> by_student;
    for (auto& r : rows) by_student[r.student_id].push_back(r.observation);
    std::string lines;
    std::string table = "| Student | Sessions | Reason | Stress evidence | Motivation evidence |\n"
                        "|---|---|---|---|---|\n";
    std::size_t count = 0;
    for (auto& [student, history] : by_student) {
      std::stable_sort(history.begin(), history.end(),
                       [](const auto& a, const auto& b) { return a.session_index < b.session_index; });
      for (const auto& a : feedback::flag_at_risk(student, history, c.risk)) {
        ++count;
        lines += feedback::alert_log_line(c.timestamp, a) + '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, " | %.3f | %.3f |\n", a.stress_evidence, a.motivation_evidence);
        table += "| " + a.student_id + " | " + std::to_string(a.first_session) + "-" +
                 std::to_string(a.last_session) + " | " + a.reason + buf;
      }
    }
    write_text(dir / "alerts.jsonl", lines);
    report += "\n## At-risk alerts\n\n" + std::to_string(count) + " alert(s) across " +
              std::to_string(by_student.size()) + " student(s), " + std::to_string(rows.size()) +
              " observation(s).\n";
    if (count > 0) report += "\n" + table;
  }
  write_text(dir / "report.md", report);
  out << report;
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"Learner-state pipeline: synthetic corpus, multimodal classifier, evaluation, feedback",
               "psychstate"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig config;
  add_options(app, config);

  using Command = int (*)(const RunConfig&, std::ostream&, std::ostream&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands = {
      {"gen", "Generate the synthetic corpus and print its class tallies", cmd_gen},
      {"train", "Train the fusion model; writes checkpoint and history CSV", cmd_train},
      {"eval", "Compare fusion against the text-only and prosody-only baselines", cmd_eval},
      {"infer", "Predict one record and plan an intervention", cmd_infer},
      {"report", "Psychometric trend report and at-risk alerts", cmd_report},
      {"verify", "Gradient check, DSP oracle and metric oracles", cmd_verify},
  };
  Command chosen = nullptr;
  for (const auto& [name, help, fn] : commands) {
    app.add_subcommand(name, help)->callback([&chosen, fn = fn] { chosen = fn; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream err;
    const int code = app.exit(e, out, err);
    log << err.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    config.finalize();
    return chosen(config, out, log);
  } catch (const MissingArtifactError& e) {
    log << "error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StratificationError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FoldError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LookupError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace psychstate::cli
