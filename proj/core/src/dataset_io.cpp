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

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "psychstate/corpus.hpp"
#include "psychstate/error.hpp"

namespace psychstate::corpus {
namespace {

using Json = nlohmann::ordered_json;

Json to_json(const InteractionRecord& r) {
  Json labels = Json::object();
  for (Dimension d : kAllDimensions) labels[std::string(key(d))] = name(r.labels[index(d)]);
  Json j;
  j["record_id"] = r.record_id;
  j["student_id"] = r.student_id;
  j["session_index"] = r.session_index;
  j["modality"] = name(r.modality);
  j["text"] = r.text;
  j["tokens"] = r.tokens;
  j["audio"] = r.audio ? Json(r.audio->path) : Json(nullptr);
  j["labels"] = std::move(labels);
  return j;
}

const Json& field(const Json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'", line);
  return *it;
}

std::string string_field(const Json& obj, const char* name, std::size_t line) {
  const Json& v = field(obj, name, line);
  if (!v.is_string()) throw ParseError(std::string("field '") + name + "' must be a string", line);
  return v.get<std::string>();
}

InteractionRecord from_json(const Json& j, std::size_t line, const std::filesystem::path& base) {
  if (!j.is_object()) throw ParseError("record must be a JSON object", line);
  InteractionRecord r;
  r.record_id = string_field(j, "record_id", line);
  r.student_id = string_field(j, "student_id", line);

  const Json& session = field(j, "session_index", line);
  if (!session.is_number_integer() || session.get<long>() < 0) {
    throw ParseError("field 'session_index' must be a non-negative integer", line);
  }
  r.session_index = session.get<int>();

  const auto modality = string_field(j, "modality", line);
  const auto parsed = parse_modality(modality);
  if (!parsed) throw ParseError("field 'modality': unknown value \"" + modality + "\"", line);
  r.modality = *parsed;

  r.text = string_field(j, "text", line);
  if (r.text.empty()) throw ParseError("field 'text' must be non-empty", line);

  const Json& tokens = field(j, "tokens", line);
  if (!tokens.is_array()) throw ParseError("field 'tokens' must be an array", line);
  for (const auto& t : tokens) {
    if (!t.is_string()) throw ParseError("field 'tokens' must hold strings", line);
    r.tokens.push_back(t.get<std::string>());
  }

  const Json& audio = field(j, "audio", line);
  if (audio.is_string()) {
    const auto rel = audio.get<std::string>();
    try {
      r.audio = AudioRef{rel, read_wav(base / rel)};
    } catch (const Error& e) {
      throw ParseError(std::string("field 'audio': ") + e.what(), line);
    }
  } else if (!audio.is_null()) {
    throw ParseError("field 'audio' must be a path or null", line);
  }
  if ((r.modality == Modality::TextPlusVoice) != r.audio.has_value()) {
    throw ParseError("field 'audio' disagrees with modality " + modality, line);
  }

  const Json& labels = field(j, "labels", line);
  if (!labels.is_object()) throw ParseError("field 'labels' must be an object", line);
  for (Dimension d : kAllDimensions) {
    const std::string k(key(d));
    auto it = labels.find(k);
    if (it == labels.end()) throw ParseError("missing field 'labels." + k + "'", line);
    if (!it->is_string()) throw ParseError("field 'labels." + k + "' must be a string", line);
    const auto value = it->get<std::string>();
    const auto level = parse_level(value);
    if (!level) throw ParseError("field 'labels." + k + "': unknown level \"" + value + "\"", line);
    r.labels[index(d)] = *level;
  }
  if (labels.size() != kNumDimensions) throw ParseError("field 'labels' has unknown keys", line);
  return r;
}

}  // namespace

std::string serialize_records(const DatasetManifest& manifest) {
  std::string out;
  Json header;
  header["schema"] = kSchemaVersion;
  header["seed"] = manifest.seed;
  out += header.dump();
  out += '\n';
  for (const auto& r : manifest.records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  if (!base.empty()) std::filesystem::create_directories(base);
  for (const auto& r : manifest.records) {
    validate(r);
    if (r.audio) {
      const auto wav = base / r.audio->path;
      std::filesystem::create_directories(wav.parent_path());
      write_wav(wav, r.audio->clip);
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write dataset: " + path.string());
  f << serialize_records(manifest);
  if (!f) throw Error("failed writing dataset: " + path.string());
}

DatasetManifest load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifactError("cannot open dataset: " + path.string());
  const auto base = path.parent_path();

  std::string line;
  std::size_t line_no = 0;
  DatasetManifest m;
  bool have_header = false;
  std::vector<InteractionRecord> records;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string()) {
        throw ParseError("missing schema header", line_no);
      }
      const auto schema = j["schema"].get<std::string>();
      if (schema != kSchemaVersion) {
        throw VersionError("unsupported dataset schema \"" + schema + "\" (expected " +
                           std::string(kSchemaVersion) + ")");
      }
      if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
          throw ParseError("header field 'seed' must be an integer", line_no);
        }
        m.seed = j["seed"].get<std::uint64_t>();
      }
      have_header = true;
      continue;
    }
    records.push_back(from_json(j, line_no, base));
  }
  if (!have_header) throw ParseError("empty dataset file (missing schema header)", line_no + 1);
  return make_manifest(std::move(records), m.seed);
}

}  // namespace psychstate::corpus
