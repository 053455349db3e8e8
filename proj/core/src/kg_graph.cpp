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

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bundled_data.hpp"
#include "psychstate/error.hpp"
#include "psychstate/kg.hpp"

namespace psychstate::kg {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s, std::size_t max_parts) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < s.size() && parts.size() + 1 < max_parts) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    const auto j = s.find_first_of(" \t", i);
    parts.emplace_back(s.substr(i, j == std::string_view::npos ? s.size() - i : j - i));
    i = j == std::string_view::npos ? s.size() : j;
  }
  const auto rest = trim(s.substr(std::min(i, s.size())));
  if (!rest.empty()) parts.push_back(rest);
  return parts;
}

std::string humanize(std::string_view id) {
  std::string out(id);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

}  // namespace

std::string_view name(EntityKind k) {
  switch (k) {
    case EntityKind::Concept: return "Concept";
    case EntityKind::Misconception: return "Misconception";
    case EntityKind::AffectMarker: return "AffectMarker";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  for (auto k : {EntityKind::Concept, EntityKind::Misconception, EntityKind::AffectMarker}) {
    if (s == name(k)) return k;
  }
  return std::nullopt;
}

std::string_view name(RelationKind k) {
  switch (k) {
    case RelationKind::Prerequisite: return "Prerequisite";
    case RelationKind::PartOf: return "PartOf";
    case RelationKind::Misconception: return "Misconception";
    case RelationKind::Affect: return "Affect";
    case RelationKind::Related: return "Related";
  }
  return "?";
}

std::optional<RelationKind> parse_relation_kind(std::string_view s) {
  for (auto k : {RelationKind::Prerequisite, RelationKind::PartOf, RelationKind::Misconception,
                 RelationKind::Affect, RelationKind::Related}) {
    if (s == name(k)) return k;
  }
  return std::nullopt;
}

void KnowledgeGraph::add_entity(Entity e) {
  if (entity_index_.contains(e.id)) throw ConfigError("duplicate entity: " + e.id);
  if (e.label.empty()) e.label = humanize(e.id);
  entity_index_.emplace(e.id, static_cast<int>(entities_.size()));
  entities_.push_back(std::move(e));
}

void KnowledgeGraph::add_relation(Relation r) {
  if (relation_index_.contains(r.id)) throw ConfigError("duplicate relation: " + r.id);
  if (r.sentence.empty()) r.sentence = "{head} " + humanize(r.id) + " {tail}";
  if (r.sentence.find("{head}") == std::string::npos || r.sentence.find("{tail}") == std::string::npos) {
    throw ConfigError("relation template must mention {head} and {tail}: " + r.id);
  }
  for (const auto& other : relations_) {
    if (other.sentence == r.sentence) {
      throw ConfigError("relations " + other.id + " and " + r.id + " share a template");
    }
  }
  relation_index_.emplace(r.id, static_cast<int>(relations_.size()));
  relations_.push_back(std::move(r));
}

void KnowledgeGraph::add_triple(Triple t) {
  if (!has_entity(t.head)) throw LookupError("unknown entity: " + t.head);
  if (!has_entity(t.tail)) throw LookupError("unknown entity: " + t.tail);
  if (!relation_index_.contains(t.relation)) throw LookupError("unknown relation: " + t.relation);
  if (triple_index_.contains(t)) {
    throw ConfigError("duplicate triple: " + t.head + " " + t.relation + " " + t.tail);
  }
  triple_index_.emplace(t, static_cast<int>(triples_.size()));
  triples_.push_back(std::move(t));
}

const Entity& KnowledgeGraph::entity(std::string_view id) const {
  return entities_[static_cast<std::size_t>(entity_index(id))];
}

const Relation& KnowledgeGraph::relation(std::string_view id) const {
  return relations_[static_cast<std::size_t>(relation_index(id))];
}

bool KnowledgeGraph::has_entity(std::string_view id) const { return entity_index_.contains(id); }

bool KnowledgeGraph::contains(const Triple& t) const { return triple_index_.contains(t); }

int KnowledgeGraph::entity_index(std::string_view id) const {
  auto it = entity_index_.find(id);
  if (it == entity_index_.end()) throw LookupError("unknown entity: " + std::string(id));
  return it->second;
}

int KnowledgeGraph::relation_index(std::string_view id) const {
  auto it = relation_index_.find(id);
  if (it == relation_index_.end()) throw LookupError("unknown relation: " + std::string(id));
  return it->second;
}

KnowledgeGraph parse_graph(std::string_view content) {
  KnowledgeGraph g;
  std::istringstream in{std::string(content)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    try {
      if (line.starts_with("@entity")) {
        const auto parts = split_ws(line, 4);
        if (parts.size() < 3) throw ParseError("expected '@entity <id> <kind> [dimension]'", line_no);
        const auto kind = parse_entity_kind(parts[2]);
        if (!kind) throw ParseError("unknown entity kind '" + parts[2] + "'", line_no);
        Entity e{parts[1], *kind, {}, std::nullopt};
        if (parts.size() == 4) {
          const auto dim = parse_dimension(parts[3]);
          if (!dim) throw ParseError("unknown dimension '" + parts[3] + "'", line_no);
          e.dimension = dim;
        }
        if (e.kind == EntityKind::AffectMarker && !e.dimension) {
          throw ParseError("affect marker '" + e.id + "' needs a dimension", line_no);
        }
        g.add_entity(std::move(e));
      } else if (line.starts_with("@relation")) {
        const auto parts = split_ws(line, 4);
        if (parts.size() < 3) throw ParseError("expected '@relation <id> <kind> [template]'", line_no);
        const auto kind = parse_relation_kind(parts[2]);
        if (!kind) throw ParseError("unknown relation kind '" + parts[2] + "'", line_no);
        g.add_relation({parts[1], *kind, parts.size() == 4 ? parts[3] : std::string{}});
      } else {
        std::vector<std::string> cols;
        std::stringstream ss(raw);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(trim(col));
        if (cols.size() != 3) throw ParseError("expected head<TAB>relation<TAB>tail", line_no);
        g.add_triple({cols[0], cols[1], cols[2]});
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return g;
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingArtifactError("cannot open knowledge graph: " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_graph(buf.str());
}

KnowledgeGraph load_default_graph() {
  return parse_graph(bundled::kCourseGraph);
}

}  // namespace psychstate::kg
