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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "psychstate/rng.hpp"
#include "psychstate/types.hpp"

namespace psychstate::kg {

enum class EntityKind { Concept, Misconception, AffectMarker };

std::string_view name(EntityKind k);
std::optional<EntityKind> parse_entity_kind(std::string_view s);

/// Relation kinds select the sentence template used when rendering prompts.
enum class RelationKind { Prerequisite, PartOf, Misconception, Affect, Related };

std::string_view name(RelationKind k);
std::optional<RelationKind> parse_relation_kind(std::string_view s);

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Concept;
  /// Human-readable form used in prompts (id with '_' replaced by ' ').
  std::string label;
  /// Only for AffectMarker entities: the dimension the marker signals.
  std::optional<Dimension> dimension;
};

struct Relation {
  std::string id;
  RelationKind kind = RelationKind::Related;
  /// Sentence template with {head} and {tail} placeholders.
  std::string sentence;
};

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Registries plus a duplicate-free triple list. Ids are the strings used in
/// the graph file.
class KnowledgeGraph {
 public:
  /// Throws ConfigError on a duplicate id.
  void add_entity(Entity e);
  void add_relation(Relation r);
  /// Throws LookupError for unregistered ids; duplicates are rejected with
  /// ConfigError.
  void add_triple(Triple t);

  const Entity& entity(std::string_view id) const;
  const Relation& relation(std::string_view id) const;
  bool has_entity(std::string_view id) const;
  bool contains(const Triple& t) const;

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Relation>& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }

  int entity_index(std::string_view id) const;
  int relation_index(std::string_view id) const;

 private:
  std::vector<Entity> entities_;
  std::vector<Relation> relations_;
  std::vector<Triple> triples_;
  std::map<std::string, int, std::less<>> entity_index_;
  std::map<std::string, int, std::less<>> relation_index_;
  std::map<Triple, int> triple_index_;
};

/// Graph file format:
///   # comment
///   @entity <id> <Concept|Misconception|AffectMarker> [dimension]
///   @relation <id> <Prerequisite|PartOf|Misconception|Affect|Related> <template...>
///   <head>\t<relation>\t<tail>
KnowledgeGraph parse_graph(std::string_view content);
KnowledgeGraph load_graph(const std::filesystem::path& path);
/// data/programming_course.kg
KnowledgeGraph load_default_graph();

// ---------------------------------------------------------------------------
// Translational scorer

struct KgEmbeddings {
  Eigen::MatrixXd entities;   // |E| x d
  Eigen::MatrixXd relations;  // |R| x d
  double bias = 0.0;
  int dim() const { return static_cast<int>(entities.cols()); }
};

/// ||v_h + v_r - v_t||_2
double distance(const KnowledgeGraph& graph, const KgEmbeddings& emb, const Triple& t);

/// sigmoid(b - distance).
double score_triple(const KnowledgeGraph& graph, const KgEmbeddings& emb, const Triple& t);

struct KgTrainConfig {
  int epochs = 300;
  double lr = 0.01;
  double margin = 1.0;
  int neg_per_pos = 4;
  int dim = 32;
  /// Score bias b; with unit-norm entities true triples sit well below
  /// distance 1 after training and corruptions above it.
  double bias = 1.0;
};

/// Uniform rows, each renormalised to unit norm.
KgEmbeddings initialize_embeddings(const KnowledgeGraph& graph, int dim, std::uint64_t seed,
                                   double bias = 0.0);

/// Replaces the head or the tail (each with probability 1/2) by a uniformly
/// drawn entity, resampling (up to a bounded number of tries) when the result
/// is in `known`.
Triple corrupt(const KnowledgeGraph& graph, const Triple& t, const std::set<Triple>& known,
               CounterRng& rng);

/// SGD on max(0, margin + d(pos) - d(neg)) with entity rows renormalised to
/// norm <= 1 after each update. Throws TrainingError on an empty graph.
KgEmbeddings train_kg_embeddings(const KnowledgeGraph& graph, const KgTrainConfig& config,
                                 std::uint64_t seed);

/// Same as above but optimising only `training_triples` (held-out
/// evaluation).
KgEmbeddings train_kg_embeddings(const KnowledgeGraph& graph,
                                 const std::vector<Triple>& training_triples,
                                 const KgTrainConfig& config, std::uint64_t seed);

/// Candidate triples: those touching `topic`, plus triples involving an
/// AffectMarker whose dimension has Negative probability > 0.5. Sorted by
/// score descending, ties by (head, relation, tail); truncated to k.
std::vector<Triple> top_k_triples(const KnowledgeGraph& graph, const KgEmbeddings& emb,
                                  std::string_view topic, const Prediction& learner_state,
                                  std::size_t k);

/// The unranked candidate set used by top_k_triples.
std::vector<Triple> candidate_triples(const KnowledgeGraph& graph, std::string_view topic,
                                      const Prediction& learner_state);

// ---------------------------------------------------------------------------
// Prompt rendering

inline constexpr std::size_t kMaxPromptLength = 1000;

/// Clause describing the learner state, e.g. "shows vocal stress"; empty when
/// every dimension is Neutral-dominant.
std::string state_clause(const Prediction& prediction);

/// One sentence per triple; the state clause is joined onto the last
/// sentence. Lowest-ranked triples are dropped until the text fits in
/// kMaxPromptLength characters.
std::string render_prompt(const KnowledgeGraph& graph, const std::vector<Triple>& triples,
                          const Prediction& prediction);

}  // namespace psychstate::kg
