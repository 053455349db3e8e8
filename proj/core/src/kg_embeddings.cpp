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
#include <cmath>
#include <numeric>
#include <set>

#include "psychstate/error.hpp"
#include "psychstate/kg.hpp"

namespace psychstate::kg {
namespace {

constexpr std::uint64_t kStreamInit = 0x6b67696e6974ULL;
constexpr std::uint64_t kStreamTrain = 0x6b67747261696eULL;
constexpr int kMaxCorruptionTries = 32;

Eigen::VectorXd residual(const KnowledgeGraph& g, const KgEmbeddings& emb, const Triple& t) {
  return emb.entities.row(g.entity_index(t.head)) + emb.relations.row(g.relation_index(t.relation)) -
         emb.entities.row(g.entity_index(t.tail));
}

void clip_row_norm(Eigen::MatrixXd& m, int row) {
  // The slack keeps rows that are unit-norm up to rounding bit-identical.
  const double n = m.row(row).norm();
  if (n > 1.0 + 1e-12) m.row(row) /= n;
}

}  // namespace

double distance(const KnowledgeGraph& graph, const KgEmbeddings& emb, const Triple& t) {
  return residual(graph, emb, t).norm();
}

double score_triple(const KnowledgeGraph& graph, const KgEmbeddings& emb, const Triple& t) {
  const double z = emb.bias - distance(graph, emb, t);
  return 1.0 / (1.0 + std::exp(-z));
}

KgEmbeddings initialize_embeddings(const KnowledgeGraph& graph, int dim, std::uint64_t seed,
                                   double bias) {
  if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
  CounterRng rng(seed, kStreamInit);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  const auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
      const double n = m.row(r).norm();
      if (n > 0.0) m.row(r) /= n;
    }
  };
  KgEmbeddings emb;
  emb.entities.resize(static_cast<Eigen::Index>(graph.entities().size()), dim);
  emb.relations.resize(static_cast<Eigen::Index>(graph.relations().size()), dim);
  fill(emb.entities);
  fill(emb.relations);
  emb.bias = bias;
  return emb;
}

Triple corrupt(const KnowledgeGraph& graph, const Triple& t, const std::set<Triple>& known,
               CounterRng& rng) {
  const auto& entities = graph.entities();
  Triple c = t;
  for (int attempt = 0; attempt < kMaxCorruptionTries; ++attempt) {
    c = t;
    const auto& replacement = entities[rng.below(entities.size())].id;
    if (rng.bernoulli(0.5)) {
      c.head = replacement;
    } else {
      c.tail = replacement;
    }
    if (!known.contains(c)) return c;
  }
  return c;
}

KgEmbeddings train_kg_embeddings(const KnowledgeGraph& graph, const KgTrainConfig& config,
                                 std::uint64_t seed) {
  return train_kg_embeddings(graph, graph.triples(), config, seed);
}

KgEmbeddings train_kg_embeddings(const KnowledgeGraph& graph,
                                 const std::vector<Triple>& training_triples,
                                 const KgTrainConfig& config, std::uint64_t seed) {
  if (training_triples.empty()) throw TrainingError("knowledge graph has no triples to train on");
  if (config.epochs < 0 || config.neg_per_pos < 1 || config.lr < 0.0) {
    throw ConfigError("invalid knowledge-graph training configuration");
  }
  KgEmbeddings emb = initialize_embeddings(graph, config.dim, seed, config.bias);
  const std::set<Triple> known(training_triples.begin(), training_triples.end());
  CounterRng rng(seed, kStreamTrain);

  std::vector<std::size_t> order(training_triples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const Triple& pos = training_triples[idx];
      for (int n = 0; n < config.neg_per_pos; ++n) {
        const Triple neg = corrupt(graph, pos, known, rng);
        const Eigen::VectorXd rp = residual(graph, emb, pos);
        const Eigen::VectorXd rn = residual(graph, emb, neg);
        const double dp = rp.norm();
        const double dn = rn.norm();
        if (config.margin + dp - dn <= 0.0) continue;

        // d||x||/dx = x / ||x||; zero at the origin.
        const Eigen::VectorXd gp = dp > 0.0 ? Eigen::VectorXd(rp / dp) : Eigen::VectorXd::Zero(rp.size());
        const Eigen::VectorXd gn = dn > 0.0 ? Eigen::VectorXd(rn / dn) : Eigen::VectorXd::Zero(rn.size());
        const int ph = graph.entity_index(pos.head), pt = graph.entity_index(pos.tail);
        const int nh = graph.entity_index(neg.head), nt = graph.entity_index(neg.tail);
        const int r = graph.relation_index(pos.relation);

        emb.entities.row(ph) -= config.lr * gp.transpose();
        emb.entities.row(pt) += config.lr * gp.transpose();
        emb.relations.row(r) -= config.lr * (gp - gn).transpose();
        emb.entities.row(nh) += config.lr * gn.transpose();
        emb.entities.row(nt) -= config.lr * gn.transpose();
        for (int row : {ph, pt, nh, nt}) clip_row_norm(emb.entities, row);
      }
    }
  }
  return emb;
}

std::vector<Triple> candidate_triples(const KnowledgeGraph& graph, std::string_view topic,
                                      const Prediction& learner_state) {
  if (!graph.has_entity(topic)) throw LookupError("unknown topic entity: " + std::string(topic));
  std::set<Triple> out;
  for (const auto& t : graph.triples()) {
    if (t.head == topic || t.tail == topic) {
      out.insert(t);
      continue;
    }
    for (const auto* id : {&t.head, &t.tail}) {
      const Entity& e = graph.entity(*id);
      if (e.kind == EntityKind::AffectMarker && e.dimension &&
          learner_state.negative(*e.dimension) > 0.5) {
        out.insert(t);
        break;
      }
    }
  }
  return {out.begin(), out.end()};
}

std::vector<Triple> top_k_triples(const KnowledgeGraph& graph, const KgEmbeddings& emb,
                                  std::string_view topic, const Prediction& learner_state,
                                  std::size_t k) {
  auto candidates = candidate_triples(graph, topic, learner_state);
  std::vector<std::pair<double, Triple>> scored;
  scored.reserve(candidates.size());
  for (auto& t : candidates) {
    const double s = score_triple(graph, emb, t);
    scored.emplace_back(s, std::move(t));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<Triple> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(std::move(scored[i].second));
  return out;
}

}  // namespace psychstate::kg
