#pragma once
// Dual-view importance scoring.
//
// Collective view: an entity matters if the users that can reach it (the Q
// matrix columns) point in the same direction as its relation-enriched
// embedding; similarity is cosine clipped at zero, so anti-aligned pairs
// score 0 and every score lands in [0,1].
//
// Holistic view: a learnable per-entity scalar, clamped to [0,1].
//
// Entity scores blend with weight gamma and broadcast to triples through a
// transform of the (head, tail) scores.

#include "kgtrim/graph.hpp"
#include "kgtrim/params.hpp"
#include "kgtrim/qmatrix.hpp"

#include <string>
#include <vector>

namespace kgtrim {

enum class Transform { Tail, Mean, Product };

Transform parse_transform(const std::string& name);
std::string transform_name(Transform t);

struct ImportanceScores {
    std::vector<double> collective;
    std::vector<double> holistic;
    std::vector<double> aggregated;
    double gamma = 0.5;
};

// e_v' = mean over in-relations of (e_r elementwise* e_v0); falls back to e_v0
// when the entity has no in-edges.
std::vector<double> relation_enriched_embedding(EntityId v, const ParameterStore& params,
                                                const KnowledgeGraph& kg);
// All entities at once; rows of the result are e_v'.
Table relation_enriched_all(const ParameterStore& params, const KnowledgeGraph& kg);

// max(0, cos(a,b)); zero-norm inputs score 0.
double clipped_cosine(std::span<const double> a, std::span<const double> b);

// Mean clipped cosine between each Q-column user and e_v'; empty columns get 0.
std::vector<double> collective_scores(const ParameterStore& params, const UserEntityMatrix& q,
                                      const KnowledgeGraph& kg);

// holistic_raw clamped to [0,1].
std::vector<double> holistic_scores(const ParameterStore& params);

std::vector<double> aggregate_scores(const std::vector<double>& collective,
                                     const std::vector<double>& holistic, double gamma);

ImportanceScores importance_scores(const ParameterStore& params, const UserEntityMatrix& q,
                                   const KnowledgeGraph& kg, double gamma);

double triplet_score(const std::vector<double>& entity_scores, const Triple& t, Transform transform);

// Per augmented triple, aligned with kg.triples.
std::vector<double> triplet_scores_augmented(const std::vector<double>& entity_scores,
                                             const KnowledgeGraph& kg, Transform transform);
// Canonical triples only (pruning order).
std::vector<double> triplet_scores_canonical(const std::vector<double>& entity_scores,
                                             const KnowledgeGraph& kg, Transform transform);

void save_entity_scores(const ImportanceScores& scores, const std::string& path);
void save_triple_scores(const std::vector<double>& canonical_scores, const KnowledgeGraph& kg,
                        const std::string& path);

}  // namespace kgtrim
