#pragma once
// Downstream check: retrain the backbone (this GNN with unit importance
// scores) on the original and the pruned KG under the same config and seed,
// and report the test metrics side by side.

#include "kgtrim/metrics.hpp"
#include "kgtrim/pruner.hpp"
#include "kgtrim/trainer.hpp"

namespace kgtrim {

// Builds the pruned graph over the original vocabulary, so embedding tables
// stay aligned across both runs.
KnowledgeGraph pruned_knowledge_graph(const KnowledgeGraph& original, const PrunedGraph& pruned);

// Trains and evaluates one graph with the backbone (ignores the evaluator).
CompareRow retrain_once(const std::string& label, const InteractionGraph& inter,
                        const KnowledgeGraph& kg, const TrainConfig& config);

ComparisonTable retrain_and_compare(const InteractionGraph& inter, const KnowledgeGraph& original,
                                    const PrunedGraph& pruned, const TrainConfig& config);

}  // namespace kgtrim
