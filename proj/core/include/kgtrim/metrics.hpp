#pragma once
// All-ranking top-K evaluation plus the topology/norm pruning baselines.
// Candidates for a user are all items minus the excluded (training) items;
// ranking ties break by ascending item id so results are reproducible.

#include "kgtrim/graph.hpp"
#include "kgtrim/params.hpp"
#include "kgtrim/table.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kgtrim {

struct EvalReport {
    std::map<std::uint32_t, double> recall;  // K -> mean recall over eval users
    std::map<std::uint32_t, double> ndcg;
    std::uint64_t num_eval_users = 0;
    std::string config_hash;
};

// Generalized ranking evaluation: per user, rank all items not in
// exclude[u] and score hits against targets[u]. Users with empty targets are
// skipped. Recall@K = hits/|targets|; NDCG@K uses binary relevance with
// IDCG over min(K, |targets|).
EvalReport evaluate_ranking(const Table& final_user, const Table& final_entity,
                            const std::vector<std::vector<ItemId>>& exclude,
                            const std::vector<std::vector<ItemId>>& targets,
                            std::uint32_t num_items, const std::vector<std::uint32_t>& ks,
                            unsigned threads = 1);

// Test-set protocol: exclude training items, score against test items.
EvalReport evaluate_all_ranking(const Table& final_user, const Table& final_entity,
                                const InteractionGraph& inter,
                                const std::vector<std::uint32_t>& ks, unsigned threads = 1);

// Entities ordered for Pop removal: in-degree descending, id ascending.
std::vector<EntityId> pop_removal_order(const KnowledgeGraph& kg);

// Keep-masks over canonical triples (1 = keep).
// Pop: remove highest-degree entities (with all incident triples) until at
// least ceil(ratio * |G|) triples are pruned.
std::vector<std::uint8_t> pop_baseline(const KnowledgeGraph& kg, double ratio);

// Norm: triple score = ||e_head|| * ||e_tail|| from a checkpoint trained with
// unit scores; lowest-product triples pruned by percentile.
std::vector<std::uint8_t> norm_baseline(const ParameterStore& params, const KnowledgeGraph& kg,
                                        double ratio);

// Uniformly random keep-mask at the same retention as percentile pruning.
std::vector<std::uint8_t> random_mask(std::uint64_t num_canonical, double ratio, std::uint64_t seed);

struct CompareRow {
    std::string label;
    std::uint64_t canonical_triples = 0;
    std::uint32_t epochs = 0;
    double wallclock_s = 0.0;
    double recall20 = 0.0;
    double ndcg20 = 0.0;
};

struct ComparisonTable {
    std::vector<CompareRow> rows;

    std::string pretty() const;
    void write_tsv(const std::string& path) const;
};

}  // namespace kgtrim
