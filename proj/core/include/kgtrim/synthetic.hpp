#pragma once
// Synthetic fixtures with known ground truth. The planted-hub graph has
// cluster-aligned discriminative entities that drive interactions and a few
// hub entities wired to most items; hubs carry no preference signal, so a
// sound importance evaluator should rank them below the discriminative
// entities.

#include "kgtrim/graph.hpp"

#include <cstdint>
#include <vector>

namespace kgtrim {

struct SyntheticSpec {
    std::uint32_t num_users = 200;
    std::uint32_t num_items = 100;
    std::uint32_t num_clusters = 4;
    std::uint32_t discriminative_entities = 60;
    std::uint32_t hub_entities = 5;
    double hub_coverage = 0.9;       // fraction of items each hub touches
    std::uint32_t links_per_item = 4;
    std::uint32_t train_per_user = 8;
    std::uint32_t test_per_user = 3;
    double noise_fraction = 0.1;     // out-of-cluster share of interactions
    std::uint64_t seed = 7;
};

struct SyntheticData {
    InteractionGraph inter;
    KnowledgeGraph kg;
    std::vector<EntityId> discriminative_ids;
    std::vector<EntityId> hub_ids;
    std::vector<std::uint32_t> item_cluster;
};

SyntheticData make_planted_hub(const SyntheticSpec& spec);

// Sized for the performance budget: 1k users, 500 items, exactly 10k
// canonical triples.
SyntheticSpec perf_spec(std::uint64_t seed = 11);

}  // namespace kgtrim
