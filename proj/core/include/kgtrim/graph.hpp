#pragma once
// Immutable graph structures for the pruning pipeline.
//
// ID space convention: items occupy entity ids [0, num_items); non-item
// entities follow. Relations are stored with both directions materialized:
// canonical relation r in [0, R) is paired with its inverse r + R. The
// canonical triples come first in `triples`, sorted by (head, rel, tail);
// the inverse of canonical triple k sits at index num_canonical + k.

#include "kgtrim/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kgtrim {

struct Triple {
    EntityId head = 0;
    RelationId rel = 0;
    EntityId tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct LoadReport {
    std::uint64_t duplicate_interactions = 0;
    std::uint64_t duplicate_triples = 0;
    bool users_remapped = false;
    bool items_remapped = false;
};

struct InteractionGraph {
    std::uint32_t num_users = 0;
    std::uint32_t num_items = 0;
    std::vector<std::vector<ItemId>> train_edges;  // per user, sorted ascending
    std::vector<std::vector<ItemId>> test_edges;   // per user, sorted, disjoint from train
    std::vector<EntityId> item_to_entity;          // identity under the prefix convention
    std::uint64_t train_edge_count = 0;
    std::uint64_t test_edge_count = 0;
    LoadReport report;

    // Reverse adjacency, item -> users with a train edge (CSR).
    std::vector<std::uint64_t> item_user_offsets;
    std::vector<UserId> item_user_ids;

    std::span<const UserId> users_of_item(ItemId i) const {
        return {item_user_ids.data() + item_user_offsets[i],
                item_user_ids.data() + item_user_offsets[i + 1]};
    }
};

struct KnowledgeGraph {
    std::uint32_t num_entities = 0;
    std::uint32_t num_relations = 0;            // after inverse augmentation (2 * canonical)
    std::uint32_t num_relations_canonical = 0;
    std::vector<Triple> triples;                 // canonical block then inverse block
    std::uint64_t num_canonical = 0;
    LoadReport report;

    // CSR over all augmented triples, keyed by head entity. Slots store the
    // augmented triple index so per-triple weights can be looked up.
    std::vector<std::uint64_t> out_offsets;
    std::vector<TripleIndex> out_triple;

    // Relation ids of triples where the entity is tail (multiset, augmented).
    std::vector<std::uint64_t> in_rel_offsets;
    std::vector<RelationId> in_rel_ids;

    std::vector<std::uint32_t> in_degree;        // over augmented triples

    RelationId inverse_of(RelationId r) const {
        return r < num_relations_canonical ? r + num_relations_canonical
                                           : r - num_relations_canonical;
    }

    std::span<const TripleIndex> out_edges(EntityId v) const {
        return {out_triple.data() + out_offsets[v], out_triple.data() + out_offsets[v + 1]};
    }
    std::span<const RelationId> in_relations(EntityId v) const {
        return {in_rel_ids.data() + in_rel_offsets[v], in_rel_ids.data() + in_rel_offsets[v + 1]};
    }
    std::uint64_t out_degree(EntityId v) const { return out_offsets[v + 1] - out_offsets[v]; }
};

// View fusing the bipartite interactions with the KG through item/entity
// alignment. Only index glue; owns nothing.
struct CollaborativeGraph {
    const InteractionGraph* inter = nullptr;
    const KnowledgeGraph* kg = nullptr;
    std::uint32_t num_entities = 0;  // max(kg entities, items)

    bool is_item(EntityId v) const { return v < inter->num_items; }
};

struct GraphStats {
    std::uint64_t users = 0;
    std::uint64_t items = 0;
    std::uint64_t interactions = 0;
    std::uint64_t entities = 0;
    std::uint64_t relations = 0;  // canonical
    std::uint64_t triples = 0;    // canonical

    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

// Loaders. Interaction files: one user per line, "user item item ...".
// KG file: one canonical triple per line, "head relation tail".
InteractionGraph load_interactions(const std::string& train_path, const std::string& test_path);

// When expected vocabulary sizes are given, ids must fit (validation error on
// overflow) and the entity/relation space keeps the declared size even if the
// file does not mention the top ids. Used when loading pruned graphs so the
// embedding space matches the original.
KnowledgeGraph load_triples(const std::string& path,
                            std::optional<std::uint32_t> expected_entities = std::nullopt,
                            std::optional<std::uint32_t> expected_canonical_relations = std::nullopt);

// Builds a KnowledgeGraph directly from canonical triples (synthetic data,
// pruned graphs in memory). Dedup + inverse augmentation applied.
KnowledgeGraph build_knowledge_graph(std::vector<Triple> canonical,
                                     std::optional<std::uint32_t> expected_entities = std::nullopt,
                                     std::optional<std::uint32_t> expected_canonical_relations = std::nullopt);

InteractionGraph build_interaction_graph(std::vector<std::vector<ItemId>> train,
                                         std::vector<std::vector<ItemId>> test);

CollaborativeGraph build_ckg(const InteractionGraph& inter, const KnowledgeGraph& kg);

GraphStats stats(const InteractionGraph& inter, const KnowledgeGraph& kg);

// Writes canonical triples, one per line, sorted — the normalized on-disk form.
void save_triples(const KnowledgeGraph& kg, const std::string& path);
// Writes per-user lines "user item item ..." for users with at least one edge.
void save_interactions(const std::vector<std::vector<ItemId>>& edges, const std::string& path);

// Preprocessing for raw data: iteratively drops users/items with fewer than
// min_interactions train edges, and canonical triples of entities with fewer
// than min_entity_triples / relations with fewer than min_relation_triples
// occurrences, until stable. Operates on canonical (non-augmented) triples.
struct PreprocessResult {
    std::vector<std::vector<ItemId>> train;
    std::vector<std::vector<ItemId>> test;
    std::vector<Triple> triples;
    std::uint32_t rounds = 0;
};
PreprocessResult kcore_filter(const InteractionGraph& inter, const KnowledgeGraph& kg,
                              std::uint32_t min_interactions = 10,
                              std::uint32_t min_entity_triples = 10,
                              std::uint32_t min_relation_triples = 50);

}  // namespace kgtrim
