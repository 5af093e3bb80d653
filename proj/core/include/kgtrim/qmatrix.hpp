#pragma once
// User-entity matrix: which users can reach each entity through the
// collaborative graph. A path is one interaction edge followed by at most
// hop_limit KG edges (the augmented adjacency walks both directions).
// Columns are capped at k users via uniform sampling of the reachable set;
// per-entity RNG substreams keep the result independent of thread count.

#include "kgtrim/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kgtrim {

struct UserEntityMatrix {
    std::uint32_t k = 0;
    std::uint32_t hop_limit = 0;
    std::uint64_t seed = 0;

    // CSR: column v = users[offsets[v]..offsets[v+1]), sorted ascending.
    std::vector<std::uint64_t> offsets;
    std::vector<UserId> users;

    std::span<const UserId> column(EntityId v) const {
        return {users.data() + offsets[v], users.data() + offsets[v + 1]};
    }
    std::uint64_t column_size(EntityId v) const { return offsets[v + 1] - offsets[v]; }
    std::uint32_t num_entities() const {
        return offsets.empty() ? 0 : static_cast<std::uint32_t>(offsets.size() - 1);
    }
};

// Exact reachable-user set for one entity (sorted). hop_limit = 0 yields the
// interacting users when v is an item entity, empty otherwise.
std::vector<UserId> reachable_users(const CollaborativeGraph& ckg, EntityId v, std::uint32_t hop_limit);

UserEntityMatrix build_user_entity_matrix(const CollaborativeGraph& ckg, std::uint32_t k,
                                          std::uint32_t hop_limit, std::uint64_t seed,
                                          unsigned threads = 1);

// TSV dump/load: header line carries the cache key, then one line per
// non-empty column "entity_id u1 u2 ...".
void save_qmatrix(const UserEntityMatrix& q, const std::string& path, std::uint64_t dataset_hash);
// Returns empty optional when the file is missing or its key does not match.
std::optional<UserEntityMatrix> load_qmatrix(const std::string& path, std::uint64_t dataset_hash,
                                             std::uint32_t k, std::uint32_t hop_limit,
                                             std::uint64_t seed, std::uint32_t num_entities);

}  // namespace kgtrim
