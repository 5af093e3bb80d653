#pragma once

#include "kgtrim/common.hpp"
#include "kgtrim/table.hpp"

#include <cstdint>
#include <string>

namespace kgtrim {

// Learnable state: embedding tables plus the per-entity holistic mask.
// holistic_raw is kept inside [0,1] by the optimizer projection; consumers
// that need a guaranteed range go through holistic_scores().
struct ParameterStore {
    Table user_embeddings;      // |U| x d
    Table entity_embeddings;    // |V| x d
    Table relation_embeddings;  // |R| x d, R counted after inverse augmentation
    std::vector<double> holistic_raw;
    std::size_t dim = 0;

    bool same_shape(const ParameterStore& o) const {
        return user_embeddings.same_shape(o.user_embeddings) &&
               entity_embeddings.same_shape(o.entity_embeddings) &&
               relation_embeddings.same_shape(o.relation_embeddings) &&
               holistic_raw.size() == o.holistic_raw.size();
    }

    bool all_finite() const;
};

// Xavier-uniform tables (bound sqrt(6/(rows+dim))), holistic mask at 1.
ParameterStore init_parameters(std::uint32_t num_users, std::uint32_t num_entities,
                               std::uint32_t num_relations, std::size_t dim, std::uint64_t seed);

// Versioned binary checkpoint of all tables plus a config fingerprint.
void save_checkpoint(const ParameterStore& params, const std::string& path,
                     const std::string& config_hash);
ParameterStore load_checkpoint(const std::string& path, std::string* config_hash_out = nullptr);

}  // namespace kgtrim
