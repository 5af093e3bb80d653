#pragma once
// Importance-aware propagation and its exact gradients.
//
// KG side:  e_v(l) = (1/|N_v|) sum over out-edges (v,r,t) of
//              s(v,r,t) * (e_t(l-1) ⊙ e_r)
// CF side:  e_u(l) = (1/|N_u|) sum over train items of e_i(l-1)
// Readout:  sum of layers 0..L; prediction is the user/item inner product;
// training loss is BPR (negated log-sigmoid of the pairwise gap).
//
// Gradients are hand-derived reverse-mode over this fixed graph, including
// the evaluator path: triple scores depend on user/entity/relation
// embeddings (collective view) and on the holistic mask. Dropout masks are
// sampled per step and treated as constants; finite differences against the
// same masks must agree to ~1e-7 relative.

#include "kgtrim/evaluator.hpp"
#include "kgtrim/graph.hpp"
#include "kgtrim/params.hpp"
#include "kgtrim/qmatrix.hpp"
#include "kgtrim/rng.hpp"

#include <cstdint>
#include <vector>

namespace kgtrim {

struct LayerState {
    std::vector<Table> entity_layers;  // L+1 tables, layer 0 = parameter rows
    std::vector<Table> user_layers;
    std::uint32_t L = 0;
};

struct ForwardResult {
    Table final_user;
    Table final_entity;
    LayerState layers;
};

struct GradientStore {
    Table user;
    Table entity;
    Table relation;
    std::vector<double> holistic_raw;

    bool all_finite() const;
};

struct DropoutSpec {
    double p_node = 0.0;  // per-step triple mask, survivors scaled 1/(1-p)
    double p_msg = 0.0;   // per-layer output coordinate mask, scaled 1/(1-p)
};

enum class Mode { Train, Eval };

struct BprSample {
    UserId user = 0;
    ItemId pos = 0;
    ItemId neg = 0;
};

struct GnnConfig {
    std::uint32_t layers = 2;
    double gamma = 0.5;
    Transform transform = Transform::Tail;
    double l2 = 1e-5;
    DropoutSpec dropout;
    bool unit_scores = false;  // backbone mode: triple scores fixed at 1
};

// Single propagation steps (building blocks; also used by oracles).
Table kg_propagate_layer(const Table& entity_in, const ParameterStore& params,
                         const std::vector<double>& triplet_scores, const KnowledgeGraph& kg);
Table cf_propagate_layer(const Table& entity_in, const InteractionGraph& inter);

// Full forward. `triplet_scores` is aligned with kg.triples (augmented).
// Train mode samples dropout from rng; eval mode is deterministic and
// ignores rng (may be null).
ForwardResult forward(const ParameterStore& params, const KnowledgeGraph& kg,
                      const InteractionGraph& inter, const std::vector<double>& triplet_scores,
                      std::uint32_t L, const DropoutSpec& dropout, Mode mode,
                      std::mt19937_64* rng = nullptr);

double predict(const Table& final_user, const Table& final_entity, UserId u, ItemId i,
               std::uint32_t num_items);

// Sum over pairs of -log sigmoid(pos - neg), numerically stable.
double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores);

struct GradResult {
    double loss = 0.0;
    GradientStore grads;
    std::vector<double> s_hat;  // entity scores used this step
};

// Loss and exact gradients for one batch. Train mode applies dropout (masks
// from rng); the returned gradients are for the realized masks.
GradResult compute_gradients(const ParameterStore& params, const std::vector<BprSample>& batch,
                             const KnowledgeGraph& kg, const InteractionGraph& inter,
                             const UserEntityMatrix& q, const GnnConfig& config, Mode mode,
                             std::mt19937_64* rng);

}  // namespace kgtrim
