#pragma once
// Training orchestration: shuffled mini-batches with sampled negatives,
// Adam updates with holistic projection, one eval-mode score snapshot per
// epoch, and early stopping on a held-out validation split (a seeded 10%
// slice of each user's training items).

#include "kgtrim/adam.hpp"
#include "kgtrim/gnn.hpp"
#include "kgtrim/graph.hpp"
#include "kgtrim/pruner.hpp"
#include "kgtrim/qmatrix.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kgtrim {

struct TrainConfig {
    std::uint32_t batch_size = 4096;
    double lr = 1e-3;   // paper grid: {1e-5, 1e-4, 1e-3}
    double l2 = 1e-5;   // grid: {1e-6 .. 1e-3}
    double gamma = 0.5;
    std::uint32_t k = 50;          // grid: {20, 50, 100, 200}
    std::uint32_t hop_limit = 2;
    std::uint32_t layers = 2;      // grid: {1, 2, 3}
    std::size_t dim = 64;
    std::uint32_t n_neg = 1;
    double p_node = 0.1;  // grid: {0.1 .. 0.7}
    double p_msg = 0.1;
    std::uint32_t max_epochs = 300;
    std::uint32_t patience = 100;
    std::uint64_t seed = 42;
    Transform transform = Transform::Tail;
    std::uint32_t eval_every = 5;
    double val_fraction = 0.1;
    bool unit_scores = false;  // backbone mode: importance fixed at 1
    unsigned threads = 1;

    void validate() const;
    GnnConfig gnn() const;
};

struct EpochLog {
    std::uint32_t epoch = 0;
    double loss = 0.0;
    std::optional<double> val_recall20;
    double wallclock_s = 0.0;
    std::uint64_t skipped_pairs = 0;
};

struct TrainResult {
    ParameterStore best_params;   // best validation checkpoint (final when no validation)
    ParameterStore final_params;
    std::vector<MaskRecord> mask_records;  // one per completed epoch
    std::vector<EpochLog> log;
    std::uint32_t epochs_run = 0;
    std::int64_t best_epoch = -1;  // -1: never validated
    double best_val_recall = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

// Uniform item j with no training interaction for u. Throws ValidationError
// when every item is interacted with.
ItemId negative_sample(const InteractionGraph& inter, UserId u, std::mt19937_64& rng);

TrainResult train(const TrainConfig& config, const InteractionGraph& inter,
                  const KnowledgeGraph& kg, const UserEntityMatrix& q);

}  // namespace kgtrim
