#include "kgtrim/trainer.hpp"

#include "kgtrim/evaluator.hpp"
#include "kgtrim/metrics.hpp"
#include "kgtrim/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace kgtrim {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    if (!(p_node >= 0.0 && p_node < 1.0)) throw ConfigError("node dropout must lie in [0,1)");
    if (!(p_msg >= 0.0 && p_msg < 1.0)) throw ConfigError("message dropout must lie in [0,1)");
    if (layers < 1) throw ConfigError("layer count must be >= 1");
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (n_neg < 1) throw ConfigError("n_neg must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val fraction must lie in [0,1)");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (l2 < 0.0) throw ConfigError("l2 must be non-negative");
}

GnnConfig TrainConfig::gnn() const {
    GnnConfig g;
    g.layers = layers;
    g.gamma = gamma;
    g.transform = transform;
    g.l2 = l2;
    g.dropout = DropoutSpec{p_node, p_msg};
    g.unit_scores = unit_scores;
    return g;
}

ItemId negative_sample(const InteractionGraph& inter, UserId u, std::mt19937_64& rng) {
    const auto& held = inter.train_edges[u];
    if (held.size() >= inter.num_items) {
        throw ValidationError("user " + std::to_string(u) + " interacted with every item");
    }
    // Rejection sampling stays uniform; fall back to an exact complement
    // draw if the interaction list is nearly full.
    for (int attempt = 0; attempt < 64; ++attempt) {
        const ItemId j = static_cast<ItemId>(uniform_index(rng, inter.num_items));
        if (!std::binary_search(held.begin(), held.end(), j)) return j;
    }
    const std::uint64_t free_count = inter.num_items - held.size();
    std::uint64_t pick = uniform_index(rng, free_count);
    ItemId j = 0;
    std::size_t h = 0;
    for (;; ++j) {
        if (h < held.size() && held[h] == j) {
            ++h;
            continue;
        }
        if (pick == 0) return j;
        --pick;
    }
}

namespace {

struct ValidationSplit {
    InteractionGraph model_graph;            // train minus the held-out slice
    std::vector<std::vector<ItemId>> val;    // held-out items per user
    bool any_val = false;
};

ValidationSplit make_validation_split(const InteractionGraph& inter, double fraction,
                                      std::uint64_t seed) {
    ValidationSplit out;
    std::vector<std::vector<ItemId>> kept(inter.num_users);
    out.val.resize(inter.num_users);
    for (UserId u = 0; u < inter.num_users; ++u) {
        const auto& items = inter.train_edges[u];
        const std::size_t holdout =
            static_cast<std::size_t>(std::floor(fraction * static_cast<double>(items.size())));
        if (holdout == 0) {
            kept[u] = items;
            continue;
        }
        std::vector<ItemId> shuffled = items;
        auto rng = make_rng(seed, "valsplit", u);
        for (std::size_t i = 0; i + 1 < shuffled.size(); ++i) {
            const std::size_t j = i + uniform_index(rng, shuffled.size() - i);
            std::swap(shuffled[i], shuffled[j]);
        }
        out.val[u].assign(shuffled.begin(), shuffled.begin() + holdout);
        kept[u].assign(shuffled.begin() + holdout, shuffled.end());
        std::sort(out.val[u].begin(), out.val[u].end());
        std::sort(kept[u].begin(), kept[u].end());
        out.any_val = true;
    }
    out.model_graph = build_interaction_graph(std::move(kept), std::vector<std::vector<ItemId>>{});
    // The id space must match the full graph even if the top item only
    // appears in a held-out or test slice.
    out.model_graph.num_items = inter.num_items;
    out.model_graph.item_to_entity.resize(inter.num_items);
    for (ItemId i = 0; i < inter.num_items; ++i) out.model_graph.item_to_entity[i] = i;
    if (out.model_graph.item_user_offsets.size() < inter.num_items + 1) {
        out.model_graph.item_user_offsets.resize(inter.num_items + 1,
                                                 out.model_graph.item_user_ids.size());
    }
    return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const InteractionGraph& inter,
                  const KnowledgeGraph& kg, const UserEntityMatrix& q) {
    config.validate();
    if (inter.train_edge_count == 0) throw ValidationError("empty training set");

    const std::uint32_t num_entities = std::max(kg.num_entities, inter.num_items);
    ParameterStore params = init_parameters(inter.num_users, num_entities, kg.num_relations,
                                            config.dim, config.seed);
    AdamState adam = init_adam(params);
    const GnnConfig gnn_cfg = config.gnn();

    ValidationSplit split = make_validation_split(inter, config.val_fraction, config.seed);
    const InteractionGraph& mg = split.model_graph;

    std::vector<BprSample> pairs;
    pairs.reserve(mg.train_edge_count);
    for (UserId u = 0; u < mg.num_users; ++u) {
        for (ItemId i : mg.train_edges[u]) pairs.push_back({u, i, 0});
    }
    if (pairs.empty()) throw ValidationError("empty training set after validation split");

    TrainResult res;
    std::uint64_t global_step = 0;

    for (std::uint32_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochLog entry;
        entry.epoch = epoch;

        auto shuffle_rng = make_rng(config.seed, "shuffle", epoch);
        for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
            const std::size_t j = i + uniform_index(shuffle_rng, pairs.size() - i);
            std::swap(pairs[i], pairs[j]);
        }
        auto neg_rng = make_rng(config.seed, "negative", epoch);

        double epoch_loss = 0.0;
        std::uint64_t epoch_terms = 0;
        std::vector<BprSample> batch;
        for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
            const std::size_t stop = std::min(pairs.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t p = start; p < stop; ++p) {
                for (std::uint32_t nn = 0; nn < config.n_neg; ++nn) {
                    BprSample s = pairs[p];
                    try {
                        s.neg = negative_sample(inter, s.user, neg_rng);
                    } catch (const ValidationError&) {
                        ++entry.skipped_pairs;
                        continue;
                    }
                    batch.push_back(s);
                }
            }
            if (batch.empty()) continue;

            auto dropout_rng = make_rng(config.seed, "dropout", global_step);
            GradResult grad;
            try {
                grad = compute_gradients(params, batch, kg, mg, q, gnn_cfg, Mode::Train,
                                         &dropout_rng);
            } catch (const NumericError& e) {
                res.aborted = true;
                res.abort_reason = std::string(e.what()) + " (epoch " + std::to_string(epoch) + ")";
                break;
            }
            adam_step(params, grad.grads, adam, config.lr);
            epoch_loss += grad.loss;
            epoch_terms += batch.size();
            ++global_step;
        }
        if (res.aborted) break;

        entry.loss = epoch_terms > 0 ? epoch_loss / static_cast<double>(epoch_terms) : 0.0;

        // Eval-mode snapshot of the aggregated scores.
        if (!config.unit_scores) {
            ImportanceScores snap = importance_scores(params, q, kg, config.gamma);
            res.mask_records.push_back({epoch, std::move(snap.aggregated)});
        }

        const bool eval_now = split.any_val && ((epoch + 1) % config.eval_every == 0 ||
                                                epoch + 1 == config.max_epochs);
        if (eval_now) {
            std::vector<double> scores;
            if (config.unit_scores) {
                scores.assign(kg.triples.size(), 1.0);
            } else {
                const ImportanceScores snap = importance_scores(params, q, kg, config.gamma);
                scores = triplet_scores_augmented(snap.aggregated, kg, config.transform);
            }
            const ForwardResult fwd = forward(params, kg, mg, scores, config.layers,
                                              DropoutSpec{}, Mode::Eval);
            const EvalReport rep = evaluate_ranking(fwd.final_user, fwd.final_entity,
                                                    mg.train_edges, split.val, inter.num_items,
                                                    {20}, config.threads);
            entry.val_recall20 = rep.recall.at(20);
            if (res.best_epoch < 0 || rep.recall.at(20) > res.best_val_recall) {
                res.best_val_recall = rep.recall.at(20);
                res.best_epoch = epoch;
                res.best_params = params;
            }
        }

        entry.wallclock_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(entry);
        res.epochs_run = epoch + 1;

        if (split.any_val && res.best_epoch >= 0 &&
            epoch - static_cast<std::uint32_t>(res.best_epoch) >= config.patience) {
            break;
        }
    }

    res.final_params = std::move(params);
    if (res.best_epoch < 0) res.best_params = res.final_params;
    return res;
}

}  // namespace kgtrim
