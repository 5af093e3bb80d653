#include "kgtrim/metrics.hpp"

#include "kgtrim/parallel.hpp"
#include "kgtrim/pruner.hpp"
#include "kgtrim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kgtrim {

EvalReport evaluate_ranking(const Table& final_user, const Table& final_entity,
                            const std::vector<std::vector<ItemId>>& exclude,
                            const std::vector<std::vector<ItemId>>& targets,
                            std::uint32_t num_items, const std::vector<std::uint32_t>& ks,
                            unsigned threads) {
    if (ks.empty()) throw ConfigError("evaluate_ranking: no K values given");
    const std::uint32_t max_k = *std::max_element(ks.begin(), ks.end());
    const std::size_t num_users = targets.size();

    std::vector<double> recall_sum(ks.size(), 0.0), ndcg_sum(ks.size(), 0.0);
    std::uint64_t eval_users = 0;

    std::vector<UserId> active;
    for (UserId u = 0; u < num_users; ++u) {
        if (!targets[u].empty()) active.push_back(u);
    }
    if (active.empty()) throw ValidationError("evaluate_ranking: no users with target items");

    std::vector<std::vector<double>> recall_part(active.size()), ndcg_part(active.size());
    parallel_for(active.size(), threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> score(num_items);
        std::vector<ItemId> order(num_items);
        std::vector<char> is_target(num_items, 0);
        for (std::size_t idx = lo; idx < hi; ++idx) {
            const UserId u = active[idx];
            const auto fu = final_user.row(u);
            for (ItemId i = 0; i < num_items; ++i) score[i] = dot(fu, final_entity.row(i));
            for (ItemId i : exclude[u]) score[i] = -std::numeric_limits<double>::infinity();

            const std::uint32_t top = std::min<std::uint32_t>(max_k, num_items);
            std::iota(order.begin(), order.end(), 0);
            std::partial_sort(order.begin(), order.begin() + top, order.end(),
                              [&](ItemId a, ItemId b) {
                                  return score[a] != score[b] ? score[a] > score[b] : a < b;
                              });

            for (ItemId t : targets[u]) is_target[t] = 1;
            recall_part[idx].resize(ks.size());
            ndcg_part[idx].resize(ks.size());
            for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                const std::uint32_t k = std::min<std::uint32_t>(ks[ki], top);
                std::uint32_t hits = 0;
                double dcg = 0.0;
                for (std::uint32_t r = 0; r < k; ++r) {
                    if (is_target[order[r]]) {
                        ++hits;
                        dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
                    }
                }
                double idcg = 0.0;
                const std::uint32_t ideal = std::min<std::uint32_t>(k, targets[u].size());
                for (std::uint32_t r = 0; r < ideal; ++r) {
                    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
                }
                recall_part[idx][ki] = static_cast<double>(hits) / static_cast<double>(targets[u].size());
                ndcg_part[idx][ki] = idcg > 0.0 ? dcg / idcg : 0.0;
            }
            for (ItemId t : targets[u]) is_target[t] = 0;
        }
    });

    for (std::size_t idx = 0; idx < active.size(); ++idx) {
        ++eval_users;
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            recall_sum[ki] += recall_part[idx][ki];
            ndcg_sum[ki] += ndcg_part[idx][ki];
        }
    }

    EvalReport report;
    report.num_eval_users = eval_users;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        report.recall[ks[ki]] = recall_sum[ki] / static_cast<double>(eval_users);
        report.ndcg[ks[ki]] = ndcg_sum[ki] / static_cast<double>(eval_users);
    }
    return report;
}

EvalReport evaluate_all_ranking(const Table& final_user, const Table& final_entity,
                                const InteractionGraph& inter,
                                const std::vector<std::uint32_t>& ks, unsigned threads) {
    return evaluate_ranking(final_user, final_entity, inter.train_edges, inter.test_edges,
                            inter.num_items, ks, threads);
}

std::vector<EntityId> pop_removal_order(const KnowledgeGraph& kg) {
    std::vector<EntityId> order(kg.num_entities);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
        return kg.in_degree[a] != kg.in_degree[b] ? kg.in_degree[a] > kg.in_degree[b] : a < b;
    });
    return order;
}

std::vector<std::uint8_t> pop_baseline(const KnowledgeGraph& kg, double ratio) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("pop: ratio must lie in [0,1)");
    const std::uint64_t target =
        static_cast<std::uint64_t>(std::ceil(ratio * static_cast<double>(kg.num_canonical)));

    // Canonical triples incident to each entity.
    std::vector<std::vector<TripleIndex>> incident(kg.num_entities);
    for (TripleIndex k = 0; k < kg.num_canonical; ++k) {
        const Triple& t = kg.triples[k];
        incident[t.head].push_back(k);
        if (t.tail != t.head) incident[t.tail].push_back(k);
    }

    std::vector<std::uint8_t> keep(kg.num_canonical, 1);
    std::uint64_t pruned = 0;
    for (EntityId v : pop_removal_order(kg)) {
        if (pruned >= target) break;
        for (TripleIndex k : incident[v]) {
            if (keep[k]) {
                keep[k] = 0;
                ++pruned;
            }
        }
    }
    return keep;
}

std::vector<std::uint8_t> norm_baseline(const ParameterStore& params, const KnowledgeGraph& kg,
                                        double ratio) {
    if (params.entity_embeddings.rows() < kg.num_entities) {
        throw ValidationError("norm baseline: checkpoint entity table smaller than graph");
    }
    std::vector<double> enorm(kg.num_entities);
    for (EntityId v = 0; v < kg.num_entities; ++v) {
        enorm[v] = std::sqrt(norm2(params.entity_embeddings.row(v)));
    }
    std::vector<double> score(kg.num_canonical);
    for (TripleIndex k = 0; k < kg.num_canonical; ++k) {
        score[k] = enorm[kg.triples[k].head] * enorm[kg.triples[k].tail];
    }
    return binarize_percentile(score, ratio).mask;
}

std::vector<std::uint8_t> random_mask(std::uint64_t num_canonical, double ratio, std::uint64_t seed) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("random mask: ratio must lie in [0,1)");
    const std::uint64_t kept_count = static_cast<std::uint64_t>(
        std::ceil((1.0 - ratio) * static_cast<double>(num_canonical)));
    std::vector<TripleIndex> idx(num_canonical);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(seed, "random-mask");
    for (std::uint64_t i = 0; i + 1 < idx.size(); ++i) {
        const std::uint64_t j = i + uniform_index(rng, idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::uint8_t> keep(num_canonical, 0);
    for (std::uint64_t i = 0; i < kept_count; ++i) keep[idx[i]] = 1;
    return keep;
}

}  // namespace kgtrim
