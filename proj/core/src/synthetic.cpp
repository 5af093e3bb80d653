#include "kgtrim/synthetic.hpp"

#include "kgtrim/rng.hpp"

#include <algorithm>
#include <cmath>

namespace kgtrim {

SyntheticData make_planted_hub(const SyntheticSpec& spec) {
    if (spec.num_clusters < 1 || spec.num_items < spec.num_clusters) {
        throw ConfigError("synthetic: need at least one item per cluster");
    }
    SyntheticData data;
    const std::uint32_t I = spec.num_items;
    const std::uint32_t D = spec.discriminative_entities;
    const std::uint32_t H = spec.hub_entities;
    const std::uint32_t C = spec.num_clusters;

    data.item_cluster.resize(I);
    for (ItemId i = 0; i < I; ++i) data.item_cluster[i] = i % C;

    std::vector<std::vector<EntityId>> cluster_discr(C);
    for (std::uint32_t j = 0; j < D; ++j) {
        const EntityId e = I + j;
        data.discriminative_ids.push_back(e);
        cluster_discr[j % C].push_back(e);
    }
    for (std::uint32_t j = 0; j < H; ++j) data.hub_ids.push_back(I + D + j);

    std::vector<Triple> triples;

    // Item -> own-cluster discriminative entities (relation 0).
    for (ItemId i = 0; i < I; ++i) {
        const auto& pool = cluster_discr[data.item_cluster[i]];
        auto rng = make_rng(spec.seed, "kg-links", i);
        const auto picks = sample_without_replacement(rng, pool, spec.links_per_item);
        for (EntityId e : picks) triples.push_back({i, 0, e});
    }

    // Item -> hub (relation 1); each hub covers hub_coverage of the items.
    const auto covered = static_cast<std::uint32_t>(
        std::ceil(spec.hub_coverage * static_cast<double>(I)));
    std::vector<ItemId> all_items(I);
    for (ItemId i = 0; i < I; ++i) all_items[i] = i;
    for (std::uint32_t j = 0; j < H; ++j) {
        auto rng = make_rng(spec.seed, "hub-links", j);
        const auto picks = sample_without_replacement(rng, all_items, covered);
        for (ItemId i : picks) triples.push_back({i, 1, data.hub_ids[j]});
    }

    // Interactions: mostly own-cluster items, a noise share from the rest.
    std::vector<std::vector<ItemId>> cluster_items(C);
    for (ItemId i = 0; i < I; ++i) cluster_items[data.item_cluster[i]].push_back(i);
    std::vector<std::vector<ItemId>> train(spec.num_users), test(spec.num_users);
    const std::uint32_t per_user = spec.train_per_user + spec.test_per_user;
    for (UserId u = 0; u < spec.num_users; ++u) {
        const std::uint32_t c = u % C;
        auto rng = make_rng(spec.seed, "interactions", u);

        std::vector<ItemId> other;
        other.reserve(I - cluster_items[c].size());
        for (ItemId i = 0; i < I; ++i) {
            if (data.item_cluster[i] != c) other.push_back(i);
        }
        const auto n_noise = static_cast<std::uint32_t>(
            std::llround(spec.noise_fraction * static_cast<double>(per_user)));
        const std::uint32_t n_own = per_user - n_noise;

        std::vector<ItemId> chosen = sample_without_replacement(rng, cluster_items[c], n_own);
        const auto noise = sample_without_replacement(rng, other, n_noise);
        chosen.insert(chosen.end(), noise.begin(), noise.end());
        for (std::size_t i = 0; i + 1 < chosen.size(); ++i) {
            const std::size_t j = i + uniform_index(rng, chosen.size() - i);
            std::swap(chosen[i], chosen[j]);
        }

        const std::size_t n_test = std::min<std::size_t>(spec.test_per_user, chosen.size());
        test[u].assign(chosen.begin(), chosen.begin() + n_test);
        train[u].assign(chosen.begin() + n_test, chosen.end());
    }

    data.inter = build_interaction_graph(std::move(train), std::move(test));
    data.inter.num_items = std::max(data.inter.num_items, I);
    if (data.inter.item_to_entity.size() < I) {
        data.inter.item_to_entity.resize(I);
        for (ItemId i = 0; i < I; ++i) data.inter.item_to_entity[i] = i;
        data.inter.item_user_offsets.resize(I + 1, data.inter.item_user_ids.size());
    }
    data.kg = build_knowledge_graph(std::move(triples), I + D + H, 2);
    return data;
}

SyntheticSpec perf_spec(std::uint64_t seed) {
    SyntheticSpec s;
    s.num_users = 1000;
    s.num_items = 500;
    s.num_clusters = 5;
    s.discriminative_entities = 100;
    s.hub_entities = 10;
    s.hub_coverage = 0.9;   // 10 * 450 = 4500 hub triples
    s.links_per_item = 11;  // 500 * 11 = 5500 item links; 10k canonical total
    s.train_per_user = 8;
    s.test_per_user = 2;
    s.seed = seed;
    return s;
}

}  // namespace kgtrim
