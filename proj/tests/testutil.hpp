#pragma once
// Fixtures and independent oracles. Oracles here must not share code with
// the implementation paths they check: reachability is a plain BFS over
// edge lists, metric oracles fully sort, gradient checks use central finite
// differences on the loss value.

#include "kgtrim/gnn.hpp"
#include "kgtrim/graph.hpp"
#include "kgtrim/qmatrix.hpp"
#include "kgtrim/synthetic.hpp"
#include "kgtrim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

namespace kgtest {

using namespace kgtrim;

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("kgtrim_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }

    static int& counter() {
        static int c = 0;
        return c;
    }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

// --- Oracles -------------------------------------------------------------

// Plain BFS over (undirected through augmentation) triple lists.
inline std::set<UserId> bfs_reachable_users(const InteractionGraph& inter,
                                            const KnowledgeGraph& kg, EntityId v,
                                            std::uint32_t hop_limit) {
    const std::uint32_t entities = std::max(kg.num_entities, inter.num_items);
    std::vector<int> dist(entities, -1);
    std::vector<EntityId> queue{v};
    dist[v] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const EntityId cur = queue[qi];
        if (dist[cur] >= static_cast<int>(hop_limit)) continue;
        for (const Triple& t : kg.triples) {  // augmented: both directions present
            if (t.head == cur && dist[t.tail] < 0) {
                dist[t.tail] = dist[cur] + 1;
                queue.push_back(t.tail);
            }
        }
    }
    std::set<UserId> users;
    for (EntityId e : queue) {
        if (e >= inter.num_items) continue;
        for (UserId u = 0; u < inter.num_users; ++u) {
            const auto& items = inter.train_edges[u];
            if (std::find(items.begin(), items.end(), e) != items.end()) users.insert(u);
        }
    }
    return users;
}

// Naive double-loop collective score for one entity.
inline double naive_collective_score(const ParameterStore& params, const KnowledgeGraph& kg,
                                     const std::vector<UserId>& column, EntityId v) {
    const std::size_t d = params.dim;
    std::vector<double> enriched(params.entity_embeddings.row(v).begin(),
                                 params.entity_embeddings.row(v).end());
    std::vector<RelationId> rels;
    for (const Triple& t : kg.triples) {
        if (t.tail == v) rels.push_back(t.rel);
    }
    if (!rels.empty()) {
        std::vector<double> mean(d, 0.0);
        for (RelationId r : rels) {
            for (std::size_t c = 0; c < d; ++c) mean[c] += params.relation_embeddings.row(r)[c];
        }
        for (std::size_t c = 0; c < d; ++c) {
            enriched[c] = params.entity_embeddings.row(v)[c] * mean[c] / rels.size();
        }
    }
    if (column.empty()) return 0.0;
    double sum = 0.0;
    for (UserId u : column) {
        double ab = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double a = params.user_embeddings.row(u)[c];
            ab += a * enriched[c];
            na += a * a;
            nb += enriched[c] * enriched[c];
        }
        if (na > 0.0 && nb > 0.0) sum += std::max(0.0, ab / (std::sqrt(na) * std::sqrt(nb)));
    }
    return sum / static_cast<double>(column.size());
}

// Per-edge message sum, one entity, one layer.
inline std::vector<double> naive_kg_message(const Table& entity_in, const ParameterStore& params,
                                            const std::vector<double>& scores,
                                            const KnowledgeGraph& kg, EntityId v) {
    const std::size_t d = entity_in.dim();
    std::vector<double> out(d, 0.0);
    std::size_t deg = 0;
    for (std::size_t k = 0; k < kg.triples.size(); ++k) {
        if (kg.triples[k].head != v) continue;
        ++deg;
        for (std::size_t c = 0; c < d; ++c) {
            out[c] += scores[k] * entity_in.row(kg.triples[k].tail)[c] *
                      params.relation_embeddings.row(kg.triples[k].rel)[c];
        }
    }
    if (deg > 0) {
        for (double& x : out) x /= static_cast<double>(deg);
    }
    return out;
}

// Full-sort ranking metrics for one user.
struct OracleMetrics {
    double recall = 0.0;
    double ndcg = 0.0;
};
inline OracleMetrics oracle_rank_metrics(const std::vector<double>& item_scores,
                                         const std::vector<ItemId>& exclude,
                                         const std::vector<ItemId>& targets, std::uint32_t K) {
    std::vector<ItemId> order;
    for (ItemId i = 0; i < item_scores.size(); ++i) {
        if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
        if (item_scores[a] != item_scores[b]) return item_scores[a] > item_scores[b];
        return a < b;
    });
    OracleMetrics m;
    double dcg = 0.0;
    std::uint32_t hits = 0;
    for (std::uint32_t r = 0; r < std::min<std::size_t>(K, order.size()); ++r) {
        if (std::find(targets.begin(), targets.end(), order[r]) != targets.end()) {
            ++hits;
            dcg += 1.0 / std::log2(r + 2.0);
        }
    }
    double idcg = 0.0;
    for (std::uint32_t r = 0; r < std::min<std::size_t>(K, targets.size()); ++r) {
        idcg += 1.0 / std::log2(r + 2.0);
    }
    m.recall = targets.empty() ? 0.0 : static_cast<double>(hits) / targets.size();
    m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
    return m;
}

// Central finite difference of the batch loss with respect to one parameter
// coordinate. Runs the same dropout-free loss path the analytic gradient
// differentiates.
inline double fd_loss(const ParameterStore& params, const std::vector<BprSample>& batch,
                      const KnowledgeGraph& kg, const InteractionGraph& inter,
                      const UserEntityMatrix& q, const GnnConfig& config) {
    return compute_gradients(params, batch, kg, inter, q, config, Mode::Eval, nullptr).loss;
}

enum class ParamGroup { User, Entity, Relation, Holistic };

inline double* param_slot(ParameterStore& p, ParamGroup g, std::size_t i) {
    switch (g) {
        case ParamGroup::User: return &p.user_embeddings.data()[i];
        case ParamGroup::Entity: return &p.entity_embeddings.data()[i];
        case ParamGroup::Relation: return &p.relation_embeddings.data()[i];
        case ParamGroup::Holistic: return &p.holistic_raw[i];
    }
    return nullptr;
}

inline std::size_t param_count(const ParameterStore& p, ParamGroup g) {
    switch (g) {
        case ParamGroup::User: return p.user_embeddings.data().size();
        case ParamGroup::Entity: return p.entity_embeddings.data().size();
        case ParamGroup::Relation: return p.relation_embeddings.data().size();
        case ParamGroup::Holistic: return p.holistic_raw.size();
    }
    return 0;
}

inline double grad_slot(const GradientStore& g, ParamGroup pg, std::size_t i) {
    switch (pg) {
        case ParamGroup::User: return g.user.data()[i];
        case ParamGroup::Entity: return g.entity.data()[i];
        case ParamGroup::Relation: return g.relation.data()[i];
        case ParamGroup::Holistic: return g.holistic_raw[i];
    }
    return 0.0;
}

// Max relative error between analytic gradients and central differences over
// every coordinate of one parameter group. Denominator floored so the O(h^2)
// truncation noise of near-zero coordinates does not dominate.
inline double fd_max_rel_error(const ParameterStore& params, const std::vector<BprSample>& batch,
                               const KnowledgeGraph& kg, const InteractionGraph& inter,
                               const UserEntityMatrix& q, const GnnConfig& config, ParamGroup group,
                               double step = 1e-4) {
    const GradResult analytic = compute_gradients(params, batch, kg, inter, q, config,
                                                  Mode::Eval, nullptr);
    ParameterStore work = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < param_count(work, group); ++i) {
        double* slot = param_slot(work, group, i);
        const double saved = *slot;
        *slot = saved + step;
        const double up = fd_loss(work, batch, kg, inter, q, config);
        *slot = saved - step;
        const double down = fd_loss(work, batch, kg, inter, q, config);
        *slot = saved;
        const double fd = (up - down) / (2.0 * step);
        const double an = grad_slot(analytic.grads, group, i);
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-2});
        worst = std::max(worst, rel);
    }
    return worst;
}

// Tiny deterministic fixture: 5 users, 6 items, 10 entities, 2 relations.
struct TinyFixture {
    InteractionGraph inter;
    KnowledgeGraph kg;
};

inline TinyFixture tiny_fixture() {
    TinyFixture f;
    std::vector<std::vector<ItemId>> train = {
        {0, 1, 3}, {1, 2}, {2, 4, 5}, {0, 5}, {3, 4},
    };
    std::vector<std::vector<ItemId>> test = {
        {2}, {0}, {1}, {3}, {5},
    };
    f.inter = build_interaction_graph(std::move(train), std::move(test));
    // Items 0..5 as entities, non-item entities 6..9.
    std::vector<Triple> triples = {
        {0, 0, 6}, {1, 0, 6}, {2, 0, 7}, {3, 1, 7}, {4, 0, 8},
        {5, 1, 8}, {6, 1, 9}, {7, 0, 9}, {1, 1, 8}, {2, 1, 6},
    };
    f.kg = build_knowledge_graph(std::move(triples), 10, 2);
    return f;
}

inline ParameterStore random_params(std::uint32_t users, std::uint32_t entities,
                                    std::uint32_t relations, std::size_t dim, std::uint64_t seed,
                                    bool random_holistic = false) {
    ParameterStore p = init_parameters(users, entities, relations, dim, seed);
    if (random_holistic) {
        std::mt19937_64 rng(seed ^ 0x5eedULL);
        for (double& h : p.holistic_raw) h = 0.2 + 0.6 * uniform_real(rng, 0.0, 1.0);
    }
    return p;
}

}  // namespace kgtest
