#include "kgtrim/qmatrix.hpp"

#include "kgtrim/parallel.hpp"
#include "kgtrim/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace kgtrim {

namespace {

// Bounded BFS from entity v over the augmented adjacency, collecting item
// entities within hop_limit, then the union of their interacting users.
// Scratch buffers are reused across entities; `stamp` marks visited state.
struct ReachScratch {
    std::vector<std::uint32_t> visit_stamp;
    std::vector<std::uint32_t> user_stamp;
    std::vector<EntityId> frontier, next, items;
    std::uint32_t epoch = 0;
};

std::vector<UserId> reachable_users_impl(const CollaborativeGraph& ckg, EntityId v,
                                         std::uint32_t hop_limit, ReachScratch& scratch) {
    const KnowledgeGraph& kg = *ckg.kg;
    const InteractionGraph& inter = *ckg.inter;

    if (scratch.visit_stamp.size() < ckg.num_entities) scratch.visit_stamp.assign(ckg.num_entities, 0);
    if (scratch.user_stamp.size() < inter.num_users) scratch.user_stamp.assign(inter.num_users, 0);
    ++scratch.epoch;
    const std::uint32_t ep = scratch.epoch;

    scratch.items.clear();
    scratch.frontier.clear();
    scratch.frontier.push_back(v);
    scratch.visit_stamp[v] = ep;
    if (ckg.is_item(v)) scratch.items.push_back(v);

    const auto kg_has_entity = [&](EntityId e) { return e < kg.num_entities; };
    for (std::uint32_t hop = 0; hop < hop_limit && !scratch.frontier.empty(); ++hop) {
        scratch.next.clear();
        for (EntityId cur : scratch.frontier) {
            if (!kg_has_entity(cur)) continue;
            for (TripleIndex t : kg.out_edges(cur)) {
                const EntityId nbr = kg.triples[t].tail;
                if (scratch.visit_stamp[nbr] == ep) continue;
                scratch.visit_stamp[nbr] = ep;
                scratch.next.push_back(nbr);
                if (ckg.is_item(nbr)) scratch.items.push_back(nbr);
            }
        }
        scratch.frontier.swap(scratch.next);
    }

    std::vector<UserId> result;
    for (EntityId item : scratch.items) {
        for (UserId u : inter.users_of_item(item)) {
            if (scratch.user_stamp[u] == ep) continue;
            scratch.user_stamp[u] = ep;
            result.push_back(u);
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

}  // namespace

std::vector<UserId> reachable_users(const CollaborativeGraph& ckg, EntityId v, std::uint32_t hop_limit) {
    ReachScratch scratch;
    return reachable_users_impl(ckg, v, hop_limit, scratch);
}

UserEntityMatrix build_user_entity_matrix(const CollaborativeGraph& ckg, std::uint32_t k,
                                          std::uint32_t hop_limit, std::uint64_t seed,
                                          unsigned threads) {
    if (k < 1) throw ConfigError("qmatrix: k must be >= 1");
    const std::uint32_t n = ckg.num_entities;

    UserEntityMatrix q;
    q.k = k;
    q.hop_limit = hop_limit;
    q.seed = seed;

    std::vector<std::vector<UserId>> columns(n);
    parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
        ReachScratch scratch;
        for (std::size_t v = lo; v < hi; ++v) {
            std::vector<UserId> reach =
                reachable_users_impl(ckg, static_cast<EntityId>(v), hop_limit, scratch);
            if (reach.size() > k) {
                auto rng = make_rng(seed, "qmatrix", v);
                reach = sample_without_replacement(rng, reach, k);
                std::sort(reach.begin(), reach.end());
            }
            columns[v] = std::move(reach);
        }
    });

    q.offsets.assign(n + 1, 0);
    for (std::uint32_t v = 0; v < n; ++v) q.offsets[v + 1] = q.offsets[v] + columns[v].size();
    q.users.reserve(q.offsets[n]);
    for (std::uint32_t v = 0; v < n; ++v)
        q.users.insert(q.users.end(), columns[v].begin(), columns[v].end());
    return q;
}

void save_qmatrix(const UserEntityMatrix& q, const std::string& path, std::uint64_t dataset_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << "#qmatrix\t" << hex64(dataset_hash) << '\t' << q.k << '\t' << q.hop_limit << '\t'
        << q.seed << '\t' << q.num_entities() << '\n';
    for (std::uint32_t v = 0; v < q.num_entities(); ++v) {
        const auto col = q.column(v);
        if (col.empty()) continue;
        out << v;
        for (UserId u : col) out << ' ' << u;
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::optional<UserEntityMatrix> load_qmatrix(const std::string& path, std::uint64_t dataset_hash,
                                             std::uint32_t k, std::uint32_t hop_limit,
                                             std::uint64_t seed, std::uint32_t num_entities) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string header;
    if (!std::getline(in, header)) return std::nullopt;
    std::ostringstream want;
    want << "#qmatrix\t" << hex64(dataset_hash) << '\t' << k << '\t' << hop_limit << '\t' << seed
         << '\t' << num_entities;
    if (header != want.str()) return std::nullopt;

    std::vector<std::vector<UserId>> columns(num_entities);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::uint64_t v = 0;
        if (!(ss >> v) || v >= num_entities) return std::nullopt;
        UserId u;
        while (ss >> u) columns[v].push_back(u);
    }
    UserEntityMatrix q;
    q.k = k;
    q.hop_limit = hop_limit;
    q.seed = seed;
    q.offsets.assign(num_entities + 1, 0);
    for (std::uint32_t v = 0; v < num_entities; ++v)
        q.offsets[v + 1] = q.offsets[v] + columns[v].size();
    q.users.reserve(q.offsets[num_entities]);
    for (std::uint32_t v = 0; v < num_entities; ++v)
        q.users.insert(q.users.end(), columns[v].begin(), columns[v].end());
    return q;
}

}  // namespace kgtrim
