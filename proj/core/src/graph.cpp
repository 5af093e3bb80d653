#include "kgtrim/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kgtrim {

namespace {

std::string read_whole_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Walks a text buffer as lines of unsigned integers.
struct IntLineScanner {
    const char* p;
    const char* end;
    std::uint64_t line_no = 0;
    std::string path;

    IntLineScanner(const std::string& buf, std::string file)
        : p(buf.data()), end(buf.data() + buf.size()), path(std::move(file)) {}

    // Fills `out` with the integers of the next non-empty line.
    // Returns false at end of input.
    bool next_line(std::vector<std::uint64_t>& out) {
        out.clear();
        while (p < end) {
            ++line_no;
            const char* line_start = p;
            const char* nl = static_cast<const char*>(memchr(p, '\n', end - p));
            const char* line_end = nl ? nl : end;
            p = nl ? nl + 1 : end;

            const char* c = line_start;
            while (c < line_end) {
                while (c < line_end && (*c == ' ' || *c == '\t' || *c == '\r')) ++c;
                if (c >= line_end) break;
                std::uint64_t value = 0;
                auto [next, ec] = std::from_chars(c, line_end, value);
                if (ec != std::errc() ||
                    (next < line_end && *next != ' ' && *next != '\t' && *next != '\r')) {
                    throw ParseError(path + ":" + std::to_string(line_no) +
                                     ": expected integer token");
                }
                out.push_back(value);
                c = next;
            }
            if (!out.empty()) return true;
        }
        return false;
    }
};

void check_id_fits(std::uint64_t v, std::uint64_t bound, const std::string& what,
                   const std::string& path, std::uint64_t line) {
    if (v >= bound) {
        throw ValidationError(path + ":" + std::to_string(line) + ": " + what + " id " +
                              std::to_string(v) + " exceeds vocabulary of " + std::to_string(bound));
    }
}

void parse_interaction_file(const std::string& path,
                            std::vector<std::vector<ItemId>>& edges,
                            std::uint64_t& max_user, std::uint64_t& max_item, bool& any) {
    const std::string buf = read_whole_file(path);
    IntLineScanner scan(buf, path);
    std::vector<std::uint64_t> toks;
    while (scan.next_line(toks)) {
        const std::uint64_t u = toks[0];
        if (u > 0xFFFFFFFFull) throw ValidationError(path + ": user id out of range");
        max_user = std::max(max_user, u);
        if (u >= edges.size()) edges.resize(u + 1);
        for (std::size_t t = 1; t < toks.size(); ++t) {
            if (toks[t] > 0xFFFFFFFFull) throw ValidationError(path + ": item id out of range");
            max_item = std::max(max_item, toks[t]);
            edges[u].push_back(static_cast<ItemId>(toks[t]));
            any = true;
        }
    }
}

std::uint64_t dedup_sorted_lists(std::vector<std::vector<ItemId>>& edges) {
    std::uint64_t dupes = 0;
    for (auto& list : edges) {
        std::sort(list.begin(), list.end());
        const auto last = std::unique(list.begin(), list.end());
        dupes += static_cast<std::uint64_t>(list.end() - last);
        list.erase(last, list.end());
    }
    return dupes;
}

}  // namespace

InteractionGraph build_interaction_graph(std::vector<std::vector<ItemId>> train,
                                         std::vector<std::vector<ItemId>> test) {
    InteractionGraph g;
    if (test.size() < train.size()) test.resize(train.size());
    if (train.size() < test.size()) train.resize(test.size());
    g.report.duplicate_interactions = dedup_sorted_lists(train) + dedup_sorted_lists(test);

    std::uint64_t max_item = 0;
    bool any_item = false;
    for (const auto& list : train)
        for (ItemId i : list) { max_item = std::max<std::uint64_t>(max_item, i); any_item = true; }
    for (const auto& list : test)
        for (ItemId i : list) { max_item = std::max<std::uint64_t>(max_item, i); any_item = true; }

    g.num_users = static_cast<std::uint32_t>(train.size());
    g.num_items = any_item ? static_cast<std::uint32_t>(max_item + 1) : 0;
    g.train_edges = std::move(train);
    g.test_edges = std::move(test);

    for (UserId u = 0; u < g.num_users; ++u) {
        const auto& tr = g.train_edges[u];
        const auto& te = g.test_edges[u];
        std::size_t a = 0, b = 0;
        while (a < tr.size() && b < te.size()) {
            if (tr[a] == te[b]) {
                throw ValidationError("train/test overlap for user " + std::to_string(u) +
                                      " at item " + std::to_string(tr[a]));
            }
            tr[a] < te[b] ? ++a : ++b;
        }
        g.train_edge_count += tr.size();
        g.test_edge_count += te.size();
    }

    g.item_to_entity.resize(g.num_items);
    for (ItemId i = 0; i < g.num_items; ++i) g.item_to_entity[i] = i;

    // item -> train users CSR
    std::vector<std::uint64_t> counts(g.num_items + 1, 0);
    for (UserId u = 0; u < g.num_users; ++u)
        for (ItemId i : g.train_edges[u]) ++counts[i + 1];
    for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
    g.item_user_offsets = counts;
    g.item_user_ids.resize(g.train_edge_count);
    std::vector<std::uint64_t> cursor(g.item_user_offsets.begin(), g.item_user_offsets.end() - 1);
    for (UserId u = 0; u < g.num_users; ++u)
        for (ItemId i : g.train_edges[u]) g.item_user_ids[cursor[i]++] = u;
    return g;
}

InteractionGraph load_interactions(const std::string& train_path, const std::string& test_path) {
    std::vector<std::vector<ItemId>> train, test;
    std::uint64_t max_user = 0, max_item = 0;
    bool any_train = false, any_test = false;
    parse_interaction_file(train_path, train, max_user, max_item, any_train);
    parse_interaction_file(test_path, test, max_user, max_item, any_test);
    if (!any_train) throw ValidationError("empty dataset: no interactions in " + train_path);
    return build_interaction_graph(std::move(train), std::move(test));
}

KnowledgeGraph build_knowledge_graph(std::vector<Triple> canonical,
                                     std::optional<std::uint32_t> expected_entities,
                                     std::optional<std::uint32_t> expected_canonical_relations) {
    KnowledgeGraph kg;

    std::sort(canonical.begin(), canonical.end());
    const auto last = std::unique(canonical.begin(), canonical.end());
    kg.report.duplicate_triples = static_cast<std::uint64_t>(canonical.end() - last);
    canonical.erase(last, canonical.end());

    std::uint64_t max_entity = 0, max_rel = 0;
    for (const Triple& t : canonical) {
        max_entity = std::max<std::uint64_t>(max_entity, std::max(t.head, t.tail));
        max_rel = std::max<std::uint64_t>(max_rel, t.rel);
    }
    const std::uint32_t derived_entities = canonical.empty() ? 0 : static_cast<std::uint32_t>(max_entity + 1);
    const std::uint32_t derived_rels = canonical.empty() ? 0 : static_cast<std::uint32_t>(max_rel + 1);
    if (expected_entities && derived_entities > *expected_entities) {
        throw ValidationError("entity id overflow: file uses " + std::to_string(derived_entities) +
                              " ids, vocabulary declares " + std::to_string(*expected_entities));
    }
    if (expected_canonical_relations && derived_rels > *expected_canonical_relations) {
        throw ValidationError("relation id overflow: file uses " + std::to_string(derived_rels) +
                              " ids, vocabulary declares " + std::to_string(*expected_canonical_relations));
    }
    kg.num_entities = expected_entities.value_or(derived_entities);
    kg.num_relations_canonical = expected_canonical_relations.value_or(derived_rels);
    kg.num_relations = 2 * kg.num_relations_canonical;
    kg.num_canonical = canonical.size();

    kg.triples = std::move(canonical);
    kg.triples.reserve(kg.num_canonical * 2);
    for (std::uint64_t k = 0; k < kg.num_canonical; ++k) {
        const Triple& t = kg.triples[k];
        kg.triples.push_back({t.tail, t.rel + kg.num_relations_canonical, t.head});
    }

    const std::uint64_t m = kg.triples.size();
    kg.out_offsets.assign(kg.num_entities + 1, 0);
    kg.in_rel_offsets.assign(kg.num_entities + 1, 0);
    kg.in_degree.assign(kg.num_entities, 0);
    for (const Triple& t : kg.triples) {
        ++kg.out_offsets[t.head + 1];
        ++kg.in_rel_offsets[t.tail + 1];
        ++kg.in_degree[t.tail];
    }
    for (std::size_t v = 1; v < kg.out_offsets.size(); ++v) {
        kg.out_offsets[v] += kg.out_offsets[v - 1];
        kg.in_rel_offsets[v] += kg.in_rel_offsets[v - 1];
    }
    kg.out_triple.resize(m);
    kg.in_rel_ids.resize(m);
    std::vector<std::uint64_t> out_cur(kg.out_offsets.begin(), kg.out_offsets.end() - 1);
    std::vector<std::uint64_t> in_cur(kg.in_rel_offsets.begin(), kg.in_rel_offsets.end() - 1);
    for (TripleIndex k = 0; k < m; ++k) {
        const Triple& t = kg.triples[k];
        kg.out_triple[out_cur[t.head]++] = k;
        kg.in_rel_ids[in_cur[t.tail]++] = t.rel;
    }
    return kg;
}

KnowledgeGraph load_triples(const std::string& path,
                            std::optional<std::uint32_t> expected_entities,
                            std::optional<std::uint32_t> expected_canonical_relations) {
    const std::string buf = read_whole_file(path);
    IntLineScanner scan(buf, path);
    std::vector<Triple> canonical;
    std::vector<std::uint64_t> toks;
    while (scan.next_line(toks)) {
        if (toks.size() != 3) {
            throw ParseError(path + ":" + std::to_string(scan.line_no) +
                             ": expected 'head relation tail', got " +
                             std::to_string(toks.size()) + " tokens");
        }
        if (expected_entities) {
            check_id_fits(toks[0], *expected_entities, "entity", path, scan.line_no);
            check_id_fits(toks[2], *expected_entities, "entity", path, scan.line_no);
        }
        if (expected_canonical_relations) {
            check_id_fits(toks[1], *expected_canonical_relations, "relation", path, scan.line_no);
        }
        if (toks[0] > 0xFFFFFFFFull || toks[1] > 0xFFFFFFFFull || toks[2] > 0xFFFFFFFFull) {
            throw ValidationError(path + ":" + std::to_string(scan.line_no) + ": id out of range");
        }
        canonical.push_back({static_cast<EntityId>(toks[0]), static_cast<RelationId>(toks[1]),
                             static_cast<EntityId>(toks[2])});
    }
    return build_knowledge_graph(std::move(canonical), expected_entities, expected_canonical_relations);
}

CollaborativeGraph build_ckg(const InteractionGraph& inter, const KnowledgeGraph& kg) {
    if (inter.item_to_entity.size() != inter.num_items) {
        throw AlignmentError("item/entity alignment incomplete: " +
                             std::to_string(inter.item_to_entity.size()) + " of " +
                             std::to_string(inter.num_items) + " items aligned");
    }
    const std::uint32_t entities = std::max(kg.num_entities, inter.num_items);
    for (ItemId i = 0; i < inter.num_items; ++i) {
        if (inter.item_to_entity[i] >= entities) {
            throw AlignmentError("item " + std::to_string(i) + " aligned to entity " +
                                 std::to_string(inter.item_to_entity[i]) + " outside entity space");
        }
    }
    return CollaborativeGraph{&inter, &kg, entities};
}

GraphStats stats(const InteractionGraph& inter, const KnowledgeGraph& kg) {
    GraphStats s;
    std::vector<char> item_seen(inter.num_items, 0);
    for (UserId u = 0; u < inter.num_users; ++u) {
        const bool active = !inter.train_edges[u].empty() || !inter.test_edges[u].empty();
        if (active) ++s.users;
        for (ItemId i : inter.train_edges[u]) item_seen[i] = 1;
        for (ItemId i : inter.test_edges[u]) item_seen[i] = 1;
    }
    s.items = static_cast<std::uint64_t>(std::count(item_seen.begin(), item_seen.end(), 1));
    s.interactions = inter.train_edge_count + inter.test_edge_count;
    s.entities = kg.num_entities;
    s.relations = kg.num_relations_canonical;
    s.triples = kg.num_canonical;
    return s;
}

void save_triples(const KnowledgeGraph& kg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (std::uint64_t k = 0; k < kg.num_canonical; ++k) {
        const Triple& t = kg.triples[k];
        out << t.head << ' ' << t.rel << ' ' << t.tail << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_interactions(const std::vector<std::vector<ItemId>>& edges, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (std::size_t u = 0; u < edges.size(); ++u) {
        if (edges[u].empty()) continue;
        out << u;
        for (ItemId i : edges[u]) out << ' ' << i;
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

PreprocessResult kcore_filter(const InteractionGraph& inter, const KnowledgeGraph& kg,
                              std::uint32_t min_interactions,
                              std::uint32_t min_entity_triples,
                              std::uint32_t min_relation_triples) {
    PreprocessResult out;
    out.train = inter.train_edges;
    out.test = inter.test_edges;
    out.triples.assign(kg.triples.begin(), kg.triples.begin() + kg.num_canonical);

    bool changed = true;
    while (changed) {
        changed = false;
        ++out.rounds;

        // Interaction side: user/item degrees over train+test.
        std::vector<std::uint64_t> udeg(inter.num_users, 0), ideg(inter.num_items, 0);
        for (UserId u = 0; u < inter.num_users; ++u) {
            for (ItemId i : out.train[u]) { ++udeg[u]; ++ideg[i]; }
            for (ItemId i : out.test[u]) { ++udeg[u]; ++ideg[i]; }
        }
        for (UserId u = 0; u < inter.num_users; ++u) {
            auto keep = [&](ItemId i) { return udeg[u] >= min_interactions && ideg[i] >= min_interactions; };
            auto filt = [&](std::vector<ItemId>& list) {
                const auto it = std::remove_if(list.begin(), list.end(),
                                               [&](ItemId i) { return !keep(i); });
                if (it != list.end()) { list.erase(it, list.end()); changed = true; }
            };
            filt(out.train[u]);
            filt(out.test[u]);
        }

        // KG side: entity/relation frequencies over surviving canonical triples.
        std::vector<std::uint64_t> ecount(kg.num_entities, 0), rcount(kg.num_relations_canonical, 0);
        for (const Triple& t : out.triples) {
            ++ecount[t.head];
            ++ecount[t.tail];
            ++rcount[t.rel];
        }
        const auto it = std::remove_if(out.triples.begin(), out.triples.end(), [&](const Triple& t) {
            return ecount[t.head] < min_entity_triples || ecount[t.tail] < min_entity_triples ||
                   rcount[t.rel] < min_relation_triples;
        });
        if (it != out.triples.end()) {
            out.triples.erase(it, out.triples.end());
            changed = true;
        }
    }
    return out;
}

}  // namespace kgtrim
