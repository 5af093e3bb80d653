#include "kgtrim/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace kgtrim {

Transform parse_transform(const std::string& name) {
    if (name == "tail") return Transform::Tail;
    if (name == "mean") return Transform::Mean;
    if (name == "product") return Transform::Product;
    throw ConfigError("unknown transform '" + name + "' (expected tail|mean|product)");
}

std::string transform_name(Transform t) {
    switch (t) {
        case Transform::Tail: return "tail";
        case Transform::Mean: return "mean";
        case Transform::Product: return "product";
    }
    return "?";
}

std::vector<double> relation_enriched_embedding(EntityId v, const ParameterStore& params,
                                                const KnowledgeGraph& kg) {
    const std::size_t d = params.dim;
    std::vector<double> out(params.entity_embeddings.row(v).begin(),
                            params.entity_embeddings.row(v).end());
    const auto rels = v < kg.num_entities ? kg.in_relations(v) : std::span<const RelationId>{};
    if (rels.empty()) return out;

    std::vector<double> mean_rel(d, 0.0);
    for (RelationId r : rels) {
        const auto er = params.relation_embeddings.row(r);
        for (std::size_t c = 0; c < d; ++c) mean_rel[c] += er[c];
    }
    const double inv = 1.0 / static_cast<double>(rels.size());
    for (std::size_t c = 0; c < d; ++c) out[c] *= mean_rel[c] * inv;
    return out;
}

Table relation_enriched_all(const ParameterStore& params, const KnowledgeGraph& kg) {
    const std::size_t n = params.entity_embeddings.rows();
    const std::size_t d = params.dim;
    Table out(n, d);
    std::vector<double> mean_rel(d);
    for (std::size_t v = 0; v < n; ++v) {
        const auto ev = params.entity_embeddings.row(v);
        auto row = out.row(v);
        const auto rels = v < kg.num_entities ? kg.in_relations(static_cast<EntityId>(v))
                                              : std::span<const RelationId>{};
        if (rels.empty()) {
            std::copy(ev.begin(), ev.end(), row.begin());
            continue;
        }
        std::fill(mean_rel.begin(), mean_rel.end(), 0.0);
        for (RelationId r : rels) {
            const auto er = params.relation_embeddings.row(r);
            for (std::size_t c = 0; c < d; ++c) mean_rel[c] += er[c];
        }
        const double inv = 1.0 / static_cast<double>(rels.size());
        for (std::size_t c = 0; c < d; ++c) row[c] = ev[c] * mean_rel[c] * inv;
    }
    return out;
}

double clipped_cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double c = dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
    return c > 0.0 ? c : 0.0;
}

std::vector<double> collective_scores(const ParameterStore& params, const UserEntityMatrix& q,
                                      const KnowledgeGraph& kg) {
    const std::size_t n = params.entity_embeddings.rows();
    const Table enriched = relation_enriched_all(params, kg);
    std::vector<double> out(n, 0.0);
    for (std::size_t v = 0; v < n && v < q.num_entities(); ++v) {
        const auto col = q.column(static_cast<EntityId>(v));
        if (col.empty()) continue;
        const auto ev = enriched.row(v);
        double sum = 0.0;
        for (UserId u : col) sum += clipped_cosine(params.user_embeddings.row(u), ev);
        out[v] = sum / static_cast<double>(col.size());
    }
    return out;
}

std::vector<double> holistic_scores(const ParameterStore& params) {
    std::vector<double> out = params.holistic_raw;
    for (double& x : out) x = std::clamp(x, 0.0, 1.0);
    return out;
}

std::vector<double> aggregate_scores(const std::vector<double>& collective,
                                     const std::vector<double>& holistic, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0,1], got " + std::to_string(gamma));
    }
    if (collective.size() != holistic.size()) {
        throw ValidationError("score vectors disagree on entity count");
    }
    std::vector<double> out(collective.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        out[v] = gamma * collective[v] + (1.0 - gamma) * holistic[v];
    }
    return out;
}

ImportanceScores importance_scores(const ParameterStore& params, const UserEntityMatrix& q,
                                   const KnowledgeGraph& kg, double gamma) {
    ImportanceScores s;
    s.gamma = gamma;
    s.collective = collective_scores(params, q, kg);
    s.holistic = holistic_scores(params);
    s.aggregated = aggregate_scores(s.collective, s.holistic, gamma);
    return s;
}

double triplet_score(const std::vector<double>& entity_scores, const Triple& t, Transform transform) {
    const double sh = entity_scores[t.head];
    const double st = entity_scores[t.tail];
    switch (transform) {
        case Transform::Tail: return st;
        case Transform::Mean: return 0.5 * (sh + st);
        case Transform::Product: return sh * st;
    }
    throw ConfigError("unknown transform");
}

std::vector<double> triplet_scores_augmented(const std::vector<double>& entity_scores,
                                             const KnowledgeGraph& kg, Transform transform) {
    std::vector<double> out(kg.triples.size());
    for (std::size_t k = 0; k < kg.triples.size(); ++k) {
        out[k] = triplet_score(entity_scores, kg.triples[k], transform);
    }
    return out;
}

std::vector<double> triplet_scores_canonical(const std::vector<double>& entity_scores,
                                             const KnowledgeGraph& kg, Transform transform) {
    std::vector<double> out(kg.num_canonical);
    for (std::size_t k = 0; k < kg.num_canonical; ++k) {
        out[k] = triplet_score(entity_scores, kg.triples[k], transform);
    }
    return out;
}

void save_entity_scores(const ImportanceScores& scores, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.precision(17);
    out << "entity_id\tcollective\tholistic\taggregated\n";
    for (std::size_t v = 0; v < scores.aggregated.size(); ++v) {
        out << v << '\t' << scores.collective[v] << '\t' << scores.holistic[v] << '\t'
            << scores.aggregated[v] << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_triple_scores(const std::vector<double>& canonical_scores, const KnowledgeGraph& kg,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.precision(17);
    out << "triple_index\th\tr\tt\tscore\n";
    for (std::size_t k = 0; k < canonical_scores.size(); ++k) {
        const Triple& t = kg.triples[k];
        out << k << '\t' << t.head << '\t' << t.rel << '\t' << t.tail << '\t'
            << canonical_scores[k] << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace kgtrim
