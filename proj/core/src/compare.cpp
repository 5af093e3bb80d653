#include "kgtrim/compare.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace kgtrim {

namespace {

UserEntityMatrix empty_qmatrix(std::uint32_t num_entities) {
    UserEntityMatrix q;
    q.k = 1;
    q.offsets.assign(num_entities + 1, 0);
    return q;
}

}  // namespace

KnowledgeGraph pruned_knowledge_graph(const KnowledgeGraph& original, const PrunedGraph& pruned) {
    std::vector<Triple> kept;
    kept.reserve(pruned.kept.size());
    for (TripleIndex k : pruned.kept) kept.push_back(original.triples[k]);
    return build_knowledge_graph(std::move(kept), original.num_entities,
                                 original.num_relations_canonical);
}

CompareRow retrain_once(const std::string& label, const InteractionGraph& inter,
                        const KnowledgeGraph& kg, const TrainConfig& config) {
    TrainConfig backbone = config;
    backbone.unit_scores = true;

    const UserEntityMatrix q = empty_qmatrix(std::max(kg.num_entities, inter.num_items));
    const TrainResult result = train(backbone, inter, kg, q);

    std::vector<double> unit_scores(kg.triples.size(), 1.0);
    const ForwardResult fwd = forward(result.best_params, kg, inter, unit_scores, backbone.layers,
                                      DropoutSpec{}, Mode::Eval);
    const EvalReport rep = evaluate_all_ranking(fwd.final_user, fwd.final_entity, inter, {20},
                                                backbone.threads);

    CompareRow row;
    row.label = label;
    row.canonical_triples = kg.num_canonical;
    row.epochs = result.epochs_run;
    row.wallclock_s = std::accumulate(result.log.begin(), result.log.end(), 0.0,
                                      [](double acc, const EpochLog& e) { return acc + e.wallclock_s; });
    row.recall20 = rep.recall.at(20);
    row.ndcg20 = rep.ndcg.at(20);
    return row;
}

ComparisonTable retrain_and_compare(const InteractionGraph& inter, const KnowledgeGraph& original,
                                    const PrunedGraph& pruned, const TrainConfig& config) {
    ComparisonTable table;
    table.rows.push_back(retrain_once("original", inter, original, config));
    const KnowledgeGraph pruned_kg = pruned_knowledge_graph(original, pruned);
    table.rows.push_back(retrain_once("pruned", inter, pruned_kg, config));
    return table;
}

std::string ComparisonTable::pretty() const {
    std::ostringstream out;
    out.precision(6);
    out << "graph        triples    epochs  wallclock_s  recall@20  ndcg@20\n";
    for (const CompareRow& r : rows) {
        out << r.label;
        for (std::size_t pad = r.label.size(); pad < 13; ++pad) out << ' ';
        out << r.canonical_triples << '\t' << r.epochs << '\t' << r.wallclock_s << '\t'
            << r.recall20 << '\t' << r.ndcg20 << '\n';
    }
    return out.str();
}

void ComparisonTable::write_tsv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.precision(17);
    out << "graph\ttriples\tepochs\twallclock_s\trecall@20\tndcg@20\n";
    for (const CompareRow& r : rows) {
        out << r.label << '\t' << r.canonical_triples << '\t' << r.epochs << '\t' << r.wallclock_s
            << '\t' << r.recall20 << '\t' << r.ndcg20 << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace kgtrim
