#include "kgtrim/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace kgtrim {

AggregateKind parse_aggregate(const std::string& name) {
    if (name == "mean") return AggregateKind::Mean;
    if (name == "warmup-mean") return AggregateKind::MeanAfterWarmup;
    if (name == "last") return AggregateKind::Last;
    if (name == "best") return AggregateKind::BestEpoch;
    throw ConfigError("unknown aggregation '" + name + "' (expected mean|warmup-mean|last|best)");
}

std::string aggregate_name(AggregateKind k) {
    switch (k) {
        case AggregateKind::Mean: return "mean";
        case AggregateKind::MeanAfterWarmup: return "warmup-mean";
        case AggregateKind::Last: return "last";
        case AggregateKind::BestEpoch: return "best";
    }
    return "?";
}

std::vector<double> aggregate_masks(const std::vector<MaskRecord>& records,
                                    const AggregateStrategy& strategy) {
    if (records.empty()) throw ValidationError("aggregate_masks: no mask records");
    const std::size_t n = records.front().scores.size();
    for (const MaskRecord& r : records) {
        if (r.scores.size() != n) throw ValidationError("aggregate_masks: inconsistent record sizes");
    }

    std::size_t first = 0, last = records.size();  // [first, last)
    switch (strategy.kind) {
        case AggregateKind::Mean:
            break;
        case AggregateKind::MeanAfterWarmup: {
            if (!(strategy.warmup_fraction >= 0.0 && strategy.warmup_fraction < 1.0)) {
                throw ConfigError("warmup fraction must lie in [0,1)");
            }
            first = static_cast<std::size_t>(
                std::floor(strategy.warmup_fraction * static_cast<double>(records.size())));
            break;
        }
        case AggregateKind::Last:
            first = records.size() - 1;
            break;
        case AggregateKind::BestEpoch: {
            if (strategy.best_epoch < 0) {
                throw ConfigError("best-epoch aggregation requires a validated training run");
            }
            std::size_t found = records.size();
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (records[i].epoch == static_cast<std::uint32_t>(strategy.best_epoch)) found = i;
            }
            if (found == records.size()) {
                throw ValidationError("best-epoch aggregation: epoch " +
                                      std::to_string(strategy.best_epoch) + " has no mask record");
            }
            first = found;
            last = found + 1;
            break;
        }
    }

    std::vector<double> out(n, 0.0);
    const double inv = 1.0 / static_cast<double>(last - first);
    for (std::size_t i = first; i < last; ++i) {
        const auto& s = records[i].scores;
        for (std::size_t v = 0; v < n; ++v) out[v] += s[v];
    }
    for (double& x : out) x *= inv;
    return out;
}

std::vector<std::uint8_t> binarize_threshold(const std::vector<double>& triple_scores, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0,1]");
    std::vector<std::uint8_t> mask(triple_scores.size());
    for (std::size_t i = 0; i < triple_scores.size(); ++i) mask[i] = triple_scores[i] >= tau ? 1 : 0;
    return mask;
}

PercentileResult binarize_percentile(const std::vector<double>& triple_scores, double ratio) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("ratio must lie in [0,1)");
    const std::size_t n = triple_scores.size();
    const std::size_t kept_count =
        static_cast<std::size_t>(std::ceil((1.0 - ratio) * static_cast<double>(n)));

    std::vector<TripleIndex> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](TripleIndex a, TripleIndex b) {
        return triple_scores[a] != triple_scores[b] ? triple_scores[a] > triple_scores[b] : a < b;
    });

    PercentileResult res;
    res.mask.assign(n, 0);
    res.tau_effective = 0.0;
    for (std::size_t i = 0; i < kept_count; ++i) {
        res.mask[order[i]] = 1;
        res.tau_effective = triple_scores[order[i]];  // order is score-descending
    }
    return res;
}

PrunedGraph apply_mask(const KnowledgeGraph& kg, const std::vector<std::uint8_t>& mask,
                       std::string provenance) {
    if (mask.size() != kg.num_canonical) {
        throw ValidationError("mask length " + std::to_string(mask.size()) +
                              " does not match canonical triple count " +
                              std::to_string(kg.num_canonical));
    }
    PrunedGraph out;
    out.mask = mask;
    out.provenance = std::move(provenance);
    for (TripleIndex k = 0; k < mask.size(); ++k) {
        if (mask[k]) out.kept.push_back(k);
    }
    return out;
}

void write_pruned_kg(const KnowledgeGraph& kg, const PrunedGraph& pruned, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (TripleIndex k : pruned.kept) {
        const Triple& t = kg.triples[k];
        out << t.head << ' ' << t.rel << ' ' << t.tail << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_mask_file(const KnowledgeGraph& kg, const std::vector<double>& triple_scores,
                     const std::vector<std::uint8_t>& mask, const std::string& path) {
    if (triple_scores.size() != kg.num_canonical || mask.size() != kg.num_canonical) {
        throw ValidationError("mask file: score/mask length mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.precision(17);
    out << "triple_index\th\tr\tt\tscore\tkeep\n";
    for (TripleIndex k = 0; k < kg.num_canonical; ++k) {
        const Triple& t = kg.triples[k];
        out << k << '\t' << t.head << '\t' << t.rel << '\t' << t.tail << '\t' << triple_scores[k]
            << '\t' << static_cast<int>(mask[k]) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

HistogramTable score_histogram(const std::vector<double>& entity_scores,
                               const std::vector<double>& triple_scores, std::uint32_t bins) {
    if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
    HistogramTable h;
    h.bins = bins;
    h.entity_count.assign(bins, 0);
    h.triple_count.assign(bins, 0);
    const auto bin_of = [bins](double x) {
        const double clamped = std::clamp(x, 0.0, 1.0);
        const auto b = static_cast<std::uint32_t>(clamped * bins);
        return std::min(b, bins - 1);
    };
    for (double s : entity_scores) ++h.entity_count[bin_of(s)];
    for (double s : triple_scores) ++h.triple_count[bin_of(s)];
    return h;
}

void write_histogram(const HistogramTable& hist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.precision(17);
    out << "bin_lo\tbin_hi\tentity_count\ttriple_count\n";
    for (std::uint32_t b = 0; b < hist.bins; ++b) {
        out << static_cast<double>(b) / hist.bins << '\t' << static_cast<double>(b + 1) / hist.bins
            << '\t' << hist.entity_count[b] << '\t' << hist.triple_count[b] << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace kgtrim
