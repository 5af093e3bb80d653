#pragma once
// Turns per-epoch entity score snapshots into a pruned triple set.
// The mask lives on canonical triples; inverse triples follow their
// canonical partner. Percentile mode keeps exactly ceil((1-ratio)*|G|)
// triples, ties broken by ascending triple index.

#include "kgtrim/evaluator.hpp"
#include "kgtrim/graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kgtrim {

struct MaskRecord {
    std::uint32_t epoch = 0;
    std::vector<double> scores;  // eval-mode aggregated entity scores
};

enum class AggregateKind { Mean, MeanAfterWarmup, Last, BestEpoch };

struct AggregateStrategy {
    AggregateKind kind = AggregateKind::MeanAfterWarmup;
    double warmup_fraction = 0.5;  // fraction of leading epochs dropped
    std::int64_t best_epoch = -1;  // required for BestEpoch
};

AggregateKind parse_aggregate(const std::string& name);
std::string aggregate_name(AggregateKind k);

// Elementwise aggregation of the selected epoch snapshots.
std::vector<double> aggregate_masks(const std::vector<MaskRecord>& records,
                                    const AggregateStrategy& strategy);

std::vector<std::uint8_t> binarize_threshold(const std::vector<double>& triple_scores, double tau);

struct PercentileResult {
    std::vector<std::uint8_t> mask;
    double tau_effective = 0.0;  // smallest kept score
};
PercentileResult binarize_percentile(const std::vector<double>& triple_scores, double ratio);

struct PrunedGraph {
    std::vector<TripleIndex> kept;  // canonical indices, ascending
    std::vector<std::uint8_t> mask;
    double tau_effective = 0.0;
    std::string provenance;  // config hash + seed
};

PrunedGraph apply_mask(const KnowledgeGraph& kg, const std::vector<std::uint8_t>& mask,
                       std::string provenance = {});

// Kept canonical triples in the input text format.
void write_pruned_kg(const KnowledgeGraph& kg, const PrunedGraph& pruned, const std::string& path);

// TSV "triple_index h r t score keep".
void write_mask_file(const KnowledgeGraph& kg, const std::vector<double>& triple_scores,
                     const std::vector<std::uint8_t>& mask, const std::string& path);

struct HistogramTable {
    std::uint32_t bins = 0;
    std::vector<std::uint64_t> entity_count;
    std::vector<std::uint64_t> triple_count;
};

// Binned densities over [0,1]; the top bin is closed at 1.
HistogramTable score_histogram(const std::vector<double>& entity_scores,
                               const std::vector<double>& triple_scores, std::uint32_t bins);

// TSV "bin_lo bin_hi entity_count triple_count".
void write_histogram(const HistogramTable& hist, const std::string& path);

}  // namespace kgtrim
