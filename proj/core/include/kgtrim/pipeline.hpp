#pragma once
// Command-level orchestration shared by the CLI and the acceptance suite.
// Every run that writes artifacts writes a manifest first (status running)
// and rewrites it on completion with stage timings and artifact paths.

#include "kgtrim/compare.hpp"
#include "kgtrim/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kgtrim {

struct PipelineConfig {
    std::string data_dir;
    std::string out_dir;
    TrainConfig train;

    double ratio = 0.9;             // percentile mode (default)
    std::optional<double> tau;      // threshold mode when set
    std::string agg = "warmup-mean";
    double agg_warmup = 0.5;
    std::uint32_t hist_bins = 50;

    std::string baseline = "none";  // none|pop|norm|random
    std::string kg_file;            // evaluate: triple file overriding kg_final.txt
    std::string checkpoint;         // norm baseline: reuse a trained checkpoint
    bool compare = false;           // evaluate: emit original-vs-pruned table
    bool q_cache = false;

    std::string train_path() const { return data_dir + "/train.txt"; }
    std::string test_path() const { return data_dir + "/test.txt"; }
    std::string kg_path() const { return data_dir + "/kg_final.txt"; }
};

std::string config_to_json(const PipelineConfig& config);
void apply_config_json(const std::string& json_text, PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

struct LoadedData {
    InteractionGraph inter;
    KnowledgeGraph kg;
    std::uint64_t dataset_hash = 0;  // over the three input files
};
LoadedData load_dataset(const PipelineConfig& config);

// stats: single-line JSON on stdout.
GraphStats run_stats(const PipelineConfig& config, std::string* json_out = nullptr);

struct PruneArtifacts {
    std::string manifest;
    std::string pruned_kg;
    std::string mask;
    std::string histogram;
    std::string entity_scores;
    std::string aggregated_scores;
    std::string training_log;
    std::string checkpoint;
    PrunedGraph pruned;
    std::uint64_t kept = 0;
};
PruneArtifacts run_prune(const PipelineConfig& config);

struct EvaluateOutput {
    EvalReport report;            // single-graph mode
    ComparisonTable comparison;   // compare mode
    bool compared = false;
    std::string report_json;
};
EvaluateOutput run_evaluate(const PipelineConfig& config);

struct BaselineArtifacts {
    std::string pruned_kg;
    std::string mask;
    std::uint64_t kept = 0;
};
BaselineArtifacts run_baseline(const PipelineConfig& config);

// hist: rebuilds the histogram from the score dumps of a prune run.
std::string run_hist(const std::string& entity_scores_path, const std::string& mask_path,
                     std::uint32_t bins, const std::string& out_dir);

struct PreprocessArtifacts {
    std::string train;
    std::string test;
    std::string kg;
    std::uint32_t rounds = 0;
};
PreprocessArtifacts run_preprocess(const PipelineConfig& config, std::uint32_t min_interactions,
                                   std::uint32_t min_entity_triples,
                                   std::uint32_t min_relation_triples);

}  // namespace kgtrim
