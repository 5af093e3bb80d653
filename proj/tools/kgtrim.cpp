// kgtrim: end-to-end knowledge-graph pruning for recommendation.
// Subcommands: stats, prune, evaluate, baseline, hist, preprocess.
// Config precedence: CLI flag > --config JSON file > built-in default.

#include "kgtrim/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using kgtrim::PipelineConfig;

void load_config_file(const std::string& path, PipelineConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw kgtrim::IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    kgtrim::apply_config_json(ss.str(), cfg);
}

struct CliStrings {
    std::string transform;
    std::string agg;
    std::string config_path;
};

void add_data_options(CLI::App* cmd, PipelineConfig& cfg, CliStrings& s) {
    cmd->add_option("--data-dir", cfg.data_dir,
                    "Dataset directory holding train.txt, test.txt, kg_final.txt")
        ->envname("KGT_DATA_DIR");
    cmd->add_option("--config", s.config_path, "JSON config file (flags override its values)");
}

void add_train_options(CLI::App* cmd, PipelineConfig& cfg, CliStrings& s) {
    cmd->add_option("--seed", cfg.train.seed, "Master seed; all randomness derives from it")
        ->capture_default_str();
    cmd->add_option("--gamma", cfg.train.gamma,
                    "Collective/holistic trade-off in [0,1]; 1 = collective only")
        ->capture_default_str();
    cmd->add_option("--k", cfg.train.k, "Sampled users per entity column (grid: 20, 50, 100, 200)")
        ->capture_default_str();
    cmd->add_option("--hop-limit", cfg.train.hop_limit,
                    "Max KG hops from an item when building the user-entity matrix")
        ->capture_default_str();
    cmd->add_option("--layers", cfg.train.layers, "Propagation depth (grid: 1, 2, 3)")
        ->capture_default_str();
    cmd->add_option("--dim", cfg.train.dim, "Embedding dimension")->capture_default_str();
    cmd->add_option("--batch-size", cfg.train.batch_size, "Training batch size")
        ->capture_default_str();
    cmd->add_option("--lr", cfg.train.lr, "Adam learning rate (grid: 1e-5, 1e-4, 1e-3)")
        ->capture_default_str();
    cmd->add_option("--l2", cfg.train.l2, "L2 coefficient (grid: 1e-6 .. 1e-3)")
        ->capture_default_str();
    cmd->add_option("--node-dropout", cfg.train.p_node,
                    "Per-step triple dropout probability (grid: 0.1 .. 0.7)")
        ->capture_default_str();
    cmd->add_option("--msg-dropout", cfg.train.p_msg,
                    "Per-layer message dropout probability (grid: 0.1 .. 0.7)")
        ->capture_default_str();
    cmd->add_option("--transform", s.transform,
                    "Entity-to-triple score transform: tail|mean|product")
        ->capture_default_str();
    cmd->add_option("--max-epochs", cfg.train.max_epochs, "Epoch cap")->capture_default_str();
    cmd->add_option("--patience", cfg.train.patience,
                    "Early stop after this many epochs without validation improvement")
        ->capture_default_str();
    cmd->add_option("--n-neg", cfg.train.n_neg, "Negative samples per interaction")
        ->capture_default_str();
    cmd->add_option("--eval-every", cfg.train.eval_every, "Validation cadence in epochs")
        ->capture_default_str();
    cmd->add_option("--val-fraction", cfg.train.val_fraction,
                    "Per-user share of training items held out for early stopping")
        ->capture_default_str();
    cmd->add_option("--threads", cfg.train.threads, "Worker thread cap")->capture_default_str();
}

void add_prune_options(CLI::App* cmd, PipelineConfig& cfg, CliStrings& s) {
    cmd->add_option("--ratio", cfg.ratio,
                    "Fraction of triples to prune, percentile mode (paper sweeps 0.3-0.98)")
        ->capture_default_str();
    cmd->add_option("--tau", [&cfg](const CLI::results_t& res) {
        cfg.tau = std::stod(res[0]);
        return true;
      }, "Score threshold in [0,1]; overrides --ratio when set");
    cmd->add_option("--agg", s.agg, "Mask aggregation: mean|warmup-mean|last|best")
        ->capture_default_str();
    cmd->add_option("--agg-warmup", cfg.agg_warmup,
                    "Leading fraction of epochs dropped by warmup-mean")
        ->capture_default_str();
    cmd->add_option("--bins", cfg.hist_bins, "Histogram bin count")->capture_default_str();
}

void finalize_strings(PipelineConfig& cfg, const CliStrings& s) {
    if (!s.transform.empty()) cfg.train.transform = kgtrim::parse_transform(s.transform);
    if (!s.agg.empty()) kgtrim::parse_aggregate(s.agg), cfg.agg = s.agg;
}

}  // namespace

int main(int argc, char** argv) {
    PipelineConfig cfg;
    // --config applies before flag parsing so explicit flags win.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(argv[i + 1], cfg);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 1;
            }
        }
    }

    CLI::App app{"kgtrim: prune a knowledge graph for recommendation training"};
    app.require_subcommand(1);
    CliStrings strings;

    auto* stats_cmd = app.add_subcommand("stats", "Print dataset statistics as one JSON line");
    add_data_options(stats_cmd, cfg, strings);

    auto* prune_cmd = app.add_subcommand(
        "prune", "Build Q, train the importance-aware model, emit the pruned KG");
    add_data_options(prune_cmd, cfg, strings);
    prune_cmd->add_option("--out-dir", cfg.out_dir, "Artifact directory")->required();
    add_train_options(prune_cmd, cfg, strings);
    add_prune_options(prune_cmd, cfg, strings);
    prune_cmd->add_flag("--q-cache", cfg.q_cache,
                        "Reuse qmatrix.tsv from the output directory when the key matches");

    auto* eval_cmd = app.add_subcommand(
        "evaluate", "Retrain the backbone on a (pruned) KG and report Recall/NDCG @ {10,20}");
    add_data_options(eval_cmd, cfg, strings);
    eval_cmd->add_option("--kg-file", cfg.kg_file, "Triple file to evaluate (default: original KG)");
    eval_cmd->add_option("--baseline", cfg.baseline,
                         "Prune with a baseline first: none|pop|norm|random")
        ->capture_default_str();
    eval_cmd->add_option("--ratio", cfg.ratio, "Baseline pruning ratio")->capture_default_str();
    eval_cmd->add_option("--checkpoint", cfg.checkpoint,
                         "Unit-mask checkpoint for the norm baseline (trains one if absent)");
    eval_cmd->add_flag("--compare", cfg.compare, "Also run the original KG and print both rows");
    eval_cmd->add_option("--out-dir", cfg.out_dir, "Optional directory for comparison.tsv");
    add_train_options(eval_cmd, cfg, strings);

    auto* base_cmd = app.add_subcommand("baseline", "Emit a baseline-pruned KG (pop|norm|random)");
    add_data_options(base_cmd, cfg, strings);
    base_cmd->add_option("--out-dir", cfg.out_dir, "Artifact directory")->required();
    base_cmd->add_option("--baseline", cfg.baseline, "pop|norm|random")->required();
    base_cmd->add_option("--ratio", cfg.ratio, "Fraction of triples to prune")
        ->capture_default_str();
    base_cmd->add_option("--checkpoint", cfg.checkpoint,
                         "Unit-mask checkpoint for the norm baseline (trains one if absent)");
    add_train_options(base_cmd, cfg, strings);

    std::string hist_scores, hist_mask;
    auto* hist_cmd = app.add_subcommand("hist", "Rebuild the score histogram from prune dumps");
    hist_cmd->add_option("--scores", hist_scores, "s_tilde.tsv from a prune run")->required();
    hist_cmd->add_option("--mask", hist_mask, "mask.tsv from a prune run")->required();
    hist_cmd->add_option("--out-dir", cfg.out_dir, "Artifact directory")->required();
    hist_cmd->add_option("--bins", cfg.hist_bins, "Histogram bin count")->capture_default_str();

    std::uint32_t min_inter = 10, min_ent = 10, min_rel = 50;
    auto* prep_cmd = app.add_subcommand(
        "preprocess", "K-core filter raw data (drops sparse users/items/entities/relations)");
    add_data_options(prep_cmd, cfg, strings);
    prep_cmd->add_option("--out-dir", cfg.out_dir, "Directory for the filtered dataset")->required();
    prep_cmd->add_option("--min-interactions", min_inter, "User/item interaction floor")
        ->capture_default_str();
    prep_cmd->add_option("--min-entity-triples", min_ent, "Entity triple floor")
        ->capture_default_str();
    prep_cmd->add_option("--min-relation-triples", min_rel, "Relation triple floor")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        finalize_strings(cfg, strings);
        if (stats_cmd->parsed()) {
            std::string json;
            kgtrim::run_stats(cfg, &json);
            std::cout << json << '\n';
        } else if (prune_cmd->parsed()) {
            const auto art = kgtrim::run_prune(cfg);
            std::cout << "kept " << art.kept << " canonical triples (tau_effective="
                      << art.pruned.tau_effective << ")\n"
                      << "artifacts in " << cfg.out_dir << '\n';
        } else if (eval_cmd->parsed()) {
            const auto out = kgtrim::run_evaluate(cfg);
            if (out.compared) {
                std::cout << out.comparison.pretty();
            } else {
                std::cout << out.report_json << '\n';
            }
        } else if (base_cmd->parsed()) {
            const auto art = kgtrim::run_baseline(cfg);
            std::cout << "kept " << art.kept << " canonical triples\n"
                      << art.pruned_kg << '\n'
                      << art.mask << '\n';
        } else if (hist_cmd->parsed()) {
            std::cout << kgtrim::run_hist(hist_scores, hist_mask, cfg.hist_bins, cfg.out_dir)
                      << '\n';
        } else if (prep_cmd->parsed()) {
            const auto art = kgtrim::run_preprocess(cfg, min_inter, min_ent, min_rel);
            std::cout << "filtered dataset in " << cfg.out_dir << " (" << art.rounds
                      << " rounds)\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
