#include "kgtrim/pipeline.hpp"

#include "kgtrim/evaluator.hpp"
#include "kgtrim/metrics.hpp"
#include "kgtrim/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kgtrim {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json config_json(const PipelineConfig& c) {
    // Ordered object so the dump (and its hash) is canonical.
    json j = json::object();
    j["agg"] = c.agg;
    j["agg_warmup"] = c.agg_warmup;
    j["baseline"] = c.baseline;
    j["batch_size"] = c.train.batch_size;
    j["dim"] = c.train.dim;
    j["eval_every"] = c.train.eval_every;
    j["gamma"] = c.train.gamma;
    j["hist_bins"] = c.hist_bins;
    j["hop_limit"] = c.train.hop_limit;
    j["k"] = c.train.k;
    j["l2"] = c.train.l2;
    j["layers"] = c.train.layers;
    j["lr"] = c.train.lr;
    j["max_epochs"] = c.train.max_epochs;
    j["msg_dropout"] = c.train.p_msg;
    j["n_neg"] = c.train.n_neg;
    j["node_dropout"] = c.train.p_node;
    j["patience"] = c.train.patience;
    j["ratio"] = c.ratio;
    j["seed"] = c.train.seed;
    j["tau"] = c.tau ? json(*c.tau) : json();
    j["threads"] = c.train.threads;
    j["transform"] = transform_name(c.train.transform);
    j["val_fraction"] = c.train.val_fraction;
    return j;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ManifestWriter {
    json doc;
    std::string path;

    ManifestWriter(const std::string& out_dir, const std::string& command,
                   const PipelineConfig& config) {
        fs::create_directories(out_dir);
        path = out_dir + "/manifest.json";
        doc = json::object();
        doc["command"] = command;
        doc["config"] = config_json(config);
        doc["config_hash"] = config_hash(config);
        doc["seed"] = config.train.seed;
        doc["status"] = "running";
        doc["artifacts"] = json::array();
        doc["stages"] = json::array();
        flush();
    }

    void dataset(const PipelineConfig& config, std::uint64_t hash) {
        doc["dataset"] = {{"train", config.train_path()},
                          {"test", config.test_path()},
                          {"kg", config.kg_path()},
                          {"hash", hex64(hash)}};
        flush();
    }

    void stage(const std::string& name, double seconds) {
        doc["stages"].push_back({{"name", name}, {"wallclock_s", seconds}});
    }

    void artifact(const std::string& p) { doc["artifacts"].push_back(p); }

    void complete() {
        doc["status"] = "complete";
        flush();
    }

    void failed(const std::string& why) {
        doc["status"] = "failed: " + why;
        flush();
    }

    void flush() {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write manifest: " + path);
        out << doc.dump(2) << '\n';
    }
};

void write_training_log(const TrainResult& result, std::uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (const EpochLog& e : result.log) {
        json line = json::object();
        line["epoch"] = e.epoch;
        line["loss"] = e.loss;
        line["val_recall@20"] = e.val_recall20 ? json(*e.val_recall20) : json();
        line["wallclock_s"] = e.wallclock_s;
        line["seed"] = seed;
        if (e.skipped_pairs > 0) line["skipped_pairs"] = e.skipped_pairs;
        out << line.dump() << '\n';
    }
}

std::vector<std::uint8_t> baseline_mask(const PipelineConfig& config, const LoadedData& data,
                                        std::vector<double>* scores_out) {
    if (config.baseline == "pop") {
        if (scores_out) {
            scores_out->resize(data.kg.num_canonical);
            for (TripleIndex k = 0; k < data.kg.num_canonical; ++k) {
                const Triple& t = data.kg.triples[k];
                (*scores_out)[k] = static_cast<double>(
                    std::max(data.kg.in_degree[t.head], data.kg.in_degree[t.tail]));
            }
        }
        return pop_baseline(data.kg, config.ratio);
    }
    if (config.baseline == "norm") {
        ParameterStore params;
        if (!config.checkpoint.empty()) {
            params = load_checkpoint(config.checkpoint);
        } else {
            TrainConfig backbone = config.train;
            backbone.unit_scores = true;
            UserEntityMatrix q;
            q.k = 1;
            q.offsets.assign(std::max(data.kg.num_entities, data.inter.num_items) + 1, 0);
            params = train(backbone, data.inter, data.kg, q).best_params;
        }
        if (scores_out) {
            std::vector<double> enorm(data.kg.num_entities);
            for (EntityId v = 0; v < data.kg.num_entities; ++v) {
                enorm[v] = std::sqrt(norm2(params.entity_embeddings.row(v)));
            }
            scores_out->resize(data.kg.num_canonical);
            for (TripleIndex k = 0; k < data.kg.num_canonical; ++k) {
                const Triple& t = data.kg.triples[k];
                (*scores_out)[k] = enorm[t.head] * enorm[t.tail];
            }
        }
        return norm_baseline(params, data.kg, config.ratio);
    }
    if (config.baseline == "random") {
        auto mask = random_mask(data.kg.num_canonical, config.ratio, config.train.seed);
        if (scores_out) {
            scores_out->resize(mask.size());
            for (std::size_t k = 0; k < mask.size(); ++k) (*scores_out)[k] = mask[k];
        }
        return mask;
    }
    throw ConfigError("unknown baseline '" + config.baseline + "' (expected pop|norm|random)");
}

}  // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

void apply_config_json(const std::string& json_text, PipelineConfig& c) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    const auto get = [&](const char* key, auto& slot) {
        using T = std::decay_t<decltype(slot)>;
        if (j.contains(key) && !j[key].is_null()) slot = j[key].get<T>();
    };
    get("agg", c.agg);
    get("agg_warmup", c.agg_warmup);
    get("baseline", c.baseline);
    get("batch_size", c.train.batch_size);
    get("dim", c.train.dim);
    get("eval_every", c.train.eval_every);
    get("gamma", c.train.gamma);
    get("hist_bins", c.hist_bins);
    get("hop_limit", c.train.hop_limit);
    get("k", c.train.k);
    get("l2", c.train.l2);
    get("layers", c.train.layers);
    get("lr", c.train.lr);
    get("max_epochs", c.train.max_epochs);
    get("msg_dropout", c.train.p_msg);
    get("n_neg", c.train.n_neg);
    get("node_dropout", c.train.p_node);
    get("patience", c.train.patience);
    get("ratio", c.ratio);
    get("seed", c.train.seed);
    if (j.contains("tau") && !j["tau"].is_null()) c.tau = j["tau"].get<double>();
    get("threads", c.train.threads);
    if (j.contains("transform") && !j["transform"].is_null()) {
        c.train.transform = parse_transform(j["transform"].get<std::string>());
    }
    get("val_fraction", c.train.val_fraction);
}

std::string config_hash(const PipelineConfig& config) {
    return hex64(fnv1a(config_json(config).dump()));
}

LoadedData load_dataset(const PipelineConfig& config) {
    LoadedData d;
    d.inter = load_interactions(config.train_path(), config.test_path());
    d.kg = load_triples(config.kg_path());
    std::uint64_t h = hash_file(config.train_path());
    h = splitmix64(h ^ hash_file(config.test_path()));
    h = splitmix64(h ^ hash_file(config.kg_path()));
    d.dataset_hash = h;
    return d;
}

GraphStats run_stats(const PipelineConfig& config, std::string* json_out) {
    const LoadedData data = load_dataset(config);
    const GraphStats s = stats(data.inter, data.kg);
    if (json_out) {
        json j = json::object();
        j["users"] = s.users;
        j["items"] = s.items;
        j["interactions"] = s.interactions;
        j["entities"] = s.entities;
        j["relations"] = s.relations;
        j["triples"] = s.triples;
        *json_out = j.dump();
    }
    return s;
}

PruneArtifacts run_prune(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("prune requires --out-dir");
    config.train.validate();
    ManifestWriter manifest(config.out_dir, "prune", config);
    try {
        auto t0 = std::chrono::steady_clock::now();
        const LoadedData data = load_dataset(config);
        manifest.dataset(config, data.dataset_hash);
        const CollaborativeGraph ckg = build_ckg(data.inter, data.kg);
        manifest.stage("load", seconds_since(t0));

        t0 = std::chrono::steady_clock::now();
        UserEntityMatrix q;
        const std::string q_cache_path = config.out_dir + "/qmatrix.tsv";
        bool from_cache = false;
        if (config.q_cache) {
            if (auto cached = load_qmatrix(q_cache_path, data.dataset_hash, config.train.k,
                                           config.train.hop_limit, config.train.seed,
                                           ckg.num_entities)) {
                q = std::move(*cached);
                from_cache = true;
            }
        }
        if (!from_cache) {
            q = build_user_entity_matrix(ckg, config.train.k, config.train.hop_limit,
                                         config.train.seed, config.train.threads);
            if (config.q_cache) save_qmatrix(q, q_cache_path, data.dataset_hash);
        }
        manifest.stage("qmatrix", seconds_since(t0));

        t0 = std::chrono::steady_clock::now();
        const TrainResult result = train(config.train, data.inter, data.kg, q);
        manifest.stage("train", seconds_since(t0));
        if (result.aborted) {
            manifest.failed("training aborted: " + result.abort_reason);
            throw NumericError("training aborted: " + result.abort_reason);
        }

        t0 = std::chrono::steady_clock::now();
        AggregateStrategy strategy;
        strategy.kind = parse_aggregate(config.agg);
        strategy.warmup_fraction = config.agg_warmup;
        strategy.best_epoch = result.best_epoch;
        const std::vector<double> s_tilde = aggregate_masks(result.mask_records, strategy);
        const std::vector<double> triple_scores =
            triplet_scores_canonical(s_tilde, data.kg, config.train.transform);

        PruneArtifacts art;
        std::vector<std::uint8_t> mask;
        double tau_effective = 0.0;
        if (config.tau) {
            mask = binarize_threshold(triple_scores, *config.tau);
            tau_effective = *config.tau;
        } else {
            PercentileResult pr = binarize_percentile(triple_scores, config.ratio);
            mask = std::move(pr.mask);
            tau_effective = pr.tau_effective;
        }
        art.pruned = apply_mask(data.kg, mask,
                                config_hash(config) + ":" + std::to_string(config.train.seed));
        art.pruned.tau_effective = tau_effective;
        art.kept = art.pruned.kept.size();

        const std::string dir = config.out_dir;
        art.manifest = manifest.path;
        art.pruned_kg = dir + "/pruned_kg.txt";
        art.mask = dir + "/mask.tsv";
        art.histogram = dir + "/histogram.tsv";
        art.entity_scores = dir + "/entity_scores.tsv";
        art.aggregated_scores = dir + "/s_tilde.tsv";
        art.training_log = dir + "/training_log.jsonl";
        art.checkpoint = dir + "/checkpoint.bin";

        write_pruned_kg(data.kg, art.pruned, art.pruned_kg);
        write_mask_file(data.kg, triple_scores, mask, art.mask);
        write_histogram(score_histogram(s_tilde, triple_scores, config.hist_bins), art.histogram);
        const ImportanceScores best_snapshot =
            importance_scores(result.best_params, q, data.kg, config.train.gamma);
        save_entity_scores(best_snapshot, art.entity_scores);
        {
            std::ofstream out(art.aggregated_scores, std::ios::binary);
            if (!out) throw IoError("cannot write file: " + art.aggregated_scores);
            out.precision(17);
            out << "entity_id\tscore\n";
            for (std::size_t v = 0; v < s_tilde.size(); ++v) out << v << '\t' << s_tilde[v] << '\n';
        }
        write_training_log(result, config.train.seed, art.training_log);
        save_checkpoint(result.best_params, art.checkpoint, config_hash(config));
        manifest.stage("prune", seconds_since(t0));

        for (const std::string& p :
             {art.pruned_kg, art.mask, art.histogram, art.entity_scores, art.aggregated_scores,
              art.training_log, art.checkpoint}) {
            manifest.artifact(p);
        }
        manifest.complete();
        return art;
    } catch (const std::exception& e) {
        manifest.failed(e.what());
        throw;
    }
}

EvaluateOutput run_evaluate(const PipelineConfig& config) {
    config.train.validate();
    const LoadedData data = load_dataset(config);

    KnowledgeGraph eval_kg;
    std::string label = "original";
    if (config.baseline != "none") {
        const auto mask = baseline_mask(config, data, nullptr);
        eval_kg = pruned_knowledge_graph(data.kg, apply_mask(data.kg, mask));
        label = config.baseline;
    } else if (!config.kg_file.empty()) {
        eval_kg = load_triples(config.kg_file, data.kg.num_entities,
                               data.kg.num_relations_canonical);
        label = "pruned";
    } else {
        eval_kg = data.kg;
    }

    EvaluateOutput out;
    if (config.compare) {
        out.compared = true;
        out.comparison.rows.push_back(retrain_once("original", data.inter, data.kg, config.train));
        if (label != "original") {
            out.comparison.rows.push_back(retrain_once(label, data.inter, eval_kg, config.train));
        }
        if (!config.out_dir.empty()) {
            std::filesystem::create_directories(config.out_dir);
            out.comparison.write_tsv(config.out_dir + "/comparison.tsv");
        }
        return out;
    }

    TrainConfig backbone = config.train;
    backbone.unit_scores = true;
    UserEntityMatrix q;
    q.k = 1;
    q.offsets.assign(std::max(eval_kg.num_entities, data.inter.num_items) + 1, 0);
    const TrainResult result = train(backbone, data.inter, eval_kg, q);
    std::vector<double> unit_scores(eval_kg.triples.size(), 1.0);
    const ForwardResult fwd = forward(result.best_params, eval_kg, data.inter, unit_scores,
                                      backbone.layers, DropoutSpec{}, Mode::Eval);
    out.report = evaluate_all_ranking(fwd.final_user, fwd.final_entity, data.inter, {10, 20},
                                      backbone.threads);
    out.report.config_hash = config_hash(config);
    json j = json::object();
    j["graph"] = label;
    j["num_eval_users"] = out.report.num_eval_users;
    j["config_hash"] = out.report.config_hash;
    for (const auto& [k, v] : out.report.recall) j["recall@" + std::to_string(k)] = v;
    for (const auto& [k, v] : out.report.ndcg) j["ndcg@" + std::to_string(k)] = v;
    out.report_json = j.dump();
    return out;
}

BaselineArtifacts run_baseline(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("baseline requires --out-dir");
    const LoadedData data = load_dataset(config);
    std::vector<double> scores;
    const auto mask = baseline_mask(config, data, &scores);
    const PrunedGraph pruned = apply_mask(data.kg, mask, config_hash(config));

    std::filesystem::create_directories(config.out_dir);
    BaselineArtifacts art;
    art.pruned_kg = config.out_dir + "/pruned_kg_" + config.baseline + ".txt";
    art.mask = config.out_dir + "/mask_" + config.baseline + ".tsv";
    art.kept = pruned.kept.size();
    write_pruned_kg(data.kg, pruned, art.pruned_kg);
    write_mask_file(data.kg, scores, mask, art.mask);
    return art;
}

std::string run_hist(const std::string& entity_scores_path, const std::string& mask_path,
                     std::uint32_t bins, const std::string& out_dir) {
    const auto read_column = [](const std::string& path, std::size_t column) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open file: " + path);
        std::vector<double> values;
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string tok;
            for (std::size_t c = 0; c <= column; ++c) {
                if (!std::getline(ss, tok, '\t')) {
                    throw ParseError(path + ": missing column " + std::to_string(column));
                }
            }
            values.push_back(std::stod(tok));
        }
        return values;
    };
    const std::vector<double> entity_scores = read_column(entity_scores_path, 1);
    const std::vector<double> triple_scores = read_column(mask_path, 4);
    std::filesystem::create_directories(out_dir);
    const std::string path = out_dir + "/histogram.tsv";
    write_histogram(score_histogram(entity_scores, triple_scores, bins), path);
    return path;
}

PreprocessArtifacts run_preprocess(const PipelineConfig& config, std::uint32_t min_interactions,
                                   std::uint32_t min_entity_triples,
                                   std::uint32_t min_relation_triples) {
    if (config.out_dir.empty()) throw ConfigError("preprocess requires --out-dir");
    const LoadedData data = load_dataset(config);
    const PreprocessResult result = kcore_filter(data.inter, data.kg, min_interactions,
                                                 min_entity_triples, min_relation_triples);
    std::filesystem::create_directories(config.out_dir);
    PreprocessArtifacts art;
    art.train = config.out_dir + "/train.txt";
    art.test = config.out_dir + "/test.txt";
    art.kg = config.out_dir + "/kg_final.txt";
    art.rounds = result.rounds;
    save_interactions(result.train, art.train);
    save_interactions(result.test, art.test);
    KnowledgeGraph filtered = build_knowledge_graph(result.triples);
    save_triples(filtered, art.kg);
    return art;
}

}  // namespace kgtrim
