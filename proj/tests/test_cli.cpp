#include "testutil.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace kgtest;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string stdout_text;
    std::string stderr_text;
};

CliResult run_cli(const TempDir& dir, const std::string& args, const std::string& env = {}) {
    const std::string out_file = dir.file("cli_stdout.txt");
    const std::string err_file = dir.file("cli_stderr.txt");
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(KGTRIM_BIN_PATH) + " " +
                            args + " >" + out_file + " 2>" + err_file;
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.stdout_text = read_file(out_file);
    r.stderr_text = read_file(err_file);
    return r;
}

void write_fixture(const TempDir& dir) {
    write_file(dir.file("train.txt"), "0 1 2\n1 2\n");
    write_file(dir.file("test.txt"), "0 0\n");
    write_file(dir.file("kg_final.txt"), "0 0 1\n1 0 2\n2 1 0\n");
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("stats prints one JSON line with the exact counts") {
    TempDir dir("clistats");
    write_fixture(dir);
    const CliResult r = run_cli(dir, "stats --data-dir " + dir.path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text ==
          "{\"entities\":3,\"interactions\":4,\"items\":3,\"relations\":2,\"triples\":3,"
          "\"users\":2}\n");
}

TEST_CASE("missing file fails with the file named on stderr") {
    TempDir dir("climissing");
    const CliResult r = run_cli(dir, "stats --data-dir " + dir.path.string());
    CHECK(r.exit_code != 0);
    CHECK(r.stderr_text.find("train.txt") != std::string::npos);
}

TEST_CASE("KGT_DATA_DIR is the --data-dir fallback") {
    TempDir dir("clienv");
    write_fixture(dir);
    const CliResult r = run_cli(dir, "stats", "KGT_DATA_DIR=" + dir.path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("\"users\":2") != std::string::npos);
}

TEST_CASE("prune writes artifacts; identical seeds give byte-identical files") {
    TempDir dir("cliprune");
    write_fixture(dir);
    const std::string common = "prune --data-dir " + dir.path.string() +
                               " --max-epochs 3 --eval-every 1 --k 4 --dim 8 --batch-size 8"
                               " --seed 5 --ratio 0.5";
    const CliResult r1 = run_cli(dir, common + " --out-dir " + dir.file("a"));
    INFO(r1.stderr_text);
    CHECK(r1.exit_code == 0);
    const CliResult r2 = run_cli(dir, common + " --out-dir " + dir.file("b"));
    CHECK(r2.exit_code == 0);
    for (const std::string f : {"pruned_kg.txt", "mask.tsv", "histogram.tsv", "s_tilde.tsv"}) {
        CHECK(read_file(dir.file("a/" + f)) == read_file(dir.file("b/" + f)));
    }
    // ratio 0.5 on 3 canonical triples keeps ceil(1.5) = 2
    const std::string pruned = read_file(dir.file("a/pruned_kg.txt"));
    CHECK(std::count(pruned.begin(), pruned.end(), '\n') == 2);
    const std::string manifest = read_file(dir.file("a/manifest.json"));
    CHECK(manifest.find("\"status\": \"complete\"") != std::string::npos);
}

TEST_CASE("tau routing keeps exactly the triples at or above the threshold") {
    TempDir dir("clitau");
    write_fixture(dir);
    const CliResult r = run_cli(dir, "prune --data-dir " + dir.path.string() + " --out-dir " +
                                         dir.file("t") +
                                         " --max-epochs 2 --eval-every 1 --k 4 --dim 8"
                                         " --batch-size 8 --tau 0.0");
    CHECK(r.exit_code == 0);
    const std::string pruned = read_file(dir.file("t/pruned_kg.txt"));
    CHECK(std::count(pruned.begin(), pruned.end(), '\n') == 3);  // tau 0 keeps all
}

TEST_CASE("baseline subcommand routes pop and random") {
    TempDir dir("clibase");
    write_fixture(dir);
    const CliResult r = run_cli(dir, "baseline --data-dir " + dir.path.string() + " --out-dir " +
                                         dir.file("p") + " --baseline pop --ratio 0.5");
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(dir.file("p/pruned_kg_pop.txt")));
    CHECK(std::filesystem::exists(dir.file("p/mask_pop.tsv")));

    const CliResult r2 = run_cli(dir, "baseline --data-dir " + dir.path.string() + " --out-dir " +
                                          dir.file("r") + " --baseline random --ratio 0.5");
    CHECK(r2.exit_code == 0);
    const std::string pruned = read_file(dir.file("r/pruned_kg_random.txt"));
    CHECK(std::count(pruned.begin(), pruned.end(), '\n') == 2);
}

TEST_CASE("evaluate prints a report with the default K list {10,20}") {
    TempDir dir("clieval");
    write_fixture(dir);
    const CliResult r = run_cli(dir, "evaluate --data-dir " + dir.path.string() +
                                         " --max-epochs 2 --eval-every 1 --k 4 --dim 8"
                                         " --batch-size 8");
    INFO(r.stderr_text);
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("recall@10") != std::string::npos);
    CHECK(r.stdout_text.find("recall@20") != std::string::npos);
    CHECK(r.stdout_text.find("ndcg@20") != std::string::npos);
}

TEST_CASE("config file values apply under CLI override") {
    TempDir dir("cliconf");
    write_fixture(dir);
    write_file(dir.file("cfg.json"),
               "{\"max_epochs\": 2, \"dim\": 8, \"k\": 4, \"batch_size\": 8,"
               " \"eval_every\": 1, \"ratio\": 0.5, \"seed\": 123}");
    // --ratio on the command line beats the file's 0.5.
    const CliResult r = run_cli(dir, "prune --data-dir " + dir.path.string() + " --config " +
                                         dir.file("cfg.json") + " --out-dir " + dir.file("c") +
                                         " --tau 0.0");
    INFO(r.stderr_text);
    CHECK(r.exit_code == 0);
    const std::string manifest = read_file(dir.file("c/manifest.json"));
    CHECK(manifest.find("\"seed\": 123") != std::string::npos);
    const std::string pruned = read_file(dir.file("c/pruned_kg.txt"));
    CHECK(std::count(pruned.begin(), pruned.end(), '\n') == 3);
}

TEST_CASE("hist subcommand rebuilds the histogram from dumps") {
    TempDir dir("clihist");
    write_fixture(dir);
    const CliResult r1 = run_cli(dir, "prune --data-dir " + dir.path.string() + " --out-dir " +
                                          dir.file("h") +
                                          " --max-epochs 2 --eval-every 1 --k 4 --dim 8"
                                          " --batch-size 8 --bins 20");
    CHECK(r1.exit_code == 0);
    const CliResult r2 = run_cli(dir, "hist --scores " + dir.file("h/s_tilde.tsv") + " --mask " +
                                          dir.file("h/mask.tsv") + " --out-dir " +
                                          dir.file("h2") + " --bins 20");
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.file("h/histogram.tsv")) == read_file(dir.file("h2/histogram.tsv")));
}

TEST_CASE("preprocess emits a filtered dataset") {
    TempDir dir("cliprep");
    std::string train;
    for (int u = 0; u < 12; ++u) {
        train += std::to_string(u);
        for (int i = 0; i < 12; ++i) train += " " + std::to_string(i);
        train += "\n";
    }
    train += "12 0\n";  // sparse user dropped by 10-core
    write_file(dir.file("train.txt"), train);
    write_file(dir.file("test.txt"), "");
    write_file(dir.file("kg_final.txt"), "0 0 1\n");
    const CliResult r = run_cli(dir, "preprocess --data-dir " + dir.path.string() +
                                         " --out-dir " + dir.file("pp"));
    CHECK(r.exit_code == 0);
    const std::string filtered = read_file(dir.file("pp/train.txt"));
    CHECK(filtered.find("\n12 ") == std::string::npos);
    CHECK(filtered.find("0 0 1 2") != std::string::npos);
}

TEST_CASE("help text names the grids for the tunables") {
    TempDir dir("clihelp");
    const CliResult r = run_cli(dir, "prune --help");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("1e-5, 1e-4, 1e-3") != std::string::npos);
    CHECK(r.stdout_text.find("20, 50, 100, 200") != std::string::npos);
    CHECK(r.stdout_text.find("0.1 .. 0.7") != std::string::npos);
}

TEST_SUITE_END();
