// End-to-end tests of the ttsm binary. The test runner exports TTSM_CLI with
// the built binary's path; without it every case here skips.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifdef __unix__
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
    const char* p = std::getenv("TTSM_CLI");
    return p ? std::string(p) : std::string();
}

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("ttsm_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "_stdout.txt";
    const fs::path err = dir / "_stderr.txt";
    const std::string cmd =
        cli_path() + " " + args + " > " + out.string() + " 2> " + err.string();
    int rc = std::system(cmd.c_str());
#ifdef __unix__
    if (WIFEXITED(rc)) rc = WEXITSTATUS(rc);
#endif
    return {rc, slurp(out), slurp(err)};
}

#define REQUIRE_CLI()                       \
    do {                                    \
        if (cli_path().empty()) {           \
            SKIP("TTSM_CLI not set");       \
        }                                   \
    } while (0)

const char* kTinyModel = R"({"patch_len": 8, "hidden_size": 16, "n_temporal_layers": 2,
  "n_spatial_layers": 1, "n_heads": 2, "max_context": 64, "max_horizon": 24,
  "n_pad_tokens": 2, "head_horizon_per_patch": 8, "cross_dim": 8, "long_rank": 4})";

}  // namespace

TEST_CASE("cli help and usage errors") {
    REQUIRE_CLI();
    auto dir = temp_dir("usage");

    auto help = run_cli("--help", dir);
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("generate") != std::string::npos);
    CHECK(run_cli("evaluate --help", dir).exit_code == 0);

    auto bad = run_cli("frobnicate", dir);
    CHECK(bad.exit_code != 0);
    const json err = json::parse(bad.err);
    CHECK(err.contains("error"));
    // exactly one line of machine-readable stderr, no duplicate prose
    CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);

    auto noconf = run_cli("train", dir);
    CHECK(noconf.exit_code != 0);
    CHECK(json::parse(noconf.err).contains("error"));
}

TEST_CASE("cli config errors carry a json pointer") {
    REQUIRE_CLI();
    auto dir = temp_dir("cfgerr");
    write_file(dir / "bad.json", R"({"model": {"preset": "toy", "n_heads": 7}})");
    auto r = run_cli("param-count -c " + (dir / "bad.json").string(), dir);
    CHECK(r.exit_code != 0);
    const json err = json::parse(r.err);
    CHECK(err.at("pointer") == "/model");

    write_file(dir / "missing.json", R"({})");
    auto r2 = run_cli("forecast -c " + (dir / "missing.json").string(), dir);
    CHECK(r2.exit_code != 0);
    CHECK(json::parse(r2.err).at("pointer") == "/checkpoint");

    auto r3 = run_cli("param-count -c " + (dir / "nope.json").string(), dir);
    CHECK(r3.exit_code != 0);
}

TEST_CASE("cli param-count matches the pinned sizes") {
    REQUIRE_CLI();
    auto dir = temp_dir("pc");
    write_file(dir / "toy.json", R"({"model": {"preset": "toy"}})");
    auto r = run_cli("param-count -c " + (dir / "toy.json").string(), dir);
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out).at("param_count") == 289858);

    write_file(dir / "large.json", R"({"model": {"preset": "large"}})");
    auto r2 = run_cli("param-count -c " + (dir / "large.json").string(), dir);
    REQUIRE(r2.exit_code == 0);
    CHECK(json::parse(r2.out).at("param_count") == 23252198);
}

TEST_CASE("cli generate is deterministic per seed") {
    REQUIRE_CLI();
    auto dir = temp_dir("gen");
    const std::string sampling =
        R"("sampling": {"seq_len_range": [96, 128]},
           "augmentation": {"n_mixes": 3, "n_base": 3, "pool_subsample": 4})";
    write_file(dir / "a.json", R"({"n_series": 3, "seed": 11, "out": ")" +
                                   (dir / "a/manifest.json").string() + R"(", )" + sampling + "}");
    write_file(dir / "b.json", R"({"n_series": 3, "seed": 11, "out": ")" +
                                   (dir / "b/manifest.json").string() + R"(", )" + sampling + "}");
    write_file(dir / "c.json", R"({"n_series": 3, "seed": 12, "out": ")" +
                                   (dir / "c/manifest.json").string() + R"(", )" + sampling + "}");

    REQUIRE(run_cli("generate -c " + (dir / "a.json").string(), dir).exit_code == 0);
    REQUIRE(run_cli("generate -c " + (dir / "b.json").string(), dir).exit_code == 0);
    REQUIRE(run_cli("generate -c " + (dir / "c.json").string(), dir).exit_code == 0);

    REQUIRE(fs::exists(dir / "a/manifest.json"));
    for (int i = 0; i < 3; ++i) {
        const std::string f = "manifest_" + std::to_string(i) + ".csv";
        REQUIRE(fs::exists(dir / "a" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(slurp(dir / "a/manifest_0.csv") != slurp(dir / "c/manifest_0.csv"));

    // --seed overrides the config seed
    auto r = run_cli("generate -c " + (dir / "c.json").string() + " --seed 11", dir);
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out).at("seed") == 11);
    CHECK(slurp(dir / "c/manifest_0.csv") == slurp(dir / "a/manifest_0.csv"));
}

TEST_CASE("cli train, forecast and evaluate round trip") {
    REQUIRE_CLI();
    auto dir = temp_dir("e2e");

    write_file(dir / "gen.json", R"({"n_series": 4, "seed": 5, "out": ")" +
                                     (dir / "ds/manifest.json").string() +
                                     R"(", "sampling": {"seq_len_range": [128, 160]},
        "augmentation": {"n_mixes": 3, "n_base": 3, "pool_subsample": 4}})");
    REQUIRE(run_cli("generate -c " + (dir / "gen.json").string(), dir).exit_code == 0);

    write_file(dir / "train.json",
               std::string(R"({"model": )") + kTinyModel +
                   R"(, "mode": "dense", "data": {"type": "dataset", "path": ")" +
                   (dir / "ds/manifest.json").string() +
                   R"("}, "train": {"steps": 5, "batch_size": 2, "max_horizon": 24, "seed": 3,
        "loss_curve_path": ")" +
                   (dir / "curve.csv").string() + R"("}, "out_checkpoint": ")" +
                   (dir / "tiny.ckpt").string() + R"("})");
    auto tr = run_cli("train -c " + (dir / "train.json").string(), dir);
    REQUIRE(tr.exit_code == 0);
    const json tj = json::parse(tr.out);
    CHECK(tj.at("mode") == "dense");
    CHECK(tj.at("final_loss").get<double>() > 0.0);
    REQUIRE(fs::exists(dir / "tiny.ckpt"));
    REQUIRE(fs::exists(dir / "curve.csv"));
    {
        std::ifstream c(dir / "curve.csv");
        std::string header;
        std::getline(c, header);
        CHECK(header == "step,wall_ms,loss,stride,horizon");
    }

    write_file(dir / "fc.json", R"({"checkpoint": ")" + (dir / "tiny.ckpt").string() +
                                    R"(", "data": ")" + (dir / "ds/manifest_0.csv").string() +
                                    R"(", "horizon": 8, "out": ")" + (dir / "fc.csv").string() +
                                    R"(", "inference": {"use_mirror": true}})");
    auto fc = run_cli("forecast -c " + (dir / "fc.json").string(), dir);
    REQUIRE(fc.exit_code == 0);
    REQUIRE(fs::exists(dir / "fc.csv"));
    REQUIRE(fs::exists(dir / "fc.csv.provenance.json"));
    {
        std::ifstream f(dir / "fc.csv");
        std::string line;
        int rows = 0;
        while (std::getline(f, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 9);  // header + one row per step
        const json prov = json::parse(slurp(dir / "fc.csv.provenance.json"));
        CHECK(prov.at("horizon") == 8);
        CHECK(prov.at("use_mirror") == true);
    }

    // identical forecast config twice is byte-identical
    REQUIRE(run_cli("forecast -c " + (dir / "fc.json").string(), dir).exit_code == 0);
    const std::string fc_once = slurp(dir / "fc.csv");
    REQUIRE(run_cli("forecast -c " + (dir / "fc.json").string(), dir).exit_code == 0);
    CHECK(slurp(dir / "fc.csv") == fc_once);

    write_file(dir / "eval.json",
               R"({"checkpoint": ")" + (dir / "tiny.ckpt").string() + R"(", "tasks": [
        {"dataset": ")" + (dir / "ds/manifest_0.csv").string() +
                   R"(", "context_len": 64, "horizon": 8},
        {"dataset": ")" + (dir / "ds/manifest_1.csv").string() +
                   R"(", "context_len": 64, "horizon": 8, "season": 8, "task_id": "t1"}],
        "out_csv": ")" + (dir / "report.csv").string() + R"(", "out_json": ")" +
                   (dir / "report.json").string() + R"("})");
    auto ev = run_cli("evaluate -c " + (dir / "eval.json").string(), dir);
    REQUIRE(ev.exit_code == 0);
    const json report = json::parse(ev.out);
    REQUIRE(report.at("aggregates").size() == 4);
    CHECK(report.at("aggregates")[0].at("label") == "overall");
    CHECK(report.at("aggregates")[0].at("n_tasks").get<int>() +
              report.at("failures").size() ==
          2);
    REQUIRE(fs::exists(dir / "report.csv"));
    REQUIRE(fs::exists(dir / "report.json"));

    // without a checkpoint the baseline scores itself: relative errors exactly 1
    write_file(dir / "base.json", R"({"tasks": [{"dataset": ")" +
                                      (dir / "ds/manifest_0.csv").string() +
                                      R"(", "context_len": 64, "horizon": 8}]})");
    auto bl = run_cli("evaluate -c " + (dir / "base.json").string(), dir);
    REQUIRE(bl.exit_code == 0);
    const json bj = json::parse(bl.out);
    REQUIRE(bj.at("aggregates")[0].at("n_tasks") == 1);
    CHECK(bj.at("aggregates")[0].at("arith_rel_mse") == 1.0);
    CHECK(bj.at("aggregates")[0].at("geo_rel_mae") == 1.0);
}
