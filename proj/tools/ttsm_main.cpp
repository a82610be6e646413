// Tiny-TSM command-line toolkit: synthetic data generation, training,
// forecasting, and evaluation. Every subcommand reads a JSON config; errors
// come back as one-line JSON on stderr with a JSON-pointer path when the
// problem is a config field.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ttsm/config_json.hpp"
#include "ttsm/dataset_io.hpp"
#include "ttsm/harness.hpp"
#include "ttsm/inference.hpp"
#include "ttsm/model/checkpoint.hpp"
#include "ttsm/synthts.hpp"
#include "ttsm/training.hpp"

namespace {

using nlohmann::json;
using namespace ttsm;

json load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config is not valid JSON: " + std::string(e.what()));
    }
}

train::SeriesSampler synth_sampler(const synth::BatchSampleConfig& sampling,
                                   const synth::AugmentationConfig& aug) {
    return [sampling, aug](RngStream& rng) {
        auto params = synth::sample_batch_params(rng, sampling);
        return synth::generate(aug, params, {}, rng);
    };
}

train::SeriesSampler dataset_sampler(std::vector<TimeSeries> pool) {
    require(!pool.empty(), "dataset has no series");
    return [pool = std::move(pool)](RngStream& rng) {
        const auto i = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
        return pool[i];
    };
}

/// Largest calendar-natural period that fits the context, used when a task
/// does not pin its season explicitly.
int default_season(const TimeSeries& series, int context_len) {
    if (!series.frequency()) return 1;
    int best = 1;
    for (int p : synth::natural_periods(*series.frequency()))
        if (p <= context_len) best = std::max(best, p);
    return best;
}

std::string channel_label(const TimeSeries& series, int c) {
    if (static_cast<std::size_t>(c) < series.channel_names().size() &&
        !series.channel_names()[static_cast<std::size_t>(c)].empty()) {
        std::string name = series.channel_names()[static_cast<std::size_t>(c)];
        for (char& ch : name)
            if (ch == ',' || ch == '\n') ch = '_';
        return name;
    }
    return "channel_" + std::to_string(c);
}

int cmd_generate(const json& config, std::optional<std::uint64_t> seed_override) {
    const auto sampling = cfg::sampling_config_from(config, "/sampling");
    const auto aug = cfg::augmentation_config_from(config, "/augmentation");
    const int n = cfg::get_req<int>(config, "/n_series");
    if (n < 1) throw cfg::ConfigError("/n_series", "must be >= 1");
    const auto out = cfg::get_req<std::string>(config, "/out");
    const auto seed = seed_override ? *seed_override
                                    : cfg::get_or<std::uint64_t>(config, "/seed", 0);

    RngStream rng(seed);
    std::vector<TimeSeries> series;
    series.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto params = synth::sample_batch_params(rng, sampling);
        series.push_back(synth::generate(aug, params, {}, rng));
    }
    io::write_dataset(series, out);
    std::cout << json{{"written", n}, {"manifest", out}, {"seed", seed}}.dump() << "\n";
    return 0;
}

int cmd_train(const json& config, std::optional<std::uint64_t> seed_override) {
    auto tcfg = cfg::train_config_from(config, "/train");
    if (seed_override) tcfg.seed = *seed_override;

    model::ModelParams<float> params;
    if (cfg::has(config, "/init_checkpoint")) {
        params = model::load_params<float>(cfg::get_req<std::string>(config, "/init_checkpoint"));
    } else {
        const auto mcfg = cfg::model_config_from(config, "/model");
        RngStream init_rng(tcfg.seed, 0x117);
        params = model::init_params<float>(mcfg, init_rng);
    }

    const auto data_type = cfg::get_req<std::string>(config, "/data/type");
    train::SeriesSampler sampler;
    if (data_type == "synth") {
        sampler = synth_sampler(cfg::sampling_config_from(config, "/data/sampling"),
                                cfg::augmentation_config_from(config, "/data/augmentation"));
    } else if (data_type == "dataset") {
        sampler = dataset_sampler(
            io::read_dataset(cfg::get_req<std::string>(config, "/data/path")));
    } else {
        throw cfg::ConfigError("/data/type", "expected 'synth' or 'dataset'");
    }

    const auto mode = cfg::get_or<std::string>(config, "/mode", "dense");
    if (mode != "dense" && mode != "test_at_end")
        throw cfg::ConfigError("/mode", "expected 'dense' or 'test_at_end'");
    const auto out = cfg::get_req<std::string>(config, "/out_checkpoint");

    auto result = mode == "dense" ? train::train(std::move(params), sampler, tcfg)
                                  : train::train_test_at_end(std::move(params), sampler, tcfg);
    model::save_params(result.params, out);

    json evals = json::array();
    for (const auto& e : result.evals) evals.push_back({{"step", e.step}, {"loss", e.loss}});
    json summary{{"checkpoint", out},
                 {"steps", tcfg.steps},
                 {"mode", mode},
                 {"seed", tcfg.seed},
                 {"evals", evals}};
    if (!result.curve.empty()) {
        summary["final_loss"] = result.curve.back().loss;
        summary["wall_ms"] = result.curve.back().wall_ms;
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

int cmd_forecast(const json& config, std::optional<std::uint64_t> seed_override) {
    const auto params =
        model::load_params<float>(cfg::get_req<std::string>(config, "/checkpoint"));
    const auto series = io::read_csv(cfg::get_req<std::string>(config, "/data"));
    const int horizon = cfg::get_req<int>(config, "/horizon");
    auto icfg = cfg::inference_config_from(config, "/inference");
    if (seed_override) icfg.seed = *seed_override;
    const auto out = cfg::get_req<std::string>(config, "/out");
    const auto prov_path = cfg::get_or<std::string>(config, "/provenance_out",
                                                    out + ".provenance.json");

    const auto res = infer::predict(params, series, horizon, icfg);

    std::ofstream f(out);
    require(static_cast<bool>(f), "cannot open forecast output: " + out);
    for (std::size_t i = 0; i < res.channels.size(); ++i)
        f << (i ? "," : "") << channel_label(series, res.channels[i]);
    f << "\n";
    for (int j = 0; j < horizon; ++j) {
        for (std::size_t i = 0; i < res.channels.size(); ++i)
            f << (i ? "," : "")
              << io::detail::format_double(res.values(static_cast<Eigen::Index>(i), j));
        f << "\n";
    }
    require(static_cast<bool>(f), "write failed: " + out);

    json prov{{"horizon", horizon},
              {"use_mirror", res.used_mirror},
              {"noise_ensembles", res.noise_ensembles},
              {"noise_frac", res.noise_frac},
              {"sifi_stride", res.sifi_stride},
              {"augmented", res.augmented},
              {"seed", icfg.seed},
              {"channels", res.channels}};
    std::ofstream pf(prov_path);
    require(static_cast<bool>(pf), "cannot open provenance output: " + prov_path);
    pf << prov.dump(2) << "\n";

    std::cout << json{{"out", out}, {"provenance", prov_path}}.dump() << "\n";
    return 0;
}

int cmd_evaluate(const json& config, std::optional<std::uint64_t> seed_override) {
    auto icfg = cfg::inference_config_from(config, "/inference");
    if (seed_override) icfg.seed = *seed_override;

    if (!cfg::has(config, "/tasks")) throw cfg::ConfigError("/tasks", "missing required field");
    const auto& jtasks = config.at(json::json_pointer("/tasks"));
    if (!jtasks.is_array() || jtasks.empty())
        throw cfg::ConfigError("/tasks", "expected a nonempty array of tasks");

    std::vector<eval::EvalTask> tasks;
    for (std::size_t i = 0; i < jtasks.size(); ++i) {
        const std::string base = "/tasks/" + std::to_string(i);
        eval::EvalTask t;
        t.dataset = io::read_csv(cfg::get_req<std::string>(config, base + "/dataset"));
        t.context_len = cfg::get_req<int>(config, base + "/context_len");
        t.horizon = cfg::get_req<int>(config, base + "/horizon");
        t.season = cfg::get_or<int>(config, base + "/season",
                                    default_season(t.dataset, t.context_len));
        t.task_id = cfg::get_or<std::string>(config, base + "/task_id",
                                             "task_" + std::to_string(i));
        tasks.push_back(std::move(t));
    }

    eval::EvalReport report;
    model::ModelParams<float> params;  // must outlive run_eval's forecaster
    if (cfg::has(config, "/checkpoint")) {
        params = model::load_params<float>(cfg::get_req<std::string>(config, "/checkpoint"));
        report = eval::run_eval(params, tasks, icfg);
    } else {
        // no checkpoint: score the seasonal-naive baseline against itself
        report = eval::run_eval(eval::baseline_as_model(), tasks);
    }

    if (cfg::has(config, "/out_csv"))
        eval::write_report_csv(report, cfg::get_req<std::string>(config, "/out_csv"));
    if (cfg::has(config, "/out_json"))
        eval::write_report_json(report, cfg::get_req<std::string>(config, "/out_json"));
    if (cfg::has(config, "/plots_dir"))
        eval::emit_plots(report, {}, cfg::get_req<std::string>(config, "/plots_dir"));

    std::cout << eval::report_to_json(report).dump() << "\n";
    return 0;
}

int cmd_param_count(const json& config) {
    const auto mcfg = cfg::model_config_from(config, "/model");
    const auto closed = model::param_count(mcfg);
    model::ModelParams<float> shape;
    shape.config = mcfg;
    model::allocate_params(shape);
    const auto enumerated = model::param_count_enumerated(shape);
    require(closed == enumerated, "parameter count mismatch between formula and tensors");
    std::cout << json{{"param_count", closed}}.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tiny-TSM: synthetic-data forecasting toolkit"};
    app.require_subcommand(1);

    struct SubArgs {
        std::string config_path;
        std::optional<std::uint64_t> seed;
    };
    std::map<std::string, SubArgs> args;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"generate", "Sample a synthetic dataset and write it as a manifest + CSVs"},
        {"train", "Train a model on synthetic or file-based series"},
        {"forecast", "Forecast a series with a trained checkpoint"},
        {"evaluate", "Score forecasts against the seasonal-naive baseline"},
        {"param-count", "Print the parameter count of a model config"},
    };
    for (const auto& [name, desc] : subs) {
        auto* sub = app.add_subcommand(name, desc);
        auto& a = args[name];
        sub->add_option("-c,--config", a.config_path, "JSON config file")->required();
        sub->add_option("--seed", a.seed, "Override the config's random seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return e.get_exit_code();
    }

    try {
        for (const auto& [name, desc] : subs) {
            if (!app.got_subcommand(name)) continue;
            const auto& a = args[name];
            const json config = load_config(a.config_path);
            if (name == "generate") return cmd_generate(config, a.seed);
            if (name == "train") return cmd_train(config, a.seed);
            if (name == "forecast") return cmd_forecast(config, a.seed);
            if (name == "evaluate") return cmd_evaluate(config, a.seed);
            return cmd_param_count(config);
        }
        std::cerr << json{{"error", "no subcommand"}}.dump() << "\n";
        return 1;
    } catch (const cfg::ConfigError& e) {
        std::cerr << json{{"error", e.what()}, {"pointer", e.pointer()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}
