#pragma once

// Evaluation harness: relative MSE/MAE of a forecaster against the seasonal
// naive baseline, aggregated overall and per horizon class, with CSV/JSON
// reports and dependency-free SVG exhibits. Relative error is the ratio of
// the model's metric to the baseline's, over observed points only.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsm/common.hpp"
#include "ttsm/dataset_io.hpp"
#include "ttsm/inference.hpp"
#include "ttsm/time_series.hpp"
#include "ttsm/training.hpp"

namespace ttsm::eval {

enum class Metric { mse, mae };

enum class HorizonClass { short_range = 0, medium_range = 1, long_range = 2 };

inline HorizonClass classify_horizon(int h) {
    if (h <= 48) return HorizonClass::short_range;
    if (h <= 480) return HorizonClass::medium_range;
    return HorizonClass::long_range;
}

inline const char* horizon_class_name(HorizonClass c) {
    switch (c) {
        case HorizonClass::short_range: return "short";
        case HorizonClass::medium_range: return "medium";
        default: return "long";
    }
}

struct EvalTask {
    std::string task_id;
    TimeSeries dataset;
    int context_len = 0;
    int horizon = 0;
    int season = 1;

    void validate() const {
        require(context_len >= 1, "context_len must be >= 1");
        require(horizon >= 1, "horizon must be >= 1");
        require(season >= 1, "season must be >= 1");
        require(static_cast<std::size_t>(context_len) + static_cast<std::size_t>(horizon) <=
                    dataset.length(),
                "context_len + horizon exceeds series length");
    }
};

namespace detail {

inline double error_metric(const std::vector<double>& forecast, const std::vector<double>& truth,
                           const std::vector<std::uint8_t>& observed, Metric metric) {
    require(forecast.size() == truth.size() && truth.size() == observed.size(),
            "forecast, truth, and mask lengths must match");
    double total = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!observed[i]) continue;
        const double e = forecast[i] - truth[i];
        total += metric == Metric::mse ? e * e : std::abs(e);
        ++n;
    }
    require(n > 0, "truth has no observed points");
    return total / static_cast<double>(n);
}

}  // namespace detail

/// metric(model, truth) / metric(baseline, truth) over observed points only.
/// A baseline error of zero yields the undefined sentinel (NaN); callers
/// exclude it from aggregates and count it.
inline double relative_error(const std::vector<double>& model_forecast,
                             const std::vector<double>& baseline_forecast,
                             const std::vector<double>& truth,
                             const std::vector<std::uint8_t>& observed, Metric metric) {
    const double em = detail::error_metric(model_forecast, truth, observed, metric);
    const double eb = detail::error_metric(baseline_forecast, truth, observed, metric);
    if (eb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return em / eb;
}

struct TaskResult {
    std::string task_id;
    int horizon = 0;
    HorizonClass horizon_class = HorizonClass::short_range;
    double mse_model = 0.0, mse_naive = 0.0, rel_mse = 0.0;
    double mae_model = 0.0, mae_naive = 0.0, rel_mae = 0.0;
    double wall_ms = 0.0;
    bool failed = false;
    std::string error;
};

struct Aggregate {
    std::string label;  // "overall", "short", "medium", "long"
    int n_tasks = 0;            // tasks contributing to the means
    int n_undefined = 0;        // excluded: baseline error was zero
    double arith_rel_mse = std::numeric_limits<double>::quiet_NaN();
    double geo_rel_mse = std::numeric_limits<double>::quiet_NaN();
    double arith_rel_mae = std::numeric_limits<double>::quiet_NaN();
    double geo_rel_mae = std::numeric_limits<double>::quiet_NaN();
};

struct EvalReport {
    std::vector<TaskResult> tasks;  // per-task rows, failures included
    std::vector<Aggregate> aggregates;  // overall + one per horizon class
    int n_failed = 0;
};

namespace detail {

inline Aggregate aggregate_rows(const std::string& label, const std::vector<TaskResult>& rows) {
    Aggregate a;
    a.label = label;
    double sum_mse = 0.0, sum_log_mse = 0.0, sum_mae = 0.0, sum_log_mae = 0.0;
    for (const auto& r : rows) {
        if (r.failed) continue;
        if (std::isnan(r.rel_mse) || std::isnan(r.rel_mae)) {
            ++a.n_undefined;
            continue;
        }
        ++a.n_tasks;
        sum_mse += r.rel_mse;
        sum_log_mse += std::log(r.rel_mse);
        sum_mae += r.rel_mae;
        sum_log_mae += std::log(r.rel_mae);
    }
    if (a.n_tasks > 0) {
        a.arith_rel_mse = sum_mse / a.n_tasks;
        a.geo_rel_mse = std::exp(sum_log_mse / a.n_tasks);
        a.arith_rel_mae = sum_mae / a.n_tasks;
        a.geo_rel_mae = std::exp(sum_log_mae / a.n_tasks);
    }
    return a;
}

}  // namespace detail

/// Recomputes the aggregate block from per-task rows (also used to
/// re-summarize a parsed report CSV).
inline std::vector<Aggregate> summarize(const std::vector<TaskResult>& tasks) {
    std::vector<Aggregate> out;
    out.push_back(detail::aggregate_rows("overall", tasks));
    for (auto cls : {HorizonClass::short_range, HorizonClass::medium_range,
                     HorizonClass::long_range}) {
        std::vector<TaskResult> rows;
        for (const auto& t : tasks)
            if (t.horizon_class == cls) rows.push_back(t);
        out.push_back(detail::aggregate_rows(horizon_class_name(cls), rows));
    }
    return out;
}

/// Forecasts the target channel of a task's context; the harness is generic
/// over this so the baseline itself can stand in as the "model".
using TaskForecaster = std::function<std::vector<double>(const EvalTask&, const TimeSeries&)>;

/// Seasonal-naive continuation of the context's target channel.
inline std::vector<double> naive_forecast(const EvalTask& task, const TimeSeries& context) {
    const auto tc = static_cast<std::size_t>(context.target_channel());
    return seasonal_naive(context.channel(tc), static_cast<std::size_t>(task.season),
                          static_cast<std::size_t>(task.horizon))
        .forecast;
}

inline TaskForecaster baseline_as_model() { return naive_forecast; }

/// Wraps the full inference pipeline; forecasts the task's target channel.
template <typename Scalar>
TaskForecaster model_task_forecaster(const model::ModelParams<Scalar>& params,
                                     const infer::InferenceConfig& icfg) {
    return [&params, icfg](const EvalTask& task, const TimeSeries& context) {
        const auto res = infer::predict(params, context, task.horizon, icfg);
        for (std::size_t i = 0; i < res.channels.size(); ++i)
            if (res.channels[i] == context.target_channel()) {
                const auto row = res.values.row(static_cast<Eigen::Index>(i));
                return std::vector<double>(row.begin(), row.end());
            }
        throw std::runtime_error("target channel missing from forecast");
    };
}

/// Evaluates every task, never aborting on a per-task failure; the report
/// carries failed rows with their error text plus aggregate blocks.
inline EvalReport run_eval(const TaskForecaster& forecaster, const std::vector<EvalTask>& tasks) {
    require(!tasks.empty(), "no tasks");
    EvalReport report;
    for (const auto& task : tasks) {
        TaskResult r;
        r.task_id = task.task_id;
        r.horizon = task.horizon;
        r.horizon_class = classify_horizon(task.horizon);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            task.validate();
            const TimeSeries context =
                task.dataset.slice(0, static_cast<std::size_t>(task.context_len));
            const auto tc = static_cast<std::size_t>(task.dataset.target_channel());
            std::vector<double> truth(static_cast<std::size_t>(task.horizon));
            std::vector<std::uint8_t> observed(static_cast<std::size_t>(task.horizon));
            for (int j = 0; j < task.horizon; ++j) {
                const auto t = static_cast<std::size_t>(task.context_len + j);
                truth[static_cast<std::size_t>(j)] = task.dataset.value(tc, t);
                observed[static_cast<std::size_t>(j)] = task.dataset.observed(tc, t) ? 1 : 0;
            }

            const std::vector<double> model_fc = forecaster(task, context);
            const std::vector<double> naive_fc = naive_forecast(task, context);
            require(model_fc.size() == static_cast<std::size_t>(task.horizon),
                    "forecast length mismatch");

            r.mse_model = detail::error_metric(model_fc, truth, observed, Metric::mse);
            r.mse_naive = detail::error_metric(naive_fc, truth, observed, Metric::mse);
            r.mae_model = detail::error_metric(model_fc, truth, observed, Metric::mae);
            r.mae_naive = detail::error_metric(naive_fc, truth, observed, Metric::mae);
            r.rel_mse = relative_error(model_fc, naive_fc, truth, observed, Metric::mse);
            r.rel_mae = relative_error(model_fc, naive_fc, truth, observed, Metric::mae);
        } catch (const std::exception& e) {
            r.failed = true;
            r.error = e.what();
            ++report.n_failed;
        }
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              t0)
                        .count();
        report.tasks.push_back(std::move(r));
    }
    report.aggregates = summarize(report.tasks);
    return report;
}

template <typename Scalar>
EvalReport run_eval(const model::ModelParams<Scalar>& params, const std::vector<EvalTask>& tasks,
                    const infer::InferenceConfig& icfg) {
    return run_eval(model_task_forecaster(params, icfg), tasks);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path);
    require(static_cast<bool>(f), "cannot open report for writing: " + path);
    f << "task_id,horizon,class,mse_model,mse_naive,rel_mse,mae_model,mae_naive,rel_mae,"
         "wall_ms\n";
    for (const auto& r : report.tasks) {
        if (r.failed) continue;
        f << r.task_id << ',' << r.horizon << ',' << horizon_class_name(r.horizon_class) << ','
          << io::detail::format_double(r.mse_model) << ',' << io::detail::format_double(r.mse_naive)
          << ',' << io::detail::format_double(r.rel_mse) << ','
          << io::detail::format_double(r.mae_model) << ',' << io::detail::format_double(r.mae_naive)
          << ',' << io::detail::format_double(r.rel_mae) << ','
          << io::detail::format_double(r.wall_ms) << '\n';
    }
    require(static_cast<bool>(f), "write failed: " + path);
}

/// Parses a report CSV back into per-task rows (succeeded tasks only).
inline std::vector<TaskResult> read_report_csv(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "cannot open report: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "empty report: " + path);
    std::vector<TaskResult> rows;
    while (std::getline(f, line)) {
        if (io::detail::is_blank(line)) continue;
        const auto cells = io::detail::split_csv_line(line);
        require(cells.size() == 10, "malformed report row: " + line);
        TaskResult r;
        r.task_id = cells[0];
        r.horizon = std::stoi(cells[1]);
        r.horizon_class = classify_horizon(r.horizon);
        require(cells[2] == horizon_class_name(r.horizon_class),
                "horizon class mismatch in report row: " + line);
        r.mse_model = std::stod(cells[3]);
        r.mse_naive = std::stod(cells[4]);
        r.rel_mse = std::stod(cells[5]);
        r.mae_model = std::stod(cells[6]);
        r.mae_naive = std::stod(cells[7]);
        r.rel_mae = std::stod(cells[8]);
        r.wall_ms = std::stod(cells[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["n_tasks"] = report.tasks.size();
    j["n_failed"] = report.n_failed;
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : report.aggregates) {
        j["aggregates"].push_back({{"label", a.label},
                                   {"n_tasks", a.n_tasks},
                                   {"n_undefined", a.n_undefined},
                                   {"arith_rel_mse", a.arith_rel_mse},
                                   {"geo_rel_mse", a.geo_rel_mse},
                                   {"arith_rel_mae", a.arith_rel_mae},
                                   {"geo_rel_mae", a.geo_rel_mae}});
    }
    j["failures"] = nlohmann::json::array();
    for (const auto& r : report.tasks)
        if (r.failed) j["failures"].push_back({{"task_id", r.task_id}, {"error", r.error}});
    return j;
}

inline void write_report_json(const EvalReport& report, const std::string& path) {
    std::ofstream f(path);
    require(static_cast<bool>(f), "cannot open report for writing: " + path);
    f << report_to_json(report).dump(2) << '\n';
    require(static_cast<bool>(f), "write failed: " + path);
}

// ---------------------------------------------------------------------------
// Plots (dependency-free SVG; presentation only, numbers come from the report)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string svg_header(int w, int h) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return os.str();
}

}  // namespace detail

/// Writes a bar chart of per-class relative errors, a loss-curve polyline per
/// provided curve, and the underlying CSVs. An empty or all-failed report
/// produces an explanatory stub instead of charts.
inline void emit_plots(const EvalReport& report,
                       const std::map<std::string, std::vector<train::TrainPoint>>& loss_curves,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec && fs::is_directory(out_dir), "cannot create output directory: " + out_dir);

    bool any_rows = false;
    for (const auto& a : report.aggregates) any_rows = any_rows || a.n_tasks > 0;

    {
        std::ofstream csv(fs::path(out_dir) / "relative_errors.csv");
        require(static_cast<bool>(csv), "cannot write relative_errors.csv");
        csv << "label,n_tasks,n_undefined,arith_rel_mse,geo_rel_mse,arith_rel_mae,geo_rel_mae\n";
        for (const auto& a : report.aggregates)
            csv << a.label << ',' << a.n_tasks << ',' << a.n_undefined << ','
                << io::detail::format_double(a.arith_rel_mse) << ','
                << io::detail::format_double(a.geo_rel_mse) << ','
                << io::detail::format_double(a.arith_rel_mae) << ','
                << io::detail::format_double(a.geo_rel_mae) << '\n';
    }

    if (!any_rows) {
        std::ofstream stub(fs::path(out_dir) / "no_plots.txt");
        stub << "No successful evaluation rows; nothing to plot.\n"
             << "failed tasks: " << report.n_failed << "\n";
        return;
    }

    {
        const int W = 480, H = 280, pad = 40;
        double vmax = 1.0;
        for (const auto& a : report.aggregates)
            if (a.n_tasks > 0) vmax = std::max({vmax, a.arith_rel_mse, a.arith_rel_mae});
        std::ofstream svg(fs::path(out_dir) / "relative_errors.svg");
        require(static_cast<bool>(svg), "cannot write relative_errors.svg");
        svg << detail::svg_header(W, H);
        const double band = static_cast<double>(W - 2 * pad) / report.aggregates.size();
        int i = 0;
        for (const auto& a : report.aggregates) {
            const double x0 = pad + i * band;
            if (a.n_tasks > 0) {
                const double h_mse = (H - 2 * pad) * a.arith_rel_mse / vmax;
                const double h_mae = (H - 2 * pad) * a.arith_rel_mae / vmax;
                svg << "<rect x=\"" << x0 + band * 0.15 << "\" y=\"" << H - pad - h_mse
                    << "\" width=\"" << band * 0.3 << "\" height=\"" << h_mse
                    << "\" fill=\"#4477aa\"/>\n";
                svg << "<rect x=\"" << x0 + band * 0.55 << "\" y=\"" << H - pad - h_mae
                    << "\" width=\"" << band * 0.3 << "\" height=\"" << h_mae
                    << "\" fill=\"#ee6677\"/>\n";
            }
            svg << "<text x=\"" << x0 + band / 2 << "\" y=\"" << H - pad + 16
                << "\" font-size=\"12\" text-anchor=\"middle\">" << a.label << "</text>\n";
            ++i;
        }
        const double y1 = H - pad - (H - 2 * pad) / vmax;
        svg << "<line x1=\"" << pad << "\" y1=\"" << y1 << "\" x2=\"" << W - pad << "\" y2=\""
            << y1 << "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
        svg << "<text x=\"" << pad << "\" y=\"" << y1 - 4
            << "\" font-size=\"11\" fill=\"#888\">baseline = 1.0</text>\n";
        svg << "<text x=\"" << pad << "\" y=\"16\" font-size=\"12\">relative MSE (blue) and MAE "
               "(red), arithmetic mean</text>\n";
        svg << "</svg>\n";
    }

    if (!loss_curves.empty()) {
        std::ofstream csv(fs::path(out_dir) / "loss_curves.csv");
        require(static_cast<bool>(csv), "cannot write loss_curves.csv");
        csv << "curve,step,wall_ms,loss,stride,horizon\n";
        for (const auto& [name, curve] : loss_curves)
            for (const auto& p : curve)
                csv << name << ',' << p.step << ',' << io::detail::format_double(p.wall_ms) << ','
                    << io::detail::format_double(p.loss) << ',' << p.stride << ',' << p.horizon
                    << '\n';

        const int W = 480, H = 280, pad = 40;
        double vmax = 0.0;
        int smax = 1;
        for (const auto& [name, curve] : loss_curves)
            for (const auto& p : curve) {
                vmax = std::max(vmax, p.loss);
                smax = std::max(smax, p.step);
            }
        if (vmax <= 0.0) vmax = 1.0;
        std::ofstream svg(fs::path(out_dir) / "loss_curves.svg");
        require(static_cast<bool>(svg), "cannot write loss_curves.svg");
        svg << detail::svg_header(W, H);
        const char* colors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44"};
        int ci = 0;
        for (const auto& [name, curve] : loss_curves) {
            svg << "<polyline fill=\"none\" stroke=\"" << colors[ci % 4] << "\" points=\"";
            for (const auto& p : curve) {
                const double x = pad + (W - 2.0 * pad) * p.step / smax;
                const double y = H - pad - (H - 2.0 * pad) * p.loss / vmax;
                svg << x << ',' << y << ' ';
            }
            svg << "\"/>\n";
            svg << "<text x=\"" << pad + 4 << "\" y=\"" << 16 + 14 * ci << "\" font-size=\"12\" "
                << "fill=\"" << colors[ci % 4] << "\">" << name << "</text>\n";
            ++ci;
        }
        svg << "</svg>\n";
    }
}

}  // namespace ttsm::eval
