#pragma once

// Dense next-token training: every non-pad patch position supervises the
// following steps with targets anchored at that position's own rolling
// statistics. A per-step coarse grid (stride n, random phase) thins the
// supervised horizon steps; the test-at-end mode instead masks the trailing
// 20% of the context and supervises only targets behind the mask.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/dart_norm.hpp"
#include "ttsm/model/checkpoint.hpp"
#include "ttsm/model/network.hpp"
#include "ttsm/time_series.hpp"

namespace ttsm::train {

struct TrainConfig {
    int batch_size = 4;
    double learning_rate = 1e-4;
    double final_lr_fraction = 1.0;  // cosine-decay floor; 1.0 = constant lr
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    int max_horizon = 960;  // clamped to the model's own limit
    std::vector<int> coarse_grid_strides{1, 2, 4, 8, 16, 32, 64, 128};
    double coarse_grid_prob = 0.5;
    double huber_delta = 1.0;
    int steps = 1000;
    std::uint64_t seed = 0;
    std::string loss_curve_path;
    int checkpoint_every = 0;  // 0 = no periodic checkpoints
    std::string checkpoint_path;
    int max_context = 0;  // 0 = model max_context
    double test_at_end_fraction = 0.8;
    int eval_every = 0;  // 0 = no held-out evaluation
    int eval_horizon = 48;
    int n_eval_series = 8;

    void validate() const {
        require(batch_size >= 1, "batch_size must be >= 1");
        require(huber_delta > 0.0, "huber_delta must be positive");
        require(steps >= 0, "steps must be >= 0");
        require(!coarse_grid_strides.empty(), "stride set must be nonempty");
        for (int n : coarse_grid_strides) {
            require(n >= 1 && n <= 128, "strides must lie in 1..128");
            require((n & (n - 1)) == 0, "strides must be powers of two");
        }
        require(coarse_grid_prob >= 0.0 && coarse_grid_prob <= 1.0,
                "coarse_grid_prob must be a probability");
        require(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0,
                "final_lr_fraction must be in (0,1]");
        require(test_at_end_fraction > 0.0 && test_at_end_fraction < 1.0,
                "test_at_end_fraction must be in (0,1)");
    }
};

inline double huber(double pred, double target, double delta) {
    require(delta > 0.0, "huber delta must be positive");
    const double e = std::abs(pred - target);
    return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
}

inline double huber_grad(double pred, double target, double delta) {
    return std::clamp(pred - target, -delta, delta);
}

inline int sample_horizon(RngStream& rng, int max_h) {
    require(max_h >= 1, "max horizon must be >= 1");
    return static_cast<int>(rng.uniform_int(1, max_h));
}

struct LossMask {
    int stride = 1;
    int phase = 0;
    int horizon = 1;

    bool includes(int step) const {
        return step < horizon && step % stride == phase % stride;
    }
};

/// Keeps horizon steps congruent to a random phase modulo the stride. The
/// phase is drawn from the feasible range so the mask is never empty.
inline LossMask coarse_grid_mask(int h, int n, RngStream& rng) {
    require(h >= 1, "horizon must be >= 1");
    require(n >= 1, "stride must be >= 1");
    LossMask m;
    m.stride = n;
    m.horizon = h;
    m.phase = static_cast<int>(rng.uniform_int(0, std::min(n, h) - 1));
    return m;
}

/// One series prepared for supervision: the model-facing patch batch plus
/// per-(channel, position, step) anchored targets and availability flags.
template <typename Scalar>
struct SupervisedBatch {
    model::PatchBatch<Scalar> batch;
    Matd dense_targets;             // (C * n_patches, head_horizon_per_patch)
    Mat<std::uint8_t> dense_avail;
    Matd long_targets;              // (C, max_horizon)
    Mat<std::uint8_t> long_avail;
};

/// `input` is what the model sees; `truth` supplies target values (they
/// differ in test-at-end mode, where the context suffix is masked in the
/// input). Targets are normalized with the input's rolling statistics at the
/// emitting position, so masked-mode anchors freeze at the mask boundary.
/// Only targets at absolute index >= min_target_index participate.
template <typename Scalar>
SupervisedBatch<Scalar> build_supervised(const TimeSeries& input, const TimeSeries& truth,
                                         int context_len, int horizon,
                                         const model::ModelConfig& cfg,
                                         int min_target_index = 0) {
    require(input.n_channels() == truth.n_channels() && input.length() == truth.length(),
            "input and truth series must have the same shape");
    SupervisedBatch<Scalar> sb;
    sb.batch = model::build_patch_batch<Scalar>(input, context_len, horizon, cfg);

    const int C = sb.batch.n_channels, np = sb.batch.n_patches;
    const int P = cfg.patch_len, hpp = cfg.head_horizon_per_patch, M = cfg.max_horizon;
    const int pad_len = (P - context_len % P) % P;
    const int L = input.length();

    sb.dense_targets = Matd::Zero(C * np, hpp);
    sb.dense_avail = Mat<std::uint8_t>::Zero(C * np, hpp);
    sb.long_targets = Matd::Zero(C, M);
    sb.long_avail = Mat<std::uint8_t>::Zero(C, M);

    for (int c = 0; c < C; ++c) {
        if (input.is_known_future(c)) continue;  // known inputs are never forecast
        const auto& vals = input.channel(c);
        const auto& obs = input.observed_mask(c);
        const std::vector<double> ctx_vals(vals.begin(), vals.begin() + context_len);
        const std::vector<std::uint8_t> ctx_obs(obs.begin(), obs.begin() + context_len);
        const auto stats = dart::rolling_stats(ctx_vals, ctx_obs);
        for (int p = 0; p < np; ++p) {
            const int end = (p + 1) * P - 1 - pad_len;
            const double m = stats.m[static_cast<std::size_t>(end)];
            const double s = stats.s_clamped[static_cast<std::size_t>(end)];
            const int max_step = p == np - 1 ? M : hpp;
            for (int j = 0; j < max_step; ++j) {
                const int t = end + 1 + j;
                if (t >= L || t < min_target_index || !truth.observed(c, t)) continue;
                const double z = (truth.value(c, t) - m) / s;
                if (j < hpp) {
                    sb.dense_targets(c * np + p, j) = z;
                    sb.dense_avail(c * np + p, j) = 1;
                }
                if (p == np - 1) {
                    sb.long_targets(c, j) = z;
                    sb.long_avail(c, j) = 1;
                }
            }
        }
    }
    return sb;
}

/// Flat mean of the Huber loss over every included (channel, position, step)
/// triple across the whole batch; optionally emits d(loss)/d(outputs).
template <typename Scalar>
double batch_loss(const std::vector<model::ForecastOutput<Scalar>>& outs,
                  const std::vector<SupervisedBatch<Scalar>>& sup, const LossMask& mask,
                  double delta, std::vector<Mat<Scalar>>* d_dense = nullptr,
                  std::vector<Mat<Scalar>>* d_long = nullptr) {
    require(outs.size() == sup.size(), "one output per supervised batch required");

    long long count = 0;
    for (std::size_t b = 0; b < sup.size(); ++b) {
        const auto& s = sup[b];
        for (Eigen::Index r = 0; r < s.dense_avail.rows(); ++r)
            for (Eigen::Index j = 0; j < s.dense_avail.cols(); ++j)
                if (s.dense_avail(r, j) != 0 && mask.includes(static_cast<int>(j))) ++count;
        for (Eigen::Index c = 0; c < s.long_avail.rows(); ++c)
            for (Eigen::Index j = 0; j < s.long_avail.cols(); ++j)
                if (s.long_avail(c, j) != 0 && mask.includes(static_cast<int>(j))) ++count;
    }
    require(count > 0, "no supervised positions");

    double total = 0.0;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t b = 0; b < sup.size(); ++b) {
        const auto& s = sup[b];
        const auto& o = outs[b];
        Mat<Scalar>* gd = d_dense ? &(*d_dense)[b] : nullptr;
        Mat<Scalar>* gl = d_long ? &(*d_long)[b] : nullptr;
        if (gd) gd->setZero(o.dense.rows(), o.dense.cols());
        if (gl) gl->setZero(o.long_horizon.rows(), o.long_horizon.cols());

        for (Eigen::Index r = 0; r < s.dense_avail.rows(); ++r)
            for (Eigen::Index j = 0; j < s.dense_avail.cols(); ++j) {
                if (s.dense_avail(r, j) == 0 || !mask.includes(static_cast<int>(j))) continue;
                const double pred = static_cast<double>(o.dense(r, j));
                total += huber(pred, s.dense_targets(r, j), delta);
                if (gd)
                    (*gd)(r, j) = static_cast<Scalar>(
                        huber_grad(pred, s.dense_targets(r, j), delta) * inv);
            }
        for (Eigen::Index c = 0; c < s.long_avail.rows(); ++c)
            for (Eigen::Index j = 0; j < s.long_avail.cols(); ++j) {
                if (s.long_avail(c, j) == 0 || !mask.includes(static_cast<int>(j))) continue;
                const double pred = static_cast<double>(o.long_horizon(c, j));
                total += huber(pred, s.long_targets(c, j), delta);
                if (gl)
                    (*gl)(c, j) = static_cast<Scalar>(
                        huber_grad(pred, s.long_targets(c, j), delta) * inv);
            }
    }
    return total * inv;
}

/// Decoupled-weight-decay adaptive-moment optimizer. Decay applies only to
/// tensors with more than one row (weight matrices and embedding tables);
/// biases, gains, and beta are exempt.
template <typename Scalar>
class AdamW {
  public:
    AdamW(const model::ModelParams<Scalar>& like, const TrainConfig& cfg)
        : m_(model::zeros_like(like)), v_(model::zeros_like(like)), cfg_(cfg) {}

    void step(model::ModelParams<Scalar>& params, const model::ModelParams<Scalar>& grads,
              double lr_scale = 1.0) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
        const Scalar b2 = static_cast<Scalar>(cfg_.beta2);

        std::vector<const Mat<Scalar>*> gs;
        std::vector<Mat<Scalar>*> ms, vs;
        model::for_each_tensor(grads,
                               [&](const std::string&, const Mat<Scalar>& t) { gs.push_back(&t); });
        model::for_each_tensor(m_, [&](const std::string&, Mat<Scalar>& t) { ms.push_back(&t); });
        model::for_each_tensor(v_, [&](const std::string&, Mat<Scalar>& t) { vs.push_back(&t); });
        std::size_t k = 0;
        model::for_each_tensor(params, [&](const std::string&, Mat<Scalar>& theta) {
            const Mat<Scalar>& g = *gs[k];
            Mat<Scalar>& m = *ms[k];
            Mat<Scalar>& v = *vs[k];
            ++k;
            m = b1 * m + (Scalar(1) - b1) * g;
            v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
            const double lr = cfg_.learning_rate * lr_scale;
            for (Eigen::Index i = 0; i < theta.size(); ++i) {
                const double mhat = static_cast<double>(m.data()[i]) / bc1;
                const double vhat = static_cast<double>(v.data()[i]) / bc2;
                double upd = lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
                if (theta.rows() > 1)
                    upd += lr * cfg_.weight_decay * static_cast<double>(theta.data()[i]);
                theta.data()[i] -= static_cast<Scalar>(upd);
            }
        });
    }

    long long steps_taken() const { return t_; }

  private:
    model::ModelParams<Scalar> m_, v_;
    TrainConfig cfg_;
    long long t_ = 0;
};

using SeriesSampler = std::function<TimeSeries(RngStream&)>;

struct TrainPoint {
    int step;
    double wall_ms;
    double loss;
    int stride;
    int horizon;
};

struct EvalPoint {
    int step;
    double loss;
};

template <typename Scalar>
struct TrainResult {
    model::ModelParams<Scalar> params;
    std::vector<TrainPoint> curve;
    std::vector<EvalPoint> evals;
};

enum class TrainMode { dense, test_at_end };

namespace detail {

/// Slices the tail of a sampled series into (context, future) so that the
/// future holds `horizon` steps and the context fits the model.
inline TimeSeries fit_slice(const TimeSeries& series, int max_context, int patch_len, int& horizon,
                            int& context_len) {
    const int L = series.length();
    horizon = std::min(horizon, std::max(1, L - patch_len));
    context_len = std::min(max_context, L - horizon);
    const int begin = L - horizon - context_len;
    return series.slice(begin, context_len + horizon);
}

/// Masks the trailing share of the context for every forecastable channel.
inline TimeSeries mask_context_suffix(const TimeSeries& slice, int context_len, double fraction,
                                      int& boundary) {
    boundary = static_cast<int>(std::floor(fraction * context_len));
    boundary = std::max(1, boundary);
    TimeSeries masked = slice;
    for (int c = 0; c < slice.n_channels(); ++c) {
        if (slice.is_known_future(c)) continue;
        for (int t = boundary; t < context_len; ++t) masked.set_missing(c, t);
    }
    return masked;
}

template <typename Scalar>
double eval_forecast_loss(const model::ModelParams<Scalar>& params,
                          const std::vector<TimeSeries>& eval_set, const TrainConfig& cfg) {
    const auto& mcfg = params.config;
    std::vector<model::ForecastOutput<Scalar>> outs;
    std::vector<SupervisedBatch<Scalar>> sup;
    const int max_ctx = cfg.max_context > 0 ? std::min(cfg.max_context, mcfg.max_context)
                                            : mcfg.max_context;
    int h_max = std::min(cfg.eval_horizon, mcfg.max_horizon);
    for (const auto& series : eval_set) {
        int h = h_max, T = 0;
        TimeSeries slice = fit_slice(series, max_ctx, mcfg.patch_len, h, T);
        auto sb = build_supervised<Scalar>(slice, slice, T, h, mcfg, /*min_target_index=*/T);
        outs.push_back(model::forward_batch(sb.batch, params));
        sup.push_back(std::move(sb));
    }
    LossMask mask;
    mask.stride = 1;
    mask.phase = 0;
    mask.horizon = h_max;
    return batch_loss(outs, sup, mask, cfg.huber_delta);
}

}  // namespace detail

template <typename Scalar = float>
TrainResult<Scalar> run_training(model::ModelParams<Scalar> params, const SeriesSampler& sampler,
                                 const TrainConfig& cfg, TrainMode mode,
                                 const SeriesSampler& eval_sampler = {}) {
    cfg.validate();
    const auto& mcfg = params.config;
    const int max_ctx =
        cfg.max_context > 0 ? std::min(cfg.max_context, mcfg.max_context) : mcfg.max_context;
    const int max_h = std::min(cfg.max_horizon, mcfg.max_horizon);

    TrainResult<Scalar> result;
    AdamW<Scalar> opt(params, cfg);

    std::vector<TimeSeries> eval_set;
    if (cfg.eval_every > 0) {
        RngStream eval_rng(cfg.seed, 0xE7A1u);
        const auto& src = eval_sampler ? eval_sampler : sampler;
        for (int i = 0; i < cfg.n_eval_series; ++i) eval_set.push_back(src(eval_rng));
    }

    std::ofstream curve_file;
    if (!cfg.loss_curve_path.empty()) {
        curve_file.open(cfg.loss_curve_path);
        require(static_cast<bool>(curve_file),
                "cannot open loss curve file: " + cfg.loss_curve_path);
        curve_file << "step,wall_ms,loss,stride,horizon\n";
    }

    if (cfg.eval_every > 0)
        result.evals.push_back({0, detail::eval_forecast_loss(params, eval_set, cfg)});

    const auto t0 = std::chrono::steady_clock::now();
    for (int step = 1; step <= cfg.steps; ++step) {
        RngStream step_rng(cfg.seed, static_cast<std::uint64_t>(step));
        const int horizon = sample_horizon(step_rng, max_h);
        int stride = 1;
        if (step_rng.bernoulli(cfg.coarse_grid_prob)) {
            const auto& ss = cfg.coarse_grid_strides;
            stride = ss[static_cast<std::size_t>(
                step_rng.uniform_int(0, static_cast<std::int64_t>(ss.size()) - 1))];
        }
        const LossMask mask = coarse_grid_mask(horizon, stride, step_rng);

        std::vector<model::ForecastOutput<Scalar>> outs;
        std::vector<SupervisedBatch<Scalar>> sup;
        std::vector<model::Workspace<Scalar>> traces(static_cast<std::size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) {
            RngStream item_rng = step_rng.derive(100 + static_cast<std::uint64_t>(b));
            TimeSeries series = sampler(item_rng);
            int h = horizon, T = 0;
            TimeSeries truth = detail::fit_slice(series, max_ctx, mcfg.patch_len, h, T);
            int min_target = 0;
            TimeSeries input = truth;
            if (mode == TrainMode::test_at_end)
                input = detail::mask_context_suffix(truth, T, cfg.test_at_end_fraction,
                                                    min_target);
            auto sb = build_supervised<Scalar>(input, truth, T, h, mcfg, min_target);
            outs.push_back(
                model::forward_batch(sb.batch, params, traces[static_cast<std::size_t>(b)]));
            sup.push_back(std::move(sb));
        }

        std::vector<Mat<Scalar>> d_dense(outs.size()), d_long(outs.size());
        const double loss = batch_loss(outs, sup, mask, cfg.huber_delta, &d_dense, &d_long);
        if (!std::isfinite(loss))
            throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                     " (seed " + std::to_string(cfg.seed) + ")");

        auto grads = model::zeros_like(params);
        for (std::size_t b = 0; b < outs.size(); ++b)
            model::backward_batch(sup[b].batch, params, traces[b], d_dense[b], d_long[b], grads);
        // cosine decay from 1 at step 1 to final_lr_fraction at the last step
        const double f = cfg.final_lr_fraction;
        const double lr_scale =
            cfg.steps > 1 ? f + (1.0 - f) * 0.5 *
                                    (1.0 + std::cos(3.14159265358979323846 *
                                                    static_cast<double>(step - 1) /
                                                    static_cast<double>(cfg.steps - 1)))
                          : 1.0;
        opt.step(params, grads, lr_scale);

        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        result.curve.push_back({step, wall_ms, loss, mask.stride, horizon});
        if (curve_file) {
            curve_file << step << ',' << wall_ms << ',' << loss << ',' << mask.stride << ','
                       << horizon << '\n';
            if (step % 50 == 0) curve_file.flush();
        }

        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
            step % cfg.checkpoint_every == 0)
            model::save_params(params, cfg.checkpoint_path);
        if (cfg.eval_every > 0 && step % cfg.eval_every == 0)
            result.evals.push_back({step, detail::eval_forecast_loss(params, eval_set, cfg)});
    }

    result.params = std::move(params);
    return result;
}

template <typename Scalar = float>
TrainResult<Scalar> train(model::ModelParams<Scalar> params, const SeriesSampler& sampler,
                          const TrainConfig& cfg, const SeriesSampler& eval_sampler = {}) {
    return run_training(std::move(params), sampler, cfg, TrainMode::dense, eval_sampler);
}

template <typename Scalar = float>
TrainResult<Scalar> train_test_at_end(model::ModelParams<Scalar> params,
                                      const SeriesSampler& sampler, const TrainConfig& cfg,
                                      const SeriesSampler& eval_sampler = {}) {
    return run_training(std::move(params), sampler, cfg, TrainMode::test_at_end, eval_sampler);
}

}  // namespace ttsm::train
