#pragma once

// Inference-time enhancements around a base forecaster: mirror and noise
// ensembling, target-channel feature augmentation, and stride-interleaved
// forecasting (SIFI) for histories longer than the model context. All
// combinators operate on original-scale forecasts; normalization and
// denormalization happen inside each forecaster call with that call's own
// anchor statistics.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/model/network.hpp"
#include "ttsm/time_series.hpp"

namespace ttsm::infer {

struct InferenceConfig {
    bool use_mirror = false;
    int noise_ensembles = 0;  // 0 = off; k >= 1 averages k perturbed forecasts
    double noise_frac = 0.01;
    std::vector<std::string> augment_channels;  // see augment_features for ids
    int sifi_stride = 0;  // 0 = auto: ceil(T / max_context) for over-length histories
    std::uint64_t seed = 0;

    void validate() const {
        require(noise_ensembles >= 0, "noise_ensembles must be >= 0");
        require(noise_frac >= 0.0, "noise_frac must be >= 0");
        require(sifi_stride >= 0, "sifi_stride must be >= 0 (0 = auto)");
    }
};

/// Maps (history, horizon) to an original-scale forecast with one row per
/// channel of the input series.
using Forecaster = std::function<Matd(const TimeSeries&, int)>;

struct ForecastResult {
    Matd values;                // (channels.size(), horizon), original scale
    std::vector<int> channels;  // forecast channel indices of the input series
    bool used_mirror = false;
    int noise_ensembles = 0;
    double noise_frac = 0.0;
    int sifi_stride = 1;
    std::vector<std::string> augmented;
};

/// (f(y) - f(-y)) / 2: keeps the odd part of the forecaster, cancelling even
/// error components. Negation flips every channel's values; masks stay.
inline Matd mirror_ensemble(const Forecaster& f, const TimeSeries& series, int horizon) {
    const Matd plus = f(series, horizon);
    const Matd minus = f(series.negated(), horizon);
    return 0.5 * (plus - minus);
}

/// Mean of k forecasts on inputs perturbed with zero-mean Gaussian noise,
/// std = noise_frac * std(channel). noise_frac = 0 short-circuits to the
/// plain forecast so the result is bit-identical to a single call.
inline Matd noise_ensemble(const Forecaster& f, const TimeSeries& series, int horizon, int k,
                           double noise_frac, RngStream& rng) {
    require(k >= 1, "noise ensemble needs k >= 1");
    require(noise_frac >= 0.0, "noise_frac must be >= 0");
    if (noise_frac == 0.0) return f(series, horizon);

    const std::size_t C = series.n_channels(), T = series.length();
    std::vector<double> stds(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double mean = 0.0, m2 = 0.0;
        std::int64_t n = 0;
        for (std::size_t t = 0; t < T; ++t) {
            if (!series.observed(c, t)) continue;
            ++n;
            const double d = series.value(c, t) - mean;
            mean += d / static_cast<double>(n);
            m2 += d * (series.value(c, t) - mean);
        }
        stds[c] = n > 0 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0;
    }

    Matd acc;
    for (int i = 0; i < k; ++i) {
        TimeSeries noisy = series;
        for (std::size_t c = 0; c < C; ++c) {
            const double sd = noise_frac * stds[c];
            for (std::size_t t = 0; t < T; ++t)
                if (noisy.observed(c, t)) noisy.value(c, t) += rng.normal(0.0, sd);
        }
        const Matd out = f(noisy, horizon);
        if (i == 0)
            acc = out;
        else
            acc += out;
    }
    return acc / static_cast<double>(k);
}

namespace detail {

inline double signed_square(double v) { return v * std::abs(v); }
inline double signed_sqrt(double v) { return (v < 0.0 ? -1.0 : 1.0) * std::sqrt(std::abs(v)); }

}  // namespace detail

/// Appends transformed copies of the target channel as covariates (never
/// targets, never known-future). Transform ids: "signed_square",
/// "signed_sqrt", and "smoothed" (centered box kernel of width 5, clipped at
/// the series boundaries, averaging observed points only).
inline TimeSeries augment_features(const TimeSeries& series,
                                   const std::vector<std::string>& ids) {
    TimeSeries out = series;
    const auto tc = static_cast<std::size_t>(series.target_channel());
    const auto& y = series.channel(tc);
    const auto& obs = series.observed_mask(tc);
    const std::size_t T = series.length();

    for (const auto& id : ids) {
        std::vector<double> v(T, 0.0);
        std::vector<std::uint8_t> m(T, 0);
        if (id == "signed_square" || id == "signed_sqrt") {
            for (std::size_t t = 0; t < T; ++t) {
                if (!obs[t]) continue;
                v[t] = id == "signed_square" ? detail::signed_square(y[t])
                                             : detail::signed_sqrt(y[t]);
                m[t] = 1;
            }
        } else if (id == "smoothed") {
            for (std::size_t t = 0; t < T; ++t) {
                double sum = 0.0;
                int n = 0;
                const std::size_t lo = t >= 2 ? t - 2 : 0;
                const std::size_t hi = std::min(T - 1, t + 2);
                for (std::size_t u = lo; u <= hi; ++u) {
                    if (!obs[u]) continue;
                    sum += y[u];
                    ++n;
                }
                if (n > 0) {
                    v[t] = sum / n;
                    m[t] = 1;
                }
            }
        } else {
            throw std::invalid_argument("unknown augmentation id: " + id);
        }
        out.add_channel(std::move(v), std::move(m), "aug_" + id);
    }
    return out;
}

/// Forecasts each of the n strided views independently and interleaves view
/// k's coarse step j back to fine step k + j*n. The view whose subsample
/// ends n - k steps before the series end produces the steps congruent to k,
/// so every fine step in 0..h-1 is emitted by exactly one view.
inline Matd sifi_forecast(const Forecaster& f, const TimeSeries& series, int stride,
                          int horizon) {
    require(stride >= 1, "stride must be >= 1");
    require(horizon >= 1, "horizon must be >= 1");
    if (stride == 1) return f(series, horizon);

    const std::size_t T = series.length();
    const auto n = static_cast<std::size_t>(stride);
    auto views = strided_views(series, n);  // rejects stride > length
    const int coarse_h = (horizon + stride - 1) / stride;

    Matd out = Matd::Zero(static_cast<Eigen::Index>(series.n_channels()), horizon);
    for (int k = 0; k < stride; ++k) {
        const std::size_t offset = (T + static_cast<std::size_t>(k)) % n;
        const TimeSeries view = views[offset].materialize();
        const Matd coarse = f(view, coarse_h);
        for (int j = 0; j < coarse_h; ++j) {
            const int fine = k + j * stride;
            if (fine < horizon) out.col(fine) = coarse.col(j);
        }
    }
    return out;
}

/// Bare model forecaster: normalizes the history (truncated to the model's
/// maximum context), runs the network, and denormalizes with the anchors of
/// this call. Horizons within the per-patch head come from the final
/// position's dense predictions; longer ones from the long-horizon head.
/// Captures the parameters by reference; they must outlive the forecaster.
template <typename Scalar>
Forecaster model_forecaster(const model::ModelParams<Scalar>& params) {
    return [&params](const TimeSeries& series, int horizon) {
        const auto& cfg = params.config;
        TimeSeries hist = series;
        if (hist.length() > static_cast<std::size_t>(cfg.max_context))
            hist = hist.slice(hist.length() - static_cast<std::size_t>(cfg.max_context),
                              static_cast<std::size_t>(cfg.max_context));
        const auto out = model::forward(hist, horizon, params);
        const int C = out.n_channels, np = out.n_patches;
        Matd fc(C, horizon);
        for (int c = 0; c < C; ++c) {
            const double m = out.anchor_mean[static_cast<std::size_t>(c)];
            const double s = out.anchor_std[static_cast<std::size_t>(c)];
            for (int j = 0; j < horizon; ++j) {
                const double z = horizon <= cfg.head_horizon_per_patch
                                     ? static_cast<double>(out.dense(c * np + np - 1, j))
                                     : static_cast<double>(out.long_horizon(c, j));
                fc(c, j) = z * s + m;
            }
        }
        return fc;
    };
}

/// Full pipeline: feature augmentation, then SIFI (or a direct call), with
/// noise-outer / mirror-inner ensembling around every forecaster call. Rows
/// of the result cover the forecastable (non-known-future) channels of the
/// input, in order.
template <typename Scalar>
ForecastResult predict(const model::ModelParams<Scalar>& params, const TimeSeries& series,
                       int horizon, const InferenceConfig& cfg) {
    cfg.validate();
    require(horizon >= 1, "horizon must be >= 1");

    const TimeSeries augmented = cfg.augment_channels.empty()
                                     ? series
                                     : augment_features(series, cfg.augment_channels);
    const auto T = augmented.length();
    const int max_ctx = params.config.max_context;
    int stride = cfg.sifi_stride;
    if (stride == 0)
        stride = T > static_cast<std::size_t>(max_ctx)
                     ? static_cast<int>((T + static_cast<std::size_t>(max_ctx) - 1) /
                                        static_cast<std::size_t>(max_ctx))
                     : 1;

    const Forecaster base = model_forecaster(params);
    RngStream noise_rng(cfg.seed, 0x5EED);
    std::uint64_t call_id = 0;
    const Forecaster wrapped = [&](const TimeSeries& s, int h) {
        const Forecaster inner = cfg.use_mirror
                                     ? Forecaster([&](const TimeSeries& s2, int h2) {
                                           return mirror_ensemble(base, s2, h2);
                                       })
                                     : base;
        if (cfg.noise_ensembles >= 1) {
            RngStream call_rng = noise_rng.derive(call_id++);
            return noise_ensemble(inner, s, h, cfg.noise_ensembles, cfg.noise_frac, call_rng);
        }
        return inner(s, h);
    };

    const Matd all = sifi_forecast(wrapped, augmented, stride, horizon);

    ForecastResult res;
    for (std::size_t c = 0; c < series.n_channels(); ++c)
        if (!series.is_known_future(static_cast<int>(c))) res.channels.push_back(static_cast<int>(c));
    res.values.resize(static_cast<Eigen::Index>(res.channels.size()), horizon);
    for (std::size_t i = 0; i < res.channels.size(); ++i)
        res.values.row(static_cast<Eigen::Index>(i)) = all.row(res.channels[i]);
    res.used_mirror = cfg.use_mirror;
    res.noise_ensembles = cfg.noise_ensembles;
    res.noise_frac = cfg.noise_frac;
    res.sifi_stride = stride;
    res.augmented = cfg.augment_channels;
    return res;
}

}  // namespace ttsm::infer
