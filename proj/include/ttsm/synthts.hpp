#pragma once

// SynthTS: synthetic time-series generation and augmentation. Univariate
// base generators feed an iterated pipeline of univariate expansions, sparse
// feature mixing, and post-transforms; real series can be appended to the
// pool and flow through the same machinery.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/time_series.hpp"

namespace ttsm::synth {

// ---------------------------------------------------------------------------
// Batch-level parameters

struct GenBatchParams {
    std::size_t seq_len = 512;
    std::optional<FrequencyTag> base_frequency;
    std::optional<TimeIndex> time_index;
    std::vector<int> compatible_periods;    // integer multiples of the base step
    std::vector<double> period_weights;     // sampling weight per period
    double noise_level = 0.0;               // mixing-stage noise, fraction of std
    int rounds = 2;                         // augmentation rounds, in [2,5]
};

struct BatchSampleConfig {
    double p_no_index = 0.2;                 // chance of pure sequence data
    double natural_weight = 8.0;             // weight for calendar-natural periods
    double generic_weight = 1.0;
    std::size_t n_generic_periods = 8;
    std::pair<std::size_t, std::size_t> seq_len_range{256, 2048};
    std::pair<double, double> noise_level_range{0.0, 0.3};
    std::optional<FrequencyTag> force_frequency;  // pin the base frequency (tests)
};

/// Calendar-natural period multiples for a base step: how many steps make a
/// minute, hour, day, week, and (nominal) year, whenever that is an integer
/// in [2, 4096].
inline std::vector<int> natural_periods(const FrequencyTag& freq) {
    static constexpr std::int64_t horizons[] = {60, 3600, 86400, 7 * 86400, 365 * 86400};
    std::vector<int> out;
    const std::int64_t step = freq.step_seconds();
    for (std::int64_t h : horizons) {
        if (h % step != 0) continue;
        const std::int64_t p = h / step;
        if (p >= 2 && p <= 4096 && std::find(out.begin(), out.end(), p) == out.end())
            out.push_back(static_cast<int>(p));
    }
    return out;
}

inline GenBatchParams sample_batch_params(RngStream& rng, const BatchSampleConfig& cfg = {}) {
    GenBatchParams p;

    FrequencyTag freq = [&] {
        if (cfg.force_frequency) return *cfg.force_frequency;
        static const std::vector<FrequencyTag> menu = {
            {BaseUnit::minute, 1}, {BaseUnit::minute, 5},  {BaseUnit::minute, 15},
            {BaseUnit::minute, 30}, {BaseUnit::hour, 1},   {BaseUnit::hour, 6},
            {BaseUnit::day, 1},     {BaseUnit::week, 1},   {BaseUnit::month, 1},
        };
        return menu[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(menu.size()) - 1))];
    }();

    p.seq_len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.seq_len_range.first),
                        static_cast<std::int64_t>(cfg.seq_len_range.second)));
    p.rounds = static_cast<int>(rng.uniform_int(2, 5));
    p.noise_level = rng.uniform(cfg.noise_level_range.first, cfg.noise_level_range.second);

    for (int q : natural_periods(freq)) {
        p.compatible_periods.push_back(q);
        p.period_weights.push_back(cfg.natural_weight);
    }
    for (std::size_t i = 0; i < cfg.n_generic_periods; ++i) {
        // log-uniform over [2, 512], skipping duplicates
        const int q = static_cast<int>(std::lround(std::exp(rng.uniform(std::log(2.0), std::log(512.0)))));
        if (std::find(p.compatible_periods.begin(), p.compatible_periods.end(), q) ==
            p.compatible_periods.end()) {
            p.compatible_periods.push_back(std::max(2, q));
            p.period_weights.push_back(cfg.generic_weight);
        }
    }

    const bool drop_index = rng.bernoulli(cfg.p_no_index);
    if (!drop_index) {
        p.base_frequency = freq;
        const std::int64_t step = freq.step_seconds();
        // random start in 2000..2030, aligned to the step
        const std::int64_t lo = 946684800, hi = 1893456000;
        const std::int64_t start = lo + rng.uniform_int(0, (hi - lo) / step) * step;
        p.time_index = TimeIndex(start, step);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Base generators

enum class Family {
    sum_of_sinusoids,
    trend_linear_nonlinear,
    periodic_random_walk,
    reset_trend,
    circular_reindex,
    explosive_periodic,
    phase_shift_periodic,
    floored_periodic,
    integer_count,
    approx_periodic_integer,
    periodic_mixture,
    noise,
    noisy_ar,
    explosive,
    local_trend,
};

inline constexpr std::array<Family, 15> kFamilies = {
    Family::sum_of_sinusoids,   Family::trend_linear_nonlinear,
    Family::periodic_random_walk, Family::reset_trend,
    Family::circular_reindex,   Family::explosive_periodic,
    Family::phase_shift_periodic, Family::floored_periodic,
    Family::integer_count,      Family::approx_periodic_integer,
    Family::periodic_mixture,   Family::noise,
    Family::noisy_ar,           Family::explosive,
    Family::local_trend,
};

inline std::string family_name(Family f) {
    switch (f) {
        case Family::sum_of_sinusoids: return "sum_of_sinusoids";
        case Family::trend_linear_nonlinear: return "trend_linear_nonlinear";
        case Family::periodic_random_walk: return "periodic_random_walk";
        case Family::reset_trend: return "reset_trend";
        case Family::circular_reindex: return "circular_reindex";
        case Family::explosive_periodic: return "explosive_periodic";
        case Family::phase_shift_periodic: return "phase_shift_periodic";
        case Family::floored_periodic: return "floored_periodic";
        case Family::integer_count: return "integer_count";
        case Family::approx_periodic_integer: return "approx_periodic_integer";
        case Family::periodic_mixture: return "periodic_mixture";
        case Family::noise: return "noise";
        case Family::noisy_ar: return "noisy_ar";
        case Family::explosive: return "explosive";
        case Family::local_trend: return "local_trend";
    }
    throw std::invalid_argument("unknown family");
}

inline Family family_from_name(const std::string& name) {
    for (Family f : kFamilies)
        if (family_name(f) == name) return f;
    throw std::invalid_argument("unknown family: " + name);
}

/// Circular re-indexing: out_i = x[(k*i) mod L] for i = 1..L.
inline std::vector<double> circular_reindex(const std::vector<double>& x, std::int64_t k) {
    const std::int64_t L = static_cast<std::int64_t>(x.size());
    require(L >= 1, "circular_reindex needs a nonempty series");
    require(k >= 1, "circular_reindex needs k >= 1");
    std::vector<double> out(x.size());
    for (std::int64_t i = 1; i <= L; ++i)
        out[static_cast<std::size_t>(i - 1)] = x[static_cast<std::size_t>((k * i) % L)];
    return out;
}

struct GeneratorEntry {
    Family family;
    std::string name;  // unique variant name, "<family>/<variant>"
    std::function<std::vector<double>(const GenBatchParams&, RngStream&)> sample;
};

namespace detail {

constexpr double kTau = 6.283185307179586476925286766559;

inline int pick_period(const GenBatchParams& p, RngStream& rng) {
    if (p.compatible_periods.empty()) return 24;
    std::size_t i = p.period_weights.size() == p.compatible_periods.size()
                        ? rng.weighted_index(p.period_weights)
                        : static_cast<std::size_t>(rng.uniform_int(
                              0, static_cast<std::int64_t>(p.compatible_periods.size()) - 1));
    return std::max(2, p.compatible_periods[i]);
}

inline std::vector<double> sine_wave(std::size_t n, double period, double amp, double phase) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t)
        x[t] = amp * std::sin(kTau * static_cast<double>(t) / period + phase);
    return x;
}

// --- sum_of_sinusoids ---

inline std::vector<double> gen_sin_single(const GenBatchParams& p, RngStream& rng) {
    return sine_wave(p.seq_len, pick_period(p, rng), rng.uniform(0.5, 2.0), rng.uniform(0.0, kTau));
}

inline std::vector<double> gen_sin_harmonics(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    auto x = sine_wave(p.seq_len, period, rng.uniform(1.0, 2.0), rng.uniform(0.0, kTau));
    const int n_extra = static_cast<int>(rng.uniform_int(1, 4));
    for (int h = 0; h < n_extra; ++h) {
        const int k = static_cast<int>(rng.uniform_int(2, 6));
        auto harm = sine_wave(p.seq_len, static_cast<double>(period) / k,
                              rng.uniform(0.1, 0.8) / k, rng.uniform(0.0, kTau));
        for (std::size_t t = 0; t < x.size(); ++t) x[t] += harm[t];
    }
    return x;
}

// --- trend_linear_nonlinear ---

inline std::vector<double> gen_trend_linear(const GenBatchParams& p, RngStream& rng) {
    const double a = rng.normal(0.0, 1.0);
    const double b = rng.normal(0.0, 2.0);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = a + b * static_cast<double>(t) / static_cast<double>(p.seq_len);
    return x;
}

inline std::vector<double> gen_trend_polynomial(const GenBatchParams& p, RngStream& rng) {
    const int degree = static_cast<int>(rng.uniform_int(2, 4));
    std::vector<double> coef(static_cast<std::size_t>(degree) + 1);
    for (auto& c : coef) c = rng.normal(0.0, 1.0);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        const double u = 2.0 * static_cast<double>(t) / static_cast<double>(p.seq_len) - 1.0;
        double v = 0.0;
        for (int d = degree; d >= 0; --d) v = v * u + coef[static_cast<std::size_t>(d)];
        x[t] = v;
    }
    return x;
}

// --- periodic_random_walk ---

inline std::vector<double> gen_walk_plus_seasonal(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, kTau);
    const double sigma = rng.uniform(0.02, 0.1);
    std::vector<double> x(p.seq_len);
    double w = 0.0;
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        w += rng.normal(0.0, sigma);
        x[t] = w + amp * std::sin(kTau * static_cast<double>(t) / period + phase);
    }
    return x;
}

inline std::vector<double> gen_walk_across_periods(const GenBatchParams& p, RngStream& rng) {
    const std::size_t period = static_cast<std::size_t>(pick_period(p, rng));
    const double amp = rng.uniform(1.0, 2.5);
    const double phase = rng.uniform(0.0, kTau);
    const double sigma = rng.uniform(0.01, 0.06);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (t < period) {
            x[t] = amp * std::sin(kTau * static_cast<double>(t) / static_cast<double>(period) + phase) +
                   rng.normal(0.0, 0.1);
        } else {
            x[t] = x[t - period] + rng.normal(0.0, sigma);
        }
    }
    return x;
}

// --- reset_trend ---

inline std::vector<double> gen_reset_random(const GenBatchParams& p, RngStream& rng) {
    const double slope = rng.uniform(0.02, 0.3) * (rng.bernoulli(0.8) ? 1.0 : -1.0);
    const double p_reset = rng.uniform(0.005, 0.05);
    std::vector<double> x(p.seq_len);
    double v = 0.0;
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(p_reset)) v = 0.0;
        x[t] = v;
        v += slope;
    }
    return x;
}

inline std::vector<double> gen_reset_periodic(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double slope = rng.uniform(0.05, 0.5);
    const int jitter_max = std::max(1, period / 8);
    std::vector<double> x(p.seq_len);
    double v = 0.0;
    std::int64_t next_reset = rng.uniform_int(0, period - 1);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (static_cast<std::int64_t>(t) >= next_reset) {
            v = 0.0;
            next_reset += period + rng.uniform_int(-jitter_max, jitter_max);
        }
        x[t] = v;
        v += slope;
    }
    return x;
}

// --- circular_reindex family ---

inline std::vector<double> gen_reindexed_sine(const GenBatchParams& p, RngStream& rng) {
    auto base = gen_sin_single(p, rng);
    const std::int64_t k = rng.uniform_int(2, std::max<std::int64_t>(2, static_cast<std::int64_t>(p.seq_len) - 1));
    return circular_reindex(base, k);
}

inline std::vector<double> gen_reindexed_walk(const GenBatchParams& p, RngStream& rng) {
    std::vector<double> base(p.seq_len);
    double w = 0.0;
    for (auto& v : base) { w += rng.normal(0.0, 0.2); v = w; }
    const std::int64_t k = rng.uniform_int(2, std::max<std::int64_t>(2, static_cast<std::int64_t>(p.seq_len) - 1));
    return circular_reindex(base, k);
}

// --- explosive episodes shared helper ---

/// Multiplicative scale path: 1 outside episodes; inside an episode the scale
/// grows geometrically per step, capped, then snaps back to 1.
inline std::vector<double> episode_scale(std::size_t n, RngStream& rng, double p_start,
                                         double growth_lo, double growth_hi, double cap) {
    std::vector<double> s(n, 1.0);
    double scale = 1.0;
    int remaining = 0;
    double growth = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (remaining == 0) {
            scale = 1.0;
            if (rng.bernoulli(p_start)) {
                remaining = static_cast<int>(rng.uniform_int(4, 24));
                growth = rng.uniform(growth_lo, growth_hi);
            }
        }
        if (remaining > 0) {
            scale = std::min(scale * growth, cap);
            --remaining;
        }
        s[t] = scale;
    }
    return s;
}

inline std::vector<double> gen_explosive_periodic_bursts(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(0.8, 2.0);
    const double phase = rng.uniform(0.0, kTau);
    auto scale = episode_scale(p.seq_len, rng, 0.01, 1.1, 1.5, 20.0);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = scale[t] * amp * std::sin(kTau * static_cast<double>(t) / period + phase);
    return x;
}

inline std::vector<double> gen_explosive_periodic_shocks(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.0, 2.0);
    const double phase = rng.uniform(0.0, kTau);
    const double decay = rng.uniform(0.7, 0.95);
    std::vector<double> x(p.seq_len);
    double shock = 0.0;
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(0.01)) shock += rng.uniform(2.0, 8.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        x[t] = amp * std::sin(kTau * static_cast<double>(t) / period + phase) + shock;
        shock *= decay;
    }
    return x;
}

// --- phase_shift_periodic ---

inline std::vector<double> gen_phase_jumps(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(0.8, 2.0);
    const double phase0 = rng.uniform(0.0, kTau);
    const double p_jump = 2.0 / static_cast<double>(p.seq_len);
    double offset = 0.0;
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(p_jump)) {
            offset += rng.uniform(-1.0, 1.0);
            offset = std::clamp(offset, -1.2, 1.2);  // keep the tone coherent
        }
        x[t] = amp * std::sin(kTau * static_cast<double>(t) / period + phase0 + offset);
    }
    return x;
}

inline std::vector<double> gen_phase_drift(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(0.8, 2.0);
    const double phase0 = rng.uniform(0.0, kTau);
    const double sigma = rng.uniform(0.005, 0.03);
    double offset = 0.0;
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        offset = std::clamp(offset + rng.normal(0.0, sigma), -1.2, 1.2);
        x[t] = amp * std::sin(kTau * static_cast<double>(t) / period + phase0 + offset);
    }
    return x;
}

// --- floored_periodic ---

inline std::vector<double> gen_floored_clipped_sine(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, kTau);
    const double cut = rng.uniform(0.0, 0.5) * amp;
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = std::max(0.0, amp * std::sin(kTau * static_cast<double>(t) / period + phase) - cut);
    return x;
}

inline std::vector<double> gen_floored_halfwave(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, kTau);
    const double power = rng.bernoulli(0.5) ? 1.0 : 2.0;
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        const double v = std::max(0.0, std::sin(kTau * static_cast<double>(t) / period + phase));
        x[t] = amp * std::pow(v, power);
    }
    return x;
}

// --- integer_count ---

inline std::vector<double> gen_poisson_counts(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double base = rng.uniform(1.0, 10.0);
    const double mod = rng.uniform(0.0, 0.8);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        const double rate =
            std::max(0.05, base * (1.0 + mod * std::sin(kTau * static_cast<double>(t) / period)));
        x[t] = static_cast<double>(rng.poisson(rate));
    }
    return x;
}

inline std::vector<double> gen_integer_walk(const GenBatchParams& p, RngStream& rng) {
    const double p_move = rng.uniform(0.2, 0.8);
    std::vector<double> x(p.seq_len);
    double v = static_cast<double>(rng.uniform_int(0, 20));
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(p_move)) v += rng.bernoulli(0.5) ? 1.0 : -1.0;
        x[t] = v;
    }
    return x;
}

// --- approx_periodic_integer ---

inline std::vector<double> gen_rounded_sine(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(2.0, 6.0);
    const double phase = rng.uniform(0.0, kTau);
    const double jitter = rng.uniform(0.0, 0.4);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = std::round(amp * std::sin(kTau * static_cast<double>(t) / period + phase) +
                          rng.normal(0.0, jitter));
    return x;
}

inline std::vector<double> gen_seasonal_poisson(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double base = rng.uniform(2.0, 8.0);
    const double phase = rng.uniform(0.0, kTau);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        const double rate =
            base * (1.0 + std::sin(kTau * static_cast<double>(t) / period + phase)) + 0.05;
        x[t] = static_cast<double>(rng.poisson(rate));
    }
    return x;
}

// --- periodic_mixture ---

/// Periodic prototypes sharing one period and phase, so mixtures stay
/// constructive at the fundamental.
inline std::vector<double> periodic_prototype(std::size_t n, int period, double phase, int kind) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double arg = kTau * static_cast<double>(t) / period + phase;
        switch (kind % 3) {
            case 0: x[t] = std::sin(arg); break;
            case 1: x[t] = std::max(0.0, std::sin(arg)); break;
            default: x[t] = std::asin(std::sin(arg)) * (2.0 / 3.14159265358979323846); break;
        }
    }
    return x;
}

inline std::vector<double> gen_mixture_additive(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double phase = rng.uniform(0.0, kTau);
    const int k1 = static_cast<int>(rng.uniform_int(0, 2));
    int k2 = static_cast<int>(rng.uniform_int(0, 2));
    if (k2 == k1) k2 = (k2 + 1) % 3;
    auto a = periodic_prototype(p.seq_len, period, phase, k1);
    auto b = periodic_prototype(p.seq_len, period, phase, k2);
    const double wa = rng.uniform(0.5, 1.5), wb = rng.uniform(0.5, 1.5);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t) x[t] = wa * a[t] + wb * b[t];
    return x;
}

inline std::vector<double> gen_mixture_switching(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double phase = rng.uniform(0.0, kTau);
    auto a = periodic_prototype(p.seq_len, period, phase, 0);
    auto b = periodic_prototype(p.seq_len, period, phase, static_cast<int>(rng.uniform_int(1, 2)));
    const std::size_t block = static_cast<std::size_t>(period) *
                              static_cast<std::size_t>(rng.uniform_int(1, 3));
    const double wa = rng.uniform(0.8, 1.5), wb = rng.uniform(0.8, 1.5);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = ((t / block) % 2 == 0) ? wa * a[t] : wb * b[t];
    return x;
}

// --- noise ---

inline std::vector<double> gen_noise_gaussian(const GenBatchParams& p, RngStream& rng) {
    const double sigma = rng.uniform(0.5, 2.0);
    std::vector<double> x(p.seq_len);
    for (auto& v : x) v = rng.normal(0.0, sigma);
    return x;
}

inline std::vector<double> gen_noise_uniform(const GenBatchParams& p, RngStream& rng) {
    const double a = rng.uniform(0.5, 2.0);
    std::vector<double> x(p.seq_len);
    for (auto& v : x) v = rng.uniform(-a, a);
    return x;
}

inline std::vector<double> gen_noise_laplace(const GenBatchParams& p, RngStream& rng) {
    const double b = rng.uniform(0.3, 1.5);
    std::vector<double> x(p.seq_len);
    for (auto& v : x) {
        const double u = rng.uniform(-0.5, 0.5);
        v = -b * std::copysign(std::log(1.0 - 2.0 * std::abs(u) + 1e-300), u);
    }
    return x;
}

inline std::vector<double> gen_noise_random_walk(const GenBatchParams& p, RngStream& rng) {
    const double sigma = rng.uniform(0.1, 1.0);
    std::vector<double> x(p.seq_len);
    double w = 0.0;
    for (auto& v : x) { w += rng.normal(0.0, sigma); v = w; }
    return x;
}

// --- noisy_ar ---

inline std::vector<double> gen_ar1(const GenBatchParams& p, RngStream& rng) {
    const double alpha = rng.uniform(0.5, 0.98);
    const double sigma = rng.uniform(0.2, 1.0);
    std::vector<double> x(p.seq_len);
    double z = 0.0;
    for (auto& v : x) { z = alpha * z + rng.normal(0.0, sigma); v = z; }
    return x;
}

inline std::vector<double> gen_ar2(const GenBatchParams& p, RngStream& rng) {
    // sample inside the AR(2) stationarity triangle
    const double a2 = rng.uniform(-0.9, 0.5);
    const double bound = 0.95 * (1.0 - std::abs(a2));
    const double a1 = rng.uniform(-bound, bound);
    const double sigma = rng.uniform(0.2, 1.0);
    std::vector<double> x(p.seq_len);
    double z1 = 0.0, z2 = 0.0;
    for (auto& v : x) {
        const double z = a1 * z1 + a2 * z2 + rng.normal(0.0, sigma);
        z2 = z1;
        z1 = z;
        v = z;
    }
    return x;
}

// --- explosive ---

inline std::vector<double> gen_explosive_amplitude(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.2, 2.0);
    const double phase = rng.uniform(0.0, kTau);
    const double sigma = rng.uniform(0.05, 0.15);
    auto scale = episode_scale(p.seq_len, rng, 0.01, 1.15, 1.5, 20.0);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = scale[t] * (amp * std::sin(kTau * static_cast<double>(t) / period + phase) +
                           rng.normal(0.0, sigma));
    return x;
}

inline std::vector<double> gen_explosive_volatility(const GenBatchParams& p, RngStream& rng) {
    const int period = pick_period(p, rng);
    const double amp = rng.uniform(1.0, 2.0);
    const double phase = rng.uniform(0.0, kTau);
    const double sigma = rng.uniform(0.05, 0.25);
    auto vol = episode_scale(p.seq_len, rng, 0.01, 1.2, 1.6, 8.0);
    std::vector<double> x(p.seq_len);
    for (std::size_t t = 0; t < p.seq_len; ++t)
        x[t] = amp * std::sin(kTau * static_cast<double>(t) / period + phase) +
               rng.normal(0.0, sigma * vol[t]);
    return x;
}

// --- local_trend ---

inline std::vector<double> gen_piecewise_linear(const GenBatchParams& p, RngStream& rng) {
    const double p_break = rng.uniform(0.01, 0.06);
    double slope = rng.normal(0.0, 0.1);
    std::vector<double> x(p.seq_len);
    double v = rng.normal(0.0, 1.0);
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(p_break)) slope = rng.normal(0.0, 0.1);
        v += slope;
        x[t] = v;
    }
    return x;
}

inline std::vector<double> gen_local_trend_noisy(const GenBatchParams& p, RngStream& rng) {
    const double p_break = rng.uniform(0.01, 0.06);
    const double sigma = rng.uniform(0.05, 0.3);
    double slope = rng.normal(0.0, 0.08);
    std::vector<double> x(p.seq_len);
    double v = 0.0;
    for (std::size_t t = 0; t < p.seq_len; ++t) {
        if (rng.bernoulli(p_break)) slope = rng.normal(0.0, 0.08);
        v += slope;
        x[t] = v + rng.normal(0.0, sigma);
    }
    return x;
}

}  // namespace detail

/// All registered base generators; every family appears with at least two
/// parameterized variants (noise carries four).
inline const std::vector<GeneratorEntry>& generator_registry() {
    static const std::vector<GeneratorEntry> reg = {
        {Family::sum_of_sinusoids, "sum_of_sinusoids/single", detail::gen_sin_single},
        {Family::sum_of_sinusoids, "sum_of_sinusoids/harmonics", detail::gen_sin_harmonics},
        {Family::trend_linear_nonlinear, "trend_linear_nonlinear/linear", detail::gen_trend_linear},
        {Family::trend_linear_nonlinear, "trend_linear_nonlinear/polynomial",
         detail::gen_trend_polynomial},
        {Family::periodic_random_walk, "periodic_random_walk/walk_plus_seasonal",
         detail::gen_walk_plus_seasonal},
        {Family::periodic_random_walk, "periodic_random_walk/walk_across_periods",
         detail::gen_walk_across_periods},
        {Family::reset_trend, "reset_trend/random_resets", detail::gen_reset_random},
        {Family::reset_trend, "reset_trend/periodic_resets", detail::gen_reset_periodic},
        {Family::circular_reindex, "circular_reindex/sine", detail::gen_reindexed_sine},
        {Family::circular_reindex, "circular_reindex/walk", detail::gen_reindexed_walk},
        {Family::explosive_periodic, "explosive_periodic/bursts",
         detail::gen_explosive_periodic_bursts},
        {Family::explosive_periodic, "explosive_periodic/shocks",
         detail::gen_explosive_periodic_shocks},
        {Family::phase_shift_periodic, "phase_shift_periodic/jumps", detail::gen_phase_jumps},
        {Family::phase_shift_periodic, "phase_shift_periodic/drift", detail::gen_phase_drift},
        {Family::floored_periodic, "floored_periodic/clipped_sine",
         detail::gen_floored_clipped_sine},
        {Family::floored_periodic, "floored_periodic/halfwave", detail::gen_floored_halfwave},
        {Family::integer_count, "integer_count/poisson", detail::gen_poisson_counts},
        {Family::integer_count, "integer_count/walk", detail::gen_integer_walk},
        {Family::approx_periodic_integer, "approx_periodic_integer/rounded_sine",
         detail::gen_rounded_sine},
        {Family::approx_periodic_integer, "approx_periodic_integer/seasonal_poisson",
         detail::gen_seasonal_poisson},
        {Family::periodic_mixture, "periodic_mixture/additive", detail::gen_mixture_additive},
        {Family::periodic_mixture, "periodic_mixture/switching", detail::gen_mixture_switching},
        {Family::noise, "noise/gaussian", detail::gen_noise_gaussian},
        {Family::noise, "noise/uniform", detail::gen_noise_uniform},
        {Family::noise, "noise/laplace", detail::gen_noise_laplace},
        {Family::noise, "noise/random_walk", detail::gen_noise_random_walk},
        {Family::noisy_ar, "noisy_ar/ar1", detail::gen_ar1},
        {Family::noisy_ar, "noisy_ar/ar2", detail::gen_ar2},
        {Family::explosive, "explosive/amplitude", detail::gen_explosive_amplitude},
        {Family::explosive, "explosive/volatility", detail::gen_explosive_volatility},
        {Family::local_trend, "local_trend/piecewise_linear", detail::gen_piecewise_linear},
        {Family::local_trend, "local_trend/noisy", detail::gen_local_trend_noisy},
    };
    return reg;
}

inline std::vector<double> sample_base(const GeneratorEntry& entry, const GenBatchParams& params,
                                       RngStream& rng) {
    require(params.seq_len >= 8, "seq_len must be at least 8");
    auto x = entry.sample(params, rng);
    require(x.size() == params.seq_len, "generator returned wrong length");
    return x;
}

inline const GeneratorEntry& find_generator(const std::string& name) {
    for (const auto& e : generator_registry())
        if (e.name == name) return e;
    throw std::invalid_argument("unknown family: " + name);
}

// ---------------------------------------------------------------------------
// Univariate expansions

/// Integer time-shift with edge padding (positive k delays the series).
inline std::vector<double> shift_series(const std::vector<double>& x, std::int64_t k) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    std::vector<double> out(x.size());
    for (std::int64_t t = 0; t < n; ++t) {
        const std::int64_t s = std::clamp<std::int64_t>(t - k, 0, n - 1);
        out[static_cast<std::size_t>(t)] = x[static_cast<std::size_t>(s)];
    }
    return out;
}

/// Box-kernel smoothing; the kernel is truncated at the edges and
/// renormalized, so constants are preserved everywhere.
inline std::vector<double> box_smooth(const std::vector<double>& x, int width) {
    require(width >= 1, "box width must be positive");
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const std::int64_t half = (width - 1) / 2;
    std::vector<double> out(x.size());
    for (std::int64_t t = 0; t < n; ++t) {
        const std::int64_t lo = std::max<std::int64_t>(0, t - half);
        const std::int64_t hi = std::min<std::int64_t>(n - 1, t + (width - 1) - half);
        double sum = 0.0;
        for (std::int64_t s = lo; s <= hi; ++s) sum += x[static_cast<std::size_t>(s)];
        out[static_cast<std::size_t>(t)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

/// Gaussian-kernel smoothing, truncated at 3 sigma and renormalized.
inline std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
    require(sigma > 0.0, "sigma must be positive");
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const std::int64_t half = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(3.0 * sigma)));
    std::vector<double> out(x.size());
    for (std::int64_t t = 0; t < n; ++t) {
        double sum = 0.0, wsum = 0.0;
        for (std::int64_t s = std::max<std::int64_t>(0, t - half);
             s <= std::min<std::int64_t>(n - 1, t + half); ++s) {
            const double u = static_cast<double>(s - t) / sigma;
            const double w = std::exp(-0.5 * u * u);
            sum += w * x[static_cast<std::size_t>(s)];
            wsum += w;
        }
        out[static_cast<std::size_t>(t)] = sum / wsum;
    }
    return out;
}

/// Recursive AR filter z_t = alpha * z_{t-1} + x_t (z_{-1} = 0).
inline std::vector<double> ar_filter(const std::vector<double>& x, double alpha) {
    std::vector<double> out(x.size());
    double z = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        z = alpha * z + x[t];
        out[t] = z;
    }
    return out;
}

inline std::vector<std::vector<double>> univariate_expansions(const std::vector<double>& x,
                                                              RngStream& rng) {
    const int n_out = static_cast<int>(rng.uniform_int(1, 5));
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
        switch (rng.uniform_int(0, 3)) {
            case 0: {
                const std::int64_t maxs = std::max<std::int64_t>(1, static_cast<std::int64_t>(x.size()) / 8);
                std::int64_t k = rng.uniform_int(-maxs, maxs);
                out.push_back(shift_series(x, k));
                break;
            }
            case 1:
                out.push_back(box_smooth(x, static_cast<int>(rng.uniform_int(2, 9))));
                break;
            case 2:
                out.push_back(gaussian_smooth(x, rng.uniform(0.5, 4.0)));
                break;
            default:
                out.push_back(ar_filter(x, rng.uniform(0.1, 0.9)));
                break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sparse mixing

struct AugmentationConfig {
    std::pair<int, int> n_expansions_range{1, 5};
    int mix_sparsity = 2;          // expected nonzero weights per combination
    std::size_t pool_subsample = 8;
    std::size_t n_mixes = 8;       // post-transform outputs appended per round
    std::size_t n_base = 6;        // base series sampled in step 2
    std::vector<double> post_transform_weights{1, 1, 1, 1, 1};
    double real_mix_fraction = 0.0;
    // optional per-family sampling weights for base generators; families not
    // listed keep weight 1, empty list keeps the uniform draw
    std::vector<std::pair<std::string, double>> family_weights;
};

inline std::vector<double> mix_with_weights(const std::vector<std::vector<double>>& pool,
                                            const std::vector<double>& weights) {
    require(!pool.empty(), "mix pool must be nonempty");
    require(weights.size() == pool.size(), "one weight per pool series required");
    std::vector<double> out(pool[0].size(), 0.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (weights[i] == 0.0) continue;
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += weights[i] * pool[i][t];
    }
    return out;
}

struct MixOutput {
    std::vector<double> values;
    std::vector<double> weights;  // aligned with the input pool
};

inline std::vector<MixOutput> sparse_mix(const std::vector<std::vector<double>>& pool,
                                         std::size_t n_out, double noise_level, RngStream& rng,
                                         const AugmentationConfig& cfg) {
    require(!pool.empty(), "mix pool must be nonempty");
    const std::size_t max_nnz = std::min<std::size_t>(5, pool.size());
    std::vector<MixOutput> outs;
    outs.reserve(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
        std::size_t nnz = 1 + static_cast<std::size_t>(rng.poisson(std::max(0, cfg.mix_sparsity - 1)));
        nnz = std::clamp<std::size_t>(nnz, 1, max_nnz);
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < nnz; ++i) {  // partial Fisher-Yates
            std::size_t j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size()) - 1));
            std::swap(idx[i], idx[j]);
        }
        MixOutput mo;
        mo.weights.assign(pool.size(), 0.0);
        for (std::size_t i = 0; i < nnz; ++i)
            mo.weights[idx[i]] = rng.uniform(0.3, 1.5) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        mo.values = mix_with_weights(pool, mo.weights);
        if (noise_level > 0.0) {
            double mean = 0.0;
            for (double v : mo.values) mean += v;
            mean /= static_cast<double>(mo.values.size());
            double var = 0.0;
            for (double v : mo.values) var += (v - mean) * (v - mean);
            const double sd = std::sqrt(var / static_cast<double>(mo.values.size()));
            if (sd > 0.0)
                for (double& v : mo.values) v += rng.normal(0.0, noise_level * sd);
        }
        outs.push_back(std::move(mo));
    }
    return outs;
}

// ---------------------------------------------------------------------------
// Post-transforms

/// Scale to [0, 1]; constant inputs bypass to identity to avoid 0/0.
inline std::vector<double> min_max_scale(const std::vector<double>& x) {
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mx == *mn) return x;
    std::vector<double> out(x.size());
    const double span = *mx - *mn;
    for (std::size_t t = 0; t < x.size(); ++t) out[t] = (x[t] - *mn) / span;
    return out;
}

/// x -> ReLU(MinMaxScale(x) - 0.5): floor at zero, dormant below the median
/// of the range. Constant inputs bypass to identity.
inline std::vector<double> relu_floor(const std::vector<double>& x) {
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mx == *mn) return x;
    auto out = min_max_scale(x);
    for (double& v : out) v = std::max(0.0, v - 0.5);
    return out;
}

/// x1 -> x1 * MinMaxScale(x2); constant x2 bypasses to identity on x1.
inline std::vector<double> amplitude_modulation(const std::vector<double>& x1,
                                                const std::vector<double>& x2) {
    require(x1.size() == x2.size(), "modulation inputs must share a length");
    auto [mn, mx] = std::minmax_element(x2.begin(), x2.end());
    if (*mx == *mn) return x1;
    auto s = min_max_scale(x2);
    std::vector<double> out(x1.size());
    for (std::size_t t = 0; t < x1.size(); ++t) out[t] = x1[t] * s[t];
    return out;
}

struct PostOutput {
    std::vector<double> values;
    std::vector<std::uint8_t> observed;  // 0 where missing was injected
};

inline PostOutput inject_missing(const std::vector<double>& x, double rate, RngStream& rng) {
    PostOutput out{x, std::vector<std::uint8_t>(x.size(), 1)};
    if (rate <= 0.0) return out;
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (rng.bernoulli(rate)) {
            out.values[t] = std::numeric_limits<double>::quiet_NaN();
            out.observed[t] = 0;
        }
    }
    return out;
}

inline std::vector<double> inject_outliers(const std::vector<double>& x, double rate, double scale,
                                           RngStream& rng) {
    std::vector<double> out = x;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= std::max<std::size_t>(1, x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / std::max<std::size_t>(1, x.size()));
    const double mag = scale * (sd > 0.0 ? sd : 1.0);
    for (double& v : out)
        if (rng.bernoulli(rate)) v += mag * rng.normal(0.0, 1.0);
    return out;
}

inline std::vector<double> inject_spikes(const std::vector<double>& x, double rate, double scale,
                                         RngStream& rng) {
    std::vector<double> out = x;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= std::max<std::size_t>(1, x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / std::max<std::size_t>(1, x.size()));
    const double mag = scale * (sd > 0.0 ? sd : 1.0);
    for (double& v : out)
        if (rng.bernoulli(rate)) v += mag * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    return out;
}

/// One sampled post-transform. `partner` feeds amplitude modulation; when
/// absent, modulation falls back to relu_floor.
inline PostOutput post_transform(const std::vector<double>& x, const std::vector<double>* partner,
                                 RngStream& rng, const AugmentationConfig& cfg) {
    require(cfg.post_transform_weights.size() == 5, "five post-transform weights required");
    std::size_t which = rng.weighted_index(cfg.post_transform_weights);
    if (which == 1 && partner == nullptr) which = 0;
    switch (which) {
        case 0: return {relu_floor(x), std::vector<std::uint8_t>(x.size(), 1)};
        case 1: return {amplitude_modulation(x, *partner), std::vector<std::uint8_t>(x.size(), 1)};
        case 2: return inject_missing(x, rng.uniform(0.01, 0.1), rng);
        case 3: return {inject_outliers(x, rng.uniform(0.005, 0.05), rng.uniform(3.0, 8.0), rng),
                        std::vector<std::uint8_t>(x.size(), 1)};
        default: return {inject_spikes(x, rng.uniform(0.005, 0.05), rng.uniform(3.0, 8.0), rng),
                         std::vector<std::uint8_t>(x.size(), 1)};
    }
}

// ---------------------------------------------------------------------------
// Full pipeline

struct GenerateStats {
    std::size_t skipped_real_frequency = 0;
    std::size_t n_base = 0;
    std::size_t n_real = 0;
    std::size_t n_derived = 0;
    std::size_t n_calendar = 0;
};

namespace detail {

/// Missing points are replaced by the nearest earlier observation (or the
/// first observation) before the values feed further transforms.
inline std::vector<double> fill_missing(const std::vector<double>& x,
                                        const std::vector<std::uint8_t>& mask) {
    std::vector<double> out = x;
    double last = 0.0;
    bool seen = false;
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (mask[t] != 0) {
            last = out[t];
            seen = true;
        } else {
            out[t] = last;
        }
    }
    if (!seen) std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < out.size() && mask[t] == 0; ++t) out[t] = last;
    return out;
}

struct PoolEntry {
    std::vector<double> values;
    std::vector<std::uint8_t> observed;
    std::string name;
};

}  // namespace detail

/// Runs the full generation pipeline: sample bases, merge frequency-matched
/// real series, iterate expansion/mix/post rounds, then assemble a
/// multivariate series with a random target and calendar covariates.
inline TimeSeries generate(const AugmentationConfig& cfg, const GenBatchParams& params,
                           const std::vector<TimeSeries>& real_pool, RngStream& rng,
                           GenerateStats* stats = nullptr) {
    using detail::PoolEntry;
    const std::size_t n = params.seq_len;
    GenerateStats local;
    std::vector<PoolEntry> pool;

    const auto& reg = generator_registry();
    std::vector<double> entry_weights;
    if (!cfg.family_weights.empty()) {
        entry_weights.assign(reg.size(), 1.0);
        for (std::size_t i = 0; i < reg.size(); ++i)
            for (const auto& [fam, w] : cfg.family_weights)
                if (family_name(reg[i].family) == fam) entry_weights[i] = w;
    }
    for (std::size_t i = 0; i < cfg.n_base; ++i) {
        const std::size_t pick =
            entry_weights.empty()
                ? static_cast<std::size_t>(
                      rng.uniform_int(0, static_cast<std::int64_t>(reg.size()) - 1))
                : rng.weighted_index(entry_weights);
        const auto& entry = reg[pick];
        RngStream sub = rng.derive(1000 + i);
        pool.push_back({sample_base(entry, params, sub),
                        std::vector<std::uint8_t>(n, 1),
                        "base:" + entry.name});
    }
    local.n_base = cfg.n_base;

    const std::size_t want_real = static_cast<std::size_t>(
        std::llround(cfg.real_mix_fraction * static_cast<double>(cfg.n_base)));
    for (const auto& rs : real_pool) {
        if (local.n_real >= want_real) break;
        if (params.base_frequency && rs.frequency() &&
            !(rs.frequency()->step_seconds() == params.base_frequency->step_seconds())) {
            ++local.skipped_real_frequency;
            continue;
        }
        PoolEntry e;
        e.name = "real:" + rs.channel_name(static_cast<std::size_t>(rs.target_channel()));
        const auto& vals = rs.channel(static_cast<std::size_t>(rs.target_channel()));
        const auto& mask = rs.observed_mask(static_cast<std::size_t>(rs.target_channel()));
        if (vals.size() >= n) {
            e.values.assign(vals.end() - static_cast<std::ptrdiff_t>(n), vals.end());
            e.observed.assign(mask.end() - static_cast<std::ptrdiff_t>(n), mask.end());
        } else {
            const std::size_t pad = n - vals.size();
            e.values.assign(n, std::numeric_limits<double>::quiet_NaN());
            e.observed.assign(n, 0);
            std::copy(vals.begin(), vals.end(), e.values.begin() + static_cast<std::ptrdiff_t>(pad));
            std::copy(mask.begin(), mask.end(), e.observed.begin() + static_cast<std::ptrdiff_t>(pad));
        }
        pool.push_back(std::move(e));
        ++local.n_real;
    }

    for (int round = 0; round < params.rounds; ++round) {
        const std::size_t take = std::min(cfg.pool_subsample, pool.size());
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size()) - 1));
            std::swap(idx[i], idx[j]);
        }

        std::vector<std::vector<double>> expansions;
        for (std::size_t i = 0; i < take; ++i) {
            const auto& src = pool[idx[i]];
            auto filled = detail::fill_missing(src.values, src.observed);
            auto exp = univariate_expansions(filled, rng);
            for (auto& e : exp) expansions.push_back(std::move(e));
        }

        auto mixes = sparse_mix(expansions, cfg.n_mixes, params.noise_level, rng, cfg);

        for (std::size_t m = 0; m < mixes.size(); ++m) {
            const std::vector<double>* partner = nullptr;
            if (mixes.size() > 1) {
                std::size_t q = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(mixes.size()) - 1));
                if (q == m) q = (q + 1) % mixes.size();
                partner = &mixes[q].values;
            }
            auto post = post_transform(mixes[m].values, partner, rng, cfg);
            pool.push_back({std::move(post.values), std::move(post.observed),
                            "mix:r" + std::to_string(round) + ":" + std::to_string(m)});
            ++local.n_derived;
        }
    }

    TimeSeries out;
    for (auto& e : pool) out.add_channel(std::move(e.values), std::move(e.observed), e.name);
    const std::size_t n_plain = out.n_channels();

    std::set<int> kf;
    if (params.time_index && params.base_frequency) {
        auto cal = natural_periods(*params.base_frequency);
        if (cal.size() > 2) cal.resize(2);
        const double step = static_cast<double>(params.time_index->step);
        for (int p : cal) {
            const double span = static_cast<double>(p) * step;
            std::vector<double> sch(n), cch(n);
            for (std::size_t t = 0; t < n; ++t) {
                const double sec = static_cast<double>(params.time_index->at(static_cast<std::int64_t>(t)));
                const double phase = detail::kTau * (sec - span * std::floor(sec / span)) / span;
                sch[t] = std::sin(phase);
                cch[t] = std::cos(phase);
            }
            out.add_channel(std::move(sch), {}, "cal:sin:" + std::to_string(p));
            kf.insert(static_cast<int>(out.n_channels()) - 1);
            out.add_channel(std::move(cch), {}, "cal:cos:" + std::to_string(p));
            kf.insert(static_cast<int>(out.n_channels()) - 1);
            local.n_calendar += 2;
        }
    }

    out.set_target_channel(static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(n_plain) - 1)));
    out.set_known_future(std::move(kf));
    out.set_time_index(params.time_index);
    out.set_frequency(params.base_frequency);

    if (stats) *stats = local;
    return out;
}

}  // namespace ttsm::synth
