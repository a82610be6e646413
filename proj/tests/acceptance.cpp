// Acceptance gate: one self-contained check per release criterion, each
// printing a PASS/FAIL line with runtime and a short detail string. The
// process exits with the number of failed checks. Run a subset by passing
// check numbers as arguments.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "ttsm/dataset_io.hpp"
#include "ttsm/harness.hpp"
#include "ttsm/synthts.hpp"
#include "ttsm/training.hpp"

using namespace ttsm;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;  // keep the first failure
        pass = false;
    }
    void note(const std::string& text) {
        if (pass) detail = text;
    }
};

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// shared fixtures

/// Random walk plus two sinusoids with optional missing points.
std::vector<double> fuzz_series(std::size_t n, RngStream& rng) {
    std::vector<double> y(n);
    double walk = rng.normal(0.0, 1.0);
    const double p1 = rng.uniform(6.0, 48.0), p2 = rng.uniform(3.0, 12.0);
    const double a1 = rng.uniform(0.1, 3.0), a2 = rng.uniform(0.0, 1.0);
    const double scale = std::exp(rng.uniform(-2.0, 4.0));
    const double offset = rng.normal(0.0, 10.0);
    for (std::size_t t = 0; t < n; ++t) {
        walk += rng.normal(0.0, 0.1);
        const double tt = static_cast<double>(t);
        y[t] = offset + scale * (walk + a1 * std::sin(6.283185307179586 * tt / p1) +
                                 a2 * std::sin(6.283185307179586 * tt / p2));
    }
    return y;
}

std::vector<std::uint8_t> fuzz_mask(std::size_t n, double p_missing, RngStream& rng) {
    std::vector<std::uint8_t> m(n, 1);
    for (std::size_t t = 0; t < n; ++t)
        if (rng.bernoulli(p_missing)) m[t] = 0;
    return m;
}

TimeSeries random_multichannel(int C, std::size_t n, RngStream& rng, double p_missing = 0.05) {
    TimeSeries s;
    for (int c = 0; c < C; ++c) {
        auto y = fuzz_series(n, rng);
        auto m = fuzz_mask(n, p_missing, rng);
        std::vector<std::uint8_t> obs(m.begin(), m.end());
        s.add_channel(std::move(y), std::move(obs), "ch" + std::to_string(c));
    }
    s.set_target_channel(0);
    return s;
}

bool same_series(const TimeSeries& a, const TimeSeries& b) {
    if (a.n_channels() != b.n_channels() || a.length() != b.length()) return false;
    if (a.target_channel() != b.target_channel() || a.known_future() != b.known_future())
        return false;
    if (a.channel_names() != b.channel_names()) return false;
    if (a.frequency().has_value() != b.frequency().has_value()) return false;
    if (a.frequency() && !(*a.frequency() == *b.frequency())) return false;
    if (a.time_index().has_value() != b.time_index().has_value()) return false;
    if (a.time_index() && !(*a.time_index() == *b.time_index())) return false;
    for (std::size_t c = 0; c < a.n_channels(); ++c)
        for (std::size_t t = 0; t < a.length(); ++t) {
            if (a.observed(c, t) != b.observed(c, t)) return false;
            if (a.observed(c, t) && a.value(c, t) != b.value(c, t)) return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// 1. rolling-normalization property suite

Outcome check_dart_norm() {
    Outcome out;

    // causality: perturbing the future (values or masks) leaves every prefix
    // output bit-identical
    RngStream rng(101);
    for (int rep = 0; rep < 200 && out.pass; ++rep) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(50, 300));
        auto y = fuzz_series(n, rng);
        auto m = fuzz_mask(n, 0.1, rng);
        const auto cutoff = static_cast<std::size_t>(
            rng.uniform_int(1, static_cast<std::int64_t>(n) - 2));
        const auto hit = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(cutoff) + 1,
                            static_cast<std::int64_t>(n) - 1));
        auto y2 = y;
        auto m2 = m;
        if (rep % 2 == 0)
            y2[hit] += rng.normal(0.0, 100.0);
        else
            m2[hit] = m2[hit] ? 0 : 1;
        const auto a = dart::normalize(y, m);
        const auto b = dart::normalize(y2, m2);
        for (std::size_t t = 0; t <= cutoff; ++t) {
            if (a.x[t] != b.x[t] || a.d[t] != b.d[t] || a.r[t] != b.r[t] ||
                a.stats.m[t] != b.stats.m[t] || a.stats.s_clamped[t] != b.stats.s_clamped[t]) {
                out.fail(fmt("causality: rep %d diverges at t=%zu <= cutoff %zu", rep, t, cutoff));
                break;
            }
        }
    }

    // affine invariance of all emitted features
    for (int rep = 0; rep < 100 && out.pass; ++rep) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(30, 200));
        auto y = fuzz_series(n, rng);
        auto m = fuzz_mask(n, 0.1, rng);
        const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-100.0, 100.0);
        std::vector<double> y2(n);
        for (std::size_t t = 0; t < n; ++t) y2[t] = a * y[t] + b;
        const auto u = dart::normalize(y, m);
        const auto v = dart::normalize(y2, m);
        for (std::size_t t = 0; t < n; ++t) {
            if (std::abs(u.x[t] - v.x[t]) > 1e-9 || std::abs(u.d[t] - v.d[t]) > 1e-9 ||
                std::abs(u.r[t] - v.r[t]) > 1e-9) {
                out.fail(fmt("affine invariance: rep %d t=%zu a=%.3f b=%.3f", rep, t, a, b));
                break;
            }
        }
    }

    // anchored targets invert exactly through denormalize
    for (int rep = 0; rep < 100 && out.pass; ++rep) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(40, 200));
        auto y = fuzz_series(n, rng);
        const auto anchor = static_cast<std::size_t>(
            rng.uniform_int(5, static_cast<std::int64_t>(n) - 10));
        const std::size_t horizon = std::min<std::size_t>(8, n - anchor - 1);
        const auto at = dart::anchored_targets(y, anchor, horizon);
        const auto back = dart::denormalize(at.targets, at.anchor_mean, at.anchor_std);
        for (std::size_t j = 0; j < horizon; ++j) {
            const double want = y[anchor + 1 + j];
            if (std::abs(back[j] - want) > 1e-12 * std::max(1.0, std::abs(want))) {
                out.fail(fmt("round trip: rep %d j=%zu err=%.3g", rep, j,
                             std::abs(back[j] - want)));
                break;
            }
        }
    }

    // streaming updates match the batch recomputation and the oracle
    for (int rep = 0; rep < 50 && out.pass; ++rep) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(30, 400));
        auto y = fuzz_series(n, rng);
        auto m = fuzz_mask(n, 0.15, rng);
        const auto batch = dart::normalize(y, m);
        std::vector<bool> mb(n);
        for (std::size_t t = 0; t < n; ++t) mb[t] = m[t] != 0;
        const auto oracle_stats = oracle::prefix_stats(y, mb);
        dart::OnlineState st;
        for (std::size_t t = 0; t < n; ++t) {
            const auto step = dart::online_update(st, y[t], m[t] != 0);
            const double scale = std::max(1.0, std::abs(batch.stats.m[t]));
            if (std::abs(step.m - batch.stats.m[t]) > 1e-9 * scale ||
                std::abs(step.s_clamped - batch.stats.s_clamped[t]) > 1e-9 * scale ||
                std::abs(step.x - batch.x[t]) > 1e-9 || std::abs(step.d - batch.d[t]) > 1e-9 ||
                std::abs(step.r - batch.r[t]) > 1e-9) {
                out.fail(fmt("streaming/batch: rep %d t=%zu", rep, t));
                break;
            }
            if (batch.stats.count[t] > 0 &&
                std::abs(batch.stats.m[t] - oracle_stats.mean[t]) > 1e-9 * scale) {
                out.fail(fmt("batch vs oracle mean: rep %d t=%zu", rep, t));
                break;
            }
        }
    }

    out.note("200 causality + 100 affine + 100 round-trip + 50 streaming cases");
    return out;
}

// ---------------------------------------------------------------------------
// 2. encoder causality at the toy scale

Outcome check_model_causality() {
    Outcome out;
    const auto cfg = model::toy_config();
    RngStream prng(202);
    const auto params = model::init_params<float>(cfg, prng);
    const int P = cfg.patch_len;

    RngStream rng(203);
    double worst = 0.0;
    for (int rep = 0; rep < 50 && out.pass; ++rep) {
        const int C = static_cast<int>(rng.uniform_int(1, 3));
        const auto T = static_cast<std::size_t>(rng.uniform_int(100, 512));
        TimeSeries s = random_multichannel(C, T, rng);
        const int horizon = 40;

        const auto base = model::forward(s, horizon, params);
        const int np = base.n_patches;
        const int pad_len = (P - static_cast<int>(T) % P) % P;

        // perturb a point strictly after some patch boundary
        const int pt = static_cast<int>(rng.uniform_int(1, np - 1));  // patch of the hit
        const int lo = pt * P - pad_len;                              // first index in patch pt
        const auto hit = static_cast<std::size_t>(
            rng.uniform_int(std::max(0, lo), static_cast<std::int64_t>(T) - 1));
        const int hit_patch = (static_cast<int>(hit) + pad_len) / P;
        TimeSeries s2 = s;
        const auto hc = static_cast<std::size_t>(rng.uniform_int(0, C - 1));
        s2.value(hc, hit) += 100.0 * (1.0 + std::abs(s2.value(hc, hit)));

        const auto pert = model::forward(s2, horizon, params);
        for (int c = 0; c < C && out.pass; ++c)
            for (int q = 0; q < hit_patch && out.pass; ++q)
                for (Eigen::Index j = 0; j < base.dense.cols(); ++j) {
                    const double diff = std::abs(
                        static_cast<double>(base.dense(c * np + q, j)) -
                        static_cast<double>(pert.dense(c * np + q, j)));
                    worst = std::max(worst, diff);
                    if (diff > 1e-5) {
                        out.fail(fmt("rep %d: patch %d (before hit patch %d) moved by %.3g", rep,
                                     q, hit_patch, diff));
                        break;
                    }
                }
    }
    out.note(fmt("50 cases, max prefix drift %.3g (tolerance 1e-5)", worst));
    return out;
}

// ---------------------------------------------------------------------------
// 3. analytic gradients vs central differences at the toy scale

Outcome check_gradients() {
    Outcome out;
    auto cfg = model::toy_config();
    RngStream prng(303);
    auto params = model::init_params<double>(cfg, prng);

    // two series exercising every head: covariate channel, missing points,
    // horizon beyond the per-patch head
    RngStream rng(304);
    const int context = 96, horizon = 40;
    std::vector<TimeSeries> series;
    for (int b = 0; b < 2; ++b) {
        TimeSeries s = random_multichannel(2, static_cast<std::size_t>(context + horizon), rng);
        auto cal = fuzz_series(static_cast<std::size_t>(context + horizon), rng);
        s.add_channel(std::move(cal), {}, "cal");
        s.set_known_future({2});
        series.push_back(std::move(s));
    }

    train::LossMask mask;
    mask.stride = 2;
    mask.phase = 1;
    mask.horizon = horizon;
    const double delta = 1.0;

    std::vector<train::SupervisedBatch<double>> sup;
    for (const auto& s : series)
        sup.push_back(train::build_supervised<double>(s, s, context, horizon, cfg));

    const auto loss_at = [&]() {
        std::vector<model::ForecastOutput<double>> outs;
        for (const auto& sb : sup) outs.push_back(model::forward_batch(sb.batch, params));
        return train::batch_loss(outs, sup, mask, delta);
    };

    // analytic gradients
    auto grads = model::zeros_like(params);
    {
        std::vector<model::ForecastOutput<double>> outs;
        std::vector<model::Workspace<double>> traces(sup.size());
        for (std::size_t b = 0; b < sup.size(); ++b)
            outs.push_back(model::forward_batch(sup[b].batch, params, traces[b]));
        std::vector<Mat<double>> dd(sup.size()), dl(sup.size());
        train::batch_loss(outs, sup, mask, delta, &dd, &dl);
        for (std::size_t b = 0; b < sup.size(); ++b)
            model::backward_batch(sup[b].batch, params, traces[b], dd[b], dl[b], grads);
    }

    std::vector<Mat<double>*> tensors;
    std::vector<Mat<double>*> gtensors;
    std::vector<std::string> names;
    model::for_each_tensor(params, [&](const std::string& n, Mat<double>& t) {
        tensors.push_back(&t);
        names.push_back(n);
    });
    model::for_each_tensor(grads, [&](const std::string&, Mat<double>& t) {
        gtensors.push_back(&t);
    });

    double worst = 0.0;
    long long n_checked = 0;
    for (std::size_t k = 0; k < tensors.size() && out.pass; ++k) {
        Mat<double>& theta = *tensors[k];
        const Mat<double>& g = *gtensors[k];
        RngStream coord_rng(515, static_cast<std::uint64_t>(k));
        std::set<Eigen::Index> coords;
        while (coords.size() < std::min<std::size_t>(64, static_cast<std::size_t>(theta.size())))
            coords.insert(static_cast<Eigen::Index>(
                coord_rng.uniform_int(0, static_cast<std::int64_t>(theta.size()) - 1)));
        for (const Eigen::Index i : coords) {
            const double orig = theta.data()[i];
            const double h = 5e-7 * std::max(1.0, std::abs(orig));
            theta.data()[i] = orig + h;
            const double lp = loss_at();
            theta.data()[i] = orig - h;
            const double lm = loss_at();
            theta.data()[i] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = g.data()[i];
            const double err = std::abs(analytic - numeric);
            const double bound = 1e-8 + 1e-6 * std::max(std::abs(analytic), std::abs(numeric));
            worst = std::max(worst, err / bound);
            ++n_checked;
            if (err > bound) {
                out.fail(fmt("%s[%lld]: analytic %.9g numeric %.9g", names[k].c_str(),
                             static_cast<long long>(i), analytic, numeric));
                break;
            }
        }
    }
    out.note(fmt("%lld coordinates over %zu tensors, worst err/bound %.3f", n_checked,
                 tensors.size(), worst));
    return out;
}

// ---------------------------------------------------------------------------
// 4. stride-1 coarse loss is the dense loss

Outcome check_coarse_grid() {
    Outcome out;
    auto cfg = model::toy_config();
    RngStream prng(404);
    const auto params = model::init_params<float>(cfg, prng);

    RngStream rng(405);
    for (int rep = 0; rep < 100 && out.pass; ++rep) {
        const int C = static_cast<int>(rng.uniform_int(1, 3));
        const int context = static_cast<int>(rng.uniform_int(40, 200));
        const int horizon = static_cast<int>(rng.uniform_int(1, 64));
        std::vector<model::ForecastOutput<float>> outs;
        std::vector<train::SupervisedBatch<float>> sup;
        for (int b = 0; b < 2; ++b) {
            TimeSeries s =
                random_multichannel(C, static_cast<std::size_t>(context + horizon), rng);
            auto sb = train::build_supervised<float>(s, s, context, horizon, cfg);
            outs.push_back(model::forward_batch(sb.batch, params));
            sup.push_back(std::move(sb));
        }
        train::LossMask dense;
        dense.stride = 1;
        dense.phase = 0;
        dense.horizon = horizon;
        const train::LossMask coarse = train::coarse_grid_mask(horizon, 1, rng);
        const double a = train::batch_loss(outs, sup, dense, 1.0);
        const double b = train::batch_loss(outs, sup, coarse, 1.0);
        if (a != b) out.fail(fmt("rep %d: dense %.17g != stride-1 %.17g", rep, a, b));
    }
    out.note("100 random batches, bit-exact");
    return out;
}

// ---------------------------------------------------------------------------
// 5. strided-view interleave: bijection and exactness

Outcome check_sifi() {
    Outcome out;
    const std::size_t T = 1200;

    // position-encoding forecaster: output cell (0, j) = 1000 * last + j where
    // last is the absolute index of the view's final point
    TimeSeries idx_series;
    {
        std::vector<double> y(T);
        std::iota(y.begin(), y.end(), 0.0);
        idx_series.add_channel(std::move(y));
    }
    const infer::Forecaster encoder = [](const TimeSeries& view, int h) {
        Matd f(1, h);
        const double last = view.value(0, view.length() - 1);
        for (int j = 0; j < h; ++j) f(0, j) = 1000.0 * last + j;
        return f;
    };
    long long cells = 0;
    for (int n = 1; n <= 8 && out.pass; ++n) {
        for (int h = 1; h <= 960 && out.pass; ++h) {
            const Matd got = infer::sifi_forecast(encoder, idx_series, n, h);
            for (int s = 0; s < h; ++s) {
                const double want =
                    1000.0 * static_cast<double>(T - static_cast<std::size_t>(n) +
                                                 static_cast<std::size_t>(s % n)) +
                    static_cast<double>(s / n);
                ++cells;
                if (got(0, s) != want) {
                    out.fail(fmt("n=%d h=%d step %d: got %.1f want %.1f", n, h, s, got(0, s),
                                 want));
                    break;
                }
            }
        }
    }

    // periodic fixture: per-view seasonal copying must reassemble the exact
    // continuation of the original series
    RngStream rng(505);
    std::array<double, 24> table{};
    for (auto& v : table) v = rng.normal(0.0, 3.0);
    TimeSeries periodic;
    {
        std::vector<double> y(960);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] = table[t % 24];
        periodic.add_channel(std::move(y));
    }
    const std::size_t Tp = periodic.length();
    for (int n = 1; n <= 8 && out.pass; ++n) {
        const std::size_t pv = 24 / std::gcd<std::size_t>(24, static_cast<std::size_t>(n));
        const infer::Forecaster seasonal = [pv](const TimeSeries& view, int h) {
            const auto fc = seasonal_naive(view.channel(0), pv, static_cast<std::size_t>(h));
            Matd f(1, h);
            for (int j = 0; j < h; ++j) f(0, j) = fc.forecast[static_cast<std::size_t>(j)];
            return f;
        };
        for (const int h : {1, 23, 24, 48, 100, 959, 960}) {
            const Matd got = infer::sifi_forecast(seasonal, periodic, n, h);
            for (int s = 0; s < h; ++s) {
                if (got(0, s) != table[(Tp + static_cast<std::size_t>(s)) % 24]) {
                    out.fail(fmt("periodic: n=%d h=%d step %d mismatch", n, h, s));
                    break;
                }
            }
            if (!out.pass) break;
        }
    }
    out.note(fmt("every (h <= 960, n <= 8) pair, %lld cells + periodic fixture exact", cells));
    return out;
}

// ---------------------------------------------------------------------------
// 6. ensembling contracts

Outcome check_ensembling() {
    Outcome out;
    const auto cfg = model::toy_config();
    RngStream prng(606);
    const auto params = model::init_params<float>(cfg, prng);
    const infer::Forecaster base = infer::model_forecaster(params);

    RngStream rng(607);
    TimeSeries s = random_multichannel(2, 300, rng);
    const int h = 24;

    // mirror is exactly odd
    const Matd mp = infer::mirror_ensemble(base, s, h);
    const Matd mn = infer::mirror_ensemble(base, s.negated(), h);
    for (Eigen::Index c = 0; c < mp.rows() && out.pass; ++c)
        for (Eigen::Index j = 0; j < mp.cols(); ++j)
            if (mp(c, j) != -mn(c, j)) {
                out.fail(fmt("mirror not odd at (%lld, %lld)", static_cast<long long>(c),
                             static_cast<long long>(j)));
                break;
            }

    // zero noise reproduces the plain forecast bit-exactly
    if (out.pass) {
        RngStream nrng(608);
        const Matd plain = base(s, h);
        const Matd ens = infer::noise_ensemble(base, s, h, 3, 0.0, nrng);
        for (Eigen::Index c = 0; c < plain.rows() && out.pass; ++c)
            for (Eigen::Index j = 0; j < plain.cols(); ++j)
                if (plain(c, j) != ens(c, j)) {
                    out.fail("noise_frac=0 is not bit-identical");
                    break;
                }
    }

    // for a linear forecaster the ensemble mean concentrates at 3 sigma / sqrt(k)
    if (out.pass) {
        const infer::Forecaster linear = [](const TimeSeries& in, int hh) {
            Matd f(static_cast<Eigen::Index>(in.n_channels()), hh);
            for (std::size_t c = 0; c < in.n_channels(); ++c) {
                double mean = 0.0;
                std::int64_t n = 0;
                for (std::size_t t = 0; t < in.length(); ++t)
                    if (in.observed(c, t)) {
                        ++n;
                        mean += (in.value(c, t) - mean) / static_cast<double>(n);
                    }
                for (int j = 0; j < hh; ++j) f(static_cast<Eigen::Index>(c), j) = mean;
            }
            return f;
        };
        const int k = 16;
        const double frac = 0.1;
        const Matd plain = linear(s, h);
        RngStream nrng(609);
        const Matd ens = infer::noise_ensemble(linear, s, h, k, frac, nrng);
        for (std::size_t c = 0; c < s.n_channels() && out.pass; ++c) {
            double mean = 0.0, m2 = 0.0;
            std::int64_t n = 0;
            for (std::size_t t = 0; t < s.length(); ++t)
                if (s.observed(c, t)) {
                    ++n;
                    const double d = s.value(c, t) - mean;
                    mean += d / static_cast<double>(n);
                    m2 += d * (s.value(c, t) - mean);
                }
            const double sd = std::sqrt(m2 / static_cast<double>(n));
            const double sigma = frac * sd / std::sqrt(static_cast<double>(n));
            const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(k));
            const auto ci = static_cast<Eigen::Index>(c);
            for (Eigen::Index j = 0; j < plain.cols(); ++j)
                if (std::abs(ens(ci, j) - plain(ci, j)) > bound) {
                    out.fail(fmt("channel %zu: |mean shift| %.3g > 3 sigma/sqrt(k) = %.3g", c,
                                 std::abs(ens(ci, j) - plain(ci, j)), bound));
                    break;
                }
        }
    }
    out.note("mirror odd exact; zero-noise bit-exact; linear ensemble within 3 sigma/sqrt(k)");
    return out;
}

// ---------------------------------------------------------------------------
// toy end-to-end fixtures (shared by 7 and 8)

synth::AugmentationConfig small_aug() {
    synth::AugmentationConfig a;
    a.n_base = 3;
    a.n_mixes = 3;
    a.pool_subsample = 4;
    return a;
}

train::SeriesSampler periodic_sampler() {
    synth::BatchSampleConfig sampling;
    sampling.seq_len_range = {288, 1200};
    sampling.p_no_index = 0.3;
    sampling.force_frequency = FrequencyTag(BaseUnit::hour, 1);
    sampling.noise_level_range = {0.0, 0.15};
    auto aug = small_aug();
    aug.family_weights = {{"sum_of_sinusoids", 6.0},     {"phase_shift_periodic", 3.0},
                          {"periodic_random_walk", 3.0}, {"periodic_mixture", 3.0},
                          {"floored_periodic", 2.0},     {"approx_periodic_integer", 2.0}};
    return [sampling, aug](RngStream& rng) {
        auto p = synth::sample_batch_params(rng, sampling);
        TimeSeries s = synth::generate(aug, p, {}, rng);
        // half the batches are stride-2 views so inference-time interleaved
        // forecasting stays in distribution
        if (rng.bernoulli(0.5)) {
            const auto off = static_cast<std::size_t>(rng.uniform_int(0, 1));
            s = strided_views(s, 2)[off].materialize();
        }
        return s;
    };
}

/// Period-24 hourly tasks with context 512, horizon 48. Observation noise
/// keeps the baseline error bounded away from zero: on noiseless periodic
/// targets the seasonal copy is float-exact and relative error degenerates.
std::vector<eval::EvalTask> holdout_tasks(int n, std::uint64_t salt, bool seasonal_only) {
    auto aug = small_aug();
    if (seasonal_only)
        aug.family_weights = {{"sum_of_sinusoids", 4.0},       {"periodic_random_walk", 2.0},
                              {"phase_shift_periodic", 2.0},   {"floored_periodic", 2.0},
                              {"periodic_mixture", 2.0},       {"approx_periodic_integer", 2.0},
                              {"trend_linear_nonlinear", 0.0}, {"reset_trend", 0.0},
                              {"circular_reindex", 0.0},       {"explosive_periodic", 0.0},
                              {"integer_count", 0.0},          {"noise", 0.0},
                              {"noisy_ar", 0.0},               {"explosive", 0.0},
                              {"local_trend", 0.0}};
    RngStream rng(9100 + salt, 0xBEEF);
    std::vector<eval::EvalTask> tasks;
    std::uint64_t attempt = 0;
    while (static_cast<int>(tasks.size()) < n) {
        RngStream sub = rng.derive(attempt++);
        synth::GenBatchParams p;
        p.seq_len = 560;
        p.compatible_periods = {24};
        p.period_weights = {1.0};
        p.noise_level = sub.uniform(0.0, 0.1);
        p.rounds = 2;
        p.base_frequency = FrequencyTag(BaseUnit::hour, 1);
        p.time_index = TimeIndex(1700000000, 3600);
        TimeSeries s = synth::generate(aug, p, {}, sub);
        if (seasonal_only) {
            // a seasonal task forecasts a periodic family draw itself; the
            // mixed composites stay in the panel as covariates
            std::vector<int> bases;
            for (std::size_t c = 0; c < s.n_channels(); ++c)
                if (s.channel_name(c).rfind("base:", 0) == 0)
                    bases.push_back(static_cast<int>(c));
            s.set_target_channel(bases[static_cast<std::size_t>(
                sub.uniform_int(0, static_cast<std::int64_t>(bases.size()) - 1))]);
        }
        const double frac = sub.uniform(0.1, 0.2);
        for (std::size_t c = 0; c < s.n_channels(); ++c) {
            if (s.is_known_future(static_cast<int>(c))) continue;
            double mean = 0.0, m2 = 0.0;
            std::int64_t cnt = 0;
            for (std::size_t u = 0; u < s.length(); ++u) {
                if (!s.observed(c, u)) continue;
                ++cnt;
                const double d = s.value(c, u) - mean;
                mean += d / static_cast<double>(cnt);
                m2 += d * (s.value(c, u) - mean);
            }
            const double sd = cnt > 0 ? std::sqrt(m2 / static_cast<double>(cnt)) : 0.0;
            for (std::size_t u = 0; u < s.length(); ++u)
                if (s.observed(c, u)) s.value(c, u) += sub.normal(0.0, frac * sd);
        }
        const auto tc = static_cast<std::size_t>(s.target_channel());
        // the seasonal copy must be defined: target fully observed over the
        // truth window and the final season of context
        int obs = 0;
        for (int j = 0; j < 48; ++j) obs += s.observed(tc, 512 + static_cast<std::size_t>(j));
        for (std::size_t u = 512 - 24; u < 512; ++u) obs += s.observed(tc, u);
        if (obs < 48 + 24) continue;
        double tmean = 0.0, tm2 = 0.0;
        std::int64_t tn = 0;
        for (std::size_t u = 0; u < 512; ++u) {
            if (!s.observed(tc, u)) continue;
            ++tn;
            const double d = s.value(tc, u) - tmean;
            tmean += d / static_cast<double>(tn);
            tm2 += d * (s.value(tc, u) - tmean);
        }
        if (tn < 256 ||
            std::sqrt(tm2 / static_cast<double>(tn)) < 1e-9 * (1.0 + std::abs(tmean)))
            continue;
        eval::EvalTask t;
        t.task_id =
            std::string(seasonal_only ? "seasonal_" : "mixed_") + std::to_string(tasks.size());
        t.dataset = std::move(s);
        t.context_len = 512;
        t.horizon = 48;
        t.season = 24;
        tasks.push_back(std::move(t));
    }
    return tasks;
}

// hyperparameters frozen after the first verified run
constexpr int kE2eSteps = 12000;
constexpr double kE2eLr = 2e-3;
constexpr double kE2eFinalLr = 0.05;
constexpr std::uint64_t kE2eSeed = 7;

train::TrainConfig e2e_config(int steps) {
    train::TrainConfig tc;
    tc.steps = steps;
    tc.learning_rate = kE2eLr;
    tc.final_lr_fraction = kE2eFinalLr;
    tc.seed = kE2eSeed;
    tc.max_context = 512;
    tc.max_horizon = 96;
    tc.eval_horizon = 48;
    return tc;
}

// ---------------------------------------------------------------------------
// 7. toy end-to-end vs the seasonal baseline

Outcome check_end_to_end() {
    Outcome out;
    auto sampler = periodic_sampler();
    auto tc = e2e_config(kE2eSteps);
    RngStream init(kE2eSeed, 0x117);
    auto params = model::init_params<float>(model::toy_config(), init);
    auto res = train::train(std::move(params), sampler, tc);

    infer::InferenceConfig icfg;
    icfg.use_mirror = true;
    icfg.sifi_stride = 2;  // 24 dense steps per view instead of the coarse head

    const auto seasonal = holdout_tasks(50, 1, true);
    const auto mixed = holdout_tasks(50, 2, false);
    const auto r1 = eval::run_eval(res.params, seasonal, icfg);
    const auto r2 = eval::run_eval(res.params, mixed, icfg);
    const auto& s = r1.aggregates[0];
    const auto& m = r2.aggregates[0];

    if (r1.n_failed > 0 || r2.n_failed > 0)
        out.fail(fmt("%d seasonal / %d mixed task failures", r1.n_failed, r2.n_failed));
    if (out.pass && !(s.arith_rel_mse < 0.9))
        out.fail(fmt("seasonal relative MSE %.4f >= 0.9 (n=%d)", s.arith_rel_mse, s.n_tasks));
    if (out.pass && !(m.arith_rel_mse < 1.1))
        out.fail(fmt("mixed relative MSE %.4f >= 1.1 (n=%d)", m.arith_rel_mse, m.n_tasks));
    if (out.pass)
        out.note(fmt("%d steps: seasonal rel MSE %.4f (n=%d) < 0.9, mixed %.4f (n=%d) < 1.1",
                     kE2eSteps, s.arith_rel_mse, s.n_tasks, m.arith_rel_mse, m.n_tasks));
    return out;
}

// ---------------------------------------------------------------------------
// 8. dense supervision reaches the masked-suffix baseline sooner

Outcome check_convergence_speed() {
    Outcome out;
    auto sampler = periodic_sampler();
    auto tc = e2e_config(2000);
    tc.eval_every = 100;

    RngStream init_a(kE2eSeed, 0x117);
    auto base = train::train_test_at_end(
        model::init_params<float>(model::toy_config(), init_a), sampler, tc);
    RngStream init_b(kE2eSeed, 0x117);
    auto dense = train::train(model::init_params<float>(model::toy_config(), init_b), sampler,
                              tc);

    const auto at = [](const std::vector<train::EvalPoint>& evals, int step) {
        for (const auto& e : evals)
            if (e.step == step) return e.loss;
        return std::numeric_limits<double>::quiet_NaN();
    };
    const double target = at(base.evals, 2000);
    int reached = -1;
    for (const auto& e : dense.evals)
        if (e.loss <= target) {
            reached = e.step;
            break;
        }
    if (!std::isfinite(target))
        out.fail("masked-suffix run has no step-2000 evaluation");
    else if (reached < 0 || reached >= 2000)
        out.fail(fmt("dense never beat the step-2000 baseline loss %.5f before step 2000",
                     target));
    else
        out.note(fmt("dense matched the baseline's step-2000 loss (%.5f) at step %d: %.2fx "
                     "fewer steps",
                     target, reached, 2000.0 / static_cast<double>(std::max(1, reached))));
    return out;
}

// ---------------------------------------------------------------------------
// 9. generator statistical contracts

Outcome check_synthts_stats() {
    Outcome out;
    using synth::Family;

    synth::GenBatchParams p24;
    p24.seq_len = 256;
    p24.compatible_periods = {24};
    p24.period_weights = {1.0};
    p24.rounds = 2;

    const auto entries_of = [](Family f) {
        std::vector<const synth::GeneratorEntry*> v;
        for (const auto& e : synth::generator_registry())
            if (e.family == f) v.push_back(&e);
        return v;
    };

    // non-negativity
    {
        auto entries = entries_of(Family::floored_periodic);
        RngStream rng(4242);
        for (int i = 0; i < 1000 && out.pass; ++i) {
            const auto& e = *entries[static_cast<std::size_t>(i) % entries.size()];
            RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
            auto x = synth::sample_base(e, p24, sub);
            if (*std::min_element(x.begin(), x.end()) < 0.0)
                out.fail(fmt("%s sample %d went negative", e.name.c_str(), i));
        }
    }

    // integrality
    for (Family f : {Family::integer_count, Family::approx_periodic_integer}) {
        if (!out.pass) break;
        auto entries = entries_of(f);
        RngStream rng(777);
        for (int i = 0; i < 1000 && out.pass; ++i) {
            const auto& e = *entries[static_cast<std::size_t>(i) % entries.size()];
            RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
            auto x = synth::sample_base(e, p24, sub);
            for (double v : x)
                if (v != std::nearbyint(v)) {
                    out.fail(fmt("%s sample %d emitted non-integer %g", e.name.c_str(), i, v));
                    break;
                }
        }
    }

    // spectral peak at the configured period
    {
        synth::GenBatchParams p480 = p24;
        p480.seq_len = 480;
        const std::size_t bin = 480 / 24;
        const Family periodic[] = {
            Family::sum_of_sinusoids,   Family::periodic_random_walk,
            Family::explosive_periodic, Family::phase_shift_periodic,
            Family::floored_periodic,   Family::approx_periodic_integer,
            Family::periodic_mixture,   Family::explosive,
        };
        for (Family f : periodic) {
            if (!out.pass) break;
            auto entries = entries_of(f);
            RngStream rng(1234 + static_cast<std::uint64_t>(f));
            for (int i = 0; i < 1000 && out.pass; ++i) {
                const auto& e = *entries[static_cast<std::size_t>(i) % entries.size()];
                RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
                auto x = synth::sample_base(e, p480, sub);
                auto power = oracle::dft_power(x);
                auto sorted = power;
                std::nth_element(sorted.begin(),
                                 sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                                 sorted.end());
                const double median = sorted[sorted.size() / 2];
                if (power[bin - 1] / std::max(median, 1e-300) <= 3.0)
                    out.fail(fmt("%s sample %d lacks a period-24 peak", e.name.c_str(), i));
            }
        }
    }

    // white-noise autocorrelation bounds
    {
        synth::GenBatchParams p4096 = p24;
        p4096.seq_len = 4096;
        RngStream rng(31337);
        for (const char* name : {"noise/gaussian", "noise/uniform", "noise/laplace"}) {
            if (!out.pass) break;
            const auto& e = synth::find_generator(name);
            for (int i = 0; i < 1000 && out.pass; ++i) {
                RngStream sub = rng.derive(static_cast<std::uint64_t>(i));
                auto x = synth::sample_base(e, p4096, sub);
                for (std::size_t lag : {1u, 2u, 3u, 24u})
                    if (std::abs(oracle::autocorr(x, lag)) >= 0.1) {
                        out.fail(fmt("%s sample %d lag %zu autocorrelation out of bounds", name,
                                     i, lag));
                        break;
                    }
            }
        }
    }

    // full-pipeline determinism
    if (out.pass) {
        synth::BatchSampleConfig sampling;
        sampling.seq_len_range = {128, 512};
        const auto aug = small_aug();
        for (int i = 0; i < 5 && out.pass; ++i) {
            RngStream ra(42, static_cast<std::uint64_t>(i)), rb(42, static_cast<std::uint64_t>(i));
            auto pa = synth::sample_batch_params(ra, sampling);
            auto pb = synth::sample_batch_params(rb, sampling);
            const TimeSeries a = synth::generate(aug, pa, {}, ra);
            const TimeSeries b = synth::generate(aug, pb, {}, rb);
            if (!same_series(a, b)) out.fail(fmt("generate() diverged under fixed seed %d", i));
        }
    }

    out.note("1000 samples per family contract + deterministic generation");
    return out;
}

// ---------------------------------------------------------------------------
// 10. harness integrity and round trips

Outcome check_harness_integrity() {
    Outcome out;

    // the baseline scored against itself is exactly 1.0 in every aggregate
    {
        RngStream rng(1010);
        std::vector<eval::EvalTask> tasks;
        const int horizons[] = {6, 48, 96, 480, 720};
        for (int i = 0; i < 20; ++i) {
            const int h = horizons[i % 5];
            const auto len = static_cast<std::size_t>(256 + h);
            TimeSeries s = random_multichannel(2, len, rng, 0.0);
            eval::EvalTask t;
            t.task_id = "t" + std::to_string(i);
            t.dataset = std::move(s);
            t.context_len = 256;
            t.horizon = h;
            t.season = 24;
            tasks.push_back(std::move(t));
        }
        const auto report = eval::run_eval(eval::baseline_as_model(), tasks);
        if (report.n_failed != 0) out.fail(fmt("%d baseline tasks failed", report.n_failed));
        for (const auto& a : report.aggregates) {
            if (a.n_tasks == 0) continue;
            if (a.n_undefined != 0)
                out.fail(fmt("aggregate %s has %d undefined ratios", a.label.c_str(),
                             a.n_undefined));
            if (a.arith_rel_mse != 1.0 || a.geo_rel_mse != 1.0 || a.arith_rel_mae != 1.0 ||
                a.geo_rel_mae != 1.0)
                out.fail(fmt("aggregate %s is not exactly 1.0", a.label.c_str()));
        }
    }

    // checkpoint round trip is bit-exact
    if (out.pass) {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "ttsm_acceptance";
        fs::create_directories(dir);
        RngStream prng(1011);
        const auto params = model::init_params<float>(model::toy_config(), prng);
        const std::string ck = (dir / "roundtrip.ckpt").string();
        model::save_params(params, ck);
        const auto back = model::load_params<float>(ck);
        std::vector<const Mat<float>*> ta, tb;
        model::for_each_tensor(params, [&](const std::string&, const Mat<float>& t) {
            ta.push_back(&t);
        });
        model::for_each_tensor(back, [&](const std::string&, const Mat<float>& t) {
            tb.push_back(&t);
        });
        if (ta.size() != tb.size() ||
            model::param_count_enumerated(params) != model::param_count_enumerated(back))
            out.fail("checkpoint changed the parameter inventory");
        for (std::size_t k = 0; out.pass && k < ta.size(); ++k) {
            if (ta[k]->rows() != tb[k]->rows() || ta[k]->cols() != tb[k]->cols()) {
                out.fail("checkpoint changed a tensor shape");
                break;
            }
            for (Eigen::Index i = 0; i < ta[k]->size(); ++i)
                if (ta[k]->data()[i] != tb[k]->data()[i]) {
                    out.fail(fmt("checkpoint tensor %zu differs at %lld", k,
                                 static_cast<long long>(i)));
                    break;
                }
        }

        // dataset round trip is bit-exact, including mixed channel counts
        if (out.pass) {
            RngStream rng(1012);
            synth::BatchSampleConfig sampling;
            sampling.seq_len_range = {96, 256};
            std::vector<TimeSeries> series;
            for (int i = 0; i < 3; ++i) {
                auto p = synth::sample_batch_params(rng, sampling);
                series.push_back(synth::generate(small_aug(), p, {}, rng));
            }
            const std::string manifest = (dir / "ds" / "manifest.json").string();
            fs::create_directories(dir / "ds");
            io::write_dataset(series, manifest);
            const auto back2 = io::read_dataset(manifest);
            if (back2.size() != series.size())
                out.fail("dataset round trip changed the series count");
            for (std::size_t i = 0; out.pass && i < series.size(); ++i)
                if (!same_series(series[i], back2[i]))
                    out.fail(fmt("dataset round trip altered series %zu", i));
        }
    }

    out.note("baseline self-score exactly 1.0; checkpoint and dataset round trips bit-exact");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
        {"rolling normalization properties", check_dart_norm},
        {"encoder causality", check_model_causality},
        {"analytic vs numeric gradients", check_gradients},
        {"stride-1 equals dense loss", check_coarse_grid},
        {"strided interleave exactness", check_sifi},
        {"ensembling contracts", check_ensembling},
        {"toy end-to-end vs baseline", check_end_to_end},
        {"dense convergence speed", check_convergence_speed},
        {"generator statistics", check_synthts_stats},
        {"harness integrity", check_harness_integrity},
    };

    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = checks[i].second();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d. %-34s %8.1fs  %s\n", r.pass ? "PASS" : "FAIL", id,
                    checks[i].first.c_str(), secs, r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    if (failures) std::printf("%d of %zu checks failed\n", failures, checks.size());
    return failures;
}
