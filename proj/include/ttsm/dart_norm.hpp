#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ttsm/common.hpp"

namespace ttsm::dart {

/// Lower clamp applied to the rolling standard deviation before any division.
inline constexpr double kEpsStd = 1e-8;
/// Symmetric clip bound on the drift features d_t and r_t.
inline constexpr double kDriftClip = 10.0;

/// Rolling (prefix) statistics over the observed points of a series.
/// m[t] and s[t] depend only on y[0..t]; missing points are excluded and the
/// statistics carry forward over them. s is the population standard deviation.
struct RollingStats {
    std::vector<double> m;          // rolling mean
    std::vector<double> s;          // rolling population std (unclamped)
    std::vector<double> s_clamped;  // max(s, kEpsStd)
    std::vector<std::int64_t> count;  // observed points in y[0..t]
};

/// Normalized series plus the drift features that restore identifiability
/// under rolling scaling: x_t = (y_t - m_t)/s_t, d_t tracks the stepwise
/// mean change scaled by the previous std, r_t the log std ratio.
struct NormalizedView {
    std::vector<double> x;
    std::vector<double> d;
    std::vector<double> r;
    RollingStats stats;
};

/// Forecast targets anchored to the normalization statistics at the forecast
/// origin T: targets[j] = (y[T+1+j] - m_T) / s_T.
struct AnchoredTargets {
    std::size_t anchor_index = 0;
    std::size_t horizon = 0;
    std::vector<double> targets;
    std::vector<std::uint8_t> observed;  // false entries are excluded from the loss
    double anchor_mean = 0.0;
    double anchor_std = kEpsStd;  // clamped
};

/// Streaming normalization state; extending a series point by point through
/// update() reproduces the batch computation.
struct OnlineState {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations (Welford)
    double prev_s_raw = 0.0;
    double prev_s_clamped = kEpsStd;
    double prev_mean = 0.0;
    bool has_prev = false;

    double std_raw() const {
        return count > 0 ? std::sqrt(m2 / static_cast<double>(count)) : 0.0;
    }
};

struct OnlineStep {
    double x = 0.0;
    double d = 0.0;
    double r = 0.0;
    double m = 0.0;
    double s_clamped = kEpsStd;
};

namespace detail {

inline double clip_drift(double v) {
    if (v > kDriftClip) return kDriftClip;
    if (v < -kDriftClip) return -kDriftClip;
    return v;
}

}  // namespace detail

/// One streaming step. When `observed` is false the statistics are left
/// untouched and x is reported as 0.
inline OnlineStep online_update(OnlineState& st, double y, bool observed) {
    const double m_before = st.count > 0 ? st.mean : 0.0;
    const double s_raw_before = st.std_raw();
    const double s_clamped_before = std::max(s_raw_before, kEpsStd);

    if (observed) {
        st.count += 1;
        const double delta = y - st.mean;
        st.mean += delta / static_cast<double>(st.count);
        st.m2 += delta * (y - st.mean);
        if (st.m2 < 0.0) st.m2 = 0.0;  // guard against rounding
    }

    OnlineStep out;
    out.m = st.count > 0 ? st.mean : 0.0;
    const double s_raw = st.std_raw();
    out.s_clamped = std::max(s_raw, kEpsStd);
    out.x = observed ? (y - out.m) / out.s_clamped : 0.0;

    if (st.has_prev && s_raw_before > kEpsStd) {
        out.d = detail::clip_drift((out.m - m_before) / s_clamped_before);
        out.r = detail::clip_drift(std::log(out.s_clamped / s_clamped_before));
    } else {
        out.d = 0.0;
        out.r = 0.0;
    }

    st.has_prev = true;
    st.prev_mean = m_before;
    st.prev_s_raw = s_raw_before;
    st.prev_s_clamped = s_clamped_before;
    return out;
}

inline RollingStats rolling_stats(const std::vector<double>& y,
                                  const std::vector<std::uint8_t>& mask = {}) {
    const std::size_t n = y.size();
    require(n > 0, "empty series");
    RollingStats rs;
    rs.m.resize(n);
    rs.s.resize(n);
    rs.s_clamped.resize(n);
    rs.count.resize(n);
    OnlineState st;
    for (std::size_t t = 0; t < n; ++t) {
        const bool obs = mask.empty() || mask[t] != 0;
        if (obs) {
            st.count += 1;
            const double delta = y[t] - st.mean;
            st.mean += delta / static_cast<double>(st.count);
            st.m2 += delta * (y[t] - st.mean);
            if (st.m2 < 0.0) st.m2 = 0.0;
        }
        rs.count[t] = st.count;
        rs.m[t] = st.count > 0 ? st.mean : 0.0;
        rs.s[t] = st.std_raw();
        rs.s_clamped[t] = std::max(rs.s[t], kEpsStd);
    }
    if (st.count == 0) throw std::invalid_argument("no observations");
    return rs;
}

inline NormalizedView normalize(const std::vector<double>& y,
                                const std::vector<std::uint8_t>& mask = {}) {
    NormalizedView nv;
    nv.stats = rolling_stats(y, mask);
    const std::size_t n = y.size();
    nv.x.resize(n);
    nv.d.assign(n, 0.0);
    nv.r.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const bool obs = mask.empty() || mask[t] != 0;
        nv.x[t] = obs ? (y[t] - nv.stats.m[t]) / nv.stats.s_clamped[t] : 0.0;
        if (t >= 1 && nv.stats.s[t - 1] > kEpsStd) {
            nv.d[t] = detail::clip_drift((nv.stats.m[t] - nv.stats.m[t - 1]) /
                                         nv.stats.s_clamped[t - 1]);
            nv.r[t] = detail::clip_drift(std::log(nv.stats.s_clamped[t] /
                                                  nv.stats.s_clamped[t - 1]));
        }
    }
    return nv;
}

/// Targets for forecasting y[T+1..T+h] anchored at the rolling statistics of
/// index T. Statistics are computed from y[0..T] only; the future values are
/// used solely as targets.
inline AnchoredTargets anchored_targets(const std::vector<double>& y, std::size_t anchor,
                                        std::size_t horizon,
                                        const std::vector<std::uint8_t>& mask = {}) {
    require(anchor < y.size(), "anchor index out of range");
    if (anchor + horizon >= y.size()) {
        const std::size_t max_h = y.size() - 1 - anchor;
        throw std::invalid_argument("horizon exceeds available future (max feasible h = " +
                                    std::to_string(max_h) + ")");
    }
    std::vector<double> prefix(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(anchor) + 1);
    std::vector<std::uint8_t> prefix_mask;
    if (!mask.empty())
        prefix_mask.assign(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(anchor) + 1);
    RollingStats rs = rolling_stats(prefix, prefix_mask);

    AnchoredTargets at;
    at.anchor_index = anchor;
    at.horizon = horizon;
    at.anchor_mean = rs.m[anchor];
    at.anchor_std = rs.s_clamped[anchor];
    at.targets.resize(horizon);
    at.observed.resize(horizon);
    for (std::size_t j = 0; j < horizon; ++j) {
        const std::size_t t = anchor + 1 + j;
        const bool obs = mask.empty() || mask[t] != 0;
        at.observed[j] = obs ? 1 : 0;
        at.targets[j] = obs ? (y[t] - at.anchor_mean) / at.anchor_std : 0.0;
    }
    return at;
}

/// Exact inverse of the anchored-target map: pred * s_T + m_T.
inline std::vector<double> denormalize(const std::vector<double>& pred, double anchor_mean,
                                       double anchor_std_clamped) {
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        out[i] = pred[i] * anchor_std_clamped + anchor_mean;
    return out;
}

}  // namespace ttsm::dart
