#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ttsm/common.hpp"

namespace ttsm {

enum class BaseUnit { second, minute, hour, day, week, month };

inline std::int64_t base_unit_seconds(BaseUnit u) {
    switch (u) {
        case BaseUnit::second: return 1;
        case BaseUnit::minute: return 60;
        case BaseUnit::hour: return 3600;
        case BaseUnit::day: return 86400;
        case BaseUnit::week: return 7 * 86400;
        case BaseUnit::month: return 30 * 86400;  // nominal month
    }
    return 1;
}

inline std::string base_unit_name(BaseUnit u) {
    switch (u) {
        case BaseUnit::second: return "second";
        case BaseUnit::minute: return "minute";
        case BaseUnit::hour: return "hour";
        case BaseUnit::day: return "day";
        case BaseUnit::week: return "week";
        case BaseUnit::month: return "month";
    }
    return "second";
}

inline BaseUnit base_unit_from_name(const std::string& name) {
    if (name == "second") return BaseUnit::second;
    if (name == "minute") return BaseUnit::minute;
    if (name == "hour") return BaseUnit::hour;
    if (name == "day") return BaseUnit::day;
    if (name == "week") return BaseUnit::week;
    if (name == "month") return BaseUnit::month;
    throw std::invalid_argument("unknown frequency base unit: " + name);
}

/// Observation frequency as base unit times a positive multiplier,
/// e.g. hourly data is {hour, 1} and 15-minute data is {minute, 15}.
struct FrequencyTag {
    BaseUnit base_unit = BaseUnit::hour;
    std::int64_t multiplier = 1;

    FrequencyTag() = default;
    FrequencyTag(BaseUnit u, std::int64_t m) : base_unit(u), multiplier(m) {
        require(m >= 1, "frequency multiplier must be >= 1");
    }

    std::int64_t step_seconds() const { return base_unit_seconds(base_unit) * multiplier; }

    bool operator==(const FrequencyTag&) const = default;
};

/// Uniformly spaced time index: start epoch (UTC seconds) plus a constant
/// positive step. Irregular spacing is rejected at construction / file load.
struct TimeIndex {
    std::int64_t start = 0;
    std::int64_t step = 1;

    TimeIndex() = default;
    TimeIndex(std::int64_t start_, std::int64_t step_) : start(start_), step(step_) {
        require(step_ > 0, "time index spacing must be positive");
    }

    std::int64_t at(std::int64_t i) const { return start + i * step; }

    bool operator==(const TimeIndex&) const = default;
};

/// Multivariate series of float64 values with a per-point observation mask.
/// `observed(c, t) == true` means the value is real data; false marks a
/// missing point. One channel is the forecast target; channels listed in
/// `known_future` have values available beyond the context at forecast time
/// and are never forecast themselves.
class TimeSeries {
public:
    TimeSeries() = default;

    TimeSeries(std::size_t n_channels, std::size_t length, double fill = 0.0)
        : values_(n_channels, std::vector<double>(length, fill)),
          observed_(n_channels, std::vector<std::uint8_t>(length, 1)) {}

    static TimeSeries from_channels(std::vector<std::vector<double>> channels) {
        TimeSeries ts;
        ts.values_ = std::move(channels);
        for (std::size_t c = 1; c < ts.values_.size(); ++c) {
            require(ts.values_[c].size() == ts.values_[0].size(),
                    "all channels must have the same length");
        }
        ts.observed_.assign(ts.values_.size(),
                            std::vector<std::uint8_t>(ts.length(), 1));
        return ts;
    }

    static TimeSeries univariate(std::vector<double> values) {
        return from_channels({std::move(values)});
    }

    std::size_t n_channels() const { return values_.size(); }
    std::size_t length() const { return values_.empty() ? 0 : values_[0].size(); }

    double value(std::size_t c, std::size_t t) const { return values_[c][t]; }
    double& value(std::size_t c, std::size_t t) { return values_[c][t]; }
    bool observed(std::size_t c, std::size_t t) const { return observed_[c][t] != 0; }
    void set_observed(std::size_t c, std::size_t t, bool obs) { observed_[c][t] = obs ? 1 : 0; }
    void set_missing(std::size_t c, std::size_t t) {
        observed_[c][t] = 0;
        values_[c][t] = std::numeric_limits<double>::quiet_NaN();
    }

    const std::vector<double>& channel(std::size_t c) const { return values_[c]; }
    std::vector<double>& channel(std::size_t c) { return values_[c]; }
    const std::vector<std::uint8_t>& observed_mask(std::size_t c) const { return observed_[c]; }
    std::vector<std::uint8_t>& observed_mask(std::size_t c) { return observed_[c]; }

    void add_channel(std::vector<double> values, std::vector<std::uint8_t> observed = {},
                     std::string name = {}) {
        if (!values_.empty()) require(values.size() == length(), "channel length mismatch");
        if (observed.empty()) observed.assign(values.size(), 1);
        require(observed.size() == values.size(), "mask length mismatch");
        values_.push_back(std::move(values));
        observed_.push_back(std::move(observed));
        if (!channel_names_.empty() || !name.empty()) {
            channel_names_.resize(values_.size() - 1, "");
            channel_names_.push_back(std::move(name));
        }
    }

    int target_channel() const { return target_channel_; }
    void set_target_channel(int m) {
        require(m >= 0 && static_cast<std::size_t>(m) < n_channels(), "target channel out of range");
        require(known_future_.count(m) == 0, "target channel cannot be a known-future covariate");
        target_channel_ = m;
    }

    const std::set<int>& known_future() const { return known_future_; }
    void set_known_future(std::set<int> idx) {
        for (int i : idx) {
            require(i >= 0 && static_cast<std::size_t>(i) < n_channels(),
                    "known-future channel out of range");
            require(i != target_channel_, "target channel cannot be a known-future covariate");
        }
        known_future_ = std::move(idx);
    }
    bool is_known_future(int c) const { return known_future_.count(c) > 0; }

    const std::optional<TimeIndex>& time_index() const { return time_index_; }
    void set_time_index(std::optional<TimeIndex> idx) { time_index_ = std::move(idx); }

    const std::optional<FrequencyTag>& frequency() const { return frequency_; }
    void set_frequency(std::optional<FrequencyTag> f) { frequency_ = std::move(f); }

    const std::vector<std::string>& channel_names() const { return channel_names_; }
    void set_channel_names(std::vector<std::string> names) {
        require(names.size() == n_channels(), "one name per channel required");
        channel_names_ = std::move(names);
    }
    std::string channel_name(std::size_t c) const {
        if (c < channel_names_.size() && !channel_names_[c].empty()) return channel_names_[c];
        return "ch" + std::to_string(c);
    }

    /// Contiguous slice [begin, begin+count) of every channel, preserving
    /// roles, frequency, and a shifted time index.
    TimeSeries slice(std::size_t begin, std::size_t count) const {
        require(begin + count <= length(), "slice out of range");
        TimeSeries out;
        out.values_.reserve(n_channels());
        out.observed_.reserve(n_channels());
        for (std::size_t c = 0; c < n_channels(); ++c) {
            out.values_.emplace_back(values_[c].begin() + begin, values_[c].begin() + begin + count);
            out.observed_.emplace_back(observed_[c].begin() + begin,
                                       observed_[c].begin() + begin + count);
        }
        out.target_channel_ = target_channel_;
        out.known_future_ = known_future_;
        out.frequency_ = frequency_;
        out.channel_names_ = channel_names_;
        if (time_index_) out.time_index_ = TimeIndex(time_index_->at(static_cast<std::int64_t>(begin)),
                                                     time_index_->step);
        return out;
    }

    /// Same series with every value negated (masks and time index unchanged).
    TimeSeries negated() const {
        TimeSeries out = *this;
        for (auto& ch : out.values_)
            for (double& v : ch) v = -v;
        return out;
    }

private:
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<std::uint8_t>> observed_;
    std::optional<TimeIndex> time_index_;
    std::optional<FrequencyTag> frequency_;
    int target_channel_ = 0;
    std::set<int> known_future_;
    std::vector<std::string> channel_names_;
};

// ---------------------------------------------------------------------------
// Patching
// ---------------------------------------------------------------------------

/// A channel chunked into fixed-length patches. The sequence is left-padded
/// to a multiple of patch_len so the most recent observation always ends the
/// final patch; pad slots are flagged in `is_pad`, never encoded as values.
struct Patches {
    Matd values;                       // (num_patches, patch_len)
    Mat<std::uint8_t> is_pad;          // true where the slot is padding
    std::size_t pad_len = 0;           // number of pad slots (all in patch 0)
    std::size_t patch_len = 0;

    std::size_t num_patches() const { return static_cast<std::size_t>(values.rows()); }

    /// Original-sequence index of patch slot (i, j); only valid for non-pad slots.
    std::int64_t source_index(std::size_t i, std::size_t j) const {
        return static_cast<std::int64_t>(i * patch_len + j) - static_cast<std::int64_t>(pad_len);
    }

    /// Original-sequence index of the last slot of patch i.
    std::int64_t patch_end_index(std::size_t i) const {
        return source_index(i, patch_len - 1);
    }
};

inline Patches patchify(const std::vector<double>& series, std::size_t patch_len) {
    require(patch_len >= 1, "patch_len must be >= 1");
    if (series.empty()) throw std::invalid_argument("empty series");
    const std::size_t n = series.size();
    const std::size_t num_patches = (n + patch_len - 1) / patch_len;
    const std::size_t padded = num_patches * patch_len;
    const std::size_t pad = padded - n;

    Patches out;
    out.patch_len = patch_len;
    out.pad_len = pad;
    out.values = Matd::Zero(static_cast<Eigen::Index>(num_patches),
                            static_cast<Eigen::Index>(patch_len));
    out.is_pad = Mat<std::uint8_t>::Zero(static_cast<Eigen::Index>(num_patches),
                                         static_cast<Eigen::Index>(patch_len));
    for (std::size_t i = 0; i < num_patches; ++i) {
        for (std::size_t j = 0; j < patch_len; ++j) {
            const std::size_t flat = i * patch_len + j;
            if (flat < pad) {
                out.is_pad(i, j) = 1;
            } else {
                out.values(i, j) = series[flat - pad];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Strided views
// ---------------------------------------------------------------------------

/// View of every stride-th point of a parent series, starting at `offset`.
/// Element j of the view maps to parent index offset + j * stride.
struct StridedView {
    const TimeSeries* parent = nullptr;
    std::size_t stride = 1;
    std::size_t offset = 0;

    std::size_t length() const {
        const std::size_t T = parent->length();
        if (offset >= T) return 0;
        return (T - offset + stride - 1) / stride;
    }

    std::size_t parent_index(std::size_t j) const { return offset + j * stride; }

    /// Materialize the view as an owning TimeSeries; the frequency multiplier
    /// is scaled by the stride so the view remains a valid coarser series.
    TimeSeries materialize() const {
        const std::size_t n = length();
        TimeSeries out(parent->n_channels(), n);
        for (std::size_t c = 0; c < parent->n_channels(); ++c) {
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t t = parent_index(j);
                out.value(c, j) = parent->value(c, t);
                out.set_observed(c, j, parent->observed(c, t));
            }
        }
        out.set_target_channel(parent->target_channel());
        out.set_known_future(parent->known_future());
        if (!parent->channel_names().empty()) out.set_channel_names(parent->channel_names());
        if (parent->frequency()) {
            FrequencyTag f = *parent->frequency();
            f.multiplier *= static_cast<std::int64_t>(stride);
            out.set_frequency(f);
        }
        if (parent->time_index()) {
            const TimeIndex& ti = *parent->time_index();
            out.set_time_index(TimeIndex(ti.at(static_cast<std::int64_t>(offset)),
                                         ti.step * static_cast<std::int64_t>(stride)));
        }
        return out;
    }
};

/// The n strided views of a series (offsets 0..n-1); together they partition
/// the index set {0..T-1}.
inline std::vector<StridedView> strided_views(const TimeSeries& series, std::size_t stride) {
    require(stride >= 1, "stride must be >= 1");
    if (stride > series.length()) throw std::invalid_argument("stride exceeds length");
    std::vector<StridedView> views;
    views.reserve(stride);
    for (std::size_t k = 0; k < stride; ++k) views.push_back({&series, stride, k});
    return views;
}

// ---------------------------------------------------------------------------
// Seasonal naive baseline
// ---------------------------------------------------------------------------

struct SeasonalNaiveResult {
    std::vector<double> forecast;
    bool fell_back_to_last_value = false;  // history was shorter than the season
};

/// Repeats the most recent same-phase observation: step h (1-based) forecasts
/// history[T - season + ((h-1) mod season)]. Histories shorter than the
/// season fall back to last-value carry-forward, flagged in the result.
inline SeasonalNaiveResult seasonal_naive(const std::vector<double>& history,
                                          std::size_t season, std::size_t horizon) {
    require(season >= 1, "season must be >= 1");
    require(!history.empty(), "empty series");
    SeasonalNaiveResult out;
    if (history.size() < season) {
        season = 1;
        out.fell_back_to_last_value = true;
    }
    const std::size_t T = history.size();
    out.forecast.resize(horizon);
    for (std::size_t h = 1; h <= horizon; ++h) {
        out.forecast[h - 1] = history[T - season + ((h - 1) % season)];
    }
    return out;
}

}  // namespace ttsm
