#pragma once

#include <cstdint>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/dart_norm.hpp"
#include "ttsm/model/config.hpp"
#include "ttsm/time_series.hpp"

namespace ttsm::model {

enum class ChannelRole : int { target = 0, covariate = 1, known_future = 2 };

/// Model-ready view of a context window: per (channel, patch) rows of
/// concatenated [x | d | r] slots, patch-level missing flags, channel roles,
/// per-channel anchor statistics for denormalization, and the normalized
/// future patches of known-future covariates.
template <typename Scalar>
struct PatchBatch {
    int n_channels = 0;
    int n_patches = 0;   // per channel, excluding pad tokens
    int n_pad = 0;       // learnable pad tokens prepended per channel
    int patch_len = 0;
    int horizon = 0;

    Mat<Scalar> inputs;                 // (C * n_patches, 3 * patch_len), zero at missing slots
    std::vector<std::uint8_t> missing;  // (C * n_patches * patch_len), 1 = missing or pad slot
    std::vector<int> roles;             // per channel, ChannelRole values
    std::vector<double> anchor_mean;    // per channel, rolling mean at the context end
    std::vector<double> anchor_std;     // per channel, clamped rolling std at the context end

    Mat<Scalar> future;                 // (n_future_tokens, patch_len) normalized kf patches

    int seq_rows() const { return n_pad + n_patches; }
    int rows() const { return n_channels * seq_rows(); }
    bool slot_missing(int c, int p, int j) const {
        return missing[static_cast<std::size_t>((c * n_patches + p) * patch_len + j)] != 0;
    }
};

/// Normalizes the first `context_len` points of every channel, patches the
/// normalized values and drift features, and collects the known-future
/// covariates over `horizon` steps past the context (right-padded with zeros
/// where the series ends early).
template <typename Scalar>
PatchBatch<Scalar> build_patch_batch(const TimeSeries& series, std::size_t context_len,
                                     int horizon, const ModelConfig& cfg) {
    cfg.validate();
    require(series.n_channels() > 0, "series has no channels");
    require(context_len >= 1, "context must be nonempty");
    require(context_len <= series.length(), "context exceeds series length");
    require(context_len <= static_cast<std::size_t>(cfg.max_context),
            "context exceeds max_context");
    require(horizon >= 0, "horizon must be non-negative");
    require(horizon <= cfg.max_horizon, "horizon exceeds max_horizon");

    const int P = cfg.patch_len;
    const int C = static_cast<int>(series.n_channels());

    PatchBatch<Scalar> b;
    b.n_channels = C;
    b.n_pad = cfg.n_pad_tokens;
    b.patch_len = P;
    b.horizon = horizon;
    b.roles.resize(static_cast<std::size_t>(C));
    b.anchor_mean.resize(static_cast<std::size_t>(C));
    b.anchor_std.resize(static_cast<std::size_t>(C));

    const int n_patches = static_cast<int>((context_len + static_cast<std::size_t>(P) - 1) /
                                           static_cast<std::size_t>(P));
    b.n_patches = n_patches;
    b.inputs = Mat<Scalar>::Zero(C * n_patches, 3 * P);
    b.missing.assign(static_cast<std::size_t>(C * n_patches * P), 0);

    for (int c = 0; c < C; ++c) {
        std::vector<double> y(series.channel(static_cast<std::size_t>(c)).begin(),
                              series.channel(static_cast<std::size_t>(c)).begin() +
                                  static_cast<std::ptrdiff_t>(context_len));
        std::vector<std::uint8_t> mask(series.observed_mask(static_cast<std::size_t>(c)).begin(),
                                       series.observed_mask(static_cast<std::size_t>(c)).begin() +
                                           static_cast<std::ptrdiff_t>(context_len));
        auto nv = dart::normalize(y, mask);
        b.anchor_mean[static_cast<std::size_t>(c)] = nv.stats.m.back();
        b.anchor_std[static_cast<std::size_t>(c)] = nv.stats.s_clamped.back();

        auto px = patchify(nv.x, static_cast<std::size_t>(P));
        auto pd = patchify(nv.d, static_cast<std::size_t>(P));
        auto pr = patchify(nv.r, static_cast<std::size_t>(P));

        for (int p = 0; p < n_patches; ++p) {
            const int row = c * n_patches + p;
            for (int j = 0; j < P; ++j) {
                const bool pad = px.is_pad(p, j) != 0;
                const auto src = px.source_index(static_cast<std::size_t>(p),
                                                 static_cast<std::size_t>(j));
                const bool miss = pad || mask[static_cast<std::size_t>(src)] == 0;
                b.missing[static_cast<std::size_t>(row * P + j)] = miss ? 1 : 0;
                if (!miss) {
                    b.inputs(row, j) = static_cast<Scalar>(px.values(p, j));
                    b.inputs(row, P + j) = static_cast<Scalar>(pd.values(p, j));
                    b.inputs(row, 2 * P + j) = static_cast<Scalar>(pr.values(p, j));
                }
            }
        }

        if (series.is_known_future(c)) b.roles[static_cast<std::size_t>(c)] =
            static_cast<int>(ChannelRole::known_future);
        else if (c == series.target_channel()) b.roles[static_cast<std::size_t>(c)] =
            static_cast<int>(ChannelRole::target);
        else b.roles[static_cast<std::size_t>(c)] = static_cast<int>(ChannelRole::covariate);
    }

    // future covariate patches, normalized by the emitting channel's anchor
    if (horizon > 0 && !series.known_future().empty()) {
        const int n_fpatches = (horizon + P - 1) / P;
        const int n_kf = static_cast<int>(series.known_future().size());
        b.future = Mat<Scalar>::Zero(n_kf * n_fpatches, P);
        int kf_idx = 0;
        for (int c : series.known_future()) {
            const double m = b.anchor_mean[static_cast<std::size_t>(c)];
            const double s = b.anchor_std[static_cast<std::size_t>(c)];
            for (int h = 0; h < horizon; ++h) {
                const std::size_t t = context_len + static_cast<std::size_t>(h);
                if (t >= series.length()) break;  // remaining slots stay zero
                if (!series.observed(static_cast<std::size_t>(c), t)) continue;
                const double z = (series.value(static_cast<std::size_t>(c), t) - m) / s;
                b.future(kf_idx * n_fpatches + h / P, h % P) = static_cast<Scalar>(z);
            }
            ++kf_idx;
        }
    }
    return b;
}

}  // namespace ttsm::model
