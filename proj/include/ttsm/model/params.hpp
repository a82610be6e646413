#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/model/config.hpp"

namespace ttsm::model {

// Weight matrices are stored (out_features, in_features) and applied to
// row-vector activations as X * W^T. Biases and norm gains are (1, n);
// the SwiGLU beta is a (1, 1) tensor so the registry can treat every
// parameter uniformly.

template <typename Scalar>
struct AttnParams {
    Mat<Scalar> wq, wk, wv, wo;  // (H, H) each
};

template <typename Scalar>
struct FfnParams {
    Mat<Scalar> w1;    // (F, H)
    Mat<Scalar> b1;    // (1, F)
    Mat<Scalar> w2;    // (H, H)
    Mat<Scalar> c2;    // (1, H)
    Mat<Scalar> w3;    // (H, F)
    Mat<Scalar> beta;  // (1, 1)
};

template <typename Scalar>
struct BlockParams {
    bool spatial = false;
    Mat<Scalar> norm1;  // (1, H); empty in the first block (no initial norm)
    AttnParams<Scalar> attn;
    Mat<Scalar> norm2;  // (1, H)
    FfnParams<Scalar> ffn;
};

template <typename Scalar>
struct CrossHeadParams {
    Mat<Scalar> fembed;  // (dc, P): future covariate patch -> token
    Mat<Scalar> wq;      // (dc, H)
    Mat<Scalar> wk;      // (dc, dc)
    Mat<Scalar> wv;      // (dc, dc)
    Mat<Scalar> wo;      // (hpp, dc)
    Mat<Scalar> bias;    // (1, hpp)
};

template <typename Scalar>
struct ModelParams {
    ModelConfig config;

    Mat<Scalar> patch_embed;    // (H, 3P)
    Mat<Scalar> missing_embed;  // (P, H), row j replaces slot j's contribution
    Mat<Scalar> pad_tokens;     // (n_pad_tokens, H), shared across channels
    Mat<Scalar> role_embed;     // (3, H): target / covariate / known-future

    std::vector<BlockParams<Scalar>> blocks;
    Mat<Scalar> final_norm;  // (1, H)

    Mat<Scalar> dense_w;  // (hpp, H)
    Mat<Scalar> dense_b;  // (1, hpp)

    Mat<Scalar> long_proj1;  // rank > 0: (r, H); rank == 0: (max_horizon, H)
    Mat<Scalar> long_proj2;  // rank > 0: (max_horizon, r); else empty
    Mat<Scalar> long_b;      // (1, max_horizon)

    CrossHeadParams<Scalar> cross;
};

/// Visits every non-empty parameter tensor in a fixed order. The same order
/// drives serialization, gradient storage, and the optimizer state.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
    fn("patch_embed", p.patch_embed);
    fn("missing_embed", p.missing_embed);
    if (p.pad_tokens.size() > 0) fn("pad_tokens", p.pad_tokens);
    fn("role_embed", p.role_embed);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& blk = p.blocks[i];
        const std::string base = "blocks." + std::to_string(i) + ".";
        if (blk.norm1.size() > 0) fn(base + "norm1", blk.norm1);
        fn(base + "attn.wq", blk.attn.wq);
        fn(base + "attn.wk", blk.attn.wk);
        fn(base + "attn.wv", blk.attn.wv);
        fn(base + "attn.wo", blk.attn.wo);
        fn(base + "norm2", blk.norm2);
        fn(base + "ffn.w1", blk.ffn.w1);
        fn(base + "ffn.b1", blk.ffn.b1);
        fn(base + "ffn.w2", blk.ffn.w2);
        fn(base + "ffn.c2", blk.ffn.c2);
        fn(base + "ffn.w3", blk.ffn.w3);
        fn(base + "ffn.beta", blk.ffn.beta);
    }
    fn("final_norm", p.final_norm);
    fn("dense_w", p.dense_w);
    fn("dense_b", p.dense_b);
    fn("long_proj1", p.long_proj1);
    if (p.long_proj2.size() > 0) fn("long_proj2", p.long_proj2);
    fn("long_b", p.long_b);
    fn("cross.fembed", p.cross.fembed);
    fn("cross.wq", p.cross.wq);
    fn("cross.wk", p.cross.wk);
    fn("cross.wv", p.cross.wv);
    fn("cross.wo", p.cross.wo);
    fn("cross.bias", p.cross.bias);
}

template <typename Scalar>
std::int64_t param_count_enumerated(const ModelParams<Scalar>& p) {
    std::int64_t total = 0;
    for_each_tensor(p, [&](const std::string&, const Mat<Scalar>& t) { total += t.size(); });
    return total;
}

namespace detail {

template <typename Scalar>
void fill_normal(Mat<Scalar>& m, RngStream& rng, double std) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = static_cast<Scalar>(rng.normal(0.0, std));
}

}  // namespace detail

/// Allocates every tensor of `p` to the shapes dictated by `p.config`,
/// zero-filled. Used when the values come from elsewhere (checkpoint load).
template <typename Scalar>
void allocate_params(ModelParams<Scalar>& p) {
    const ModelConfig& cfg = p.config;
    cfg.validate();
    const int P = cfg.patch_len, H = cfg.hidden_size, F = cfg.ffn_dim();
    const int hpp = cfg.head_horizon_per_patch, M = cfg.max_horizon;
    const int dc = cfg.cross_dim, r = cfg.long_rank;

    p.patch_embed = Mat<Scalar>::Zero(H, 3 * P);
    p.missing_embed = Mat<Scalar>::Zero(P, H);
    p.pad_tokens = cfg.n_pad_tokens > 0 ? Mat<Scalar>::Zero(cfg.n_pad_tokens, H) : Mat<Scalar>();
    p.role_embed = Mat<Scalar>::Zero(3, H);
    p.blocks.assign(static_cast<std::size_t>(cfg.n_layers()), BlockParams<Scalar>{});
    for (int l = 0; l < cfg.n_layers(); ++l) {
        auto& blk = p.blocks[static_cast<std::size_t>(l)];
        blk.spatial = cfg.layer_is_spatial(l);
        blk.norm1 = l == 0 ? Mat<Scalar>() : Mat<Scalar>::Zero(1, H);
        blk.attn.wq = Mat<Scalar>::Zero(H, H);
        blk.attn.wk = Mat<Scalar>::Zero(H, H);
        blk.attn.wv = Mat<Scalar>::Zero(H, H);
        blk.attn.wo = Mat<Scalar>::Zero(H, H);
        blk.norm2 = Mat<Scalar>::Zero(1, H);
        blk.ffn.w1 = Mat<Scalar>::Zero(F, H);
        blk.ffn.b1 = Mat<Scalar>::Zero(1, F);
        blk.ffn.w2 = Mat<Scalar>::Zero(H, H);
        blk.ffn.c2 = Mat<Scalar>::Zero(1, H);
        blk.ffn.w3 = Mat<Scalar>::Zero(H, F);
        blk.ffn.beta = Mat<Scalar>::Zero(1, 1);
    }
    p.final_norm = Mat<Scalar>::Zero(1, H);
    p.dense_w = Mat<Scalar>::Zero(hpp, H);
    p.dense_b = Mat<Scalar>::Zero(1, hpp);
    p.long_proj1 = r > 0 ? Mat<Scalar>::Zero(r, H) : Mat<Scalar>::Zero(M, H);
    p.long_proj2 = r > 0 ? Mat<Scalar>::Zero(M, r) : Mat<Scalar>();
    p.long_b = Mat<Scalar>::Zero(1, M);
    p.cross.fembed = Mat<Scalar>::Zero(dc, P);
    p.cross.wq = Mat<Scalar>::Zero(dc, H);
    p.cross.wk = Mat<Scalar>::Zero(dc, dc);
    p.cross.wv = Mat<Scalar>::Zero(dc, dc);
    p.cross.wo = Mat<Scalar>::Zero(hpp, dc);
    p.cross.bias = Mat<Scalar>::Zero(1, hpp);
}

/// Allocates and initializes all tensors for a config. Linear weights use
/// 1/sqrt(fan_in) scaling; gains are 1, beta is 1, biases are 0, learnable
/// token tables start small.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& cfg, RngStream& rng) {
    cfg.validate();
    const int P = cfg.patch_len, H = cfg.hidden_size, F = cfg.ffn_dim();
    const int hpp = cfg.head_horizon_per_patch, M = cfg.max_horizon;
    const int dc = cfg.cross_dim, r = cfg.long_rank;

    ModelParams<Scalar> p;
    p.config = cfg;

    auto linear = [&](int out, int in) {
        Mat<Scalar> m(out, in);
        detail::fill_normal(m, rng, 1.0 / std::sqrt(static_cast<double>(in)));
        return m;
    };
    auto table = [&](int rows, int cols) {
        Mat<Scalar> m(rows, cols);
        detail::fill_normal(m, rng, 0.02);
        return m;
    };

    p.patch_embed = linear(H, 3 * P);
    p.missing_embed = table(P, H);
    p.pad_tokens = cfg.n_pad_tokens > 0 ? table(cfg.n_pad_tokens, H) : Mat<Scalar>();
    p.role_embed = table(3, H);

    p.blocks.resize(static_cast<std::size_t>(cfg.n_layers()));
    for (int l = 0; l < cfg.n_layers(); ++l) {
        auto& blk = p.blocks[static_cast<std::size_t>(l)];
        blk.spatial = cfg.layer_is_spatial(l);
        blk.norm1 = l == 0 ? Mat<Scalar>() : Mat<Scalar>::Ones(1, H);
        blk.attn.wq = linear(H, H);
        blk.attn.wk = linear(H, H);
        blk.attn.wv = linear(H, H);
        blk.attn.wo = linear(H, H);
        blk.norm2 = Mat<Scalar>::Ones(1, H);
        blk.ffn.w1 = linear(F, H);
        blk.ffn.b1 = Mat<Scalar>::Zero(1, F);
        blk.ffn.w2 = linear(H, H);
        blk.ffn.c2 = Mat<Scalar>::Zero(1, H);
        blk.ffn.w3 = linear(H, F);
        blk.ffn.beta = Mat<Scalar>::Ones(1, 1);
    }

    p.final_norm = Mat<Scalar>::Ones(1, H);
    p.dense_w = linear(hpp, H);
    p.dense_b = Mat<Scalar>::Zero(1, hpp);
    if (r > 0) {
        p.long_proj1 = linear(r, H);
        p.long_proj2 = linear(M, r);
    } else {
        p.long_proj1 = linear(M, H);
        p.long_proj2 = Mat<Scalar>();
    }
    p.long_b = Mat<Scalar>::Zero(1, M);

    p.cross.fembed = linear(dc, P);
    p.cross.wq = linear(dc, H);
    p.cross.wk = linear(dc, dc);
    p.cross.wv = linear(dc, dc);
    p.cross.wo = linear(hpp, dc);
    p.cross.bias = Mat<Scalar>::Zero(1, hpp);
    return p;
}

/// Same tensor structure as `like` with every entry zero; gradient storage.
template <typename Scalar>
ModelParams<Scalar> zeros_like(const ModelParams<Scalar>& like) {
    ModelParams<Scalar> z = like;
    for_each_tensor(z, [](const std::string&, Mat<Scalar>& t) { t.setZero(); });
    return z;
}

template <typename Scalar, typename Other>
ModelParams<Scalar> cast_params(const ModelParams<Other>& src) {
    ModelParams<Scalar> dst;
    dst.config = src.config;
    dst.blocks.resize(src.blocks.size());
    dst.patch_embed = src.patch_embed.template cast<Scalar>();
    dst.missing_embed = src.missing_embed.template cast<Scalar>();
    dst.pad_tokens = src.pad_tokens.template cast<Scalar>();
    dst.role_embed = src.role_embed.template cast<Scalar>();
    for (std::size_t i = 0; i < src.blocks.size(); ++i) {
        const auto& s = src.blocks[i];
        auto& d = dst.blocks[i];
        d.spatial = s.spatial;
        d.norm1 = s.norm1.template cast<Scalar>();
        d.attn.wq = s.attn.wq.template cast<Scalar>();
        d.attn.wk = s.attn.wk.template cast<Scalar>();
        d.attn.wv = s.attn.wv.template cast<Scalar>();
        d.attn.wo = s.attn.wo.template cast<Scalar>();
        d.norm2 = s.norm2.template cast<Scalar>();
        d.ffn.w1 = s.ffn.w1.template cast<Scalar>();
        d.ffn.b1 = s.ffn.b1.template cast<Scalar>();
        d.ffn.w2 = s.ffn.w2.template cast<Scalar>();
        d.ffn.c2 = s.ffn.c2.template cast<Scalar>();
        d.ffn.w3 = s.ffn.w3.template cast<Scalar>();
        d.ffn.beta = s.ffn.beta.template cast<Scalar>();
    }
    dst.final_norm = src.final_norm.template cast<Scalar>();
    dst.dense_w = src.dense_w.template cast<Scalar>();
    dst.dense_b = src.dense_b.template cast<Scalar>();
    dst.long_proj1 = src.long_proj1.template cast<Scalar>();
    dst.long_proj2 = src.long_proj2.template cast<Scalar>();
    dst.long_b = src.long_b.template cast<Scalar>();
    dst.cross.fembed = src.cross.fembed.template cast<Scalar>();
    dst.cross.wq = src.cross.wq.template cast<Scalar>();
    dst.cross.wk = src.cross.wk.template cast<Scalar>();
    dst.cross.wv = src.cross.wv.template cast<Scalar>();
    dst.cross.wo = src.cross.wo.template cast<Scalar>();
    dst.cross.bias = src.cross.bias.template cast<Scalar>();
    return dst;
}

}  // namespace ttsm::model
