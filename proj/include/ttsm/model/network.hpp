#pragma once

// Patched encoder forward/backward. Hidden states are (C * S, H) row-major
// where S = n_pad_tokens + n_patches; channel c occupies rows [c*S, (c+1)*S).
// Temporal attention runs causally inside each channel's row span with rotary
// positions; spatial attention runs across channels at each non-pad position.
// Backward is hand-derived and validated against finite differences in
// float64 (see tests).

#include <cmath>
#include <vector>

#include "ttsm/common.hpp"
#include "ttsm/model/batch.hpp"
#include "ttsm/model/config.hpp"
#include "ttsm/model/params.hpp"
#include "ttsm/time_series.hpp"

namespace ttsm::model {

inline constexpr double kNormEps = 1e-6;
inline constexpr double kRopeTheta = 10000.0;

template <typename Scalar>
struct ForecastOutput {
    Mat<Scalar> dense;         // (C * n_patches, head_horizon_per_patch)
    Mat<Scalar> long_horizon;  // (C, max_horizon), anchored at the final patch
    int n_channels = 0;
    int n_patches = 0;
    std::vector<int> roles;
    std::vector<double> anchor_mean, anchor_std;
};

// ---------------------------------------------------------------------------
// Traces (activation caches for backward)

template <typename Scalar>
struct AttnTrace {
    Mat<Scalar> q, k, v;              // (N, H); q and k post-rotation
    std::vector<Mat<Scalar>> probs;   // softmax per (group, head)
    Mat<Scalar> ctx;                  // (N, H) pre-output-projection
};

template <typename Scalar>
struct BlockTrace {
    Mat<Scalar> x_in;      // (N, H)
    Vec<Scalar> inv_rms1;  // per-row; empty when the block has no input norm
    Mat<Scalar> normed1;
    AttnTrace<Scalar> attn;
    Mat<Scalar> a;         // x_in + attention residual
    Vec<Scalar> inv_rms2;
    Mat<Scalar> normed2;
    Mat<Scalar> u, sig, s, m, g;  // SwiGLU internals
};

template <typename Scalar>
struct Workspace {
    Mat<Scalar> h0;
    std::vector<BlockTrace<Scalar>> blocks;
    Mat<Scalar> h_enc;        // encoder output
    Vec<Scalar> inv_rms_fin;
    Mat<Scalar> h_normed;     // after final norm, consumed by all heads
    Mat<Scalar> hp;           // (C * n_patches, H) head rows
    Mat<Scalar> hl;           // (C, H) final-position rows
    Mat<Scalar> ftok, fk, fv; // future covariate tokens
    Mat<Scalar> fq, fprobs, fctx;
    Mat<Scalar> long_t;       // (C, r) factored long-head intermediate
};

// ---------------------------------------------------------------------------
// Building blocks

namespace detail {

template <typename Scalar>
void rms_forward(const Mat<Scalar>& x, const Mat<Scalar>& gain, Mat<Scalar>& y,
                 Vec<Scalar>& inv_rms) {
    const auto n = static_cast<Scalar>(x.cols());
    inv_rms.resize(x.rows());
    y.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Scalar ms = x.row(i).squaredNorm() / n + static_cast<Scalar>(kNormEps);
        inv_rms(i) = Scalar(1) / std::sqrt(ms);
        y.row(i) = x.row(i).cwiseProduct(gain.row(0)) * inv_rms(i);
    }
}

template <typename Scalar>
void rms_backward(const Mat<Scalar>& x, const Mat<Scalar>& gain, const Vec<Scalar>& inv_rms,
                  const Mat<Scalar>& dy, Mat<Scalar>& dx_accum, Mat<Scalar>& dgain) {
    const auto n = static_cast<Scalar>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Scalar ir = inv_rms(i);
        auto xr = x.row(i);
        // dxhat = dy * gain; xhat = x * inv_rms
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dxhat = dy.row(i).cwiseProduct(gain.row(0));
        dgain.row(0) += dy.row(i).cwiseProduct(xr) * ir;
        const Scalar dot = dxhat.cwiseProduct(xr).sum();
        dx_accum.row(i) += dxhat * ir - xr * (dot * ir * ir * ir / n);
    }
}

/// In-place rotary rotation of every head slice of row r by position pos.
/// dir = +1 forward, -1 inverse (gradient).
template <typename Scalar>
void rope_rotate_row(Mat<Scalar>& m, Eigen::Index r, int pos, int n_heads, int head_dim, int dir) {
    const int half = head_dim / 2;
    for (int h = 0; h < n_heads; ++h) {
        const int base = h * head_dim;
        for (int i = 0; i < half; ++i) {
            const double freq = std::pow(kRopeTheta, -2.0 * i / static_cast<double>(head_dim));
            const double ang = dir * pos * freq;
            const Scalar c = static_cast<Scalar>(std::cos(ang));
            const Scalar s = static_cast<Scalar>(std::sin(ang));
            const Scalar a = m(r, base + 2 * i);
            const Scalar b = m(r, base + 2 * i + 1);
            m(r, base + 2 * i) = a * c - b * s;
            m(r, base + 2 * i + 1) = a * s + b * c;
        }
    }
}

struct GroupSpec {
    std::vector<std::vector<int>> groups;  // row indices, attention order
    std::vector<int> positions;            // rotary position per row (rows() long)
    bool causal = false;
    bool rope = false;
};

inline GroupSpec temporal_groups(int C, int S) {
    GroupSpec gs;
    gs.causal = true;
    gs.rope = true;
    gs.positions.assign(static_cast<std::size_t>(C * S), 0);
    gs.groups.reserve(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        std::vector<int> rows(static_cast<std::size_t>(S));
        for (int s = 0; s < S; ++s) {
            rows[static_cast<std::size_t>(s)] = c * S + s;
            gs.positions[static_cast<std::size_t>(c * S + s)] = s;
        }
        gs.groups.push_back(std::move(rows));
    }
    return gs;
}

inline GroupSpec spatial_groups(int C, int S, int n_pad) {
    GroupSpec gs;
    gs.causal = false;
    gs.rope = false;
    gs.positions.assign(static_cast<std::size_t>(C * S), 0);
    for (int s = n_pad; s < S; ++s) {
        std::vector<int> rows(static_cast<std::size_t>(C));
        for (int c = 0; c < C; ++c) rows[static_cast<std::size_t>(c)] = c * S + s;
        gs.groups.push_back(std::move(rows));
    }
    return gs;
}

template <typename Scalar>
void mha_forward(const Mat<Scalar>& xin, const AttnParams<Scalar>& ap, const GroupSpec& gs,
                 int n_heads, AttnTrace<Scalar>& tr, Mat<Scalar>& out) {
    const int H = static_cast<int>(xin.cols());
    const int dh = H / n_heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    tr.q = xin * ap.wq.transpose();
    tr.k = xin * ap.wk.transpose();
    tr.v = xin * ap.wv.transpose();
    if (gs.rope) {
        for (Eigen::Index r = 0; r < tr.q.rows(); ++r) {
            const int pos = gs.positions[static_cast<std::size_t>(r)];
            rope_rotate_row(tr.q, r, pos, n_heads, dh, +1);
            rope_rotate_row(tr.k, r, pos, n_heads, dh, +1);
        }
    }

    tr.ctx = Mat<Scalar>::Zero(xin.rows(), H);
    tr.probs.assign(gs.groups.size() * static_cast<std::size_t>(n_heads), Mat<Scalar>());
    for (std::size_t g = 0; g < gs.groups.size(); ++g) {
        const auto& rows = gs.groups[g];
        const int L = static_cast<int>(rows.size());
        for (int h = 0; h < n_heads; ++h) {
            Mat<Scalar> scores(L, L);
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < L; ++j)
                    scores(i, j) = tr.q.row(rows[static_cast<std::size_t>(i)])
                                       .segment(h * dh, dh)
                                       .dot(tr.k.row(rows[static_cast<std::size_t>(j)])
                                                .segment(h * dh, dh)) *
                                   scale;
            Mat<Scalar>& probs = tr.probs[g * static_cast<std::size_t>(n_heads) +
                                          static_cast<std::size_t>(h)];
            probs.resize(L, L);
            for (int i = 0; i < L; ++i) {
                const int jmax = gs.causal ? i : L - 1;
                Scalar mx = scores(i, 0);
                for (int j = 1; j <= jmax; ++j) mx = std::max(mx, scores(i, j));
                Scalar denom = Scalar(0);
                for (int j = 0; j <= jmax; ++j) {
                    probs(i, j) = std::exp(scores(i, j) - mx);
                    denom += probs(i, j);
                }
                for (int j = 0; j <= jmax; ++j) probs(i, j) /= denom;
                for (int j = jmax + 1; j < L; ++j) probs(i, j) = Scalar(0);
            }
            for (int i = 0; i < L; ++i) {
                auto ctx_seg = tr.ctx.row(rows[static_cast<std::size_t>(i)]).segment(h * dh, dh);
                for (int j = 0; j <= (gs.causal ? i : L - 1); ++j)
                    ctx_seg += probs(i, j) *
                               tr.v.row(rows[static_cast<std::size_t>(j)]).segment(h * dh, dh);
            }
        }
    }
    out = tr.ctx * ap.wo.transpose();
}

template <typename Scalar>
void mha_backward(const Mat<Scalar>& xin, const AttnParams<Scalar>& ap, const GroupSpec& gs,
                  int n_heads, const AttnTrace<Scalar>& tr, const Mat<Scalar>& dout,
                  Mat<Scalar>& dxin_accum, AttnParams<Scalar>& dap) {
    const int H = static_cast<int>(xin.cols());
    const int dh = H / n_heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

    dap.wo += dout.transpose() * tr.ctx;
    Mat<Scalar> dctx = dout * ap.wo;

    Mat<Scalar> dq = Mat<Scalar>::Zero(xin.rows(), H);
    Mat<Scalar> dk = Mat<Scalar>::Zero(xin.rows(), H);
    Mat<Scalar> dv = Mat<Scalar>::Zero(xin.rows(), H);

    for (std::size_t g = 0; g < gs.groups.size(); ++g) {
        const auto& rows = gs.groups[g];
        const int L = static_cast<int>(rows.size());
        for (int h = 0; h < n_heads; ++h) {
            const Mat<Scalar>& probs = tr.probs[g * static_cast<std::size_t>(n_heads) +
                                                static_cast<std::size_t>(h)];
            for (int i = 0; i < L; ++i) {
                const int jmax = gs.causal ? i : L - 1;
                auto dctx_seg = dctx.row(rows[static_cast<std::size_t>(i)]).segment(h * dh, dh);
                // d_probs(i, j) = dctx_i . v_j ; d_v_j += probs(i, j) * dctx_i
                Eigen::Matrix<Scalar, 1, Eigen::Dynamic> dprobs(L);
                Scalar inner = Scalar(0);
                for (int j = 0; j <= jmax; ++j) {
                    dprobs(j) = dctx_seg.dot(
                        tr.v.row(rows[static_cast<std::size_t>(j)]).segment(h * dh, dh));
                    dv.row(rows[static_cast<std::size_t>(j)]).segment(h * dh, dh) +=
                        probs(i, j) * dctx_seg;
                    inner += dprobs(j) * probs(i, j);
                }
                // softmax backward, then score scale
                for (int j = 0; j <= jmax; ++j) {
                    const Scalar dscore = probs(i, j) * (dprobs(j) - inner) * scale;
                    dq.row(rows[static_cast<std::size_t>(i)]).segment(h * dh, dh) +=
                        dscore * tr.k.row(rows[static_cast<std::size_t>(j)]).segment(h * dh, dh);
                    dk.row(rows[static_cast<std::size_t>(j)]).segment(h * dh, dh) +=
                        dscore * tr.q.row(rows[static_cast<std::size_t>(i)]).segment(h * dh, dh);
                }
            }
        }
    }

    if (gs.rope) {  // rotation is orthogonal: gradient rotates backwards
        for (Eigen::Index r = 0; r < dq.rows(); ++r) {
            const int pos = gs.positions[static_cast<std::size_t>(r)];
            rope_rotate_row(dq, r, pos, n_heads, dh, -1);
            rope_rotate_row(dk, r, pos, n_heads, dh, -1);
        }
    }

    dap.wq += dq.transpose() * xin;
    dap.wk += dk.transpose() * xin;
    dap.wv += dv.transpose() * xin;
    dxin_accum += dq * ap.wq + dk * ap.wk + dv * ap.wv;
}

template <typename Scalar>
void ffn_forward(const Mat<Scalar>& z, const FfnParams<Scalar>& fp, BlockTrace<Scalar>& tr,
                 Mat<Scalar>& out) {
    const Scalar beta = fp.beta(0, 0);
    tr.u = (z * fp.w1.transpose()).rowwise() + fp.b1.row(0);
    tr.sig = ((-beta) * tr.u).array().exp().matrix();
    tr.sig = (Mat<Scalar>::Ones(tr.sig.rows(), tr.sig.cols()) + tr.sig).cwiseInverse();
    tr.s = tr.u.cwiseProduct(tr.sig);
    tr.m = (z * fp.w2.transpose()).rowwise() + fp.c2.row(0);
    tr.g = tr.s * fp.w3.transpose();
    out = tr.g.cwiseProduct(tr.m);
}

template <typename Scalar>
void ffn_backward(const Mat<Scalar>& z, const FfnParams<Scalar>& fp, const BlockTrace<Scalar>& tr,
                  const Mat<Scalar>& dout, Mat<Scalar>& dz_accum, FfnParams<Scalar>& dfp) {
    const Scalar beta = fp.beta(0, 0);
    Mat<Scalar> dg = dout.cwiseProduct(tr.m);
    Mat<Scalar> dm = dout.cwiseProduct(tr.g);

    dfp.w3 += dg.transpose() * tr.s;
    Mat<Scalar> ds = dg * fp.w3;

    dfp.w2 += dm.transpose() * z;
    dfp.c2.row(0) += dm.colwise().sum();
    dz_accum += dm * fp.w2;

    // s = u * sigmoid(beta * u)
    Mat<Scalar> sig_prime = tr.sig.cwiseProduct(Mat<Scalar>::Ones(tr.sig.rows(), tr.sig.cols()) -
                                                tr.sig);
    Mat<Scalar> du = ds.cwiseProduct(tr.sig + beta * tr.u.cwiseProduct(sig_prime));
    dfp.beta(0, 0) += ds.cwiseProduct(tr.u.cwiseProduct(tr.u).cwiseProduct(sig_prime)).sum();

    dfp.w1 += du.transpose() * z;
    dfp.b1.row(0) += du.colwise().sum();
    dz_accum += du * fp.w1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Embedding

/// Project [x|d|r] patches into the hidden space, replace missing-slot
/// contributions with learned rows, prepend pad tokens, add role embeddings.
/// No normalization is applied before the first encoder layer.
template <typename Scalar>
Mat<Scalar> embed(const PatchBatch<Scalar>& batch, const ModelParams<Scalar>& params) {
    const ModelConfig& cfg = params.config;
    require(batch.patch_len == cfg.patch_len, "batch patch_len does not match config");
    require(batch.inputs.cols() == 3 * cfg.patch_len, "batch input width mismatch");
    require(batch.n_pad == cfg.n_pad_tokens, "batch pad-token count mismatch");
    const int C = batch.n_channels, np = batch.n_patches, S = batch.seq_rows();
    const int H = cfg.hidden_size, P = cfg.patch_len;

    Mat<Scalar> xp = batch.inputs * params.patch_embed.transpose();  // (C*np, H)
    for (int row = 0; row < C * np; ++row)
        for (int j = 0; j < P; ++j)
            if (batch.missing[static_cast<std::size_t>(row * P + j)] != 0)
                xp.row(row) += params.missing_embed.row(j);

    Mat<Scalar> h0(C * S, H);
    for (int c = 0; c < C; ++c) {
        const auto role = params.role_embed.row(batch.roles[static_cast<std::size_t>(c)]);
        for (int s = 0; s < batch.n_pad; ++s) h0.row(c * S + s) = params.pad_tokens.row(s) + role;
        for (int p = 0; p < np; ++p) h0.row(c * S + batch.n_pad + p) = xp.row(c * np + p) + role;
    }
    return h0;
}

// ---------------------------------------------------------------------------
// Encoder

template <typename Scalar>
Mat<Scalar> encoder_forward_traced(Mat<Scalar> h, const PatchBatch<Scalar>& batch,
                                   const ModelParams<Scalar>& params, Workspace<Scalar>& ws) {
    const ModelConfig& cfg = params.config;
    const int C = batch.n_channels, S = batch.seq_rows();
    const auto tgroups = detail::temporal_groups(C, S);
    const auto sgroups = detail::spatial_groups(C, S, batch.n_pad);

    ws.blocks.resize(params.blocks.size());
    for (std::size_t l = 0; l < params.blocks.size(); ++l) {
        const auto& blk = params.blocks[l];
        auto& tr = ws.blocks[l];
        tr.x_in = h;
        if (blk.norm1.size() > 0) {
            detail::rms_forward(tr.x_in, blk.norm1, tr.normed1, tr.inv_rms1);
        } else {
            tr.normed1 = tr.x_in;
            tr.inv_rms1.resize(0);
        }
        Mat<Scalar> attn_out;
        detail::mha_forward(tr.normed1, blk.attn, blk.spatial ? sgroups : tgroups, cfg.n_heads,
                            tr.attn, attn_out);
        tr.a = tr.x_in + attn_out;
        detail::rms_forward(tr.a, blk.norm2, tr.normed2, tr.inv_rms2);
        Mat<Scalar> ffn_out;
        detail::ffn_forward(tr.normed2, blk.ffn, tr, ffn_out);
        h = tr.a + ffn_out;
    }
    return h;
}

/// Stateless wrapper for callers that only need activations.
template <typename Scalar>
Mat<Scalar> encoder_forward(const Mat<Scalar>& h, const PatchBatch<Scalar>& batch,
                            const ModelParams<Scalar>& params) {
    Workspace<Scalar> ws;
    return encoder_forward_traced(Mat<Scalar>(h), batch, params, ws);
}

// ---------------------------------------------------------------------------
// Heads

template <typename Scalar>
ForecastOutput<Scalar> forecast_heads_traced(const Mat<Scalar>& h_normed,
                                             const PatchBatch<Scalar>& batch,
                                             const ModelParams<Scalar>& params,
                                             Workspace<Scalar>& ws) {
    const ModelConfig& cfg = params.config;
    const int C = batch.n_channels, np = batch.n_patches, S = batch.seq_rows();

    ws.hp.resize(C * np, cfg.hidden_size);
    ws.hl.resize(C, cfg.hidden_size);
    for (int c = 0; c < C; ++c) {
        for (int p = 0; p < np; ++p) ws.hp.row(c * np + p) = h_normed.row(c * S + batch.n_pad + p);
        ws.hl.row(c) = h_normed.row(c * S + S - 1);
    }

    ForecastOutput<Scalar> out;
    out.n_channels = C;
    out.n_patches = np;
    out.roles = batch.roles;
    out.anchor_mean = batch.anchor_mean;
    out.anchor_std = batch.anchor_std;

    out.dense = (ws.hp * params.dense_w.transpose()).rowwise() + params.dense_b.row(0);

    const Eigen::Index n_tok = batch.future.rows();
    if (n_tok > 0) {
        const int dc = cfg.cross_dim;
        const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dc));
        ws.ftok = batch.future * params.cross.fembed.transpose();
        ws.fk = ws.ftok * params.cross.wk.transpose();
        ws.fv = ws.ftok * params.cross.wv.transpose();
        ws.fq = ws.hp * params.cross.wq.transpose();
        Mat<Scalar> scores = ws.fq * ws.fk.transpose() * scale;
        ws.fprobs.resize(scores.rows(), scores.cols());
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            const Scalar mx = scores.row(i).maxCoeff();
            ws.fprobs.row(i) = (scores.row(i).array() - mx).exp();
            ws.fprobs.row(i) /= ws.fprobs.row(i).sum();
        }
        ws.fctx = ws.fprobs * ws.fv;
        out.dense += (ws.fctx * params.cross.wo.transpose()).rowwise() + params.cross.bias.row(0);
    } else {
        out.dense.rowwise() += params.cross.bias.row(0);
    }

    if (cfg.long_rank > 0) {
        ws.long_t = ws.hl * params.long_proj1.transpose();  // (C, r)
        out.long_horizon = (ws.long_t * params.long_proj2.transpose()).rowwise() +
                           params.long_b.row(0);
    } else {
        out.long_horizon = (ws.hl * params.long_proj1.transpose()).rowwise() + params.long_b.row(0);
    }
    return out;
}

template <typename Scalar>
ForecastOutput<Scalar> forecast_heads(const Mat<Scalar>& h_normed, const PatchBatch<Scalar>& batch,
                                      const ModelParams<Scalar>& params) {
    Workspace<Scalar> ws;
    return forecast_heads_traced(h_normed, batch, params, ws);
}

// ---------------------------------------------------------------------------
// Full forward / backward over a prepared batch

template <typename Scalar>
ForecastOutput<Scalar> forward_batch(const PatchBatch<Scalar>& batch,
                                     const ModelParams<Scalar>& params, Workspace<Scalar>& ws) {
    ws.h0 = embed(batch, params);
    ws.h_enc = encoder_forward_traced(ws.h0, batch, params, ws);
    detail::rms_forward(ws.h_enc, params.final_norm, ws.h_normed, ws.inv_rms_fin);
    return forecast_heads_traced(ws.h_normed, batch, params, ws);
}

template <typename Scalar>
ForecastOutput<Scalar> forward_batch(const PatchBatch<Scalar>& batch,
                                     const ModelParams<Scalar>& params) {
    Workspace<Scalar> ws;
    return forward_batch(batch, params, ws);
}

/// Accumulates parameter gradients for d(loss)/d(dense) and d(loss)/d(long).
template <typename Scalar>
void backward_batch(const PatchBatch<Scalar>& batch, const ModelParams<Scalar>& params,
                    const Workspace<Scalar>& ws, const Mat<Scalar>& d_dense,
                    const Mat<Scalar>& d_long, ModelParams<Scalar>& grads) {
    const ModelConfig& cfg = params.config;
    const int C = batch.n_channels, np = batch.n_patches, S = batch.seq_rows();
    const int P = cfg.patch_len;

    Mat<Scalar> dhp = Mat<Scalar>::Zero(C * np, cfg.hidden_size);
    Mat<Scalar> dhl = Mat<Scalar>::Zero(C, cfg.hidden_size);

    // --- long head ---
    if (cfg.long_rank > 0) {
        grads.long_proj2 += d_long.transpose() * ws.long_t;
        Mat<Scalar> dt = d_long * params.long_proj2;
        grads.long_proj1 += dt.transpose() * ws.hl;
        dhl += dt * params.long_proj1;
    } else {
        grads.long_proj1 += d_long.transpose() * ws.hl;
        dhl += d_long * params.long_proj1;
    }
    grads.long_b.row(0) += d_long.colwise().sum();

    // --- dense head ---
    grads.dense_w += d_dense.transpose() * ws.hp;
    grads.dense_b.row(0) += d_dense.colwise().sum();
    dhp += d_dense * params.dense_w;

    // --- cross head ---
    const Eigen::Index n_tok = batch.future.rows();
    grads.cross.bias.row(0) += d_dense.colwise().sum();
    if (n_tok > 0) {
        const int dc = cfg.cross_dim;
        const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dc));
        grads.cross.wo += d_dense.transpose() * ws.fctx;
        Mat<Scalar> dfctx = d_dense * params.cross.wo;
        Mat<Scalar> dprobs = dfctx * ws.fv.transpose();
        Mat<Scalar> dfv = ws.fprobs.transpose() * dfctx;
        Mat<Scalar> dscores(dprobs.rows(), dprobs.cols());
        for (Eigen::Index i = 0; i < dprobs.rows(); ++i) {
            const Scalar inner = dprobs.row(i).cwiseProduct(ws.fprobs.row(i)).sum();
            dscores.row(i) =
                ws.fprobs.row(i).cwiseProduct((dprobs.row(i).array() - inner).matrix()) * scale;
        }
        Mat<Scalar> dfq = dscores * ws.fk;
        Mat<Scalar> dfk = dscores.transpose() * ws.fq;
        grads.cross.wq += dfq.transpose() * ws.hp;
        dhp += dfq * params.cross.wq;
        Mat<Scalar> dftok = Mat<Scalar>::Zero(n_tok, dc);
        grads.cross.wk += dfk.transpose() * ws.ftok;
        dftok += dfk * params.cross.wk;
        grads.cross.wv += dfv.transpose() * ws.ftok;
        dftok += dfv * params.cross.wv;
        grads.cross.fembed += dftok.transpose() * batch.future;
    }

    // --- scatter head-row gradients back to the normed hidden states ---
    Mat<Scalar> dh_normed = Mat<Scalar>::Zero(C * S, cfg.hidden_size);
    for (int c = 0; c < C; ++c) {
        for (int p = 0; p < np; ++p) dh_normed.row(c * S + batch.n_pad + p) += dhp.row(c * np + p);
        dh_normed.row(c * S + S - 1) += dhl.row(c);
    }

    Mat<Scalar> dh = Mat<Scalar>::Zero(C * S, cfg.hidden_size);
    detail::rms_backward(ws.h_enc, params.final_norm, ws.inv_rms_fin, dh_normed, dh,
                         grads.final_norm);

    // --- encoder blocks in reverse ---
    const auto tgroups = detail::temporal_groups(C, S);
    const auto sgroups = detail::spatial_groups(C, S, batch.n_pad);
    for (std::size_t li = params.blocks.size(); li-- > 0;) {
        const auto& blk = params.blocks[li];
        const auto& tr = ws.blocks[li];
        auto& gblk = grads.blocks[li];

        // h_out = a + ffn(normed2); dh currently = d(h_out)
        Mat<Scalar> da = dh;  // residual branch
        Mat<Scalar> dnormed2 = Mat<Scalar>::Zero(dh.rows(), dh.cols());
        detail::ffn_backward(tr.normed2, blk.ffn, tr, dh, dnormed2, gblk.ffn);
        detail::rms_backward(tr.a, blk.norm2, tr.inv_rms2, dnormed2, da, gblk.norm2);

        // a = x_in + mha(normed1); da = d(a)
        Mat<Scalar> dx = da;  // residual branch
        Mat<Scalar> dnormed1 = Mat<Scalar>::Zero(dh.rows(), dh.cols());
        detail::mha_backward(tr.normed1, blk.attn, blk.spatial ? sgroups : tgroups, cfg.n_heads,
                             tr.attn, da, dnormed1, gblk.attn);
        if (blk.norm1.size() > 0) {
            detail::rms_backward(tr.x_in, blk.norm1, tr.inv_rms1, dnormed1, dx, gblk.norm1);
        } else {
            dx += dnormed1;
        }
        dh = std::move(dx);
    }

    // --- embedding ---
    Mat<Scalar> dxp = Mat<Scalar>::Zero(C * np, cfg.hidden_size);
    for (int c = 0; c < C; ++c) {
        const int role = batch.roles[static_cast<std::size_t>(c)];
        for (int s = 0; s < batch.n_pad; ++s) {
            grads.pad_tokens.row(s) += dh.row(c * S + s);
            grads.role_embed.row(role) += dh.row(c * S + s);
        }
        for (int p = 0; p < np; ++p) {
            dxp.row(c * np + p) = dh.row(c * S + batch.n_pad + p);
            grads.role_embed.row(role) += dh.row(c * S + batch.n_pad + p);
        }
    }
    for (int row = 0; row < C * np; ++row)
        for (int j = 0; j < P; ++j)
            if (batch.missing[static_cast<std::size_t>(row * P + j)] != 0)
                grads.missing_embed.row(j) += dxp.row(row);
    grads.patch_embed += dxp.transpose() * batch.inputs;
}

// ---------------------------------------------------------------------------
// Series-level forward

/// Normalize, patch, and push a series through the network. The series'
/// full length is the context; it must fit max_context (longer histories are
/// handled upstream by strided inference).
template <typename Scalar = float>
ForecastOutput<Scalar> forward(const TimeSeries& series, int horizon,
                               const ModelParams<Scalar>& params) {
    auto batch = build_patch_batch<Scalar>(series, series.length(), horizon, params.config);
    return forward_batch(batch, params);
}

}  // namespace ttsm::model
