#pragma once

#include <cstdint>
#include <string>

#include "ttsm/common.hpp"

namespace ttsm::model {

/// Architecture hyperparameters. Temporal layers attend along the patch axis
/// (causal, rotary positions); spatial layers attend across channels. The
/// stack repeats [temporal, temporal, spatial].
struct ModelConfig {
    int patch_len = 32;
    int hidden_size = 64;
    int n_temporal_layers = 4;
    int n_spatial_layers = 2;
    int n_heads = 4;
    double ffn_mult = 8.0 / 3.0;
    int max_context = 4096;
    int max_horizon = 960;
    int n_pad_tokens = 4;
    int head_horizon_per_patch = 32;
    int cross_dim = 32;   // attention width of the covariate cross head
    int long_rank = 16;   // factorization rank of the long head; 0 = dense

    int ffn_dim() const { return static_cast<int>(ffn_mult * hidden_size); }
    int head_dim() const { return hidden_size / n_heads; }
    int n_layers() const { return n_temporal_layers + n_spatial_layers; }
    int max_patches() const { return max_context / patch_len; }

    /// Layer l is spatial iff it closes a [temporal, temporal, spatial] triple.
    bool layer_is_spatial(int l) const { return l % 3 == 2; }

    void validate() const {
        require(patch_len >= 1, "patch_len must be positive");
        require(hidden_size >= 1, "hidden_size must be positive");
        require(n_heads >= 1 && hidden_size % n_heads == 0,
                "hidden_size must be divisible by n_heads");
        require(head_dim() % 2 == 0, "head dimension must be even for rotary positions");
        require(n_temporal_layers == 2 * n_spatial_layers,
                "temporal:spatial layer ratio must be 2:1");
        require(max_context % patch_len == 0, "max_context must be divisible by patch_len");
        require(head_horizon_per_patch >= 1 && head_horizon_per_patch <= max_horizon,
                "head_horizon_per_patch must lie in [1, max_horizon]");
        require(n_pad_tokens >= 0, "n_pad_tokens must be non-negative");
        require(cross_dim >= 1, "cross_dim must be positive");
        require(long_rank >= 0, "long_rank must be non-negative");
        require(ffn_dim() >= 1, "ffn_mult too small");
    }
};

/// ~290K parameters; used by the test and acceptance suites.
inline ModelConfig toy_config() {
    ModelConfig c;
    c.hidden_size = 64;
    c.n_heads = 4;
    c.n_temporal_layers = 4;
    c.n_spatial_layers = 2;
    c.cross_dim = 32;
    c.long_rank = 16;
    c.validate();
    return c;
}

/// ~23M parameters, the full-size configuration.
inline ModelConfig large_config() {
    ModelConfig c;
    c.hidden_size = 352;
    c.n_heads = 8;
    c.n_temporal_layers = 12;
    c.n_spatial_layers = 6;
    c.cross_dim = 64;
    c.long_rank = 64;
    c.validate();
    return c;
}

/// Closed-form parameter count; checked against tensor enumeration in tests.
inline std::int64_t param_count(const ModelConfig& c) {
    const std::int64_t P = c.patch_len, H = c.hidden_size, F = c.ffn_dim();
    const std::int64_t hpp = c.head_horizon_per_patch, M = c.max_horizon;
    const std::int64_t dc = c.cross_dim, r = c.long_rank;

    const std::int64_t embed = 3 * P * H     // patch projection
                               + P * H       // missing-value table
                               + c.n_pad_tokens * H
                               + 3 * H;      // channel-role table
    const std::int64_t per_block = 4 * H * H           // q,k,v,o
                                   + 2 * H              // two norm gains
                                   + 2 * F * H + H * H  // SwiGLU w1, w3, w2
                                   + F + H + 1;         // b, c, beta
    const std::int64_t blocks = c.n_layers() * per_block - H;  // first block has no input norm
    const std::int64_t final_norm = H;
    const std::int64_t dense = H * hpp + hpp;
    const std::int64_t long_head = r > 0 ? (H * r + r * M + M) : (H * M + M);
    const std::int64_t cross = P * dc + dc * H + 2 * dc * dc + hpp * dc + hpp;
    return embed + blocks + final_norm + dense + long_head + cross;
}

}  // namespace ttsm::model
