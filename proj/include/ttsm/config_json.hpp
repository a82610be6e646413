#pragma once

// JSON config parsing for the CLI. Every accessor reports failures with the
// JSON-pointer path of the offending field so callers can emit
// machine-readable errors.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ttsm/inference.hpp"
#include "ttsm/model/config.hpp"
#include "ttsm/synthts.hpp"
#include "ttsm/training.hpp"

namespace ttsm::cfg {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string pointer, const std::string& message)
        : std::runtime_error(message + " (at '" + pointer + "')"),
          pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

  private:
    std::string pointer_;
};

inline bool has(const json& root, const std::string& ptr) {
    return root.contains(json::json_pointer(ptr));
}

template <typename T>
T get_req(const json& root, const std::string& ptr) {
    if (!has(root, ptr)) throw ConfigError(ptr, "missing required field");
    try {
        return root.at(json::json_pointer(ptr)).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ptr, std::string("invalid value: ") + e.what());
    }
}

template <typename T>
T get_or(const json& root, const std::string& ptr, T fallback) {
    if (!has(root, ptr)) return fallback;
    return get_req<T>(root, ptr);
}

namespace detail {

template <typename Config>
void validate_at(const Config& c, const std::string& base) {
    try {
        c.validate();
    } catch (const std::exception& e) {
        throw ConfigError(base, e.what());
    }
}

inline std::pair<std::size_t, std::size_t> size_range(const json& root, const std::string& ptr,
                                                      std::pair<std::size_t, std::size_t> def) {
    if (!has(root, ptr)) return def;
    const auto v = get_req<std::vector<std::size_t>>(root, ptr);
    if (v.size() != 2 || v[0] > v[1]) throw ConfigError(ptr, "expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

inline std::pair<double, double> double_range(const json& root, const std::string& ptr,
                                              std::pair<double, double> def) {
    if (!has(root, ptr)) return def;
    const auto v = get_req<std::vector<double>>(root, ptr);
    if (v.size() != 2 || v[0] > v[1]) throw ConfigError(ptr, "expected [lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

}  // namespace detail

/// Model block: optional "preset" ("toy" | "large") plus per-field overrides.
inline model::ModelConfig model_config_from(const json& root, const std::string& base = "/model") {
    model::ModelConfig c;
    if (has(root, base + "/preset")) {
        const auto p = get_req<std::string>(root, base + "/preset");
        if (p == "toy")
            c = model::toy_config();
        else if (p == "large")
            c = model::large_config();
        else
            throw ConfigError(base + "/preset", "unknown preset '" + p + "' (toy | large)");
    }
    c.patch_len = get_or(root, base + "/patch_len", c.patch_len);
    c.hidden_size = get_or(root, base + "/hidden_size", c.hidden_size);
    c.n_temporal_layers = get_or(root, base + "/n_temporal_layers", c.n_temporal_layers);
    c.n_spatial_layers = get_or(root, base + "/n_spatial_layers", c.n_spatial_layers);
    c.n_heads = get_or(root, base + "/n_heads", c.n_heads);
    c.ffn_mult = get_or(root, base + "/ffn_mult", c.ffn_mult);
    c.max_context = get_or(root, base + "/max_context", c.max_context);
    c.max_horizon = get_or(root, base + "/max_horizon", c.max_horizon);
    c.n_pad_tokens = get_or(root, base + "/n_pad_tokens", c.n_pad_tokens);
    c.head_horizon_per_patch =
        get_or(root, base + "/head_horizon_per_patch", c.head_horizon_per_patch);
    c.cross_dim = get_or(root, base + "/cross_dim", c.cross_dim);
    c.long_rank = get_or(root, base + "/long_rank", c.long_rank);
    detail::validate_at(c, base);
    return c;
}

inline train::TrainConfig train_config_from(const json& root, const std::string& base = "/train") {
    train::TrainConfig c;
    c.batch_size = get_or(root, base + "/batch_size", c.batch_size);
    c.learning_rate = get_or(root, base + "/learning_rate", c.learning_rate);
    c.final_lr_fraction = get_or(root, base + "/final_lr_fraction", c.final_lr_fraction);
    c.beta1 = get_or(root, base + "/beta1", c.beta1);
    c.beta2 = get_or(root, base + "/beta2", c.beta2);
    c.adam_eps = get_or(root, base + "/adam_eps", c.adam_eps);
    c.weight_decay = get_or(root, base + "/weight_decay", c.weight_decay);
    c.max_horizon = get_or(root, base + "/max_horizon", c.max_horizon);
    c.coarse_grid_strides = get_or(root, base + "/coarse_grid_strides", c.coarse_grid_strides);
    c.coarse_grid_prob = get_or(root, base + "/coarse_grid_prob", c.coarse_grid_prob);
    c.huber_delta = get_or(root, base + "/huber_delta", c.huber_delta);
    c.steps = get_or(root, base + "/steps", c.steps);
    c.seed = get_or(root, base + "/seed", c.seed);
    c.loss_curve_path = get_or(root, base + "/loss_curve_path", c.loss_curve_path);
    c.checkpoint_every = get_or(root, base + "/checkpoint_every", c.checkpoint_every);
    c.checkpoint_path = get_or(root, base + "/checkpoint_path", c.checkpoint_path);
    c.max_context = get_or(root, base + "/max_context", c.max_context);
    c.test_at_end_fraction = get_or(root, base + "/test_at_end_fraction", c.test_at_end_fraction);
    c.eval_every = get_or(root, base + "/eval_every", c.eval_every);
    c.eval_horizon = get_or(root, base + "/eval_horizon", c.eval_horizon);
    c.n_eval_series = get_or(root, base + "/n_eval_series", c.n_eval_series);
    detail::validate_at(c, base);
    return c;
}

inline infer::InferenceConfig inference_config_from(const json& root,
                                                    const std::string& base = "/inference") {
    infer::InferenceConfig c;
    c.use_mirror = get_or(root, base + "/use_mirror", c.use_mirror);
    c.noise_ensembles = get_or(root, base + "/noise_ensembles", c.noise_ensembles);
    c.noise_frac = get_or(root, base + "/noise_frac", c.noise_frac);
    c.augment_channels = get_or(root, base + "/augment_channels", c.augment_channels);
    c.sifi_stride = get_or(root, base + "/sifi_stride", c.sifi_stride);
    c.seed = get_or(root, base + "/seed", c.seed);
    detail::validate_at(c, base);
    return c;
}

inline synth::BatchSampleConfig sampling_config_from(const json& root,
                                                     const std::string& base = "/sampling") {
    synth::BatchSampleConfig c;
    c.p_no_index = get_or(root, base + "/p_no_index", c.p_no_index);
    c.natural_weight = get_or(root, base + "/natural_weight", c.natural_weight);
    c.generic_weight = get_or(root, base + "/generic_weight", c.generic_weight);
    c.n_generic_periods = get_or(root, base + "/n_generic_periods", c.n_generic_periods);
    c.seq_len_range = detail::size_range(root, base + "/seq_len_range", c.seq_len_range);
    c.noise_level_range = detail::double_range(root, base + "/noise_level_range",
                                               c.noise_level_range);
    return c;
}

inline synth::AugmentationConfig augmentation_config_from(
    const json& root, const std::string& base = "/augmentation") {
    synth::AugmentationConfig c;
    if (has(root, base + "/n_expansions_range")) {
        const auto v = get_req<std::vector<int>>(root, base + "/n_expansions_range");
        if (v.size() != 2 || v[0] > v[1])
            throw ConfigError(base + "/n_expansions_range", "expected [lo, hi] with lo <= hi");
        c.n_expansions_range = {v[0], v[1]};
    }
    c.mix_sparsity = get_or(root, base + "/mix_sparsity", c.mix_sparsity);
    c.pool_subsample = get_or(root, base + "/pool_subsample", c.pool_subsample);
    c.n_mixes = get_or(root, base + "/n_mixes", c.n_mixes);
    c.n_base = get_or(root, base + "/n_base", c.n_base);
    c.post_transform_weights =
        get_or(root, base + "/post_transform_weights", c.post_transform_weights);
    c.real_mix_fraction = get_or(root, base + "/real_mix_fraction", c.real_mix_fraction);
    if (has(root, base + "/family_weights")) {
        const auto& fw = root.at(json::json_pointer(base + "/family_weights"));
        if (!fw.is_object())
            throw ConfigError(base + "/family_weights", "expected an object of family -> weight");
        for (const auto& [name, w] : fw.items()) {
            if (!w.is_number() || w.get<double>() < 0.0)
                throw ConfigError(base + "/family_weights/" + name,
                                  "weights must be non-negative numbers");
            c.family_weights.emplace_back(name, w.get<double>());
        }
    }
    return c;
}

}  // namespace ttsm::cfg
