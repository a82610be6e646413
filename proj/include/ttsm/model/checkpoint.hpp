#pragma once

// Checkpoint format: "TTSM" magic, u32 version, u32 header length, JSON
// header (model config + tensor directory), then each tensor's float32
// values little-endian in directory order.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttsm/common.hpp"
#include "ttsm/model/params.hpp"

namespace ttsm::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'T', 'T', 'S', 'M'};

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
    return {{"patch_len", cfg.patch_len},
            {"hidden_size", cfg.hidden_size},
            {"n_temporal_layers", cfg.n_temporal_layers},
            {"n_spatial_layers", cfg.n_spatial_layers},
            {"n_heads", cfg.n_heads},
            {"ffn_mult", cfg.ffn_mult},
            {"max_context", cfg.max_context},
            {"max_horizon", cfg.max_horizon},
            {"n_pad_tokens", cfg.n_pad_tokens},
            {"head_horizon_per_patch", cfg.head_horizon_per_patch},
            {"cross_dim", cfg.cross_dim},
            {"long_rank", cfg.long_rank}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.patch_len = j.at("patch_len").get<int>();
    cfg.hidden_size = j.at("hidden_size").get<int>();
    cfg.n_temporal_layers = j.at("n_temporal_layers").get<int>();
    cfg.n_spatial_layers = j.at("n_spatial_layers").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.ffn_mult = j.at("ffn_mult").get<double>();
    cfg.max_context = j.at("max_context").get<int>();
    cfg.max_horizon = j.at("max_horizon").get<int>();
    cfg.n_pad_tokens = j.at("n_pad_tokens").get<int>();
    cfg.head_horizon_per_patch = j.at("head_horizon_per_patch").get<int>();
    cfg.cross_dim = j.at("cross_dim").get<int>();
    cfg.long_rank = j.at("long_rank").get<int>();
    cfg.validate();
    return cfg;
}

template <typename Scalar>
void save_params(const ModelParams<Scalar>& params, const std::string& path) {
    nlohmann::json dir = nlohmann::json::array();
    for_each_tensor(const_cast<ModelParams<Scalar>&>(params),
                    [&](const std::string& name, Mat<Scalar>& t) {
                        dir.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
                    });
    nlohmann::json header = {{"config", config_to_json(params.config)}, {"tensors", dir}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open checkpoint for writing: " + path);
    out.write(kCheckpointMagic, 4);
    auto write_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    write_u32(kCheckpointVersion);
    write_u32(static_cast<std::uint32_t>(header_str.size()));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

    std::vector<float> buf;
    for_each_tensor(const_cast<ModelParams<Scalar>&>(params),
                    [&](const std::string&, Mat<Scalar>& t) {
                        buf.resize(static_cast<std::size_t>(t.size()));
                        for (Eigen::Index i = 0; i < t.size(); ++i)
                            buf[static_cast<std::size_t>(i)] =
                                static_cast<float>(t.data()[i]);
                        out.write(reinterpret_cast<const char*>(buf.data()),
                                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
                    });
    require(static_cast<bool>(out), "failed writing checkpoint: " + path);
}

template <typename Scalar = float>
ModelParams<Scalar> load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open checkpoint: " + path);

    char magic[4] = {};
    in.read(magic, 4);
    require(in.gcount() == 4 && std::memcmp(magic, kCheckpointMagic, 4) == 0,
            "not a checkpoint: " + path);
    auto read_u32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        require(in.gcount() == 4, "truncated checkpoint: " + path);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    const std::uint32_t version = read_u32();
    require(version == kCheckpointVersion,
            "unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t header_len = read_u32();
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    require(in.gcount() == static_cast<std::streamsize>(header_len),
            "truncated checkpoint: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("not a checkpoint: malformed header in " + path);
    }
    ModelParams<Scalar> params;
    params.config = config_from_json(header.at("config"));
    allocate_params(params);

    const auto& dir = header.at("tensors");
    std::size_t idx = 0;
    std::vector<float> buf;
    for_each_tensor(params, [&](const std::string& name, Mat<Scalar>& t) {
        require(idx < dir.size(), "checkpoint tensor directory too short at " + name);
        const auto& entry = dir.at(idx++);
        require(entry.at("name").get<std::string>() == name,
                "checkpoint tensor order mismatch: expected " + name + ", found " +
                    entry.at("name").get<std::string>());
        const auto rows = entry.at("rows").get<Eigen::Index>();
        const auto cols = entry.at("cols").get<Eigen::Index>();
        require(rows == t.rows() && cols == t.cols(),
                "checkpoint shape mismatch for tensor " + name + ": file has " +
                    std::to_string(rows) + "x" + std::to_string(cols) + ", model expects " +
                    std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
        buf.resize(static_cast<std::size_t>(t.size()));
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        require(in.gcount() == static_cast<std::streamsize>(buf.size() * sizeof(float)),
                "truncated checkpoint: " + path);
        for (Eigen::Index i = 0; i < t.size(); ++i)
            t.data()[i] = static_cast<Scalar>(buf[static_cast<std::size_t>(i)]);
    });
    require(idx == dir.size(), "checkpoint has extra tensors beyond the model layout");
    return params;
}

}  // namespace ttsm::model
