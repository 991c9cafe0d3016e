// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fsaf/model.hpp"

namespace fsaf {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'A', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32_le(std::ostream& os, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                           static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    os.write(bytes, 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char bytes[4];
    is.read(reinterpret_cast<char*>(bytes), 4);
    return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 | std::uint32_t(bytes[2]) << 16 |
           std::uint32_t(bytes[3]) << 24;
}

void put_f32_le(std::ostream& os, float f) { put_u32_le(os, std::bit_cast<std::uint32_t>(f)); }

float get_f32_le(std::istream& is) { return std::bit_cast<float>(get_u32_le(is)); }

nlohmann::json config_to_json(const ModelConfig& c) {
    return {
        {"num_classes", c.num_classes},
        {"level_min", c.level_min},
        {"level_max", c.level_max},
        {"widths", c.widths},
        {"fpn_channels", c.fpn_channels},
        {"anchor_branch", c.anchor_branch},
        {"anchor_base_scale", c.anchors.base_scale},
        {"anchor_scales", c.anchors.scales},
        {"anchor_ratios", c.anchors.ratios},
        {"pi", c.pi},
        {"reg_bias", c.reg_bias},
        {"init_sigma", c.init_sigma},
        {"offset_normalizer", c.offset_normalizer},
        {"seed", c.seed},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.num_classes = j.at("num_classes").get<int>();
    c.level_min = j.at("level_min").get<int>();
    c.level_max = j.at("level_max").get<int>();
    c.widths = j.at("widths").get<std::vector<int>>();
    c.fpn_channels = j.at("fpn_channels").get<int>();
    c.anchor_branch = j.at("anchor_branch").get<bool>();
    c.anchors.base_scale = j.at("anchor_base_scale").get<double>();
    c.anchors.scales = j.at("anchor_scales").get<std::vector<double>>();
    c.anchors.ratios = j.at("anchor_ratios").get<std::vector<double>>();
    c.pi = j.at("pi").get<double>();
    c.reg_bias = j.at("reg_bias").get<double>();
    c.init_sigma = j.at("init_sigma").get<double>();
    c.offset_normalizer = j.at("offset_normalizer").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_model: cannot open " + path);

    nlohmann::json manifest;
    manifest["config"] = config_to_json(model.config);
    auto& tensors = manifest["tensors"] = nlohmann::json::array();
    for (const auto& p : model.params) {
        tensors.push_back({{"name", p.name},
                           {"shape", std::vector<int>(p.tensor.shape.begin(), p.tensor.shape.end())}});
    }
    const std::string text = manifest.dump();

    os.write(kMagic, 4);
    put_u32_le(os, kFormatVersion);
    put_u32_le(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : model.params) {
        for (const float v : p.tensor.data) put_f32_le(os, v);
    }
    if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_model: cannot open " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("load_model: " + path + " is not a detector weights file");
    }
    const std::uint32_t version = get_u32_le(is);
    if (version != kFormatVersion) {
        throw std::runtime_error("load_model: unsupported format version " +
                                 std::to_string(version));
    }
    const std::uint32_t manifest_size = get_u32_le(is);
    std::string text(manifest_size, '\0');
    is.read(text.data(), manifest_size);
    if (!is) throw std::runtime_error("load_model: truncated manifest in " + path);

    const nlohmann::json manifest = nlohmann::json::parse(text);
    Model model;
    model.config = config_from_json(manifest.at("config"));
    for (const auto& t : manifest.at("tensors")) {
        const auto shape = t.at("shape").get<std::vector<int>>();
        if (shape.size() != 4) throw std::runtime_error("load_model: bad tensor shape");
        TensorT<float> tensor(shape[0], shape[1], shape[2], shape[3]);
        for (auto& v : tensor.data) v = get_f32_le(is);
        model.params.push_back({t.at("name").get<std::string>(), std::move(tensor)});
    }
    if (!is) throw std::runtime_error("load_model: truncated payload in " + path);
    return model;
}

}  // namespace fsaf
