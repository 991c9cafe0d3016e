// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fsaf/errors.hpp"
#include "fsaf/io.hpp"
#include "fsaf/targets.hpp"

namespace fsaf {

namespace fs = std::filesystem;

void dump_targets(const std::string& dir, const std::vector<ClassTargetMap>& cls_targets,
                  const std::vector<RegressionTargetMap>& reg_targets, double normalizer) {
    fs::create_directories(dir);
    for (const auto& map : cls_targets) {
        for (int k = 0; k < map.num_classes; ++k) {
            ImageU8 image{map.h, map.w, 1, {}};
            image.pixels.resize(static_cast<std::size_t>(map.h) * map.w);
            for (int i = 0; i < map.h; ++i) {
                for (int j = 0; j < map.w; ++j) {
                    switch (map.at(k, i, j)) {
                        case CellState::kNegative: image.pixels[i * map.w + j] = 0; break;
                        case CellState::kIgnore: image.pixels[i * map.w + j] = 128; break;
                        case CellState::kPositive: image.pixels[i * map.w + j] = 255; break;
                    }
                }
            }
            const auto name = "targets_l" + std::to_string(map.level) + "_c" + std::to_string(k);
            write_pgm((fs::path(dir) / (name + ".pgm")).string(), image);
        }
    }
    for (const auto& map : reg_targets) {
        std::vector<float> payload(map.offsets.size());
        for (std::size_t i = 0; i < payload.size(); ++i) {
            payload[i] = static_cast<float>(map.offsets[i]);
        }
        const auto stem = (fs::path(dir) / ("offsets_l" + std::to_string(map.level))).string();
        write_f32_le(stem + ".bin", payload);

        const nlohmann::json sidecar = {
            {"level", map.level}, {"shape", {4, map.h, map.w}}, {"S", normalizer}};
        std::ofstream os(stem + ".json");
        if (!os) throw DataError("dump_targets: cannot open " + stem + ".json");
        os << sidecar.dump(2) << "\n";
    }
}

}  // namespace fsaf
