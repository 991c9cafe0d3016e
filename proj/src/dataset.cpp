// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fsaf/errors.hpp"
#include "fsaf/parallel.hpp"
#include "fsaf/rng.hpp"

namespace fsaf {

namespace fs = std::filesystem;

std::vector<Box> Dataset::boxes_of(int image_id) const {
    std::vector<Box> out;
    for (const auto& inst : instances) {
        if (inst.image_id == image_id) out.push_back(inst.box);
    }
    return out;
}

std::string Dataset::image_path(const ImageRecord& record) const {
    return (fs::path(root) / record.file).string();
}

void save_annotations(const std::string& path, const Dataset& dataset) {
    nlohmann::json j;
    auto& images = j["images"] = nlohmann::json::array();
    for (const auto& im : dataset.images) {
        images.push_back(
            {{"id", im.id}, {"width", im.width}, {"height", im.height}, {"file", im.file}});
    }
    auto& instances = j["instances"] = nlohmann::json::array();
    for (const auto& inst : dataset.instances) {
        instances.push_back({{"image_id", inst.image_id},
                             {"class", inst.box.class_id},
                             {"box", {inst.box.x, inst.box.y, inst.box.w, inst.box.h}}});
    }
    std::ofstream os(path);
    if (!os) throw DataError("save_annotations: cannot open " + path);
    os << j.dump(2) << "\n";
}

Dataset load_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("load_annotations: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("load_annotations: " + path + ": " + e.what());
    }
    Dataset out;
    out.root = fs::path(path).parent_path().string();
    try {
        for (const auto& im : j.at("images")) {
            out.images.push_back({im.at("id").get<int>(), im.at("width").get<int>(),
                                  im.at("height").get<int>(), im.at("file").get<std::string>()});
        }
        for (const auto& inst : j.at("instances")) {
            const auto& b = inst.at("box");
            Box box{inst.at("class").get<int>(), b.at(0).get<double>(), b.at(1).get<double>(),
                    b.at(2).get<double>(), b.at(3).get<double>()};
            out.instances.push_back({inst.at("image_id").get<int>(), box});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("load_annotations: " + path + ": " + e.what());
    }
    return out;
}

namespace {

/// Distinct fill color per class, jittered per instance.
std::array<std::uint8_t, 3> class_color(int class_id, Rng& rng) {
    static constexpr std::array<std::array<int, 3>, 8> kPalette = {{
        {200, 40, 40},    // red
        {40, 160, 40},    // green
        {40, 70, 200},    // blue
        {210, 190, 40},   // yellow
        {180, 50, 190},   // magenta
        {40, 190, 190},   // cyan
        {230, 130, 30},   // orange
        {120, 70, 180},   // purple
    }};
    const auto& base = kPalette[class_id % kPalette.size()];
    std::array<std::uint8_t, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const int v = base[c] + static_cast<int>(rng.uniform_int(-20, 20));
        out[c] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    return out;
}

CornerBox corner_of(const Box& b) { return {b.top(), b.left(), b.bottom(), b.right()}; }

}  // namespace

Dataset make_synthetic(const SynthOptions& options) {
    if (options.num_images < 1 || options.num_classes < 1 ||
        options.min_instances > options.max_instances || options.min_instances < 0) {
        throw DataError("make_synthetic: inconsistent options");
    }
    fs::create_directories(fs::path(options.out_dir) / "images");

    Dataset dataset;
    dataset.root = options.out_dir;
    dataset.images.resize(options.num_images);
    std::vector<std::vector<InstanceRecord>> per_image(options.num_images);

    const Rng base(options.seed);
    const int size = options.image_size;
    const double max_box = size / 2.0;

    parallel_for(options.num_images, [&](int idx) {
        Rng rng = base.fork(static_cast<std::uint64_t>(idx));

        char name[64];
        std::snprintf(name, sizeof(name), "images/img_%06d.ppm", idx);
        ImageU8 image{size, size, 3, {}};
        image.pixels.resize(static_cast<std::size_t>(size) * size * 3);
        const int bg = 200;
        for (auto& p : image.pixels) {
            p = static_cast<std::uint8_t>(std::clamp<int>(bg + rng.uniform_int(-6, 6), 0, 255));
        }

        const int count =
            static_cast<int>(rng.uniform_int(options.min_instances, options.max_instances));
        std::vector<Box> boxes;
        for (int k = 0; k < count; ++k) {
            Box box;
            box.class_id = static_cast<int>(rng.uniform_int(0, options.num_classes - 1));
            for (int attempt = 0; attempt < 20; ++attempt) {
                // Log-uniform sqrt(w*h) with mild aspect jitter, so level
                // assignments by box size cover the whole pyramid.
                const double scale = rng.log_uniform(options.min_box, max_box);
                const double aspect = rng.log_uniform(1.0 / 1.4, 1.4);
                const int w = std::clamp(
                    static_cast<int>(std::lround(scale * std::sqrt(aspect))), 4, size - 1);
                const int h = std::clamp(
                    static_cast<int>(std::lround(scale / std::sqrt(aspect))), 4, size - 1);
                const int left = static_cast<int>(rng.uniform_int(0, size - w));
                const int top = static_cast<int>(rng.uniform_int(0, size - h));
                box.w = w;
                box.h = h;
                box.x = left + w / 2.0;
                box.y = top + h / 2.0;
                const bool crowded = std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) {
                    return iou(corner_of(b), corner_of(box)) > 0.3;
                });
                if (!crowded) break;
            }
            boxes.push_back(box);
        }

        // Paint large to small so every instance stays visible on top.
        std::vector<int> order(boxes.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (boxes[a].area() != boxes[b].area()) return boxes[a].area() > boxes[b].area();
            return a < b;
        });
        for (const int k : order) {
            const Box& b = boxes[k];
            const auto color = class_color(b.class_id, rng);
            const int top = static_cast<int>(std::lround(b.top()));
            const int left = static_cast<int>(std::lround(b.left()));
            for (int i = top; i < top + static_cast<int>(b.h); ++i) {
                for (int j = left; j < left + static_cast<int>(b.w); ++j) {
                    for (int c = 0; c < 3; ++c) image.at(i, j, c) = color[c];
                }
            }
        }

        write_ppm((fs::path(options.out_dir) / name).string(), image);
        dataset.images[idx] = {idx, size, size, name};
        for (const Box& b : boxes) per_image[idx].push_back({idx, b});
    });

    for (auto& list : per_image) {
        dataset.instances.insert(dataset.instances.end(), list.begin(), list.end());
    }
    save_annotations((fs::path(options.out_dir) / "annotations.json").string(), dataset);
    return dataset;
}

Tensor tensor_from_image(const ImageU8& image) {
    if (image.channels != 3) throw DataError("tensor_from_image: expected 3 channels");
    Tensor t(1, 3, image.h, image.w);
    for (int c = 0; c < 3; ++c) {
        float* plane = t.plane(0, c);
        for (int i = 0; i < image.h; ++i) {
            for (int j = 0; j < image.w; ++j) {
                plane[i * image.w + j] = image.at(i, j, c) / 255.0f;
            }
        }
    }
    return t;
}

Tensor pad_to_multiple(const Tensor& image, int multiple) {
    const int h = (image.h() + multiple - 1) / multiple * multiple;
    const int w = (image.w() + multiple - 1) / multiple * multiple;
    if (h == image.h() && w == image.w()) return image;
    Tensor out(image.n(), image.c(), h, w);
    for (int n = 0; n < image.n(); ++n) {
        for (int c = 0; c < image.c(); ++c) {
            const float* src = image.plane(n, c);
            float* dst = out.plane(n, c);
            for (int i = 0; i < h; ++i) {
                const int si = std::min(i, image.h() - 1);
                for (int j = 0; j < w; ++j) {
                    dst[i * w + j] = src[si * image.w() + std::min(j, image.w() - 1)];
                }
            }
        }
    }
    return out;
}

Sample load_sample(const Dataset& dataset, int index) {
    const ImageRecord& record = dataset.images[index];
    Sample s;
    s.image = tensor_from_image(read_ppm(dataset.image_path(record)));
    s.instances = dataset.boxes_of(record.id);
    return s;
}

std::vector<Sample> load_samples(const Dataset& dataset) {
    std::vector<Sample> samples(dataset.images.size());
    parallel_for(static_cast<int>(dataset.images.size()),
                 [&](int i) { samples[i] = load_sample(dataset, i); });
    return samples;
}

}  // namespace fsaf
