// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "fsaf/geometry.hpp"
#include "fsaf/io.hpp"
#include "fsaf/trainer.hpp"

namespace fsaf {

struct ImageRecord {
    int id = 0;
    int width = 0;
    int height = 0;
    std::string file;  ///< pixel source path, relative to the annotation file
};

struct InstanceRecord {
    int image_id = 0;
    Box box;  ///< class id and center-format coordinates
};

struct Dataset {
    std::string root;  ///< directory of the annotation file
    std::vector<ImageRecord> images;
    std::vector<InstanceRecord> instances;

    std::vector<Box> boxes_of(int image_id) const;
    std::string image_path(const ImageRecord& record) const;
};

void save_annotations(const std::string& path, const Dataset& dataset);
Dataset load_annotations(const std::string& path);

/// Synthetic benchmark: filled axis-aligned rectangles on a plain background,
/// class encoded by fill color, exact annotations.
struct SynthOptions {
    std::string out_dir;
    int num_images = 100;
    int image_size = 128;
    int num_classes = 3;
    int min_instances = 1;
    int max_instances = 3;
    double min_box = 8.0;  ///< smallest side; largest is image_size / 2
    std::uint64_t seed = 1;
};

/// Writes <out_dir>/images/*.ppm and <out_dir>/annotations.json; image
/// generation is parallel over images and deterministic for a fixed seed.
Dataset make_synthetic(const SynthOptions& options);

/// RGB in [0, 1], shape (1, 3, H, W).
Tensor tensor_from_image(const ImageU8& image);

/// Pads bottom/right by edge replication until both dims divide `multiple`.
Tensor pad_to_multiple(const Tensor& image, int multiple);

Sample load_sample(const Dataset& dataset, int index);
std::vector<Sample> load_samples(const Dataset& dataset);

}  // namespace fsaf
