// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fsaf/errors.hpp"
#include "fsaf/losses.hpp"
#include "fsaf/model.hpp"
#include "fsaf/selection.hpp"
#include "fsaf/targets.hpp"

namespace fsaf {

enum class BranchMode { kAnchorFreeOnly, kAnchorBasedOnly, kBoth };

struct TrainConfig {
    int iterations = 2000;
    int batch_size = 4;
    double base_lr = 0.01;    ///< at reference_batch images per step
    int reference_batch = 16;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double lambda = 0.5;  ///< weight of the anchor-free terms in the joint loss
    double offset_normalizer = kOffsetNormalizer;
    double eps_effective = kEffectiveScale;
    double eps_ignoring = kIgnoringScale;
    int heuristic_l0 = kCanonicalLevel;
    SelectionMethod selection = SelectionMethod::kOnline;
    BranchMode branches = BranchMode::kBoth;
    bool flip_augmentation = true;
    int warmup_iterations = 200;  ///< linear ramp; vital when training from scratch
    double warmup_factor = 1.0 / 3.0;
    std::uint64_t seed = 1;

    bool anchor_free_enabled() const { return branches != BranchMode::kAnchorBasedOnly; }
    bool anchor_based_enabled() const { return branches != BranchMode::kAnchorFreeOnly; }

    /// Linear batch-size scaling with warmup, stepped down 10x at 2/3 and
    /// 8/9 of the run.
    double lr_at(int iteration) const {
        double lr = base_lr * batch_size / reference_batch;
        if (iteration < warmup_iterations) {
            const double t = double(iteration + 1) / warmup_iterations;
            return lr * (warmup_factor + (1.0 - warmup_factor) * t);
        }
        if (iteration >= iterations * 8 / 9) {
            lr /= 100.0;
        } else if (iteration >= iterations * 2 / 3) {
            lr /= 10.0;
        }
        return lr;
    }
};

template <typename T>
struct SampleT {
    TensorT<T> image;  ///< (1, 3, H, W), values in [0, 1]
    std::vector<Box> instances;
};

using Sample = SampleT<float>;

struct StepReport {
    double l_ab = 0.0;
    double l_cls_af = 0.0;
    double l_reg_af = 0.0;
    double total = 0.0;
    double lr = 0.0;
};

namespace detail {

/// Shared loss pipeline of one recorded forward pass: per-instance level
/// tables, feature selection, target maps, classification/regression/anchor
/// losses. When `seed` is set, gradients (w.r.t. logits and post-activation
/// offsets) are accumulated into the tape, scaled by the loss weights and
/// 1/batch.
template <typename T>
StepReport compute_losses(ForwardPassT<T>& fp, const std::vector<const SampleT<T>*>& batch,
                          const TrainConfig& cfg, const std::vector<LevelAnchors>* anchors,
                          bool seed, int iteration) {
    const int levels = fp.pyramid.num_levels();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    StepReport report;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        const auto& instances = batch[n]->instances;

        if (cfg.anchor_free_enabled()) {
            PerLevelMaps maps;
            maps.cls.reserve(levels);
            maps.reg.reserve(levels);
            for (int li = 0; li < levels; ++li) {
                maps.cls.push_back(fp.extract(fp.af_cls_prob[li], static_cast<int>(n)));
                maps.reg.push_back(fp.extract(fp.af_reg[li], static_cast<int>(n)));
            }

            Assignment assignment(instances.size());
            for (std::size_t g = 0; g < instances.size(); ++g) {
                if (cfg.selection == SelectionMethod::kOnline) {
                    const LevelLossTable table =
                        instance_level_losses(instances[g], maps, fp.pyramid,
                                              cfg.offset_normalizer, cfg.eps_effective);
                    for (int li = 0; li < table.num_levels(); ++li) {
                        if (!std::isfinite(table.entries[li].sum())) {
                            throw NumericError(
                                "non-finite selection loss at iteration " +
                                std::to_string(iteration) + ", instance " + std::to_string(g) +
                                ", level " + std::to_string(table.level_min + li));
                        }
                    }
                    assignment[g] = online_select(table).level;
                } else {
                    assignment[g] = heuristic_select(instances[g].w, instances[g].h,
                                                     cfg.heuristic_l0, fp.pyramid)
                                        .level;
                }
            }

            const auto cls_targets =
                generate_class_targets(instances, assignment, fp.pyramid,
                                       fp.tape.value(fp.af_cls_prob[0]).c(), cfg.eps_effective,
                                       cfg.eps_ignoring);
            const auto reg_targets = generate_regression_targets(
                instances, assignment, fp.pyramid, cfg.offset_normalizer, cfg.eps_effective);
            const MapLoss cls = total_classification_loss(cls_targets, maps.cls);
            const MapLoss reg = total_regression_loss(reg_targets, maps.reg);
            report.l_cls_af += cls.value * inv_batch;
            report.l_reg_af += reg.value * inv_batch;
            if (seed) {
                for (int li = 0; li < levels; ++li) {
                    fp.seed_grad(fp.af_cls_logit[li], static_cast<int>(n), cls.grad[li],
                                 cfg.lambda * inv_batch);
                    fp.seed_grad(fp.af_reg[li], static_cast<int>(n), reg.grad[li],
                                 cfg.lambda * inv_batch);
                }
            }
        }

        if (cfg.anchor_based_enabled()) {
            std::vector<std::vector<double>> ab_probs, ab_deltas;
            ab_probs.reserve(levels);
            ab_deltas.reserve(levels);
            for (int li = 0; li < levels; ++li) {
                ab_probs.push_back(fp.extract(fp.ab_cls_prob[li], static_cast<int>(n)));
                ab_deltas.push_back(fp.extract(fp.ab_reg[li], static_cast<int>(n)));
            }
            const AnchorAssignment matched = match_anchors(*anchors, instances);
            const int num_classes =
                fp.tape.value(fp.ab_cls_prob[0]).c() / (*anchors)[0].per_location;
            const AnchorBranchLoss ab = anchor_branch_loss(*anchors, matched, instances, ab_probs,
                                                           ab_deltas, num_classes);
            report.l_ab += ab.value * inv_batch;
            if (seed) {
                for (int li = 0; li < levels; ++li) {
                    fp.seed_grad(fp.ab_cls_logit[li], static_cast<int>(n), ab.cls_grad[li],
                                 inv_batch);
                    fp.seed_grad(fp.ab_reg[li], static_cast<int>(n), ab.reg_grad[li], inv_batch);
                }
            }
        }
    }

    report.total = combined_loss(report.l_ab, report.l_cls_af, report.l_reg_af, cfg.lambda);
    if (!std::isfinite(report.total)) {
        throw NumericError("non-finite total loss at iteration " + std::to_string(iteration));
    }
    return report;
}

template <typename T>
TensorT<T> batch_tensor(const std::vector<const SampleT<T>*>& batch) {
    const auto& first = batch[0]->image;
    TensorT<T> images(static_cast<int>(batch.size()), first.c(), first.h(), first.w());
    for (std::size_t n = 0; n < batch.size(); ++n) {
        check_same_shape(batch[n]->image.shape, first.shape, "batch");
        std::copy(batch[n]->image.data.begin(), batch[n]->image.data.end(),
                  images.data.begin() + static_cast<std::ptrdiff_t>(n * first.size()));
    }
    return images;
}

}  // namespace detail

/// SGD with momentum and L2 weight decay over the joint detection objective.
template <typename T>
class TrainerT {
public:
    TrainerT(ModelT<T>& model, const TrainConfig& config) : model_(model), config_(config) {
        velocity_.reserve(model.params.size());
        for (const auto& p : model.params) {
            velocity_.emplace_back(p.tensor.shape[0], p.tensor.shape[1], p.tensor.shape[2],
                                   p.tensor.shape[3]);
        }
    }

    StepReport step(const std::vector<const SampleT<T>*>& batch, int iteration) {
        ForwardPassT<T> fp = forward(model_, detail::batch_tensor(batch));
        ensure_anchors(fp.pyramid);
        StepReport report = detail::compute_losses(
            fp, batch, config_, config_.anchor_based_enabled() ? &anchors_ : nullptr,
            /*seed=*/true, iteration);
        fp.tape.backward();

        const double lr = config_.lr_at(iteration);
        report.lr = lr;
        for (std::size_t p = 0; p < model_.params.size(); ++p) {
            auto& theta = model_.params[p].tensor;
            const auto& grad = fp.tape.grad(fp.param_ids[p]);
            auto& vel = velocity_[p];
            for (std::size_t i = 0; i < theta.data.size(); ++i) {
                const T g = grad.data[i] + static_cast<T>(config_.weight_decay) * theta.data[i];
                vel.data[i] = static_cast<T>(config_.momentum) * vel.data[i] + g;
                theta.data[i] -= static_cast<T>(lr) * vel.data[i];
            }
        }
        return report;
    }

private:
    void ensure_anchors(const PyramidSpec& pyramid) {
        if (!config_.anchor_based_enabled()) return;
        if (!anchors_.empty() && anchors_[0].h == pyramid.map_h(pyramid.level_min) &&
            anchors_[0].w == pyramid.map_w(pyramid.level_min)) {
            return;
        }
        anchors_ = generate_anchors(pyramid, model_.config.anchors);
    }

    ModelT<T>& model_;
    TrainConfig config_;
    std::vector<TensorT<T>> velocity_;
    std::vector<LevelAnchors> anchors_;
};

using Trainer = TrainerT<float>;

/// Mirrors an image and its annotations horizontally.
template <typename T>
SampleT<T> flip_horizontal(const SampleT<T>& sample) {
    SampleT<T> out;
    const auto& img = sample.image;
    out.image = TensorT<T>(img.n(), img.c(), img.h(), img.w());
    for (int c = 0; c < img.c(); ++c) {
        const T* src = img.plane(0, c);
        T* dst = out.image.plane(0, c);
        for (int i = 0; i < img.h(); ++i) {
            for (int j = 0; j < img.w(); ++j) dst[i * img.w() + j] = src[i * img.w() + (img.w() - 1 - j)];
        }
    }
    out.instances = sample.instances;
    for (auto& inst : out.instances) inst.x = img.w() - inst.x;
    return out;
}

/// Full training loop: deterministic batch sampling and optional horizontal
/// flips from the config seed, one report per iteration via `on_step`.
template <typename T>
void train(ModelT<T>& model, const std::vector<SampleT<T>>& dataset, const TrainConfig& config,
           const std::function<void(int, const StepReport&)>& on_step = nullptr) {
    if (dataset.empty()) throw DataError("train: empty dataset");
    TrainerT<T> trainer(model, config);
    Rng rng = Rng(config.seed).fork(0xba7c4);
    std::vector<SampleT<T>> flipped(config.batch_size);
    for (int iter = 0; iter < config.iterations; ++iter) {
        std::vector<const SampleT<T>*> batch;
        batch.reserve(config.batch_size);
        for (int b = 0; b < config.batch_size; ++b) {
            const auto idx =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(dataset.size()) - 1));
            if (config.flip_augmentation && rng.coin()) {
                flipped[b] = flip_horizontal(dataset[idx]);
                batch.push_back(&flipped[b]);
            } else {
                batch.push_back(&dataset[idx]);
            }
        }
        const StepReport report = trainer.step(batch, iter);
        if (on_step) on_step(iter, report);
    }
}

/// Finite-difference verification of the full backward pass.
struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    int checked = 0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int checked = 0;
    std::vector<GradCheckEntry> per_tensor;

    bool pass(double tol = 1e-4) const { return max_rel_err < tol; }
};

/// Compares analytic parameter gradients of the complete training loss
/// (selection, targets, all enabled branches; no weight decay) against
/// central finite differences at `fd_step`, on at least `min_samples`
/// parameters spread over every tensor. `corrupt_param` injects an offset
/// into that tensor's analytic gradient, for fault-detection tests.
template <typename T>
GradCheckReport gradient_check(ModelT<T>& model, const std::vector<SampleT<T>>& batch,
                               const TrainConfig& config, int min_samples = 240,
                               double fd_step = 1e-5, std::uint64_t seed = 99,
                               const std::string& corrupt_param = "",
                               double corrupt_delta = 1e-2) {
    static_assert(std::is_same_v<T, double>, "gradient_check requires a double-precision model");

    std::vector<const SampleT<T>*> views;
    views.reserve(batch.size());
    for (const auto& s : batch) views.push_back(&s);

    std::vector<LevelAnchors> anchors;
    auto loss_of = [&]() {
        ForwardPassT<T> fp = forward(model, detail::batch_tensor(views));
        if (config.anchor_based_enabled() && anchors.empty()) {
            anchors = generate_anchors(fp.pyramid, model.config.anchors);
        }
        return detail::compute_losses(fp, views, config,
                                      config.anchor_based_enabled() ? &anchors : nullptr,
                                      /*seed=*/false, 0)
            .total;
    };

    // Analytic gradients.
    ForwardPassT<T> fp = forward(model, detail::batch_tensor(views));
    if (config.anchor_based_enabled() && anchors.empty()) {
        anchors = generate_anchors(fp.pyramid, model.config.anchors);
    }
    detail::compute_losses(fp, views, config, config.anchor_based_enabled() ? &anchors : nullptr,
                           /*seed=*/true, 0);
    fp.tape.backward();

    Rng rng(seed);
    GradCheckReport report;
    const int n_tensors = static_cast<int>(model.params.size());
    const int per_tensor = std::max(2, (min_samples + n_tensors - 1) / n_tensors);
    for (std::size_t p = 0; p < model.params.size(); ++p) {
        auto& theta = model.params[p].tensor;
        const auto& grad = fp.tape.grad(fp.param_ids[p]);
        GradCheckEntry entry{model.params[p].name, 0.0, 0};

        const int n_here = std::min<int>(static_cast<int>(theta.data.size()), per_tensor);
        for (int s = 0; s < n_here; ++s) {
            const auto i =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(theta.size()) - 1));
            const T saved = theta.data[i];
            theta.data[i] = saved + static_cast<T>(fd_step);
            const double up = loss_of();
            theta.data[i] = saved - static_cast<T>(fd_step);
            const double down = loss_of();
            theta.data[i] = saved;

            const double fd = (up - down) / (2.0 * fd_step);
            double analytic = grad.data[i];
            if (model.params[p].name == corrupt_param) analytic += corrupt_delta;
            const double rel =
                std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
            ++entry.checked;
        }
        report.checked += entry.checked;
        if (entry.max_rel_err > report.max_rel_err) {
            report.max_rel_err = entry.max_rel_err;
            report.worst_param = entry.name;
        }
        report.per_tensor.push_back(std::move(entry));
    }
    return report;
}

}  // namespace fsaf
