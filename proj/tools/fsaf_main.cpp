// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line surface: synthetic data generation, target dumps, feature
// selection reports, training, inference, evaluation, gradient checking, and
// the ablation comparison.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsaf/dataset.hpp"
#include "fsaf/errors.hpp"
#include "fsaf/eval.hpp"
#include "fsaf/inference.hpp"
#include "fsaf/parallel.hpp"
#include "fsaf/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// Shared helpers

fsaf::SelectionMethod parse_selection(const std::string& s) {
    if (s == "online") return fsaf::SelectionMethod::kOnline;
    if (s == "heuristic") return fsaf::SelectionMethod::kHeuristic;
    throw fsaf::DataError("unknown selection mode: " + s);
}

fsaf::BranchMode parse_branches(const std::string& s) {
    if (s == "af") return fsaf::BranchMode::kAnchorFreeOnly;
    if (s == "ab") return fsaf::BranchMode::kAnchorBasedOnly;
    if (s == "both") return fsaf::BranchMode::kBoth;
    throw fsaf::DataError("unknown branches mode: " + s);
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw fsaf::DataError("unknown key \"" + key + "\" in " + where);
        }
    }
}

struct RunSettings {
    fsaf::ModelConfig model;
    fsaf::TrainConfig train;
    std::string train_annotations;
    std::string out_model;
    std::string out_log;
};

RunSettings settings_from_json(const json& j) {
    RunSettings rs;
    reject_unknown_keys(
        j,
        {"train_annotations", "out_model", "out_log", "iterations", "batch_size", "base_lr",
         "reference_batch", "momentum", "weight_decay", "lambda", "pi", "reg_bias", "init_sigma",
         "offset_normalizer", "eps_effective", "eps_ignoring", "heuristic_l0", "selection",
         "branches", "flip_augmentation", "warmup_iterations", "warmup_factor", "seed", "model"},
        "train config");

    rs.train_annotations = j.at("train_annotations").get<std::string>();
    rs.out_model = j.at("out_model").get<std::string>();
    rs.out_log = j.value("out_log", "");

    auto& t = rs.train;
    t.iterations = j.value("iterations", t.iterations);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.base_lr = j.value("base_lr", t.base_lr);
    t.reference_batch = j.value("reference_batch", t.reference_batch);
    t.momentum = j.value("momentum", t.momentum);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    t.lambda = j.value("lambda", t.lambda);
    t.offset_normalizer = j.value("offset_normalizer", t.offset_normalizer);
    t.eps_effective = j.value("eps_effective", t.eps_effective);
    t.eps_ignoring = j.value("eps_ignoring", t.eps_ignoring);
    t.heuristic_l0 = j.value("heuristic_l0", t.heuristic_l0);
    t.selection = parse_selection(j.value("selection", "online"));
    t.branches = parse_branches(j.value("branches", "both"));
    t.flip_augmentation = j.value("flip_augmentation", true);
    t.warmup_iterations = j.value("warmup_iterations", t.warmup_iterations);
    t.warmup_factor = j.value("warmup_factor", t.warmup_factor);
    t.seed = j.value("seed", std::uint64_t{1});

    auto& m = rs.model;
    if (j.contains("model")) {
        const json& mj = j.at("model");
        reject_unknown_keys(mj,
                            {"num_classes", "level_min", "level_max", "widths", "fpn_channels",
                             "anchor_base_scale", "seed"},
                            "train config model section");
        m.num_classes = mj.value("num_classes", m.num_classes);
        m.level_min = mj.value("level_min", m.level_min);
        m.level_max = mj.value("level_max", m.level_max);
        if (mj.contains("widths")) m.widths = mj.at("widths").get<std::vector<int>>();
        m.fpn_channels = mj.value("fpn_channels", m.fpn_channels);
        m.anchors.base_scale = mj.value("anchor_base_scale", m.anchors.base_scale);
        m.seed = mj.value("seed", std::uint64_t{1});
    }
    m.anchor_branch = t.branches != fsaf::BranchMode::kAnchorFreeOnly;
    m.pi = j.value("pi", m.pi);
    m.reg_bias = j.value("reg_bias", m.reg_bias);
    m.init_sigma = j.value("init_sigma", m.init_sigma);
    m.offset_normalizer = t.offset_normalizer;
    return rs;
}

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw fsaf::DataError("cannot open " + path);
    try {
        json j;
        is >> j;
        return j;
    } catch (const json::exception& e) {
        throw fsaf::DataError(path + ": " + e.what());
    }
}

json detection_to_json(const fsaf::Detection& d, int image_id) {
    json out = {{"class", d.class_id},
                {"score", d.score},
                {"box", {d.box.top, d.box.left, d.box.bottom, d.box.right}}};
    if (image_id >= 0) out["image_id"] = image_id;
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw fsaf::DataError("cannot open " + path);
    os << text;
}

/// Trains one model in memory from loaded samples; logs via callback.
fsaf::Model train_model(const RunSettings& rs, const std::vector<fsaf::Sample>& samples,
                        const std::function<void(int, const fsaf::StepReport&)>& on_step) {
    fsaf::Model model = fsaf::build_model<float>(rs.model);
    fsaf::train(model, samples, rs.train, on_step);
    return model;
}

std::vector<fsaf::Detection> detect_dataset_image(const fsaf::Model& model,
                                                  const fsaf::Dataset& data, int index,
                                                  const fsaf::DetectOptions& opts) {
    const fsaf::Sample sample = fsaf::load_sample(data, index);
    const fsaf::Tensor padded = fsaf::pad_to_multiple(sample.image, 1 << model.config.level_max);
    return fsaf::detect(model, padded, opts);
}

fsaf::EvalReport evaluate_model(const fsaf::Model& model, const fsaf::Dataset& data,
                                const fsaf::DetectOptions& opts) {
    std::vector<std::vector<fsaf::Detection>> dets(data.images.size());
    std::vector<std::vector<fsaf::Box>> gt(data.images.size());
    fsaf::parallel_for(static_cast<int>(data.images.size()), [&](int i) {
        dets[i] = detect_dataset_image(model, data, i, opts);
        gt[i] = data.boxes_of(data.images[i].id);
    });
    return fsaf::evaluate(dets, gt, model.config.num_classes);
}

std::string report_row(const std::string& name, const fsaf::EvalReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-16s %6.4f %6.4f %6.4f %6.4f %6.4f %6.4f", name.c_str(),
                  r.ap, r.ap50, r.ap75, r.ap_s, r.ap_m, r.ap_l);
    return buf;
}

const char* kReportHeader = "config               AP   AP50   AP75   AP_S   AP_M   AP_L";

// ---------------------------------------------------------------------------
// Subcommands

int cmd_make_synth(const fsaf::SynthOptions& opts) {
    const fsaf::Dataset d = fsaf::make_synthetic(opts);
    std::cout << "wrote " << d.images.size() << " images, " << d.instances.size()
              << " instances to " << opts.out_dir << "\n";
    return 0;
}

int cmd_gen_targets(const std::string& annotations, int image_id, const std::string& out_dir,
                    const std::string& model_path, int level_min, int level_max, int num_classes,
                    double normalizer) {
    const fsaf::Dataset data = fsaf::load_annotations(annotations);
    const auto record = std::find_if(data.images.begin(), data.images.end(),
                                     [&](const auto& im) { return im.id == image_id; });
    if (record == data.images.end()) {
        throw fsaf::DataError("image id " + std::to_string(image_id) + " not in " + annotations);
    }
    const std::vector<fsaf::Box> instances = data.boxes_of(image_id);

    fsaf::PyramidSpec pyramid{level_min, level_max, record->height, record->width};
    fsaf::Assignment assignment(instances.size());

    if (model_path.empty()) {
        for (std::size_t g = 0; g < instances.size(); ++g) {
            assignment[g] =
                fsaf::heuristic_select(instances[g].w, instances[g].h, fsaf::kCanonicalLevel,
                                       pyramid)
                    .level;
        }
    } else {
        const fsaf::Model model = fsaf::load_model(model_path);
        pyramid.level_min = model.config.level_min;
        pyramid.level_max = model.config.level_max;
        num_classes = model.config.num_classes;
        normalizer = model.config.offset_normalizer;
        const fsaf::Sample sample = fsaf::load_sample(data, (int)(record - data.images.begin()));
        const fsaf::Tensor padded =
            fsaf::pad_to_multiple(sample.image, 1 << model.config.level_max);
        const fsaf::ForwardPass fp = fsaf::forward(model, padded);
        pyramid = fp.pyramid;
        fsaf::PerLevelMaps maps;
        for (int li = 0; li < fp.pyramid.num_levels(); ++li) {
            maps.cls.push_back(fp.extract(fp.af_cls_prob[li], 0));
            maps.reg.push_back(fp.extract(fp.af_reg[li], 0));
        }
        for (std::size_t g = 0; g < instances.size(); ++g) {
            assignment[g] = fsaf::online_select(
                                fsaf::instance_level_losses(instances[g], maps, pyramid, normalizer))
                                .level;
        }
    }

    const auto cls = fsaf::generate_class_targets(instances, assignment, pyramid, num_classes);
    const auto reg = fsaf::generate_regression_targets(instances, assignment, pyramid, normalizer);
    fsaf::dump_targets(out_dir, cls, reg, normalizer);
    std::cout << "wrote target maps for image " << image_id << " (levels " << pyramid.level_min
              << ".." << pyramid.level_max << ") to " << out_dir << "\n";
    return 0;
}

int cmd_select(const std::string& annotations, const std::string& model_path,
               const std::string& out_path) {
    const fsaf::Dataset data = fsaf::load_annotations(annotations);
    const fsaf::Model model = fsaf::load_model(model_path);

    std::string text = "id, online_level, heuristic_level, agreement\n";
    std::vector<fsaf::SelectionResult> online, heuristic;
    int instance_id = 0;
    for (std::size_t i = 0; i < data.images.size(); ++i) {
        const fsaf::Sample sample = fsaf::load_sample(data, (int)i);
        if (sample.instances.empty()) continue;
        const fsaf::Tensor padded =
            fsaf::pad_to_multiple(sample.image, 1 << model.config.level_max);
        const fsaf::ForwardPass fp = fsaf::forward(model, padded);
        fsaf::PerLevelMaps maps;
        for (int li = 0; li < fp.pyramid.num_levels(); ++li) {
            maps.cls.push_back(fp.extract(fp.af_cls_prob[li], 0));
            maps.reg.push_back(fp.extract(fp.af_reg[li], 0));
        }
        for (const fsaf::Box& box : sample.instances) {
            fsaf::SelectionResult on = fsaf::online_select(fsaf::instance_level_losses(
                box, maps, fp.pyramid, model.config.offset_normalizer));
            fsaf::SelectionResult he =
                fsaf::heuristic_select(box.w, box.h, fsaf::kCanonicalLevel, fp.pyramid);
            on.instance_id = he.instance_id = instance_id++;
            text += std::to_string(on.instance_id) + ", " + std::to_string(on.level) + ", " +
                    std::to_string(he.level) + ", " +
                    (on.level == he.level ? "agree" : "disagree") + "\n";
            online.push_back(std::move(on));
            heuristic.push_back(std::move(he));
        }
    }
    const fsaf::AgreementStats stats = fsaf::agreement_stats(online, heuristic);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "total %d, disagreements %d, rate %.4f\n", stats.total,
                  stats.disagreements, stats.disagreement_rate());
    text += buf;

    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
    }
    return 0;
}

int cmd_train(const std::string& config_path) {
    const RunSettings rs = settings_from_json(load_json_file(config_path));
    const fsaf::Dataset data = fsaf::load_annotations(rs.train_annotations);
    if (data.images.empty()) throw fsaf::DataError("training dataset is empty");
    const std::vector<fsaf::Sample> samples = fsaf::load_samples(data);

    std::ofstream log;
    if (!rs.out_log.empty()) {
        log.open(rs.out_log);
        if (!log) throw fsaf::DataError("cannot open " + rs.out_log);
        log << "iteration,l_ab,l_cls_af,l_reg_af,total,lr\n";
    }
    const fsaf::Model model =
        train_model(rs, samples, [&](int iter, const fsaf::StepReport& r) {
            if (log.is_open()) {
                char buf[192];
                std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", iter, r.l_ab,
                              r.l_cls_af, r.l_reg_af, r.total, r.lr);
                log << buf;
            }
            if ((iter + 1) % 100 == 0) {
                std::cout << "iter " << (iter + 1) << "/" << rs.train.iterations
                          << " total " << r.total << "\n";
            }
        });
    fsaf::save_model(model, rs.out_model);
    std::cout << "wrote model to " << rs.out_model << "\n";
    return 0;
}

int cmd_infer(const std::string& model_path, const std::string& image_path,
              const std::string& annotations, const std::string& out_path,
              const std::string& branches, double score_thresh, double nms_thresh, int top_k,
              bool clip) {
    const fsaf::Model model = fsaf::load_model(model_path);
    fsaf::DetectOptions opts;
    opts.score_thresh = score_thresh;
    opts.nms_thresh = nms_thresh;
    opts.top_k = top_k;
    opts.clip_to_image = clip;
    const fsaf::BranchMode mode = parse_branches(branches);
    opts.anchor_free = mode != fsaf::BranchMode::kAnchorBasedOnly;
    opts.anchor_based = mode != fsaf::BranchMode::kAnchorFreeOnly;

    json out = json::array();
    if (!image_path.empty()) {
        const fsaf::Tensor image = fsaf::pad_to_multiple(
            fsaf::tensor_from_image(fsaf::read_ppm(image_path)), 1 << model.config.level_max);
        for (const auto& d : fsaf::detect(model, image, opts)) {
            out.push_back(detection_to_json(d, -1));
        }
    } else {
        const fsaf::Dataset data = fsaf::load_annotations(annotations);
        std::vector<std::vector<fsaf::Detection>> dets(data.images.size());
        fsaf::parallel_for(static_cast<int>(data.images.size()), [&](int i) {
            dets[i] = detect_dataset_image(model, data, i, opts);
        });
        for (std::size_t i = 0; i < data.images.size(); ++i) {
            for (const auto& d : dets[i]) out.push_back(detection_to_json(d, data.images[i].id));
        }
    }
    const std::string text = out.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text(out_path, text);
    }
    return 0;
}

int cmd_eval(const std::string& detections_path, const std::string& annotations, int num_classes,
             const std::string& out_path) {
    const fsaf::Dataset data = fsaf::load_annotations(annotations);
    const json dets_json = load_json_file(detections_path);

    std::map<int, std::size_t> index_of;
    std::vector<std::vector<fsaf::Detection>> dets(data.images.size());
    std::vector<std::vector<fsaf::Box>> gt(data.images.size());
    for (std::size_t i = 0; i < data.images.size(); ++i) {
        index_of[data.images[i].id] = i;
        gt[i] = data.boxes_of(data.images[i].id);
    }
    int max_class = 0;
    for (const auto& inst : data.instances) max_class = std::max(max_class, inst.box.class_id);
    if (num_classes <= 0) num_classes = max_class + 1;

    for (const auto& dj : dets_json) {
        if (!dj.contains("image_id")) {
            throw fsaf::DataError("detections must carry image_id for evaluation");
        }
        const int id = dj.at("image_id").get<int>();
        const auto it = index_of.find(id);
        if (it == index_of.end()) {
            throw fsaf::DataError("detection references unknown image id " + std::to_string(id));
        }
        fsaf::Detection d;
        d.class_id = dj.at("class").get<int>();
        d.score = dj.at("score").get<double>();
        const auto& b = dj.at("box");
        d.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>()};
        dets[it->second].push_back(d);
    }

    const fsaf::EvalReport r = fsaf::evaluate(dets, gt, num_classes);
    json out = {{"AP", r.ap},     {"AP50", r.ap50}, {"AP75", r.ap75},
                {"AP_S", r.ap_s}, {"AP_M", r.ap_m}, {"AP_L", r.ap_l},
                {"per_class", r.per_class}};
    std::cout << kReportHeader << "\n" << report_row("detections", r) << "\n";
    if (!out_path.empty()) write_text(out_path, out.dump(2) + "\n");
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    fsaf::ModelConfig mc = fsaf::ModelConfig::tiny();
    mc.seed = seed;
    auto model = fsaf::build_model<double>(mc);

    fsaf::Rng rng(seed);
    std::vector<fsaf::SampleT<double>> batch;
    for (int n = 0; n < 2; ++n) {
        fsaf::SampleT<double> s;
        s.image = fsaf::TensorT<double>(1, 3, 32, 32);
        for (auto& v : s.image.data) v = 0.75 + rng.uniform(-0.05, 0.05);
        const int count = n + 1;
        for (int g = 0; g < count; ++g) {
            fsaf::Box b;
            b.class_id = (int)rng.uniform_int(0, mc.num_classes - 1);
            b.w = rng.uniform(8, 20);
            b.h = rng.uniform(8, 20);
            b.x = rng.uniform(b.w / 2, 32 - b.w / 2);
            b.y = rng.uniform(b.h / 2, 32 - b.h / 2);
            const double color[3] = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
            const int top = (int)std::lround(b.y - b.h / 2);
            const int left = (int)std::lround(b.x - b.w / 2);
            for (int c = 0; c < 3; ++c) {
                double* plane = s.image.plane(0, c);
                for (int i = std::max(0, top); i < std::min(32, top + (int)b.h); ++i) {
                    for (int j = std::max(0, left); j < std::min(32, left + (int)b.w); ++j) {
                        plane[i * 32 + j] = color[c];
                    }
                }
            }
            s.instances.push_back(b);
        }
        batch.push_back(std::move(s));
    }

    fsaf::TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.reference_batch = 2;
    cfg.weight_decay = 0.0;

    const fsaf::GradCheckReport report = fsaf::gradient_check(model, batch, cfg);
    std::printf("checked %d parameters over %zu tensors\n", report.checked,
                report.per_tensor.size());
    std::printf("max relative error %.3e (%s)\n", report.max_rel_err,
                report.worst_param.c_str());
    if (!report.pass(1e-4)) {
        std::printf("FAIL: tolerance 1e-4 exceeded\n");
        return kExitNumeric;
    }
    std::printf("PASS: within 1e-4\n");
    return 0;
}

struct AblateParams {
    std::string work_dir;
    std::vector<std::uint64_t> seeds = {7};
    int iterations = 600;
    int train_images = 200;
    int val_images = 60;
    int image_size = 128;
    int num_classes = 3;
    int batch_size = 4;
};

int cmd_ablate(const AblateParams& p) {
    fs::create_directories(p.work_dir);

    fsaf::SynthOptions synth;
    synth.image_size = p.image_size;
    synth.num_classes = p.num_classes;
    synth.min_instances = 1;
    synth.max_instances = 3;

    synth.num_images = p.train_images;
    synth.seed = 1001;
    synth.out_dir = (fs::path(p.work_dir) / "train").string();
    const fsaf::Dataset train_data = fsaf::make_synthetic(synth);
    synth.num_images = p.val_images;
    synth.seed = 2002;
    synth.out_dir = (fs::path(p.work_dir) / "val").string();
    const fsaf::Dataset val_data = fsaf::make_synthetic(synth);

    const std::vector<fsaf::Sample> samples = fsaf::load_samples(train_data);

    struct Config {
        const char* name;
        fsaf::BranchMode branches;
        fsaf::SelectionMethod selection;
        double lambda;
    };
    const Config configs[] = {
        {"ab-only", fsaf::BranchMode::kAnchorBasedOnly, fsaf::SelectionMethod::kOnline, 0.5},
        {"af-heuristic", fsaf::BranchMode::kAnchorFreeOnly, fsaf::SelectionMethod::kHeuristic, 1.0},
        {"af-online", fsaf::BranchMode::kAnchorFreeOnly, fsaf::SelectionMethod::kOnline, 1.0},
        {"joint-online", fsaf::BranchMode::kBoth, fsaf::SelectionMethod::kOnline, 0.5},
    };

    std::cout << kReportHeader << "  (per seed, then median AP)\n";
    std::map<std::string, std::vector<double>> ap_by_config;
    for (const std::uint64_t seed : p.seeds) {
        for (const Config& c : configs) {
            RunSettings rs;
            rs.model.num_classes = p.num_classes;
            rs.model.anchor_branch = c.branches != fsaf::BranchMode::kAnchorFreeOnly;
            rs.model.seed = seed;
            rs.train.iterations = p.iterations;
            rs.train.batch_size = p.batch_size;
            rs.train.reference_batch = 16;
            rs.train.branches = c.branches;
            rs.train.selection = c.selection;
            rs.train.lambda = c.lambda;
            rs.train.seed = seed;

            const fsaf::Model model = train_model(rs, samples, nullptr);
            fsaf::DetectOptions opts;
            opts.anchor_free = c.branches != fsaf::BranchMode::kAnchorBasedOnly;
            opts.anchor_based = c.branches != fsaf::BranchMode::kAnchorFreeOnly;
            const fsaf::EvalReport r = evaluate_model(model, val_data, opts);
            ap_by_config[c.name].push_back(r.ap);
            std::cout << report_row(std::string(c.name) + "/s" + std::to_string(seed), r) << "\n";
        }
    }

    std::cout << "\nmedian AP over " << p.seeds.size() << " seed(s):\n";
    for (const Config& c : configs) {
        auto values = ap_by_config[c.name];
        std::sort(values.begin(), values.end());
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-16s %6.4f", c.name, values[values.size() / 2]);
        std::cout << buf << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-selective anchor-free detection toolkit"};
    app.require_subcommand(1);

    // make-synth
    auto* synth_cmd = app.add_subcommand("make-synth", "Generate a synthetic dataset");
    fsaf::SynthOptions synth;
    synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
    synth_cmd->add_option("--images", synth.num_images, "Number of images");
    synth_cmd->add_option("--size", synth.image_size, "Image side length");
    synth_cmd->add_option("--classes", synth.num_classes, "Number of classes");
    synth_cmd->add_option("--min-instances", synth.min_instances, "Min instances per image");
    synth_cmd->add_option("--max-instances", synth.max_instances, "Max instances per image");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");

    // gen-targets
    auto* gen_cmd = app.add_subcommand("gen-targets", "Dump supervision maps for one image");
    std::string gen_ann, gen_out, gen_model;
    int gen_image = 0, gen_lmin = 3, gen_lmax = 5, gen_classes = 3;
    double gen_s = 4.0;
    gen_cmd->add_option("--annotations", gen_ann, "Annotation JSON")->required();
    gen_cmd->add_option("--image-id", gen_image, "Image id")->required();
    gen_cmd->add_option("--out", gen_out, "Output directory")->required();
    gen_cmd->add_option("--model", gen_model, "Model file (enables loss-based selection)");
    gen_cmd->add_option("--level-min", gen_lmin, "Lowest pyramid level");
    gen_cmd->add_option("--level-max", gen_lmax, "Highest pyramid level");
    gen_cmd->add_option("--classes", gen_classes, "Number of classes");
    gen_cmd->add_option("--normalizer", gen_s, "Offset normalizer S");

    // select
    auto* sel_cmd = app.add_subcommand("select", "Per-instance level selection report");
    std::string sel_ann, sel_model, sel_out;
    sel_cmd->add_option("--annotations", sel_ann, "Annotation JSON")->required();
    sel_cmd->add_option("--model", sel_model, "Model file")->required();
    sel_cmd->add_option("--out", sel_out, "Output file (default stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a detector from a JSON config");
    std::string train_config;
    train_cmd->add_option("--config", train_config, "JSON config file")->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Run detection");
    std::string inf_model, inf_image, inf_ann, inf_out, inf_branches = "both";
    double inf_thresh = 0.05, inf_nms = 0.5;
    int inf_topk = 1000;
    bool inf_clip = false;
    infer_cmd->add_option("--model", inf_model, "Model file")->required();
    infer_cmd->add_option("--image", inf_image, "Single PPM image");
    infer_cmd->add_option("--annotations", inf_ann, "Annotation JSON (whole dataset)");
    infer_cmd->add_option("--out", inf_out, "Output JSON (default stdout)");
    infer_cmd->add_option("--branches", inf_branches, "af | ab | both");
    infer_cmd->add_option("--score-thresh", inf_thresh, "Confidence threshold");
    infer_cmd->add_option("--nms-thresh", inf_nms, "Suppression IoU threshold");
    infer_cmd->add_option("--top-k", inf_topk, "Per-level candidate cap");
    infer_cmd->add_flag("--clip", inf_clip, "Clip boxes to the image");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score detections against annotations");
    std::string ev_dets, ev_ann, ev_out;
    int ev_classes = 0;
    eval_cmd->add_option("--detections", ev_dets, "Detections JSON")->required();
    eval_cmd->add_option("--annotations", ev_ann, "Annotation JSON")->required();
    eval_cmd->add_option("--classes", ev_classes, "Class count (default: from annotations)");
    eval_cmd->add_option("--out", ev_out, "Report JSON path");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Verify gradients by finite differences");
    std::uint64_t grad_seed = 5;
    grad_cmd->add_option("--seed", grad_seed, "Random seed");

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "Train and score the branch/selection variants");
    AblateParams abl;
    std::vector<std::uint64_t> abl_seeds;
    abl_cmd->add_option("--work", abl.work_dir, "Working directory")->required();
    abl_cmd->add_option("--seeds,--seed", abl_seeds, "Training seeds");
    abl_cmd->add_option("--iterations", abl.iterations, "Iterations per run");
    abl_cmd->add_option("--train-images", abl.train_images, "Training set size");
    abl_cmd->add_option("--val-images", abl.val_images, "Validation set size");
    abl_cmd->add_option("--size", abl.image_size, "Image side length");
    abl_cmd->add_option("--classes", abl.num_classes, "Number of classes");
    abl_cmd->add_option("--batch", abl.batch_size, "Batch size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth_cmd->parsed()) return cmd_make_synth(synth);
        if (gen_cmd->parsed()) {
            return cmd_gen_targets(gen_ann, gen_image, gen_out, gen_model, gen_lmin, gen_lmax,
                                   gen_classes, gen_s);
        }
        if (sel_cmd->parsed()) return cmd_select(sel_ann, sel_model, sel_out);
        if (train_cmd->parsed()) return cmd_train(train_config);
        if (infer_cmd->parsed()) {
            if (inf_image.empty() == inf_ann.empty()) {
                std::cerr << "infer: provide exactly one of --image / --annotations\n";
                return kExitUsage;
            }
            return cmd_infer(inf_model, inf_image, inf_ann, inf_out, inf_branches, inf_thresh,
                             inf_nms, inf_topk, inf_clip);
        }
        if (eval_cmd->parsed()) return cmd_eval(ev_dets, ev_ann, ev_classes, ev_out);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_seed);
        if (abl_cmd->parsed()) {
            if (!abl_seeds.empty()) abl.seeds = abl_seeds;
            return cmd_ablate(abl);
        }
    } catch (const fsaf::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const fsaf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
