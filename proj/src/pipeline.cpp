/*
 * Copyright (c) 2026, The shaperef Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shaperef/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shaperef/errors.hpp"
#include "shaperef/fourier.hpp"
#include "shaperef/random.hpp"

namespace shaperef {

namespace {

using Json = nlohmann::ordered_json;

struct FamilyShape {
    double semi_a;
    double semi_b;
    double exponent;
};

FamilyShape family_shape(ShapeFamily family, double unit, Rng& rng) {
    switch (family) {
        case ShapeFamily::Round: {
            const double a = uniform_real(rng, 14.0, 18.0) * unit;
            return {a, a * uniform_real(rng, 0.95, 1.0), 2.0};
        }
        case ShapeFamily::Elongated: {
            const double a = uniform_real(rng, 18.0, 21.0) * unit;
            return {a, a / 1.4 * uniform_real(rng, 0.95, 1.05), 2.0};
        }
        case ShapeFamily::Boxy: {
            const double a = uniform_real(rng, 13.0, 16.0) * unit;
            return {a, a * uniform_real(rng, 0.9, 1.0), 4.0};
        }
    }
    throw ConfigError("unknown shape family");
}

}  // namespace

std::string_view family_name(ShapeFamily family) {
    switch (family) {
        case ShapeFamily::Round: return "round";
        case ShapeFamily::Elongated: return "elongated";
        case ShapeFamily::Boxy: return "boxy";
    }
    return "unknown";
}

ShapeFamily parse_family(std::string_view name) {
    if (name == "round") return ShapeFamily::Round;
    if (name == "elongated") return ShapeFamily::Elongated;
    if (name == "boxy") return ShapeFamily::Boxy;
    throw ConfigError("unknown shape family '" + std::string(name) + "'");
}

void CorpusParams::validate() const {
    if (count == 0) throw ConfigError("corpus count must be >= 1");
    if (dims.x < 16 || dims.y < 16 || dims.z == 0) throw ConfigError("corpus volumes must be at least 16x16 in-plane");
    if (families.empty()) throw ConfigError("at least one shape family is required");
}

SyntheticVolume synth_volume(const CorpusParams& params, std::size_t index) {
    params.validate();
    Rng rng = make_rng(params.seed, index, SeedRole::Corpus);
    const ShapeFamily family = params.families[index % params.families.size()];
    const auto& d = params.dims;
    const double unit = static_cast<double>(std::min(d.x, d.y)) / 64.0;
    const FamilyShape shape = family_shape(family, unit, rng);
    const double angle = uniform_real(rng, 0.0, std::numbers::pi);
    const double cx = (static_cast<double>(d.x) - 1.0) / 2.0 + uniform_real(rng, -3.0, 3.0) * unit;
    const double cy = (static_cast<double>(d.y) - 1.0) / 2.0 + uniform_real(rng, -3.0, 3.0) * unit;
    std::array<double, 3> amplitude{};
    std::array<double, 3> phase{};
    for (std::size_t k = 0; k < 3; ++k) {
        amplitude[k] = uniform_real(rng, 0.0, 0.05);
        phase[k] = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    }
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    const double zc = (static_cast<double>(d.z) - 1.0) / 2.0;
    const double zr = std::max(1.0, zc);

    MaskVolume v(d, params.spacing);
    for (std::size_t z = 0; z < d.z; ++z) {
        const double zeta = (static_cast<double>(z) - zc) / zr;
        const double taper = 1.0 - 0.2 * zeta * zeta;
        for (std::size_t y = 0; y < d.y; ++y) {
            for (std::size_t x = 0; x < d.x; ++x) {
                const double px = static_cast<double>(x) - cx;
                const double py = static_cast<double>(y) - cy;
                const double u = ca * px + sa * py;
                const double w = -sa * px + ca * py;
                const double rho = std::pow(std::pow(std::abs(u) / shape.semi_a, shape.exponent) +
                                                std::pow(std::abs(w) / shape.semi_b, shape.exponent),
                                            1.0 / shape.exponent);
                const double theta = std::atan2(w, u);
                double bound = 1.0;
                for (std::size_t k = 0; k < 3; ++k) {
                    bound += amplitude[k] * std::cos(static_cast<double>(k + 2) * theta + phase[k]);
                }
                if (rho <= taper * bound) v.set(x, y, z, true);
            }
        }
    }
    return {std::move(v), family};
}

std::vector<std::filesystem::path> synth_corpus(const CorpusParams& params, const std::filesystem::path& out_dir) {
    params.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> paths;
    Json volumes = Json::array();
    for (std::size_t i = 0; i < params.count; ++i) {
        const SyntheticVolume s = synth_volume(params, i);
        char name[32];
        std::snprintf(name, sizeof name, "vol_%04zu.mvol", i);
        const auto path = out_dir / name;
        write_volume(s.volume, path);
        paths.push_back(path);
        volumes.push_back({{"file", name}, {"family", family_name(s.family)}, {"index", i}});
    }
    Json manifest;
    manifest["format"] = "shaperef-corpus";
    manifest["version"] = 1;
    manifest["seed"] = params.seed;
    manifest["dims"] = {params.dims.x, params.dims.y, params.dims.z};
    manifest["spacing"] = {params.spacing.x, params.spacing.y, params.spacing.z};
    manifest["volumes"] = volumes;
    std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write corpus manifest in " + out_dir.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("short write to corpus manifest");
    return paths;
}

void PipelineConfig::validate() const {
    if (resample != 0 && resample < 8) throw ConfigError("resample must be 0 or >= 8");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    augmentation.validate();
    train.validate();
    model_config.validate();
    corpus.validate();
}

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read_range(const Json& j, const char* key, T& lo, T& hi) {
    if (!j.contains(key)) return;
    const auto r = j.at(key).get<std::array<T, 2>>();
    lo = r[0];
    hi = r[1];
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& text) {
    PipelineConfig c;
    try {
        const Json j = Json::parse(text);
        reject_unknown(j,
                       {"dictionary", "model", "axis", "resample", "threshold", "pass_through_empty", "augmentation",
                        "train", "model_config", "corpus"},
                       "pipeline config");
        if (j.contains("dictionary")) c.dictionary = j.at("dictionary").get<std::string>();
        if (j.contains("model")) c.model = j.at("model").get<std::string>();
        if (j.contains("axis")) c.axis = parse_axis(j.at("axis").get<std::string>());
        read(j, "resample", c.resample);
        read(j, "threshold", c.threshold);
        read(j, "pass_through_empty", c.pass_through_empty);
        if (j.contains("augmentation")) {
            const Json& a = j.at("augmentation");
            reject_unknown(a, {"rotation_deg", "scale", "translation", "fp_blobs", "fn_blobs", "blob_radius"},
                           "augmentation");
            read(a, "rotation_deg", c.augmentation.transform.rotation_deg);
            read_range(a, "scale", c.augmentation.transform.scale_lo, c.augmentation.transform.scale_hi);
            read(a, "translation", c.augmentation.transform.translation);
            read_range(a, "fp_blobs", c.augmentation.noise.fp_min, c.augmentation.noise.fp_max);
            read_range(a, "fn_blobs", c.augmentation.noise.fn_min, c.augmentation.noise.fn_max);
            read_range(a, "blob_radius", c.augmentation.noise.radius_min, c.augmentation.noise.radius_max);
        }
        if (j.contains("train")) {
            const Json& t = j.at("train");
            reject_unknown(t,
                           {"learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "batch_size", "iterations",
                            "seed", "clip_eps"},
                           "train");
            read(t, "learning_rate", c.train.learning_rate);
            read(t, "beta1", c.train.beta1);
            read(t, "beta2", c.train.beta2);
            read(t, "epsilon", c.train.epsilon);
            read(t, "weight_decay", c.train.weight_decay);
            read(t, "batch_size", c.train.batch_size);
            read(t, "iterations", c.train.iterations);
            read(t, "seed", c.train.seed);
            read(t, "clip_eps", c.train.clip_eps);
        }
        if (j.contains("model_config")) c.model_config = config_from_json(j.at("model_config").dump());
        if (j.contains("corpus")) {
            const Json& k = j.at("corpus");
            reject_unknown(k, {"count", "dims", "spacing", "seed", "families"}, "corpus");
            read(k, "count", c.corpus.count);
            read(k, "seed", c.corpus.seed);
            if (k.contains("dims")) {
                const auto d = k.at("dims").get<std::array<std::size_t, 3>>();
                c.corpus.dims = {d[0], d[1], d[2]};
            }
            if (k.contains("spacing")) {
                const auto s = k.at("spacing").get<std::array<float, 3>>();
                c.corpus.spacing = {s[0], s[1], s[2]};
            }
            if (k.contains("families")) {
                c.corpus.families.clear();
                for (const auto& f : k.at("families")) c.corpus.families.push_back(parse_family(f.get<std::string>()));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
    Json j;
    j["dictionary"] = c.dictionary.string();
    j["model"] = c.model.string();
    j["axis"] = std::string(axis_name(c.axis));
    j["resample"] = c.resample;
    j["threshold"] = c.threshold;
    j["pass_through_empty"] = c.pass_through_empty;
    const auto& tr = c.augmentation.transform;
    const auto& n = c.augmentation.noise;
    j["augmentation"] = {{"rotation_deg", tr.rotation_deg},
                         {"scale", {tr.scale_lo, tr.scale_hi}},
                         {"translation", tr.translation},
                         {"fp_blobs", {n.fp_min, n.fp_max}},
                         {"fn_blobs", {n.fn_min, n.fn_max}},
                         {"blob_radius", {n.radius_min, n.radius_max}}};
    const auto& t = c.train;
    j["train"] = {{"learning_rate", t.learning_rate}, {"beta1", t.beta1},       {"beta2", t.beta2},
                  {"epsilon", t.epsilon},             {"weight_decay", t.weight_decay}, {"batch_size", t.batch_size},
                  {"iterations", t.iterations},       {"seed", t.seed},         {"clip_eps", t.clip_eps}};
    j["model_config"] = Json::parse(config_to_json(c.model_config));
    Json families = Json::array();
    for (auto f : c.corpus.families) families.push_back(family_name(f));
    j["corpus"] = {{"count", c.corpus.count},
                   {"dims", {c.corpus.dims.x, c.corpus.dims.y, c.corpus.dims.z}},
                   {"spacing", {c.corpus.spacing.x, c.corpus.spacing.y, c.corpus.spacing.z}},
                   {"seed", c.corpus.seed},
                   {"families", families}};
    return j.dump(2);
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return pipeline_config_from_json(ss.str());
}

LabelLoader file_label_loader(std::filesystem::path dictionary_dir) {
    return [dir = std::move(dictionary_dir)](const DictionaryEntry& entry) {
        return read_volume(resolve_label_path(entry, dir));
    };
}

namespace {

// Depth slab [z0, z0 + depth) as a [depth, H, W] array; planes past the end stay 0.
NdArray slab_array(const MaskVolume& v, std::size_t z0, std::size_t depth) {
    const auto& d = v.dims();
    NdArray a(Shape{depth, d.y, d.x});
    const std::size_t plane = d.x * d.y;
    for (std::size_t z = z0; z < std::min(d.z, z0 + depth); ++z) {
        const auto src = v.voxels().subspan(z * plane, plane);
        for (std::size_t i = 0; i < plane; ++i) a[(z - z0) * plane + i] = src[i];
    }
    return a;
}

}  // namespace

RefineResult refine(const MaskVolume& seg, const ShapeDictionary& dictionary, const SAEModel& model,
                    const RefineOptions& options, const LabelLoader& load_label) {
    if (!(options.threshold > 0.0 && options.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (dictionary.meta().convention != kDescriptorConvention) {
        throw ConfigError("dictionary descriptor convention '" + dictionary.meta().convention +
                          "' does not match this build");
    }
    const auto& in = model.config().input_dims;
    const auto& d = seg.dims();
    if (d.x != in[2] || d.y != in[1]) {
        throw ShapeError("segmentation in-plane dims " + std::to_string(d.x) + "x" + std::to_string(d.y) +
                         " differ from the model's " + std::to_string(in[2]) + "x" + std::to_string(in[1]));
    }

    RefineResult result;
    RetrievalResult hit;
    try {
        if (seg.foreground_count() == 0) throw EmptyShapeError("segmentation has no foreground");
        const MaskSlice middle = extract_middle_slice(seg, dictionary.meta().axis);
        hit = dictionary.retrieve_nearest(compute_descriptor(middle, {dictionary.meta().resample_m}));
    } catch (const EmptyShapeError&) {
        if (!options.pass_through_empty) throw;
        result.refined = seg;
        result.passed_through = true;
        result.flags.emplace_back("empty_segmentation_pass_through");
        return result;
    }
    result.retrieved_id = hit.entry->id;
    result.distance = hit.distance;

    const MaskVolume label = load_label(*hit.entry);
    if (label.dims() != d) throw ShapeError("retrieved label '" + hit.entry->id + "' dims differ from the segmentation");

    const std::size_t depth = in[0];
    const std::size_t slabs = (d.z + depth - 1) / depth;
    result.slabs = slabs;
    std::vector<std::uint8_t> voxels(d.count(), 0);
    const std::size_t plane = d.x * d.y;
    std::vector<std::exception_ptr> failures(slabs);
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(slabs); ++s) {
        try {
            const std::size_t z0 = static_cast<std::size_t>(s) * depth;
            const ad::Var p = model.forward(slab_array(label, z0, depth), slab_array(seg, z0, depth));
            const auto probs = p.value().data();
            for (std::size_t z = z0; z < std::min(d.z, z0 + depth); ++z) {
                for (std::size_t i = 0; i < plane; ++i) {
                    voxels[z * plane + i] = probs[(z - z0) * plane + i] >= options.threshold ? 1 : 0;
                }
            }
        } catch (...) {
            failures[static_cast<std::size_t>(s)] = std::current_exception();
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    if (d.z % depth != 0) result.flags.emplace_back("last_slab_zero_padded");
    result.refined = MaskVolume(d, seg.spacing(), std::move(voxels));
    return result;
}

std::string refine_summary_json(const RefineResult& r) {
    Json j;
    j["retrieved_id"] = r.passed_through ? Json(nullptr) : Json(r.retrieved_id);
    j["distance"] = r.distance ? Json(*r.distance) : Json(nullptr);
    j["slabs"] = r.slabs;
    j["passed_through"] = r.passed_through;
    j["flags"] = r.flags;
    return j.dump();
}

}  // namespace shaperef
