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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shaperef/dictionary.hpp"
#include "shaperef/errors.hpp"
#include "shaperef/metrics.hpp"
#include "shaperef/pipeline.hpp"
#include "shaperef/sae.hpp"
#include "shaperef/training.hpp"
#include "shaperef/volume.hpp"

namespace fs = std::filesystem;

namespace shaperef {

namespace {

using Json = nlohmann::ordered_json;

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const TruncationError*>(&e)) return "truncation";
    if (dynamic_cast<const FormatError*>(&e)) return "format";
    if (dynamic_cast<const ValueError*>(&e)) return "value";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    if (dynamic_cast<const ShapeError*>(&e)) return "shape";
    if (dynamic_cast<const EmptyShapeError*>(&e)) return "empty_shape";
    if (dynamic_cast<const DegenerateShapeError*>(&e)) return "degenerate_shape";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const BuildError*>(&e)) return "build";
    if (dynamic_cast<const QueryError*>(&e)) return "query";
    if (dynamic_cast<const UndefinedMetricError*>(&e)) return "undefined_metric";
    if (dynamic_cast<const EvaluationError*>(&e)) return "evaluation";
    return "internal";
}

// Every *.mvol directly inside dir, sorted by name.
std::vector<fs::path> volumes_in(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".mvol") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw IoError("no .mvol files in " + dir.string());
    return out;
}

struct Options {
    std::string config;
    // build-dict / train-sae
    std::vector<std::string> labels;
    std::string corpus_dir;
    std::string out;
    std::string axis;
    std::optional<std::size_t> resample;
    // train-sae
    std::string loss_csv;
    std::optional<std::size_t> iterations;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> batch_size;
    std::uint64_t init_seed = 0;
    // refine / retrieve
    std::string model;
    std::string dict;
    std::string in;
    std::optional<double> threshold;
    bool pass_through = false;
    // eval
    std::string pred;
    std::string gt;
    // synth
    std::string out_dir;
    std::optional<std::size_t> count;
    std::vector<std::size_t> dims;
};

PipelineConfig base_config(const Options& o) {
    PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
    if (!o.axis.empty()) c.axis = parse_axis(o.axis);
    if (o.resample) c.resample = *o.resample;
    if (o.threshold) c.threshold = *o.threshold;
    if (o.pass_through) c.pass_through_empty = true;
    if (o.iterations) c.train.iterations = *o.iterations;
    if (o.seed) {
        c.train.seed = *o.seed;
        c.corpus.seed = *o.seed;
    }
    if (o.batch_size) c.train.batch_size = *o.batch_size;
    if (o.count) c.corpus.count = *o.count;
    if (!o.dims.empty()) {
        if (o.dims.size() != 3) throw ConfigError("--dims takes three values: x y z");
        c.corpus.dims = {o.dims[0], o.dims[1], o.dims[2]};
    }
    if (!o.model.empty()) c.model = o.model;
    if (!o.dict.empty()) c.dictionary = o.dict;
    c.validate();
    return c;
}

std::vector<fs::path> label_paths(const Options& o) {
    if (!o.corpus_dir.empty() && !o.labels.empty()) throw ConfigError("use either --labels or --corpus-dir");
    if (!o.corpus_dir.empty()) return volumes_in(o.corpus_dir);
    if (o.labels.empty()) throw ConfigError("no labels given (--labels or --corpus-dir)");
    return {o.labels.begin(), o.labels.end()};
}

void run_build_dict(const Options& o, std::ostream& out) {
    const PipelineConfig c = base_config(o);
    DictionaryMeta meta;
    meta.axis = c.axis;
    meta.resample_m = c.resample;
    const auto dict = build_dictionary(label_paths(o), meta);
    save_dictionary(dict, o.out);
    out << Json{{"entries", dict.size()}, {"path", o.out}}.dump() << '\n';
}

void run_train(const Options& o, std::ostream& out, std::ostream& err) {
    const PipelineConfig c = base_config(o);
    std::vector<MaskVolume> corpus;
    for (const auto& p : label_paths(o)) corpus.push_back(read_volume(p));
    SAEModel model(c.model_config, o.init_seed);
    const std::size_t every = std::max<std::size_t>(1, c.train.iterations / 20);
    const TrainResult r = train_sae(model, corpus, c.train, c.augmentation, [&](std::size_t it, double loss) {
        if (it % every == 0) err << "iteration " << it << " loss " << format_double17(loss) << '\n';
    });
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    save_model(model, o.out);
    if (!o.loss_csv.empty()) write_loss_csv(r.losses, o.loss_csv);
    Json j;
    j["iterations"] = r.losses.size();
    j["final_loss"] = r.losses.empty() ? Json(nullptr) : Json(r.losses.back());
    j["warnings"] = r.warnings;
    j["model"] = o.out;
    out << j.dump() << '\n';
}

void run_refine(const Options& o, std::ostream& out) {
    const PipelineConfig c = base_config(o);
    if (c.model.empty() || c.dictionary.empty()) throw ConfigError("refine needs --model and --dict");
    const SAEModel model = load_model(c.model);
    const ShapeDictionary dict = load_dictionary(c.dictionary);
    const MaskVolume seg = read_volume(o.in);
    const RefineResult r = refine(seg, dict, model, {c.threshold, c.pass_through_empty},
                                  file_label_loader(c.dictionary.parent_path()));
    write_volume(r.refined, o.out);
    out << refine_summary_json(r) << '\n';
}

void run_retrieve(const Options& o, std::ostream& out) {
    const PipelineConfig c = base_config(o);
    if (c.dictionary.empty()) throw ConfigError("retrieve needs --dict");
    const ShapeDictionary dict = load_dictionary(c.dictionary);
    const MaskVolume seg = read_volume(o.in);
    const auto hit = dict.retrieve_nearest(
        compute_descriptor(extract_middle_slice(seg, dict.meta().axis), {dict.meta().resample_m}));
    out << Json{{"retrieved_id", hit.entry->id},
                {"index", hit.index},
                {"distance", hit.distance},
                {"label_path", hit.entry->label_path}}
               .dump()
        << '\n';
}

void run_eval(const Options& o, std::ostream& out) {
    const auto report = evaluate(read_volume(o.pred), read_volume(o.gt));
    const std::string text = report_to_json(report);
    if (!o.out.empty()) {
        std::ofstream f(o.out, std::ios::trunc);
        if (!f) throw IoError("cannot write " + o.out);
        f << text << '\n';
    }
    out << text << '\n';
}

void run_synth(const Options& o, std::ostream& out) {
    const PipelineConfig c = base_config(o);
    const auto paths = synth_corpus(c.corpus, o.out_dir);
    out << Json{{"count", paths.size()}, {"dir", o.out_dir}}.dump() << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shape-dictionary retrieval and autoencoder refinement of binary segmentation masks", "shaperef"};
    app.require_subcommand(1);
    Options o;

    auto* build = app.add_subcommand("build-dict", "Describe label volumes and write a shape dictionary");
    build->add_option("--labels", o.labels, "Label volumes (.mvol)");
    build->add_option("--corpus-dir", o.corpus_dir, "Directory of label volumes");
    build->add_option("--out", o.out, "Dictionary JSON to write")->required();
    build->add_option("--axis", o.axis, "Middle-slice axis: x, y or z");
    build->add_option("--resample", o.resample, "Contour resample count (0 keeps the raw boundary)");
    build->add_option("--config", o.config, "Pipeline config JSON");

    auto* train = app.add_subcommand("train-sae", "Self-supervised autoencoder training on label volumes");
    train->add_option("--labels", o.labels, "Label volumes (.mvol)");
    train->add_option("--corpus-dir", o.corpus_dir, "Directory of label volumes");
    train->add_option("--out", o.out, "Model file to write")->required();
    train->add_option("--loss-csv", o.loss_csv, "Loss trace CSV to write");
    train->add_option("--iterations", o.iterations, "Training iterations");
    train->add_option("--batch-size", o.batch_size, "Samples per iteration");
    train->add_option("--seed", o.seed, "Training seed");
    train->add_option("--init-seed", o.init_seed, "Parameter initialization seed");
    train->add_option("--config", o.config, "Pipeline config JSON");

    auto* ref = app.add_subcommand("refine", "Refine a segmentation with a retrieved shape prior");
    ref->add_option("--model", o.model, "Model file");
    ref->add_option("--dict", o.dict, "Dictionary JSON");
    ref->add_option("--in", o.in, "Segmentation volume")->required();
    ref->add_option("--out", o.out, "Refined volume to write")->required();
    ref->add_option("--threshold", o.threshold, "Binarization threshold in (0, 1)");
    ref->add_flag("--pass-through-empty", o.pass_through, "Copy empty segmentations through instead of failing");
    ref->add_option("--config", o.config, "Pipeline config JSON");

    auto* ev = app.add_subcommand("eval", "Compare a predicted mask with ground truth");
    ev->add_option("--pred", o.pred, "Predicted volume")->required();
    ev->add_option("--gt", o.gt, "Ground-truth volume")->required();
    ev->add_option("--out", o.out, "Metrics JSON to write");

    auto* syn = app.add_subcommand("synth", "Generate the synthetic label corpus");
    syn->add_option("--out-dir", o.out_dir, "Output directory")->required();
    syn->add_option("--count", o.count, "Number of volumes");
    syn->add_option("--seed", o.seed, "Corpus seed");
    syn->add_option("--dims", o.dims, "Volume dims x y z")->expected(3);
    syn->add_option("--config", o.config, "Pipeline config JSON");

    auto* ret = app.add_subcommand("retrieve", "Nearest dictionary entry for a segmentation");
    ret->add_option("--dict", o.dict, "Dictionary JSON");
    ret->add_option("--in", o.in, "Segmentation volume")->required();
    ret->add_option("--config", o.config, "Pipeline config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        if (build->parsed()) run_build_dict(o, out);
        if (train->parsed()) run_train(o, out, err);
        if (ref->parsed()) run_refine(o, out);
        if (ev->parsed()) run_eval(o, out);
        if (syn->parsed()) run_synth(o, out);
        if (ret->parsed()) run_retrieve(o, out);
    } catch (const std::exception& e) {
        const std::string sub = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
        out << Json{{"error", {{"kind", error_kind(e)}, {"message", e.what()}, {"command", sub}}}}.dump() << '\n';
        err << "shaperef " << sub << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace shaperef
