// Copyright 2026 The mffseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mffseg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mffseg/bench.hpp"
#include "mffseg/config.hpp"
#include "mffseg/palette.hpp"
#include "mffseg/png_io.hpp"
#include "mffseg/synthetic.hpp"
#include "mffseg/trainer.hpp"

namespace mffseg::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return 2;
        case ErrorKind::Config: return 3;
        case ErrorKind::Data: return 4;
        case ErrorKind::Numerical:
        case ErrorKind::Runtime: return 5;
    }
    return 5;
}

namespace {

const char* kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Config: return "config";
        case ErrorKind::Data: return "data";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Runtime: return "runtime";
    }
    return "runtime";
}

void report_error(std::ostream& err, const char* kind, std::string message) {
    for (auto& ch : message)
        if (ch == '\n' || ch == '\r') ch = ' ';
    err << "mffseg: error=" << kind << " message=" << message << std::endl;
}

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::string> task;
    std::string branch;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::string data_root;
    std::string checkpoint;
    bool deterministic = false;
    std::optional<int> n;
    std::string split = "test";
};

config::RunConfig run_config(const Options& o) {
    config::KeyValues kv;
    if (!o.config.empty()) kv = config::read_config_file(o.config);
    for (const auto& s : o.sets) config::apply_override(kv, s);
    if (o.task) kv["task"] = *o.task;
    if (o.seed) kv["seed"] = std::to_string(*o.seed);
    if (o.deterministic) kv["deterministic"] = "true";
    if (o.n) kv["synth.n"] = std::to_string(*o.n);
    return config::build_run_config(kv);
}

void require(bool cond, const std::string& what) {
    if (!cond) throw Error(ErrorKind::Usage, what);
}

data::DatasetManifest load_data(const Options& o, const TaskSpec& task) {
    require(!o.data_root.empty(), "--data-root is required");
    const fs::path root = o.data_root;
    data::DatasetManifest m = fs::exists(root / "manifest.txt") ? data::read_manifest(root / "manifest.txt")
                                                                : data::scan_dataset(root, task, "endovis");
    m.task = task;
    return m;
}

std::optional<data::ChannelMeans> stored_means(const Options& o) {
    const fs::path p = fs::path(o.data_root) / "means.txt";
    if (fs::exists(p)) return data::read_means(p);
    return std::nullopt;
}

data::DatasetManifest select_split(const data::DatasetManifest& m, const std::string& split) {
    if (split == "all") return m;
    auto [train, test] = data::split_train_test(m);
    if (split == "train") return train;
    if (split == "test") return test;
    throw Error(ErrorKind::Usage, "--split must be train, test or all (got '" + split + "')");
}

TaskSpec model_task(const Options& o, const train::LoadedModel& model) {
    if (!o.task) return model.task;
    const TaskSpec t = TaskSpec::parse(*o.task);
    MFFSEG_CHECK(t.num_classes == model.task.num_classes, ConfigError,
                 "checkpoint was trained for " + model.task.name() + ", not " + t.name());
    return t;
}

std::string output_name(const std::string& frame_path) {
    const fs::path p(frame_path);
    const auto first = p.begin() != p.end() ? p.begin()->string() : std::string();
    return first == p.filename().string() ? first : first + "_" + p.filename().string();
}

int cmd_synth(const Options& o, std::ostream& out) {
    const auto rc = run_config(o);
    const fs::path dir = o.out;
    auto m = data::generate_synthetic(dir, rc.synth_n, rc.synth_height, rc.synth_width, rc.task, rc.train.seed,
                                      rc.synth_sequences);
    auto [train, test] = data::split_train_test(m);
    data::DatasetManifest portable = m;
    portable.root = ".";
    data::write_manifest(dir / "manifest.txt", portable);
    if (!train.samples.empty()) {
        data::write_means(dir / "means.txt", data::compute_channel_means(train));
    } else {
        fs::remove(dir / "means.txt");
    }
    out << "synth: " << m.samples.size() << " samples (train " << train.samples.size() << ", test "
        << test.samples.size() << ") in " << dir.string() << "\n";
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto rc = run_config(o);
    const auto all = load_data(o, rc.task);
    auto [train, test] = data::split_train_test(all);
    MFFSEG_CHECK(!train.samples.empty(), DataError, "training split is empty");
    train::FitOptions fo;
    fo.out_dir = o.out;
    fo.means = stored_means(o);
    fo.eval_manifest = &test;
    if (!o.checkpoint.empty()) fo.resume = fs::path(o.checkpoint);
    const auto result = train::fit(rc.train, rc.network, train, fo);
    data::write_means(fs::path(o.out) / "means.txt", result.means);
    out << "train: " << result.history.size() << " iterations, checkpoint " << result.checkpoint.string() << "\n";
    if (!result.history.empty()) out << train::to_log_line(result.history.back()) << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto rc = run_config(o);
    require(!o.checkpoint.empty(), "--checkpoint is required");
    auto model = train::load_model(o.checkpoint);
    const TaskSpec task = model_task(o, model);
    const auto manifest = select_split(load_data(o, task), o.split);
    train::EvalOptions eo;
    eo.branch = infer::parse_branch(o.branch.empty() ? "main" : o.branch);
    eo.bench.warmup = rc.bench_warmup;
    eo.bench.iters = rc.bench_iters;
    eo.crop = rc.train.crop;
    const auto report = train::evaluate(*model.segmentor, manifest, model.means, task, eo);
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / ("metrics_" + report.branch + ".txt")) << metrics::to_text(report);
    out << metrics::to_json(report) << "\n";
    return 0;
}

int cmd_bench(const Options& o, std::ostream& out) {
    const auto rc = run_config(o);
    std::unique_ptr<nn::Segmentor<float>> owned;
    TaskSpec task = rc.task;
    if (!o.checkpoint.empty()) {
        auto model = train::load_model(o.checkpoint);
        task = model_task(o, model);
        owned = std::move(model.segmentor);
    } else {
        owned = std::make_unique<nn::Segmentor<float>>(rc.network, rc.train.seed);
    }
    std::vector<infer::Branch> branches;
    if (o.branch.empty()) branches = {infer::Branch::Main, infer::Branch::Auxiliary};
    else branches = {infer::parse_branch(o.branch)};
    bench::BenchOptions bo;
    bo.warmup = rc.bench_warmup;
    bo.iters = rc.bench_iters;
    std::string text;
    for (auto b : branches) {
        const auto r = bench::time_inference(*owned, nn::Shape{1, 3, rc.bench_height, rc.bench_width}, b, bo,
                                             task.num_classes);
        text += bench::to_text(r) + "\n";
        out << bench::summary_line(r) << "\n";
    }
    fs::create_directories(o.out);
    std::ofstream(fs::path(o.out) / "bench.txt") << text;
    return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
    const auto rc = run_config(o);
    require(!o.checkpoint.empty(), "--checkpoint is required");
    auto model = train::load_model(o.checkpoint);
    const TaskSpec task = model_task(o, model);
    const auto manifest = select_split(load_data(o, task), o.split);
    const auto branch = infer::parse_branch(o.branch.empty() ? "main" : o.branch);
    const fs::path pred_dir = fs::path(o.out) / "pred", overlay_dir = fs::path(o.out) / "overlay";
    fs::create_directories(pred_dir);
    fs::create_directories(overlay_dir);
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
        const auto sample = data::load_sample(manifest, i, rc.train.crop);
        const auto nf = data::normalize(sample.frame, model.means);
        const auto input = infer::make_input(std::span<const NormalizedFrame>(&nf, 1));
        const auto labels = infer::argmax_labels(infer::class_scores(*model.segmentor, input, branch)).front();
        const std::string name = output_name(manifest.samples[i].frame);
        io::write_gray(pred_dir / name, labels);
        io::write_frame(overlay_dir / name, viz::overlay(sample.frame, labels, task));
    }
    out << "predict: " << manifest.samples.size() << " frames written to " << pred_dir.string() << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-branch surgical instrument segmentation toolkit", "mffseg"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Flat key=value config file");
        sub->add_option("--set", o.sets, "Override a config key (key=value), repeatable");
        sub->add_option("--task", o.task, "binary | parts | instruments");
        sub->add_option("--seed", o.seed, "Global random seed");
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_flag("--deterministic", o.deterministic, "Reproducible execution (always on for this backend)");
    };
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset in the EndoVis layout");
    add_common(synth);
    synth->add_option("--n", o.n, "Number of samples");
    auto* train = app.add_subcommand("train", "Train the segmentor (and discriminator)");
    add_common(train);
    train->add_option("--data-root", o.data_root, "Dataset root (manifest.txt or EndoVis layout)");
    train->add_option("--checkpoint", o.checkpoint, "Resume from this training checkpoint");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval);
    eval->add_option("--data-root", o.data_root, "Dataset root");
    eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate");
    eval->add_option("--branch", o.branch, "main | auxiliary");
    eval->add_option("--split", o.split, "train | test | all")->capture_default_str();
    auto* bench = app.add_subcommand("bench", "Batch-1 inference latency and model footprint");
    add_common(bench);
    bench->add_option("--checkpoint", o.checkpoint, "Checkpoint (default: freshly initialized network)");
    bench->add_option("--branch", o.branch, "main | auxiliary (default: both)");
    auto* predict = app.add_subcommand("predict", "Write class-index masks and colour overlays");
    add_common(predict);
    predict->add_option("--data-root", o.data_root, "Dataset root");
    predict->add_option("--checkpoint", o.checkpoint, "Checkpoint");
    predict->add_option("--branch", o.branch, "main | auxiliary");
    predict->add_option("--split", o.split, "train | test | all")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help on the app or a subcommand prints that level's usage.
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        report_error(err, "usage", e.what());
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(o, out);
        if (train->parsed()) return cmd_train(o, out);
        if (eval->parsed()) return cmd_eval(o, out);
        if (bench->parsed()) return cmd_bench(o, out);
        return cmd_predict(o, out);
    } catch (const Error& e) {
        report_error(err, kind_name(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        report_error(err, "runtime", e.what());
        return 5;
    }
}

}  // namespace mffseg::cli
