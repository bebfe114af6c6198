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

#include "mffseg/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mffseg/checkpoint.hpp"

namespace mffseg::train {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    MFFSEG_CHECK(base_lr_seg > 0.0 && base_lr_disc > 0.0, ConfigError, "learning rates must be positive");
    MFFSEG_CHECK(max_iter >= 0, ConfigError, "max_iter must be >= 0");
    MFFSEG_CHECK(batch_size >= 1, ConfigError, "batch_size must be >= 1");
    MFFSEG_CHECK(poly_power > 0.0, ConfigError, "poly_power must be positive");
    MFFSEG_CHECK(weight_decay >= 0.0, ConfigError, "weight_decay must be non-negative");
    MFFSEG_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ConfigError,
                 "beta1 and beta2 must lie in [0, 1)");
    MFFSEG_CHECK(eval_every >= 0 && checkpoint_every >= 0, ConfigError,
                 "eval_every and checkpoint_every must be >= 0");
    lambda.validate();
}

std::string to_log_line(const IterationRecord& r) {
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["main"] = r.loss.main;
    j["aux"] = r.loss.aux;
    j["adv"] = r.loss.adv;
    j["total"] = r.loss.total;
    j["lr"] = r.lr;
    j["disc"] = r.disc;
    j["lr_disc"] = r.lr_disc;
    return j.dump();
}

namespace {

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::uint64_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, epoch, ~std::uint64_t{0}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    return order;
}

// Marks the segmentor as trainer-owned for the guard's lifetime.
class OwnerGuard {
public:
    explicit OwnerGuard(nn::Segmentor<float>& s) : s_(s), was_(s.owned_by_trainer()) { s_.set_owned_by_trainer(true); }
    ~OwnerGuard() { s_.set_owned_by_trainer(was_); }
    OwnerGuard(const OwnerGuard&) = delete;
    OwnerGuard& operator=(const OwnerGuard&) = delete;

private:
    nn::Segmentor<float>& s_;
    bool was_;
};

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::string& header_value(const ckpt::ArrayContainer& c, const std::string& key) {
    auto it = c.header.find(key);
    MFFSEG_CHECK(it != c.header.end(), DataError, "checkpoint header lacks '" + key + "'");
    return it->second;
}

data::ChannelMeans header_means(const ckpt::ArrayContainer& c) {
    data::ChannelMeans m;
    const char* keys[3] = {"means.r", "means.g", "means.b"};
    for (int i = 0; i < 3; ++i) m.rgb[i] = std::stod(header_value(c, keys[i]));
    return m;
}

nn::NetworkConfig checked_network(const TrainConfig& config, const nn::NetworkConfig& network, const TaskSpec& task) {
    config.validate();
    MFFSEG_CHECK(network.num_classes == task.num_classes, ConfigError,
                 "network has " + std::to_string(network.num_classes) + " classes, task " + task.name() + " has " +
                     std::to_string(task.num_classes));
    return network;
}

}  // namespace

Batch make_batch(const data::Dataset& dataset, const TrainConfig& config, const data::ChannelMeans& means,
                 std::int64_t iteration) {
    const std::size_t n = dataset.size();
    MFFSEG_CHECK(n > 0, DataError, "training manifest is empty");
    Batch batch;
    std::vector<NormalizedFrame> frames;
    std::uint64_t cached_epoch = ~std::uint64_t{0};
    std::vector<std::size_t> order;
    for (int b = 0; b < config.batch_size; ++b) {
        const auto global = static_cast<std::uint64_t>(iteration) * config.batch_size + b;
        const std::uint64_t epoch = global / n;
        if (epoch != cached_epoch) {
            order = epoch_permutation(config.seed, epoch, n);
            cached_epoch = epoch;
        }
        const std::size_t index = order[global % n];
        auto sample = dataset.get(index);
        if (config.augment_enabled) {
            auto [f, l] = data::augment(std::move(sample.frame), std::move(sample.label),
                                        derive_seed(config.seed, epoch, index), config.augment);
            sample.frame = std::move(f);
            sample.label = std::move(l);
        }
        frames.push_back(data::normalize(sample.frame, means));
        batch.labels.push_back(std::move(sample.label));
    }
    batch.input = infer::make_input(frames);
    return batch;
}

std::uint64_t weights_checksum(const nn::ParamRefs<float>& refs) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& p : refs.params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.param->value.data());
        for (std::size_t i = 0; i < p.param->value.size() * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

Trainer::Trainer(TrainConfig config, nn::NetworkConfig network, TaskSpec task)
    : config_(std::move(config)),
      task_(std::move(task)),
      segmentor_(std::make_unique<nn::Segmentor<float>>(checked_network(config_, network, task_), config_.seed)),
      discriminator_(std::make_unique<adv::Discriminator<float>>(
          task_.num_classes, config_.disc_seed.value_or(derive_seed(config_.seed, 0xD15C, 0)))),
      adam_seg_(segmentor_->refs(), {config_.beta1, config_.beta2, 1e-8, config_.weight_decay}),
      adam_disc_(discriminator_->refs(), {config_.beta1, config_.beta2, 1e-8, 0.0}) {}

double Trainer::discriminator_phase(const nn::Tensor<float>& fake_probs, std::span<const LabelMap> labels, double lr) {
    MFFSEG_CHECK(!labels.empty() && fake_probs.h() > 0 && labels[0].height % fake_probs.h() == 0, ShapeError,
                 "discriminator_phase: labels do not match the probability maps");
    std::vector<LabelMap> small;
    for (const auto& l : labels) small.push_back(data::downsample_labels(l, l.height / fake_probs.h()));
    const auto real = adv::one_hot<float>(std::span<const LabelMap>(small), task_.num_classes);

    auto& d = *discriminator_;
    d.refs().zero_grad();
    nn::Tensor<float> g;
    const double l_real = obj::bce_with_logits(d.forward_logits(real, nn::Phase::Train), 1.0, &g);
    d.backward_logits(g);
    const double l_fake = obj::bce_with_logits(d.forward_logits(fake_probs, nn::Phase::Train), 0.0, &g);
    d.backward_logits(g);
    const double loss = l_real + l_fake;
    MFFSEG_CHECK(std::isfinite(loss), NumericalError,
                 "non-finite discriminator loss at iteration " + std::to_string(iteration_) + ": real=" +
                     g17(l_real) + " fake=" + g17(l_fake) + " lr_disc=" + g17(lr));
    adam_disc_.step(lr);
    return loss;
}

obj::LossBreakdown Trainer::segmentor_phase(const nn::SegmentorOutput<float>& out, const nn::Tensor<float>& fake_probs,
                                            std::span<const LabelMap> labels, double lr) {
    obj::LossWeights w = config_.lambda;
    if (!config_.adversarial_enabled) w.lambda_adv = 0.0;
    obj::SegLossGrads<float> grads;
    const auto seg = obj::seg_loss(out.main_logits, out.aux_logits, labels, w, &grads);
    double adv = 0.0;
    if (config_.adversarial_enabled) {
        auto& d = *discriminator_;
        nn::Tensor<float> gz;
        adv = obj::bce_with_logits(d.forward_logits(fake_probs, nn::Phase::Train), 1.0, &gz);
        gz *= static_cast<float>(w.lambda_adv);
        const auto d_probs = d.backward_logits(gz);
        d.refs().zero_grad();  // the discriminator is not updated here
        grads.d_main += nn::softmax_channels_backward(fake_probs, d_probs);
    }
    const auto total = obj::total_loss(seg, adv, w);
    MFFSEG_CHECK(std::isfinite(total.main) && std::isfinite(total.aux) && std::isfinite(total.adv) &&
                     std::isfinite(total.total),
                 NumericalError,
                 "non-finite loss at iteration " + std::to_string(iteration_) + ": main=" + g17(total.main) +
                     " aux=" + g17(total.aux) + " adv=" + g17(total.adv) + " total=" + g17(total.total) +
                     " lr=" + g17(lr));
    auto& s = *segmentor_;
    s.refs().zero_grad();
    s.backward(grads.d_main, grads.d_aux);
    adam_seg_.step(lr);
    return total;
}

IterationRecord Trainer::train_step(const Batch& batch) {
    OwnerGuard guard(*segmentor_);
    MFFSEG_CHECK(iteration_ < config_.max_iter, ConfigError,
                 "train_step: already at max_iter " + std::to_string(config_.max_iter));
    MFFSEG_CHECK(static_cast<int>(batch.labels.size()) == batch.input.n(), ShapeError,
                 "train_step: batch has " + std::to_string(batch.input.n()) + " inputs and " +
                     std::to_string(batch.labels.size()) + " label maps");
    for (const auto& l : batch.labels) l.check_range(task_.num_classes);
    IterationRecord rec;
    rec.iteration = iteration_;
    rec.lr = optim::poly_lr(config_.base_lr_seg, iteration_, config_.max_iter, config_.poly_power);
    rec.lr_disc = optim::poly_lr(config_.base_lr_disc, iteration_, config_.max_iter, config_.poly_power);

    const auto out = segmentor_->forward(batch.input, nn::Phase::Train);
    const auto probs = nn::softmax_channels(out.main_logits);
    const std::span<const LabelMap> labels(batch.labels);
    if (config_.adversarial_enabled) rec.disc = discriminator_phase(probs, labels, rec.lr_disc);
    rec.loss = segmentor_phase(out, probs, labels, rec.lr);
    history_.push_back(rec);
    ++iteration_;
    return rec;
}

void Trainer::save(const fs::path& path, const data::ChannelMeans& means) const {
    ckpt::ArrayContainer c;
    c.header["format"] = "mffseg-training-state";
    c.header["task"] = task_.name();
    c.header["iteration"] = std::to_string(iteration_);
    c.header["means.r"] = g17(means.rgb[0]);
    c.header["means.g"] = g17(means.rgb[1]);
    c.header["means.b"] = g17(means.rgb[2]);
    c.header["train.seed"] = std::to_string(config_.seed);
    c.header["train.max_iter"] = std::to_string(config_.max_iter);
    ckpt::write_network_config(segmentor_->config(), c.header);
    ckpt::export_arrays(segmentor_->refs(), "seg/", c);
    ckpt::export_arrays(discriminator_->refs(), "disc/", c);
    adam_seg_.save("opt_seg/", c);
    adam_disc_.save("opt_disc/", c);
    c.write(path);
}

void Trainer::load(const fs::path& path) {
    const auto c = ckpt::ArrayContainer::read(path);
    MFFSEG_CHECK(header_value(c, "task") == task_.name(), ConfigError,
                 "checkpoint task '" + header_value(c, "task") + "' differs from '" + task_.name() + "'");
    MFFSEG_CHECK(ckpt::read_network_config(c.header) == segmentor_->config(), ConfigError,
                 "checkpoint network configuration differs from the configured one");
    // The batch order derives from the seed; resuming under another one would fork the run.
    MFFSEG_CHECK(header_value(c, "train.seed") == std::to_string(config_.seed), ConfigError,
                 "checkpoint seed " + header_value(c, "train.seed") + " differs from configured seed " +
                     std::to_string(config_.seed));
    ckpt::import_arrays(segmentor_->refs(), "seg/", c);
    ckpt::import_arrays(discriminator_->refs(), "disc/", c);
    adam_seg_.load("opt_seg/", c);
    adam_disc_.load("opt_disc/", c);
    iteration_ = std::stoll(header_value(c, "iteration"));
    MFFSEG_CHECK(iteration_ >= 0 && iteration_ <= config_.max_iter, ConfigError,
                 "checkpoint iteration " + std::to_string(iteration_) + " exceeds max_iter " +
                     std::to_string(config_.max_iter));
}

FitResult fit(const TrainConfig& config, const nn::NetworkConfig& network, const data::DatasetManifest& train,
              const FitOptions& options) {
    config.validate();
    MFFSEG_CHECK(!train.samples.empty(), DataError, "training manifest is empty");
    MFFSEG_CHECK(network.num_classes == train.task.num_classes, ConfigError,
                 "dataset task " + train.task.name() + " has " + std::to_string(train.task.num_classes) +
                     " classes, network has " + std::to_string(network.num_classes));
    if (options.eval_manifest) {
        MFFSEG_CHECK(options.eval_manifest->task.num_classes == network.num_classes, ConfigError,
                     "evaluation manifest task does not match the network class count");
    }
    network.validate();
    fs::create_directories(options.out_dir);

    FitResult result;
    result.means = data::resolve_channel_means(options.means, &train, config.crop);
    Trainer trainer(config, network, train.task);
    if (options.resume) trainer.load(*options.resume);
    const data::Dataset dataset(train, config.cache_dataset, config.crop);

    // Keep log records before the resume point, drop anything later.
    const fs::path log_path = options.out_dir / "train.log";
    std::vector<std::string> kept;
    if (options.resume && fs::exists(log_path)) {
        std::ifstream in(log_path);
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.contains("iteration") && j["iteration"].get<std::int64_t>() < trainer.iteration())
                kept.push_back(line);
        }
    }
    std::ofstream log(log_path, std::ios::trunc);
    MFFSEG_CHECK(log.good(), DataError, "cannot write '" + log_path.string() + "'");
    for (const auto& l : kept) log << l << '\n';
    log.flush();

    OwnerGuard guard(trainer.segmentor());
    while (trainer.iteration() < config.max_iter) {
        const auto batch = make_batch(dataset, config, result.means, trainer.iteration());
        const auto rec = trainer.train_step(batch);
        log << to_log_line(rec) << '\n';
        log.flush();
        result.history.push_back(rec);
        const std::int64_t done = trainer.iteration();
        if (config.checkpoint_every > 0 && done % config.checkpoint_every == 0 && done < config.max_iter)
            trainer.save(options.out_dir / ("ckpt_" + std::to_string(done) + ".bin"), result.means);
        if (config.eval_every > 0 && done % config.eval_every == 0 && options.eval_manifest &&
            !options.eval_manifest->samples.empty()) {
            EvalOptions eo;
            eo.measure_fps = false;
            eo.crop = config.crop;
            auto report =
                evaluate(trainer.segmentor(), *options.eval_manifest, result.means, options.eval_manifest->task, eo);
            std::ofstream(options.out_dir / ("metrics_iter" + std::to_string(done) + ".txt"))
                << metrics::to_text(report);
        }
    }
    result.checkpoint = options.out_dir / "ckpt_final.bin";
    trainer.save(result.checkpoint, result.means);
    return result;
}

LoadedModel load_model(const fs::path& checkpoint) {
    const auto c = ckpt::ArrayContainer::read(checkpoint);
    LoadedModel m;
    m.task = TaskSpec::parse(header_value(c, "task"));
    const auto net = ckpt::read_network_config(c.header);
    MFFSEG_CHECK(net.num_classes == m.task.num_classes, DataError, "checkpoint task and network class count differ");
    m.segmentor = std::make_unique<nn::Segmentor<float>>(net, 0);
    ckpt::import_arrays(m.segmentor->refs(), "seg/", c);
    m.means = header_means(c);
    m.iteration = std::stoll(header_value(c, "iteration"));
    return m;
}

LabelMap SegmentorPredictor::predict(const nn::Tensor<float>& input, std::size_t) {
    return infer::argmax_labels(infer::class_scores(segmentor_, input, branch_)).front();
}

metrics::MetricReport evaluate_predictor(Predictor& predictor, const data::DatasetManifest& manifest,
                                         const data::ChannelMeans& means, const TaskSpec& task,
                                         const data::CropWindow& crop) {
    MFFSEG_CHECK(predictor.num_classes() == task.num_classes, ConfigError,
                 "model has " + std::to_string(predictor.num_classes()) + " classes, task " + task.name() + " has " +
                     std::to_string(task.num_classes));
    data::DatasetManifest m = manifest;
    m.task = task;
    metrics::MetricAccumulator acc(task);
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto sample = data::load_sample(m, i, crop);
        const auto nf = data::normalize(sample.frame, means);
        const auto pred = predictor.predict(infer::make_input(std::span<const NormalizedFrame>(&nf, 1)), i);
        acc.add(pred, sample.label);
    }
    return acc.finish();
}

metrics::MetricReport evaluate(nn::Segmentor<float>& segmentor, const data::DatasetManifest& manifest,
                               const data::ChannelMeans& means, const TaskSpec& task, const EvalOptions& options) {
    SegmentorPredictor predictor(segmentor, options.branch);
    auto report = evaluate_predictor(predictor, manifest, means, task, options.crop);
    report.branch = infer::branch_name(options.branch);
    if (options.measure_fps && !manifest.samples.empty()) {
        data::DatasetManifest m = manifest;
        m.task = task;
        const auto first = data::load_sample(m, 0, options.crop);
        const auto b = bench::time_inference(segmentor, nn::Shape{1, 3, first.frame.height, first.frame.width},
                                             options.branch, options.bench, task.num_classes);
        report.fps = b.fps;
    }
    return report;
}

}  // namespace mffseg::train
