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

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mffseg/bench.hpp"
#include "mffseg/data.hpp"
#include "mffseg/discriminator.hpp"
#include "mffseg/inference.hpp"
#include "mffseg/losses.hpp"
#include "mffseg/metrics.hpp"
#include "mffseg/optim.hpp"
#include "mffseg/segmentor.hpp"

namespace mffseg::train {

struct TrainConfig {
    double base_lr_seg = 0.001;
    double base_lr_disc = 0.00015;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.0005;  // segmentor only
    double poly_power = 0.9;
    std::int64_t max_iter = 1000;
    int batch_size = 1;
    obj::LossWeights lambda;
    std::uint64_t seed = 0;
    // Discriminator initialization; derived from `seed` when unset.
    std::optional<std::uint64_t> disc_seed;
    bool adversarial_enabled = true;
    // Accepted for interface compatibility: every kernel here is single
    // threaded with a fixed reduction order, so runs are always reproducible.
    bool deterministic = true;
    bool augment_enabled = true;
    data::AugmentOptions augment;
    std::int64_t eval_every = 0;        // 0 disables periodic evaluation
    std::int64_t checkpoint_every = 0;  // 0 keeps only the final checkpoint
    bool cache_dataset = true;
    data::CropWindow crop;

    // Throws ConfigError.
    void validate() const;
};

struct IterationRecord {
    std::int64_t iteration = 0;
    obj::LossBreakdown loss;
    double disc = 0.0;  // discriminator objective, 0 when disabled
    double lr = 0.0;
    double lr_disc = 0.0;
};

// One JSON object per line.
std::string to_log_line(const IterationRecord& record);

struct Batch {
    nn::Tensor<float> input;
    std::vector<LabelMap> labels;
};

// Samples for `iteration`: a per-epoch permutation of the dataset, each sample
// augmented with a seed derived from (seed, epoch, sample index), normalized.
Batch make_batch(const data::Dataset& dataset, const TrainConfig& config, const data::ChannelMeans& means,
                 std::int64_t iteration);

// FNV-1a over the raw bytes of every parameter value.
std::uint64_t weights_checksum(const nn::ParamRefs<float>& refs);

class Trainer {
public:
    Trainer(TrainConfig config, nn::NetworkConfig network, TaskSpec task);

    // One iteration: segmentor forward, discriminator update, segmentor update.
    IterationRecord train_step(const Batch& batch);

    // The two update phases of train_step, exposed for isolation checks.
    // `fake_probs` is the detached softmax of the main logits.
    double discriminator_phase(const nn::Tensor<float>& fake_probs, std::span<const LabelMap> labels, double lr);
    // Needs a Train-phase segmentor forward that produced `out`.
    obj::LossBreakdown segmentor_phase(const nn::SegmentorOutput<float>& out, const nn::Tensor<float>& fake_probs,
                                       std::span<const LabelMap> labels, double lr);

    std::int64_t iteration() const { return iteration_; }
    const TrainConfig& config() const { return config_; }
    const TaskSpec& task() const { return task_; }
    nn::Segmentor<float>& segmentor() { return *segmentor_; }
    adv::Discriminator<float>& discriminator() { return *discriminator_; }
    const std::vector<IterationRecord>& history() const { return history_; }

    void save(const std::filesystem::path& path, const data::ChannelMeans& means) const;
    // Restores weights, optimizer moments and the iteration counter; the
    // network configuration and task must match.
    void load(const std::filesystem::path& path);

private:
    TrainConfig config_;
    TaskSpec task_;
    std::unique_ptr<nn::Segmentor<float>> segmentor_;
    std::unique_ptr<adv::Discriminator<float>> discriminator_;
    optim::Adam<float> adam_seg_;
    optim::Adam<float> adam_disc_;
    std::int64_t iteration_ = 0;
    std::vector<IterationRecord> history_;
};

struct FitOptions {
    std::filesystem::path out_dir{};
    std::optional<std::filesystem::path> resume{};
    std::optional<data::ChannelMeans> means{};
    const data::DatasetManifest* eval_manifest = nullptr;
};

struct FitResult {
    std::filesystem::path checkpoint;
    std::vector<IterationRecord> history;  // iterations run by this call
    data::ChannelMeans means;
};

// Runs train_step until max_iter, appending to <out>/train.log and writing
// <out>/ckpt_<iter>.bin periodically and <out>/ckpt_final.bin at the end.
FitResult fit(const TrainConfig& config, const nn::NetworkConfig& network, const data::DatasetManifest& train,
              const FitOptions& options);

struct LoadedModel {
    std::unique_ptr<nn::Segmentor<float>> segmentor;
    TaskSpec task;
    data::ChannelMeans means;
    std::int64_t iteration = 0;
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

// Anything that maps a normalized 1 x 3 x H x W input to a full-resolution
// label map. `index` is the sample's position in the evaluated manifest.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual int num_classes() const = 0;
    virtual LabelMap predict(const nn::Tensor<float>& input, std::size_t index) = 0;
};

class SegmentorPredictor : public Predictor {
public:
    SegmentorPredictor(nn::Segmentor<float>& segmentor, infer::Branch branch)
        : segmentor_(segmentor), branch_(branch) {}
    int num_classes() const override { return segmentor_.config().num_classes; }
    LabelMap predict(const nn::Tensor<float>& input, std::size_t index) override;

private:
    nn::Segmentor<float>& segmentor_;
    infer::Branch branch_;
};

struct EvalOptions {
    infer::Branch branch = infer::Branch::Main;
    bool measure_fps = true;
    bench::BenchOptions bench;
    data::CropWindow crop;
};

// Metrics of `predictor` over `manifest` with labels encoded for `task`.
metrics::MetricReport evaluate_predictor(Predictor& predictor, const data::DatasetManifest& manifest,
                                         const data::ChannelMeans& means, const TaskSpec& task,
                                         const data::CropWindow& crop = {});

// Branch evaluation of a model; fps follows the bench protocol at the
// manifest's frame size.
metrics::MetricReport evaluate(nn::Segmentor<float>& segmentor, const data::DatasetManifest& manifest,
                               const data::ChannelMeans& means, const TaskSpec& task, const EvalOptions& options = {});

}  // namespace mffseg::train
