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

#include "mffseg/segmentor.hpp"

#include "mffseg/checkpoint.hpp"

namespace mffseg::nn {

namespace {
std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}
}  // namespace

void NetworkConfig::validate() const {
    MFFSEG_CHECK(num_classes >= 2, ConfigError, "network: num_classes must be >= 2, got " + std::to_string(num_classes));
    MFFSEG_CHECK(main_stage_channels.size() == 5, ConfigError,
                 "network: main_stage_channels needs 5 entries (stem + 4 stages), got " + join(main_stage_channels));
    MFFSEG_CHECK(aux_stage_channels.size() == 3, ConfigError,
                 "network: aux_stage_channels needs 3 entries (stem + 2 stages), got " + join(aux_stage_channels));
    MFFSEG_CHECK(decoder_out_channels.size() == 3, ConfigError,
                 "network: decoder_out_channels needs 3 entries, got " + join(decoder_out_channels));
    auto positive = [](const std::vector<int>& v) {
        for (int x : v)
            if (x <= 0) return false;
        return true;
    };
    MFFSEG_CHECK(positive(main_stage_channels) && positive(aux_stage_channels) && positive(decoder_out_channels) &&
                     mff_bottleneck_channels > 0 && class_block_channels > 0,
                 ConfigError, "network: all channel counts must be positive");
    MFFSEG_CHECK(positive(spp_grids), ConfigError, "network: spp grids must be positive, got " + join(spp_grids));
}

NetworkConfig NetworkConfig::miniature(int num_classes) {
    NetworkConfig c;
    c.num_classes = num_classes;
    c.main_stage_channels = {8, 8, 8, 8, 8};
    c.aux_stage_channels = {8, 8, 8};
    c.spp_grids = {1};
    c.mff_bottleneck_channels = 8;
    c.decoder_out_channels = {8, 8, 8};
    c.class_block_channels = 8;
    return c;
}

template <typename T>
Segmentor<T>::Segmentor(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    const auto& m = config_.main_stage_channels;
    const auto& a = config_.aux_stage_channels;
    const auto& d = config_.decoder_out_channels;
    const int k = config_.num_classes;

    // Skip connections are additive, so each decoder must emit exactly the
    // width of the stage it is summed with.
    const char* skip_names[3] = {"main.stage3", "main.stage2", "main.stage1"};
    const int skip_channels[3] = {m[3], m[2], m[1]};
    for (int i = 0; i < 3; ++i) {
        MFFSEG_CHECK(d[i] == skip_channels[i], ShapeError,
                     "network: decoder" + std::to_string(4 - i) + " emits " + std::to_string(d[i]) +
                         " channels but skip source " + skip_names[i] + " has " + std::to_string(skip_channels[i]));
    }

    main_stem_ = ConvBnRelu<T>({3, m[0], 7, 2, 3, false});
    main_stages_[0] = ResidualStage<T>(m[0], m[1], 1);
    main_stages_[1] = ResidualStage<T>(m[1], m[2], 2);
    main_stages_[2] = ResidualStage<T>(m[2], m[3], 2);
    main_stages_[3] = ResidualStage<T>(m[3], m[4], 2);
    spp_ = SppSum<T>(m[4], config_.spp_grids);

    aux_stem_ = ConvBnRelu<T>({3, a[0], 7, 2, 3, false});
    aux_stages_[0] = ResidualStage<T>(a[0], a[1], 1);
    aux_stages_[1] = ResidualStage<T>(a[1], a[2], 2);

    mff_ = MffFusion<T>(a[2], m[4], config_.mff_bottleneck_channels, k);
    decoders_[0] = Decoder<T>(m[4], d[0]);
    decoders_[1] = Decoder<T>(d[0], d[1]);
    decoders_[2] = Decoder<T>(d[1], d[2]);
    class_block_ = ClassBlock<T>(d[2], config_.class_block_channels, k);

    Rng rng(seed);
    main_stem_.init(rng);
    for (auto& s : main_stages_) s.init(rng);
    spp_.init(rng);
    aux_stem_.init(rng);
    for (auto& s : aux_stages_) s.init(rng);
    mff_.init(rng);
    for (auto& dec : decoders_) dec.init(rng);
    class_block_.init(rng);

    main_stem_.collect("main.stem", refs_);
    for (int i = 0; i < 4; ++i) main_stages_[i].collect("main.stage" + std::to_string(i + 1), refs_);
    spp_.collect("main.spp", refs_);
    aux_stem_.collect("aux.stem", refs_);
    for (int i = 0; i < 2; ++i) aux_stages_[i].collect("aux.stage" + std::to_string(i + 1), refs_);
    mff_.collect("mff", refs_);
    for (int i = 0; i < 3; ++i) decoders_[i].collect("decoder" + std::to_string(4 - i), refs_);
    class_block_.collect("class_block", refs_);
}

template <typename T>
void Segmentor<T>::check_input(const Shape& s) {
    MFFSEG_CHECK(s.c == 3, ShapeError, "segmentor: expected 3 input channels, got " + s.str());
    MFFSEG_CHECK(s.n >= 1 && s.h > 0 && s.w > 0 && s.h % 32 == 0 && s.w % 32 == 0, ShapeError,
                 "segmentor: input height and width must be positive multiples of 32, got " + s.str());
}

template <typename T>
Tensor<T> Segmentor<T>::aux_features(const Tensor<T>& x, Phase phase) {
    Tensor<T> h = aux_input_pool_.forward(x, phase);
    h = aux_pool_.forward(aux_stem_.forward(h, phase), phase);
    h = aux_stages_[0].forward(h, phase);
    return aux_stages_[1].forward(h, phase);
}

template <typename T>
SegmentorOutput<T> Segmentor<T>::forward(const Tensor<T>& x, Phase phase) {
    check_input(x.shape());
    Tensor<T> s = main_pool_.forward(main_stem_.forward(x, phase), phase);
    Tensor<T> e1 = main_stages_[0].forward(s, phase);
    Tensor<T> e2 = main_stages_[1].forward(e1, phase);
    Tensor<T> e3 = main_stages_[2].forward(e2, phase);
    Tensor<T> f_main = spp_.forward(main_stages_[3].forward(e3, phase), phase);

    MffOutput<T> fused = mff_.forward(aux_features(x, phase), f_main, phase);

    Tensor<T> dec = decoders_[0].forward(fused.fused, phase);
    dec += e3;
    dec = decoders_[1].forward(dec, phase);
    dec += e2;
    dec = decoders_[2].forward(dec, phase);
    dec += e1;
    return {class_block_.forward(dec, phase), std::move(fused.aux_logits)};
}

template <typename T>
Tensor<T> Segmentor<T>::backward(const Tensor<T>& d_main_logits, const Tensor<T>& d_aux_logits) {
    Tensor<T> d = class_block_.backward(d_main_logits);
    Tensor<T> de1 = d;
    d = decoders_[2].backward(d);
    Tensor<T> de2 = d;
    d = decoders_[1].backward(d);
    Tensor<T> de3 = d;
    d = decoders_[0].backward(d);

    MffGrads<T> g = mff_.backward(d, d_aux_logits);

    Tensor<T> da = aux_stages_[1].backward(g.d_aux);
    da = aux_stages_[0].backward(da);
    da = aux_input_pool_.backward(aux_stem_.backward(aux_pool_.backward(da)));

    de3 += main_stages_[3].backward(spp_.backward(g.d_main));
    de2 += main_stages_[2].backward(de3);
    de1 += main_stages_[1].backward(de2);
    Tensor<T> dx = main_stem_.backward(main_pool_.backward(main_stages_[0].backward(de1)));
    dx += da;
    return dx;
}

template <typename T>
Tensor<T> Segmentor<T>::predict(const Tensor<T>& x) {
    SegmentorOutput<T> out = forward(x, Phase::Eval);
    return softmax_channels(upsample_sample_grid(out.main_logits, x.h() / out.main_logits.h()));
}

template <typename T>
Tensor<T> Segmentor<T>::predict_auxiliary_logits(const Tensor<T>& x) {
    check_input(x.shape());
    return mff_.aux_logits(aux_features(x, Phase::Eval));
}

template <typename T>
ParameterSet count_parameters(Segmentor<T>& segmentor) {
    ParameterSet set;
    for (const auto& p : segmentor.refs().params) {
        set.entries.push_back({p.name, p.param->value.shape(), p.param->value.size()});
        set.total_count += p.param->value.size();
    }
    set.serialized_bytes = serialized_weight_bytes(segmentor);
    return set;
}

template class Segmentor<float>;
template class Segmentor<double>;
template ParameterSet count_parameters<float>(Segmentor<float>&);
template ParameterSet count_parameters<double>(Segmentor<double>&);

}  // namespace mffseg::nn
