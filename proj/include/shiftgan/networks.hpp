#pragma once

#include <memory>
#include <string>
#include <vector>

#include "shiftgan/image.hpp"
#include "shiftgan/layers.hpp"
#include "shiftgan/shiftops.hpp"

namespace shiftgan {

std::string to_string(ag::PadMode m);
ag::PadMode pad_mode_from_string(const std::string& s);

/// Encoder/decoder translator of the CycleGAN family: 7x7 stem, stride-2
/// downsampling stages, residual blocks, nearest-upsample decoding stages,
/// 7x7 head with tanh output. K = product of encoder strides.
struct GeneratorSpec {
    int in_channels = 3;
    int out_channels = 3;
    int stem_width = 64;
    std::vector<int> down_widths = {128, 256};
    std::vector<int> down_strides = {};   // defaults to 2 per stage
    std::vector<int> up_factors = {};     // defaults to reversed encoder strides
    int res_blocks = 6;
    ag::PadMode padding = ag::PadMode::Reflect;

    std::vector<int> strides() const;
    std::vector<int> factors() const;
    int downsample_factor() const;
    void validate() const;   // ContractError when the decoder cannot restore input size
};

class Generator {
public:
    Generator(GeneratorSpec spec, Rng& rng);

    /// x is (C,H,W) with H,W divisible by K; output has identical shape,
    /// values in [-1,1].
    ag::Var forward(ag::Graph& g, ag::Var x, bool train = true);

    /// Inference on an arbitrary image: reflect-pads up to a multiple of K,
    /// runs forward without gradients, crops back.
    Image apply(const Image& img);
    ImageFn as_fn();

    ParamRefs params();
    const GeneratorSpec& spec() const { return spec_; }

private:
    GeneratorSpec spec_;
    Conv2d stem_;
    InstanceNorm stem_n_;
    std::vector<Conv2d> down_;
    std::vector<InstanceNorm> down_n_;
    std::vector<ResBlock> blocks_;
    std::vector<Conv2d> up_;
    std::vector<InstanceNorm> up_n_;
    Conv2d head_;
};

/// Patch-based realness classifier: k4 stride-2 stages, then two stride-1
/// k4 convolutions (feature + 1-channel projection). The default widths give
/// the 70x70 receptive field.
struct DiscriminatorSpec {
    int in_channels = 3;
    std::vector<int> widths = {64, 128, 256};
    int last_width = 512;
    ag::PadMode padding = ag::PadMode::Zero;

    int receptive_field() const;
    void validate() const;
};

class Discriminator {
public:
    Discriminator(DiscriminatorSpec spec, Rng& rng);

    /// per-patch realness map (1, H', W'); input extent must be at least the
    /// receptive field
    ag::Var forward(ag::Graph& g, ag::Var x, bool train = true);

    ParamRefs params();
    const DiscriminatorSpec& spec() const { return spec_; }

private:
    DiscriminatorSpec spec_;
    std::vector<Conv2d> convs_;
    std::vector<InstanceNorm> norms_;   // none for first stage
    Conv2d feat_, out_;
    InstanceNorm feat_n_;
};

/// Small per-pixel classifier standing in for a pretrained segmenter.
/// Frozen after pretraining; translation training never updates it.
class Segmenter {
public:
    Segmenter(int num_classes, int width, Rng& rng);

    ag::Var logits(ag::Graph& g, ag::Var img, bool train = true);
    SemanticMap predict(const Image& img);
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    int num_classes() const { return num_classes_; }
    int width() const { return width_; }

    ParamRefs params();

private:
    int num_classes_;
    int width_;
    bool frozen_ = false;
    Conv2d c1_, c2_, head_;
};

std::unique_ptr<Segmenter> toy_segmenter(int num_classes, Rng& rng);

/// Frozen feature extractor for perceptual losses: stages of two 3x3 convs
/// with tap points at the second activation of each stage (relu1_2, relu2_2,
/// relu3_2, relu4_2; relu2_2 is the content tap), max-pool between stages.
/// Weights are fixed at construction (seeded random at desk scale; a
/// checkpoint of published weights can be loaded in their place).
struct PerceptualSpec {
    int in_channels = 3;
    std::vector<int> widths = {8, 16, 32, 64};
};

class PerceptualTaps {
public:
    static constexpr int kNumTaps = 4;
    static constexpr int kContentTap = 1;   // relu2_2
    static const char* tap_name(int t);

    PerceptualTaps(PerceptualSpec spec, Rng& rng);

    /// img extent must be divisible by 8; parameters never receive gradients
    std::vector<ag::Var> forward(ag::Graph& g, ag::Var img);

    ParamRefs params();   // exposed for checkpoint I/O only
    const PerceptualSpec& spec() const { return spec_; }

private:
    PerceptualSpec spec_;
    std::vector<Conv2d> convs_;   // 2 per stage
};

} // namespace shiftgan
