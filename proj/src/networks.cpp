#include "shiftgan/networks.hpp"

#include <algorithm>

#include "shiftgan/errors.hpp"

namespace shiftgan {

std::string to_string(ag::PadMode m) {
    switch (m) {
        case ag::PadMode::Zero: return "zero";
        case ag::PadMode::Reflect: return "reflect";
        case ag::PadMode::Circular: return "circular";
    }
    return "zero";
}

ag::PadMode pad_mode_from_string(const std::string& s) {
    if (s == "zero") return ag::PadMode::Zero;
    if (s == "reflect") return ag::PadMode::Reflect;
    if (s == "circular") return ag::PadMode::Circular;
    throw ConfigError("unknown padding mode: " + s);
}

std::vector<int> GeneratorSpec::strides() const {
    if (!down_strides.empty()) return down_strides;
    return std::vector<int>(down_widths.size(), 2);
}

std::vector<int> GeneratorSpec::factors() const {
    if (!up_factors.empty()) return up_factors;
    std::vector<int> f = strides();
    std::reverse(f.begin(), f.end());
    return f;
}

int GeneratorSpec::downsample_factor() const {
    int k = 1;
    for (int s : strides()) k *= s;
    return k;
}

void GeneratorSpec::validate() const {
    require(in_channels == 1 || in_channels == 3, "generator: channels must be 1 or 3");
    require(out_channels == 1 || out_channels == 3, "generator: channels must be 1 or 3");
    require(stem_width >= 1 && res_blocks >= 0, "generator: bad widths");
    require(!down_widths.empty(), "generator: needs at least one encoder stage");
    for (int w : down_widths) require(w >= 1, "generator: bad stage width");
    std::vector<int> st = strides();
    require(st.size() == down_widths.size(), "generator: stride/width count mismatch");
    for (int s : st) require(s == 2, "generator: only stride-2 stages are supported");
    for (int f : factors()) require(f == 2, "generator: only factor-2 upsampling is supported");
    int down = 1, up = 1;
    for (int s : st) down *= s;
    for (int f : factors()) up *= f;
    require(down == up, "generator: decoder cannot restore the input size");
}

Generator::Generator(GeneratorSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    const ag::PadMode pm = spec_.padding;
    stem_ = Conv2d("stem", spec_.in_channels, spec_.stem_width, 7, 1, 3, pm, rng);
    stem_n_ = InstanceNorm("stem", spec_.stem_width);
    int ch = spec_.stem_width;
    for (size_t i = 0; i < spec_.down_widths.size(); ++i) {
        int w = spec_.down_widths[i];
        down_.emplace_back("down" + std::to_string(i), ch, w, 3, 2, 1, pm, rng);
        down_n_.emplace_back("down" + std::to_string(i), w);
        ch = w;
    }
    for (int i = 0; i < spec_.res_blocks; ++i)
        blocks_.emplace_back("res" + std::to_string(i), ch, pm, rng);
    std::vector<int> up_widths(spec_.down_widths.begin(), spec_.down_widths.end() - 1);
    std::reverse(up_widths.begin(), up_widths.end());
    up_widths.push_back(spec_.stem_width);
    for (size_t i = 0; i < up_widths.size(); ++i) {
        up_.emplace_back("up" + std::to_string(i), ch, up_widths[i], 3, 1, 1, pm, rng);
        up_n_.emplace_back("up" + std::to_string(i), up_widths[i]);
        ch = up_widths[i];
    }
    head_ = Conv2d("head", ch, spec_.out_channels, 7, 1, 3, pm, rng);
}

ag::Var Generator::forward(ag::Graph& g, ag::Var x, bool train) {
    require(x->val.shape.size() == 3 && x->val.shape[0] == spec_.in_channels,
            "generator: bad input shape");
    const int k = spec_.downsample_factor();
    require(x->val.shape[1] % k == 0 && x->val.shape[2] % k == 0,
            "generator: input extent must be a multiple of K");
    ag::Var h = ag::relu(g, stem_n_(g, stem_(g, x, train), train));
    for (size_t i = 0; i < down_.size(); ++i)
        h = ag::relu(g, down_n_[i](g, down_[i](g, h, train), train));
    for (ResBlock& b : blocks_) h = b(g, h, train);
    for (size_t i = 0; i < up_.size(); ++i) {
        h = ag::upsample_nearest2(g, h);
        h = ag::relu(g, up_n_[i](g, up_[i](g, h, train), train));
    }
    return ag::tanh_op(g, head_(g, h, train));
}

Image Generator::apply(const Image& img) {
    const int k = spec_.downsample_factor();
    const int ph = (k - img.height % k) % k;
    const int pw = (k - img.width % k) % k;
    Tensor x = to_chw(img);
    if (ph > 0 || pw > 0) {
        require(ph < img.height && pw < img.width, "image too small to pad to a K multiple");
        Tensor padded({img.channels, img.height + ph, img.width + pw});
        for (int c = 0; c < img.channels; ++c)
            for (int y = 0; y < img.height + ph; ++y) {
                int sy = y < img.height ? y : 2 * img.height - 2 - y;
                for (int xx = 0; xx < img.width + pw; ++xx) {
                    int sx = xx < img.width ? xx : 2 * img.width - 2 - xx;
                    padded.at(c, y, xx) = x.at(c, sy, sx);
                }
            }
        x = std::move(padded);
    }
    ag::Graph g;
    ag::Var out = forward(g, ag::constant(g, std::move(x)), false);
    Tensor t = out->val;
    if (ph > 0 || pw > 0) {
        Tensor cropped({img.channels, img.height, img.width});
        for (int c = 0; c < img.channels; ++c)
            for (int y = 0; y < img.height; ++y)
                for (int xx = 0; xx < img.width; ++xx)
                    cropped.at(c, y, xx) = t.at(c, y, xx);
        t = std::move(cropped);
    }
    return from_chw(t);
}

ImageFn Generator::as_fn() {
    return [this](const Image& img) { return apply(img); };
}

ParamRefs Generator::params() {
    ParamRefs out;
    stem_.collect(out);
    stem_n_.collect(out);
    for (size_t i = 0; i < down_.size(); ++i) {
        down_[i].collect(out);
        down_n_[i].collect(out);
    }
    for (ResBlock& b : blocks_) b.collect(out);
    for (size_t i = 0; i < up_.size(); ++i) {
        up_[i].collect(out);
        up_n_[i].collect(out);
    }
    head_.collect(out);
    return out;
}

int DiscriminatorSpec::receptive_field() const {
    int r = 1, jump = 1;
    for (size_t i = 0; i < widths.size(); ++i) {
        r += 3 * jump;   // k=4
        jump *= 2;
    }
    r += 3 * jump;   // feature conv, k4 s1
    r += 3 * jump;   // projection conv, k4 s1
    return r;
}

void DiscriminatorSpec::validate() const {
    require(!widths.empty() && last_width >= 1, "discriminator: bad widths");
    for (int w : widths) require(w >= 1, "discriminator: bad widths");
}

Discriminator::Discriminator(DiscriminatorSpec spec, Rng& rng) : spec_(std::move(spec)) {
    spec_.validate();
    const ag::PadMode pm = spec_.padding;
    int ch = spec_.in_channels;
    for (size_t i = 0; i < spec_.widths.size(); ++i) {
        convs_.emplace_back("d" + std::to_string(i), ch, spec_.widths[i], 4, 2, 1, pm, rng);
        if (i > 0) norms_.emplace_back("d" + std::to_string(i), spec_.widths[i]);
        ch = spec_.widths[i];
    }
    feat_ = Conv2d("feat", ch, spec_.last_width, 4, 1, 1, pm, rng);
    feat_n_ = InstanceNorm("feat", spec_.last_width);
    out_ = Conv2d("out", spec_.last_width, 1, 4, 1, 1, pm, rng);
}

ag::Var Discriminator::forward(ag::Graph& g, ag::Var x, bool train) {
    require(x->val.shape.size() == 3 && x->val.shape[0] == spec_.in_channels,
            "discriminator: bad input shape");
    const int rf = spec_.receptive_field();
    require(x->val.shape[1] >= rf && x->val.shape[2] >= rf,
            "discriminator: input smaller than the receptive field");
    ag::Var h = x;
    for (size_t i = 0; i < convs_.size(); ++i) {
        h = convs_[i](g, h, train);
        if (i > 0) h = norms_[i - 1](g, h, train);
        h = ag::leaky_relu(g, h, 0.2f);
    }
    h = ag::leaky_relu(g, feat_n_(g, feat_(g, h, train), train), 0.2f);
    return out_(g, h, train);
}

ParamRefs Discriminator::params() {
    ParamRefs out;
    for (Conv2d& c : convs_) c.collect(out);
    for (InstanceNorm& n : norms_) n.collect(out);
    feat_.collect(out);
    feat_n_.collect(out);
    out_.collect(out);
    return out;
}

Segmenter::Segmenter(int num_classes, int width, Rng& rng)
    : num_classes_(num_classes),
      width_(width),
      c1_("seg.c1", 3, width, 3, 1, 1, ag::PadMode::Reflect, rng),
      c2_("seg.c2", width, width, 3, 1, 1, ag::PadMode::Reflect, rng),
      head_("seg.head", width, num_classes, 1, 1, 0, ag::PadMode::Zero, rng) {
    require(num_classes >= 2, "segmenter needs at least 2 classes");
}

ag::Var Segmenter::logits(ag::Graph& g, ag::Var img, bool train) {
    if (frozen_) train = false;
    // tanh activations: smooth end to end, which keeps the semantic loss
    // finite-difference checkable through the frozen segmenter
    ag::Var h = ag::tanh_op(g, c1_(g, img, train));
    h = ag::tanh_op(g, c2_(g, h, train));
    return head_(g, h, train);
}

SemanticMap Segmenter::predict(const Image& img) {
    ag::Graph g;
    ag::Var out = logits(g, ag::constant(g, to_chw(img)), false);
    const int h = out->val.shape[1], w = out->val.shape[2];
    SemanticMap map(h, w, num_classes_);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int best = 0;
            float bv = out->val.at(0, y, x);
            for (int c = 1; c < num_classes_; ++c)
                if (out->val.at(c, y, x) > bv) {
                    bv = out->val.at(c, y, x);
                    best = c;
                }
            map.at(y, x) = best;
        }
    return map;
}

ParamRefs Segmenter::params() {
    ParamRefs out;
    c1_.collect(out);
    c2_.collect(out);
    head_.collect(out);
    return out;
}

std::unique_ptr<Segmenter> toy_segmenter(int num_classes, Rng& rng) {
    return std::make_unique<Segmenter>(num_classes, 16, rng);
}

const char* PerceptualTaps::tap_name(int t) {
    static const char* names[kNumTaps] = {"relu1_2", "relu2_2", "relu3_2", "relu4_2"};
    return names[t];
}

PerceptualTaps::PerceptualTaps(PerceptualSpec spec, Rng& rng) : spec_(std::move(spec)) {
    require(spec_.widths.size() == kNumTaps, "perceptual extractor needs 4 stages");
    int ch = spec_.in_channels;
    for (size_t s = 0; s < spec_.widths.size(); ++s) {
        int w = spec_.widths[s];
        convs_.emplace_back("p" + std::to_string(s) + "a", ch, w, 3, 1, 1, ag::PadMode::Zero,
                            rng);
        convs_.emplace_back("p" + std::to_string(s) + "b", w, w, 3, 1, 1, ag::PadMode::Zero,
                            rng);
        ch = w;
    }
}

std::vector<ag::Var> PerceptualTaps::forward(ag::Graph& g, ag::Var img) {
    require(img->val.shape[1] % 8 == 0 && img->val.shape[2] % 8 == 0,
            "perceptual extractor: extent must be divisible by 8");
    std::vector<ag::Var> taps;
    ag::Var h = img;
    for (int s = 0; s < kNumTaps; ++s) {
        h = ag::relu(g, convs_[2 * s](g, h, false));
        h = ag::relu(g, convs_[2 * s + 1](g, h, false));
        taps.push_back(h);
        if (s + 1 < kNumTaps) h = ag::maxpool2(g, h);
    }
    return taps;
}

ParamRefs PerceptualTaps::params() {
    ParamRefs out;
    for (Conv2d& c : convs_) c.collect(out);
    return out;
}

} // namespace shiftgan
