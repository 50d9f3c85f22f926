#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shiftgan/dataset.hpp"
#include "shiftgan/losses.hpp"
#include "shiftgan/networks.hpp"
#include "shiftgan/optim.hpp"

namespace shiftgan {

struct TrainConfig {
    std::string mode = "adapt";            // adapt | style
    int crop = 64;
    long iterations = 2000;
    float lr = 2e-4f;
    long lr_decay_after = 0;               // 0/0 = constant schedule
    long lr_decay_until = 0;
    int batch = 1;
    uint64_t seed = 7;
    LossWeights weights;
    ShiftPolicy policy = ShiftPolicy::OverlapCrop;
    GanForm gan_form = GanForm::LeastSquares;
    int fake_buffer = 50;
    std::string style_variant = "FF";      // FF | FF+flow | Ours

    GeneratorSpec gen;
    DiscriminatorSpec disc;
    int seg_classes = 3;
    int seg_width = 16;
    long seg_pretrain_steps = 600;
    float seg_pretrain_lr = 2e-3f;

    long log_every = 1;
    long checkpoint_every = 0;             // 0 = final checkpoint only

    std::string data;                      // dataset root
    std::string style_image;               // style mode only

    void validate() const;
};

/// History buffer of generated images shown to the discriminator: below
/// capacity every fake is stored and passed through; at capacity, with
/// probability 1/2 a stored image is returned and replaced by the new one,
/// otherwise the new one is returned.
class FakeBuffer {
public:
    explicit FakeBuffer(int capacity) : capacity_(capacity) {}

    Tensor query(const Tensor& fresh, Rng& rng);
    size_t size() const { return pool_.size(); }
    int capacity() const { return capacity_; }

private:
    int capacity_;
    std::vector<Tensor> pool_;
};

/// Draws one image per domain and crops both at one shared random position.
/// The crop is oversized by `margin` so an (i,j)-offset window is available
/// for the shift term without fabricating content.
class PairedCropSampler {
public:
    PairedCropSampler(const DomainDataset& a, const DomainDataset& b, int crop, int margin);

    struct Sample {
        Image a_super, b_super;   // (crop+margin)^2 windows, same origin
        int oy = 0, ox = 0;       // shared crop origin, recorded for the tests
    };
    Sample next(Rng& rng);

    int crop() const { return crop_; }
    int margin() const { return margin_; }

private:
    const DomainDataset& a_;
    const DomainDataset& b_;
    int crop_, margin_;
};

struct TrainResult {
    std::string checkpoint_path;
    std::string log_path;
    std::vector<LossBreakdown> history;   // one row per logged iteration
    double final_lr = 0.0;
};

/// Unpaired adaptation: alternating generator/discriminator updates with a
/// fake-image history buffer, paired crops, and fresh shift samples per
/// frame per direction. Aborts with a diagnostic snapshot on non-finite
/// loss. Deterministic given (config, seed).
TrainResult train_adapt(const TrainConfig& cfg, const DomainDataset& sim,
                        const DomainDataset& real, Segmenter* segmenter,
                        const std::string& out_dir);

/// Feed-forward stylizer training. Variants: FF (content+style+spatial),
/// FF+flow (adds the optical-flow temporal term over consecutive frames;
/// requires flow on disk), Ours (adds the shift term on single frames).
TrainResult train_style(const TrainConfig& cfg, const std::vector<SequenceData>& data,
                        const Image& style_ref, PerceptualTaps& taps,
                        const std::string& out_dir);

/// Supervised pretraining of the toy segmenter on a labeled domain; the
/// segmenter is frozen afterwards.
void pretrain_segmenter(Segmenter& seg, const DomainDataset& labeled, long steps, float lr,
                        Rng rng);

/// Mean per-pixel accuracy of seg on rendered held-out shapes.
double segmenter_accuracy(Segmenter& seg, int samples, int h, int w, char palette, Rng rng);

// checkpoint round-trips for the trained model families
std::unique_ptr<Generator> load_generator_from(const std::string& ckpt_path,
                                               const std::string& role);
std::unique_ptr<Segmenter> load_segmenter_from(const std::string& ckpt_path);
void save_segmenter(const std::string& path, Segmenter& seg, uint64_t seed);
/// Pluggable extractor weights: published (converted) or previously saved.
std::unique_ptr<PerceptualTaps> load_perceptual_from(const std::string& ckpt_path);
void save_perceptual(const std::string& path, PerceptualTaps& taps, uint64_t seed);

} // namespace shiftgan
