#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shiftgan/flow.hpp"
#include "shiftgan/networks.hpp"
#include "shiftgan/shiftops.hpp"

namespace shiftgan {

/// Adversarial objective family. LeastSquares is the training default;
/// Logistic (non-saturating log form) is kept behind this switch.
enum class GanForm { LeastSquares, Logistic };

std::string to_string(GanForm f);
GanForm gan_form_from_string(const std::string& s);

struct LossWeights {
    // adaptation objective
    float lambda_cyc = 10.0f;
    float lambda_sem = 1.0f;
    float lambda_shift = 0.0f;
    // style-transfer objective
    float w_content = 1e5f;
    float w_style = 2.0f;
    float w_spatial = 1e-7f;
    float w_flow = 10.0f;
    float w_shift = 100.0f;

    void validate() const;   // all weights must be >= 0
};

/// Named scalar per active term plus the weighted total.
struct LossTerm {
    std::string name;
    double value = 0.0;
    double weight = 1.0;
};

struct LossBreakdown {
    std::vector<LossTerm> terms;

    void add(const std::string& name, double value, double weight = 1.0) {
        terms.push_back({name, value, weight});
    }
    double total() const {
        double s = 0.0;
        for (const LossTerm& t : terms) s += t.value * t.weight;
        return s;
    }
    const LossTerm* find(const std::string& name) const {
        for (const LossTerm& t : terms)
            if (t.name == name) return &t;
        return nullptr;
    }
};

using MapFn = std::function<ag::Var(ag::Graph&, ag::Var)>;

// --- graph-level losses (differentiable) ------------------------------------

/// Discriminator side; fakes arrive as plain tensors, already detached.
/// LeastSquares: mean((D(real)-1)^2) + mean(D(fake)^2).
ag::Var gan_loss_d(ag::Graph& g, const MapFn& D, const std::vector<Tensor>& real,
                   const std::vector<Tensor>& fake, GanForm form = GanForm::LeastSquares);

/// Generator side. LeastSquares: mean((D(fake)-1)^2).
ag::Var gan_loss_g(ag::Graph& g, const MapFn& D, const std::vector<ag::Var>& fake,
                   GanForm form = GanForm::LeastSquares);

/// mean absolute elementwise difference
ag::Var cycle_loss(ag::Graph& g, const Tensor& x, ag::Var reconstructed);

/// Pseudo-labels = argmax of f(x); loss = mean per-pixel cross-entropy of
/// f(translated) against them. Gradients flow only through translated.
ag::Var semantic_loss(ag::Graph& g, Segmenter& f, const Image& x, ag::Var translated);
ag::Var semantic_loss_with_labels(ag::Graph& g, Segmenter& f, const SemanticMap& pseudo,
                                  ag::Var translated);

/// mean over all elements of mask * (prev_out - warp(next_out, flow))^2;
/// the normalizer counts every element, so an all-zero mask gives 0
ag::Var flow_temporal_loss(ag::Graph& g, ag::Var prev_out, ag::Var next_out,
                           const FlowField& flow, const OcclusionMask& mask);

/// shift(G(x)) vs G(shift(x)) comparison given the two generator outputs.
/// Circular: full-image MSE of the wrapped alignment. OverlapCrop: g_shifted
/// came from the (i,j)-offset window of a common scene, so the comparison is
/// restricted to crops where both outputs saw real content.
ag::Var shift_consistency(ag::Graph& g, ag::Var g_main, ag::Var g_shifted, ShiftOffset off,
                          ShiftPolicy policy);

// --- style-transfer loss family ---------------------------------------------

struct StyleTargets {
    std::vector<Tensor> grams;   // one per tap
};

StyleTargets compute_style_targets(PerceptualTaps& taps, const Image& style_ref);

struct StyleResult {
    LossBreakdown breakdown;   // content, style, spatial (unweighted values)
    ag::Var total = nullptr;
};

/// content = squared feature distance at the content tap; style = Gram
/// distances summed over the four style taps; spatial = total variation.
StyleResult style_losses(ag::Graph& g, PerceptualTaps& taps, ag::Var stylized,
                         const Image& content_ref, const StyleTargets& targets,
                         const LossWeights& w);

// --- the adaptation objective -----------------------------------------------

struct AdaptModels {
    MapFn g_s2r;                      // sim -> real
    MapFn g_r2s;                      // real -> sim (the deployment direction)
    MapFn d_real;
    MapFn d_sim;
    Segmenter* segmenter = nullptr;   // optional; required when lambda_sem > 0

    static AdaptModels wrap(Generator& g_s2r, Generator& g_r2s, Discriminator& d_real,
                            Discriminator& d_sim, Segmenter* seg);
};

struct AdaptBatch {
    Image sim, real;   // training crops taken from the same random position
    // generator inputs for the shift terms (offset window or circular shift);
    // present iff lambda_shift > 0
    std::optional<Image> sim_shift_input, real_shift_input;
    ShiftOffset off_sim, off_real;
};

struct ObjectiveResult {
    LossBreakdown breakdown;
    ag::Var total = nullptr;       // generator-side scalar node
    Tensor fake_real, fake_sim;    // detached fakes for the discriminator step
};

/// Generator-side full objective: the two adversarial terms plus weighted
/// cycle / semantic / shift terms. Inactive (zero-weight) terms are neither
/// computed nor logged. The discriminator step maximizes its own terms via
/// gan_loss_d.
ObjectiveResult full_objective(ag::Graph& g, AdaptModels& m, const AdaptBatch& batch,
                               const LossWeights& w, ShiftPolicy policy,
                               GanForm form = GanForm::LeastSquares);

// --- scalar conveniences (tests, probes) ------------------------------------

double cycle_loss_value(const Image& x, const Image& reconstructed);
Tensor gram_matrix(const Tensor& features);
LossBreakdown style_losses_value(PerceptualTaps& taps, const Image& stylized,
                                 const Image& content_ref, const Image& style_ref,
                                 const LossWeights& w);
double flow_temporal_loss_value(const Image& prev_out, const Image& next_out,
                                const FlowField& flow, const OcclusionMask& mask);

} // namespace shiftgan
