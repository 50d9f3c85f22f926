#include "shiftgan/losses.hpp"

#include "shiftgan/errors.hpp"

namespace shiftgan {

std::string to_string(GanForm f) {
    return f == GanForm::LeastSquares ? "lsgan" : "logistic";
}

GanForm gan_form_from_string(const std::string& s) {
    if (s == "lsgan" || s == "least-squares") return GanForm::LeastSquares;
    if (s == "logistic" || s == "log") return GanForm::Logistic;
    throw ConfigError("unknown gan form: " + s);
}

void LossWeights::validate() const {
    for (float w : {lambda_cyc, lambda_sem, lambda_shift, w_content, w_style, w_spatial,
                    w_flow, w_shift})
        require(w >= 0.0f, "loss weights must be non-negative");
}

namespace {

ag::Var mean_of(ag::Graph& g, const std::vector<ag::Var>& scalars) {
    require(!scalars.empty(), "empty batch");
    ag::Var acc = scalars[0];
    for (size_t i = 1; i < scalars.size(); ++i) acc = ag::add(g, acc, scalars[i]);
    return ag::scale(g, acc, 1.0f / static_cast<float>(scalars.size()));
}

// mean((z - target)^2) or mean(softplus(z or -z)), per GAN form
ag::Var real_score_loss(ag::Graph& g, ag::Var z, GanForm form) {
    if (form == GanForm::LeastSquares) {
        ag::Var d = ag::add_scalar(g, z, -1.0f);
        return ag::mean_all(g, ag::mul(g, d, d));
    }
    return ag::mean_all(g, ag::softplus(g, ag::scale(g, z, -1.0f)));
}

ag::Var fake_score_loss(ag::Graph& g, ag::Var z, GanForm form) {
    if (form == GanForm::LeastSquares) return ag::mean_all(g, ag::mul(g, z, z));
    return ag::mean_all(g, ag::softplus(g, z));
}

} // namespace

ag::Var gan_loss_d(ag::Graph& g, const MapFn& D, const std::vector<Tensor>& real,
                   const std::vector<Tensor>& fake, GanForm form) {
    require(!real.empty() && !fake.empty(), "gan_loss_d: empty batch");
    std::vector<ag::Var> rs, fs;
    for (const Tensor& t : real) rs.push_back(real_score_loss(g, D(g, ag::constant(g, t)), form));
    for (const Tensor& t : fake) fs.push_back(fake_score_loss(g, D(g, ag::constant(g, t)), form));
    return ag::add(g, mean_of(g, rs), mean_of(g, fs));
}

ag::Var gan_loss_g(ag::Graph& g, const MapFn& D, const std::vector<ag::Var>& fake,
                   GanForm form) {
    require(!fake.empty(), "gan_loss_g: empty batch");
    std::vector<ag::Var> fs;
    for (ag::Var f : fake) fs.push_back(real_score_loss(g, D(g, f), form));
    return mean_of(g, fs);
}

ag::Var cycle_loss(ag::Graph& g, const Tensor& x, ag::Var reconstructed) {
    return ag::l1_mean(g, reconstructed, ag::constant(g, x));
}

ag::Var semantic_loss_with_labels(ag::Graph& g, Segmenter& f, const SemanticMap& pseudo,
                                  ag::Var translated) {
    require(pseudo.num_classes == f.num_classes(),
            "semantic_loss: class count mismatch between labels and segmenter");
    ag::Var logits = f.logits(g, translated, false);
    require(logits->val.shape[1] == pseudo.height && logits->val.shape[2] == pseudo.width,
            "semantic_loss: label map shape mismatch");
    std::vector<int> labels(pseudo.labels.begin(), pseudo.labels.end());
    return ag::softmax_ce_mean(g, logits, labels);
}

ag::Var semantic_loss(ag::Graph& g, Segmenter& f, const Image& x, ag::Var translated) {
    return semantic_loss_with_labels(g, f, f.predict(x), translated);
}

ag::Var flow_temporal_loss(ag::Graph& g, ag::Var prev_out, ag::Var next_out,
                           const FlowField& flow, const OcclusionMask& mask) {
    require(prev_out->val.same_shape(next_out->val), "flow_temporal_loss: shape mismatch");
    require(prev_out->val.shape[1] == flow.height && prev_out->val.shape[2] == flow.width,
            "flow_temporal_loss: flow shape mismatch");
    require(mask.height == flow.height && mask.width == flow.width,
            "flow_temporal_loss: mask shape mismatch");
    ag::Var warped = ag::warp_bilinear(g, next_out, flow_to_chw(flow));
    ag::Var diff = ag::sub(g, prev_out, warped);
    ag::Var sq = ag::mul(g, diff, diff);
    return ag::mean_all(g, ag::mul_const(g, sq, mask_to_chw(mask, prev_out->val.shape[0])));
}

ag::Var shift_consistency(ag::Graph& g, ag::Var g_main, ag::Var g_shifted, ShiftOffset off,
                          ShiftPolicy policy) {
    require(g_main->val.same_shape(g_shifted->val), "shift_consistency: shape mismatch");
    if (policy == ShiftPolicy::Circular)
        return ag::mse_mean(g, ag::circ_shift(g, g_main, off.i, off.j), g_shifted);
    const int h = g_main->val.shape[1], w = g_main->val.shape[2];
    require(off.i >= 0 && off.j >= 0, "overlap-crop shifts must be non-negative");
    require(h - off.j >= 1 && w - off.i >= 1, "overlap-crop comparison region is empty");
    // g_shifted(y, x) saw scene (y + j, x + i); overlap in main coordinates is
    // [j, h) x [i, w)
    ag::Var a = ag::crop(g, g_main, off.j, off.i, h - off.j, w - off.i);
    ag::Var b = ag::crop(g, g_shifted, 0, 0, h - off.j, w - off.i);
    return ag::mse_mean(g, a, b);
}

StyleTargets compute_style_targets(PerceptualTaps& taps, const Image& style_ref) {
    ag::Graph g;
    std::vector<ag::Var> t = taps.forward(g, ag::constant(g, to_chw(style_ref)));
    StyleTargets out;
    for (ag::Var tap : t) {
        ag::Var gm = ag::gram(g, tap);
        out.grams.push_back(gm->val);
    }
    return out;
}

StyleResult style_losses(ag::Graph& g, PerceptualTaps& taps, ag::Var stylized,
                         const Image& content_ref, const StyleTargets& targets,
                         const LossWeights& w) {
    require(targets.grams.size() == static_cast<size_t>(PerceptualTaps::kNumTaps),
            "style targets incomplete");
    std::vector<ag::Var> tap_s = taps.forward(g, stylized);
    ag::Graph ref_graph;   // content features carry no gradient; separate graph
    std::vector<ag::Var> tap_c =
        taps.forward(ref_graph, ag::constant(ref_graph, to_chw(content_ref)));

    ag::Var content = ag::mse_mean(
        g, tap_s[PerceptualTaps::kContentTap],
        ag::constant(g, tap_c[PerceptualTaps::kContentTap]->val));

    ag::Var style = nullptr;
    for (int t = 0; t < PerceptualTaps::kNumTaps; ++t) {
        ag::Var gm = ag::gram(g, tap_s[t]);
        ag::Var term = ag::mse_mean(g, gm, ag::constant(g, targets.grams[t]));
        style = style ? ag::add(g, style, term) : term;
    }
    ag::Var spatial = ag::tv_mean(g, stylized);

    StyleResult res;
    res.breakdown.add("content", content->val.v[0], w.w_content);
    res.breakdown.add("style", style->val.v[0], w.w_style);
    res.breakdown.add("spatial", spatial->val.v[0], w.w_spatial);
    res.total = ag::add(g, ag::add(g, ag::scale(g, content, w.w_content),
                                   ag::scale(g, style, w.w_style)),
                        ag::scale(g, spatial, w.w_spatial));
    return res;
}

AdaptModels AdaptModels::wrap(Generator& g_s2r, Generator& g_r2s, Discriminator& d_real,
                              Discriminator& d_sim, Segmenter* seg) {
    AdaptModels m;
    m.g_s2r = [&g_s2r](ag::Graph& g, ag::Var x) { return g_s2r.forward(g, x, true); };
    m.g_r2s = [&g_r2s](ag::Graph& g, ag::Var x) { return g_r2s.forward(g, x, true); };
    // discriminators are frozen within the generator step; gradients still
    // flow through their inputs into the generators
    m.d_real = [&d_real](ag::Graph& g, ag::Var x) { return d_real.forward(g, x, false); };
    m.d_sim = [&d_sim](ag::Graph& g, ag::Var x) { return d_sim.forward(g, x, false); };
    m.segmenter = seg;
    return m;
}

ObjectiveResult full_objective(ag::Graph& g, AdaptModels& m, const AdaptBatch& batch,
                               const LossWeights& w, ShiftPolicy policy, GanForm form) {
    w.validate();
    require(m.g_s2r && m.g_r2s && m.d_real && m.d_sim, "full_objective: missing models");
    if (w.lambda_sem > 0.0f && m.segmenter == nullptr)
        throw ConfigError("semantic weight is positive but no segmenter is configured");

    Tensor sim = to_chw(batch.sim);
    Tensor real = to_chw(batch.real);
    ag::Var sim_in = ag::constant(g, sim);
    ag::Var real_in = ag::constant(g, real);

    ag::Var fake_real = m.g_s2r(g, sim_in);    // G(s) toward domain R
    ag::Var fake_sim = m.g_r2s(g, real_in);    // G(r) toward domain S

    ObjectiveResult res;
    ag::Var gan_r = gan_loss_g(g, m.d_real, {fake_real}, form);
    ag::Var gan_s = gan_loss_g(g, m.d_sim, {fake_sim}, form);
    res.breakdown.add("gan_s2r", gan_r->val.v[0], 1.0);
    res.breakdown.add("gan_r2s", gan_s->val.v[0], 1.0);
    ag::Var total = ag::add(g, gan_r, gan_s);

    if (w.lambda_cyc > 0.0f) {
        ag::Var rec_sim = m.g_r2s(g, fake_real);   // S -> R -> S
        ag::Var rec_real = m.g_s2r(g, fake_sim);   // R -> S -> R
        ag::Var cyc_s = cycle_loss(g, sim, rec_sim);
        ag::Var cyc_r = cycle_loss(g, real, rec_real);
        res.breakdown.add("cyc_r", cyc_r->val.v[0], w.lambda_cyc);
        res.breakdown.add("cyc_s", cyc_s->val.v[0], w.lambda_cyc);
        total = ag::add(g, total,
                        ag::scale(g, ag::add(g, cyc_r, cyc_s), w.lambda_cyc));
    }

    if (w.lambda_sem > 0.0f) {
        ag::Var sem_r = semantic_loss(g, *m.segmenter, batch.real, fake_sim);
        ag::Var sem_s = semantic_loss(g, *m.segmenter, batch.sim, fake_real);
        res.breakdown.add("sem_r", sem_r->val.v[0], w.lambda_sem);
        res.breakdown.add("sem_s", sem_s->val.v[0], w.lambda_sem);
        total = ag::add(g, total,
                        ag::scale(g, ag::add(g, sem_r, sem_s), w.lambda_sem));
    }

    if (w.lambda_shift > 0.0f) {
        require(batch.sim_shift_input.has_value() && batch.real_shift_input.has_value(),
                "shift term active but batch carries no shift inputs");
        ag::Var g_sim_sh = m.g_s2r(g, ag::constant(g, to_chw(*batch.sim_shift_input)));
        ag::Var g_real_sh = m.g_r2s(g, ag::constant(g, to_chw(*batch.real_shift_input)));
        ag::Var shift_r = shift_consistency(g, fake_real, g_sim_sh, batch.off_sim, policy);
        ag::Var shift_s = shift_consistency(g, fake_sim, g_real_sh, batch.off_real, policy);
        res.breakdown.add("shift_s2r", shift_r->val.v[0], w.lambda_shift);
        res.breakdown.add("shift_r2s", shift_s->val.v[0], w.lambda_shift);
        total = ag::add(g, total,
                        ag::scale(g, ag::add(g, shift_r, shift_s), w.lambda_shift));
    }

    res.total = total;
    res.fake_real = fake_real->val;
    res.fake_sim = fake_sim->val;
    return res;
}

// --- scalar conveniences -----------------------------------------------------

double cycle_loss_value(const Image& x, const Image& reconstructed) {
    ag::Graph g;
    ag::Var v = cycle_loss(g, to_chw(x), ag::constant(g, to_chw(reconstructed)));
    return v->val.v[0];
}

Tensor gram_matrix(const Tensor& features) {
    ag::Graph g;
    return ag::gram(g, ag::constant(g, features))->val;
}

LossBreakdown style_losses_value(PerceptualTaps& taps, const Image& stylized,
                                 const Image& content_ref, const Image& style_ref,
                                 const LossWeights& w) {
    StyleTargets targets = compute_style_targets(taps, style_ref);
    ag::Graph g;
    StyleResult res =
        style_losses(g, taps, ag::constant(g, to_chw(stylized)), content_ref, targets, w);
    return res.breakdown;
}

double flow_temporal_loss_value(const Image& prev_out, const Image& next_out,
                                const FlowField& flow, const OcclusionMask& mask) {
    ag::Graph g;
    ag::Var v = flow_temporal_loss(g, ag::constant(g, to_chw(prev_out)),
                                   ag::constant(g, to_chw(next_out)), flow, mask);
    return v->val.v[0];
}

} // namespace shiftgan
