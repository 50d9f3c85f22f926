#include "shiftgan/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shiftgan/checkpoint.hpp"
#include "shiftgan/errors.hpp"
#include "shiftgan/synthetic.hpp"

namespace fs = std::filesystem;

namespace shiftgan {

void TrainConfig::validate() const {
    require(mode == "adapt" || mode == "style", "mode must be adapt or style");
    require(crop >= 8, "crop too small");
    require(iterations >= 1, "iterations must be positive");
    require(lr > 0.0f, "learning rate must be positive");
    require(batch == 1, "batch size 1 is the supported setting");
    require(fake_buffer >= 1, "fake buffer capacity must be positive");
    weights.validate();
    gen.validate();
    disc.validate();
    if (mode == "style")
        require(style_variant == "FF" || style_variant == "FF+flow" || style_variant == "Ours",
                "style_variant must be FF, FF+flow or Ours");
}

Tensor FakeBuffer::query(const Tensor& fresh, Rng& rng) {
    if (static_cast<int>(pool_.size()) < capacity_) {
        pool_.push_back(fresh);
        return fresh;
    }
    if (rng.uniform() < 0.5f) {
        int idx = rng.uniform_int(0, capacity_ - 1);
        Tensor out = pool_[idx];
        pool_[idx] = fresh;
        return out;
    }
    return fresh;
}

PairedCropSampler::PairedCropSampler(const DomainDataset& a, const DomainDataset& b, int crop,
                                     int margin)
    : a_(a), b_(b), crop_(crop), margin_(margin) {
    require(crop >= 1 && margin >= 0, "bad sampler geometry");
}

PairedCropSampler::Sample PairedCropSampler::next(Rng& rng) {
    size_t ia = a_.sample_index(rng);
    size_t ib = b_.sample_index(rng);
    Image img_a = a_.image(ia);
    Image img_b = b_.image(ib);
    const int window = crop_ + margin_;
    const int max_y = std::min(img_a.height, img_b.height) - window;
    const int max_x = std::min(img_a.width, img_b.width) - window;
    require(max_y >= 0 && max_x >= 0, "images smaller than crop + shift margin");
    Sample s;
    s.oy = rng.uniform_int(0, max_y);
    s.ox = rng.uniform_int(0, max_x);
    s.a_super = crop_image(img_a, s.oy, s.ox, window, window);
    s.b_super = crop_image(img_b, s.oy, s.ox, window, window);
    return s;
}

namespace {

struct CsvLog {
    std::ofstream out;
    bool header_written = false;

    explicit CsvLog(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw IoError("cannot open log file: " + path);
    }

    void row(long iter, const LossBreakdown& b, double lr) {
        char buf[64];
        if (!header_written) {
            out << "iteration";
            for (const LossTerm& t : b.terms) out << "," << t.name;
            out << ",total,lr\n";
            header_written = true;
        }
        out << iter;
        for (const LossTerm& t : b.terms) {
            std::snprintf(buf, sizeof(buf), ",%.9g", t.value);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.9g,%.9g\n", b.total(), lr);
        out << buf;
    }
};

void ensure_dir(const std::string& dir) { fs::create_directories(dir); }

ShiftOffset maybe_sample_shift(const TrainConfig& cfg, Rng& rng) {
    return sample_shift(cfg.gen.downsample_factor(), rng);
}

Image shift_input_for(const Image& super, const Image& origin, ShiftOffset off, int crop,
                      ShiftPolicy policy) {
    if (policy == ShiftPolicy::OverlapCrop)
        return crop_image(super, off.j, off.i, crop, crop);
    return shift(origin, off, ShiftPolicy::Circular).image;
}

void write_diagnostic_snapshot(const std::string& out_dir, long iter,
                               const LossBreakdown& last) {
    std::ofstream snap(fs::path(out_dir) / "diagnostic.txt");
    snap << "non-finite loss at iteration " << iter << "\n";
    for (const LossTerm& t : last.terms)
        snap << t.name << " = " << t.value << " (weight " << t.weight << ")\n";
}

} // namespace

TrainResult train_adapt(const TrainConfig& cfg, const DomainDataset& sim,
                        const DomainDataset& real, Segmenter* segmenter,
                        const std::string& out_dir) {
    cfg.validate();
    require(cfg.mode == "adapt", "train_adapt: config mode mismatch");
    require(sim.size() > 0 && real.size() > 0, "train_adapt: empty dataset");
    if (cfg.weights.lambda_sem > 0.0f && segmenter == nullptr)
        throw ConfigError("lambda_sem > 0 requires a segmenter");
    ensure_dir(out_dir);

    Rng master = Rng(cfg.seed);
    Rng init_rng = master.derive("init");
    Rng data_rng = master.derive("data");
    Rng shift_rng_s2r = master.derive("shift_s2r");
    Rng shift_rng_r2s = master.derive("shift_r2s");
    Rng buf_rng_real = master.derive("buffer_real");
    Rng buf_rng_sim = master.derive("buffer_sim");

    Generator g_s2r(cfg.gen, init_rng);
    Generator g_r2s(cfg.gen, init_rng);
    Discriminator d_real(cfg.disc, init_rng);
    Discriminator d_sim(cfg.disc, init_rng);

    ParamRefs gen_params = g_s2r.params();
    {
        ParamRefs more = g_r2s.params();
        gen_params.insert(gen_params.end(), more.begin(), more.end());
    }
    ParamRefs disc_params = d_real.params();
    {
        ParamRefs more = d_sim.params();
        disc_params.insert(disc_params.end(), more.begin(), more.end());
    }
    Adam opt_g(gen_params), opt_d(disc_params);

    const int k = cfg.gen.downsample_factor();
    PairedCropSampler sampler(sim, real, cfg.crop, k);
    FakeBuffer buffer_real(cfg.fake_buffer), buffer_sim(cfg.fake_buffer);

    AdaptModels models = AdaptModels::wrap(g_s2r, g_r2s, d_real, d_sim, segmenter);
    TrainResult result;
    result.log_path = (fs::path(out_dir) / "train_log.csv").string();
    CsvLog log(result.log_path);

    auto save = [&](long iter, const std::string& name) {
        Checkpoint ck;
        ck.kind = "adapt";
        ck.seed = cfg.seed;
        ck.iteration = iter;
        ck.shift_policy = to_string(cfg.policy);
        ck.weights = json{{"lambda_cyc", cfg.weights.lambda_cyc},
                          {"lambda_sem", cfg.weights.lambda_sem},
                          {"lambda_shift", cfg.weights.lambda_shift}};
        ck.specs = json{{"generator", generator_spec_to_json(cfg.gen)},
                        {"discriminator", discriminator_spec_to_json(cfg.disc)}};
        store_params(ck, "g_s2r", g_s2r.params());
        store_params(ck, "g_r2s", g_r2s.params());
        store_params(ck, "d_real", d_real.params());
        store_params(ck, "d_sim", d_sim.params());
        std::string path = (fs::path(out_dir) / name).string();
        save_checkpoint(path, ck);
        return path;
    };

    for (long iter = 1; iter <= cfg.iterations; ++iter) {
        const float lr =
            scheduled_lr(cfg.lr, iter, cfg.lr_decay_after, cfg.lr_decay_until);
        PairedCropSampler::Sample s = sampler.next(data_rng);

        AdaptBatch batch;
        batch.sim = crop_image(s.a_super, 0, 0, cfg.crop, cfg.crop);
        batch.real = crop_image(s.b_super, 0, 0, cfg.crop, cfg.crop);
        if (cfg.weights.lambda_shift > 0.0f) {
            batch.off_sim = maybe_sample_shift(cfg, shift_rng_s2r);
            batch.off_real = maybe_sample_shift(cfg, shift_rng_r2s);
            batch.sim_shift_input =
                shift_input_for(s.a_super, batch.sim, batch.off_sim, cfg.crop, cfg.policy);
            batch.real_shift_input =
                shift_input_for(s.b_super, batch.real, batch.off_real, cfg.crop, cfg.policy);
        }

        // generator step
        ag::Graph g;
        ObjectiveResult obj = full_objective(g, models, batch, cfg.weights, cfg.policy,
                                             cfg.gan_form);
        if (!std::isfinite(obj.breakdown.total())) {
            write_diagnostic_snapshot(out_dir, iter, obj.breakdown);
            save(iter, "diagnostic.ckpt");
            throw Error("non-finite loss at iteration " + std::to_string(iter));
        }
        opt_g.zero_grad();
        g.backward(obj.total);
        opt_g.step(lr);

        // discriminator step, fakes drawn through the history buffers
        Tensor hist_real = buffer_real.query(obj.fake_real, buf_rng_real);
        Tensor hist_sim = buffer_sim.query(obj.fake_sim, buf_rng_sim);
        ag::Graph gd;
        MapFn d_real_fn = [&](ag::Graph& gg, ag::Var x) { return d_real.forward(gg, x, true); };
        MapFn d_sim_fn = [&](ag::Graph& gg, ag::Var x) { return d_sim.forward(gg, x, true); };
        ag::Var d_loss_real =
            gan_loss_d(gd, d_real_fn, {to_chw(batch.real)}, {hist_real}, cfg.gan_form);
        ag::Var d_loss_sim =
            gan_loss_d(gd, d_sim_fn, {to_chw(batch.sim)}, {hist_sim}, cfg.gan_form);
        ag::Var d_loss = ag::add(gd, d_loss_real, d_loss_sim);
        if (!std::isfinite(static_cast<double>(d_loss->val.v[0]))) {
            write_diagnostic_snapshot(out_dir, iter, obj.breakdown);
            save(iter, "diagnostic.ckpt");
            throw Error("non-finite discriminator loss at iteration " + std::to_string(iter));
        }
        opt_d.zero_grad();
        gd.backward(d_loss);
        opt_d.step(lr);

        obj.breakdown.add("d_real", d_loss_real->val.v[0], 0.0);
        obj.breakdown.add("d_sim", d_loss_sim->val.v[0], 0.0);
        if (iter % cfg.log_every == 0 || iter == cfg.iterations) {
            log.row(iter, obj.breakdown, lr);
            result.history.push_back(obj.breakdown);
        }
        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0 &&
            iter != cfg.iterations)
            save(iter, "iter_" + std::to_string(iter) + ".ckpt");
        result.final_lr = lr;
    }
    result.checkpoint_path = save(cfg.iterations, "final.ckpt");
    return result;
}

TrainResult train_style(const TrainConfig& cfg, const std::vector<SequenceData>& data,
                        const Image& style_ref, PerceptualTaps& taps,
                        const std::string& out_dir) {
    cfg.validate();
    require(cfg.mode == "style", "train_style: config mode mismatch");
    require(!data.empty(), "train_style: no training sequences");
    const bool use_flow = cfg.style_variant == "FF+flow";
    const bool use_shift = cfg.style_variant == "Ours" && cfg.weights.w_shift > 0.0f;
    if (use_flow)
        for (const SequenceData& seq : data)
            if (seq.flows.empty())
                throw ConfigError("FF+flow requires flow files for every training sequence");
    ensure_dir(out_dir);

    Rng master = Rng(cfg.seed);
    Rng init_rng = master.derive("init");
    Rng data_rng = master.derive("data");
    Rng shift_rng = master.derive("shift");

    Generator stylizer(cfg.gen, init_rng);
    Adam opt(stylizer.params());
    StyleTargets targets = compute_style_targets(taps, style_ref);

    TrainResult result;
    result.log_path = (fs::path(out_dir) / "train_log.csv").string();
    CsvLog log(result.log_path);
    const int k = cfg.gen.downsample_factor();

    auto save = [&](long iter) {
        Checkpoint ck;
        ck.kind = "style";
        ck.seed = cfg.seed;
        ck.iteration = iter;
        ck.shift_policy = to_string(cfg.policy);
        ck.weights = json{{"w_content", cfg.weights.w_content},
                          {"w_style", cfg.weights.w_style},
                          {"w_spatial", cfg.weights.w_spatial},
                          {"w_flow", cfg.weights.w_flow},
                          {"w_shift", cfg.weights.w_shift},
                          {"variant", cfg.style_variant}};
        ck.specs = json{{"generator", generator_spec_to_json(cfg.gen)}};
        store_params(ck, "stylizer", stylizer.params());
        std::string path = (fs::path(out_dir) / "final.ckpt").string();
        save_checkpoint(path, ck);
        return path;
    };

    for (long iter = 1; iter <= cfg.iterations; ++iter) {
        const float lr =
            scheduled_lr(cfg.lr, iter, cfg.lr_decay_after, cfg.lr_decay_until);
        const SequenceData& seq =
            data[static_cast<size_t>(data_rng.uniform_int(0, static_cast<int>(data.size()) - 1))];
        const int t_max = seq.frames.length() - (use_flow ? 2 : 1);
        const int t = data_rng.uniform_int(0, t_max);
        const Image& frame = seq.frames.frames[t];
        require(frame.height % k == 0 && frame.width % k == 0,
                "style frames must be a multiple of K");

        ag::Graph g;
        ag::Var x = ag::constant(g, to_chw(frame));
        ag::Var stylized = stylizer.forward(g, x);
        StyleResult style = style_losses(g, taps, stylized, frame, targets, cfg.weights);
        LossBreakdown breakdown = style.breakdown;
        ag::Var total = style.total;

        if (use_flow) {
            const Image& next = seq.frames.frames[t + 1];
            ag::Var stylized_next = stylizer.forward(g, ag::constant(g, to_chw(next)));
            ag::Var flow_term =
                flow_temporal_loss(g, stylized, stylized_next, seq.flows[t], seq.masks[t]);
            breakdown.add("flow", flow_term->val.v[0], cfg.weights.w_flow);
            total = ag::add(g, total, ag::scale(g, flow_term, cfg.weights.w_flow));
        }
        if (use_shift) {
            ShiftOffset off = sample_shift(k, shift_rng);
            ag::Var shift_term = nullptr;
            if (cfg.policy == ShiftPolicy::Circular) {
                Image shift_in = shift(frame, off, ShiftPolicy::Circular).image;
                ag::Var stylized_sh = stylizer.forward(g, ag::constant(g, to_chw(shift_in)));
                shift_term =
                    shift_consistency(g, stylized, stylized_sh, off, ShiftPolicy::Circular);
            } else {
                // overlap on a full frame: stylize the (i,j)-offset window
                // (shrunk onto the K grid) and compare against the matching
                // window of the main output
                int wh = (frame.height - off.j) / k * k;
                int ww = (frame.width - off.i) / k * k;
                require(wh >= k && ww >= k, "frame too small for overlap shift");
                Image window = crop_image(frame, off.j, off.i, wh, ww);
                ag::Var stylized_sh = stylizer.forward(g, ag::constant(g, to_chw(window)));
                ag::Var main_window = ag::crop(g, stylized, off.j, off.i, wh, ww);
                shift_term = ag::mse_mean(g, main_window, stylized_sh);
            }
            breakdown.add("shift", shift_term->val.v[0], cfg.weights.w_shift);
            total = ag::add(g, total, ag::scale(g, shift_term, cfg.weights.w_shift));
        }

        if (!std::isfinite(breakdown.total())) {
            write_diagnostic_snapshot(out_dir, iter, breakdown);
            save(iter);
            throw Error("non-finite loss at iteration " + std::to_string(iter));
        }
        opt.zero_grad();
        g.backward(total);
        opt.step(lr);

        if (iter % cfg.log_every == 0 || iter == cfg.iterations) {
            log.row(iter, breakdown, lr);
            result.history.push_back(breakdown);
        }
        result.final_lr = lr;
    }
    result.checkpoint_path = save(cfg.iterations);
    return result;
}

void pretrain_segmenter(Segmenter& seg, const DomainDataset& labeled, long steps, float lr,
                        Rng rng) {
    require(!seg.frozen(), "segmenter is frozen");
    require(labeled.has_labels(), "segmenter pretraining needs label maps");
    Adam opt(seg.params());
    for (long step = 0; step < steps; ++step) {
        size_t idx = labeled.sample_index(rng);
        Image img = labeled.image(idx);
        SemanticMap labels = labeled.labels(idx, seg.num_classes());
        ag::Graph g;
        ag::Var logits = seg.logits(g, ag::constant(g, to_chw(img)), true);
        std::vector<int> flat(labels.labels.begin(), labels.labels.end());
        ag::Var loss = ag::softmax_ce_mean(g, logits, flat);
        opt.zero_grad();
        g.backward(loss);
        opt.step(lr);
    }
    seg.freeze();
}

double segmenter_accuracy(Segmenter& seg, int samples, int h, int w, char palette, Rng rng) {
    long correct = 0, total = 0;
    for (int i = 0; i < samples; ++i) {
        ShapeSample sample = render_shapes(h, w, palette, rng);
        SemanticMap pred = seg.predict(sample.image);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                correct += pred.at(y, x) == sample.labels.at(y, x) ? 1 : 0;
                ++total;
            }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

std::unique_ptr<Generator> load_generator_from(const std::string& ckpt_path,
                                               const std::string& role) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    GeneratorSpec spec = generator_spec_from_json(ck.specs.at("generator"));
    Rng rng(0);
    auto gen = std::make_unique<Generator>(spec, rng);
    restore_params(ck, role, gen->params());
    return gen;
}

std::unique_ptr<Segmenter> load_segmenter_from(const std::string& ckpt_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    require(ck.kind == "segmenter", "not a segmenter checkpoint");
    int classes = ck.specs.at("num_classes").get<int>();
    int width = ck.specs.at("width").get<int>();
    Rng rng(0);
    auto seg = std::make_unique<Segmenter>(classes, width, rng);
    restore_params(ck, "seg", seg->params());
    seg->freeze();
    return seg;
}

void save_segmenter(const std::string& path, Segmenter& seg, uint64_t seed) {
    Checkpoint ck;
    ck.kind = "segmenter";
    ck.seed = seed;
    ck.iteration = 0;
    ck.shift_policy = "n/a";
    ck.weights = json::object();
    ck.specs = json{{"num_classes", seg.num_classes()}, {"width", seg.width()}};
    store_params(ck, "seg", seg.params());
    save_checkpoint(path, ck);
}

std::unique_ptr<PerceptualTaps> load_perceptual_from(const std::string& ckpt_path) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    require(ck.kind == "perceptual", "not a perceptual-extractor checkpoint");
    PerceptualSpec spec;
    spec.in_channels = ck.specs.at("in_channels").get<int>();
    spec.widths = ck.specs.at("widths").get<std::vector<int>>();
    Rng rng(0);
    auto taps = std::make_unique<PerceptualTaps>(spec, rng);
    restore_params(ck, "taps", taps->params());
    return taps;
}

void save_perceptual(const std::string& path, PerceptualTaps& taps, uint64_t seed) {
    Checkpoint ck;
    ck.kind = "perceptual";
    ck.seed = seed;
    ck.iteration = 0;
    ck.shift_policy = "n/a";
    ck.weights = json::object();
    ck.specs = json{{"in_channels", taps.spec().in_channels}, {"widths", taps.spec().widths}};
    store_params(ck, "taps", taps.params());
    save_checkpoint(path, ck);
}

} // namespace shiftgan
