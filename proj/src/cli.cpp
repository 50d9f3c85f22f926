#include "shiftgan/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "shiftgan/checkpoint.hpp"
#include "shiftgan/config.hpp"
#include "shiftgan/errors.hpp"
#include "shiftgan/metrics.hpp"
#include "shiftgan/synthetic.hpp"
#include "shiftgan/training.hpp"

namespace fs = std::filesystem;

namespace shiftgan {

namespace {

using nlohmann::json;

/// Refuse to clobber a previous run unless --force; write the manifest last
/// thing before returning so interrupted runs stay recognizable.
void claim_out_dir(const std::string& out, bool force) {
    fs::path manifest = fs::path(out) / "manifest.json";
    if (fs::exists(manifest) && !force)
        throw ConfigError("output directory already holds a run: " + out +
                          " (use --force to overwrite)");
    fs::create_directories(out);
}

void write_manifest(const std::string& out, const std::string& command, const json& body) {
    json manifest{{"tool_version", kToolVersion}, {"command", command}, {"config", body}};
    std::ofstream f(fs::path(out) / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
}

struct GenDataOpts {
    std::string pattern = "checker";
    int frames = 8;
    std::string velocity = "1,0";
    int size = 64;
    int sequences = 1;
    int count = 64;
    uint64_t seed = 7;
    bool strict_mask = false;
    std::string out;
    bool force = false;
};

std::pair<int, int> parse_velocity(const std::string& v) {
    size_t comma = v.find(',');
    if (comma == std::string::npos)
        throw ConfigError("velocity must be 'dx,dy', got '" + v + "'");
    try {
        return {std::stoi(v.substr(0, comma)), std::stoi(v.substr(comma + 1))};
    } catch (...) {
        throw ConfigError("velocity must be 'dx,dy', got '" + v + "'");
    }
}

int cmd_gen_data(const GenDataOpts& o) {
    claim_out_dir(o.out, o.force);
    auto [vx, vy] = parse_velocity(o.velocity);
    if (o.pattern == "shapes2") {
        write_shapes_corpus(o.out, o.count, o.size, o.size, o.seed);
    } else if (o.sequences == 1) {
        write_sequence_corpus(o.out, o.pattern, o.frames, vx, vy, o.size, o.size, o.seed,
                              o.strict_mask);
    } else {
        for (int s = 0; s < o.sequences; ++s) {
            char name[32];
            std::snprintf(name, sizeof(name), "seq_%03d", s);
            write_sequence_corpus((fs::path(o.out) / name).string(), o.pattern, o.frames, vx,
                                  vy, o.size, o.size, o.seed + static_cast<uint64_t>(s),
                                  o.strict_mask);
        }
    }
    write_manifest(o.out, "gen-data",
                   json{{"pattern", o.pattern},
                        {"frames", o.frames},
                        {"velocity", o.velocity},
                        {"size", o.size},
                        {"sequences", o.sequences},
                        {"count", o.count},
                        {"seed", o.seed},
                        {"strict_mask", o.strict_mask}});
    return 0;
}

struct TrainOpts {
    std::string mode;
    std::string config_path;
    std::vector<std::string> overrides;   // key=value, flags win over the file
    std::string segmenter_ckpt;
    std::string perceptual_ckpt;
    std::string out;
    bool dry_run = false;
    bool force = false;
    bool has_seed = false;
    uint64_t seed = 0;
};

TrainConfig resolve_train_config(const TrainOpts& o) {
    TrainConfig cfg;
    if (!o.config_path.empty()) cfg = parse_config_file(o.config_path);
    cfg.mode = o.mode;
    for (const std::string& kv : o.overrides) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.has_seed) cfg.seed = o.seed;
    cfg.validate();
    return cfg;
}

int cmd_train(const TrainOpts& o) {
    TrainConfig cfg = resolve_train_config(o);
    if (o.dry_run) {
        std::cout << config_to_json(cfg).dump(2) << "\n";
        return 0;
    }
    require(!cfg.data.empty(), "train: config needs a data directory");
    claim_out_dir(o.out, o.force);

    if (cfg.mode == "adapt") {
        DomainDataset sim = DomainDataset::open(cfg.data, 'A');
        DomainDataset real = DomainDataset::open(cfg.data, 'B');
        std::unique_ptr<Segmenter> seg;
        if (cfg.weights.lambda_sem > 0.0f) {
            if (!o.segmenter_ckpt.empty()) {
                seg = load_segmenter_from(o.segmenter_ckpt);
            } else {
                if (!sim.has_labels())
                    throw ConfigError(
                        "lambda_sem > 0 but no segmenter checkpoint and no semA labels");
                Rng seg_rng = Rng(cfg.seed).derive("segmenter");
                seg = toy_segmenter(cfg.seg_classes, seg_rng);
                pretrain_segmenter(*seg, sim, cfg.seg_pretrain_steps, cfg.seg_pretrain_lr,
                                   seg_rng.derive("pretrain"));
                save_segmenter((fs::path(o.out) / "segmenter.ckpt").string(), *seg, cfg.seed);
            }
        }
        TrainResult res = train_adapt(cfg, sim, real, seg.get(), o.out);
        std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    } else {
        require(!cfg.style_image.empty(), "train style: config needs style_image");
        std::vector<SequenceData> data = load_sequence_roots(cfg.data);
        Image style_ref = load_image(cfg.style_image);
        std::unique_ptr<PerceptualTaps> taps;
        if (!o.perceptual_ckpt.empty()) {
            taps = load_perceptual_from(o.perceptual_ckpt);
        } else {
            // fixed-seed random extractor; swap in converted published
            // weights via --perceptual for full-scale runs
            Rng taps_rng = Rng(cfg.seed).derive("perceptual");
            taps = std::make_unique<PerceptualTaps>(PerceptualSpec{}, taps_rng);
        }
        TrainResult res = train_style(cfg, data, style_ref, *taps, o.out);
        std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    }
    write_manifest(o.out, "train " + cfg.mode, config_to_json(cfg));
    return 0;
}

std::unique_ptr<Generator> generator_from_checkpoint(const std::string& path,
                                                     const std::string& direction) {
    Checkpoint ck = load_checkpoint(path);
    std::string role;
    if (ck.kind == "style")
        role = "stylizer";
    else if (ck.kind == "adapt")
        role = direction == "s2r" ? "g_s2r" : "g_r2s";
    else
        throw ConfigError("checkpoint kind '" + ck.kind + "' has no generator");
    return load_generator_from(path, role);
}

struct TranslateOpts {
    std::string checkpoint, in_dir, out;
    std::string direction = "r2s";
    bool force = false;
};

int cmd_translate(const TranslateOpts& o) {
    claim_out_dir(o.out, o.force);
    DomainDataset inputs = DomainDataset::open_dir(o.in_dir);
    if (inputs.size() == 0)
        std::cerr << "warning: no images found in " << o.in_dir << "\n";
    std::unique_ptr<Generator> gen;
    if (inputs.size() > 0) gen = generator_from_checkpoint(o.checkpoint, o.direction);
    for (size_t i = 0; i < inputs.size(); ++i) {
        Image translated = gen->apply(inputs.image(i));
        save_image((fs::path(o.out) / inputs.name(i)).string(), translated);
    }
    write_manifest(o.out, "translate",
                   json{{"checkpoint", o.checkpoint},
                        {"in", o.in_dir},
                        {"direction", o.direction},
                        {"inputs", inputs.size()}});
    return 0;
}

struct ProbeOpts {
    std::string checkpoint, image_path, out;
    int max_shift = 4;
    std::string axis = "X";
    std::string policy = "overlap-crop";
    std::string direction = "r2s";
    bool force = false;
};

int cmd_probe_shift(const ProbeOpts& o) {
    claim_out_dir(o.out, o.force);
    std::unique_ptr<Generator> gen = generator_from_checkpoint(o.checkpoint, o.direction);
    Image img = load_image(o.image_path);
    require(o.axis == "X" || o.axis == "Y", "--axis must be X or Y");
    ProbeReport report = probe_shift_invariance(gen->as_fn(), img, o.max_shift, o.axis[0],
                                                shift_policy_from_string(o.policy));
    {
        std::ofstream csv(fs::path(o.out) / "probe.csv", std::ios::binary);
        csv << report.to_csv();
    }
    for (size_t i = 0; i < report.rows.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "d%d_output_of_shifted.png", report.rows[i].d);
        save_png((fs::path(o.out) / name).string(), report.outputs_of_shifted[i]);
        std::snprintf(name, sizeof(name), "d%d_shifted_output.png", report.rows[i].d);
        save_png((fs::path(o.out) / name).string(), report.shifted_outputs[i]);
    }
    std::cout << report.to_csv();
    write_manifest(o.out, "probe-shift",
                   json{{"checkpoint", o.checkpoint},
                        {"image", o.image_path},
                        {"max_shift", o.max_shift},
                        {"axis", o.axis},
                        {"policy", o.policy},
                        {"direction", o.direction}});
    return 0;
}

struct EvalOpts {
    std::vector<std::string> checkpoints;
    std::string data, out;
    std::string direction = "r2s";
    bool force = false;
};

int cmd_eval_temporal(const EvalOpts& o) {
    claim_out_dir(o.out, o.force);
    std::vector<SequenceData> eval_set = load_sequence_roots(o.data);
    std::vector<std::unique_ptr<Generator>> gens;
    std::vector<std::pair<std::string, ImageFn>> variants;
    for (const std::string& path : o.checkpoints) {
        gens.push_back(generator_from_checkpoint(path, o.direction));
        variants.emplace_back(fs::path(path).filename().string(), gens.back()->as_fn());
    }
    CompareResult result = compare_variants(variants, eval_set);
    {
        std::ofstream csv(fs::path(o.out) / "ranking.csv", std::ios::binary);
        csv << result.to_csv();
    }
    std::vector<TemporalReport> all_reports;
    for (const VariantScore& score : result.ranking)
        all_reports.insert(all_reports.end(), score.reports.begin(), score.reports.end());
    double scale = error_map_p99(all_reports);
    json report = json::array();
    for (const VariantScore& score : result.ranking) {
        json entry{{"name", score.name},
                   {"mean_e_temporal", score.mean_e_temporal},
                   {"per_sequence", json::array()}};
        for (size_t s = 0; s < score.reports.size(); ++s) {
            const TemporalReport& rep = score.reports[s];
            entry["per_sequence"].push_back(json{{"e_temporal", rep.e_temporal},
                                                 {"frames", rep.frame_count},
                                                 {"elements", rep.element_count},
                                                 {"per_transition", rep.per_transition}});
            for (size_t t = 0; t < rep.error_maps.size(); ++t) {
                char name[96];
                std::snprintf(name, sizeof(name), "%s_seq%zu_err%zu.png", score.name.c_str(),
                              s, t);
                save_png((fs::path(o.out) / name).string(),
                         render_error_map(rep.error_maps[t], scale));
            }
        }
        report.push_back(std::move(entry));
    }
    {
        std::ofstream jf(fs::path(o.out) / "report.json", std::ios::binary);
        jf << json{{"error_map_scale", scale}, {"variants", report}}.dump(2) << "\n";
    }
    std::cout << result.to_csv();
    write_manifest(o.out, "eval-temporal",
                   json{{"checkpoints", o.checkpoints},
                        {"data", o.data},
                        {"direction", o.direction}});
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"unpaired image translation with a shift-consistency loss"};
    app.require_subcommand(1);

    GenDataOpts gen_opts;
    CLI::App* gen_cmd = app.add_subcommand(
        "gen-data", "render synthetic corpora (moving patterns or two-palette shapes)");
    gen_cmd->add_option("--pattern", gen_opts.pattern,
                        "checker|stripes|noise|shapes|shapes2 (shapes2 = unpaired corpus)");
    gen_cmd->add_option("--frames", gen_opts.frames, "frames per sequence");
    gen_cmd->add_option("--velocity", gen_opts.velocity, "pattern velocity 'dx,dy' px/frame");
    gen_cmd->add_option("--size", gen_opts.size, "square image size");
    gen_cmd->add_option("--sequences", gen_opts.sequences, "number of sequences");
    gen_cmd->add_option("--count", gen_opts.count, "images per domain (shapes2)");
    gen_cmd->add_option("--seed", gen_opts.seed, "random seed");
    gen_cmd->add_flag("--strict-mask", gen_opts.strict_mask,
                      "zero the occlusion mask on warp-unreachable seams");
    gen_cmd->add_option("--out", gen_opts.out, "output directory")->required();
    gen_cmd->add_flag("--force", gen_opts.force, "overwrite a previous run");

    TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "train an adaptation or style model");
    train_cmd->add_option("mode", train_opts.mode, "adapt | style")
        ->required()
        ->check(CLI::IsMember({"adapt", "style"}));
    train_cmd->add_option("--config", train_opts.config_path, "key = value config file");
    train_cmd->add_option("--set", train_opts.overrides,
                          "config override key=value (repeatable; flags win)");
    train_cmd->add_option("--segmenter", train_opts.segmenter_ckpt,
                          "pretrained segmenter checkpoint");
    train_cmd->add_option("--perceptual", train_opts.perceptual_ckpt,
                          "perceptual-extractor checkpoint (style mode)");
    train_cmd->add_option("--out", train_opts.out, "output directory");
    train_cmd->add_flag("--dry-run", train_opts.dry_run,
                        "print the resolved config and write nothing");
    train_cmd->add_flag("--force", train_opts.force, "overwrite a previous run");
    CLI::Option* seed_opt = train_cmd->add_option("--seed", train_opts.seed, "random seed");

    TranslateOpts tr_opts;
    CLI::App* tr_cmd = app.add_subcommand("translate", "run a trained generator over a directory");
    tr_cmd->add_option("--checkpoint", tr_opts.checkpoint, "model checkpoint")->required();
    tr_cmd->add_option("--in", tr_opts.in_dir, "input image directory")->required();
    tr_cmd->add_option("--out", tr_opts.out, "output directory")->required();
    tr_cmd->add_option("--direction", tr_opts.direction, "r2s | s2r (adapt checkpoints)")
        ->check(CLI::IsMember({"r2s", "s2r"}));
    tr_cmd->add_flag("--force", tr_opts.force, "overwrite a previous run");

    ProbeOpts probe_opts;
    CLI::App* probe_cmd =
        app.add_subcommand("probe-shift", "shift-invariance discrepancy table and panels");
    probe_cmd->add_option("--checkpoint", probe_opts.checkpoint, "model checkpoint")
        ->required();
    probe_cmd->add_option("--image", probe_opts.image_path, "probe image")->required();
    probe_cmd->add_option("--max-shift", probe_opts.max_shift, "probe shifts 1..max");
    probe_cmd->add_option("--axis", probe_opts.axis, "X | Y")
        ->check(CLI::IsMember({"X", "Y"}));
    probe_cmd->add_option("--policy", probe_opts.policy, "circular | overlap-crop");
    probe_cmd->add_option("--direction", probe_opts.direction, "r2s | s2r");
    probe_cmd->add_option("--out", probe_opts.out, "output directory")->required();
    probe_cmd->add_flag("--force", probe_opts.force, "overwrite a previous run");

    EvalOpts eval_opts;
    CLI::App* eval_cmd =
        app.add_subcommand("eval-temporal", "rank checkpoints by temporal error on GT flow");
    eval_cmd->add_option("--checkpoint", eval_opts.checkpoints, "checkpoints to rank")
        ->required();
    eval_cmd->add_option("--data", eval_opts.data, "evaluation sequences")->required();
    eval_cmd->add_option("--direction", eval_opts.direction, "r2s | s2r");
    eval_cmd->add_option("--out", eval_opts.out, "output directory")->required();
    eval_cmd->add_flag("--force", eval_opts.force, "overwrite a previous run");

    try {
        app.parse(argc, argv);
        if (gen_cmd->parsed()) return cmd_gen_data(gen_opts);
        if (train_cmd->parsed()) {
            train_opts.has_seed = seed_opt->count() > 0;
            if (!train_opts.dry_run)
                require(!train_opts.out.empty(), "train: --out is required");
            return cmd_train(train_opts);
        }
        if (tr_cmd->parsed()) return cmd_translate(tr_opts);
        if (probe_cmd->parsed()) return cmd_probe_shift(probe_opts);
        if (eval_cmd->parsed()) return cmd_eval_temporal(eval_opts);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "error: contract: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 5;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace shiftgan
