#include "shiftgan/config.hpp"

#include <fstream>
#include <sstream>

#include "shiftgan/errors.hpp"

namespace shiftgan {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
    try {
        return std::stol(v);
    } catch (...) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

float to_float(const std::string& key, const std::string& v) {
    try {
        return std::stof(v);
    } catch (...) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(to_long(key, trim(item))));
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
    return out;
}

} // namespace

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") cfg.mode = value;
    else if (key == "data") cfg.data = value;
    else if (key == "style_image") cfg.style_image = value;
    else if (key == "style_variant") cfg.style_variant = value;
    else if (key == "crop") cfg.crop = static_cast<int>(to_long(key, value));
    else if (key == "iterations" || key == "steps")
        cfg.iterations = to_long(key, value);
    else if (key == "lr") cfg.lr = to_float(key, value);
    else if (key == "lr_decay_after") cfg.lr_decay_after = to_long(key, value);
    else if (key == "lr_decay_until") cfg.lr_decay_until = to_long(key, value);
    else if (key == "batch") cfg.batch = static_cast<int>(to_long(key, value));
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(to_long(key, value));
    else if (key == "policy") cfg.policy = shift_policy_from_string(value);
    else if (key == "gan_form") cfg.gan_form = gan_form_from_string(value);
    else if (key == "fake_buffer") cfg.fake_buffer = static_cast<int>(to_long(key, value));
    else if (key == "log_every") cfg.log_every = to_long(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = to_long(key, value);
    else if (key == "lambda_cyc") cfg.weights.lambda_cyc = to_float(key, value);
    else if (key == "lambda_sem") cfg.weights.lambda_sem = to_float(key, value);
    else if (key == "lambda_shift") cfg.weights.lambda_shift = to_float(key, value);
    else if (key == "w_content") cfg.weights.w_content = to_float(key, value);
    else if (key == "w_style") cfg.weights.w_style = to_float(key, value);
    else if (key == "w_spatial") cfg.weights.w_spatial = to_float(key, value);
    else if (key == "w_flow") cfg.weights.w_flow = to_float(key, value);
    else if (key == "w_shift") cfg.weights.w_shift = to_float(key, value);
    else if (key == "gen_stem") cfg.gen.stem_width = static_cast<int>(to_long(key, value));
    else if (key == "gen_down") cfg.gen.down_widths = to_int_list(key, value);
    else if (key == "gen_res_blocks")
        cfg.gen.res_blocks = static_cast<int>(to_long(key, value));
    else if (key == "gen_padding") cfg.gen.padding = pad_mode_from_string(value);
    else if (key == "disc_widths") cfg.disc.widths = to_int_list(key, value);
    else if (key == "disc_last") cfg.disc.last_width = static_cast<int>(to_long(key, value));
    else if (key == "seg_classes") cfg.seg_classes = static_cast<int>(to_long(key, value));
    else if (key == "seg_width") cfg.seg_width = static_cast<int>(to_long(key, value));
    else if (key == "seg_pretrain_steps") cfg.seg_pretrain_steps = to_long(key, value);
    else if (key == "seg_pretrain_lr") cfg.seg_pretrain_lr = to_float(key, value);
    else throw ConfigError("unknown config key: " + key);
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    TrainConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{
        {"mode", cfg.mode},
        {"data", cfg.data},
        {"style_image", cfg.style_image},
        {"style_variant", cfg.style_variant},
        {"crop", cfg.crop},
        {"iterations", cfg.iterations},
        {"lr", cfg.lr},
        {"lr_decay_after", cfg.lr_decay_after},
        {"lr_decay_until", cfg.lr_decay_until},
        {"batch", cfg.batch},
        {"seed", cfg.seed},
        {"policy", to_string(cfg.policy)},
        {"gan_form", to_string(cfg.gan_form)},
        {"fake_buffer", cfg.fake_buffer},
        {"log_every", cfg.log_every},
        {"checkpoint_every", cfg.checkpoint_every},
        {"weights",
         {{"lambda_cyc", cfg.weights.lambda_cyc},
          {"lambda_sem", cfg.weights.lambda_sem},
          {"lambda_shift", cfg.weights.lambda_shift},
          {"w_content", cfg.weights.w_content},
          {"w_style", cfg.weights.w_style},
          {"w_spatial", cfg.weights.w_spatial},
          {"w_flow", cfg.weights.w_flow},
          {"w_shift", cfg.weights.w_shift}}},
        {"gen",
         {{"stem", cfg.gen.stem_width},
          {"down", cfg.gen.down_widths},
          {"res_blocks", cfg.gen.res_blocks},
          {"padding", to_string(cfg.gen.padding)}}},
        {"disc", {{"widths", cfg.disc.widths}, {"last", cfg.disc.last_width}}},
        {"seg",
         {{"classes", cfg.seg_classes},
          {"width", cfg.seg_width},
          {"pretrain_steps", cfg.seg_pretrain_steps},
          {"pretrain_lr", cfg.seg_pretrain_lr}}}};
}

} // namespace shiftgan
