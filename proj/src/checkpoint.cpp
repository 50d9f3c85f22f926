#include "shiftgan/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "shiftgan/errors.hpp"

namespace shiftgan {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

json generator_spec_to_json(const GeneratorSpec& s) {
    return json{{"in_channels", s.in_channels},
                {"out_channels", s.out_channels},
                {"stem_width", s.stem_width},
                {"down_widths", s.down_widths},
                {"down_strides", s.strides()},
                {"up_factors", s.factors()},
                {"res_blocks", s.res_blocks},
                {"padding", to_string(s.padding)}};
}

GeneratorSpec generator_spec_from_json(const json& j) {
    GeneratorSpec s;
    s.in_channels = j.at("in_channels").get<int>();
    s.out_channels = j.at("out_channels").get<int>();
    s.stem_width = j.at("stem_width").get<int>();
    s.down_widths = j.at("down_widths").get<std::vector<int>>();
    s.down_strides = j.at("down_strides").get<std::vector<int>>();
    s.up_factors = j.at("up_factors").get<std::vector<int>>();
    s.res_blocks = j.at("res_blocks").get<int>();
    s.padding = pad_mode_from_string(j.at("padding").get<std::string>());
    return s;
}

json discriminator_spec_to_json(const DiscriminatorSpec& s) {
    return json{{"in_channels", s.in_channels},
                {"widths", s.widths},
                {"last_width", s.last_width},
                {"padding", to_string(s.padding)}};
}

DiscriminatorSpec discriminator_spec_from_json(const json& j) {
    DiscriminatorSpec s;
    s.in_channels = j.at("in_channels").get<int>();
    s.widths = j.at("widths").get<std::vector<int>>();
    s.last_width = j.at("last_width").get<int>();
    s.padding = pad_mode_from_string(j.at("padding").get<std::string>());
    return s;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json manifest = json::array();
    for (const auto& [name, t] : ck.tensors)
        manifest.push_back(json{{"name", name}, {"shape", t.shape}});
    json meta{{"version", ck.version},    {"kind", ck.kind},
              {"seed", ck.seed},          {"iteration", ck.iteration},
              {"shift_policy", ck.shift_policy}, {"weights", ck.weights},
              {"specs", ck.specs},        {"tensors", manifest}};
    std::string meta_str = meta.dump();

    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write checkpoint: " + path);
    uint32_t version = static_cast<uint32_t>(ck.version);
    uint64_t meta_len = meta_str.size();
    bool ok = std::fwrite(kMagic, 1, 4, f.get()) == 4 &&
              std::fwrite(&version, 4, 1, f.get()) == 1 &&
              std::fwrite(&meta_len, 8, 1, f.get()) == 1 &&
              std::fwrite(meta_str.data(), 1, meta_len, f.get()) == meta_len;
    for (const auto& [name, t] : ck.tensors)
        ok = ok && std::fwrite(t.v.data(), 4, t.v.size(), f.get()) == t.v.size();
    if (!ok) throw IoError("short write: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    uint32_t version = 0;
    uint64_t meta_len = 0;
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a checkpoint file");
    if (std::fread(&version, 4, 1, f.get()) != 1 || version != 1)
        throw FormatError(path + ": unsupported checkpoint version");
    if (std::fread(&meta_len, 8, 1, f.get()) != 1)
        throw FormatError(path + ": truncated checkpoint");
    std::string meta_str(meta_len, '\0');
    if (std::fread(meta_str.data(), 1, meta_len, f.get()) != meta_len)
        throw FormatError(path + ": truncated checkpoint");
    json meta = json::parse(meta_str, nullptr, false);
    if (meta.is_discarded()) throw FormatError(path + ": corrupt checkpoint metadata");

    Checkpoint ck;
    ck.version = static_cast<int>(version);
    ck.kind = meta.at("kind").get<std::string>();
    ck.seed = meta.at("seed").get<uint64_t>();
    ck.iteration = meta.at("iteration").get<long>();
    ck.shift_policy = meta.at("shift_policy").get<std::string>();
    ck.weights = meta.at("weights");
    ck.specs = meta.at("specs");
    for (const json& entry : meta.at("tensors")) {
        Tensor t(entry.at("shape").get<std::vector<int>>());
        if (std::fread(t.v.data(), 4, t.v.size(), f.get()) != t.v.size())
            throw FormatError(path + ": truncated tensor payload");
        ck.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
    return ck;
}

void store_params(Checkpoint& ck, const std::string& prefix, ParamRefs params) {
    for (Param* p : params) ck.tensors[prefix + "/" + p->name] = p->value;
}

void restore_params(const Checkpoint& ck, const std::string& prefix, ParamRefs params) {
    for (Param* p : params) {
        auto it = ck.tensors.find(prefix + "/" + p->name);
        if (it == ck.tensors.end())
            throw FormatError("checkpoint missing tensor " + prefix + "/" + p->name);
        require(it->second.shape == p->value.shape, "checkpoint tensor shape mismatch");
        p->value = it->second;
    }
}

std::string param_digest(ParamRefs params) {
    // FNV-1a over raw bytes; enough to detect any parameter change
    uint64_t h = 1469598103934665603ULL;
    for (Param* p : params) {
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p->value.v.data());
        for (size_t i = 0; i < p->value.v.size() * 4; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace shiftgan
