#include "shiftgan/flow.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include "shiftgan/errors.hpp"

namespace shiftgan {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr int kFloMaxDim = 1 << 20;

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

FlowField read_flo(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    float magic = 0.0f;
    int32_t w = 0, h = 0;
    if (std::fread(&magic, 4, 1, f.get()) != 1) throw FormatError(path + ": truncated header");
    if (magic != kFloMagic) throw FormatError(path + ": bad .flo magic");
    if (std::fread(&w, 4, 1, f.get()) != 1 || std::fread(&h, 4, 1, f.get()) != 1)
        throw FormatError(path + ": truncated header");
    if (w < 1 || h < 1 || w > kFloMaxDim || h > kFloMaxDim)
        throw FormatError(path + ": implausible dimensions");
    FlowField flow(h, w);
    size_t n = flow.vectors.size();
    if (std::fread(flow.vectors.data(), 4, n, f.get()) != n)
        throw FormatError(path + ": truncated payload");
    return flow;
}

void write_flo(const std::string& path, const FlowField& flow) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot open " + path + " for writing");
    float magic = kFloMagic;
    int32_t w = flow.width, h = flow.height;
    bool ok = std::fwrite(&magic, 4, 1, f.get()) == 1 && std::fwrite(&w, 4, 1, f.get()) == 1 &&
              std::fwrite(&h, 4, 1, f.get()) == 1 &&
              std::fwrite(flow.vectors.data(), 4, flow.vectors.size(), f.get()) ==
                  flow.vectors.size();
    if (!ok) throw IoError("short write: " + path);
}

Image warp(const Image& img, const FlowField& flow) {
    require(img.height == flow.height && img.width == flow.width,
            "warp: image/flow shape mismatch");
    const int h = img.height, w = img.width, c = img.channels;
    Image out(h, w, c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float sx = static_cast<float>(x) + flow.dx(y, x);
            float sy = static_cast<float>(y) + flow.dy(y, x);
            sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
            sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
            int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
            int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            float fx = sx - static_cast<float>(x0), fy = sy - static_cast<float>(y0);
            for (int ci = 0; ci < c; ++ci) {
                float v00 = img.at(y0, x0, ci), v01 = img.at(y0, x1, ci);
                float v10 = img.at(y1, x0, ci), v11 = img.at(y1, x1, ci);
                out.at(y, x, ci) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                   fy * ((1 - fx) * v10 + fx * v11);
            }
        }
    return out;
}

Tensor flow_to_chw(const FlowField& flow) {
    Tensor t({2, flow.height, flow.width});
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            t.at(0, y, x) = flow.dx(y, x);
            t.at(1, y, x) = flow.dy(y, x);
        }
    return t;
}

Tensor mask_to_chw(const OcclusionMask& mask, int channels) {
    Tensor t({channels, mask.height, mask.width});
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x) t.at(c, y, x) = mask.at(y, x);
    return t;
}

} // namespace shiftgan
