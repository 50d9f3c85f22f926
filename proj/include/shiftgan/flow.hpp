#pragma once

#include <string>
#include <vector>

#include "shiftgan/image.hpp"

namespace shiftgan {

/// Per-pixel (dx, dy) displacements in pixels, mapping frame t+1 coordinates
/// back toward frame t content: warp(frame_{t+1}, flow) aligns with frame_t.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> vectors;   // (y, x, {dx,dy}) row-major

    FlowField() = default;
    FlowField(int h, int w) : height(h), width(w) {
        vectors.assign(static_cast<size_t>(h) * w * 2, 0.0f);
    }
    float& dx(int y, int x) { return vectors[(static_cast<size_t>(y) * width + x) * 2]; }
    float dx(int y, int x) const { return vectors[(static_cast<size_t>(y) * width + x) * 2]; }
    float& dy(int y, int x) { return vectors[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
    float dy(int y, int x) const {
        return vectors[(static_cast<size_t>(y) * width + x) * 2 + 1];
    }
};

/// Middlebury .flo: float magic 202021.25 ("PIEH"), int32 width, int32
/// height, then width*height interleaved (dx,dy) float32 pairs, row-major,
/// little-endian. write_flo(read_flo(p)) is byte-identical.
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

/// out(y,x) = bilinear sample of image at (y + dy(y,x), x + dx(y,x)),
/// sample coordinates clamped to the image border.
Image warp(const Image& img, const FlowField& flow);

/// CHW (2,H,W) tensor view of a flow field (dx then dy), for the network ops.
Tensor flow_to_chw(const FlowField& flow);
Tensor mask_to_chw(const OcclusionMask& mask, int channels);

} // namespace shiftgan
