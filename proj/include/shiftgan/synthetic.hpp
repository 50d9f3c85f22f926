#pragma once

#include <string>
#include <vector>

#include "shiftgan/flow.hpp"
#include "shiftgan/image.hpp"
#include "shiftgan/rng.hpp"

namespace shiftgan {

struct SyntheticSequence {
    ImageSequence frames;
    std::vector<FlowField> flows;       // length T-1, maps frame t+1 back to t
    std::vector<OcclusionMask> masks;   // length T-1
};

/// Base textures for moving-pattern sequences: "checker", "stripes",
/// "noise", "shapes".
Image make_pattern(const std::string& pattern, int h, int w, Rng& rng);

/// Frames are the pattern translating by (vx, vy) pixels/frame on a circular
/// canvas: frame_{t+1}(y,x) = frame_t(y+vy, x+vx). Ground-truth flow is the
/// constant field (-vx, -vy); masks are all-ones, or zero on the border band
/// that warp cannot reach when strict_seam_mask is set.
SyntheticSequence render_synthetic_sequence(const std::string& pattern, int frames, int vx,
                                            int vy, int h, int w, uint64_t seed,
                                            bool strict_seam_mask = false);

/// Colorized toy shapes (background 0, circle 1, rectangle 2) drawn with one
/// of two palettes; the unpaired-translation toy task maps palette A <-> B.
struct ShapeSample {
    Image image;
    SemanticMap labels;
};
ShapeSample render_shapes(int h, int w, char palette, Rng& rng);
constexpr int kShapeClasses = 3;

// corpus writers (directory layouts documented in dataset.hpp)
void write_shapes_corpus(const std::string& root, int count, int h, int w, uint64_t seed);
void write_sequence_corpus(const std::string& root, const std::string& pattern, int frames,
                           int vx, int vy, int h, int w, uint64_t seed, bool strict_seam_mask);

} // namespace shiftgan
