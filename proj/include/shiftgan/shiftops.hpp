#pragma once

#include <functional>
#include <string>
#include <vector>

#include "shiftgan/image.hpp"
#include "shiftgan/rng.hpp"

namespace shiftgan {

/// Integer pixel shift; training draws each component uniformly from
/// {1, ..., K-1}.
struct ShiftOffset {
    int i = 0;   // along X (horizontal)
    int j = 0;   // along Y (vertical)
};

/// How the shift operator treats image borders.
///   Circular:    wrap around; exact group structure, used for equivariance
///                checks.
///   OverlapCrop: never fabricates content; comparisons are restricted to
///                the region two offset windows genuinely share.
enum class ShiftPolicy { Circular, OverlapCrop };

std::string to_string(ShiftPolicy p);
ShiftPolicy shift_policy_from_string(const std::string& s);

struct ShiftedImage {
    Image image;
    OcclusionMask valid;   // all-ones under Circular
};

/// Content moves +i along X and +j along Y. Circular: out(y,x) =
/// in((y-j) mod H, (x-i) mod W). OverlapCrop: same translation with the
/// out-of-support band zero-filled and marked invalid.
ShiftedImage shift(const Image& img, ShiftOffset offset, ShiftPolicy policy);

/// i,j ~ u{1,...,K-1}, independent per axis; one fresh draw per frame.
ShiftOffset sample_shift(int downsample_factor, Rng& rng);

using ImageFn = std::function<Image(const Image&)>;

/// Mean squared difference between shift(G(x)) and G(shift(x)) over the
/// valid comparison region: the full image under Circular; under
/// OverlapCrop, G runs on the two offset windows x[0:H-j, 0:W-i] and
/// x[j:H, i:W] and the outputs are compared where the windows overlap
/// (empty overlap is a contract violation).
double shift_loss(const ImageFn& G, const Image& x, ShiftOffset offset, ShiftPolicy policy);

struct ProbeRow {
    int d = 0;
    double discrepancy = 0.0;
};

struct ProbeReport {
    char axis = 'X';
    ShiftPolicy policy = ShiftPolicy::Circular;
    std::vector<ProbeRow> rows;             // d = 0 control first, then 1..maxShift
    std::vector<Image> outputs_of_shifted;  // G(shift(x, d)) per row
    std::vector<Image> shifted_outputs;     // shift(G(x), d) per row

    double mean_discrepancy(int d_from, int d_to) const;
    std::string to_csv() const;
};

/// The shifted-input consistency experiment: feed x shifted by d = 0..max
/// along one axis, report the discrepancy per d and keep the outputs for
/// visual comparison.
ProbeReport probe_shift_invariance(const ImageFn& G, const Image& x, int max_shift, char axis,
                                   ShiftPolicy policy);

// plain-image helpers shared with the metric/loss code
Image crop_image(const Image& img, int y0, int x0, int h, int w);
double mse_between(const Image& a, const Image& b);

} // namespace shiftgan
