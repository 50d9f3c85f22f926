#pragma once

#include <string>
#include <vector>

#include "shiftgan/dataset.hpp"
#include "shiftgan/flow.hpp"
#include "shiftgan/image.hpp"
#include "shiftgan/shiftops.hpp"

namespace shiftgan {

/// Root-mean-square of occlusion-masked squared differences between each
/// frame and the next frame warped back by ground-truth flow:
///   E = sqrt( 1/((T-1)*M) * sum_t sum_m c_m (out_t - warp(out_{t+1}))^2 )
/// where M counts all elements (width * height * channels).
struct TemporalReport {
    double e_temporal = 0.0;
    std::vector<double> per_transition;   // sqrt(1/M * masked SSE), length T-1
    std::vector<Image> error_maps;        // 1-channel, raw c_m * sum_c diff^2
    int frame_count = 0;
    long element_count = 0;               // M
};

TemporalReport temporal_error(const ImageSequence& outputs, const std::vector<FlowField>& flows,
                              const std::vector<OcclusionMask>& masks);

/// Linear grayscale rendering of a raw error map: [0, scale] -> black..white.
Image render_error_map(const Image& raw, double scale);
/// 99th percentile across all raw map values (the rendering scale).
double error_map_p99(const std::vector<TemporalReport>& reports);

struct VariantScore {
    std::string name;
    double mean_e_temporal = 0.0;
    std::vector<TemporalReport> reports;   // one per evaluated sequence
};

struct CompareResult {
    std::vector<VariantScore> ranking;   // sorted ascending (best first)
    std::string to_csv() const;
};

/// Run each named translator over every evaluation sequence, score with
/// temporal_error against the ground-truth flow, and rank.
CompareResult compare_variants(const std::vector<std::pair<std::string, ImageFn>>& variants,
                               const std::vector<SequenceData>& eval_set);

} // namespace shiftgan
