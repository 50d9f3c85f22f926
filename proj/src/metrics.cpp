#include "shiftgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "shiftgan/errors.hpp"

namespace shiftgan {

TemporalReport temporal_error(const ImageSequence& outputs, const std::vector<FlowField>& flows,
                              const std::vector<OcclusionMask>& masks) {
    const int t_count = outputs.length();
    require(t_count >= 2, "temporal_error needs at least 2 frames");
    require(flows.size() == static_cast<size_t>(t_count - 1) && masks.size() == flows.size(),
            "temporal_error: need T-1 flows and masks");
    const Image& first = outputs.frames.front();
    TemporalReport report;
    report.frame_count = t_count;
    report.element_count =
        static_cast<long>(first.width) * first.height * first.channels;

    double total_sse = 0.0;
    for (int t = 0; t + 1 < t_count; ++t) {
        const Image& cur = outputs.frames[t];
        const Image& nxt = outputs.frames[t + 1];
        require(flows[t].height == cur.height && flows[t].width == cur.width,
                "temporal_error: flow shape mismatch");
        require(masks[t].height == cur.height && masks[t].width == cur.width,
                "temporal_error: mask shape mismatch");
        Image warped = warp(nxt, flows[t]);
        Image map(cur.height, cur.width, 1);
        double sse = 0.0;
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                double px = 0.0;
                for (int c = 0; c < cur.channels; ++c) {
                    double d = static_cast<double>(cur.at(y, x, c)) - warped.at(y, x, c);
                    px += d * d;
                }
                px *= masks[t].at(y, x);
                map.at(y, x, 0) = static_cast<float>(px);
                sse += px;
            }
        report.per_transition.push_back(
            std::sqrt(sse / static_cast<double>(report.element_count)));
        report.error_maps.push_back(std::move(map));
        total_sse += sse;
    }
    report.e_temporal = std::sqrt(
        total_sse / (static_cast<double>(t_count - 1) * report.element_count));
    return report;
}

Image render_error_map(const Image& raw, double scale) {
    require(raw.channels == 1, "error maps are single-channel");
    Image out(raw.height, raw.width, 1);
    for (long i = 0; i < raw.numel(); ++i) {
        double v = scale > 0.0 ? raw.data[i] / scale : 0.0;
        v = std::min(std::max(v, 0.0), 1.0);
        out.data[i] = static_cast<float>(v * 2.0 - 1.0);   // save_png maps back to 0..255
    }
    return out;
}

double error_map_p99(const std::vector<TemporalReport>& reports) {
    std::vector<float> values;
    for (const TemporalReport& r : reports)
        for (const Image& m : r.error_maps)
            values.insert(values.end(), m.data.begin(), m.data.end());
    if (values.empty()) return 0.0;
    size_t k = static_cast<size_t>(0.99 * static_cast<double>(values.size() - 1));
    std::nth_element(values.begin(), values.begin() + k, values.end());
    return values[k];
}

std::string CompareResult::to_csv() const {
    std::string out = "rank,name,mean_e_temporal\n";
    char buf[256];
    for (size_t i = 0; i < ranking.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.9g\n", i + 1, ranking[i].name.c_str(),
                      ranking[i].mean_e_temporal);
        out += buf;
    }
    return out;
}

CompareResult compare_variants(const std::vector<std::pair<std::string, ImageFn>>& variants,
                               const std::vector<SequenceData>& eval_set) {
    require(!variants.empty(), "compare_variants: no checkpoints");
    require(!eval_set.empty(), "compare_variants: empty evaluation set");
    for (const SequenceData& seq : eval_set)
        require(!seq.flows.empty(), "compare_variants: sequence lacks ground-truth flow");

    CompareResult result;
    for (const auto& [name, fn] : variants) {
        VariantScore score;
        score.name = name;
        double sum = 0.0;
        for (const SequenceData& seq : eval_set) {
            ImageSequence translated;
            for (const Image& frame : seq.frames.frames) translated.push(fn(frame));
            TemporalReport rep = temporal_error(translated, seq.flows, seq.masks);
            sum += rep.e_temporal;
            score.reports.push_back(std::move(rep));
        }
        score.mean_e_temporal = sum / static_cast<double>(eval_set.size());
        result.ranking.push_back(std::move(score));
    }
    std::stable_sort(result.ranking.begin(), result.ranking.end(),
                     [](const VariantScore& a, const VariantScore& b) {
                         return a.mean_e_temporal < b.mean_e_temporal;
                     });
    return result;
}

} // namespace shiftgan
