#include "shiftgan/shiftops.hpp"

#include <cmath>
#include <cstdio>

#include "shiftgan/errors.hpp"

namespace shiftgan {

std::string to_string(ShiftPolicy p) {
    return p == ShiftPolicy::Circular ? "circular" : "overlap-crop";
}

ShiftPolicy shift_policy_from_string(const std::string& s) {
    if (s == "circular") return ShiftPolicy::Circular;
    if (s == "overlap-crop" || s == "overlap") return ShiftPolicy::OverlapCrop;
    throw ConfigError("unknown shift policy: " + s);
}

ShiftedImage shift(const Image& img, ShiftOffset offset, ShiftPolicy policy) {
    const int h = img.height, w = img.width, c = img.channels;
    require(std::abs(offset.i) < w && std::abs(offset.j) < h,
            "shift offset magnitude must be smaller than the image extent");
    ShiftedImage out{Image(h, w, c), OcclusionMask(h, w, 1.0f)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sy = y - offset.j, sx = x - offset.i;
            if (policy == ShiftPolicy::Circular) {
                sy = (sy % h + h) % h;
                sx = (sx % w + w) % w;
            } else if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                out.valid.at(y, x) = 0.0f;
                continue;
            }
            for (int ci = 0; ci < c; ++ci) out.image.at(y, x, ci) = img.at(sy, sx, ci);
        }
    return out;
}

ShiftOffset sample_shift(int downsample_factor, Rng& rng) {
    require(downsample_factor >= 2, "sample_shift needs K >= 2");
    ShiftOffset off;
    off.i = rng.uniform_int(1, downsample_factor - 1);
    off.j = rng.uniform_int(1, downsample_factor - 1);
    return off;
}

Image crop_image(const Image& img, int y0, int x0, int h, int w) {
    require(y0 >= 0 && x0 >= 0 && y0 + h <= img.height && x0 + w <= img.width,
            "crop window out of bounds");
    Image out(h, w, img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

double mse_between(const Image& a, const Image& b) {
    require(a.same_shape(b), "mse: shape mismatch");
    double s = 0.0;
    for (long i = 0; i < a.numel(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.numel());
}

double shift_loss(const ImageFn& G, const Image& x, ShiftOffset offset, ShiftPolicy policy) {
    const int h = x.height, w = x.width;
    if (offset.i == 0 && offset.j == 0) {
        Image gx = G(x);
        return mse_between(gx, gx);   // identically zero; keeps d=0 control uniform
    }
    if (policy == ShiftPolicy::Circular) {
        Image gx = G(x);
        Image shifted_gx = shift(gx, offset, ShiftPolicy::Circular).image;
        Image g_shifted = G(shift(x, offset, ShiftPolicy::Circular).image);
        return mse_between(shifted_gx, g_shifted);
    }
    // OverlapCrop: two honestly-cropped windows of the same scene, offset by
    // (i,j); their outputs are compared where both windows saw real content.
    require(offset.i >= 0 && offset.j >= 0, "overlap-crop shifts must be non-negative");
    const int i = offset.i, j = offset.j;
    require(h - 2 * j >= 1 && w - 2 * i >= 1,
            "overlap-crop comparison region is empty for this offset");
    Image origin = crop_image(x, 0, 0, h - j, w - i);
    Image moved = crop_image(x, j, i, h - j, w - i);
    Image g_origin = G(origin);
    Image g_moved = G(moved);
    require(g_origin.same_shape(origin) && g_moved.same_shape(moved),
            "shift_loss expects a size-preserving G");
    double s = 0.0;
    long count = 0;
    for (int y = j; y < h - j; ++y)
        for (int xx = i; xx < w - i; ++xx)
            for (int c = 0; c < g_origin.channels; ++c) {
                double d = static_cast<double>(g_origin.at(y, xx, c)) -
                           g_moved.at(y - j, xx - i, c);
                s += d * d;
                ++count;
            }
    return s / static_cast<double>(count);
}

double ProbeReport::mean_discrepancy(int d_from, int d_to) const {
    double s = 0.0;
    int n = 0;
    for (const ProbeRow& r : rows)
        if (r.d >= d_from && r.d <= d_to) {
            s += r.discrepancy;
            ++n;
        }
    require(n > 0, "no probe rows in range");
    return s / n;
}

std::string ProbeReport::to_csv() const {
    std::string out = "shift,axis,policy,mse\n";
    char buf[128];
    for (const ProbeRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%c,%s,%.9g\n", r.d, axis,
                      to_string(policy).c_str(), r.discrepancy);
        out += buf;
    }
    return out;
}

ProbeReport probe_shift_invariance(const ImageFn& G, const Image& x, int max_shift, char axis,
                                   ShiftPolicy policy) {
    require(axis == 'X' || axis == 'Y', "axis must be 'X' or 'Y'");
    require(max_shift >= 1, "max_shift must be >= 1");
    require(max_shift < (axis == 'X' ? x.width : x.height),
            "max_shift must be smaller than the image extent");
    ProbeReport report;
    report.axis = axis;
    report.policy = policy;
    Image gx = G(x);
    for (int d = 0; d <= max_shift; ++d) {
        ShiftOffset off{axis == 'X' ? d : 0, axis == 'Y' ? d : 0};
        ProbeRow row;
        row.d = d;
        row.discrepancy = shift_loss(G, x, off, policy);
        report.rows.push_back(row);
        report.outputs_of_shifted.push_back(G(shift(x, off, policy).image));
        report.shifted_outputs.push_back(shift(gx, off, policy).image);
    }
    return report;
}

} // namespace shiftgan
