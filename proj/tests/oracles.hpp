// Independent scalar reference implementations. Everything here is written
// as plain nested loops against the documented formulas and deliberately
// shares no code with the library paths it checks.
#pragma once

#include <cmath>
#include <vector>

#include "shiftgan/flow.hpp"
#include "shiftgan/image.hpp"
#include "shiftgan/rng.hpp"

namespace oracle {

using shiftgan::FlowField;
using shiftgan::Image;
using shiftgan::OcclusionMask;
using shiftgan::Tensor;

inline float bilinear_at(const Image& img, double sy, double sx, int c) {
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
    sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int x0 = static_cast<int>(std::floor(sx));
    int y1 = std::min(y0 + 1, img.height - 1);
    int x1 = std::min(x0 + 1, img.width - 1);
    double fy = sy - y0, fx = sx - x0;
    double v = (1 - fy) * ((1 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c)) +
               fy * ((1 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c));
    return static_cast<float>(v);
}

inline Image warp_ref(const Image& img, const FlowField& flow) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = bilinear_at(img, y + flow.dy(y, x), x + flow.dx(y, x), c);
    return out;
}

/// E_temporal from first principles: RMS of masked squared differences
/// between frame t and frame t+1 warped back, over all T-1 transitions and
/// all W*H*C elements.
inline double temporal_error_ref(const std::vector<Image>& frames,
                                 const std::vector<FlowField>& flows,
                                 const std::vector<OcclusionMask>& masks) {
    const int t_count = static_cast<int>(frames.size());
    const Image& first = frames.front();
    const double m = static_cast<double>(first.width) * first.height * first.channels;
    double acc = 0.0;
    for (int t = 0; t + 1 < t_count; ++t) {
        Image warped = warp_ref(frames[t + 1], flows[t]);
        for (int y = 0; y < first.height; ++y)
            for (int x = 0; x < first.width; ++x)
                for (int c = 0; c < first.channels; ++c) {
                    double d =
                        static_cast<double>(frames[t].at(y, x, c)) - warped.at(y, x, c);
                    acc += masks[t].at(y, x) * d * d;
                }
    }
    return std::sqrt(acc / ((t_count - 1) * m));
}

/// direct 2D convolution, zero or circular padding, stride 1, odd kernel
inline Tensor conv2d_ref(const Tensor& x, const Tensor& w, const std::vector<float>& b,
                         bool circular) {
    const int ic = x.shape[0], h = x.shape[1], wd = x.shape[2];
    const int oc = w.shape[0], k = w.shape[2];
    const int pad = k / 2;
    Tensor out({oc, h, wd});
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < wd; ++xx) {
                double acc = b[o];
                for (int c = 0; c < ic; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            int sy = y + ky - pad, sx = xx + kx - pad;
                            if (circular) {
                                sy = (sy % h + h) % h;
                                sx = (sx % wd + wd) % wd;
                            } else if (sy < 0 || sy >= h || sx < 0 || sx >= wd) {
                                continue;
                            }
                            acc += static_cast<double>(x.at(c, sy, sx)) *
                                   w.v[((static_cast<size_t>(o) * ic + c) * k + ky) * k + kx];
                        }
                out.at(o, y, xx) = static_cast<float>(acc);
            }
    return out;
}

inline double mse_ref(const Image& a, const Image& b) {
    double s = 0.0;
    for (long i = 0; i < a.numel(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.numel());
}

/// Gram(a,b) = sum_hw Fa*Fb / (C*H*W)
inline Tensor gram_ref(const Tensor& f) {
    const int c = f.shape[0], h = f.shape[1], w = f.shape[2];
    Tensor out({c, c});
    for (int a = 0; a < c; ++a)
        for (int b = 0; b < c; ++b) {
            double acc = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    acc += static_cast<double>(f.at(a, y, x)) * f.at(b, y, x);
            out.v[static_cast<size_t>(a) * c + b] =
                static_cast<float>(acc / (static_cast<double>(c) * h * w));
        }
    return out;
}

/// mean per-pixel softmax cross-entropy against hard labels
inline double softmax_ce_ref(const Tensor& logits, const std::vector<int>& labels) {
    const int c = logits.shape[0], h = logits.shape[1], w = logits.shape[2];
    double loss = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double mx = -1e300;
            for (int ci = 0; ci < c; ++ci) mx = std::max(mx, (double)logits.at(ci, y, x));
            double z = 0.0;
            for (int ci = 0; ci < c; ++ci) z += std::exp(logits.at(ci, y, x) - mx);
            int lab = labels[static_cast<size_t>(y) * w + x];
            loss += mx + std::log(z) - logits.at(lab, y, x);
        }
    return loss / (static_cast<double>(h) * w);
}

/// mean of squared forward differences over both axes and all channels
inline double tv_ref(const Tensor& x) {
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    double s = 0.0;
    long n = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                if (xx + 1 < w) {
                    double d = static_cast<double>(x.at(ci, y, xx + 1)) - x.at(ci, y, xx);
                    s += d * d;
                    ++n;
                }
                if (y + 1 < h) {
                    double d = static_cast<double>(x.at(ci, y + 1, xx)) - x.at(ci, y, xx);
                    s += d * d;
                    ++n;
                }
            }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
}

/// masked squared temporal difference with the all-element normalizer
inline double flow_temporal_ref(const Image& prev, const Image& next, const FlowField& flow,
                                const OcclusionMask& mask) {
    Image warped = warp_ref(next, flow);
    double s = 0.0;
    for (int y = 0; y < prev.height; ++y)
        for (int x = 0; x < prev.width; ++x)
            for (int c = 0; c < prev.channels; ++c) {
                double d = static_cast<double>(prev.at(y, x, c)) - warped.at(y, x, c);
                s += mask.at(y, x) * d * d;
            }
    return s / static_cast<double>(prev.numel());
}

inline Image random_image(int h, int w, int c, shiftgan::Rng& rng) {
    Image img(h, w, c);
    for (float& v : img.data) v = rng.uniform() * 2.0f - 1.0f;
    return img;
}

inline Tensor random_tensor(const std::vector<int>& shape, shiftgan::Rng& rng, float scale = 1.0f) {
    Tensor t(shape);
    for (float& v : t.v) v = (rng.uniform() * 2.0f - 1.0f) * scale;
    return t;
}

} // namespace oracle
