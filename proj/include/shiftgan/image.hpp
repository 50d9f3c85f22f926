#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shiftgan/tensor.hpp"

namespace shiftgan {

/// H x W x C float image, values in [-1,1], row-major (y, x, c).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c) {
        data.assign(static_cast<size_t>(h) * w * c, 0.0f);
    }

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    long numel() const { return static_cast<long>(data.size()); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// Per-pixel class indices in [0, num_classes).
struct SemanticMap {
    int height = 0;
    int width = 0;
    int num_classes = 0;
    std::vector<int32_t> labels;

    SemanticMap() = default;
    SemanticMap(int h, int w, int nc) : height(h), width(w), num_classes(nc) {
        labels.assign(static_cast<size_t>(h) * w, 0);
    }
    int32_t& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
    int32_t at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
};

/// Per-pixel weights in [0,1]; 0 marks invalid flow correspondence.
struct OcclusionMask {
    int height = 0;
    int width = 0;
    std::vector<float> weights;

    OcclusionMask() = default;
    OcclusionMask(int h, int w, float fill = 1.0f) : height(h), width(w) {
        weights.assign(static_cast<size_t>(h) * w, fill);
    }
    float& at(int y, int x) { return weights[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return weights[static_cast<size_t>(y) * width + x]; }
};

/// Ordered frames of uniform shape, T >= 1.
struct ImageSequence {
    std::vector<Image> frames;

    int length() const { return static_cast<int>(frames.size()); }
    void push(Image img);   // enforces uniform shape
};

// --- file I/O -------------------------------------------------------------

/// Decode an 8-bit PNG or JPEG into [-1,1]: v = px/127.5 - 1.
Image load_image(const std::string& path);
/// Encode as PNG (grayscale or RGB), quantizing v -> round((v+1)*127.5).
void save_png(const std::string& path, const Image& img);
void save_jpeg(const std::string& path, const Image& img, int quality = 95);
/// Dispatch on extension (.png vs .jpg/.jpeg).
void save_image(const std::string& path, const Image& img);

/// Label maps travel as single-channel PNG of raw class indices.
SemanticMap load_label_png(const std::string& path, int num_classes);
void save_label_png(const std::string& path, const SemanticMap& map);

/// Masks travel as single-channel PNG, weight = px/255.
OcclusionMask load_mask_png(const std::string& path);
void save_mask_png(const std::string& path, const OcclusionMask& mask);

// --- layout conversion for the network code --------------------------------

Tensor to_chw(const Image& img);
Image from_chw(const Tensor& t);

} // namespace shiftgan
