#include "shiftgan/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "shiftgan/errors.hpp"

namespace fs = std::filesystem;

namespace shiftgan {

namespace {

float clamp1(float v) { return std::min(std::max(v, -1.0f), 1.0f); }

void fill_checker(Image& img, Rng& rng) {
    // 2-px cells on purpose: the finest texture a stride-2 encoder can alias on
    float phase = rng.uniform() * 6.2831853f;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int cell = ((y / 2) + (x / 2)) & 1;
            float wave = 0.35f * std::sin(0.11f * static_cast<float>(x) + phase) +
                         0.25f * std::cos(0.07f * static_cast<float>(y) - phase);
            for (int c = 0; c < img.channels; ++c) {
                float base = cell ? 0.55f : -0.55f;
                img.at(y, x, c) = clamp1(base * (c == 1 ? -1.0f : 1.0f) + wave * 0.5f +
                                         0.1f * static_cast<float>(c - 1));
            }
        }
}

void fill_stripes(Image& img, Rng& rng) {
    float phase = rng.uniform() * 6.2831853f;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float t = 0.8f * std::sin(0.9f * static_cast<float>(x + y) + phase);
            img.at(y, x, 0) = clamp1(t);
            if (img.channels > 1) img.at(y, x, 1) = clamp1(-t + 0.2f);
            if (img.channels > 2)
                img.at(y, x, 2) = clamp1(0.6f * std::sin(0.35f * static_cast<float>(x - y)));
        }
}

void fill_noise(Image& img, Rng& rng) {
    // blocky 2x2 noise so bilinear warps of integer shifts stay exact
    for (int y = 0; y < img.height; y += 2)
        for (int x = 0; x < img.width; x += 2)
            for (int c = 0; c < img.channels; ++c) {
                float v = rng.uniform() * 2.0f - 1.0f;
                for (int dy = 0; dy < 2 && y + dy < img.height; ++dy)
                    for (int dx = 0; dx < 2 && x + dx < img.width; ++dx)
                        img.at(y + dy, x + dx, c) = v;
            }
}

struct Palette {
    float bg[3];
    float circle[3];
    float rect[3];
};

Palette palette_for(char which) {
    if (which == 'A') return {{-0.25f, -0.40f, 0.55f}, {0.80f, -0.50f, -0.50f},
                              {0.70f, 0.65f, -0.60f}};
    return {{-0.50f, 0.30f, -0.40f}, {0.80f, -0.20f, 0.80f}, {-0.60f, 0.70f, 0.80f}};
}

} // namespace

Image make_pattern(const std::string& pattern, int h, int w, Rng& rng) {
    Image img(h, w, 3);
    if (pattern == "checker")
        fill_checker(img, rng);
    else if (pattern == "stripes")
        fill_stripes(img, rng);
    else if (pattern == "noise")
        fill_noise(img, rng);
    else if (pattern == "shapes")
        img = render_shapes(h, w, 'A', rng).image;
    else
        throw ConfigError("unknown pattern: " + pattern);
    return img;
}

SyntheticSequence render_synthetic_sequence(const std::string& pattern, int frames, int vx,
                                            int vy, int h, int w, uint64_t seed,
                                            bool strict_seam_mask) {
    require(frames >= 2, "sequence needs at least 2 frames");
    Rng rng = Rng(seed).derive("pattern");
    Image base = make_pattern(pattern, h, w, rng);

    SyntheticSequence seq;
    for (int t = 0; t < frames; ++t) {
        Image frame(h, w, base.channels);
        for (int y = 0; y < h; ++y) {
            int sy = ((y + t * vy) % h + h) % h;
            for (int x = 0; x < w; ++x) {
                int sx = ((x + t * vx) % w + w) % w;
                for (int c = 0; c < base.channels; ++c)
                    frame.at(y, x, c) = base.at(sy, sx, c);
            }
        }
        seq.frames.push(std::move(frame));
    }
    for (int t = 0; t + 1 < frames; ++t) {
        FlowField flow(h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                flow.dx(y, x) = static_cast<float>(-vx);
                flow.dy(y, x) = static_cast<float>(-vy);
            }
        OcclusionMask mask(h, w, 1.0f);
        if (strict_seam_mask) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    bool off = (x - vx) < 0 || (x - vx) > w - 1 || (y - vy) < 0 ||
                               (y - vy) > h - 1;
                    if (off) mask.at(y, x) = 0.0f;
                }
        }
        seq.flows.push_back(std::move(flow));
        seq.masks.push_back(std::move(mask));
    }
    return seq;
}

ShapeSample render_shapes(int h, int w, char palette, Rng& rng) {
    Palette pal = palette_for(palette);
    ShapeSample out{Image(h, w, 3), SemanticMap(h, w, kShapeClasses)};

    float jitter[3] = {rng.normal(0.0f, 0.05f), rng.normal(0.0f, 0.05f),
                       rng.normal(0.0f, 0.05f)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // fine plaid over the background keeps shift variance visible
            float tex = 0.12f * (((x / 2) + (y / 2)) & 1 ? 1.0f : -1.0f) +
                        0.06f * std::sin(0.23f * static_cast<float>(x + 2 * y));
            for (int c = 0; c < 3; ++c)
                out.image.at(y, x, c) = clamp1(pal.bg[c] + jitter[c] + tex);
        }

    int n_shapes = rng.uniform_int(1, 3);
    for (int s = 0; s < n_shapes; ++s) {
        bool circle = rng.uniform() < 0.5f;
        int cx = rng.uniform_int(w / 6, w - 1 - w / 6);
        int cy = rng.uniform_int(h / 6, h - 1 - h / 6);
        int r = rng.uniform_int(h / 10, h / 4);
        const float* col = circle ? pal.circle : pal.rect;
        float shade = rng.normal(0.0f, 0.08f);
        for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
            for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
                bool inside;
                if (circle) {
                    long dx = x - cx, dy = y - cy;
                    inside = dx * dx + dy * dy <= static_cast<long>(r) * r;
                } else {
                    inside = true;
                }
                if (!inside) continue;
                float tex = 0.08f * (((x / 2) + (y / 2)) & 1 ? 1.0f : -1.0f);
                for (int c = 0; c < 3; ++c)
                    out.image.at(y, x, c) = clamp1(col[c] + shade + tex);
                out.labels.at(y, x) = circle ? 1 : 2;
            }
    }
    return out;
}

namespace {

std::string frame_name(int t, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04d.%s", t, ext);
    return buf;
}

} // namespace

void write_shapes_corpus(const std::string& root, int count, int h, int w, uint64_t seed) {
    fs::create_directories(fs::path(root) / "trainA");
    fs::create_directories(fs::path(root) / "trainB");
    fs::create_directories(fs::path(root) / "semA");
    fs::create_directories(fs::path(root) / "semB");
    Rng rng_a = Rng(seed).derive("shapesA");
    Rng rng_b = Rng(seed).derive("shapesB");
    for (int i = 0; i < count; ++i) {
        ShapeSample a = render_shapes(h, w, 'A', rng_a);
        ShapeSample b = render_shapes(h, w, 'B', rng_b);
        std::string name = frame_name(i, "png");
        save_png((fs::path(root) / "trainA" / name).string(), a.image);
        save_png((fs::path(root) / "trainB" / name).string(), b.image);
        save_label_png((fs::path(root) / "semA" / name).string(), a.labels);
        save_label_png((fs::path(root) / "semB" / name).string(), b.labels);
    }
}

void write_sequence_corpus(const std::string& root, const std::string& pattern, int frames,
                           int vx, int vy, int h, int w, uint64_t seed,
                           bool strict_seam_mask) {
    SyntheticSequence seq =
        render_synthetic_sequence(pattern, frames, vx, vy, h, w, seed, strict_seam_mask);
    fs::create_directories(fs::path(root) / "trainA");
    fs::create_directories(fs::path(root) / "flow");
    fs::create_directories(fs::path(root) / "occ");
    for (int t = 0; t < seq.frames.length(); ++t)
        save_png((fs::path(root) / "trainA" / frame_name(t, "png")).string(),
                 seq.frames.frames[t]);
    for (size_t t = 0; t < seq.flows.size(); ++t) {
        write_flo((fs::path(root) / "flow" / frame_name(static_cast<int>(t), "flo")).string(),
                  seq.flows[t]);
        save_mask_png((fs::path(root) / "occ" / frame_name(static_cast<int>(t), "png")).string(),
                      seq.masks[t]);
    }
}

} // namespace shiftgan
