#include "shiftgan/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "shiftgan/errors.hpp"

namespace shiftgan {

void ImageSequence::push(Image img) {
    if (!frames.empty())
        require(frames.front().same_shape(img), "sequence frames must share one shape");
    frames.push_back(std::move(img));
}

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path);
    return f;
}

float px_to_unit(uint8_t px) { return static_cast<float>(px) / 127.5f - 1.0f; }

uint8_t unit_to_px(float v) {
    float scaled = (std::min(std::max(v, -1.0f), 1.0f) + 1.0f) * 127.5f;
    long q = std::lrintf(scaled);
    return static_cast<uint8_t>(std::min(255L, std::max(0L, q)));
}

std::vector<uint8_t> read_png_gray_or_rgb(const std::string& path, int& h, int& w, int& ch) {
    FilePtr f = open_file(path, "rb");
    uint8_t sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw FormatError(path + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng init failed");
    }
    std::vector<uint8_t> out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path + ": corrupt PNG");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    h = static_cast<int>(png_get_image_height(png, info));
    w = static_cast<int>(png_get_image_width(png, info));
    ch = static_cast<int>(png_get_channels(png, info));
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path + ": unsupported channel count");
    }
    out.resize(static_cast<size_t>(h) * w * ch);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = out.data() + static_cast<size_t>(y) * w * ch;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png_bytes(const std::string& path, const uint8_t* bytes, int h, int w, int ch) {
    require(ch == 1 || ch == 3, "PNG writer supports 1 or 3 channels");
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, w, h, 8, ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(bytes + static_cast<size_t>(y) * w * ch);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    JpegErrorMgr* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(err->jump, 1);
}

std::vector<uint8_t> read_jpeg(const std::string& path, int& h, int& w, int& ch) {
    FilePtr f = open_file(path, "rb");
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError(path + ": corrupt JPEG");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f.get());
    jpeg_read_header(&cinfo, TRUE);
    jpeg_start_decompress(&cinfo);
    h = static_cast<int>(cinfo.output_height);
    w = static_cast<int>(cinfo.output_width);
    ch = static_cast<int>(cinfo.output_components);
    if (ch != 1 && ch != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError(path + ": unsupported channel count");
    }
    std::vector<uint8_t> out(static_cast<size_t>(h) * w * ch);
    while (cinfo.output_scanline < cinfo.output_height) {
        uint8_t* row = out.data() + static_cast<size_t>(cinfo.output_scanline) * w * ch;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suf;
}

} // namespace

Image load_image(const std::string& path) {
    int h = 0, w = 0, ch = 0;
    std::vector<uint8_t> bytes;
    if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg"))
        bytes = read_jpeg(path, h, w, ch);
    else
        bytes = read_png_gray_or_rgb(path, h, w, ch);
    Image img(h, w, ch);
    for (long i = 0; i < img.numel(); ++i) img.data[i] = px_to_unit(bytes[i]);
    return img;
}

void save_png(const std::string& path, const Image& img) {
    require(img.height >= 1 && img.width >= 1, "empty image");
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = unit_to_px(img.data[i]);
    write_png_bytes(path, bytes.data(), img.height, img.width, img.channels);
}

void save_jpeg(const std::string& path, const Image& img, int quality) {
    require(img.channels == 1 || img.channels == 3, "JPEG writer supports 1 or 3 channels");
    std::vector<uint8_t> bytes(img.data.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = unit_to_px(img.data[i]);

    FilePtr f = open_file(path, "wb");
    jpeg_compress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw IoError("JPEG write failed: " + path);
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f.get());
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = img.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row =
            bytes.data() + static_cast<size_t>(cinfo.next_scanline) * img.width * img.channels;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

void save_image(const std::string& path, const Image& img) {
    if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg"))
        save_jpeg(path, img);
    else
        save_png(path, img);
}

SemanticMap load_label_png(const std::string& path, int num_classes) {
    int h = 0, w = 0, ch = 0;
    std::vector<uint8_t> bytes = read_png_gray_or_rgb(path, h, w, ch);
    if (ch != 1) throw FormatError(path + ": label maps must be single-channel");
    SemanticMap map(h, w, num_classes);
    for (size_t i = 0; i < map.labels.size(); ++i) {
        if (static_cast<int>(bytes[i]) >= num_classes)
            throw FormatError(path + ": label exceeds class count");
        map.labels[i] = bytes[i];
    }
    return map;
}

void save_label_png(const std::string& path, const SemanticMap& map) {
    std::vector<uint8_t> bytes(map.labels.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<uint8_t>(map.labels[i]);
    write_png_bytes(path, bytes.data(), map.height, map.width, 1);
}

OcclusionMask load_mask_png(const std::string& path) {
    int h = 0, w = 0, ch = 0;
    std::vector<uint8_t> bytes = read_png_gray_or_rgb(path, h, w, ch);
    if (ch != 1) throw FormatError(path + ": masks must be single-channel");
    OcclusionMask mask(h, w);
    for (size_t i = 0; i < mask.weights.size(); ++i)
        mask.weights[i] = static_cast<float>(bytes[i]) / 255.0f;
    return mask;
}

void save_mask_png(const std::string& path, const OcclusionMask& mask) {
    std::vector<uint8_t> bytes(mask.weights.size());
    for (size_t i = 0; i < bytes.size(); ++i) {
        float v = std::min(std::max(mask.weights[i], 0.0f), 1.0f);
        bytes[i] = static_cast<uint8_t>(std::lrintf(v * 255.0f));
    }
    write_png_bytes(path, bytes.data(), mask.height, mask.width, 1);
}

Tensor to_chw(const Image& img) {
    Tensor t({img.channels, img.height, img.width});
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) t.at(c, y, x) = img.at(y, x, c);
    return t;
}

Image from_chw(const Tensor& t) {
    require(t.shape.size() == 3, "from_chw: expects CHW");
    Image img(t.shape[1], t.shape[2], t.shape[0]);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) img.at(y, x, c) = t.at(c, y, x);
    return img;
}

} // namespace shiftgan
