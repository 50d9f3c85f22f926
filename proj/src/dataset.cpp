#include "shiftgan/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <initializer_list>

#include "shiftgan/errors.hpp"

namespace fs = std::filesystem;

namespace shiftgan {

namespace {

bool has_ext(const fs::path& p, std::initializer_list<const char*> exts) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const char* want : exts)
        if (e == want) return true;
    return false;
}

std::vector<std::string> list_files(const std::string& dir,
                                    std::initializer_list<const char*> exts) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_ext(entry.path(), exts))
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

std::vector<std::string> list_images(const std::string& dir) {
    return list_files(dir, {".png", ".jpg", ".jpeg"});
}

DomainDataset DomainDataset::open(const std::string& root, char domain) {
    require(domain == 'A' || domain == 'B', "domain must be 'A' or 'B'");
    DomainDataset ds;
    std::string train = (fs::path(root) / (std::string("train") + domain)).string();
    if (!fs::is_directory(train)) throw IoError("missing dataset directory: " + train);
    ds.images_ = list_images(train);
    if (ds.images_.empty()) throw IoError("no images in " + train);

    std::string sem = (fs::path(root) / (std::string("sem") + domain)).string();
    if (fs::is_directory(sem)) {
        for (const std::string& img : ds.images_) {
            fs::path p = fs::path(sem) / fs::path(img).filename().replace_extension(".png");
            if (!fs::exists(p))
                throw IoError("label map missing for " + img);
            ds.labels_.push_back(p.string());
        }
    }
    ds.flows_ = list_files((fs::path(root) / "flow").string(), {".flo"});
    ds.masks_ = list_files((fs::path(root) / "occ").string(), {".png"});
    if (!ds.flows_.empty())
        require(ds.flows_.size() + 1 == ds.images_.size(),
                "flow count must be image count - 1");
    if (!ds.masks_.empty())
        require(ds.masks_.size() == ds.flows_.size(), "mask count must match flow count");
    return ds;
}

DomainDataset DomainDataset::open_dir(const std::string& image_dir) {
    if (!fs::is_directory(image_dir)) throw IoError("missing directory: " + image_dir);
    DomainDataset ds;
    ds.images_ = list_images(image_dir);
    return ds;
}

std::string DomainDataset::name(size_t i) const {
    return fs::path(images_.at(i)).filename().string();
}

Image DomainDataset::image(size_t i) const { return load_image(images_.at(i)); }

SemanticMap DomainDataset::labels(size_t i, int num_classes) const {
    require(has_labels(), "dataset has no label maps");
    return load_label_png(labels_.at(i), num_classes);
}

FlowField DomainDataset::flow(size_t t) const { return read_flo(flows_.at(t)); }

OcclusionMask DomainDataset::mask(size_t t) const { return load_mask_png(masks_.at(t)); }

size_t DomainDataset::sample_index(Rng& rng) const {
    require(!images_.empty(), "cannot sample from an empty dataset");
    return static_cast<size_t>(rng.uniform_int(0, static_cast<int>(images_.size()) - 1));
}

SequenceData load_sequence(const std::string& root) {
    DomainDataset ds = DomainDataset::open(root, 'A');
    SequenceData seq;
    seq.root = root;
    for (size_t i = 0; i < ds.size(); ++i) seq.frames.push(ds.image(i));
    const Image& first = seq.frames.frames.front();
    for (size_t t = 0; t < ds.flow_count(); ++t) {
        FlowField f = ds.flow(t);
        require(f.height == first.height && f.width == first.width,
                "flow dimensions do not match the image pair in " + root);
        seq.flows.push_back(std::move(f));
        if (ds.has_masks()) {
            OcclusionMask m = ds.mask(t);
            require(m.height == first.height && m.width == first.width,
                    "mask dimensions do not match the image pair in " + root);
            seq.masks.push_back(std::move(m));
        } else {
            seq.masks.emplace_back(first.height, first.width, 1.0f);
        }
    }
    return seq;
}

std::vector<SequenceData> load_sequence_roots(const std::string& dir) {
    std::vector<SequenceData> out;
    if (fs::is_directory(fs::path(dir) / "trainA")) {
        out.push_back(load_sequence(dir));
        return out;
    }
    std::vector<std::string> roots;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::is_directory(entry.path() / "trainA"))
            roots.push_back(entry.path().string());
    std::sort(roots.begin(), roots.end());
    for (const std::string& r : roots) out.push_back(load_sequence(r));
    if (out.empty()) throw IoError("no sequence roots under " + dir);
    return out;
}

} // namespace shiftgan
