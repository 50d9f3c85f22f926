#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shiftgan/flow.hpp"
#include "shiftgan/image.hpp"
#include "shiftgan/rng.hpp"

namespace shiftgan {

/// One domain of an unpaired corpus. Directory layout:
///   root/trainA/*.png|jpg      images of domain A   (trainB for domain B)
///   root/semA/*.png            optional label maps, matched by filename
///   root/flow/*.flo            optional per-sequence flow (T-1 files)
///   root/occ/*.png             optional per-sequence occlusion masks
/// Discovery is sorted by filename so sampling is reproducible.
class DomainDataset {
public:
    static DomainDataset open(const std::string& root, char domain);
    /// a bare directory of images (e.g. translate input)
    static DomainDataset open_dir(const std::string& image_dir);

    size_t size() const { return images_.size(); }
    const std::vector<std::string>& files() const { return images_; }
    std::string name(size_t i) const;   // filename without directory

    Image image(size_t i) const;
    bool has_labels() const { return !labels_.empty(); }
    SemanticMap labels(size_t i, int num_classes) const;

    bool has_flow() const { return !flows_.empty(); }
    size_t flow_count() const { return flows_.size(); }
    FlowField flow(size_t t) const;
    bool has_masks() const { return !masks_.empty(); }
    OcclusionMask mask(size_t t) const;

    /// uniform draw over the discovered images
    size_t sample_index(Rng& rng) const;

private:
    std::vector<std::string> images_, labels_, flows_, masks_;
};

/// A fully loaded sequence with its ground-truth flow, validated for
/// consistent shapes and counts.
struct SequenceData {
    std::string root;
    ImageSequence frames;
    std::vector<FlowField> flows;
    std::vector<OcclusionMask> masks;   // all-ones when absent on disk
};

SequenceData load_sequence(const std::string& root);
/// dir may itself be a sequence root or a directory of sequence roots
std::vector<SequenceData> load_sequence_roots(const std::string& dir);

std::vector<std::string> list_images(const std::string& dir);

} // namespace shiftgan
