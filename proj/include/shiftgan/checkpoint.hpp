#pragma once

#include <json.hpp>
#include <map>
#include <string>

#include "shiftgan/networks.hpp"

namespace shiftgan {

using nlohmann::json;

json generator_spec_to_json(const GeneratorSpec& s);
GeneratorSpec generator_spec_from_json(const json& j);
json discriminator_spec_to_json(const DiscriminatorSpec& s);
DiscriminatorSpec discriminator_spec_from_json(const json& j);

/// Versioned checkpoint: JSON metadata (kind, seed, iteration, shift policy,
/// loss weights, model specs, tensor manifest) followed by raw float32
/// payloads in manifest order. Loading an unknown version fails.
struct Checkpoint {
    int version = 1;
    std::string kind;           // "adapt", "style", "segmenter", "perceptual"
    uint64_t seed = 0;
    long iteration = 0;
    std::string shift_policy;   // recorded with every training run
    json weights;               // LossWeights as written by the trainer
    json specs;                 // model specs by role
    std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Copy params into / out of a checkpoint under "prefix/param.name".
void store_params(Checkpoint& ck, const std::string& prefix, ParamRefs params);
void restore_params(const Checkpoint& ck, const std::string& prefix, ParamRefs params);

/// Byte-level fingerprint of all parameter tensors (freeze verification).
std::string param_digest(ParamRefs params);

} // namespace shiftgan
