#pragma once

#include <string>
#include <vector>

#include "shiftgan/ops.hpp"
#include "shiftgan/rng.hpp"

namespace shiftgan {

/// A named trainable tensor plus its accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor(value.shape);
    }
    void zero_grad() { grad.zero(); }
};

/// Bind a param into a graph as a leaf; backward adds into param.grad.
ag::Var use(ag::Graph& g, Param& p, bool train = true);

using ParamRefs = std::vector<Param*>;

struct Conv2d {
    Param w, b;
    int stride = 1;
    int pad = 0;
    ag::PadMode mode = ag::PadMode::Zero;

    Conv2d() = default;
    /// weights ~ N(0, 0.02), bias 0
    Conv2d(const std::string& name, int in_ch, int out_ch, int k, int stride, int pad,
           ag::PadMode mode, Rng& rng);
    ag::Var operator()(ag::Graph& g, ag::Var x, bool train = true);
    void collect(ParamRefs& out) {
        out.push_back(&w);
        out.push_back(&b);
    }
};

struct InstanceNorm {
    Param gamma, beta;

    InstanceNorm() = default;
    InstanceNorm(const std::string& name, int ch);
    ag::Var operator()(ag::Graph& g, ag::Var x, bool train = true);
    void collect(ParamRefs& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

/// conv-norm-relu, conv-norm, plus skip (the CycleGAN residual block)
struct ResBlock {
    Conv2d c1, c2;
    InstanceNorm n1, n2;

    ResBlock() = default;
    ResBlock(const std::string& name, int ch, ag::PadMode mode, Rng& rng);
    ag::Var operator()(ag::Graph& g, ag::Var x, bool train = true);
    void collect(ParamRefs& out);
};

} // namespace shiftgan
