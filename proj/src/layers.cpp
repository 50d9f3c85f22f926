#include "shiftgan/layers.hpp"

namespace shiftgan {

ag::Var use(ag::Graph& g, Param& p, bool train) {
    ag::Var v = g.make(p.value, train);
    if (train) {
        Param* pp = &p;
        ag::Node* vn = v;
        v->back = [pp, vn]() {
            for (long i = 0; i < vn->grad.numel(); ++i) pp->grad.v[i] += vn->grad.v[i];
        };
    }
    return v;
}

Conv2d::Conv2d(const std::string& name, int in_ch, int out_ch, int k, int stride_, int pad_,
               ag::PadMode mode_, Rng& rng)
    : stride(stride_), pad(pad_), mode(mode_) {
    Tensor wt({out_ch, in_ch, k, k});
    for (float& x : wt.v) x = rng.normal(0.0f, 0.02f);
    w = Param(name + ".w", std::move(wt));
    b = Param(name + ".b", Tensor({out_ch}));
}

ag::Var Conv2d::operator()(ag::Graph& g, ag::Var x, bool train) {
    return ag::conv2d(g, x, use(g, w, train), use(g, b, train), stride, pad, mode);
}

InstanceNorm::InstanceNorm(const std::string& name, int ch) {
    Tensor gm({ch});
    gm.fill(1.0f);
    gamma = Param(name + ".gamma", std::move(gm));
    beta = Param(name + ".beta", Tensor({ch}));
}

ag::Var InstanceNorm::operator()(ag::Graph& g, ag::Var x, bool train) {
    return ag::instance_norm(g, x, use(g, gamma, train), use(g, beta, train));
}

ResBlock::ResBlock(const std::string& name, int ch, ag::PadMode mode, Rng& rng)
    : c1(name + ".c1", ch, ch, 3, 1, 1, mode, rng),
      c2(name + ".c2", ch, ch, 3, 1, 1, mode, rng),
      n1(name + ".n1", ch),
      n2(name + ".n2", ch) {}

ag::Var ResBlock::operator()(ag::Graph& g, ag::Var x, bool train) {
    ag::Var h = ag::relu(g, n1(g, c1(g, x, train), train));
    h = n2(g, c2(g, h, train), train);
    return ag::add(g, x, h);
}

void ResBlock::collect(ParamRefs& out) {
    c1.collect(out);
    c2.collect(out);
    n1.collect(out);
    n2.collect(out);
}

} // namespace shiftgan
