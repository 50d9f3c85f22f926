#pragma once

#include <vector>

#include "shiftgan/graph.hpp"

namespace shiftgan {
namespace ag {

enum class PadMode { Zero, Reflect, Circular };

// leaves
Var constant(Graph& g, Tensor v);         // no gradient flows here
Var input(Graph& g, Tensor v);            // leaf that keeps its gradient

// elementwise
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, float s);
Var add_scalar(Graph& g, Var a, float s);
Var mul_const(Graph& g, Var a, const Tensor& m);   // fixed elementwise weight
Var relu(Graph& g, Var a);
Var leaky_relu(Graph& g, Var a, float slope);
Var tanh_op(Graph& g, Var a);
Var abs_op(Graph& g, Var a);
Var softplus(Graph& g, Var a);

// structure (all feature maps are CHW)
Var conv2d(Graph& g, Var x, Var w, Var b, int stride, int pad, PadMode mode);
Var instance_norm(Graph& g, Var x, Var gamma, Var beta, float eps = 1e-5f);
Var upsample_nearest2(Graph& g, Var x);
Var maxpool2(Graph& g, Var x);
Var crop(Graph& g, Var x, int y0, int x0, int h, int w);
/// content moves +i along x and +j along y: out(y,x) = in((y-j) mod H, (x-i) mod W)
Var circ_shift(Graph& g, Var x, int i, int j);
/// backward-warp with clamped bilinear sampling; flow is a fixed (2,H,W)
/// tensor (dx in channel 0, dy in channel 1); gradient flows into img only
Var warp_bilinear(Graph& g, Var img, const Tensor& flow);

// reductions
Var sum_all(Graph& g, Var a);
Var mean_all(Graph& g, Var a);
/// logits (C,H,W) against hard per-pixel labels (size H*W, row-major);
/// mean cross-entropy over pixels
Var softmax_ce_mean(Graph& g, Var logits, const std::vector<int>& labels);
/// (C,H,W) -> (C,C), G(a,b) = sum_hw Fa*Fb / (C*H*W)
Var gram(Graph& g, Var x);
/// mean of squared forward differences (both axes, all channels)
Var tv_mean(Graph& g, Var x);

// composites
Var mse_mean(Graph& g, Var a, Var b);
Var l1_mean(Graph& g, Var a, Var b);

// plain-tensor helpers shared with non-autodiff code paths
int pad_index(int i, int n, PadMode mode);    // -1 when out of support (Zero)
Tensor circ_shift_tensor(const Tensor& t, int i, int j);

} // namespace ag
} // namespace shiftgan
