#include "shiftgan/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "shiftgan/errors.hpp"

namespace shiftgan {
namespace ag {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Var constant(Graph& g, Tensor v) { return g.make(std::move(v), false); }
Var input(Graph& g, Tensor v) { return g.make(std::move(v), true); }

namespace {

bool needs(Var a) { return a->need_grad; }

Var unary(Graph& g, Var a, Tensor out, std::function<void(Node&, Node&)> back) {
    Var o = g.make(std::move(out), needs(a));
    if (o->need_grad) {
        Node* an = a;
        Node* on = o;
        o->back = [an, on, back]() {
            if (an->need_grad) back(*on, *an);
        };
    }
    return o;
}

} // namespace

Var add(Graph& g, Var a, Var b) {
    require(a->val.same_shape(b->val), "add: shape mismatch");
    Tensor out = a->val;
    for (long i = 0; i < out.numel(); ++i) out.v[i] += b->val.v[i];
    Var o = g.make(std::move(out), needs(a) || needs(b));
    if (o->need_grad) {
        Node *an = a, *bn = b, *on = o;
        o->back = [an, bn, on]() {
            for (long i = 0; i < on->grad.numel(); ++i) {
                if (an->need_grad) an->grad.v[i] += on->grad.v[i];
                if (bn->need_grad) bn->grad.v[i] += on->grad.v[i];
            }
        };
    }
    return o;
}

Var sub(Graph& g, Var a, Var b) {
    require(a->val.same_shape(b->val), "sub: shape mismatch");
    Tensor out = a->val;
    for (long i = 0; i < out.numel(); ++i) out.v[i] -= b->val.v[i];
    Var o = g.make(std::move(out), needs(a) || needs(b));
    if (o->need_grad) {
        Node *an = a, *bn = b, *on = o;
        o->back = [an, bn, on]() {
            for (long i = 0; i < on->grad.numel(); ++i) {
                if (an->need_grad) an->grad.v[i] += on->grad.v[i];
                if (bn->need_grad) bn->grad.v[i] -= on->grad.v[i];
            }
        };
    }
    return o;
}

Var mul(Graph& g, Var a, Var b) {
    require(a->val.same_shape(b->val), "mul: shape mismatch");
    Tensor out = a->val;
    for (long i = 0; i < out.numel(); ++i) out.v[i] *= b->val.v[i];
    Var o = g.make(std::move(out), needs(a) || needs(b));
    if (o->need_grad) {
        Node *an = a, *bn = b, *on = o;
        o->back = [an, bn, on]() {
            for (long i = 0; i < on->grad.numel(); ++i) {
                if (an->need_grad) an->grad.v[i] += on->grad.v[i] * bn->val.v[i];
                if (bn->need_grad) bn->grad.v[i] += on->grad.v[i] * an->val.v[i];
            }
        };
    }
    return o;
}

Var scale(Graph& g, Var a, float s) {
    Tensor out = a->val;
    for (float& x : out.v) x *= s;
    return unary(g, a, std::move(out), [s](Node& o, Node& an) {
        for (long i = 0; i < o.grad.numel(); ++i) an.grad.v[i] += s * o.grad.v[i];
    });
}

Var add_scalar(Graph& g, Var a, float s) {
    Tensor out = a->val;
    for (float& x : out.v) x += s;
    return unary(g, a, std::move(out), [](Node& o, Node& an) {
        for (long i = 0; i < o.grad.numel(); ++i) an.grad.v[i] += o.grad.v[i];
    });
}

Var mul_const(Graph& g, Var a, const Tensor& m) {
    require(a->val.same_shape(m), "mul_const: shape mismatch");
    Tensor out = a->val;
    for (long i = 0; i < out.numel(); ++i) out.v[i] *= m.v[i];
    auto mv = std::make_shared<Tensor>(m);
    return unary(g, a, std::move(out), [mv](Node& o, Node& an) {
        for (long i = 0; i < o.grad.numel(); ++i) an.grad.v[i] += o.grad.v[i] * mv->v[i];
    });
}

Var relu(Graph& g, Var a) {
    Tensor out = a->val;
    for (float& x : out.v) x = x > 0.0f ? x : 0.0f;
    Node* an = a;
    return unary(g, a, std::move(out), [an](Node& o, Node& dst) {
        for (long i = 0; i < o.grad.numel(); ++i)
            if (an->val.v[i] > 0.0f) dst.grad.v[i] += o.grad.v[i];
    });
}

Var leaky_relu(Graph& g, Var a, float slope) {
    Tensor out = a->val;
    for (float& x : out.v) x = x > 0.0f ? x : slope * x;
    Node* an = a;
    return unary(g, a, std::move(out), [an, slope](Node& o, Node& dst) {
        for (long i = 0; i < o.grad.numel(); ++i)
            dst.grad.v[i] += (an->val.v[i] > 0.0f ? 1.0f : slope) * o.grad.v[i];
    });
}

Var tanh_op(Graph& g, Var a) {
    Tensor out = a->val;
    for (float& x : out.v) x = std::tanh(x);
    Var o = g.make(std::move(out), needs(a));
    if (o->need_grad) {
        Node *an = a, *on = o;
        o->back = [an, on]() {
            if (!an->need_grad) return;
            for (long i = 0; i < on->grad.numel(); ++i) {
                float y = on->val.v[i];
                an->grad.v[i] += (1.0f - y * y) * on->grad.v[i];
            }
        };
    }
    return o;
}

Var abs_op(Graph& g, Var a) {
    Tensor out = a->val;
    for (float& x : out.v) x = std::fabs(x);
    Node* an = a;
    return unary(g, a, std::move(out), [an](Node& o, Node& dst) {
        for (long i = 0; i < o.grad.numel(); ++i) {
            float x = an->val.v[i];
            float s = x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f);
            dst.grad.v[i] += s * o.grad.v[i];
        }
    });
}

Var softplus(Graph& g, Var a) {
    Tensor out = a->val;
    for (float& x : out.v) x = std::log1p(std::exp(-std::fabs(x))) + std::max(x, 0.0f);
    Node* an = a;
    return unary(g, a, std::move(out), [an](Node& o, Node& dst) {
        for (long i = 0; i < o.grad.numel(); ++i) {
            float sig = 1.0f / (1.0f + std::exp(-an->val.v[i]));
            dst.grad.v[i] += sig * o.grad.v[i];
        }
    });
}

int pad_index(int i, int n, PadMode mode) {
    if (i >= 0 && i < n) return i;
    switch (mode) {
        case PadMode::Zero:
            return -1;
        case PadMode::Reflect:
            // mirror without repeating the edge sample; valid while |overhang| < n
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
            return i;
        case PadMode::Circular:
            i %= n;
            if (i < 0) i += n;
            return i;
    }
    return -1;
}

namespace {

// column buffer layout: (IC*KH*KW) rows x (OH*OW) cols, row-major
void im2col(const Tensor& x, int kh, int kw, int stride, int pad, PadMode mode, int oh, int ow,
            FloatVec& col) {
    const int ic = x.shape[0], h = x.shape[1], w = x.shape[2];
    col.assign(static_cast<size_t>(ic) * kh * kw * oh * ow, 0.0f);
    size_t r = 0;
    for (int c = 0; c < ic; ++c) {
        const float* xc = &x.v[static_cast<size_t>(c) * h * w];
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++r) {
                float* dst = &col[r * oh * ow];
                for (int oy = 0; oy < oh; ++oy) {
                    int sy = pad_index(oy * stride - pad + ky, h, mode);
                    if (sy < 0) {
                        dst += ow;
                        continue;
                    }
                    const float* row = xc + static_cast<size_t>(sy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        int sx = pad_index(ox * stride - pad + kx, w, mode);
                        *dst++ = sx < 0 ? 0.0f : row[sx];
                    }
                }
            }
        }
    }
}

void col2im_accum(const FloatVec& col, int ic, int h, int w, int kh, int kw, int stride,
                  int pad, PadMode mode, int oh, int ow, Tensor& dx) {
    size_t r = 0;
    for (int c = 0; c < ic; ++c) {
        float* gc = &dx.v[static_cast<size_t>(c) * h * w];
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++r) {
                const float* src = &col[r * oh * ow];
                for (int oy = 0; oy < oh; ++oy) {
                    int sy = pad_index(oy * stride - pad + ky, h, mode);
                    if (sy < 0) {
                        src += ow;
                        continue;
                    }
                    float* row = gc + static_cast<size_t>(sy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        int sx = pad_index(ox * stride - pad + kx, w, mode);
                        float v = *src++;
                        if (sx >= 0) row[sx] += v;
                    }
                }
            }
        }
    }
}

} // namespace

Var conv2d(Graph& g, Var x, Var w, Var b, int stride, int pad, PadMode mode) {
    require(x->val.shape.size() == 3 && w->val.shape.size() == 4, "conv2d: bad ranks");
    const int ic = x->val.shape[0], h = x->val.shape[1], wd = x->val.shape[2];
    const int oc = w->val.shape[0], kh = w->val.shape[2], kw = w->val.shape[3];
    require(w->val.shape[1] == ic, "conv2d: channel mismatch");
    require(b->val.numel() == oc, "conv2d: bias size");
    require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;
    require(oh >= 1 && ow >= 1, "conv2d: input smaller than kernel");
    if (mode == PadMode::Reflect) require(pad < h && pad < wd, "conv2d: reflect pad too large");

    const int kdim = ic * kh * kw;
    const long n = static_cast<long>(oh) * ow;
    FloatVec col;
    im2col(x->val, kh, kw, stride, pad, mode, oh, ow, col);

    Tensor out({oc, oh, ow});
    {
        ConstMatMap wm(w->val.v.data(), oc, kdim);
        ConstMatMap cm(col.data(), kdim, n);
        MatMap om(out.v.data(), oc, n);
        om.noalias() = wm * cm;
        for (int o = 0; o < oc; ++o) om.row(o).array() += b->val.v[o];
    }

    Var o = g.make(std::move(out), needs(x) || needs(w) || needs(b));
    if (o->need_grad) {
        Node *xn = x, *wn = w, *bn = b, *on = o;
        o->back = [xn, wn, bn, on, stride, pad, mode, kh, kw, oh, ow, kdim, n, ic, h, wd]() {
            ConstMatMap gm(on->grad.v.data(), on->val.shape[0], n);
            if (bn->need_grad) {
                for (int oc_i = 0; oc_i < on->val.shape[0]; ++oc_i)
                    bn->grad.v[oc_i] += gm.row(oc_i).sum();
            }
            if (wn->need_grad) {
                // recompute the column buffer rather than caching it across the tape
                FloatVec col;
                im2col(xn->val, kh, kw, stride, pad, mode, oh, ow, col);
                ConstMatMap cm(col.data(), kdim, n);
                MatMap wg(wn->grad.v.data(), on->val.shape[0], kdim);
                wg.noalias() += gm * cm.transpose();
            }
            if (xn->need_grad) {
                FloatVec dcol(static_cast<size_t>(kdim) * n);
                ConstMatMap wm(wn->val.v.data(), on->val.shape[0], kdim);
                MatMap dm(dcol.data(), kdim, n);
                dm.noalias() = wm.transpose() * gm;
                col2im_accum(dcol, ic, h, wd, kh, kw, stride, pad, mode, oh, ow, xn->grad);
            }
        };
    }
    return o;
}

Var instance_norm(Graph& g, Var x, Var gamma, Var beta, float eps) {
    require(x->val.shape.size() == 3, "instance_norm: expects CHW");
    const int c = x->val.shape[0], h = x->val.shape[1], w = x->val.shape[2];
    require(gamma->val.numel() == c && beta->val.numel() == c, "instance_norm: param size");
    const long hw = static_cast<long>(h) * w;

    auto mean = std::make_shared<std::vector<float>>(c);
    auto inv_std = std::make_shared<std::vector<float>>(c);
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
        const float* xp = &x->val.v[ci * hw];
        double m = 0.0;
        for (long i = 0; i < hw; ++i) m += xp[i];
        m /= static_cast<double>(hw);
        double var = 0.0;
        for (long i = 0; i < hw; ++i) {
            double d = xp[i] - m;
            var += d * d;
        }
        var /= static_cast<double>(hw);
        float is = 1.0f / std::sqrt(static_cast<float>(var) + eps);
        (*mean)[ci] = static_cast<float>(m);
        (*inv_std)[ci] = is;
        float* op = &out.v[ci * hw];
        float gn = gamma->val.v[ci], bt = beta->val.v[ci];
        for (long i = 0; i < hw; ++i)
            op[i] = gn * (xp[i] - static_cast<float>(m)) * is + bt;
    }

    Var o = g.make(std::move(out), needs(x) || needs(gamma) || needs(beta));
    if (o->need_grad) {
        Node *xn = x, *gn = gamma, *bn = beta, *on = o;
        o->back = [xn, gn, bn, on, mean, inv_std, c, hw]() {
            for (int ci = 0; ci < c; ++ci) {
                const float* xp = &xn->val.v[ci * hw];
                const float* gp = &on->grad.v[ci * hw];
                const float m = (*mean)[ci], is = (*inv_std)[ci];
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (long i = 0; i < hw; ++i) {
                    float xhat = (xp[i] - m) * is;
                    sum_dy += gp[i];
                    sum_dy_xhat += static_cast<double>(gp[i]) * xhat;
                }
                if (bn->need_grad) bn->grad.v[ci] += static_cast<float>(sum_dy);
                if (gn->need_grad) gn->grad.v[ci] += static_cast<float>(sum_dy_xhat);
                if (xn->need_grad) {
                    const float gamma_v = gn->val.v[ci];
                    const float mean_dy = static_cast<float>(sum_dy / static_cast<double>(hw));
                    const float mean_dy_xhat =
                        static_cast<float>(sum_dy_xhat / static_cast<double>(hw));
                    float* dxp = &xn->grad.v[ci * hw];
                    for (long i = 0; i < hw; ++i) {
                        float xhat = (xp[i] - m) * is;
                        dxp[i] += gamma_v * is * (gp[i] - mean_dy - xhat * mean_dy_xhat);
                    }
                }
            }
        };
    }
    return o;
}

Var upsample_nearest2(Graph& g, Var x) {
    require(x->val.shape.size() == 3, "upsample: expects CHW");
    const int c = x->val.shape[0], h = x->val.shape[1], w = x->val.shape[2];
    Tensor out({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out.at(ci, y, xx) = x->val.at(ci, y / 2, xx / 2);
    Node* xn = x;
    return unary(g, x, std::move(out), [xn, c, h, w](Node& o, Node& dst) {
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    dst.grad.at(ci, y / 2, xx / 2) += o.grad.at(ci, y, xx);
    });
}

Var maxpool2(Graph& g, Var x) {
    require(x->val.shape.size() == 3, "maxpool2: expects CHW");
    const int c = x->val.shape[0], h = x->val.shape[1], w = x->val.shape[2];
    require(h % 2 == 0 && w % 2 == 0, "maxpool2: odd extent");
    const int oh = h / 2, ow = w / 2;
    Tensor out({c, oh, ow});
    auto arg = std::make_shared<std::vector<int>>(static_cast<size_t>(c) * oh * ow);
    size_t k = 0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx, ++k) {
                float best = -1e30f;
                int best_i = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        int sy = 2 * y + dy, sx = 2 * xx + dx;
                        float v = x->val.at(ci, sy, sx);
                        if (v > best) {
                            best = v;
                            best_i = sy * w + sx;
                        }
                    }
                out.v[k] = best;
                (*arg)[k] = ci * h * w + best_i;
            }
    return unary(g, x, std::move(out), [arg](Node& o, Node& dst) {
        for (long i = 0; i < o.grad.numel(); ++i) dst.grad.v[(*arg)[i]] += o.grad.v[i];
    });
}

Var crop(Graph& g, Var x, int y0, int x0, int h, int w) {
    require(x->val.shape.size() == 3, "crop: expects CHW");
    const int c = x->val.shape[0], ih = x->val.shape[1], iw = x->val.shape[2];
    require(y0 >= 0 && x0 >= 0 && h >= 1 && w >= 1 && y0 + h <= ih && x0 + w <= iw,
            "crop: window out of bounds");
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at(ci, y, xx) = x->val.at(ci, y0 + y, x0 + xx);
    return unary(g, x, std::move(out), [y0, x0, c, h, w](Node& o, Node& dst) {
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    dst.grad.at(ci, y0 + y, x0 + xx) += o.grad.at(ci, y, xx);
    });
}

Tensor circ_shift_tensor(const Tensor& t, int i, int j) {
    const int c = t.shape[0], h = t.shape[1], w = t.shape[2];
    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y) {
            int sy = pad_index(y - j, h, PadMode::Circular);
            for (int x = 0; x < w; ++x) {
                int sx = pad_index(x - i, w, PadMode::Circular);
                out.at(ci, y, x) = t.at(ci, sy, sx);
            }
        }
    return out;
}

Var circ_shift(Graph& g, Var x, int i, int j) {
    require(x->val.shape.size() == 3, "circ_shift: expects CHW");
    Tensor out = circ_shift_tensor(x->val, i, j);
    return unary(g, x, std::move(out), [i, j](Node& o, Node& dst) {
        Tensor back = circ_shift_tensor(o.grad, -i, -j);
        for (long k = 0; k < back.numel(); ++k) dst.grad.v[k] += back.v[k];
    });
}

Var warp_bilinear(Graph& g, Var img, const Tensor& flow) {
    require(img->val.shape.size() == 3, "warp: expects CHW");
    const int c = img->val.shape[0], h = img->val.shape[1], w = img->val.shape[2];
    require(flow.shape == std::vector<int>({2, h, w}), "warp: flow shape mismatch");
    Tensor out({c, h, w});
    auto fl = std::make_shared<Tensor>(flow);
    auto sample = [&](auto&& f) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float sx = static_cast<float>(x) + flow.at(0, y, x);
                float sy = static_cast<float>(y) + flow.at(1, y, x);
                sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
                sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
                int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
                int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
                float fx = sx - static_cast<float>(x0), fy = sy - static_cast<float>(y0);
                f(y, x, y0, x0, y1, x1, fx, fy);
            }
    };
    sample([&](int y, int x, int y0, int x0, int y1, int x1, float fx, float fy) {
        for (int ci = 0; ci < c; ++ci) {
            float v00 = img->val.at(ci, y0, x0), v01 = img->val.at(ci, y0, x1);
            float v10 = img->val.at(ci, y1, x0), v11 = img->val.at(ci, y1, x1);
            out.at(ci, y, x) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                               fy * ((1 - fx) * v10 + fx * v11);
        }
    });
    Var o = g.make(std::move(out), needs(img));
    if (o->need_grad) {
        Node *in = img, *on = o;
        o->back = [in, on, fl, c, h, w]() {
            if (!in->need_grad) return;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    float sx = static_cast<float>(x) + fl->at(0, y, x);
                    float sy = static_cast<float>(y) + fl->at(1, y, x);
                    sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
                    sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
                    int x0 = static_cast<int>(std::floor(sx));
                    int y0 = static_cast<int>(std::floor(sy));
                    int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
                    float fx = sx - static_cast<float>(x0), fy = sy - static_cast<float>(y0);
                    for (int ci = 0; ci < c; ++ci) {
                        float gv = on->grad.at(ci, y, x);
                        in->grad.at(ci, y0, x0) += (1 - fy) * (1 - fx) * gv;
                        in->grad.at(ci, y0, x1) += (1 - fy) * fx * gv;
                        in->grad.at(ci, y1, x0) += fy * (1 - fx) * gv;
                        in->grad.at(ci, y1, x1) += fy * fx * gv;
                    }
                }
        };
    }
    return o;
}

Var sum_all(Graph& g, Var a) {
    double s = 0.0;
    for (float x : a->val.v) s += x;
    return unary(g, a, Tensor::scalar(static_cast<float>(s)), [](Node& o, Node& dst) {
        float gv = o.grad.v[0];
        for (float& d : dst.grad.v) d += gv;
    });
}

Var mean_all(Graph& g, Var a) {
    const long n = a->val.numel();
    double s = 0.0;
    for (float x : a->val.v) s += x;
    return unary(g, a, Tensor::scalar(static_cast<float>(s / static_cast<double>(n))),
                 [n](Node& o, Node& dst) {
                     float gv = o.grad.v[0] / static_cast<float>(n);
                     for (float& d : dst.grad.v) d += gv;
                 });
}

Var softmax_ce_mean(Graph& g, Var logits, const std::vector<int>& labels) {
    require(logits->val.shape.size() == 3, "softmax_ce: expects (classes,H,W)");
    const int c = logits->val.shape[0], h = logits->val.shape[1], w = logits->val.shape[2];
    const long hw = static_cast<long>(h) * w;
    require(static_cast<long>(labels.size()) == hw, "softmax_ce: label count mismatch");
    double loss = 0.0;
    for (long p = 0; p < hw; ++p) {
        require(labels[p] >= 0 && labels[p] < c, "softmax_ce: label out of range");
        float m = -1e30f;
        for (int ci = 0; ci < c; ++ci) m = std::max(m, logits->val.v[ci * hw + p]);
        double lse = 0.0;
        for (int ci = 0; ci < c; ++ci) lse += std::exp(logits->val.v[ci * hw + p] - m);
        loss += m + std::log(lse) - logits->val.v[labels[p] * hw + p];
    }
    auto lab = std::make_shared<std::vector<int>>(labels);
    Node* ln = logits;
    return unary(g, logits, Tensor::scalar(static_cast<float>(loss / static_cast<double>(hw))),
                 [ln, lab, c, hw](Node& o, Node& dst) {
                     float gv = o.grad.v[0] / static_cast<float>(hw);
                     for (long p = 0; p < hw; ++p) {
                         float m = -1e30f;
                         for (int ci = 0; ci < c; ++ci)
                             m = std::max(m, ln->val.v[ci * hw + p]);
                         double z = 0.0;
                         for (int ci = 0; ci < c; ++ci)
                             z += std::exp(ln->val.v[ci * hw + p] - m);
                         for (int ci = 0; ci < c; ++ci) {
                             float soft = static_cast<float>(
                                 std::exp(ln->val.v[ci * hw + p] - m) / z);
                             float onehot = ((*lab)[p] == ci) ? 1.0f : 0.0f;
                             dst.grad.v[ci * hw + p] += gv * (soft - onehot);
                         }
                     }
                 });
}

Var gram(Graph& g, Var x) {
    require(x->val.shape.size() == 3, "gram: expects CHW");
    const int c = x->val.shape[0];
    const long hw = static_cast<long>(x->val.shape[1]) * x->val.shape[2];
    const float norm = 1.0f / static_cast<float>(static_cast<long>(c) * hw);
    Tensor out({c, c});
    {
        ConstMatMap fm(x->val.v.data(), c, hw);
        MatMap gm(out.v.data(), c, c);
        gm.noalias() = fm * fm.transpose() * norm;
    }
    Node* xn = x;
    return unary(g, x, std::move(out), [xn, c, hw, norm](Node& o, Node& dst) {
        ConstMatMap fm(xn->val.v.data(), c, hw);
        ConstMatMap gg(o.grad.v.data(), c, c);
        MatMap dm(dst.grad.v.data(), c, hw);
        dm.noalias() += (gg + gg.transpose()) * fm * norm;
    });
}

Var tv_mean(Graph& g, Var x) {
    require(x->val.shape.size() == 3, "tv: expects CHW");
    const int c = x->val.shape[0], h = x->val.shape[1], w = x->val.shape[2];
    const long ne = static_cast<long>(c) * (static_cast<long>(h) * (w - 1) +
                                            static_cast<long>(h - 1) * w);
    if (ne == 0) return constant(g, Tensor::scalar(0.0f));
    double s = 0.0;
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                if (xx + 1 < w) {
                    double d = x->val.at(ci, y, xx + 1) - x->val.at(ci, y, xx);
                    s += d * d;
                }
                if (y + 1 < h) {
                    double d = x->val.at(ci, y + 1, xx) - x->val.at(ci, y, xx);
                    s += d * d;
                }
            }
    Node* xn = x;
    return unary(g, x, Tensor::scalar(static_cast<float>(s / static_cast<double>(ne))),
                 [xn, c, h, w, ne](Node& o, Node& dst) {
                     float gv = 2.0f * o.grad.v[0] / static_cast<float>(ne);
                     for (int ci = 0; ci < c; ++ci)
                         for (int y = 0; y < h; ++y)
                             for (int xx = 0; xx < w; ++xx) {
                                 if (xx + 1 < w) {
                                     float d = xn->val.at(ci, y, xx + 1) - xn->val.at(ci, y, xx);
                                     dst.grad.at(ci, y, xx + 1) += gv * d;
                                     dst.grad.at(ci, y, xx) -= gv * d;
                                 }
                                 if (y + 1 < h) {
                                     float d = xn->val.at(ci, y + 1, xx) - xn->val.at(ci, y, xx);
                                     dst.grad.at(ci, y + 1, xx) += gv * d;
                                     dst.grad.at(ci, y, xx) -= gv * d;
                                 }
                             }
                 });
}

Var mse_mean(Graph& g, Var a, Var b) {
    Var d = sub(g, a, b);
    return mean_all(g, mul(g, d, d));
}

Var l1_mean(Graph& g, Var a, Var b) {
    return mean_all(g, abs_op(g, sub(g, a, b)));
}

} // namespace ag
} // namespace shiftgan
