// Copyright (C) 2026 The DiFoM Authors
// SPDX-License-Identifier: Apache-2.0

#include "difom/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace difom {

Parameter::Parameter(std::string name_, Tensor4 value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

void Parameter::zero_grad() {
  grad.fill(0.0f);
  grad_ready = false;
}

const Tensor4& Var::value() const { return tape_->value(*this); }

// ---------------------------------------------------------------------------
// Tape

void Tape::check_owned(const Var& v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size())
    throw std::invalid_argument("variable does not belong to this tape");
}

void Tape::check_open() const {
  if (consumed_) throw std::logic_error("tape already consumed by backward(); clear() and re-run forward");
}

Var Tape::constant(Tensor4 value) {
  check_open();
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor4 value) {
  check_open();
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  check_open();
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.param = &p;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor4 value, std::vector<Var> inputs, BackwardFn backward) {
  check_open();
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    check_owned(v);
    node.inputs.push_back(v.id_);
    node.requires_grad = node.requires_grad || nodes_[v.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  check_owned(loss);
  check_open();
  if (!nodes_[loss.id_].value.is_scalar())
    throw DimensionError("numel", "backward() requires a scalar loss, got " +
                                      nodes_[loss.id_].value.shape().str());
  consumed_ = true;
  visit_order_.clear();

  for (Node& node : nodes_) {
    if (node.requires_grad) node.grad = Tensor4(node.value.shape());
  }
  if (nodes_[loss.id_].requires_grad) nodes_[loss.id_].grad.fill(1.0f);

  std::vector<Tensor4*> input_grads;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward) continue;
    visit_order_.push_back(id);
    input_grads.clear();
    for (std::size_t in : node.inputs) {
      input_grads.push_back(nodes_[in].requires_grad ? &nodes_[in].grad : nullptr);
    }
    node.backward(node.grad, input_grads);
  }

  for (auto& [param, id] : param_nodes_) {
    if (param->trainable) {
      param->grad = nodes_[id].grad;
    } else {
      param->grad.fill(0.0f);
    }
    param->grad_ready = true;
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
  visit_order_.clear();
  consumed_ = false;
}

const Tensor4& Tape::value(const Var& v) const {
  check_owned(v);
  return nodes_[v.id_].value;
}

const Tensor4& Tape::grad(const Var& v) const {
  check_owned(v);
  const Node& node = nodes_[v.id_];
  if (!consumed_ || !node.requires_grad) {
    static thread_local Tensor4 empty;
    empty = Tensor4(node.value.shape());
    return empty;
  }
  return node.grad;
}

bool Tape::requires_grad(const Var& v) const {
  check_owned(v);
  return nodes_[v.id_].requires_grad;
}

void backward(Tape& tape, Var loss) { tape.backward(loss); }

// ---------------------------------------------------------------------------
// Operations

namespace {

Tape& same_tape(std::initializer_list<Var> vars) {
  Tape* t = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw std::invalid_argument("uninitialised variable");
    if (t && &v.tape() != t) throw std::invalid_argument("operands live on different tapes");
    t = &v.tape();
  }
  return *t;
}

// Valid output range [lo, hi) for one kernel tap along an axis.
struct Range {
  std::size_t lo, hi;
};
Range tap_range(std::size_t k, std::size_t stride, std::size_t pad, std::size_t in,
                std::size_t out) {
  // need 0 <= o*stride + k - pad < in
  long long lo = 0;
  long long off = static_cast<long long>(k) - static_cast<long long>(pad);
  if (off < 0) lo = (-off + static_cast<long long>(stride) - 1) / static_cast<long long>(stride);
  long long last = static_cast<long long>(in) - 1 - off;
  long long hi = last < 0 ? 0 : last / static_cast<long long>(stride) + 1;
  hi = std::min<long long>(hi, static_cast<long long>(out));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Var conv2d(Var input, Var weights, Var bias, std::size_t stride, std::size_t padding) {
  Tape& tape = same_tape({input, weights, bias});
  const Shape4 xs = input.shape();
  const Shape4 ws = weights.shape();
  const Shape4 bs = bias.shape();
  if (stride == 0) throw DimensionError("stride", "conv2d: stride must be positive");
  if (ws.h != ws.w) throw DimensionError("kernel", "conv2d: kernel must be square, got " + ws.str());
  if (ws.c != xs.c)
    throw DimensionError("channels", "conv2d: input has " + std::to_string(xs.c) +
                                         " channels, weights expect " + std::to_string(ws.c));
  if (bs.numel() != ws.n)
    throw DimensionError("bias", "conv2d: bias has " + std::to_string(bs.numel()) +
                                     " entries for " + std::to_string(ws.n) + " output channels");
  const std::size_t k = ws.h;
  if (xs.h + 2 * padding < k) throw DimensionError("height", "conv2d: kernel larger than padded input");
  if (xs.w + 2 * padding < k) throw DimensionError("width", "conv2d: kernel larger than padded input");
  const std::size_t ho = (xs.h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (xs.w + 2 * padding - k) / stride + 1;
  const Shape4 ys{xs.n, ws.n, ho, wo};

  const Tensor4& x = input.value();
  const Tensor4& w = weights.value();
  const Tensor4& b = bias.value();
  Tensor4 y(ys);
  std::vector<float> acc(ho * wo);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      std::fill(acc.begin(), acc.end(), b.data()[co]);
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        const float* plane = &x.data()[(n * xs.c + ci) * xs.plane()];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const Range ry = tap_range(ky, stride, padding, xs.h, ho);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const Range rx = tap_range(kx, stride, padding, xs.w, wo);
            const float wv = w.data()[((co * ws.c + ci) * k + ky) * k + kx];
            for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
              const float* __restrict row = plane + (oy * stride + ky - padding) * xs.w + kx - padding;
              float* __restrict out = &acc[oy * wo];
              if (stride == 1) {
                for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) out[ox] += wv * row[ox];
              } else {
                for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) out[ox] += wv * row[ox * stride];
              }
            }
          }
        }
      }
      float* dst = &y.data()[(n * ws.n + co) * ys.plane()];
      std::copy(acc.begin(), acc.end(), dst);
    }
  }

  auto fn = [&x, &w, xs, ws, ys, k, stride, padding](const Tensor4& g,
                                                     std::span<Tensor4* const> grads) {
    Tensor4* gx = grads[0];
    Tensor4* gw = grads[1];
    Tensor4* gb = grads[2];
    if (gb) {
      for (std::size_t co = 0; co < ws.n; ++co) {
        double s = 0.0;
        for (std::size_t n = 0; n < ys.n; ++n) {
          const float* gp = &g.data()[(n * ys.c + co) * ys.plane()];
          for (std::size_t i = 0; i < ys.plane(); ++i) s += gp[i];
        }
        gb->data()[co] += static_cast<float>(s);
      }
    }
    std::vector<float> dx;
    if (gx) dx.assign(xs.numel(), 0.0f);
    for (std::size_t co = 0; co < ws.n; ++co) {
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          const Range ry = tap_range(ky, stride, padding, xs.h, ys.h);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const Range rx = tap_range(kx, stride, padding, xs.w, ys.w);
            const std::size_t widx = ((co * ws.c + ci) * k + ky) * k + kx;
            const float wv = w.data()[widx];
            double dw = 0.0;
            for (std::size_t n = 0; n < xs.n; ++n) {
              const float* gp = &g.data()[(n * ys.c + co) * ys.plane()];
              const std::size_t xoff = (n * xs.c + ci) * xs.plane();
              for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                const std::size_t rowoff = xoff + (oy * stride + ky - padding) * xs.w + kx - padding;
                const float* grow = gp + oy * ys.w;
                if (gw) {
                  const float* xrow = &x.data()[rowoff];
                  float part = 0.0f;
                  if (stride == 1) {
#pragma omp simd reduction(+ : part)
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) part += grow[ox] * xrow[ox];
                  } else {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) part += grow[ox] * xrow[ox * stride];
                  }
                  dw += part;
                }
                if (gx) {
                  float* __restrict drow = &dx[rowoff];
                  if (stride == 1) {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) drow[ox] += wv * grow[ox];
                  } else {
                    for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) drow[ox * stride] += wv * grow[ox];
                  }
                }
              }
            }
            if (gw) gw->data()[widx] += static_cast<float>(dw);
          }
        }
      }
    }
    if (gx) {
      for (std::size_t i = 0; i < dx.size(); ++i) gx->data()[i] += dx[i];
    }
  };
  return tape.record(std::move(y), {input, weights, bias}, std::move(fn));
}

std::vector<LinearTap> linear_taps(std::size_t in_size, std::size_t out_size) {
  std::vector<LinearTap> taps(out_size);
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (std::size_t o = 0; o < out_size; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto i0 = static_cast<std::size_t>(std::floor(src));
    if (i0 > in_size - 1) i0 = in_size - 1;
    const std::size_t i1 = std::min(i0 + 1, in_size - 1);
    const double frac = src - static_cast<double>(i0);
    taps[o] = {i0, i1, 1.0 - frac, frac};
  }
  return taps;
}

Var bilinear_resize(Var input, std::size_t target_h, std::size_t target_w) {
  Tape& tape = same_tape({input});
  if (target_h == 0) throw DimensionError("height", "bilinear_resize: target height must be >= 1");
  if (target_w == 0) throw DimensionError("width", "bilinear_resize: target width must be >= 1");
  const Shape4 xs = input.shape();
  if (xs.h == 0 || xs.w == 0) throw DimensionError("height", "bilinear_resize: empty input");
  const Shape4 ys{xs.n, xs.c, target_h, target_w};
  auto ty = linear_taps(xs.h, target_h);
  auto tx = linear_taps(xs.w, target_w);
  const Tensor4& x = input.value();
  Tensor4 y(ys);
  for (std::size_t p = 0; p < xs.n * xs.c; ++p) {
    const float* src = &x.data()[p * xs.plane()];
    float* dst = &y.data()[p * ys.plane()];
    for (std::size_t oy = 0; oy < target_h; ++oy) {
      const LinearTap& a = ty[oy];
      const float* r0 = src + a.i0 * xs.w;
      const float* r1 = src + a.i1 * xs.w;
      for (std::size_t ox = 0; ox < target_w; ++ox) {
        const LinearTap& c = tx[ox];
        const double top = c.w0 * r0[c.i0] + c.w1 * r0[c.i1];
        const double bot = c.w0 * r1[c.i0] + c.w1 * r1[c.i1];
        dst[oy * target_w + ox] = static_cast<float>(a.w0 * top + a.w1 * bot);
      }
    }
  }
  auto fn = [xs, ys, ty = std::move(ty), tx = std::move(tx)](const Tensor4& g,
                                                             std::span<Tensor4* const> grads) {
    std::vector<double> dx(xs.plane());
    for (std::size_t p = 0; p < xs.n * xs.c; ++p) {
      std::fill(dx.begin(), dx.end(), 0.0);
      const float* gp = &g.data()[p * ys.plane()];
      for (std::size_t oy = 0; oy < ys.h; ++oy) {
        const LinearTap& a = ty[oy];
        for (std::size_t ox = 0; ox < ys.w; ++ox) {
          const LinearTap& c = tx[ox];
          const double gv = gp[oy * ys.w + ox];
          dx[a.i0 * xs.w + c.i0] += gv * a.w0 * c.w0;
          dx[a.i0 * xs.w + c.i1] += gv * a.w0 * c.w1;
          dx[a.i1 * xs.w + c.i0] += gv * a.w1 * c.w0;
          dx[a.i1 * xs.w + c.i1] += gv * a.w1 * c.w1;
        }
      }
      float* out = &grads[0]->data()[p * xs.plane()];
      for (std::size_t i = 0; i < dx.size(); ++i) out[i] += static_cast<float>(dx[i]);
    }
  };
  return tape.record(std::move(y), {input}, std::move(fn));
}

Var maxpool2(Var input) {
  Tape& tape = same_tape({input});
  const Shape4 xs = input.shape();
  if (xs.h < 2) throw DimensionError("height", "maxpool2: height must be >= 2");
  if (xs.w < 2) throw DimensionError("width", "maxpool2: width must be >= 2");
  const Shape4 ys{xs.n, xs.c, xs.h / 2, xs.w / 2};
  const Tensor4& x = input.value();
  Tensor4 y(ys);
  std::vector<std::size_t> argmax(ys.numel());
  for (std::size_t p = 0; p < xs.n * xs.c; ++p) {
    for (std::size_t oy = 0; oy < ys.h; ++oy) {
      for (std::size_t ox = 0; ox < ys.w; ++ox) {
        std::size_t best = p * xs.plane() + 2 * oy * xs.w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = p * xs.plane() + (2 * oy + dy) * xs.w + 2 * ox + dx;
            if (x.data()[idx] > x.data()[best]) best = idx;
          }
        }
        const std::size_t o = p * ys.plane() + oy * ys.w + ox;
        argmax[o] = best;
        y.data()[o] = x.data()[best];
      }
    }
  }
  auto fn = [argmax = std::move(argmax)](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t o = 0; o < argmax.size(); ++o) grads[0]->data()[argmax[o]] += g.data()[o];
  };
  return tape.record(std::move(y), {input}, std::move(fn));
}

Var upsample2(Var input) {
  Tape& tape = same_tape({input});
  const Shape4 xs = input.shape();
  const Shape4 ys{xs.n, xs.c, xs.h * 2, xs.w * 2};
  const Tensor4& x = input.value();
  Tensor4 y(ys);
  for (std::size_t p = 0; p < xs.n * xs.c; ++p) {
    for (std::size_t oy = 0; oy < ys.h; ++oy) {
      for (std::size_t ox = 0; ox < ys.w; ++ox) {
        y.data()[p * ys.plane() + oy * ys.w + ox] = x.data()[p * xs.plane() + (oy / 2) * xs.w + ox / 2];
      }
    }
  }
  auto fn = [xs, ys](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t p = 0; p < xs.n * xs.c; ++p) {
      for (std::size_t iy = 0; iy < xs.h; ++iy) {
        for (std::size_t ix = 0; ix < xs.w; ++ix) {
          const float* gp = &g.data()[p * ys.plane() + 2 * iy * ys.w + 2 * ix];
          const double s = static_cast<double>(gp[0]) + gp[1] + gp[ys.w] + gp[ys.w + 1];
          grads[0]->data()[p * xs.plane() + iy * xs.w + ix] += static_cast<float>(s);
        }
      }
    }
  };
  return tape.record(std::move(y), {input}, std::move(fn));
}

Var sigmoid(Var input) {
  Tape& tape = same_tape({input});
  Tensor4 y(input.shape());
  const auto xd = input.value().data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    y.data()[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(xd[i]))));
  }
  auto fn = [y](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t i = 0; i < y.numel(); ++i) {
      const double s = y.data()[i];
      grads[0]->data()[i] += static_cast<float>(g.data()[i] * s * (1.0 - s));
    }
  };
  Tensor4 out = y;
  return tape.record(std::move(out), {input}, std::move(fn));
}

Var relu(Var input) {
  Tape& tape = same_tape({input});
  const Tensor4& x = input.value();
  Tensor4 y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y.data()[i] = x.data()[i] > 0.0f ? x.data()[i] : 0.0f;
  auto fn = [&x](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x.data()[i] > 0.0f) grads[0]->data()[i] += g.data()[i];
    }
  };
  return tape.record(std::move(y), {input}, std::move(fn));
}

Var add(Var a, Var b) {
  Tape& tape = same_tape({a, b});
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor4 y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] = a.value().data()[i] + b.value().data()[i];
  auto fn = [](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (Tensor4* gi : grads) {
      if (!gi) continue;
      for (std::size_t i = 0; i < g.numel(); ++i) gi->data()[i] += g.data()[i];
    }
  };
  return tape.record(std::move(y), {a, b}, std::move(fn));
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape({a, b});
  require_same_shape(a.shape(), b.shape(), "mul");
  const Tensor4& av = a.value();
  const Tensor4& bv = b.value();
  Tensor4 y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data()[i] = av.data()[i] * bv.data()[i];
  auto fn = [&av, &bv](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t i = 0; i < g.numel(); ++i) {
      if (grads[0]) grads[0]->data()[i] += g.data()[i] * bv.data()[i];
      if (grads[1]) grads[1]->data()[i] += g.data()[i] * av.data()[i];
    }
  };
  return tape.record(std::move(y), {a, b}, std::move(fn));
}

Var scale(Var a, double factor) {
  Tape& tape = same_tape({a});
  Tensor4 y(a.shape());
  for (std::size_t i = 0; i < y.numel(); ++i)
    y.data()[i] = static_cast<float>(factor * a.value().data()[i]);
  auto fn = [factor](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t i = 0; i < g.numel(); ++i)
      grads[0]->data()[i] += static_cast<float>(factor * g.data()[i]);
  };
  return tape.record(std::move(y), {a}, std::move(fn));
}

Var concat_channels(const std::vector<Var>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("concat_channels: no inputs");
  Tape& tape = inputs.front().tape();
  const Shape4 first = inputs.front().shape();
  std::size_t channels = 0;
  for (const Var& v : inputs) {
    if (&v.tape() != &tape) throw std::invalid_argument("operands live on different tapes");
    const Shape4 s = v.shape();
    if (s.n != first.n) throw DimensionError("batch", "concat_channels: batch mismatch " + s.str() + " vs " + first.str());
    if (s.h != first.h) throw DimensionError("height", "concat_channels: height mismatch " + s.str() + " vs " + first.str());
    if (s.w != first.w) throw DimensionError("width", "concat_channels: width mismatch " + s.str() + " vs " + first.str());
    channels += s.c;
  }
  const Shape4 ys{first.n, channels, first.h, first.w};
  Tensor4 y(ys);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& v : inputs) {
    offsets.push_back(off);
    const Shape4 s = v.shape();
    for (std::size_t n = 0; n < s.n; ++n) {
      const float* src = &v.value().data()[n * s.c * s.plane()];
      std::copy(src, src + s.c * s.plane(), &y.data()[(n * channels + off) * ys.plane()]);
    }
    off += s.c;
  }
  std::vector<std::size_t> widths;
  for (const Var& v : inputs) widths.push_back(v.shape().c);
  auto fn = [ys, offsets, widths](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!grads[i]) continue;
      const std::size_t block = widths[i] * ys.plane();
      for (std::size_t n = 0; n < ys.n; ++n) {
        const float* src = &g.data()[(n * ys.c + offsets[i]) * ys.plane()];
        float* dst = &grads[i]->data()[n * block];
        for (std::size_t j = 0; j < block; ++j) dst[j] += src[j];
      }
    }
  };
  return tape.record(std::move(y), std::vector<Var>(inputs), std::move(fn));
}

Var sum(Var input) {
  Tape& tape = same_tape({input});
  double s = 0.0;
  for (float v : input.value().data()) s += v;
  auto fn = [](const Tensor4& g, std::span<Tensor4* const> grads) {
    const float gv = g.data()[0];
    for (float& v : grads[0]->data()) v += gv;
  };
  return tape.record(Tensor4::scalar(static_cast<float>(s)), {input}, std::move(fn));
}

Var mean(Var input) {
  const std::size_t n = input.shape().numel();
  if (n == 0) throw DimensionError("numel", "mean of empty tensor");
  return scale(sum(input), 1.0 / static_cast<double>(n));
}

Var weighted_sum(const std::vector<Var>& inputs, const std::vector<double>& weights) {
  if (inputs.empty()) throw std::invalid_argument("weighted_sum: no inputs");
  if (inputs.size() != weights.size()) throw std::invalid_argument("weighted_sum: weight count mismatch");
  Tape& tape = inputs.front().tape();
  const Shape4 s = inputs.front().shape();
  for (const Var& v : inputs) require_same_shape(v.shape(), s, "weighted_sum");
  std::vector<double> acc(s.numel(), 0.0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto d = inputs[k].value().data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights[k] * d[i];
  }
  Tensor4 y(s);
  for (std::size_t i = 0; i < acc.size(); ++i) y.data()[i] = static_cast<float>(acc[i]);
  auto fn = [weights](const Tensor4& g, std::span<Tensor4* const> grads) {
    for (std::size_t k = 0; k < grads.size(); ++k) {
      if (!grads[k]) continue;
      for (std::size_t i = 0; i < g.numel(); ++i)
        grads[k]->data()[i] += static_cast<float>(weights[k] * g.data()[i]);
    }
  };
  return tape.record(std::move(y), std::vector<Var>(inputs), std::move(fn));
}

}  // namespace difom
