// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "colora/error.hpp"

namespace colora {

Var GradTape::leaf(Tensor value, std::string name, bool trainable) {
  Node n;
  n.value = std::move(value);
  n.name = std::move(name);
  n.trainable = trainable;
  n.requires_grad = trainable;
  nodes_.push_back(std::move(n));
  return {size() - 1, this};
}

Var GradTape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {size() - 1, this};
}

Var GradTape::record(Tensor value, std::vector<int> parents, BackwardFn fn, double scalar64,
                     bool has_scalar64) {
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(fn);
  n.scalar64 = scalar64;
  n.has_scalar64 = has_scalar64;
  for (int p : n.parents) {
    if (nodes_[static_cast<size_t>(p)].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  nodes_.push_back(std::move(n));
  return {size() - 1, this};
}

int GradTape::check(const Var& v) const {
  if (v.tape != this || v.node < 0 || v.node >= size()) {
    throw ValueError("variable is not on this tape");
  }
  return v.node;
}

const Tensor& GradTape::value(const Var& v) const { return nodes_[static_cast<size_t>(check(v))].value; }

const Tensor& GradTape::value(int node) const { return nodes_[static_cast<size_t>(node)].value; }

double GradTape::scalar(const Var& v) const {
  const Node& n = nodes_[static_cast<size_t>(check(v))];
  if (n.has_scalar64) return n.scalar64;
  if (n.value.size() != 1) throw ValueError("scalar() on non-scalar node");
  return n.value[0];
}

bool GradTape::requires_grad(int node) const {
  return nodes_[static_cast<size_t>(node)].requires_grad;
}

std::vector<double>* GradTape::grad_target(int node) {
  Node& n = nodes_[static_cast<size_t>(node)];
  if (!n.requires_grad) return nullptr;
  auto& buf = grads_[static_cast<size_t>(node)];
  if (buf.empty()) buf.assign(n.value.size(), 0.0);
  return &buf;
}

std::map<std::string, Tensor> GradTape::backward(const Var& loss) {
  const int root = check(loss);
  const Node& root_node = nodes_[static_cast<size_t>(root)];
  if (root_node.value.size() != 1) {
    throw ValueError("backward requires a scalar loss, got shape " + root_node.value.shape_str());
  }

  grads_.assign(nodes_.size(), {});
  grads_[static_cast<size_t>(root)].assign(1, 1.0);

  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    auto& g = grads_[static_cast<size_t>(i)];
    if (g.empty() || !n.backward || !n.requires_grad) continue;
    n.backward(*this, n.parents, g);
  }

  std::map<std::string, Tensor> out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.trainable) continue;
    std::vector<float> g32(n.value.size(), 0.0f);
    const auto& g = grads_[i];
    for (size_t j = 0; j < g.size(); ++j) g32[j] = static_cast<float>(g[j]);
    out.emplace(n.name, Tensor::from_data_unchecked(n.value.shape(), std::move(g32)));
  }
  grads_.clear();
  return out;
}

// ---- Taped ops -------------------------------------------------------------

namespace {

int pcheck(GradTape& t, const Var& v) {
  if (v.tape != &t || v.node < 0 || v.node >= t.size()) {
    throw ValueError("variable is not on this tape");
  }
  return v.node;
}

}  // namespace

Var conv2d(GradTape& t, Var x, Var w, std::optional<Var> bias, Padding padding, int stride) {
  const int xi = pcheck(t, x), wi = pcheck(t, w);
  const int bi = bias ? pcheck(t, *bias) : -1;
  ConvKernel k(t.value(wi), bi >= 0 ? std::optional<Tensor>(t.value(bi)) : std::nullopt);
  Tensor y = conv2d(t.value(xi), k, padding, stride);
  std::vector<int> parents = {xi, wi};
  if (bi >= 0) parents.push_back(bi);
  return t.record(
      std::move(y), std::move(parents),
      [padding, stride](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
        const Tensor& xv = tape.value(ps[0]);
        ConvKernel kv(tape.value(ps[1]),
                      ps.size() > 2 ? std::optional<Tensor>(tape.value(ps[2])) : std::nullopt);
        auto* gx = tape.grad_target(ps[0]);
        auto* gk = tape.grad_target(ps[1]);
        auto* gb = ps.size() > 2 ? tape.grad_target(ps[2]) : nullptr;
        conv2d_backward(xv, kv, padding, stride, gy, gx, gk, gb);
      });
}

Var depthwise_conv2d(GradTape& t, Var x, Var w, Padding padding, int stride) {
  const int xi = pcheck(t, x), wi = pcheck(t, w);
  Tensor y = depthwise_conv2d(t.value(xi), DepthwiseKernel(t.value(wi)), padding, stride);
  return t.record(
      std::move(y), {xi, wi},
      [padding, stride](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
        const Tensor& xv = tape.value(ps[0]);
        DepthwiseKernel kv(tape.value(ps[1]));
        depthwise_conv2d_backward(xv, kv, padding, stride, gy, tape.grad_target(ps[0]),
                                  tape.grad_target(ps[1]));
      });
}

Var pointwise_conv2d(GradTape& t, Var x, Var w) {
  const int xi = pcheck(t, x), wi = pcheck(t, w);
  Tensor y = pointwise_conv2d(t.value(xi), PointwiseKernel(t.value(wi)));
  return t.record(std::move(y), {xi, wi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    const Tensor& xv = tape.value(ps[0]);
                    PointwiseKernel kv(tape.value(ps[1]));
                    pointwise_conv2d_backward(xv, kv, gy, tape.grad_target(ps[0]),
                                              tape.grad_target(ps[1]));
                  });
}

Var add(GradTape& t, Var a, Var b) {
  const int ai = pcheck(t, a), bi = pcheck(t, b);
  const Tensor& av = t.value(ai);
  const Tensor& bv = t.value(bi);
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  std::vector<float> y(av.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  return t.record(Tensor::from_data_unchecked(av.shape(), std::move(y)), {ai, bi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    for (int side = 0; side < 2; ++side) {
                      if (auto* g = tape.grad_target(ps[static_cast<size_t>(side)])) {
                        for (size_t i = 0; i < gy.size(); ++i) (*g)[i] += gy[i];
                      }
                    }
                  });
}

Var add_channel_bias(GradTape& t, Var x, Var bias) {
  const int xi = pcheck(t, x), bi = pcheck(t, bias);
  Tensor y = add_channel_bias(t.value(xi), t.value(bi));
  return t.record(std::move(y), {xi, bi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    const size_t c = tape.value(ps[1]).size();
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
                    }
                    if (auto* gb = tape.grad_target(ps[1])) {
                      for (size_t i = 0; i < gy.size(); ++i) (*gb)[i % c] += gy[i];
                    }
                  });
}

Var relu(GradTape& t, Var x) {
  const int xi = pcheck(t, x);
  Tensor y = relu(t.value(xi));
  return t.record(std::move(y), {xi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      const Tensor& xv = tape.value(ps[0]);
                      for (size_t i = 0; i < gy.size(); ++i) {
                        if (xv[i] > 0.0f) (*gx)[i] += gy[i];
                      }
                    }
                  });
}

namespace {

struct PoolResult {
  Tensor out;
  std::vector<size_t> argmax;  // flat input index per output element
};

PoolResult max_pool2x2_impl(const Tensor& x) {
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) {
    throw ShapeError("max_pool2x2 input must be rank 3 or 4, got " + x.shape_str());
  }
  const int n = batched ? x.dim(0) : 1;
  const int h = x.dim(batched ? 1 : 0), w = x.dim(batched ? 2 : 1), c = x.dim(batched ? 3 : 2);
  if (h < 2 || w < 2) {
    throw ShapeError("max_pool2x2: spatial dims exhausted, input " + x.shape_str());
  }
  const int oh = h / 2, ow = w / 2;
  PoolResult r;
  r.out = Tensor::zeros(batched ? std::vector<int>{n, oh, ow, c} : std::vector<int>{oh, ow, c});
  r.argmax.resize(r.out.size());
  const float* xp = x.raw();
  float* op = r.out.raw();
  size_t o = 0;
  for (int b = 0; b < n; ++b) {
    const size_t nb = static_cast<size_t>(b) * h * w * c;
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        for (int k = 0; k < c; ++k, ++o) {
          size_t best = nb + ((static_cast<size_t>(2 * i) * w) + 2 * j) * c + static_cast<size_t>(k);
          float bv = xp[best];
          for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
              const size_t idx = nb + ((static_cast<size_t>(2 * i + di) * w) + 2 * j + dj) * c +
                                 static_cast<size_t>(k);
              if (xp[idx] > bv) {
                bv = xp[idx];
                best = idx;
              }
            }
          }
          op[o] = bv;
          r.argmax[o] = best;
        }
      }
    }
  }
  return r;
}

}  // namespace

Var max_pool2x2(GradTape& t, Var x) {
  const int xi = pcheck(t, x);
  PoolResult r = max_pool2x2_impl(t.value(xi));
  return t.record(std::move(r.out), {xi},
                  [argmax = std::move(r.argmax)](GradTape& tape, const std::vector<int>& ps,
                                                 std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gy.size(); ++i) (*gx)[argmax[i]] += gy[i];
                    }
                  });
}

Var global_avg_pool(GradTape& t, Var x) {
  const int xi = pcheck(t, x);
  Tensor y = global_avg_pool(t.value(xi));
  return t.record(std::move(y), {xi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      const Tensor& xv = tape.value(ps[0]);
                      const int h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
                      const double inv = 1.0 / (static_cast<double>(h) * w);
                      const size_t pix = static_cast<size_t>(h) * w;
                      for (size_t nidx = 0; nidx < gy.size() / static_cast<size_t>(c); ++nidx) {
                        for (size_t p = 0; p < pix; ++p) {
                          for (int k = 0; k < c; ++k) {
                            (*gx)[(nidx * pix + p) * static_cast<size_t>(c) + static_cast<size_t>(k)] +=
                                gy[nidx * static_cast<size_t>(c) + static_cast<size_t>(k)] * inv;
                          }
                        }
                      }
                    }
                  });
}

Var flatten_batch(GradTape& t, Var x) {
  const int xi = pcheck(t, x);
  Tensor y = flatten_batch(t.value(xi));
  return t.record(std::move(y), {xi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
                    }
                  });
}

Var linear(GradTape& t, Var x, Var w, std::optional<Var> bias) {
  const int xi = pcheck(t, x), wi = pcheck(t, w);
  const int bi = bias ? pcheck(t, *bias) : -1;
  Tensor y = linear(t.value(xi), t.value(wi), bi >= 0 ? &t.value(bi) : nullptr);
  std::vector<int> parents = {xi, wi};
  if (bi >= 0) parents.push_back(bi);
  return t.record(
      std::move(y), std::move(parents),
      [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
        const Tensor& xv = tape.value(ps[0]);
        const Tensor& wv = tape.value(ps[1]);
        const int n = xv.dim(0), in = xv.dim(1), out = wv.dim(0);
        auto* gx = tape.grad_target(ps[0]);
        auto* gw = tape.grad_target(ps[1]);
        auto* gb = ps.size() > 2 ? tape.grad_target(ps[2]) : nullptr;
        for (int b = 0; b < n; ++b) {
          const double* gyr = gy.data() + static_cast<size_t>(b) * out;
          const float* xr = xv.raw() + static_cast<size_t>(b) * in;
          for (int o = 0; o < out; ++o) {
            const double go = gyr[o];
            if (gb) (*gb)[static_cast<size_t>(o)] += go;
            const float* wr = wv.raw() + static_cast<size_t>(o) * in;
            if (gw) {
              double* gwr = gw->data() + static_cast<size_t>(o) * in;
              for (int i = 0; i < in; ++i) gwr[i] += go * xr[i];
            }
            if (gx) {
              double* gxr = gx->data() + static_cast<size_t>(b) * in;
              for (int i = 0; i < in; ++i) gxr[i] += go * wr[i];
            }
          }
        }
      });
}

Var scalar_affine(GradTape& t, Var x, Var scale, Var shift) {
  const int xi = pcheck(t, x), si = pcheck(t, scale), hi = pcheck(t, shift);
  if (t.value(si).size() != 1 || t.value(hi).size() != 1) {
    throw ShapeError("scalar_affine expects 1-element scale and shift");
  }
  Tensor y = scalar_affine(t.value(xi), t.value(si)[0], t.value(hi)[0]);
  return t.record(std::move(y), {xi, si, hi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    const Tensor& xv = tape.value(ps[0]);
                    const double s = tape.value(ps[1])[0];
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * s;
                    }
                    if (auto* gs = tape.grad_target(ps[1])) {
                      double acc = 0.0;
                      for (size_t i = 0; i < gy.size(); ++i) acc += gy[i] * xv[i];
                      (*gs)[0] += acc;
                    }
                    if (auto* gh = tape.grad_target(ps[2])) {
                      double acc = 0.0;
                      for (size_t i = 0; i < gy.size(); ++i) acc += gy[i];
                      (*gh)[0] += acc;
                    }
                  });
}

Var softmax_cross_entropy(GradTape& t, Var logits, std::vector<int> labels) {
  const int li = pcheck(t, logits);
  const Tensor& lv = t.value(li);
  if (lv.rank() != 2) throw ShapeError("softmax_cross_entropy expects (N, K) logits");
  const int n = lv.dim(0), k = lv.dim(1);
  if (static_cast<size_t>(n) != labels.size()) {
    throw ShapeError("softmax_cross_entropy: batch size vs label count mismatch");
  }
  for (int y : labels) {
    if (y < 0 || y >= k) throw ValueError("label out of range: " + std::to_string(y));
  }

  std::vector<double> probs(static_cast<size_t>(n) * k);
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const float* row = lv.raw() + static_cast<size_t>(b) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z);
    for (int j = 0; j < k; ++j) {
      probs[static_cast<size_t>(b) * k + j] = std::exp(row[j] - mx) / z;
    }
    loss -= (row[labels[static_cast<size_t>(b)]] - mx - logz);
  }
  loss /= n;

  Tensor out = Tensor::from_data_unchecked({1}, {static_cast<float>(loss)});
  return t.record(std::move(out), {li},
                  [probs = std::move(probs), labels = std::move(labels),
                   n, k](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      const double g = gy[0] / n;
                      for (int b = 0; b < n; ++b) {
                        for (int j = 0; j < k; ++j) {
                          const size_t idx = static_cast<size_t>(b) * k + j;
                          double d = probs[idx];
                          if (j == labels[static_cast<size_t>(b)]) d -= 1.0;
                          (*gx)[idx] += g * d;
                        }
                      }
                    }
                  },
                  loss, true);
}

Var sum(GradTape& t, Var x) {
  const int xi = pcheck(t, x);
  const Tensor& xv = t.value(xi);
  double s = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) s += xv[i];
  Tensor out = Tensor::from_data_unchecked({1}, {static_cast<float>(s)});
  return t.record(std::move(out), {xi},
                  [](GradTape& tape, const std::vector<int>& ps, std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gx->size(); ++i) (*gx)[i] += gy[0];
                    }
                  },
                  s, true);
}

Var weighted_sum(GradTape& t, Var x, Tensor weights) {
  const int xi = pcheck(t, x);
  const Tensor& xv = t.value(xi);
  if (xv.shape() != weights.shape()) {
    throw ShapeError("weighted_sum: shape mismatch");
  }
  double s = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) s += static_cast<double>(xv[i]) * weights[i];
  Tensor out = Tensor::from_data_unchecked({1}, {static_cast<float>(s)});
  return t.record(std::move(out), {xi},
                  [w = std::move(weights)](GradTape& tape, const std::vector<int>& ps,
                                           std::span<const double> gy) {
                    if (auto* gx = tape.grad_target(ps[0])) {
                      for (size_t i = 0; i < gx->size(); ++i) (*gx)[i] += gy[0] * w[i];
                    }
                  },
                  s, true);
}

// ---- Pure counterparts ------------------------------------------------------

Tensor relu(const Tensor& x) {
  std::vector<float> y(x.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return Tensor::from_data_unchecked(x.shape(), std::move(y));
}

Tensor max_pool2x2(const Tensor& x) { return max_pool2x2_impl(x).out; }

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool expects (N, H, W, C), got " + x.shape_str());
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  Tensor out = Tensor::zeros({n, c});
  const double inv = 1.0 / (static_cast<double>(h) * w);
  for (int b = 0; b < n; ++b) {
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) acc += x.at(b, i, j, k);
      }
      out.at(b, k) = static_cast<float>(acc * inv);
    }
  }
  return out;
}

Tensor flatten_batch(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("flatten_batch expects rank >= 2, got " + x.shape_str());
  const int n = x.dim(0);
  const int rest = static_cast<int>(x.size()) / n;
  std::vector<float> y(x.data().begin(), x.data().end());
  return Tensor::from_data_unchecked({n, rest}, std::move(y));
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rank() != 1) throw ShapeError("bias must be rank 1");
  const int c = bias.dim(0);
  if (x.dim(x.rank() - 1) != c) {
    throw ShapeError("add_channel_bias: trailing dim " + std::to_string(x.dim(x.rank() - 1)) +
                     " vs bias " + std::to_string(c));
  }
  std::vector<float> y(x.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] + bias[i % static_cast<size_t>(c)];
  return Tensor::from_data_unchecked(x.shape(), std::move(y));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (x.rank() != 2 || w.rank() != 2) throw ShapeError("linear expects (N, in) x and (out, in) w");
  const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
  if (w.dim(1) != in) {
    throw ShapeError("linear: input width " + std::to_string(in) + " vs weight " + w.shape_str());
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != out)) {
    throw ShapeError("linear: bad bias shape");
  }
  Tensor y = Tensor::zeros({n, out});
  for (int b = 0; b < n; ++b) {
    const float* xr = x.raw() + static_cast<size_t>(b) * in;
    for (int o = 0; o < out; ++o) {
      const float* wr = w.raw() + static_cast<size_t>(o) * in;
      double acc = bias ? (*bias)[static_cast<size_t>(o)] : 0.0;
      for (int i = 0; i < in; ++i) acc += static_cast<double>(xr[i]) * wr[i];
      y.at(b, o) = static_cast<float>(acc);
    }
  }
  return y;
}

Tensor scalar_affine(const Tensor& x, float scale, float shift) {
  std::vector<float> y(x.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] = scale * x[i] + shift;
  return Tensor::from_data_unchecked(x.shape(), std::move(y));
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax_rows expects (N, K)");
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor out = Tensor::zeros({n, k});
  for (int b = 0; b < n; ++b) {
    const float* row = logits.raw() + static_cast<size_t>(b) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (int j = 0; j < k; ++j) {
      out.at(b, j) = static_cast<float>(std::exp(row[j] - mx) / z);
    }
  }
  return out;
}

double cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy expects (N, K)");
  const int n = logits.dim(0), k = logits.dim(1);
  if (static_cast<size_t>(n) != labels.size()) throw ShapeError("cross_entropy: label count mismatch");
  double loss = 0.0;
  for (int b = 0; b < n; ++b) {
    const int y = labels[static_cast<size_t>(b)];
    if (y < 0 || y >= k) throw ValueError("label out of range: " + std::to_string(y));
    const float* row = logits.raw() + static_cast<size_t>(b) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    loss -= (row[y] - mx - std::log(z));
  }
  return loss / n;
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.rank() != 2) throw ShapeError("argmax_rows expects (N, K)");
  const int n = scores.dim(0), k = scores.dim(1);
  std::vector<int> out(static_cast<size_t>(n));
  for (int b = 0; b < n; ++b) {
    const float* row = scores.raw() + static_cast<size_t>(b) * k;
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[static_cast<size_t>(b)] = best;
  }
  return out;
}

double sum(const Tensor& x) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i];
  return s;
}

}  // namespace colora
