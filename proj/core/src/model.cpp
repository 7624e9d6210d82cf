// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#include "colora/model.hpp"

#include <algorithm>
#include <unordered_map>

#include "colora/error.hpp"
#include "colora/init.hpp"
#include "colora/rng.hpp"

namespace colora {

namespace {

void collect_params(Layer& layer, std::vector<ParamRef>& out, const std::set<std::string>& frozen) {
  auto push = [&](const std::string& suffix, Tensor* t, bool structural) {
    const std::string name = layer.name + "." + suffix;
    const bool is_frozen = structural || frozen.count(name) > 0;
    out.push_back({name, t, !is_frozen, structural});
  };
  std::visit(
      [&](auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ConvLayer>) {
          push("weight", &l.kernel.weights, false);
          if (l.kernel.bias) push("bias", &*l.kernel.bias, false);
        } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
          push("weight", &l.base.weights, true);
          if (l.base.bias) push("bias", &*l.base.bias, true);
          push("kp", &l.kp.weights, false);
          push("kd", &l.kd.weights, false);
          if (l.db) push("db", &*l.db, false);
        } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
          push("weight", &l.base.weights, true);
          if (l.base.bias) push("bias", &*l.base.bias, true);
          push("a", &l.a.weights, false);
          push("norm_scale", &l.norm_scale, false);
          push("norm_shift", &l.norm_shift, false);
        } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
          push("w0", &l.w0, true);
          push("a", &l.a, false);
          push("b", &l.b, false);
        } else if constexpr (std::is_same_v<T, DenseLayer>) {
          push("weight", &l.w, false);
          push("bias", &l.b, false);
        }
      },
      layer.impl);
}

}  // namespace

void ModelGraph::add_layer(Layer layer) {
  for (const Layer& l : layers_) {
    if (l.name == layer.name) throw ValueError("duplicate layer name: " + layer.name);
  }
  layers_.push_back(std::move(layer));
}

std::vector<ParamRef> ModelGraph::params() {
  std::vector<ParamRef> out;
  for (Layer& l : layers_) collect_params(l, out, frozen_);
  return out;
}

void ModelGraph::set_frozen(const std::string& param_name, bool frozen) {
  if (frozen) {
    frozen_.insert(param_name);
  } else {
    frozen_.erase(param_name);
  }
}

bool ModelGraph::is_frozen(const std::string& param_name) const {
  return frozen_.count(param_name) > 0;
}

void ModelGraph::freeze_backbone() {
  for (Layer& l : layers_) {
    if (l.is_head) continue;
    std::vector<ParamRef> refs;
    collect_params(l, refs, frozen_);
    for (const ParamRef& r : refs) frozen_.insert(r.name);
  }
}

void ModelGraph::unfreeze_all() { frozen_.clear(); }

std::vector<std::vector<int>> ModelGraph::infer_shapes() const {
  if (input_shape_.size() != 3) throw ShapeError("model input shape must be (H, W, C)");
  std::vector<std::vector<int>> shapes;
  std::vector<int> cur = {1, input_shape_[0], input_shape_[1], input_shape_[2]};
  for (const Layer& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            if (cur.size() != 4 || cur[3] != l.kernel.in_channels()) {
              throw ShapeError("layer " + layer.name + ": expects " +
                               std::to_string(l.kernel.in_channels()) + " channels");
            }
            const ConvGeometry g = conv_geometry(cur[1], cur[2], l.kernel.kh(), l.kernel.kw(),
                                                 l.padding, l.stride);
            cur = {cur[0], g.out_h, g.out_w, l.kernel.out_channels()};
          } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
            if (cur.size() != 4 || cur[3] != l.base.in_channels()) {
              throw ShapeError("layer " + layer.name + ": channel mismatch");
            }
            const ConvGeometry g =
                conv_geometry(cur[1], cur[2], l.base.kh(), l.base.kw(), l.padding, l.stride);
            cur = {cur[0], g.out_h, g.out_w, l.base.out_channels()};
          } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
            if (cur.size() != 4 || cur[3] != l.base.in_channels()) {
              throw ShapeError("layer " + layer.name + ": channel mismatch");
            }
            const ConvGeometry g =
                conv_geometry(cur[1], cur[2], l.base.kh(), l.base.kw(), l.padding, l.stride);
            cur = {cur[0], g.out_h, g.out_w, l.a.out_channels()};
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            // shape preserved
          } else if constexpr (std::is_same_v<T, MaxPoolLayer>) {
            if (cur.size() != 4 || cur[1] < 2 || cur[2] < 2) {
              throw ShapeError("layer " + layer.name + ": spatial dims exhausted by pooling");
            }
            cur = {cur[0], cur[1] / 2, cur[2] / 2, cur[3]};
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayer>) {
            if (cur.size() != 4) throw ShapeError("layer " + layer.name + ": expects 4-d input");
            cur = {cur[0], cur[3]};
          } else if constexpr (std::is_same_v<T, FlattenLayer>) {
            int rest = 1;
            for (size_t i = 1; i < cur.size(); ++i) rest *= cur[i];
            cur = {cur[0], rest};
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            if (cur.size() != 2 || cur[1] != l.w.dim(1)) {
              throw ShapeError("layer " + layer.name + ": dense expects width " +
                               std::to_string(l.w.dim(1)));
            }
            cur = {cur[0], l.w.dim(0)};
          } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
            if (cur.size() != 2 || cur[1] != l.w0.dim(1)) {
              throw ShapeError("layer " + layer.name + ": dense-lora expects width " +
                               std::to_string(l.w0.dim(1)));
            }
            cur = {cur[0], l.w0.dim(0)};
          }
        },
        layer.impl);
    shapes.push_back(cur);
  }
  return shapes;
}

int ModelGraph::num_classes() const {
  auto shapes = infer_shapes();
  if (shapes.empty() || shapes.back().size() != 2) {
    throw ShapeError("model does not end in a dense classifier");
  }
  return shapes.back()[1];
}

Tensor ModelGraph::forward(const Tensor& x) const {
  Tensor cur = x;
  for (const Layer& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            cur = conv2d(cur, l.kernel, l.padding, l.stride);
          } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
            cur = colora_forward(l, cur);
          } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
            cur = cnn_adapter_forward(l, cur);
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            cur = relu(cur);
          } else if constexpr (std::is_same_v<T, MaxPoolLayer>) {
            cur = max_pool2x2(cur);
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayer>) {
            cur = global_avg_pool(cur);
          } else if constexpr (std::is_same_v<T, FlattenLayer>) {
            cur = flatten_batch(cur);
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            cur = linear(cur, l.w, &l.b);
          } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
            cur = dense_lora_forward(l, cur);
          }
        },
        layer.impl);
  }
  return cur;
}

Var ModelGraph::forward_taped(GradTape& tape, const Tensor& x) const {
  // Leaves are registered lazily per layer so tape order mirrors layer order.
  auto* self = const_cast<ModelGraph*>(this);
  std::unordered_map<std::string, Var> vars;
  for (ParamRef& p : self->params()) {
    vars.emplace(p.name, tape.leaf(*p.tensor, p.name, p.trainable));
  }
  auto var_of = [&](const std::string& layer_name, const char* suffix) {
    return vars.at(layer_name + "." + suffix);
  };
  auto opt_var = [&](const std::string& layer_name, const char* suffix,
                     bool present) -> std::optional<Var> {
    if (!present) return std::nullopt;
    return vars.at(layer_name + "." + suffix);
  };

  Var cur = tape.constant(x);
  for (const Layer& layer : layers_) {
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            cur = conv2d(tape, cur, var_of(layer.name, "weight"),
                         opt_var(layer.name, "bias", l.kernel.bias.has_value()), l.padding,
                         l.stride);
          } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
            cur = colora_forward(tape, cur, var_of(layer.name, "weight"),
                                 opt_var(layer.name, "bias", l.base.bias.has_value()),
                                 var_of(layer.name, "kp"), var_of(layer.name, "kd"),
                                 opt_var(layer.name, "db", l.db.has_value()), l.order, l.padding,
                                 l.stride);
          } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
            cur = cnn_adapter_forward(tape, cur, var_of(layer.name, "weight"),
                                      opt_var(layer.name, "bias", l.base.bias.has_value()),
                                      var_of(layer.name, "a"), var_of(layer.name, "norm_scale"),
                                      var_of(layer.name, "norm_shift"), l.padding, l.stride);
          } else if constexpr (std::is_same_v<T, ReluLayer>) {
            cur = relu(tape, cur);
          } else if constexpr (std::is_same_v<T, MaxPoolLayer>) {
            cur = max_pool2x2(tape, cur);
          } else if constexpr (std::is_same_v<T, GlobalAvgPoolLayer>) {
            cur = global_avg_pool(tape, cur);
          } else if constexpr (std::is_same_v<T, FlattenLayer>) {
            cur = flatten_batch(tape, cur);
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            cur = linear(tape, cur, var_of(layer.name, "weight"),
                         std::optional<Var>(var_of(layer.name, "bias")));
          } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
            cur = dense_lora_forward(tape, cur, var_of(layer.name, "w0"), var_of(layer.name, "a"),
                                     var_of(layer.name, "b"));
          }
        },
        layer.impl);
  }
  return cur;
}

ModelGraph build_tiny_vgg(const std::vector<int>& input_shape, const std::vector<int>& widths,
                          const HeadSpec& head, uint64_t seed, bool conv_bias) {
  if (input_shape.size() != 3) throw ShapeError("input shape must be (H, W, C)");
  if (widths.empty()) throw ValueError("widths must be nonempty");
  if (head.reduce_channels < 1 || head.hidden < 1 || head.classes < 1) {
    throw ValueError("head widths must be >= 1");
  }

  ModelGraph g(input_shape);
  int in_c = input_shape[2];
  for (size_t b = 0; b < widths.size(); ++b) {
    const int w = widths[b];
    if (w < 1) throw ValueError("conv width must be >= 1");
    if (b > 0) g.add_layer({"pool" + std::to_string(b), false, MaxPoolLayer{}});
    for (int i = 1; i <= 2; ++i) {
      const std::string name = "b" + std::to_string(b + 1) + "c" + std::to_string(i);
      const int c = i == 1 ? in_c : w;
      ConvKernel k(glorot_uniform({3, 3, c, w}, 9 * c, 9 * w, derive_seed(seed, name)),
                   conv_bias ? std::optional<Tensor>(Tensor::zeros({w})) : std::nullopt);
      g.add_layer({name, false, ConvLayer{std::move(k), Padding::kSame, 1}});
      g.add_layer({name + "_relu", false, ReluLayer{}});
    }
    in_c = w;
  }

  ConvKernel reduce(glorot_uniform({1, 1, in_c, head.reduce_channels}, in_c, head.reduce_channels,
                                   derive_seed(seed, "head.reduce")),
                    Tensor::zeros({head.reduce_channels}));
  g.add_layer({"head.reduce", true, ConvLayer{std::move(reduce), Padding::kSame, 1}});
  g.add_layer({"head.gap", true, GlobalAvgPoolLayer{}});
  g.add_layer({"head.fc1", true,
               DenseLayer{glorot_uniform({head.hidden, head.reduce_channels}, head.reduce_channels,
                                         head.hidden, derive_seed(seed, "head.fc1")),
                          Tensor::zeros({head.hidden})}});
  g.add_layer({"head.fc1_relu", true, ReluLayer{}});
  g.add_layer({"head.out", true,
               DenseLayer{glorot_uniform({head.classes, head.hidden}, head.hidden, head.classes,
                                         derive_seed(seed, "head.out")),
                          Tensor::zeros({head.classes})}});
  g.infer_shapes();
  return g;
}

namespace {

void apply_policy(ModelGraph& g, FreezePolicy policy) {
  if (policy == FreezePolicy::kFreezeBackbone) {
    g.freeze_backbone();
    // Adapter parameters train even inside the frozen backbone.
    for (Layer& l : g.layers()) {
      if (std::holds_alternative<CoLoRALayer>(l.impl)) {
        g.set_frozen(l.name + ".kp", false);
        g.set_frozen(l.name + ".kd", false);
        g.set_frozen(l.name + ".db", false);
      } else if (std::holds_alternative<CnnAdapterLayer>(l.impl)) {
        g.set_frozen(l.name + ".a", false);
        g.set_frozen(l.name + ".norm_scale", false);
        g.set_frozen(l.name + ".norm_shift", false);
      } else if (std::holds_alternative<DenseLoraLayer>(l.impl)) {
        g.set_frozen(l.name + ".a", false);
        g.set_frozen(l.name + ".b", false);
      }
    }
  }
  for (Layer& l : g.layers()) {
    if (!l.is_head) continue;
    for (const ParamRef& r : g.params()) {
      if (r.name.rfind(l.name + ".", 0) == 0 && !r.structural_frozen) {
        g.set_frozen(r.name, false);
      }
    }
  }
}

void check_targets(ModelGraph& g, const std::set<std::string>& targets) {
  for (const std::string& t : targets) {
    const Layer* found = nullptr;
    for (const Layer& l : g.layers()) {
      if (l.name == t) {
        found = &l;
        break;
      }
    }
    if (!found) throw ValueError("inject: unknown layer name: " + t);
    if (std::holds_alternative<CoLoRALayer>(found->impl) ||
        std::holds_alternative<CnnAdapterLayer>(found->impl)) {
      throw ValueError("inject: layer already adapted: " + t);
    }
    if (!std::holds_alternative<ConvLayer>(found->impl)) {
      throw ValueError("inject: layer is not a conv layer: " + t);
    }
  }
}

}  // namespace

ModelGraph inject_colora(ModelGraph g, const std::set<std::string>& targets, ResidualOrder order,
                         FreezePolicy policy, uint64_t seed) {
  check_targets(g, targets);
  for (Layer& l : g.layers()) {
    if (!targets.count(l.name)) continue;
    ConvLayer conv = std::get<ConvLayer>(std::move(l.impl));
    l.impl = make_colora(std::move(conv.kernel), order, derive_seed(seed, "colora." + l.name),
                         conv.padding, conv.stride);
  }
  apply_policy(g, policy);
  return g;
}

ModelGraph inject_cnn_adapter(ModelGraph g, const std::set<std::string>& targets,
                              FreezePolicy policy, uint64_t seed) {
  check_targets(g, targets);
  for (Layer& l : g.layers()) {
    if (!targets.count(l.name)) continue;
    ConvLayer conv = std::get<ConvLayer>(std::move(l.impl));
    const int out = conv.kernel.out_channels();
    l.impl = make_cnn_adapter(std::move(conv.kernel), out, derive_seed(seed, "adapter." + l.name),
                              conv.padding, conv.stride);
  }
  apply_policy(g, policy);
  return g;
}

std::set<std::string> conv_layer_names(const ModelGraph& g) {
  std::set<std::string> out;
  for (const Layer& l : g.layers()) {
    if (std::holds_alternative<ConvLayer>(l.impl) && !l.is_head) out.insert(l.name);
  }
  return out;
}

ParamReport count_params(ModelGraph& g) {
  ParamReport report;
  for (Layer& layer : g.layers()) {
    std::vector<ParamRef> refs;
    collect_params(layer, refs, g.freeze_mask());
    if (refs.empty()) continue;

    ParamRow row;
    row.name = layer.name;
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ConvLayer>) {
            row.kind = "conv";
            row.n_original = static_cast<long>(l.kernel.kh()) * l.kernel.kw() *
                             l.kernel.in_channels() * l.kernel.out_channels();
          } else if constexpr (std::is_same_v<T, CoLoRALayer>) {
            row.kind = "colora";
            row.n_original = static_cast<long>(l.base.kh()) * l.base.kw() * l.base.in_channels() *
                             l.base.out_channels();
            row.n_adapter = static_cast<long>(l.kd.weights.size()) +
                            static_cast<long>(l.kp.weights.size()) +
                            static_cast<long>(l.db ? l.db->size() : 0);
          } else if constexpr (std::is_same_v<T, CnnAdapterLayer>) {
            row.kind = "cnn_adapter";
            row.n_original = static_cast<long>(l.base.kh()) * l.base.kw() * l.base.in_channels() *
                             l.base.out_channels();
            row.n_adapter = static_cast<long>(l.a.weights.size()) + 2;
          } else if constexpr (std::is_same_v<T, DenseLayer>) {
            row.kind = "dense";
            row.n_original = static_cast<long>(l.w.size()) + static_cast<long>(l.b.size());
          } else if constexpr (std::is_same_v<T, DenseLoraLayer>) {
            row.kind = "dense_lora";
            row.n_original = static_cast<long>(l.w0.size());
            row.n_adapter = static_cast<long>(l.a.size()) + static_cast<long>(l.b.size());
          }
        },
        layer.impl);
    for (const ParamRef& r : refs) {
      const long n = static_cast<long>(r.tensor->size());
      if (r.trainable) {
        row.trainable += n;
      } else {
        row.frozen += n;
      }
    }
    report.trainable_total += row.trainable;
    report.frozen_total += row.frozen;
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_param_report_csv(const ParamReport& report, std::ostream& os) {
  os << "layer,kind,n_original,n_adapter,trainable,frozen\n";
  for (const ParamRow& r : report.rows) {
    os << r.name << ',' << r.kind << ',' << r.n_original << ',' << r.n_adapter << ','
       << r.trainable << ',' << r.frozen << '\n';
  }
  os << "total,,,," << report.trainable_total << ',' << report.frozen_total << '\n';
}

}  // namespace colora
