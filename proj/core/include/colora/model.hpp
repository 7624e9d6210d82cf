// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "colora/adapters.hpp"
#include "colora/autograd.hpp"
#include "colora/conv.hpp"
#include "colora/tensor.hpp"

namespace colora {

struct ConvLayer {
  ConvKernel kernel;
  Padding padding = Padding::kSame;
  int stride = 1;
};

struct ReluLayer {};
struct MaxPoolLayer {};  // 2x2 window, stride 2
struct GlobalAvgPoolLayer {};
struct FlattenLayer {};

struct DenseLayer {
  Tensor w;  // (out, in)
  Tensor b;  // (out)
};

struct Layer {
  std::string name;
  bool is_head = false;
  std::variant<ConvLayer, CoLoRALayer, CnnAdapterLayer, DenseLoraLayer, ReluLayer, MaxPoolLayer,
               GlobalAvgPoolLayer, FlattenLayer, DenseLayer>
      impl;
};

/// Named reference to a parameter tensor inside a graph. `structural_frozen`
/// marks tensors whose type contract forbids training (adapter bases, LoRA
/// w0) independent of the graph's freeze mask.
struct ParamRef {
  std::string name;
  Tensor* tensor = nullptr;
  bool trainable = false;
  bool structural_frozen = false;
};

/// Classifier head: 1x1 channel reduction, global average pooling, one hidden
/// dense layer with ReLU, linear output.
struct HeadSpec {
  int reduce_channels = 0;
  int hidden = 0;
  int classes = 0;
};

/// Ordered layer list with a per-parameter freeze mask. Inference on a const
/// graph is pure; training mutates parameters through params().
class ModelGraph {
 public:
  ModelGraph() = default;
  explicit ModelGraph(std::vector<int> input_shape) : input_shape_(std::move(input_shape)) {}

  void add_layer(Layer layer);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<int>& input_shape() const { return input_shape_; }

  /// Every named parameter in layer order. Trainability reflects both the
  /// freeze mask and structural freezing.
  std::vector<ParamRef> params();

  void set_frozen(const std::string& param_name, bool frozen);
  bool is_frozen(const std::string& param_name) const;
  const std::set<std::string>& freeze_mask() const { return frozen_; }

  /// Freezes every parameter of non-head layers (structural or not).
  void freeze_backbone();
  void unfreeze_all();

  /// Per-layer output shapes for a batch-of-one walk; validates adjacency.
  /// Throws ShapeError on incompatible layers or exhausted spatial dims.
  std::vector<std::vector<int>> infer_shapes() const;

  int num_classes() const;

  /// Pure inference on a batched input (N, H, W, C) -> (N, classes).
  Tensor forward(const Tensor& x) const;

  /// Records leaves for all parameters plus the input and chains taped ops;
  /// returns the logits node.
  Var forward_taped(GradTape& tape, const Tensor& x) const;

 private:
  std::vector<Layer> layers_;
  std::vector<int> input_shape_;  // (H, W, C)
  std::set<std::string> frozen_;
};

/// Small VGG-style backbone: two 3x3 same-padding conv+ReLU per block, 2x2
/// max-pool between blocks, then the head. All parameters start trainable.
ModelGraph build_tiny_vgg(const std::vector<int>& input_shape, const std::vector<int>& widths,
                          const HeadSpec& head, uint64_t seed, bool conv_bias = true);

enum class FreezePolicy { kFreezeBackbone, kTrainAll };

/// Wraps each targeted conv layer in a CoLoRA layer with the conv as frozen
/// base. Non-targeted layers follow the policy; the head always stays
/// trainable. Throws ValueError on unknown names or double injection.
ModelGraph inject_colora(ModelGraph g, const std::set<std::string>& targets, ResidualOrder order,
                         FreezePolicy policy, uint64_t seed);

/// Same wiring with a 1x1 adapter (keeping the channel count) after each
/// targeted conv.
ModelGraph inject_cnn_adapter(ModelGraph g, const std::set<std::string>& targets,
                              FreezePolicy policy, uint64_t seed);

/// Names of all plain conv layers, the usual injection target set.
std::set<std::string> conv_layer_names(const ModelGraph& g);

struct ParamRow {
  std::string name;
  std::string kind;
  long n_original = 0;  // h*w*C*T for convolution-shaped layers
  long n_adapter = 0;   // adapter trainable count (N_C or N_A) when applicable
  long trainable = 0;
  long frozen = 0;
};

struct ParamReport {
  std::vector<ParamRow> rows;
  long trainable_total = 0;
  long frozen_total = 0;

  long total() const { return trainable_total + frozen_total; }
  double trainable_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(trainable_total) / static_cast<double>(total());
  }
};

ParamReport count_params(ModelGraph& g);

void write_param_report_csv(const ParamReport& report, std::ostream& os);

}  // namespace colora
