// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "natres/data/dataset.hpp"
#include "natres/rng.hpp"

namespace natres::nn {

enum class ModelKind { mlp, conv2 };
enum class Activation { relu, tanh, sigmoid };

struct ConvSpec {
  int channels = 8;
  int kernel = 3;
  int stride = 1;
};

// mlp: input -> hidden_widths... -> num_classes.
// conv2: two valid-padding conv layers over HxWxC (channel-last) input, then
// one hidden dense layer (hidden_widths[0]) and the output layer.
// Dropout follows the activation of every hidden dense layer.
struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::vector<int> input_dims;  // {len} or {H, W, C}
  std::vector<int> hidden_widths;
  std::vector<ConvSpec> conv;
  Activation activation = Activation::relu;
  double dropout_rate = 0.0;
  int num_classes = 2;

  std::size_t input_len() const;
};

struct LayerShape {
  enum class Kind { dense, conv };
  Kind kind = Kind::dense;
  // Dense layers use in_c/out_c as fan-in/fan-out with unit spatial size.
  int in_h = 1, in_w = 1, in_c = 0;
  int out_h = 1, out_w = 1, out_c = 0;
  int kernel = 1, stride = 1;
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_count = 0;
  bool activated = false;
  bool dropout = false;

  std::size_t in_size() const { return static_cast<std::size_t>(in_h) * in_w * in_c; }
  std::size_t out_size() const { return static_cast<std::size_t>(out_h) * out_w * out_c; }
  std::size_t fan_in() const {
    return kind == Kind::dense ? in_size() : static_cast<std::size_t>(kernel) * kernel * in_c;
  }
};

// Throws InvalidArgument when dimensions do not chain from input to classes.
std::vector<LayerShape> plan_layers(const ModelSpec& spec);
std::size_t param_count(const ModelSpec& spec);
std::string to_string(ModelKind k);
std::string to_string(Activation a);
ModelKind parse_model_kind(const std::string& s);
Activation parse_activation(const std::string& s);

// Flat parameter vector plus the per-layer layout it was built from.
// Per layer: weights (row-major [out][fan_in]) then biases.
struct ModelParams {
  std::vector<float> values;
  std::vector<LayerShape> layers;
};

// Uniform fan-in initialization: every weight and bias of a layer is drawn
// from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

// Per-thread scratch buffers for one forward/backward pass.
struct Workspace {
  std::vector<std::vector<float>> pre;      // pre-activation output per layer
  std::vector<std::vector<float>> post;     // post-activation (post-dropout)
  std::vector<std::vector<float>> mask;     // dropout multipliers
  std::vector<std::vector<float>> patches;  // im2col rows for conv layers
  std::vector<std::vector<float>> delta;    // dLoss/d(pre) per layer
  std::vector<float> dpatch;
  std::vector<float> dinput;
};

class Network {
 public:
  explicit Network(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  std::size_t param_count() const { return param_count_; }
  std::size_t input_len() const { return input_len_; }
  int num_classes() const { return spec_.num_classes; }

  Workspace make_workspace() const;

  // Returns the logits (a view into ws). Dropout is active only when
  // dropout_rng is non-null.
  std::span<const float> forward(std::span<const float> params,
                                 std::span<const float> input, Workspace& ws,
                                 Rng* dropout_rng = nullptr) const;

  // Adds scale * dLoss/dparams to grad, given dlogits for the most recent
  // forward pass held in ws.
  void backward(std::span<const float> params, std::span<const float> input,
                std::span<const float> dlogits, float scale, Workspace& ws,
                std::span<float> grad) const;

  void check_params(std::span<const float> params) const;

 private:
  ModelSpec spec_;
  std::vector<LayerShape> layers_;
  std::size_t param_count_ = 0;
  std::size_t input_len_ = 0;
};

// Argmax with ties toward the lowest class index.
int argmax(std::span<const float> logits);

std::vector<float> predict(const ModelParams& params, const ModelSpec& spec,
                           std::span<const float> input);

// Rows of a dataset with optional replacement labels.
struct Batch {
  const data::Dataset* data = nullptr;
  std::span<const std::size_t> rows;
  std::span<const int> labels;  // empty: use the dataset labels

  std::size_t size() const { return rows.size(); }
  int label(std::size_t k) const {
    return labels.empty() ? data->label(rows[k]) : labels[k];
  }
};

struct LossGrad {
  double loss = 0.0;
  std::vector<float> grad;
};

// Mean softmax cross-entropy over the batch and its gradient. Throws
// InvalidArgument on an empty batch and NumericError on non-finite values.
LossGrad loss_and_grad(const Network& net, std::span<const float> params,
                       const Batch& batch, Workspace& ws,
                       Rng* dropout_rng = nullptr);
LossGrad loss_and_grad(const ModelParams& params, const ModelSpec& spec,
                       const Batch& batch);

}  // namespace natres::nn
