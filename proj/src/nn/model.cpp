// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#include "natres/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "natres/error.hpp"
#include "natres/simd/kernels.hpp"

namespace natres::nn {

std::size_t ModelSpec::input_len() const {
  std::size_t n = input_dims.empty() ? 0 : 1;
  for (const int d : input_dims) n *= static_cast<std::size_t>(std::max(d, 0));
  return n;
}

std::string to_string(ModelKind k) { return k == ModelKind::mlp ? "mlp" : "conv2"; }

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "relu";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "conv2") return ModelKind::conv2;
  throw InvalidArgument("unknown model kind '" + s + "'");
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw InvalidArgument("unknown activation '" + s + "'");
}

std::vector<LayerShape> plan_layers(const ModelSpec& spec) {
  if (spec.num_classes < 2) throw InvalidArgument("model: num_classes must be >= 2");
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
    throw InvalidArgument("model: dropout_rate must be in [0, 1)");
  }
  for (const int d : spec.input_dims) {
    if (d <= 0) throw InvalidArgument("model: input dims must be positive");
  }
  for (const int w : spec.hidden_widths) {
    if (w <= 0) throw InvalidArgument("model: hidden widths must be positive");
  }

  std::vector<LayerShape> layers;
  std::size_t offset = 0;
  auto push = [&](LayerShape l) {
    l.weight_offset = offset;
    l.weight_count = static_cast<std::size_t>(l.out_c) * l.fan_in();
    l.bias_offset = offset + l.weight_count;
    l.bias_count = static_cast<std::size_t>(l.out_c);
    offset = l.bias_offset + l.bias_count;
    layers.push_back(l);
  };
  auto dense = [&](std::size_t in, int out, bool hidden) {
    LayerShape l;
    l.kind = LayerShape::Kind::dense;
    l.in_c = static_cast<int>(in);
    l.out_c = out;
    l.activated = hidden;
    l.dropout = hidden && spec.dropout_rate > 0.0;
    push(l);
  };

  std::size_t width = 0;
  if (spec.kind == ModelKind::mlp) {
    if (spec.input_dims.empty()) throw InvalidArgument("model: missing input dims");
    if (!spec.conv.empty()) throw InvalidArgument("model: mlp takes no conv layers");
    width = spec.input_len();
    for (const int w : spec.hidden_widths) {
      dense(width, w, true);
      width = static_cast<std::size_t>(w);
    }
  } else {
    if (spec.input_dims.size() != 3) throw InvalidArgument("model: conv2 needs HxWxC input dims");
    if (spec.conv.size() != 2) throw InvalidArgument("model: conv2 needs exactly 2 conv layers");
    if (spec.hidden_widths.size() != 1) {
      throw InvalidArgument("model: conv2 needs exactly 1 hidden dense width");
    }
    int h = spec.input_dims[0];
    int w = spec.input_dims[1];
    int c = spec.input_dims[2];
    for (const ConvSpec& cs : spec.conv) {
      if (cs.channels <= 0 || cs.kernel <= 0 || cs.stride <= 0) {
        throw InvalidArgument("model: conv parameters must be positive");
      }
      if (cs.kernel > h || cs.kernel > w) {
        throw InvalidArgument("model: conv kernel larger than its input");
      }
      LayerShape l;
      l.kind = LayerShape::Kind::conv;
      l.in_h = h;
      l.in_w = w;
      l.in_c = c;
      l.kernel = cs.kernel;
      l.stride = cs.stride;
      l.out_h = (h - cs.kernel) / cs.stride + 1;
      l.out_w = (w - cs.kernel) / cs.stride + 1;
      l.out_c = cs.channels;
      l.activated = true;
      push(l);
      h = l.out_h;
      w = l.out_w;
      c = l.out_c;
    }
    width = static_cast<std::size_t>(h) * w * c;
    dense(width, spec.hidden_widths[0], true);
    width = static_cast<std::size_t>(spec.hidden_widths[0]);
  }
  dense(width, spec.num_classes, false);
  return layers;
}

std::size_t param_count(const ModelSpec& spec) {
  const auto layers = plan_layers(spec);
  return layers.back().bias_offset + layers.back().bias_count;
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams p;
  p.layers = plan_layers(spec);
  p.values.resize(p.layers.back().bias_offset + p.layers.back().bias_count);
  Rng rng(derive_seed(seed, "init"));
  for (const LayerShape& l : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in()));
    for (std::size_t i = 0; i < l.weight_count + l.bias_count; ++i) {
      p.values[l.weight_offset + i] = static_cast<float>(rng.uniform(-bound, bound));
    }
  }
  return p;
}

namespace {

inline float activate(Activation a, float x) {
  switch (a) {
    case Activation::relu: return x > 0.0f ? x : 0.0f;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0f / (1.0f + std::exp(-x));
  }
  return x;
}

// Derivative expressed through the pre- and post-activation values.
inline float activate_grad(Activation a, float pre, float post) {
  switch (a) {
    case Activation::relu: return pre > 0.0f ? 1.0f : 0.0f;
    case Activation::tanh: return 1.0f - post * post;
    case Activation::sigmoid: return post * (1.0f - post);
  }
  return 1.0f;
}

void gather_patches(const LayerShape& l, std::span<const float> in, std::vector<float>& patches) {
  const std::size_t row_len = static_cast<std::size_t>(l.kernel) * l.in_c;
  const std::size_t patch_len = row_len * l.kernel;
  patches.resize(static_cast<std::size_t>(l.out_h) * l.out_w * patch_len);
  float* dst = patches.data();
  for (int oh = 0; oh < l.out_h; ++oh) {
    for (int ow = 0; ow < l.out_w; ++ow) {
      for (int kh = 0; kh < l.kernel; ++kh) {
        const std::size_t src =
            (static_cast<std::size_t>(oh * l.stride + kh) * l.in_w + ow * l.stride) * l.in_c;
        std::copy_n(in.data() + src, row_len, dst);
        dst += row_len;
      }
    }
  }
}

}  // namespace

Network::Network(ModelSpec spec) : spec_(std::move(spec)) {
  layers_ = plan_layers(spec_);
  param_count_ = layers_.back().bias_offset + layers_.back().bias_count;
  input_len_ = spec_.input_len();
}

Workspace Network::make_workspace() const {
  Workspace ws;
  const std::size_t n = layers_.size();
  ws.pre.resize(n);
  ws.post.resize(n);
  ws.mask.resize(n);
  ws.patches.resize(n);
  ws.delta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws.pre[i].resize(layers_[i].out_size());
    ws.post[i].resize(layers_[i].out_size());
    ws.delta[i].resize(layers_[i].out_size());
  }
  return ws;
}

void Network::check_params(std::span<const float> params) const {
  if (params.size() != param_count_) {
    throw InvalidArgument("parameter vector length " + std::to_string(params.size()) +
                          " does not match model (" + std::to_string(param_count_) + ")");
  }
}

std::span<const float> Network::forward(std::span<const float> params,
                                        std::span<const float> input, Workspace& ws,
                                        Rng* dropout_rng) const {
  if (input.size() != input_len_) {
    throw InvalidArgument("input length " + std::to_string(input.size()) +
                          " does not match model input " + std::to_string(input_len_));
  }
  const auto& k = simd::active_kernels();
  std::span<const float> x = input;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerShape& l = layers_[li];
    const float* w = params.data() + l.weight_offset;
    const float* b = params.data() + l.bias_offset;
    std::vector<float>& pre = ws.pre[li];
    if (l.kind == LayerShape::Kind::dense) {
      const std::size_t fan = l.fan_in();
      for (int r = 0; r < l.out_c; ++r) {
        pre[r] = k.dot(w + static_cast<std::size_t>(r) * fan, x.data(), fan) + b[r];
      }
    } else {
      gather_patches(l, x, ws.patches[li]);
      const std::size_t patch_len = l.fan_in();
      const std::size_t positions = static_cast<std::size_t>(l.out_h) * l.out_w;
      const float* patch = ws.patches[li].data();
      for (std::size_t p = 0; p < positions; ++p, patch += patch_len) {
        for (int oc = 0; oc < l.out_c; ++oc) {
          pre[p * l.out_c + oc] =
              k.dot(w + static_cast<std::size_t>(oc) * patch_len, patch, patch_len) + b[oc];
        }
      }
    }
    std::vector<float>& post = ws.post[li];
    if (l.activated) {
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = activate(spec_.activation, pre[i]);
    } else {
      std::copy(pre.begin(), pre.end(), post.begin());
    }
    std::vector<float>& mask = ws.mask[li];
    if (l.dropout && dropout_rng != nullptr) {
      const float keep_scale = static_cast<float>(1.0 / (1.0 - spec_.dropout_rate));
      mask.resize(post.size());
      for (std::size_t i = 0; i < post.size(); ++i) {
        mask[i] = dropout_rng->bernoulli(spec_.dropout_rate) ? 0.0f : keep_scale;
        post[i] *= mask[i];
      }
    } else {
      mask.clear();
    }
    x = post;
  }
  return ws.post.back();
}

void Network::backward(std::span<const float> params, std::span<const float> input,
                       std::span<const float> dlogits, float scale, Workspace& ws,
                       std::span<float> grad) const {
  const auto& k = simd::active_kernels();
  std::copy(dlogits.begin(), dlogits.end(), ws.delta.back().begin());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerShape& l = layers_[li];
    const float* w = params.data() + l.weight_offset;
    float* gw = grad.data() + l.weight_offset;
    float* gb = grad.data() + l.bias_offset;
    const std::vector<float>& delta = ws.delta[li];
    const std::span<const float> x = li == 0 ? input : std::span<const float>(ws.post[li - 1]);
    const bool need_dx = li > 0;
    std::vector<float>& dx = ws.dinput;
    if (need_dx) dx.assign(l.in_size(), 0.0f);

    if (l.kind == LayerShape::Kind::dense) {
      const std::size_t fan = l.fan_in();
      for (int r = 0; r < l.out_c; ++r) {
        const float d = delta[r];
        if (d == 0.0f) continue;
        k.axpy(scale * d, x.data(), gw + static_cast<std::size_t>(r) * fan, fan);
        gb[r] += scale * d;
        if (need_dx) k.axpy(d, w + static_cast<std::size_t>(r) * fan, dx.data(), fan);
      }
    } else {
      const std::size_t patch_len = l.fan_in();
      const std::size_t row_len = static_cast<std::size_t>(l.kernel) * l.in_c;
      const std::size_t positions = static_cast<std::size_t>(l.out_h) * l.out_w;
      const float* patch = ws.patches[li].data();
      ws.dpatch.resize(patch_len);
      for (std::size_t p = 0; p < positions; ++p, patch += patch_len) {
        if (need_dx) std::fill(ws.dpatch.begin(), ws.dpatch.end(), 0.0f);
        bool any = false;
        for (int oc = 0; oc < l.out_c; ++oc) {
          const float d = delta[p * l.out_c + oc];
          if (d == 0.0f) continue;
          any = true;
          k.axpy(scale * d, patch, gw + static_cast<std::size_t>(oc) * patch_len, patch_len);
          gb[oc] += scale * d;
          if (need_dx) {
            k.axpy(d, w + static_cast<std::size_t>(oc) * patch_len, ws.dpatch.data(), patch_len);
          }
        }
        if (need_dx && any) {
          const int oh = static_cast<int>(p) / l.out_w;
          const int ow = static_cast<int>(p) % l.out_w;
          for (int kh = 0; kh < l.kernel; ++kh) {
            const std::size_t dst =
                (static_cast<std::size_t>(oh * l.stride + kh) * l.in_w + ow * l.stride) * l.in_c;
            const float* src = ws.dpatch.data() + static_cast<std::size_t>(kh) * row_len;
            for (std::size_t i = 0; i < row_len; ++i) dx[dst + i] += src[i];
          }
        }
      }
    }

    if (need_dx) {
      const LayerShape& prev = layers_[li - 1];
      const std::vector<float>& mask = ws.mask[li - 1];
      std::vector<float>& prev_delta = ws.delta[li - 1];
      const std::vector<float>& prev_pre = ws.pre[li - 1];
      const std::vector<float>& prev_post = ws.post[li - 1];
      for (std::size_t i = 0; i < prev_delta.size(); ++i) {
        float g = dx[i];
        float post = prev_post[i];
        if (!mask.empty()) {
          // post holds the masked value; recover the raw activation.
          if (mask[i] == 0.0f) {
            prev_delta[i] = 0.0f;
            continue;
          }
          g *= mask[i];
          post /= mask[i];
        }
        prev_delta[i] = prev.activated ? g * activate_grad(spec_.activation, prev_pre[i], post) : g;
      }
    }
  }
}

int argmax(std::span<const float> logits) {
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<float> predict(const ModelParams& params, const ModelSpec& spec,
                           std::span<const float> input) {
  const Network net(spec);
  net.check_params(params.values);
  Workspace ws = net.make_workspace();
  const auto logits = net.forward(params.values, input, ws);
  for (const float v : logits) {
    if (!std::isfinite(v)) throw NumericError("predict: non-finite logit");
  }
  return {logits.begin(), logits.end()};
}

LossGrad loss_and_grad(const Network& net, std::span<const float> params,
                       const Batch& batch, Workspace& ws, Rng* dropout_rng) {
  if (batch.size() == 0) throw InvalidArgument("loss_and_grad: empty batch");
  net.check_params(params);
  LossGrad out;
  out.grad.assign(net.param_count(), 0.0f);
  const auto classes = static_cast<std::size_t>(net.num_classes());
  std::vector<float> dlogits(classes);
  std::vector<double> prob(classes);
  const float inv_b = 1.0f / static_cast<float>(batch.size());
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto input = batch.data->row(batch.rows[k]);
    const auto logits = net.forward(params, input, ws, dropout_rng);
    const int y = batch.label(k);
    double mx = logits[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, static_cast<double>(logits[c]));
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      prob[c] = std::exp(static_cast<double>(logits[c]) - mx);
      denom += prob[c];
    }
    const double log_z = mx + std::log(denom);
    const double loss = log_z - static_cast<double>(logits[static_cast<std::size_t>(y)]);
    if (!std::isfinite(loss)) throw NumericError("loss_and_grad: non-finite loss");
    total += loss;
    for (std::size_t c = 0; c < classes; ++c) {
      dlogits[c] = static_cast<float>(prob[c] / denom) - (static_cast<int>(c) == y ? 1.0f : 0.0f);
    }
    net.backward(params, input, dlogits, inv_b, ws, out.grad);
  }
  out.loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(simd::sum_sq(out.grad))) {
    throw NumericError("loss_and_grad: non-finite gradient");
  }
  return out;
}

LossGrad loss_and_grad(const ModelParams& params, const ModelSpec& spec, const Batch& batch) {
  const Network net(spec);
  Workspace ws = net.make_workspace();
  return loss_and_grad(net, params.values, batch, ws);
}

}  // namespace natres::nn
