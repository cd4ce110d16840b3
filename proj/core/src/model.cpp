#include "ccp/model.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "ccp/errors.hpp"
#include "ccp/parallel.hpp"
#include "ccp/prng.hpp"

namespace ccp {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string layer_error(std::size_t index, const std::string& message) {
  return "layer " + std::to_string(index) + ": " + message;
}

// Column matrix of 3×3 patches: row (c·3 + ky)·3 + kx, column y·W + x.
void im2col(std::span<const double> in, const TensorShape& shape, std::vector<double>& col) {
  const int h = shape.height;
  const int w = shape.width;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  col.assign(static_cast<std::size_t>(shape.channels) * 9 * hw, 0.0);
  for (int c = 0; c < shape.channels; ++c) {
    const double* plane = in.data() + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.data() + ((c * 3 + ky) * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const int x_begin = std::max(0, 1 - kx);
          const int x_end = std::min(w, w + 1 - kx);
          for (int x = x_begin; x < x_end; ++x) {
            dst[y * w + x] = plane[iy * w + x + kx - 1];
          }
        }
      }
    }
  }
}

void col2im(std::span<const double> col, const TensorShape& shape, std::span<double> out) {
  const int h = shape.height;
  const int w = shape.width;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(out.begin(), out.end(), 0.0);
  for (int c = 0; c < shape.channels; ++c) {
    double* plane = out.data() + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col.data() + ((c * 3 + ky) * 3 + kx) * hw;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          const int x_begin = std::max(0, 1 - kx);
          const int x_end = std::min(w, w + 1 - kx);
          for (int x = x_begin; x < x_end; ++x) {
            plane[iy * w + x + kx - 1] += src[y * w + x];
          }
        }
      }
    }
  }
}

// Flat index of the window maximum feeding pooled cell (c, y, x); first
// maximum in row-major window order wins.
std::size_t pool_source(std::span<const double> in, const TensorShape& shape, int c, int y,
                        int x) {
  const std::size_t base = static_cast<std::size_t>(c) * shape.height * shape.width;
  std::size_t best = base + static_cast<std::size_t>(2 * y) * shape.width + 2 * x;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const std::size_t idx = base + static_cast<std::size_t>(2 * y + dy) * shape.width + 2 * x + dx;
      if (in[idx] > in[best]) best = idx;
    }
  }
  return best;
}

void layer_forward(const LayerInfo& layer, std::span<const double> params,
                   std::span<const double> in, std::vector<double>& out,
                   std::vector<double>& scratch) {
  out.assign(layer.out.size(), 0.0);
  std::visit(
      Overloaded{
          [&](const Conv2D& conv) {
            const auto hw = static_cast<Eigen::Index>(layer.in.height) * layer.in.width;
            const auto k = static_cast<Eigen::Index>(layer.in.channels) * 9;
            im2col(in, layer.in, scratch);
            Eigen::Map<const RowMat> weights(params.data() + layer.weight_offset,
                                             conv.out_channels, k);
            Eigen::Map<const Vec> bias(params.data() + layer.bias_offset, conv.out_channels);
            Eigen::Map<const RowMat> col(scratch.data(), k, hw);
            Eigen::Map<RowMat> result(out.data(), conv.out_channels, hw);
            result.noalias() = weights * col;
            result.colwise() += bias;
          },
          [&](const ReLU&) {
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
          },
          [&](const MaxPool2&) {
            std::size_t o = 0;
            for (int c = 0; c < layer.out.channels; ++c) {
              for (int y = 0; y < layer.out.height; ++y) {
                for (int x = 0; x < layer.out.width; ++x) {
                  out[o++] = in[pool_source(in, layer.in, c, y, x)];
                }
              }
            }
          },
          [&](const Flatten&) { std::copy(in.begin(), in.end(), out.begin()); },
          [&](const Dense& dense) {
            const auto n_in = static_cast<Eigen::Index>(layer.in.size());
            Eigen::Map<const RowMat> weights(params.data() + layer.weight_offset, dense.out_dim,
                                             n_in);
            Eigen::Map<const Vec> bias(params.data() + layer.bias_offset, dense.out_dim);
            Eigen::Map<const Vec> x(in.data(), n_in);
            Eigen::Map<Vec> y(out.data(), dense.out_dim);
            y.noalias() = weights * x;
            y += bias;
          },
          [&](const Softmax&) { out = softmax(in); },
      },
      layer.spec);
}

// Propagates `grad_out` (gradient w.r.t. the layer output) to the layer
// input, accumulating parameter gradients into `param_grads`. Softmax is
// handled by the caller together with the loss.
void layer_backward(const LayerInfo& layer, std::span<const double> params,
                    std::span<const double> in, std::span<const double> grad_out,
                    std::span<double> param_grads, std::vector<double>& grad_in,
                    std::vector<double>& scratch, bool need_grad_in) {
  grad_in.assign(layer.in.size(), 0.0);
  std::visit(
      Overloaded{
          [&](const Conv2D& conv) {
            const auto hw = static_cast<Eigen::Index>(layer.in.height) * layer.in.width;
            const auto k = static_cast<Eigen::Index>(layer.in.channels) * 9;
            im2col(in, layer.in, scratch);
            Eigen::Map<const RowMat> col(scratch.data(), k, hw);
            Eigen::Map<const RowMat> dout(grad_out.data(), conv.out_channels, hw);
            Eigen::Map<RowMat> dweights(param_grads.data() + layer.weight_offset,
                                        conv.out_channels, k);
            Eigen::Map<Vec> dbias(param_grads.data() + layer.bias_offset, conv.out_channels);
            dweights.noalias() += dout * col.transpose();
            dbias += dout.rowwise().sum();
            if (need_grad_in) {
              Eigen::Map<const RowMat> weights(params.data() + layer.weight_offset,
                                               conv.out_channels, k);
              std::vector<double> dcol(static_cast<std::size_t>(k * hw));
              Eigen::Map<RowMat>(dcol.data(), k, hw).noalias() = weights.transpose() * dout;
              col2im(dcol, layer.in, grad_in);
            }
          },
          [&](const ReLU&) {
            for (std::size_t i = 0; i < in.size(); ++i) grad_in[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
          },
          [&](const MaxPool2&) {
            std::size_t o = 0;
            for (int c = 0; c < layer.out.channels; ++c) {
              for (int y = 0; y < layer.out.height; ++y) {
                for (int x = 0; x < layer.out.width; ++x) {
                  grad_in[pool_source(in, layer.in, c, y, x)] += grad_out[o++];
                }
              }
            }
          },
          [&](const Flatten&) { std::copy(grad_out.begin(), grad_out.end(), grad_in.begin()); },
          [&](const Dense& dense) {
            const auto n_in = static_cast<Eigen::Index>(layer.in.size());
            Eigen::Map<const Vec> x(in.data(), n_in);
            Eigen::Map<const Vec> dy(grad_out.data(), dense.out_dim);
            Eigen::Map<RowMat> dweights(param_grads.data() + layer.weight_offset, dense.out_dim,
                                        n_in);
            Eigen::Map<Vec> dbias(param_grads.data() + layer.bias_offset, dense.out_dim);
            dweights.noalias() += dy * x.transpose();
            dbias += dy;
            if (need_grad_in) {
              Eigen::Map<const RowMat> weights(params.data() + layer.weight_offset,
                                               dense.out_dim, n_in);
              Eigen::Map<Vec>(grad_in.data(), n_in).noalias() = weights.transpose() * dy;
            }
          },
          [&](const Softmax&) {
            throw InvariantError("softmax backward is fused with the loss");
          },
      },
      layer.spec);
}

// Backward pass for one sample. Writes d(loss)/d(params) into param_grads
// (which must be zeroed) and returns the sample loss. When input_grad is
// non-null it receives d(loss)/d(model input).
double backward_sample(const Model& model, const SampleTrace& trace, int label,
                       std::span<double> param_grads, std::vector<double>* input_grad) {
  const auto& layers = model.layers();
  const int classes = model.num_classes();
  if (label < 0 || label >= classes) {
    throw DataError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) +
                    ")");
  }
  const std::size_t last = layers.size() - 1;
  const auto& logits = trace.layer_inputs[last];
  const auto probs = trace.probabilities();

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  const double loss = std::log(sum) + max_logit - logits[label];

  std::vector<double> grad(probs.begin(), probs.end());
  grad[label] -= 1.0;

  std::vector<double> grad_in;
  std::vector<double> scratch;
  for (std::size_t l = last; l-- > 0;) {
    const bool need_grad_in = l > 0 || input_grad != nullptr;
    layer_backward(layers[l], model.parameters(), trace.layer_inputs[l], grad, param_grads,
                   grad_in, scratch, need_grad_in);
    grad.swap(grad_in);
  }
  if (input_grad) *input_grad = std::move(grad);
  return loss;
}

}  // namespace

ModelSpec small_cnn(int side, int num_classes) {
  return {.input_height = side,
          .input_width = side,
          .layers = {Conv2D{16}, ReLU{}, MaxPool2{}, Conv2D{32}, ReLU{}, MaxPool2{}, Flatten{},
                     Dense{num_classes}, Softmax{}}};
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_height <= 0 || spec_.input_width <= 0) {
    throw DataError("model input dimensions must be positive");
  }
  if (spec_.layers.empty() || !std::holds_alternative<Softmax>(spec_.layers.back())) {
    throw DataError("model spec must end with Softmax");
  }
  TensorShape shape{kChannels, spec_.input_height, spec_.input_width, false};
  std::size_t offset = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    LayerInfo info{.spec = spec_.layers[i], .in = shape, .out = shape};
    std::visit(
        Overloaded{
            [&](const Conv2D& conv) {
              if (shape.flat) throw DataError(layer_error(i, "Conv2D after Flatten"));
              if (conv.out_channels <= 0) throw DataError(layer_error(i, "Conv2D needs out_channels > 0"));
              info.out.channels = conv.out_channels;
              info.weight_count = static_cast<std::size_t>(conv.out_channels) * shape.channels * 9;
              info.bias_count = conv.out_channels;
            },
            [&](const ReLU&) {},
            [&](const MaxPool2&) {
              if (shape.flat) throw DataError(layer_error(i, "MaxPool2 after Flatten"));
              if (shape.height < 2 || shape.width < 2) {
                throw DataError(layer_error(i, "MaxPool2 on a map smaller than 2×2"));
              }
              info.out.height = shape.height / 2;
              info.out.width = shape.width / 2;
            },
            [&](const Flatten&) {
              if (shape.flat) throw DataError(layer_error(i, "Flatten applied twice"));
              info.out = {static_cast<int>(shape.size()), 1, 1, true};
            },
            [&](const Dense& dense) {
              if (!shape.flat) throw DataError(layer_error(i, "Dense requires a preceding Flatten"));
              if (dense.out_dim <= 0) throw DataError(layer_error(i, "Dense needs out_dim > 0"));
              info.out = {dense.out_dim, 1, 1, true};
              info.weight_count = static_cast<std::size_t>(dense.out_dim) * shape.size();
              info.bias_count = dense.out_dim;
            },
            [&](const Softmax&) {
              if (i + 1 != spec_.layers.size()) throw DataError(layer_error(i, "Softmax must be terminal"));
              if (!shape.flat) throw DataError(layer_error(i, "Softmax requires a flat input"));
            },
        },
        spec_.layers[i]);
    info.weight_offset = offset;
    info.bias_offset = offset + info.weight_count;
    offset += info.weight_count + info.bias_count;
    shape = info.out;
    layers_.push_back(info);
  }
  params_.assign(offset, 0.0);
  adam_.m.assign(offset, 0.0);
  adam_.v.assign(offset, 0.0);
}

Model Model::init(ModelSpec spec, std::uint64_t seed) {
  Model model(std::move(spec));
  Rng rng = Rng::derive({.base_seed = seed, .purpose = Purpose::ModelInit});
  for (const auto& layer : model.layers_) {
    if (layer.weight_count == 0) continue;
    const std::size_t fan_in = layer.weight_count / layer.bias_count;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < layer.weight_count; ++i) {
      model.params_[layer.weight_offset + i] = rng.uniform_in(-bound, bound);
    }
  }
  return model;
}

std::vector<double> model_input(const Model& model, const Image& image) {
  if (image.height() != model.input_height() || image.width() != model.input_width()) {
    throw DataError("image is " + std::to_string(image.height()) + "x" +
                    std::to_string(image.width()) + ", model expects " +
                    std::to_string(model.input_height()) + "x" +
                    std::to_string(model.input_width()));
  }
  std::vector<double> x(image.data().begin(), image.data().end());
  for (double& v : x) v /= 255.0;
  return x;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_logit);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

SampleTrace forward_sample(const Model& model, const Image& image) {
  SampleTrace trace;
  trace.layer_inputs.reserve(model.layers().size() + 1);
  trace.layer_inputs.push_back(model_input(model, image));
  std::vector<double> scratch;
  for (const auto& layer : model.layers()) {
    std::vector<double> out;
    layer_forward(layer, model.parameters(), trace.layer_inputs.back(), out, scratch);
    trace.layer_inputs.push_back(std::move(out));
  }
  return trace;
}

BatchTrace forward_trace(const Model& model, std::span<const Image> images, int workers) {
  BatchTrace batch;
  batch.samples.resize(images.size());
  parallel_for(images.size(), workers,
               [&](std::size_t i) { batch.samples[i] = forward_sample(model, images[i]); });
  return batch;
}

ProbMatrix forward(const Model& model, std::span<const Image> images, int workers) {
  ProbMatrix probs(images.size(), static_cast<std::size_t>(model.num_classes()));
  parallel_for(images.size(), workers, [&](std::size_t i) {
    thread_local std::vector<double> current;
    thread_local std::vector<double> next;
    thread_local std::vector<double> scratch;
    current = model_input(model, images[i]);
    for (const auto& layer : model.layers()) {
      layer_forward(layer, model.parameters(), current, next, scratch);
      current.swap(next);
    }
    std::copy(current.begin(), current.end(), probs.row(i).begin());
  });
  return probs;
}

Gradients backward(const Model& model, const BatchTrace& trace, std::span<const int> labels,
                   int workers) {
  const std::size_t n = trace.samples.size();
  if (labels.size() != n) {
    throw DataError("backward: " + std::to_string(n) + " samples but " +
                    std::to_string(labels.size()) + " labels");
  }
  const std::size_t count = model.parameter_count();
  std::vector<std::vector<double>> per_sample(n);
  std::vector<double> losses(n);
  parallel_for(n, workers, [&](std::size_t i) {
    per_sample[i].assign(count, 0.0);
    losses[i] = backward_sample(model, trace.samples[i], labels[i], per_sample[i], nullptr);
  });

  Gradients result;
  result.params.assign(count, 0.0);
  if (n == 0) return result;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < count; ++j) result.params[j] += per_sample[i][j];
    result.loss += losses[i];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : result.params) g *= inv;
  result.loss *= inv;
  return result;
}

Gradients loss_and_gradients(const Model& model, std::span<const Image> images,
                             std::span<const int> labels, int workers) {
  return backward(model, forward_trace(model, images, workers), labels, workers);
}

std::vector<double> input_gradient(const Model& model, const Image& image, int label) {
  const SampleTrace trace = forward_sample(model, image);
  std::vector<double> param_grads(model.parameter_count(), 0.0);
  std::vector<double> grad;
  backward_sample(model, trace, label, param_grads, &grad);
  for (double& g : grad) g /= 255.0;
  return grad;
}

void adam_step(Model& model, std::span<const double> gradients, double learning_rate) {
  if (gradients.size() != model.params_.size()) {
    throw DataError("adam_step: gradient size " + std::to_string(gradients.size()) +
                    " does not match " + std::to_string(model.params_.size()) + " parameters");
  }
  AdamState& s = model.adam_;
  ++s.t;
  const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(s.t));
  const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    const double g = gradients[i];
    s.m[i] = kBeta1 * s.m[i] + (1.0 - kBeta1) * g;
    s.v[i] = kBeta2 * s.v[i] + (1.0 - kBeta2) * g * g;
    const double m_hat = s.m[i] / correction1;
    const double v_hat = s.v[i] / correction2;
    model.params_[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
  }
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace ccp
