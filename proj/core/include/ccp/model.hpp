#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ccp/image.hpp"

namespace ccp {

// 3×3 kernel, stride 1, zero padding 1.
struct Conv2D {
  int out_channels = 0;
};
struct ReLU {};
// 2×2 window, stride 2. Odd trailing rows/columns are dropped.
struct MaxPool2 {};
struct Flatten {};
struct Dense {
  int out_dim = 0;
};
// Must be the final layer.
struct Softmax {};

using LayerSpec = std::variant<Conv2D, ReLU, MaxPool2, Flatten, Dense, Softmax>;

struct ModelSpec {
  int input_height = 32;
  int input_width = 32;
  std::vector<LayerSpec> layers;
};

// Conv(16)-ReLU-Pool-Conv(32)-ReLU-Pool-Flatten-Dense(num_classes)-Softmax.
ModelSpec small_cnn(int side, int num_classes);

struct TensorShape {
  int channels = 0;
  int height = 1;
  int width = 1;
  bool flat = false;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
};

struct LayerInfo {
  LayerSpec spec;
  TensorShape in;
  TensorShape out;
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_count = 0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

// A feed-forward network. All parameters live in one flat vector in
// declaration order (per layer: weights, then biases). Conv weights are
// laid out [out][in][ky][kx]; dense weights [out][in].
class Model {
 public:
  // Type-checks the spec and zero-initialises all parameters. Throws
  // DataError on an ill-typed spec.
  explicit Model(ModelSpec spec);

  // He-uniform weights on ±sqrt(6 / fan_in), zero biases, drawn from the
  // ModelInit stream of `seed` in declaration order.
  static Model init(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerInfo>& layers() const { return layers_; }
  int input_height() const { return spec_.input_height; }
  int input_width() const { return spec_.input_width; }
  int num_classes() const { return static_cast<int>(layers_.back().out.size()); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  const AdamState& adam_state() const { return adam_; }

  friend void adam_step(Model& model, std::span<const double> gradients, double learning_rate);

 private:
  ModelSpec spec_;
  std::vector<LayerInfo> layers_;
  std::vector<double> params_;
  AdamState adam_;
};

// Row-per-sample probability table.
class ProbMatrix {
 public:
  ProbMatrix() = default;
  ProbMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<double> row(std::size_t i) {
    return std::span<double>(data_).subspan(i * cols_, cols_);
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Activations of one sample, kept for the backward pass.
// layer_inputs[l] is the input of layer l; the last entry is the network
// output (class probabilities).
struct SampleTrace {
  std::vector<std::vector<double>> layer_inputs;

  std::span<const double> probabilities() const { return layer_inputs.back(); }
};

struct BatchTrace {
  std::vector<SampleTrace> samples;
};

struct Gradients {
  std::vector<double> params;
  double loss = 0.0;  // mean cross-entropy over the batch
};

// Images arrive in raw [0, 255] intensity and are divided by 255 here.
std::vector<double> model_input(const Model& model, const Image& image);

SampleTrace forward_sample(const Model& model, const Image& image);
BatchTrace forward_trace(const Model& model, std::span<const Image> images, int workers = 1);

// Class probabilities without retaining activations.
ProbMatrix forward(const Model& model, std::span<const Image> images, int workers = 1);

// Gradient of mean categorical cross-entropy with respect to every
// parameter, using the activations cached in `trace`. Per-sample gradients
// are summed in sample order, so the result is independent of `workers`.
Gradients backward(const Model& model, const BatchTrace& trace, std::span<const int> labels,
                   int workers = 1);

// forward_trace followed by backward.
Gradients loss_and_gradients(const Model& model, std::span<const Image> images,
                             std::span<const int> labels, int workers = 1);

// d(cross-entropy) / d(raw intensity) for one image, laid out like Image
// data. Includes the 1/255 input scaling.
std::vector<double> input_gradient(const Model& model, const Image& image, int label);

// Gradient of the loss with respect to the logits is p - onehot(label);
// exposed for tests.
std::vector<double> softmax(std::span<const double> logits);

// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
void adam_step(Model& model, std::span<const double> gradients, double learning_rate);

// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

}  // namespace ccp
