#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "asymloss/core.hpp"
#include "asymloss/losses.hpp"

namespace asymloss {

/// Affine layer; weight is row-major [out x in].
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Rectifier MLP: affine + ReLU on every hidden layer, affine to K logits.
struct MlpParams {
  std::vector<std::size_t> layer_dims;  // input, hidden..., K
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t num_classes() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Same shapes as MlpParams::layers.
struct MlpGrads {
  std::vector<DenseLayer> layers;
  double mean_loss = 0.0;
};

/// Weights ~ U(-s, s) with s = sqrt(6 / (fan_in + fan_out)), biases 0.
MlpParams init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

std::vector<double> forward(const MlpParams& params, std::span<const double> features);

/// Row-major [rows x K] logits for the selected samples (all when `rows` is empty).
std::vector<double> forward_batch(const MlpParams& params, const Dataset& data,
                                  std::span<const std::size_t> rows = {});

/// Mean-over-batch gradient of loss(softmax(logits), observed label) with
/// respect to every parameter.
MlpGrads backward(const MlpParams& params, const Dataset& data, std::span<const std::size_t> rows,
                  const LossSpec& spec);

}  // namespace asymloss
