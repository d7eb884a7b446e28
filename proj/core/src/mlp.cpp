#include "asymloss/mlp.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

namespace asymloss {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

ConstMatrixMap weights_of(const DenseLayer& layer) {
  return ConstMatrixMap(layer.weight.data(), static_cast<Eigen::Index>(layer.out),
                        static_cast<Eigen::Index>(layer.in));
}

RowMatrix gather(const Dataset& data, std::span<const std::size_t> rows) {
  const auto n = static_cast<Eigen::Index>(rows.empty() ? data.size() : rows.size());
  RowMatrix X(n, static_cast<Eigen::Index>(data.feature_dim));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = data.samples[rows.empty() ? static_cast<std::size_t>(i) : rows[static_cast<std::size_t>(i)]];
    if (s.features.size() != data.feature_dim) raise(ErrorKind::invalid_input, "feature width mismatch");
    for (Eigen::Index d = 0; d < X.cols(); ++d) X(i, d) = s.features[static_cast<std::size_t>(d)];
  }
  return X;
}

// Pre-activations of every layer; activations[0] is the input batch.
struct Trace {
  std::vector<RowMatrix> activations;
  std::vector<RowMatrix> pre;
};

Trace run_forward(const MlpParams& params, RowMatrix input) {
  Trace trace;
  trace.activations.push_back(std::move(input));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    RowMatrix z = trace.activations.back() * weights_of(layer).transpose();
    z.rowwise() += ConstVectorMap(layer.bias.data(), static_cast<Eigen::Index>(layer.out));
    const bool last = l + 1 == params.layers.size();
    RowMatrix a = last ? z : RowMatrix(z.cwiseMax(0.0));
    trace.pre.push_back(std::move(z));
    trace.activations.push_back(std::move(a));
  }
  return trace;
}

void check_input(const MlpParams& params, std::size_t dim) {
  if (params.layers.empty()) raise(ErrorKind::invalid_input, "network has no layers");
  if (dim != params.input_dim()) {
    raise(ErrorKind::invalid_input, "feature dimension " + std::to_string(dim) + " does not match network input " +
                                        std::to_string(params.input_dim()));
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpParams init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) raise(ErrorKind::config, "an MLP needs at least an input and an output layer");
  for (std::size_t d : layer_dims) {
    if (d == 0) raise(ErrorKind::config, "layer dimensions must be positive");
  }
  MlpParams params;
  params.layer_dims = layer_dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    DenseLayer layer;
    layer.in = layer_dims[l];
    layer.out = layer_dims[l + 1];
    const double scale = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    layer.weight.resize(layer.in * layer.out);
    for (double& w : layer.weight) w = scale * (2.0 * rng.uniform() - 1.0);
    layer.bias.assign(layer.out, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> features) {
  check_input(params, features.size());
  RowMatrix x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t d = 0; d < features.size(); ++d) x(0, static_cast<Eigen::Index>(d)) = features[d];
  const Trace trace = run_forward(params, std::move(x));
  const RowMatrix& out = trace.activations.back();
  return std::vector<double>(out.data(), out.data() + out.size());
}

std::vector<double> forward_batch(const MlpParams& params, const Dataset& data,
                                  std::span<const std::size_t> rows) {
  check_input(params, data.feature_dim);
  const Trace trace = run_forward(params, gather(data, rows));
  const RowMatrix& out = trace.activations.back();
  return std::vector<double>(out.data(), out.data() + out.size());
}

MlpGrads backward(const MlpParams& params, const Dataset& data, std::span<const std::size_t> rows,
                  const LossSpec& spec) {
  check_input(params, data.feature_dim);
  if (rows.empty()) raise(ErrorKind::invalid_input, "backward needs a non-empty batch");
  const Trace trace = run_forward(params, gather(data, rows));
  const std::size_t K = params.num_classes();
  const auto B = static_cast<Eigen::Index>(rows.size());
  const double inv_b = 1.0 / static_cast<double>(rows.size());

  const RowMatrix& logits = trace.activations.back();
  RowMatrix delta(B, static_cast<Eigen::Index>(K));
  double loss_sum = 0.0;
  std::vector<double> z(K);
  for (Eigen::Index i = 0; i < B; ++i) {
    for (std::size_t k = 0; k < K; ++k) z[k] = logits(i, static_cast<Eigen::Index>(k));
    const ClassLabel y = data.samples[rows[static_cast<std::size_t>(i)]].observed_label;
    const auto g = loss_grad_logits(spec, z, y);
    loss_sum += loss_value(spec, softmax(z), y);
    for (std::size_t k = 0; k < K; ++k) delta(i, static_cast<Eigen::Index>(k)) = g[k] * inv_b;
  }

  MlpGrads grads;
  grads.mean_loss = loss_sum * inv_b;
  grads.layers.resize(params.layers.size());
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& g = grads.layers[l];
    g.in = layer.in;
    g.out = layer.out;
    g.weight.resize(layer.weight.size());
    g.bias.resize(layer.bias.size());
    MatrixMap(g.weight.data(), static_cast<Eigen::Index>(g.out), static_cast<Eigen::Index>(g.in)) =
        delta.transpose() * trace.activations[l];
    const Eigen::RowVectorXd db = delta.colwise().sum();
    std::copy(db.data(), db.data() + db.size(), g.bias.begin());
    if (l > 0) {
      RowMatrix upstream = delta * weights_of(layer);
      delta = upstream.cwiseProduct(RowMatrix((trace.pre[l - 1].array() > 0.0).cast<double>()));
    }
  }
  return grads;
}

}  // namespace asymloss
