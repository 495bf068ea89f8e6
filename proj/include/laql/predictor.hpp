#pragma once

// Fully connected feed-forward network trained by backpropagation: sigmoid
// hidden layers, linear output layer, full-batch gradient descent on the
// squared error. Used for mobility (2 hidden layers) and popularity
// (3 hidden layers) forecasting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "laql/demand.hpp"

namespace laql {

/// Default shapes: 12 (x,y) pairs in, next (x,y) out; 5 popularity values in,
/// next value out.
inline const std::vector<std::size_t> kMobilityLayers = {24, 16, 16, 2};
inline const std::vector<std::size_t> kPopularityLayers = {5, 16, 16, 16, 1};

class Mlp {
 public:
  /// Glorot-uniform weights, zero biases. Needs at least one hidden layer.
  static Mlp init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return weights_.size(); }  // weight layers
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_parameters() const;

  Eigen::MatrixXd& weights(std::size_t l) { return weights_[l]; }
  const Eigen::MatrixXd& weights(std::size_t l) const { return weights_[l]; }
  Eigen::VectorXd& biases(std::size_t l) { return biases_[l]; }
  const Eigen::VectorXd& biases(std::size_t l) const { return biases_[l]; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  std::vector<double> forward(std::span<const double> x) const;

  bool all_finite() const;
  /// FNV-1a over the parameter bytes; identifies a weight snapshot.
  std::uint64_t fingerprint() const;

  /// Flat text: first line the layer sizes, then per layer the row-major
  /// weight values followed by the bias values, one line each.
  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  std::optional<double> rmse_goal;
  std::uint64_t rng_seed = 0;
  /// Greedy supervised stacking before full training.
  bool layerwise_pretrain = false;

  void validate() const;
};

struct TrainReport {
  /// RMSE after each epoch's update.
  std::vector<double> epoch_rmse;
  std::uint64_t snapshot_id = 0;
  bool stopped_early = false;
};

/// Gradients of 0.5 * ||y - t||^2, same shapes as the network parameters.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Mean over samples of the per-sample root-mean-square error.
double rmse(const std::vector<std::vector<double>>& outputs,
            const std::vector<std::vector<double>>& targets);

Gradients backprop(const Mlp& net, std::span<const double> x, std::span<const double> target);
Gradients numeric_gradients(const Mlp& net, std::span<const double> x,
                            std::span<const double> target, double epsilon = 1e-5);
/// max |a - n| / max(1e-8, |a| + |n|) over all parameters.
double max_relative_error(const Gradients& analytic, const Gradients& numeric);
double gradient_check(const Mlp& net, std::span<const double> x, std::span<const double> target,
                      double epsilon = 1e-5);

/// Throws TrainingDivergedError when RMSE becomes non-finite or exceeds 1e6.
TrainReport train(Mlp& net, const WindowedDataset& dataset, const TrainConfig& config);
double evaluate(const Mlp& net, const WindowedDataset& dataset);

}  // namespace laql
