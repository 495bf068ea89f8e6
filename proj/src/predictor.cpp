#include "laql/predictor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "laql/error.hpp"
#include "laql/rng.hpp"

namespace laql {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

struct Batch {
  Eigen::MatrixXd x;  // features x samples
  Eigen::MatrixXd t;
};

Batch to_batch(const WindowedDataset& ds, std::size_t in, std::size_t out) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  Batch b{Eigen::MatrixXd(static_cast<Eigen::Index>(in), n),
          Eigen::MatrixXd(static_cast<Eigen::Index>(out), n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& xi = ds.inputs[static_cast<std::size_t>(k)];
    const auto& ti = ds.targets[static_cast<std::size_t>(k)];
    if (xi.size() != in || ti.size() != out) {
      throw ConfigError("dataset sample shape does not match network (" + std::to_string(xi.size()) +
                        "->" + std::to_string(ti.size()) + " vs " + std::to_string(in) + "->" +
                        std::to_string(out) + ")");
    }
    b.x.col(k) = Eigen::Map<const Eigen::VectorXd>(xi.data(), static_cast<Eigen::Index>(in));
    b.t.col(k) = Eigen::Map<const Eigen::VectorXd>(ti.data(), static_cast<Eigen::Index>(out));
  }
  return b;
}

// Forward pass keeping every layer's activation (activations[0] = input).
std::vector<Eigen::MatrixXd> forward_all(const Mlp& net, const Eigen::MatrixXd& x) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(net.num_layers() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = net.weights(l) * acts.back();
    z.colwise() += net.biases(l);
    acts.push_back(l + 1 == net.num_layers() ? z : sigmoid(z));
  }
  return acts;
}

double batch_rmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& t) {
  const double n_out = static_cast<double>(y.rows());
  const Eigen::RowVectorXd per_sample = ((y - t).array().square().colwise().sum() / n_out).sqrt();
  return per_sample.mean();
}

// Gradient of (1/N) sum 0.5 ||y - t||^2 given the cached activations.
Gradients batch_gradients(const Mlp& net, const std::vector<Eigen::MatrixXd>& acts,
                          const Eigen::MatrixXd& t) {
  const std::size_t L = net.num_layers();
  const double n = static_cast<double>(t.cols());
  Gradients g;
  g.weights.resize(L);
  g.biases.resize(L);
  Eigen::MatrixXd delta = (acts[L] - t) / n;
  for (std::size_t l = L; l-- > 0;) {
    g.weights[l] = delta * acts[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      const Eigen::MatrixXd& a = acts[l];
      delta = ((net.weights(l).transpose() * delta).array() * a.array() * (1.0 - a.array())).matrix();
    }
  }
  return g;
}

// Plain batch gradient descent on layers >= first_trainable.
void descend(Mlp& net, const Batch& batch, double lr, std::size_t epochs,
             std::size_t first_trainable, std::optional<double> goal, TrainReport* report) {
  auto acts = forward_all(net, batch.x);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const Gradients g = batch_gradients(net, acts, batch.t);
    for (std::size_t l = first_trainable; l < net.num_layers(); ++l) {
      net.weights(l) -= lr * g.weights[l];
      net.biases(l) -= lr * g.biases[l];
    }
    acts = forward_all(net, batch.x);
    const double e = batch_rmse(acts.back(), batch.t);
    if (!std::isfinite(e) || e > 1e6) {
      throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch) +
                                      " (rmse " + std::to_string(e) + ")",
                                  epoch);
    }
    if (report) {
      report->epoch_rmse.push_back(e);
      if (goal && e <= *goal) {
        report->stopped_early = epoch < epochs;
        return;
      }
    }
  }
}

void fill_glorot(Eigen::MatrixXd& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
  }
}

void flatten(const Gradients& g, std::vector<double>& out) {
  out.clear();
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) out.push_back(g.weights[l](r, c));
    }
    for (Eigen::Index r = 0; r < g.biases[l].size(); ++r) out.push_back(g.biases[l](r));
  }
}

}  // namespace

Mlp Mlp::init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 3) {
    throw ConfigError("network needs input, at least one hidden and an output layer");
  }
  for (auto s : layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
  Mlp net;
  net.sizes_ = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(layer_sizes[l + 1]),
                      static_cast<Eigen::Index>(layer_sizes[l]));
    fill_glorot(w, rng);
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layer_sizes[l + 1])));
  }
  return net;
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_size()) {
    throw ConfigError("input has " + std::to_string(x.size()) + " features, network expects " +
                      std::to_string(input_size()));
  }
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::VectorXd z = weights_[l] * a + biases_[l];
    a = l + 1 == weights_.size() ? z : Eigen::VectorXd(sigmoid(z));
  }
  return a;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  const Eigen::VectorXd y =
      forward(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()))));
  return {y.data(), y.data() + y.size()};
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

std::uint64_t Mlp::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const double* p, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    feed(weights_[l].data(), weights_[l].size());
    feed(biases_[l].data(), biases_[l].size());
  }
  return h;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model snapshot " + path.string());
  for (std::size_t i = 0; i < sizes_.size(); ++i) out << (i ? " " : "") << sizes_[i];
  out << '\n';
  char buf[40];
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", w(r, c));
        out << ((r | c) ? " " : "") << buf;
      }
    }
    out << '\n';
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", biases_[l](r));
      out << (r ? " " : "") << buf;
    }
    out << '\n';
  }
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing layer sizes line");
  std::vector<std::size_t> sizes;
  {
    std::istringstream is(line);
    std::size_t s = 0;
    while (is >> s) sizes.push_back(s);
  }
  Mlp net = Mlp::init(sizes, 0);
  std::size_t line_no = 1;
  auto read_values = [&](double* dst, Eigen::Index n) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated at line " + std::to_string(line_no));
    std::istringstream is(line);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(is >> dst[i])) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": too few values");
    }
    double extra = 0.0;
    if (is >> extra) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": too many values");
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(net.weights_[l].rows(),
                                                                            net.weights_[l].cols());
    read_values(w.data(), w.size());
    net.weights_[l] = w;
    read_values(net.biases_[l].data(), net.biases_[l].size());
  }
  return net;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
}

double rmse(const std::vector<std::vector<double>>& outputs,
            const std::vector<std::vector<double>>& targets) {
  if (outputs.empty()) throw ConfigError("rmse of an empty sample set");
  if (outputs.size() != targets.size()) throw ConfigError("rmse shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& y = outputs[i];
    const auto& t = targets[i];
    if (y.size() != t.size() || y.empty()) throw ConfigError("rmse shape mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) s += (y[j] - t[j]) * (y[j] - t[j]);
    acc += std::sqrt(s / static_cast<double>(y.size()));
  }
  return acc / static_cast<double>(outputs.size());
}

Gradients backprop(const Mlp& net, std::span<const double> x, std::span<const double> target) {
  if (x.size() != net.input_size() || target.size() != net.output_size()) {
    throw ConfigError("sample shape does not match network");
  }
  const Eigen::MatrixXd xm = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd tm =
      Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
  return batch_gradients(net, forward_all(net, xm), tm);
}

namespace {

// Half squared error of the net with one parameter shifted by `shift`,
// evaluated with plain loops in extended precision so that differences of
// nearby losses keep their low-order digits.
struct ShiftedParam {
  std::size_t layer;
  bool bias;
  Eigen::Index row, col;
  long double shift;
};

long double precise_loss(const Mlp& net, std::span<const double> x, std::span<const double> target,
                         const ShiftedParam& p) {
  std::vector<long double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weights(l);
    const auto& b = net.biases(l);
    std::vector<long double> z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      long double s = b(r);
      if (l == p.layer && p.bias && r == p.row) s += p.shift;
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        long double wv = w(r, c);
        if (l == p.layer && !p.bias && r == p.row && c == p.col) wv += p.shift;
        s += wv * a[static_cast<std::size_t>(c)];
      }
      z[static_cast<std::size_t>(r)] = l + 1 < net.num_layers() ? 1.0L / (1.0L + std::exp(-s)) : s;
    }
    a = std::move(z);
  }
  long double loss = 0.0L;
  for (std::size_t j = 0; j < a.size(); ++j) loss += 0.5L * (a[j] - target[j]) * (a[j] - target[j]);
  return loss;
}

}  // namespace

Gradients numeric_gradients(const Mlp& net, std::span<const double> x,
                            std::span<const double> target, double epsilon) {
  if (x.size() != net.input_size() || target.size() != net.output_size()) {
    throw ConfigError("gradient check sample does not match the network shape");
  }
  const long double h = epsilon;
  auto central = [&](ShiftedParam p) {
    p.shift = h;
    const long double up = precise_loss(net, x, target, p);
    p.shift = -h;
    const long double down = precise_loss(net, x, target, p);
    return static_cast<double>((up - down) / (2.0L * h));
  };
  Gradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd gw(net.weights(l).rows(), net.weights(l).cols());
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) gw(r, c) = central({l, false, r, c, 0.0L});
    }
    Eigen::VectorXd gb(net.biases(l).size());
    for (Eigen::Index r = 0; r < gb.size(); ++r) gb(r) = central({l, true, r, 0, 0.0L});
    g.weights.push_back(std::move(gw));
    g.biases.push_back(std::move(gb));
  }
  return g;
}

double max_relative_error(const Gradients& analytic, const Gradients& numeric) {
  std::vector<double> a, n;
  flatten(analytic, a);
  flatten(numeric, n);
  if (a.size() != n.size()) throw ConfigError("gradient shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(1e-8, std::abs(a[i]) + std::abs(n[i]));
    worst = std::max(worst, std::abs(a[i] - n[i]) / denom);
  }
  return worst;
}

double gradient_check(const Mlp& net, std::span<const double> x, std::span<const double> target,
                      double epsilon) {
  return max_relative_error(backprop(net, x, target), numeric_gradients(net, x, target, epsilon));
}

TrainReport train(Mlp& net, const WindowedDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  const Batch batch = to_batch(dataset, net.input_size(), net.output_size());

  if (config.layerwise_pretrain && net.num_layers() > 2) {
    // Stack hidden layers one at a time; earlier layers stay frozen while the
    // new hidden layer and a fresh output head are fit.
    const auto& sizes = net.layer_sizes();
    const std::size_t hidden = sizes.size() - 2;
    Rng rng(config.rng_seed);
    for (std::size_t k = 1; k <= hidden; ++k) {
      std::vector<std::size_t> partial(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(k + 1));
      partial.push_back(sizes.back());
      Mlp stage = Mlp::init(partial, rng.next_u64());
      for (std::size_t l = 0; l + 1 < k; ++l) {
        stage.weights(l) = net.weights(l);
        stage.biases(l) = net.biases(l);
      }
      descend(stage, batch, config.learning_rate, config.epochs, k - 1, std::nullopt, nullptr);
      net.weights(k - 1) = stage.weights(k - 1);
      net.biases(k - 1) = stage.biases(k - 1);
      if (k == hidden) {
        net.weights(k) = stage.weights(k);
        net.biases(k) = stage.biases(k);
      }
    }
  }

  TrainReport report;
  report.epoch_rmse.reserve(config.epochs);
  descend(net, batch, config.learning_rate, config.epochs, 0, config.rmse_goal, &report);
  report.snapshot_id = net.fingerprint();
  return report;
}

double evaluate(const Mlp& net, const WindowedDataset& dataset) {
  if (dataset.empty()) throw ConfigError("evaluation dataset is empty");
  const Batch batch = to_batch(dataset, net.input_size(), net.output_size());
  return batch_rmse(forward_all(net, batch.x).back(), batch.t);
}

}  // namespace laql
