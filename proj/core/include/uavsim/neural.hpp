#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace uavsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct MlpGrads {
  std::vector<Matrix> dW;
  std::vector<Vector> db;

  void set_zero();
};

/// Dense network: ReLU hidden layers, linear output. Batches are column-major
/// (one column per sample).
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activations of each layer
  };

  Mlp() = default;
  /// Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t param_count() const;

  Vector forward(const Vector& x) const;
  Matrix forward_batch(const Matrix& x) const;
  Matrix forward_batch(const Matrix& x, Cache& cache) const;

  /// Gradients of sum(output .* upstream) w.r.t. parameters (accumulated into grads)
  /// and w.r.t. the input (returned).
  Matrix backward(const Cache& cache, const Matrix& upstream, MlpGrads& grads) const;
  MlpGrads zero_grads() const;

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  Vector flat_params() const;
  void set_flat_params(const Vector& p);

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<int> sizes_;
  std::vector<Matrix> weights_;  // [out x in]
  std::vector<Vector> biases_;
};

/// Adaptive-moment optimiser with bias correction. Throws TrainingHalt on non-finite
/// gradients.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Mlp& net, const MlpGrads& grads, double lr);
  long steps() const { return t_; }

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& j);

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<Matrix> mW_, vW_;
  std::vector<Vector> mb_, vb_;
};

/// target <- (1 - tau) target + tau online.
void soft_update(Mlp& target, const Mlp& online, double tau);

/// Max relative error of analytic parameter and input gradients of sum(out .* upstream)
/// against central differences with step h, over `probes` randomly chosen coordinates.
double gradient_check(const Mlp& net, const Vector& input, const Vector& upstream, int probes,
                      std::mt19937_64& rng, double h = 1e-5);

/// Softmax over allowed entries with max subtraction; masked entries get exactly 0.
/// Throws ContractViolation when nothing is allowed.
Vector masked_softmax(const Vector& logits, std::span<const char> mask);

/// -sum p ln p with 0 ln 0 = 0.
double entropy(const Vector& probs);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

std::string rng_to_string(const std::mt19937_64& rng);
std::mt19937_64 rng_from_string(const std::string& s);

}  // namespace uavsim
