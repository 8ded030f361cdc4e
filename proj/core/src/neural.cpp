#include "uavsim/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uavsim/error.hpp"

namespace uavsim {

using nlohmann::json;

void MlpGrads::set_zero() {
  for (auto& w : dW) w.setZero();
  for (auto& b : db) b.setZero();
}

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw Error("an MLP needs at least an input and an output layer");
  for (int s : sizes_) {
    if (s <= 0) throw Error("MLP layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
    }
    Vector b(out);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = u(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (sizes_.empty()) throw ContractViolation("MLP is uninitialised");
  if (rows != sizes_.front()) {
    throw ContractViolation("MLP input has " + std::to_string(rows) + " rows, expected " + std::to_string(sizes_.front()));
  }
}

Vector Mlp::forward(const Vector& x) const {
  check_input(x.size());
  Vector a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Vector z = weights_[l] * a + biases_[l];
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::forward_batch(const Matrix& x) const {
  check_input(x.rows());
  Matrix a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::forward_batch(const Matrix& x, Cache& cache) const {
  check_input(x.rows());
  cache.inputs.resize(weights_.size());
  cache.pre.resize(weights_.size());
  Matrix a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    cache.inputs[l] = a;
    Matrix z = weights_[l] * a;
    z.colwise() += biases_[l];
    cache.pre[l] = z;
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.dW.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.db.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& upstream, MlpGrads& grads) const {
  if (cache.inputs.size() != weights_.size()) throw Error("MLP backward: cache does not match network");
  if (upstream.rows() != sizes_.back() || upstream.cols() != cache.inputs.front().cols()) {
    throw Error("MLP backward: upstream gradient has the wrong shape");
  }
  if (grads.dW.size() != weights_.size()) grads = zero_grads();
  Matrix delta = upstream;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    grads.dW[l].noalias() += delta * cache.inputs[l].transpose();
    grads.db[l] += delta.rowwise().sum();
    delta = weights_[l].transpose() * delta;
  }
  return delta;
}

Vector Mlp::flat_params() const {
  Vector p(static_cast<Eigen::Index>(param_count()));
  Eigen::Index i = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    p.segment(i, weights_[l].size()) = Eigen::Map<const Vector>(weights_[l].data(), weights_[l].size());
    i += weights_[l].size();
    p.segment(i, biases_[l].size()) = biases_[l];
    i += biases_[l].size();
  }
  return p;
}

void Mlp::set_flat_params(const Vector& p) {
  if (p.size() != static_cast<Eigen::Index>(param_count())) throw Error("parameter vector has the wrong size");
  Eigen::Index i = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::Map<Vector>(weights_[l].data(), weights_[l].size()) = p.segment(i, weights_[l].size());
    i += weights_[l].size();
    biases_[l] = p.segment(i, biases_[l].size());
    i += biases_[l].size();
  }
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.sizes_ != b.sizes_) return false;
  for (std::size_t l = 0; l < a.weights_.size(); ++l) {
    if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
  }
  return true;
}

Adam::Adam(const Mlp& net, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    mW_.push_back(Matrix::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
    vW_.push_back(mW_.back());
    mb_.push_back(Vector::Zero(net.biases()[l].size()));
    vb_.push_back(mb_.back());
  }
}

void Adam::step(Mlp& net, const MlpGrads& grads, double lr) {
  if (grads.dW.size() != mW_.size()) throw Error("optimizer state does not match gradients");
  for (std::size_t l = 0; l < grads.dW.size(); ++l) {
    if (!grads.dW[l].allFinite() || !grads.db[l].allFinite()) {
      throw TrainingHalt("non-finite gradient in layer " + std::to_string(l));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < grads.dW.size(); ++l) {
    update(net.weights()[l], mW_[l], vW_[l], grads.dW[l]);
    update(net.biases()[l], mb_[l], vb_[l], grads.db[l]);
  }
}

namespace {

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("matrix payload size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

}  // namespace

json Adam::to_json() const {
  json j{{"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_}, {"t", t_}};
  for (std::size_t l = 0; l < mW_.size(); ++l) {
    j["mW"].push_back(matrix_to_json(mW_[l]));
    j["vW"].push_back(matrix_to_json(vW_[l]));
    j["mb"].push_back(vector_to_json(mb_[l]));
    j["vb"].push_back(vector_to_json(vb_[l]));
  }
  return j;
}

Adam Adam::from_json(const json& j) {
  Adam a;
  a.beta1_ = j.at("beta1").get<double>();
  a.beta2_ = j.at("beta2").get<double>();
  a.eps_ = j.at("eps").get<double>();
  a.t_ = j.at("t").get<long>();
  if (j.contains("mW")) {
    for (std::size_t l = 0; l < j.at("mW").size(); ++l) {
      a.mW_.push_back(matrix_from_json(j["mW"][l]));
      a.vW_.push_back(matrix_from_json(j["vW"][l]));
      a.mb_.push_back(vector_from_json(j["mb"][l]));
      a.vb_.push_back(vector_from_json(j["vb"][l]));
    }
  }
  return a;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.layer_sizes() != online.layer_sizes()) throw Error("soft_update: shape mismatch");
  for (std::size_t l = 0; l < target.layer_count(); ++l) {
    target.weights()[l] = (1.0 - tau) * target.weights()[l] + tau * online.weights()[l];
    target.biases()[l] = (1.0 - tau) * target.biases()[l] + tau * online.biases()[l];
  }
}

double gradient_check(const Mlp& net, const Vector& input, const Vector& upstream, int probes,
                      std::mt19937_64& rng, double h) {
  Mlp::Cache cache;
  const Matrix x = input;
  net.forward_batch(x, cache);
  MlpGrads g = net.zero_grads();
  const Matrix dx = net.backward(cache, upstream, g);

  Mlp probe = net;
  Vector params = net.flat_params();
  Vector analytic(params.size());
  {
    Eigen::Index i = 0;
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
      analytic.segment(i, g.dW[l].size()) = Eigen::Map<const Vector>(g.dW[l].data(), g.dW[l].size());
      i += g.dW[l].size();
      analytic.segment(i, g.db[l].size()) = g.db[l];
      i += g.db[l].size();
    }
  }
  auto f_params = [&](const Vector& p) {
    probe.set_flat_params(p);
    return probe.forward(input).dot(upstream);
  };
  auto f_input = [&](const Vector& in) { return net.forward(in).dot(upstream); };
  auto rel = [](double a, double n) {
    const double scale = std::max({std::abs(a), std::abs(n), 1e-6});
    return std::abs(a - n) / scale;
  };

  const Eigen::Index n_params = params.size();
  const Eigen::Index n_inputs = input.size();
  std::uniform_int_distribution<Eigen::Index> pick(0, n_params + n_inputs - 1);
  double worst = 0.0;
  for (int k = 0; k < probes; ++k) {
    const Eigen::Index i = pick(rng);
    double numeric;
    double exact;
    if (i < n_params) {
      Vector p = params;
      p(i) += h;
      const double up = f_params(p);
      p(i) -= 2 * h;
      const double down = f_params(p);
      numeric = (up - down) / (2 * h);
      exact = analytic(i);
    } else {
      const Eigen::Index j = i - n_params;
      Vector in = input;
      in(j) += h;
      const double up = f_input(in);
      in(j) -= 2 * h;
      const double down = f_input(in);
      numeric = (up - down) / (2 * h);
      exact = dx(j, 0);
    }
    worst = std::max(worst, rel(exact, numeric));
  }
  return worst;
}

Vector masked_softmax(const Vector& logits, std::span<const char> mask) {
  if (static_cast<Eigen::Index>(mask.size()) != logits.size()) throw ContractViolation("mask size mismatch");
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) top = std::max(top, logits(i));
  }
  if (top == -std::numeric_limits<double>::infinity()) throw ContractViolation("action mask admits nothing");
  Vector p = Vector::Zero(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      p(i) = std::exp(logits(i) - top);
      sum += p(i);
    }
  }
  return p / sum;
}

double entropy(const Vector& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) > 0.0) h -= probs(i) * std::log(probs(i));
  }
  return h;
}

json mlp_to_json(const Mlp& net) {
  json j{{"layer_sizes", net.layer_sizes()}};
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    j["weights"].push_back(matrix_to_json(net.weights()[l]));
    j["biases"].push_back(vector_to_json(net.biases()[l]));
  }
  return j;
}

Mlp mlp_from_json(const json& j) {
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  Mlp net(sizes, 0);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.weights()[l] = matrix_from_json(j.at("weights").at(l));
    net.biases()[l] = vector_from_json(j.at("biases").at(l));
    if (net.weights()[l].rows() != sizes[l + 1] || net.weights()[l].cols() != sizes[l]) {
      throw Error("checkpoint layer " + std::to_string(l) + " has the wrong shape");
    }
  }
  return net;
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream ss(s);
  ss >> rng;
  if (!ss) throw Error("corrupt RNG state in checkpoint");
  return rng;
}

}  // namespace uavsim
