#include "gld/nn.hpp"

#include <cmath>

#include "gld/error.hpp"

namespace gld {

namespace {

ad::Matrix glorot_matrix(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

}  // namespace

Mlp Mlp::glorot(int in, int hidden, int out, Rng& rng) {
  Mlp m;
  m.w1 = ad::Parameter(glorot_matrix(hidden, in, rng));
  m.b1 = ad::Parameter(ad::Matrix::Zero(hidden, 1));
  m.w2 = ad::Parameter(glorot_matrix(out, hidden, rng));
  m.b2 = ad::Parameter(ad::Matrix::Zero(out, 1));
  return m;
}

Mlp Mlp::identity(int dim) {
  Mlp m;
  m.w1 = ad::Parameter(ad::Matrix::Identity(dim, dim));
  m.b1 = ad::Parameter(ad::Matrix::Zero(dim, 1));
  m.w2 = ad::Parameter(ad::Matrix::Identity(dim, dim));
  m.b2 = ad::Parameter(ad::Matrix::Zero(dim, 1));
  return m;
}

Mlp Mlp::zeros(int in, int hidden, int out) {
  Mlp m;
  m.w1 = ad::Parameter(ad::Matrix::Zero(hidden, in));
  m.b1 = ad::Parameter(ad::Matrix::Zero(hidden, 1));
  m.w2 = ad::Parameter(ad::Matrix::Zero(out, hidden));
  m.b2 = ad::Parameter(ad::Matrix::Zero(out, 1));
  return m;
}

ad::Var Mlp::forward(ad::Tape& tape, const ad::Var& x) const {
  if (x.rows() != w1.value.cols()) {
    throw Error("MLP input has " + std::to_string(x.rows()) + " rows, expected " + std::to_string(w1.value.cols()));
  }
  const auto hidden = ad::relu(ad::add_bias(ad::matmul(tape.param(w1), x), tape.param(b1)));
  return ad::add_bias(ad::matmul(tape.param(w2), hidden), tape.param(b2));
}

void Mlp::collect(const std::string& prefix, std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".fc1.weight", &w1});
  out.push_back({prefix + ".fc1.bias", &b1});
  out.push_back({prefix + ".fc2.weight", &w2});
  out.push_back({prefix + ".fc2.bias", &b2});
}

void Adam::step(std::span<const NamedParameter> params) {
  if (moments_.empty()) {
    for (const auto& p : params) {
      moments_.emplace_back(ad::Matrix::Zero(p.param->value.rows(), p.param->value.cols()),
                            ad::Matrix::Zero(p.param->value.rows(), p.param->value.cols()));
    }
  }
  if (moments_.size() != params.size()) throw Error("Adam parameter set changed between steps");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].param;
    auto& [m, v] = moments_[i];
    if (p.grad.size() != p.value.size()) continue;
    m = beta1_ * m + (1.0 - beta1_) * p.grad;
    v = beta2_ * v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }
}

void round_to_float(ad::Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

}  // namespace gld
