#include "gld/dgm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gld/error.hpp"
#include "gld/log.hpp"
#include "gld/rng.hpp"

#include <spdlog/spdlog.h>

namespace gld {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd na = a.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd nb = b.colwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * a.transpose() * b;
  d.colwise() += na;
  d.rowwise() += nb;
  return d.cwiseMax(0.0);
}

struct KernelBlock {
  Eigen::MatrixXd value;  // k(s)
  Eigen::MatrixXd slope;  // dk/ds
};

KernelBlock kernel_block(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::vector<double>& bw,
                         bool with_slope) {
  const Eigen::MatrixXd s = squared_distances(a, b);
  KernelBlock out{Eigen::MatrixXd::Zero(s.rows(), s.cols()), {}};
  if (with_slope) out.slope = Eigen::MatrixXd::Zero(s.rows(), s.cols());
  const double inv = 1.0 / static_cast<double>(bw.size());
  for (const double r : bw) {
    const Eigen::MatrixXd e = (-s.array() / r).exp().matrix();
    out.value += inv * e;
    if (with_slope) out.slope -= (inv / r) * e;
  }
  return out;
}

void check_sets(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() == 0 || b.cols() == 0) throw Error("MMD requires two non-empty sets");
  if (a.rows() != b.rows()) throw Error("MMD sets have different dimensions");
}

Eigen::MatrixXd subsample(const Eigen::MatrixXd& m, Eigen::Index n, Rng& rng) {
  if (m.cols() == n) return m;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(m.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());
  Eigen::MatrixXd out(m.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) out.col(i) = m.col(idx[static_cast<std::size_t>(i)]);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> equalize(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                                     std::uint64_t seed) {
  if (a.cols() == 0 || b.cols() == 0) throw Error("H-divergence requires two non-empty sets");
  if (a.rows() != b.rows()) throw Error("H-divergence sets have different dimensions");
  Rng rng(seed);
  const Eigen::Index n = std::min(a.cols(), b.cols());
  return {subsample(a, n, rng), subsample(b, n, rng)};
}

}  // namespace

void KernelConfig::validate() const {
  if (r1 > r2) throw ConfigError("kernel bandwidth exponents require r1 <= r2");
  if (r2 - r1 > 60 || r1 < -60 || r2 > 60) throw ConfigError("kernel bandwidth exponents out of range");
}

std::vector<double> KernelConfig::bandwidths() const {
  validate();
  std::vector<double> out;
  for (int r = r1; r <= r2; ++r) out.push_back(std::ldexp(1.0, r));
  return out;
}

void LossWeights::validate() const {
  if (!(lambda_y >= 0.0) || !(lambda_h >= 0.0) || !(lambda_g >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (min_group_size < 1) throw ConfigError("minimum group size must be positive");
}

double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelConfig& cfg) {
  if (x.size() != y.size()) throw Error("kernel arguments have different dimensions");
  const double s = (x - y).squaredNorm();
  const auto bw = cfg.bandwidths();
  double k = 0.0;
  for (const double r : bw) k += std::exp(-s / r);
  return k / static_cast<double>(bw.size());
}

double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelConfig& cfg) {
  check_sets(a, b);
  const auto bw = cfg.bandwidths();
  const double na = static_cast<double>(a.cols());
  const double nb = static_cast<double>(b.cols());
  return kernel_block(a, a, bw, false).value.sum() / (na * na) + kernel_block(b, b, bw, false).value.sum() / (nb * nb) -
         2.0 * kernel_block(a, b, bw, false).value.sum() / (na * nb);
}

ad::Var mmd(const ad::Var& a, const ad::Var& b, const KernelConfig& cfg) {
  const Eigen::MatrixXd& x = a.value();
  const Eigen::MatrixXd& y = b.value();
  check_sets(x, y);
  const auto bw = cfg.bandwidths();
  const double nx = static_cast<double>(x.cols());
  const double ny = static_cast<double>(y.cols());
  const auto kxx = kernel_block(x, x, bw, true);
  const auto kyy = kernel_block(y, y, bw, true);
  const auto kxy = kernel_block(x, y, bw, true);

  ad::Matrix out(1, 1);
  out(0, 0) = kxx.value.sum() / (nx * nx) + kyy.value.sum() / (ny * ny) - 2.0 * kxy.value.sum() / (nx * ny);

  // d/dx_i of sum_{a,b} k(|x_a - x_b|^2) = 4 sum_j k'(s_ij) (x_i - x_j); cross terms analogous.
  const double cxx = 1.0 / (nx * nx);
  const double cyy = 1.0 / (ny * ny);
  const double cxy = -2.0 / (nx * ny);
  ad::Matrix gx = 4.0 * cxx * (x * kxx.slope.rowwise().sum().asDiagonal() - x * kxx.slope) +
                  2.0 * cxy * (x * kxy.slope.rowwise().sum().asDiagonal() - y * kxy.slope.transpose());
  ad::Matrix gy = 4.0 * cyy * (y * kyy.slope.rowwise().sum().asDiagonal() - y * kyy.slope) +
                  2.0 * cxy * (y * kxy.slope.colwise().sum().transpose().asDiagonal() - x * kxy.slope);

  return a.tape()->push(std::move(out), {a, b}, [a, b, gx = std::move(gx), gy = std::move(gy)](ad::Tape& t, const ad::Matrix& g) {
    t.accumulate(a, gx * g(0, 0));
    t.accumulate(b, gy * g(0, 0));
  });
}

MaxDiscrepancy max_pairwise_mmd(std::span<const Eigen::MatrixXd> groups, const KernelConfig& cfg,
                                std::size_t min_group_size) {
  MaxDiscrepancy best;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (static_cast<std::size_t>(groups[i].cols()) < min_group_size) continue;
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      if (static_cast<std::size_t>(groups[j].cols()) < min_group_size) continue;
      const double v = mmd(groups[i], groups[j], cfg);
      if (!best.found || v > best.value) best = {v, i, j, true};
    }
  }
  return best;
}

ad::Var max_pairwise_mmd(ad::Tape& tape, std::span<const ad::Var> groups, const KernelConfig& cfg,
                         std::size_t min_group_size) {
  std::vector<Eigen::MatrixXd> values;
  values.reserve(groups.size());
  for (const auto& g : groups) values.push_back(g.value());
  const auto best = max_pairwise_mmd(values, cfg, min_group_size);
  if (!best.found) return tape.constant(ad::Matrix::Zero(1, 1));
  return mmd(groups[best.first], groups[best.second], cfg);
}

double human_dmc_loss(const std::map<std::size_t, Eigen::MatrixXd>& groups, const KernelConfig& cfg,
                      const LossWeights& weights) {
  std::vector<Eigen::MatrixXd> sets;
  for (const auto& [domain, set] : groups) sets.push_back(set);
  const auto best = max_pairwise_mmd(sets, cfg, static_cast<std::size_t>(weights.min_group_size));
  if (!best.found) logger()->debug("human DMC: fewer than two eligible domain groups, loss is 0");
  return best.found ? best.value : 0.0;
}

double llm_dmc_loss(const std::map<GroupKey, Eigen::MatrixXd>& groups, const KernelConfig& cfg,
                    const LossWeights& weights) {
  std::vector<Eigen::MatrixXd> sets;
  for (const auto& [cell, set] : groups) sets.push_back(set);
  const auto best = max_pairwise_mmd(sets, cfg, static_cast<std::size_t>(weights.min_group_size));
  if (!best.found) logger()->debug("LLM DMC: fewer than two eligible cells, loss is 0");
  return best.found ? best.value : 0.0;
}

ClassifierParams ClassifierParams::init(int in, int hidden, Rng& rng) { return {Mlp::glorot(in, hidden, 1, rng)}; }

void ClassifierParams::collect(std::vector<NamedParameter>& out) { mlp3.collect("classifier.mlp3", out); }

ad::Var classifier_logits(ad::Tape& tape, const ad::Var& x, const ClassifierParams& params) {
  if (x.rows() != params.input_dim()) {
    throw Error("classifier input has dimension " + std::to_string(x.rows()) + ", expected " +
                std::to_string(params.input_dim()));
  }
  return params.mlp3.forward(tape, x);
}

double sigmoid(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double classify(const Eigen::VectorXd& x, const ClassifierParams& params) {
  ad::Tape tape(false);
  return sigmoid(classifier_logits(tape, tape.constant(ad::Matrix(x)), params).scalar());
}

double classification_loss(std::span<const double> probs, std::span<const int> labels, double eps) {
  if (probs.size() != labels.size()) throw Error("probabilities and labels have different lengths");
  double loss = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = std::clamp(probs[k], eps, 1.0 - eps);
    loss -= labels[k] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

double total_loss(double loss_h, double loss_g, double loss_y, const LossWeights& weights) {
  return weights.lambda_h * loss_h + weights.lambda_g * loss_g + weights.lambda_y * loss_y;
}

std::vector<Hypothesis> stump_family(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw Error("stump family needs sets of equal dimension");
  std::vector<Hypothesis> family;
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    std::vector<double> vals;
    for (Eigen::Index i = 0; i < a.cols(); ++i) vals.push_back(a(j, i));
    for (Eigen::Index i = 0; i < b.cols(); ++i) vals.push_back(b(j, i));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) thresholds.push_back(0.5 * (vals[i] + vals[i + 1]));
    thresholds.push_back(std::numeric_limits<double>::infinity());
    for (const double t : thresholds) {
      family.emplace_back([j, t](const Eigen::VectorXd& x) { return x[j] > t ? 1 : 0; });
      family.emplace_back([j, t](const Eigen::VectorXd& x) { return x[j] <= t ? 1 : 0; });
    }
  }
  return family;
}

double empirical_h_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Hypothesis> family,
                              std::uint64_t seed) {
  if (family.empty()) throw Error("empty hypothesis family");
  const auto [x, y] = equalize(a, b, seed);
  const double n = static_cast<double>(x.cols());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : family) {
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) err += h(x.col(i)) == 0 ? 1.0 : 0.0;
    for (Eigen::Index i = 0; i < y.cols(); ++i) err += h(y.col(i)) == 1 ? 1.0 : 0.0;
    best = std::min(best, err / n);
  }
  return 2.0 * (1.0 - best);
}

double empirical_h_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::uint64_t seed) {
  const auto [x, y] = equalize(a, b, seed);
  const Eigen::Index n = x.cols();
  // Sweep h(v) = [v_j > t] with t rising; error counts a-points at 0 and b-points at 1.
  // The flipped stump has error 2 - err, so each position contributes min(err, 2 - err).
  long best = n;  // constant hypotheses: error exactly N
  std::vector<std::pair<double, int>> vals(static_cast<std::size_t>(2 * n));
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      vals[static_cast<std::size_t>(i)] = {x(j, i), +1};
      vals[static_cast<std::size_t>(n + i)] = {y(j, i), -1};
    }
    std::sort(vals.begin(), vals.end());
    long err = n;
    for (std::size_t i = 0; i < vals.size();) {
      const double v = vals[i].first;
      while (i < vals.size() && vals[i].first == v) err += vals[i++].second;
      best = std::min({best, err, 2 * n - err});
    }
  }
  return 2.0 * (1.0 - static_cast<double>(best) / static_cast<double>(n));
}

}  // namespace gld
