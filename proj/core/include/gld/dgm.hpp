#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gld/autodiff.hpp"
#include "gld/corpus.hpp"
#include "gld/nn.hpp"

namespace gld {

/// Multi-Gaussian kernel bandwidths R = {2^r1, 2^(r1+1), ..., 2^r2}.
struct KernelConfig {
  int r1 = -3;
  int r2 = 1;

  void validate() const;
  std::vector<double> bandwidths() const;
};

struct LossWeights {
  double lambda_y = 0.1;
  double lambda_h = 0.2;
  double lambda_g = 0.2;
  /// Groups smaller than this are left out of the discrepancy max.
  int min_group_size = 4;

  void validate() const;
};

/// Mean over bandwidths of exp(-|x - y|^2 / r).
double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelConfig& cfg);

/// Biased (V-statistic) squared MMD between two sample sets given as columns.
double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelConfig& cfg);

/// Differentiable MMD node; both inputs are d x N column sets.
ad::Var mmd(const ad::Var& a, const ad::Var& b, const KernelConfig& cfg);

/// Largest pairwise MMD among the eligible groups and the pair attaining it.
struct MaxDiscrepancy {
  double value = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
  bool found = false;  // false when fewer than two groups are eligible
};

MaxDiscrepancy max_pairwise_mmd(std::span<const Eigen::MatrixXd> groups, const KernelConfig& cfg,
                                std::size_t min_group_size);

/// Graph version: the max is selected on values, and the gradient flows
/// through the arg-max pair only. Returns a zero constant when no pair is eligible.
ad::Var max_pairwise_mmd(ad::Tape& tape, std::span<const ad::Var> groups, const KernelConfig& cfg,
                         std::size_t min_group_size);

/// L_h: max MMD between human embedding sets of two domains (keyed by domain).
double human_dmc_loss(const std::map<std::size_t, Eigen::MatrixXd>& groups, const KernelConfig& cfg,
                      const LossWeights& weights);

/// L_g: max MMD between any two (LLM, domain) cells of LLM embeddings.
double llm_dmc_loss(const std::map<GroupKey, Eigen::MatrixXd>& groups, const KernelConfig& cfg,
                    const LossWeights& weights);

/// Classification head: sigmoid(MLP3(x)), MLP3 = in -> hidden -> 1.
struct ClassifierParams {
  Mlp mlp3;

  static ClassifierParams init(int in, int hidden, Rng& rng);
  int input_dim() const { return mlp3.in_dim(); }
  void collect(std::vector<NamedParameter>& out);
};

/// Logits (1 x N) for embedding columns.
ad::Var classifier_logits(ad::Tape& tape, const ad::Var& x, const ClassifierParams& params);

double sigmoid(double logit);

/// p(LLM-generated | x).
double classify(const Eigen::VectorXd& x, const ClassifierParams& params);

inline constexpr double kProbabilityClip = 1e-7;

/// Summed binary cross-entropy with probabilities clipped to [eps, 1 - eps].
double classification_loss(std::span<const double> probs, std::span<const int> labels, double eps = kProbabilityClip);

double total_loss(double loss_h, double loss_g, double loss_y, const LossWeights& weights);

/// A binary hypothesis h: x -> {0, 1}.
using Hypothesis = std::function<int(const Eigen::VectorXd&)>;

/// Axis-aligned threshold stumps over the pooled sample values: for every
/// dimension and every midpoint between consecutive distinct values (plus
/// both ends), both [x_j > t] and [x_j <= t]. The family is symmetric.
std::vector<Hypothesis> stump_family(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Empirical H-divergence, 2 (1 - min_h [ #{x in a: h(x)=0} + #{x in b: h(x)=1} ] / N),
/// by enumerating `family`. The larger set is subsampled (seeded) to the size of the smaller.
double empirical_h_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Hypothesis> family,
                              std::uint64_t seed = 0);

/// Same quantity over the stump family, computed by a sorted sweep per dimension.
double empirical_h_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::uint64_t seed = 0);

}  // namespace gld
