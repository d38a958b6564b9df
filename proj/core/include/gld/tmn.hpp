#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gld/autodiff.hpp"
#include "gld/nn.hpp"

namespace gld {

enum class BankKind { author, domain };

/// Q memory units (columns, d x Q) describing one author or one domain.
struct MemoryBank {
  Eigen::MatrixXd units;
  BankKind kind = BankKind::author;
  std::size_t entity = 0;

  int size() const { return static_cast<int>(units.cols()); }
  int dim() const { return static_cast<int>(units.rows()); }
};

/// Parameters of one two-level attention network.
struct AttentionParams {
  ad::Parameter w_a;  // level 1, d x d
  ad::Parameter w_b;  // level 2, d x d
  Mlp mlp1;           // adjusts each bank's pooled units
  Mlp mlp2;           // transforms the pooled entity representation
  double tau = 1.0;

  /// Identity attention matrices and Glorot-initialised MLPs.
  static AttentionParams init(int dim, double tau, Rng& rng);
  /// Identity everywhere; the MLPs reduce to ReLU.
  static AttentionParams identity(int dim, double tau);

  int dim() const { return static_cast<int>(w_a.value.rows()); }
  void validate() const;
  void collect(const std::string& prefix, std::vector<NamedParameter>& out);
};

struct KMeansInitOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;
  /// Stddev of the noise added to the entity mean for padded units.
  double pad_noise = 1e-3;
};

/// One bank per entity. entity_embeddings[i] holds entity i's embeddings as
/// columns (d x N_i). Units are k-means centroids; entities with fewer than Q
/// embeddings keep one unit per embedding and pad with mean + noise.
std::vector<MemoryBank> init_banks(std::span<const Eigen::MatrixXd> entity_embeddings, int q, BankKind kind,
                                   std::uint64_t seed, const KMeansInitOptions& options = {});

struct Level1Result {
  Eigen::VectorXd weights;   // a, on the simplex (Q)
  Eigen::VectorXd adjusted;  // MLP1(sum_q a_q m_q)
};

struct Level2Result {
  Eigen::VectorXd weights;    // b, on the simplex (one per entity)
  Eigen::VectorXd embedding;  // MLP2(sum_i b_i rep_i)
};

Level1Result level1_attend(const Eigen::VectorXd& z, const MemoryBank& bank, const AttentionParams& params);
Level2Result level2_attend(const Eigen::VectorXd& z, std::span<const Eigen::VectorXd> adjusted,
                           const AttentionParams& params);

/// m_q <- (1 - beta a_q) m_q + beta a_q rep. Returns the updated copy.
MemoryBank update_bank(const MemoryBank& bank, const Eigen::VectorXd& weights, const Eigen::VectorXd& adjusted,
                       double beta);

/// Banks of one entity type plus the attention network reading them.
struct MemoryNetwork {
  std::vector<MemoryBank> banks;
  AttentionParams attention;

  struct Trace {
    ad::Var embedding;  // d x 1
    std::vector<Eigen::VectorXd> level1_weights;
    Eigen::MatrixXd adjusted;  // d x entities
    Eigen::VectorXd level2_weights;
  };

  /// Two-level attention over every bank. Banks enter as constants.
  Trace forward(ad::Tape& tape, const ad::Var& z) const;
};

/// Twin memory networks. Either twin can be disabled (ablations), in which
/// case its embedding is dropped from the concatenation.
struct TmnState {
  int input_dim = 0;  // d
  MemoryNetwork author;
  MemoryNetwork domain;
  bool use_author = true;
  bool use_domain = true;
  double beta = 0.5;
  bool frozen = false;
  Precision precision = Precision::f32;

  /// Width of the final embedding: d times the number of active parts.
  int output_dim() const;
  void collect(std::vector<NamedParameter>& out);
};

/// Training forward pass: returns x = [z; z_author; z_domain] and then writes
/// the update rule into author bank `author_label` and domain bank
/// `domain_label` only. Throws if the state is frozen or labels are invalid.
ad::Var tmn_forward_train(ad::Tape& tape, const ad::Var& z, std::size_t author_label, std::size_t domain_label,
                          TmnState& state);

/// Inference forward pass; never touches the banks.
ad::Var tmn_forward_infer(ad::Tape& tape, const ad::Var& z, const TmnState& state);

Eigen::VectorXd tmn_forward_train(const Eigen::VectorXd& z, std::size_t author_label, std::size_t domain_label,
                                  TmnState& state);
Eigen::VectorXd tmn_forward_infer(const Eigen::VectorXd& z, const TmnState& state);

}  // namespace gld
