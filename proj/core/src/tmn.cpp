#include "gld/tmn.hpp"

#include <optional>

#include "gld/error.hpp"
#include "gld/kmeans.hpp"
#include "gld/rng.hpp"

namespace gld {

namespace {

ad::Var constant_vector(ad::Tape& tape, const Eigen::VectorXd& v) { return tape.constant(ad::Matrix(v)); }

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

struct Level1Vars {
  ad::Var weights;
  ad::Var pooled;
};

Level1Vars level1_vars(ad::Tape& tape, const ad::Var& query, const Eigen::MatrixXd& units, double tau) {
  const auto m = tape.constant(units);
  const auto a = ad::softmax(ad::matmul_tn(m, query), tau);
  return {a, ad::matmul(m, a)};
}

void apply_update(MemoryBank& bank, const Eigen::VectorXd& weights, const Eigen::VectorXd& adjusted, double beta,
                  Precision precision) {
  for (int q = 0; q < bank.size(); ++q) {
    const double step = beta * weights[q];
    if (step == 0.0) continue;
    bank.units.col(q) = (1.0 - step) * bank.units.col(q) + step * adjusted;
  }
  if (precision == Precision::f32) round_to_float(bank.units);
}

std::uint64_t entity_seed(std::uint64_t seed, BankKind kind, std::size_t entity) {
  return splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(kind) << 32) + entity));
}

}  // namespace

AttentionParams AttentionParams::init(int dim, double tau, Rng& rng) {
  AttentionParams p;
  p.w_a = ad::Parameter(ad::Matrix::Identity(dim, dim));
  p.w_b = ad::Parameter(ad::Matrix::Identity(dim, dim));
  p.mlp1 = Mlp::glorot(dim, dim, dim, rng);
  p.mlp2 = Mlp::glorot(dim, dim, dim, rng);
  p.tau = tau;
  return p;
}

AttentionParams AttentionParams::identity(int dim, double tau) {
  AttentionParams p;
  p.w_a = ad::Parameter(ad::Matrix::Identity(dim, dim));
  p.w_b = ad::Parameter(ad::Matrix::Identity(dim, dim));
  p.mlp1 = Mlp::identity(dim);
  p.mlp2 = Mlp::identity(dim);
  p.tau = tau;
  return p;
}

void AttentionParams::validate() const {
  if (!(tau > 0.0)) throw ConfigError("attention temperature must be positive");
  const auto d = w_a.value.rows();
  if (w_a.value.cols() != d || w_b.value.rows() != d || w_b.value.cols() != d) {
    throw ConfigError("attention matrices must be square with matching width");
  }
}

void AttentionParams::collect(const std::string& prefix, std::vector<NamedParameter>& out) {
  out.push_back({prefix + ".w_a", &w_a});
  out.push_back({prefix + ".w_b", &w_b});
  mlp1.collect(prefix + ".mlp1", out);
  mlp2.collect(prefix + ".mlp2", out);
}

std::vector<MemoryBank> init_banks(std::span<const Eigen::MatrixXd> entity_embeddings, int q, BankKind kind,
                                   std::uint64_t seed, const KMeansInitOptions& options) {
  if (q < 1) throw ConfigError("memory bank size Q must be positive");
  std::vector<MemoryBank> banks;
  banks.reserve(entity_embeddings.size());
  for (std::size_t e = 0; e < entity_embeddings.size(); ++e) {
    const auto& points = entity_embeddings[e];
    if (points.cols() == 0) throw DataError("cannot initialise a memory bank from an empty entity group");
    const auto eseed = entity_seed(seed, kind, e);
    const int k = std::min<int>(q, static_cast<int>(points.cols()));
    const auto fit = kmeans(points, k, eseed, {options.max_iterations, options.tolerance});

    MemoryBank bank;
    bank.kind = kind;
    bank.entity = e;
    bank.units.resize(points.rows(), q);
    bank.units.leftCols(k) = fit.centroids;
    if (k < q) {
      Rng noise(splitmix64(eseed + 1));
      const Eigen::VectorXd mean = points.rowwise().mean();
      for (int u = k; u < q; ++u) {
        for (Eigen::Index r = 0; r < points.rows(); ++r) bank.units(r, u) = mean[r] + options.pad_noise * noise.normal();
      }
    }
    banks.push_back(std::move(bank));
  }
  return banks;
}

Level1Result level1_attend(const Eigen::VectorXd& z, const MemoryBank& bank, const AttentionParams& params) {
  params.validate();
  if (z.size() != params.dim() || bank.dim() != params.dim()) throw Error("level-1 attention dimension mismatch");
  require_finite(z, "document embedding");
  require_finite(bank.units, "memory bank");
  ad::Tape tape(false);
  const auto query = ad::matmul_tn(tape.param(params.w_a), constant_vector(tape, z));
  const auto l1 = level1_vars(tape, query, bank.units, params.tau);
  const auto adjusted = params.mlp1.forward(tape, l1.pooled);
  return {l1.weights.value().col(0), adjusted.value().col(0)};
}

Level2Result level2_attend(const Eigen::VectorXd& z, std::span<const Eigen::VectorXd> adjusted,
                           const AttentionParams& params) {
  params.validate();
  if (adjusted.empty()) throw Error("level-2 attention needs at least one entity representation");
  if (z.size() != params.dim()) throw Error("level-2 attention dimension mismatch");
  Eigen::MatrixXd reps(params.dim(), static_cast<Eigen::Index>(adjusted.size()));
  for (std::size_t i = 0; i < adjusted.size(); ++i) {
    if (adjusted[i].size() != params.dim()) throw Error("level-2 attention dimension mismatch");
    reps.col(static_cast<Eigen::Index>(i)) = adjusted[i];
  }
  require_finite(z, "document embedding");
  require_finite(reps, "entity representations");
  ad::Tape tape(false);
  const auto r = tape.constant(reps);
  const auto query = ad::matmul_tn(tape.param(params.w_b), constant_vector(tape, z));
  const auto b = ad::softmax(ad::matmul_tn(r, query), params.tau);
  const auto out = params.mlp2.forward(tape, ad::matmul(r, b));
  return {b.value().col(0), out.value().col(0)};
}

MemoryBank update_bank(const MemoryBank& bank, const Eigen::VectorXd& weights, const Eigen::VectorXd& adjusted,
                       double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("update strength beta must lie in [0, 1]");
  if (weights.size() != bank.size() || adjusted.size() != bank.dim()) throw Error("memory update dimension mismatch");
  MemoryBank out = bank;
  apply_update(out, weights, adjusted, beta, Precision::f64);
  return out;
}

MemoryNetwork::Trace MemoryNetwork::forward(ad::Tape& tape, const ad::Var& z) const {
  if (banks.empty()) throw Error("memory network has no banks");
  Trace trace;
  const auto query_a = ad::matmul_tn(tape.param(attention.w_a), z);
  std::vector<ad::Var> pooled;
  pooled.reserve(banks.size());
  for (const auto& bank : banks) {
    auto l1 = level1_vars(tape, query_a, bank.units, attention.tau);
    trace.level1_weights.push_back(l1.weights.value().col(0));
    pooled.push_back(l1.pooled);
  }
  // MLP1 runs on all pooled bank vectors at once (one column per entity).
  const auto reps = attention.mlp1.forward(tape, ad::hcat(pooled));
  trace.adjusted = reps.value();
  const auto query_b = ad::matmul_tn(tape.param(attention.w_b), z);
  const auto b = ad::softmax(ad::matmul_tn(reps, query_b), attention.tau);
  trace.level2_weights = b.value().col(0);
  trace.embedding = attention.mlp2.forward(tape, ad::matmul(reps, b));
  return trace;
}

int TmnState::output_dim() const { return input_dim * (1 + (use_author ? 1 : 0) + (use_domain ? 1 : 0)); }

void TmnState::collect(std::vector<NamedParameter>& out) {
  if (use_author) author.attention.collect("tmn.author", out);
  if (use_domain) domain.attention.collect("tmn.domain", out);
}

namespace {

ad::Var assemble(const ad::Var& z, const std::optional<MemoryNetwork::Trace>& author,
                 const std::optional<MemoryNetwork::Trace>& domain) {
  std::vector<ad::Var> parts{z};
  if (author) parts.push_back(author->embedding);
  if (domain) parts.push_back(domain->embedding);
  return parts.size() == 1 ? z : ad::vcat(parts);
}

void check_input(const ad::Var& z, const TmnState& state) {
  if (z.cols() != 1 || z.rows() != state.input_dim) throw Error("TMN input dimension mismatch");
  if (state.use_author && z.rows() != state.author.attention.dim()) throw Error("TMN input dimension mismatch");
  if (state.use_domain && z.rows() != state.domain.attention.dim()) throw Error("TMN input dimension mismatch");
  require_finite(z.value(), "document embedding");
}

}  // namespace

ad::Var tmn_forward_train(ad::Tape& tape, const ad::Var& z, std::size_t author_label, std::size_t domain_label,
                          TmnState& state) {
  if (state.frozen) throw Error("memory banks are frozen");
  if (!(state.beta >= 0.0 && state.beta <= 1.0)) throw ConfigError("update strength beta must lie in [0, 1]");
  check_input(z, state);
  if (state.use_author && author_label >= state.author.banks.size()) {
    throw DataError("author label " + std::to_string(author_label) + " out of range");
  }
  if (state.use_domain && domain_label >= state.domain.banks.size()) {
    throw DataError("domain label " + std::to_string(domain_label) + " out of range");
  }

  std::optional<MemoryNetwork::Trace> author;
  std::optional<MemoryNetwork::Trace> domain;
  if (state.use_author) author = state.author.forward(tape, z);
  if (state.use_domain) domain = state.domain.forward(tape, z);
  auto x = assemble(z, author, domain);

  // Memory writes happen after the graph is recorded; banks entered the tape as copies.
  if (state.beta > 0.0) {
    if (author) {
      apply_update(state.author.banks[author_label], author->level1_weights[author_label],
                   author->adjusted.col(static_cast<Eigen::Index>(author_label)), state.beta, state.precision);
    }
    if (domain) {
      apply_update(state.domain.banks[domain_label], domain->level1_weights[domain_label],
                   domain->adjusted.col(static_cast<Eigen::Index>(domain_label)), state.beta, state.precision);
    }
  }
  return x;
}

ad::Var tmn_forward_infer(ad::Tape& tape, const ad::Var& z, const TmnState& state) {
  check_input(z, state);
  std::optional<MemoryNetwork::Trace> author;
  std::optional<MemoryNetwork::Trace> domain;
  if (state.use_author) author = state.author.forward(tape, z);
  if (state.use_domain) domain = state.domain.forward(tape, z);
  return assemble(z, author, domain);
}

Eigen::VectorXd tmn_forward_train(const Eigen::VectorXd& z, std::size_t author_label, std::size_t domain_label,
                                  TmnState& state) {
  ad::Tape tape(false);
  return tmn_forward_train(tape, tape.constant(ad::Matrix(z)), author_label, domain_label, state).value().col(0);
}

Eigen::VectorXd tmn_forward_infer(const Eigen::VectorXd& z, const TmnState& state) {
  ad::Tape tape(false);
  return tmn_forward_infer(tape, tape.constant(ad::Matrix(z)), state).value().col(0);
}

}  // namespace gld
