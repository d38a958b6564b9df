#include "gld/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "gld/checkpoint.hpp"
#include "gld/error.hpp"
#include "gld/log.hpp"
#include "gld/rng.hpp"

namespace gld {

namespace {

// Independent RNG streams derived from the run seed.
enum class Stream : std::uint64_t { params = 1, banks = 2, batches = 3 };

std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(s) << 56)) + index);
}

Eigen::MatrixXd stack_columns(std::span<const Eigen::VectorXd> embeddings, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd m(embeddings.front().size(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = embeddings[idx[i]];
  return m;
}

std::vector<std::size_t> shuffled_all(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  return order;
}

void round_parameters(Model& model) {
  if (model.config.precision != Precision::f32) return;
  for (auto& p : model.parameters()) round_to_float(p.param->value);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (q < 1) throw ConfigError("Q must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  weights.validate();
  kernel.validate();
  embedder.validate();
  if (batch_size < 2 * weights.min_group_size) throw ConfigError("batch size must be at least twice the minimum group size");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::vector<NamedParameter> Model::parameters() {
  std::vector<NamedParameter> out;
  tmn.collect(out);
  classifier.collect(out);
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(const Corpus& corpus, std::uint64_t seed, int batch_size,
                                                   int chunk_size) {
  if (batch_size < 1 || chunk_size < 1) throw ConfigError("batch and chunk sizes must be positive");
  Rng rng(seed);
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < corpus.size(); ++i) groups[corpus.group_of(i)].push_back(i);

  std::set<std::size_t> human_domains;
  std::size_t llm_cells = 0;
  for (const auto& [key, members] : groups) {
    if (key.author == 0) human_domains.insert(key.domain);
    else ++llm_cells;
  }
  const auto bs = static_cast<std::size_t>(batch_size);
  const bool stratifiable = human_domains.size() >= 2 && llm_cells >= 2 && batch_size >= 4 * chunk_size;
  if (!stratifiable) {
    logger()->warn("corpus cannot be group-stratified (human domains: {}, LLM cells: {}); using plain shuffling",
                   human_domains.size(), llm_cells);
    const auto order = shuffled_all(corpus.size(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += bs) {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + bs)));
    }
    return batches;
  }

  // Chunk j of a group with c chunks gets position (j + u) / c, u ~ U[0,1) per group,
  // so every group is spread evenly along the stream.
  struct Chunk {
    double position;
    std::uint64_t tiebreak;
    std::vector<std::size_t> docs;
  };
  std::vector<Chunk> chunks;
  const auto cs = static_cast<std::size_t>(chunk_size);
  for (auto& [key, members] : groups) {
    rng.shuffle(members.begin(), members.end());
    const std::size_t count = (members.size() + cs - 1) / cs;
    const double offset = rng.uniform();
    for (std::size_t j = 0; j < count; ++j) {
      Chunk c;
      c.position = (static_cast<double>(j) + offset) / static_cast<double>(count);
      c.tiebreak = rng.next();
      const auto begin = members.begin() + static_cast<std::ptrdiff_t>(j * cs);
      const auto end = members.begin() + static_cast<std::ptrdiff_t>(std::min(members.size(), (j + 1) * cs));
      c.docs.assign(begin, end);
      chunks.push_back(std::move(c));
    }
  }
  std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
    return std::tie(a.position, a.tiebreak) < std::tie(b.position, b.tiebreak);
  });

  std::vector<std::vector<std::size_t>> batches(1);
  for (const auto& c : chunks) {
    if (!batches.back().empty() && batches.back().size() + c.docs.size() > bs) batches.emplace_back();
    batches.back().insert(batches.back().end(), c.docs.begin(), c.docs.end());
  }
  return batches;
}

Model initialize_model(const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings, const TrainConfig& config) {
  config.validate();
  if (embeddings.size() != corpus.size()) throw DataError("embeddings are not aligned with the corpus");
  const int d = config.embedder.dim;
  for (const auto& z : embeddings) {
    if (z.size() != d) throw DataError("embedding width does not match the configured dim");
  }

  Model model;
  model.config = config;
  model.authors = corpus.authors().keys();
  model.domains = corpus.domains().keys();

  auto& tmn = model.tmn;
  tmn.input_dim = d;
  tmn.use_author = config.use_author_memory;
  tmn.use_domain = config.use_domain_memory;
  tmn.beta = config.beta;
  tmn.precision = config.precision;

  Rng param_rng(stream_seed(config.seed, Stream::params));
  const auto groups = group_embeddings(corpus, embeddings);
  if (tmn.use_author) {
    std::vector<std::vector<std::size_t>> members(corpus.authors().size());
    for (const auto& [key, idx] : groups) members[key.author].insert(members[key.author].end(), idx.begin(), idx.end());
    std::vector<Eigen::MatrixXd> sets;
    for (auto& m : members) {
      std::sort(m.begin(), m.end());
      sets.push_back(stack_columns(embeddings, m));
    }
    tmn.author.banks = init_banks(sets, config.q, BankKind::author, stream_seed(config.seed, Stream::banks));
    tmn.author.attention = AttentionParams::init(d, config.tau, param_rng);
  }
  if (tmn.use_domain) {
    std::vector<std::vector<std::size_t>> members(corpus.domains().size());
    for (const auto& [key, idx] : groups) members[key.domain].insert(members[key.domain].end(), idx.begin(), idx.end());
    std::vector<Eigen::MatrixXd> sets;
    for (auto& m : members) {
      std::sort(m.begin(), m.end());
      sets.push_back(stack_columns(embeddings, m));
    }
    tmn.domain.banks = init_banks(sets, config.q, BankKind::domain, stream_seed(config.seed, Stream::banks));
    tmn.domain.attention = AttentionParams::init(d, config.tau, param_rng);
  }
  model.classifier = ClassifierParams::init(tmn.output_dim(), d, param_rng);

  round_parameters(model);
  if (config.precision == Precision::f32) {
    for (auto& b : tmn.author.banks) round_to_float(b.units);
    for (auto& b : tmn.domain.banks) round_to_float(b.units);
  }
  return model;
}

BatchLoss batch_forward(Model& model, const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings,
                        std::span<const std::size_t> batch, bool accumulate) {
  if (batch.empty()) throw Error("empty batch");
  const auto& cfg = model.config;
  ad::Tape tape(accumulate);

  std::vector<ad::Var> xs;
  std::vector<int> labels;
  xs.reserve(batch.size());
  for (const auto doc : batch) {
    const auto z = tape.constant(ad::Matrix(embeddings[doc]));
    xs.push_back(tmn_forward_train(tape, z, corpus.author_index(doc), corpus.domain_index(doc), model.tmn));
    labels.push_back(corpus.document(doc).label);
  }

  const auto logits = classifier_logits(tape, ad::hcat(xs), model.classifier);
  const auto loss_y = ad::bce_with_logits_sum(logits, labels, kProbabilityClip);

  std::map<std::size_t, std::vector<ad::Var>> human;
  std::map<GroupKey, std::vector<ad::Var>> llm;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto key = corpus.group_of(batch[i]);
    if (key.author == 0) human[key.domain].push_back(xs[i]);
    else llm[key].push_back(xs[i]);
  }
  std::vector<ad::Var> human_sets;
  for (const auto& [domain, members] : human) human_sets.push_back(ad::hcat(members));
  std::vector<ad::Var> llm_sets;
  for (const auto& [cell, members] : llm) llm_sets.push_back(ad::hcat(members));
  const auto min_size = static_cast<std::size_t>(cfg.weights.min_group_size);
  const auto loss_h = max_pairwise_mmd(tape, human_sets, cfg.kernel, min_size);
  const auto loss_g = max_pairwise_mmd(tape, llm_sets, cfg.kernel, min_size);

  const auto total = ad::add(ad::add(ad::scale(loss_h, cfg.weights.lambda_h), ad::scale(loss_g, cfg.weights.lambda_g)),
                             ad::scale(loss_y, cfg.weights.lambda_y));
  BatchLoss out{total.scalar(), loss_y.scalar(), loss_h.scalar(), loss_g.scalar()};
  if (accumulate && std::isfinite(out.total) && tape.requires_grad(total)) tape.backward(total);
  return out;
}

Model train(const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  const auto embeddings = embed_corpus(corpus, config.embedder);
  return train(corpus, embeddings, config);
}

namespace {

// Bank writes feed MLP1 outputs back into MLP1's input, so unit norms are the
// first thing to grow when training diverges.
double max_unit_norm(const TmnState& tmn) {
  double out = 0.0;
  for (const auto* net : {&tmn.author, &tmn.domain}) {
    for (const auto& bank : net->banks) out = std::max(out, bank.units.colwise().norm().maxCoeff());
  }
  return out;
}

}  // namespace

Model train(const Corpus& corpus, std::span<const Eigen::VectorXd> embeddings, const TrainConfig& config) {
  if (corpus.domain_count() < 2) logger()->warn("training corpus has a single domain; the human discrepancy loss is 0");
  if (corpus.llm_count() < 2 && corpus.domain_count() < 2) {
    logger()->warn("training corpus has a single LLM cell; the LLM discrepancy loss is 0");
  }
  Model model = initialize_model(corpus, embeddings, config);
  auto params = model.parameters();
  Adam optimizer(config.learning_rate);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = make_batches(corpus, stream_seed(config.seed, Stream::batches, static_cast<std::uint64_t>(epoch)),
                                      config.batch_size, config.weights.min_group_size);
    EpochStats stats;
    stats.epoch = epoch + 1;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (const auto& p : params) p.param->zero_grad();
      const auto loss = batch_forward(model, corpus, embeddings, batches[b], true);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch + 1 << ", batch " << b << " (L_y=" << loss.loss_y
            << ", L_h=" << loss.loss_h << ", L_g=" << loss.loss_g << ")";
        if (!config.failure_dump_path.empty()) {
          save_checkpoint(model, config.failure_dump_path);
          msg << "; state dumped to " << config.failure_dump_path;
        }
        throw NumericError(msg.str());
      }
      optimizer.step(params);
      round_parameters(model);
      ++stats.batches;
      stats.total += loss.total;
      stats.loss_y += loss.loss_y;
      stats.loss_h += loss.loss_h;
      stats.loss_g += loss.loss_g;
      logger()->debug("epoch {} batch {}: total {:.6f} L_y {:.6f} L_h {:.6f} L_g {:.6f}", epoch + 1, b, loss.total,
                      loss.loss_y, loss.loss_h, loss.loss_g);
    }
    logger()->info("epoch {}: total {:.6f} L_y {:.6f} L_h {:.6f} L_g {:.6f} max unit norm {:.4g}", stats.epoch,
                   stats.total, stats.loss_y, stats.loss_h, stats.loss_g, max_unit_norm(model.tmn));
    model.history.push_back(stats);
  }
  model.tmn.frozen = true;
  return model;
}

}  // namespace gld
