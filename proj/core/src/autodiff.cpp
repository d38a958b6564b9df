#include "gld/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "gld/error.hpp"

namespace gld::ad {

const Matrix& Var::value() const { return tape_->nodes_[id_].value; }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p) {
  nodes_.push_back(Node{p.value, {}, {}, &p, grad_enabled_});
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Matrix value, std::vector<Var> inputs, Backward backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const auto& in : inputs) needs |= nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  auto& node = nodes_[v.id_];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward() requires a scalar root");
  if (!grad_enabled_) throw Error("backward() on a tape with gradients disabled");
  accumulate(root, Matrix::Ones(1, 1));
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      auto& pg = node.param->grad;
      if (pg.rows() != node.grad.rows() || pg.cols() != node.grad.cols()) pg.setZero(node.grad.rows(), node.grad.cols());
      pg += node.grad;
    } else if (node.backward) {
      const Matrix g = std::move(node.grad);
      node.backward(*this, g);
    }
  }
}

Var matmul(const Var& a, const Var& b) {
  return a.tape()->push(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g * b.value().transpose());
    t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  return a.tape()->push(a.value().transpose() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, b.value() * g.transpose());
    t.accumulate(b, a.value() * g);
  });
}

Var add(const Var& a, const Var& b) {
  return a.tape()->push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_bias(const Var& a, const Var& bias) {
  Matrix out = a.value().colwise() + bias.value().col(0);
  return a.tape()->push(std::move(out), {a, bias}, [a, bias](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(bias, g.rowwise().sum());
  });
}

Var scale(const Var& a, double s) {
  return a.tape()->push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->push(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).cast<double>().matrix().cwiseProduct(g));
  });
}

Var softmax(const Var& a, double tau) {
  Matrix s = a.value() / tau;
  s.array() -= s.maxCoeff();
  s = s.array().exp().matrix();
  s /= s.sum();
  Matrix probs = s;
  return a.tape()->push(std::move(s), {a}, [a, probs, tau](Tape& t, const Matrix& g) {
    const double dot = (g.array() * probs.array()).sum();
    t.accumulate(a, (probs.array() * (g.array() - dot) / tau).matrix());
  });
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw Error("hcat of zero parts");
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix out(parts.front().rows(), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape()->push(std::move(out), inputs, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const auto& p : inputs) {
      t.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

Var vcat(std::span<const Var> parts) {
  if (parts.empty()) throw Error("vcat of zero parts");
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape()->push(std::move(out), inputs, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const auto& p : inputs) {
      t.accumulate(p, g.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  });
}

Var bce_with_logits_sum(const Var& logits, std::span<const int> labels, double eps) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (logits.rows() != 1 || logits.cols() != n) throw Error("logits must be 1 x batch");
  Matrix dlogit(1, n);
  double loss = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double l = logits.value()(0, k);
    const double p = 1.0 / (1.0 + std::exp(-l));
    const double clipped = std::clamp(p, eps, 1.0 - eps);
    const int y = labels[static_cast<std::size_t>(k)];
    loss -= y == 1 ? std::log(clipped) : std::log(1.0 - clipped);
    // The clip has zero derivative outside [eps, 1 - eps].
    dlogit(0, k) = (p > eps && p < 1.0 - eps) ? p - y : 0.0;
  }
  Matrix out(1, 1);
  out(0, 0) = loss;
  return logits.tape()->push(std::move(out), {logits},
                             [logits, dlogit](Tape& t, const Matrix& g) { t.accumulate(logits, dlogit * g(0, 0)); });
}

}  // namespace gld::ad
