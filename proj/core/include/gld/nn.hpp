#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gld/autodiff.hpp"
#include "gld/rng.hpp"

namespace gld {

/// Named reference to a parameter, used for optimizer steps and serialization.
struct NamedParameter {
  std::string name;
  ad::Parameter* param;
};

/// Two-layer perceptron: out = W2 relu(W1 x + b1) + b2. Inputs are columns.
struct Mlp {
  ad::Parameter w1;
  ad::Parameter b1;
  ad::Parameter w2;
  ad::Parameter b2;

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(int in, int hidden, int out, Rng& rng);
  /// Identity weights and zero biases (square d -> d -> d); handy for tracing by hand.
  static Mlp identity(int dim);
  static Mlp zeros(int in, int hidden, int out);

  int in_dim() const { return static_cast<int>(w1.value.cols()); }
  int out_dim() const { return static_cast<int>(w2.value.rows()); }

  ad::Var forward(ad::Tape& tape, const ad::Var& x) const;
  void collect(const std::string& prefix, std::vector<NamedParameter>& out);
};

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update to every parameter from its accumulated gradient.
  void step(std::span<const NamedParameter> params);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long step_ = 0;
  std::vector<std::pair<ad::Matrix, ad::Matrix>> moments_;
};

/// Storage precision of trainable state. f32 rounds parameters and memory
/// units to float32 after every write; arithmetic is always double.
enum class Precision { f32, f64 };

/// Rounds every entry to the nearest float32 value (stored back as double).
void round_to_float(ad::Matrix& m);

}  // namespace gld
