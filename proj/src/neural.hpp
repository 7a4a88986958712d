#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "common.hpp"

namespace pricelab {

// Parameter-shaped gradient container.
struct Grads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  void setZero();
  double squared_norm() const;
};

double global_norm(const Grads& g);

// Scales gradients so the global L2 norm does not exceed max_norm.
void clip_global_norm(Grads& g, double max_norm);
// Joint clip across several gradient sets (one optimizer step over them all).
void clip_global_norm(const std::vector<Grads*>& gs, double max_norm);

// Fully connected net: affine layers with rectifier hidden activations and an
// identity output. Weights are (out x in); batches are row-major (sample rows).
class Mlp {
 public:
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  // Uniform fan-in initialization (bound 1/sqrt(fan_in)), zero biases,
  // deterministic per seed.
  static Mlp init(int input_dim, int output_dim, const std::vector<int>& hidden,
                  std::uint64_t seed);

  int input_dim() const { return static_cast<int>(w.front().cols()); }
  int output_dim() const { return static_cast<int>(w.back().rows()); }
  std::size_t layer_count() const { return w.size(); }
  std::size_t param_count() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  std::vector<double> forward(const std::vector<double>& x) const;

  // Post-activation values per layer; acts[0] is the input batch.
  struct Cache {
    std::vector<Eigen::MatrixXd> acts;
  };

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  // Reverse-mode gradients for a loss whose gradient w.r.t. the network output
  // is dy (same shape as the forward_batch result).
  Grads backward(const Cache& cache, const Eigen::MatrixXd& dy) const;

  Grads zero_grads() const;
};

struct Adam {
  double learning_rate = 1e-3;
  double epsilon = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  long step = 0;
  Grads m;
  Grads v;

  static Adam init(const Mlp& params, double learning_rate, double epsilon);

  // Bias-corrected moment update; increments the step counter.
  void update(Mlp& params, const Grads& g);
};

// Versioned text serialization: layer shapes plus row-major values printed
// with enough digits to round-trip exactly.
void save_network(std::ostream& out, const Mlp& net);
Mlp load_network(std::istream& in);

}  // namespace pricelab
