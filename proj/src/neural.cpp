#include "neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "csv.hpp"
#include "rng.hpp"

namespace pricelab {

void Grads::setZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

double Grads::squared_norm() const {
  double s = 0.0;
  for (const auto& m : w) s += m.squaredNorm();
  for (const auto& v : b) s += v.squaredNorm();
  return s;
}

double global_norm(const Grads& g) { return std::sqrt(g.squared_norm()); }

void clip_global_norm(Grads& g, double max_norm) {
  std::vector<Grads*> one{&g};
  clip_global_norm(one, max_norm);
}

void clip_global_norm(const std::vector<Grads*>& gs, double max_norm) {
  require(max_norm > 0.0, Errc::invalid_argument, "clip_global_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const Grads* g : gs) sq += g->squared_norm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (Grads* g : gs) {
    for (auto& m : g->w) m *= scale;
    for (auto& v : g->b) v *= scale;
  }
}

Mlp Mlp::init(int input_dim, int output_dim, const std::vector<int>& hidden,
              std::uint64_t seed) {
  require(input_dim >= 1 && output_dim >= 1, Errc::invalid_argument,
          "network dimensions must be >= 1");
  for (int h : hidden) require(h >= 1, Errc::invalid_argument, "hidden sizes must be >= 1");

  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  Rng rng(seed);
  Mlp net;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    net.w.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const auto& m : w) n += static_cast<std::size_t>(m.size());
  for (const auto& v : b) n += static_cast<std::size_t>(v.size());
  return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  require(x.size() == w.front().cols(), Errc::shape_mismatch, "forward: input size mismatch");
  Eigen::VectorXd a = x;
  for (size_t l = 0; l < w.size(); ++l) {
    Eigen::VectorXd z = w[l] * a + b[l];
    if (l + 1 < w.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<long>(x.size()));
  Eigen::VectorXd y = forward(v);
  return std::vector<double>(y.data(), y.data() + y.size());
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, Cache* cache) const {
  require(x.cols() == w.front().cols(), Errc::shape_mismatch,
          "forward_batch: input size mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Eigen::MatrixXd a = x;
  for (size_t l = 0; l < w.size(); ++l) {
    Eigen::MatrixXd z = a * w[l].transpose();
    z.rowwise() += b[l].transpose();
    if (l + 1 < w.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
    if (cache && l + 1 < w.size()) cache->acts.push_back(a);
  }
  return a;
}

Grads Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dy) const {
  require(cache.acts.size() == w.size(), Errc::shape_mismatch,
          "backward: cache does not match network depth");
  Grads g = zero_grads();
  Eigen::MatrixXd delta = dy;
  for (size_t l = w.size(); l-- > 0;) {
    g.w[l] = delta.transpose() * cache.acts[l];
    g.b[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = delta * w[l];
      // rectifier mask: post-activation is zero exactly where the unit was off
      delta.array() *= (cache.acts[l].array() > 0.0).cast<double>();
    }
  }
  return g;
}

Grads Mlp::zero_grads() const {
  Grads g;
  for (const auto& m : w) g.w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b) g.b.push_back(Eigen::VectorXd::Zero(v.size()));
  return g;
}

Adam Adam::init(const Mlp& params, double learning_rate, double epsilon) {
  Adam a;
  a.learning_rate = learning_rate;
  a.epsilon = epsilon;
  a.m = params.zero_grads();
  a.v = params.zero_grads();
  return a;
}

void Adam::update(Mlp& params, const Grads& g) {
  require(g.w.size() == params.w.size(), Errc::shape_mismatch, "adam: gradient shape mismatch");
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (size_t l = 0; l < params.w.size(); ++l) {
    m.w[l] = beta1 * m.w[l] + (1.0 - beta1) * g.w[l];
    v.w[l] = beta2 * v.w[l] + (1.0 - beta2) * g.w[l].cwiseProduct(g.w[l]);
    params.w[l].array() -=
        learning_rate * (m.w[l].array() / bc1) / ((v.w[l].array() / bc2).sqrt() + epsilon);
    m.b[l] = beta1 * m.b[l] + (1.0 - beta1) * g.b[l];
    v.b[l] = beta2 * v.b[l] + (1.0 - beta2) * g.b[l].cwiseProduct(g.b[l]);
    params.b[l].array() -=
        learning_rate * (m.b[l].array() / bc1) / ((v.b[l].array() / bc2).sqrt() + epsilon);
  }
}

void save_network(std::ostream& out, const Mlp& net) {
  out << "pricelab-net v1\n";
  out << "layers " << net.w.size() << "\n";
  for (size_t l = 0; l < net.w.size(); ++l) {
    const auto& w = net.w[l];
    out << "layer " << w.rows() << " " << w.cols() << "\n";
    for (long r = 0; r < w.rows(); ++r) {
      for (long c = 0; c < w.cols(); ++c) {
        if (c) out << " ";
        out << fmt_double_exact(w(r, c));
      }
      out << "\n";
    }
    out << "bias\n";
    for (long r = 0; r < net.b[l].size(); ++r) {
      if (r) out << " ";
      out << fmt_double_exact(net.b[l](r));
    }
    out << "\n";
  }
}

Mlp load_network(std::istream& in) {
  std::string tag, version;
  in >> tag >> version;
  require(tag == "pricelab-net" && version == "v1", Errc::io,
          "unrecognized network checkpoint header");
  std::string word;
  size_t layers = 0;
  in >> word >> layers;
  require(word == "layers" && layers >= 1, Errc::io, "bad network checkpoint layer count");
  Mlp net;
  for (size_t l = 0; l < layers; ++l) {
    long rows = 0, cols = 0;
    in >> word >> rows >> cols;
    require(word == "layer" && rows >= 1 && cols >= 1, Errc::io, "bad layer shape");
    Eigen::MatrixXd w(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) in >> w(r, c);
    in >> word;
    require(word == "bias", Errc::io, "missing bias block");
    Eigen::VectorXd b(rows);
    for (long r = 0; r < rows; ++r) in >> b(r);
    require(static_cast<bool>(in), Errc::io, "truncated network checkpoint");
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

}  // namespace pricelab
