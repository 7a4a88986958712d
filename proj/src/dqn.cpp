#include "dqn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pricelab {

void DqnConfig::validate() const {
  require(training_episodes >= 1, Errc::config, "dqn: training_episodes must be >= 1");
  require(warmup_episodes < training_episodes, Errc::config,
          "dqn: warmup must be shorter than the run");
  require(epsilon_min > 0.0 && epsilon_min <= epsilon_max, Errc::config,
          "dqn: need 0 < epsilon_min <= epsilon_max");
  require(buffer_capacity >= batch_size, Errc::config, "dqn: buffer smaller than batch");
  require(batch_size >= 1 && train_steps_per_event >= 1, Errc::config, "dqn: bad step counts");
  require(train_interval_episodes >= 1 && target_update_interval_episodes >= 1, Errc::config,
          "dqn: cadence intervals must be >= 1");
  require(grad_clip > 0.0, Errc::config, "dqn: grad_clip must be > 0");
}

double epsilon_at(long episode, const DqnConfig& cfg) {
  require(episode >= 0 && episode <= cfg.training_episodes, Errc::invalid_argument,
          "epsilon_at: episode outside the run");
  const double frac =
      static_cast<double>(episode) / static_cast<double>(cfg.training_episodes);
  return cfg.epsilon_max * std::pow(cfg.epsilon_min / cfg.epsilon_max, frac);
}

int greedy_argmax(const std::vector<double>& values) {
  int best = 0;
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

int dqn_act(const Mlp& q_net, const std::vector<double>& obs, double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon)
    return static_cast<int>(rng.uniform_int(q_net.output_dim()));
  return greedy_argmax(q_net.forward(obs));
}

double dqn_train_step(Mlp& q_net, const Mlp& target_net, const TransitionBatch& batch,
                      const DqnConfig& cfg, Adam& opt) {
  const long n = batch.size();
  require(n >= 1, Errc::invalid_argument, "empty-batch");
  for (int a : batch.actions)
    require(a >= 0 && a < q_net.output_dim(), Errc::invalid_argument,
            "dqn_train_step: action index out of range");

  const Eigen::MatrixXd q_next = target_net.forward_batch(batch.next_obs);
  Mlp::Cache cache;
  const Eigen::MatrixXd q = q_net.forward_batch(batch.obs, &cache);

  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    double target = batch.rewards(i);
    if (!batch.terminal[i]) target += cfg.discount * q_next.row(i).maxCoeff();
    const double err = q(i, batch.actions[i]) - target;
    loss += err * err;
    dy(i, batch.actions[i]) = 2.0 * err / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  Grads g = q_net.backward(cache, dy);
  clip_global_norm(g, cfg.grad_clip);
  opt.update(q_net, g);
  return loss;
}

ReplayBuffer::ReplayBuffer(long capacity, int obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim) {
  require(capacity >= 1 && obs_dim >= 1, Errc::invalid_argument, "replay buffer shape");
  obs_.resize(static_cast<size_t>(capacity) * obs_dim);
  next_obs_.resize(static_cast<size_t>(capacity) * obs_dim);
  actions_.resize(capacity);
  rewards_.resize(capacity);
  terminal_.resize(capacity);
}

void ReplayBuffer::push(const std::vector<double>& obs, int action, double reward,
                        const std::vector<double>& next_obs, bool terminal) {
  require(static_cast<int>(obs.size()) == obs_dim_ &&
              static_cast<int>(next_obs.size()) == obs_dim_,
          Errc::shape_mismatch, "replay push: observation size mismatch");
  std::copy(obs.begin(), obs.end(), obs_.begin() + cursor_ * obs_dim_);
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + cursor_ * obs_dim_);
  actions_[cursor_] = action;
  rewards_[cursor_] = reward;
  terminal_[cursor_] = terminal ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

long ReplayBuffer::row(long logical_index) const {
  if (size_ < capacity_) return logical_index;
  return (cursor_ + logical_index) % capacity_;
}

void ReplayBuffer::transition_at(long logical_index, std::vector<double>* obs, int* action,
                                 double* reward, std::vector<double>* next_obs,
                                 bool* terminal) const {
  require(logical_index >= 0 && logical_index < size_, Errc::invalid_argument,
          "replay index out of range");
  const long r = row(logical_index);
  if (obs) obs->assign(obs_.begin() + r * obs_dim_, obs_.begin() + (r + 1) * obs_dim_);
  if (next_obs)
    next_obs->assign(next_obs_.begin() + r * obs_dim_, next_obs_.begin() + (r + 1) * obs_dim_);
  if (action) *action = actions_[r];
  if (reward) *reward = rewards_[r];
  if (terminal) *terminal = terminal_[r] != 0;
}

TransitionBatch ReplayBuffer::sample(int count, Rng& rng) const {
  require(count >= 1 && count <= size_, Errc::invalid_argument,
          "replay sample: not enough stored transitions");
  // Floyd's algorithm: `count` distinct rows in O(count) draws.
  std::set<long> chosen;
  for (long j = size_ - count; j < size_; ++j) {
    const long t = rng.uniform_int(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }

  TransitionBatch batch;
  batch.obs.resize(count, obs_dim_);
  batch.next_obs.resize(count, obs_dim_);
  batch.actions.resize(count);
  batch.rewards.resize(count);
  batch.terminal.resize(count);
  long i = 0;
  for (long idx : chosen) {
    const long r = row(idx);
    for (int c = 0; c < obs_dim_; ++c) {
      batch.obs(i, c) = obs_[r * obs_dim_ + c];
      batch.next_obs(i, c) = next_obs_[r * obs_dim_ + c];
    }
    batch.actions[i] = actions_[r];
    batch.rewards(i) = rewards_[r];
    batch.terminal[i] = terminal_[r];
    ++i;
  }
  return batch;
}

DqnAgent DqnAgent::init(int obs_dim, int n_actions, const DqnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Mlp online = Mlp::init(obs_dim, n_actions, cfg.hidden, seed);
  Mlp target = online;
  Adam opt = Adam::init(online, cfg.learning_rate, cfg.adam_epsilon);
  return DqnAgent{cfg, std::move(online), std::move(target), std::move(opt),
                  ReplayBuffer(cfg.buffer_capacity, obs_dim)};
}

double DqnAgent::train(Rng& rng) {
  double loss = 0.0;
  for (int s = 0; s < cfg.train_steps_per_event; ++s) {
    const TransitionBatch batch = buffer.sample(cfg.batch_size, rng);
    loss = dqn_train_step(online, target, batch, cfg, opt);
  }
  return loss;
}

}  // namespace pricelab
