#pragma once

#include <cstdint>
#include <vector>

#include "neural.hpp"
#include "rng.hpp"

namespace pricelab {

struct DqnConfig {
  long training_episodes = 50000;
  double learning_rate = 0.001;
  double adam_epsilon = 0.001;
  double epsilon_min = 0.015;
  double epsilon_max = 1.0;
  long buffer_capacity = 200000;
  int batch_size = 64;
  double grad_clip = 25.0;
  long warmup_episodes = 5000;
  long train_interval_episodes = 4;
  long target_update_interval_episodes = 200;
  int train_steps_per_event = 1;
  double discount = 1.0;
  std::vector<int> hidden = {64, 64};

  void validate() const;
};

// Exploration schedule: exponential decay from epsilon_max at episode 0 to
// epsilon_min at the final episode.
double epsilon_at(long episode, const DqnConfig& cfg);

// Epsilon-greedy over the K Q-values; greedy ties resolve to the lowest index.
int dqn_act(const Mlp& q_net, const std::vector<double>& obs, double epsilon, Rng& rng);
int greedy_argmax(const std::vector<double>& values);

struct TransitionBatch {
  Eigen::MatrixXd obs;       // B x obs_dim
  Eigen::MatrixXd next_obs;  // B x obs_dim
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> terminal;

  long size() const { return obs.rows(); }
};

// One gradient step on the squared error between Q(obs)[action] and the
// bootstrapped target; returns the batch loss.
double dqn_train_step(Mlp& q_net, const Mlp& target_net, const TransitionBatch& batch,
                      const DqnConfig& cfg, Adam& opt);

// Fixed-size ring of transitions; oldest entries are overwritten first.
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int obs_dim);

  void push(const std::vector<double>& obs, int action, double reward,
            const std::vector<double>& next_obs, bool terminal);
  long size() const { return size_; }
  long capacity() const { return capacity_; }

  // Uniform sample of `count` distinct transitions.
  TransitionBatch sample(int count, Rng& rng) const;

  // Oldest-first access for inspection/tests; index 0 is the oldest live entry.
  void transition_at(long logical_index, std::vector<double>* obs, int* action, double* reward,
                     std::vector<double>* next_obs, bool* terminal) const;

 private:
  long row(long logical_index) const;

  long capacity_;
  int obs_dim_;
  long size_ = 0;
  long cursor_ = 0;
  std::vector<double> obs_;
  std::vector<double> next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> terminal_;
};

// Training-time agent: online and target networks plus the replay buffer.
// The harness drives the episode/train/target cadences.
struct DqnAgent {
  DqnConfig cfg;
  Mlp online;
  Mlp target;
  Adam opt;
  ReplayBuffer buffer;

  static DqnAgent init(int obs_dim, int n_actions, const DqnConfig& cfg, std::uint64_t seed);

  int act(const std::vector<double>& obs, double epsilon, Rng& rng) const {
    return dqn_act(online, obs, epsilon, rng);
  }
  int greedy(const std::vector<double>& obs) const { return greedy_argmax(online.forward(obs)); }
  void sync_target() { target = online; }
  double train(Rng& rng);
};

}  // namespace pricelab
