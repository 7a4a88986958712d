#pragma once

#include <cstdint>
#include <vector>

#include "neural.hpp"
#include "rng.hpp"

namespace pricelab {

struct PpoConfig {
  long training_updates = 1000;
  double learning_rate = 2.5e-4;
  double adam_epsilon = 1e-5;
  int num_minibatches = 10;
  int epochs = 20;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double grad_clip = 0.5;
  double clip_coef = 0.2;
  double entropy_max = 0.03;
  double entropy_min = 0.0001;
  double entropy_anneal_fraction = 0.75;
  int num_envs = 8;
  double discount = 1.0;
  bool normalize_advantages = true;
  std::vector<int> hidden = {64, 64};

  void validate() const;
};

// Entropy-bonus schedule: exponential decay from entropy_max to entropy_min at
// the anneal fraction of the run, clipped to entropy_min afterwards.
double entropy_coef_at(long update, const PpoConfig& cfg);

struct PpoAction {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

// Sample from the softmax policy head and read the value head. The two heads
// are separate networks with no weight sharing.
PpoAction ppo_act(const Mlp& policy, const Mlp& value, const std::vector<double>& obs, Rng& rng);
int ppo_greedy(const Mlp& policy, const std::vector<double>& obs);

// Log-probabilities of a logit row (numerically stable log-softmax).
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

// Flattened rollout of num_envs complete episodes, each ending in a terminal
// step. Advantages and returns are filled by compute_gae.
struct RolloutBatch {
  Eigen::MatrixXd obs;  // (num_envs*T) x obs_dim
  std::vector<int> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> terminal;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  long size() const { return obs.rows(); }
};

// Generalized advantage estimation over the episode segments; the value after
// a terminal step is zero. returns = advantages + values.
void compute_gae(RolloutBatch& rollout, const PpoConfig& cfg);

struct PpoLosses {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// Clipped-surrogate update: epochs x minibatches passes over the rollout with
// one jointly clipped Adam step per minibatch. Returns the last minibatch's
// losses.
PpoLosses ppo_update(Mlp& policy, Mlp& value, Adam& policy_opt, Adam& value_opt,
                     const RolloutBatch& rollout, long update_index, const PpoConfig& cfg,
                     Rng& shuffle_rng);

struct PpoAgent {
  PpoConfig cfg;
  Mlp policy;
  Mlp value;
  Adam policy_opt;
  Adam value_opt;

  static PpoAgent init(int obs_dim, int n_actions, const PpoConfig& cfg, std::uint64_t seed);

  PpoAction act(const std::vector<double>& obs, Rng& rng) const {
    return ppo_act(policy, value, obs, rng);
  }
  int greedy(const std::vector<double>& obs) const { return ppo_greedy(policy, obs); }
  PpoLosses update(const RolloutBatch& rollout, long update_index, Rng& shuffle_rng) {
    return ppo_update(policy, value, policy_opt, value_opt, rollout, update_index, cfg,
                      shuffle_rng);
  }
};

}  // namespace pricelab
