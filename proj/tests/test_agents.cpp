#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dqn.hpp"
#include "ppo.hpp"

using namespace pricelab;

TEST_CASE("epsilon schedule endpoints and midpoint") {
  DqnConfig cfg;
  CHECK(epsilon_at(0, cfg) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(epsilon_at(cfg.training_episodes, cfg) == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(epsilon_at(cfg.training_episodes / 2, cfg) ==
        doctest::Approx(std::sqrt(0.015)).epsilon(1e-9));
  double prev = 2.0;
  for (long e = 0; e <= cfg.training_episodes; e += 1000) {
    const double eps = epsilon_at(e, cfg);
    CHECK(eps <= prev);
    prev = eps;
  }
}

TEST_CASE("entropy schedule anneals to the floor at three quarters") {
  PpoConfig cfg;
  CHECK(entropy_coef_at(0, cfg) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(entropy_coef_at(750, cfg) == doctest::Approx(0.0001).epsilon(1e-9));
  CHECK(entropy_coef_at(1000, cfg) == doctest::Approx(0.0001).epsilon(1e-12));
  double prev = 1.0;
  for (long u = 0; u <= cfg.training_updates; u += 25) {
    const double coef = entropy_coef_at(u, cfg);
    CHECK(coef <= prev);
    prev = coef;
  }
}

TEST_CASE("greedy action selection and tie-breaking") {
  const Mlp q = Mlp::init(3, 15, {8}, 5);
  Rng rng(1);

  // epsilon 0: pure argmax
  const std::vector<double> obs{0.2, 0.4, 0.9};
  const int greedy = greedy_argmax(q.forward(obs));
  for (int trial = 0; trial < 10; ++trial) CHECK(dqn_act(q, obs, 0.0, rng) == greedy);

  // all-equal Q-values: lowest index wins
  CHECK(greedy_argmax(std::vector<double>(15, 0.25)) == 0);

  // epsilon 1: uniform support over all 15 actions
  std::vector<int> counts(15, 0);
  for (int trial = 0; trial < 3000; ++trial) ++counts[dqn_act(q, obs, 1.0, rng)];
  for (int a = 0; a < 15; ++a) CHECK(counts[a] > 100);
}

TEST_CASE("greedy choice is invariant to a constant shift of the Q-values") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(15);
    for (auto& v : q) v = rng.uniform(-2, 2);
    std::vector<double> shifted = q;
    const double c = rng.uniform(-10, 10);
    for (auto& v : shifted) v += c;
    CHECK(greedy_argmax(q) == greedy_argmax(shifted));
  }
}

TEST_CASE("replay buffer overwrites the oldest entries first") {
  ReplayBuffer buf(8, 1);
  for (int k = 0; k < 11; ++k) buf.push({static_cast<double>(k)}, k, 0.0, {0.0}, false);
  CHECK(buf.size() == 8);
  // entries 0..2 are gone; oldest live entry is 3
  std::vector<double> obs;
  int action = -1;
  buf.transition_at(0, &obs, &action, nullptr, nullptr, nullptr);
  CHECK(action == 3);
  buf.transition_at(7, &obs, &action, nullptr, nullptr, nullptr);
  CHECK(action == 10);
}

TEST_CASE("replay sampling draws distinct transitions") {
  ReplayBuffer buf(64, 1);
  for (int k = 0; k < 40; ++k) buf.push({static_cast<double>(k)}, k, 0.0, {0.0}, false);
  Rng rng(9);
  const TransitionBatch batch = buf.sample(16, rng);
  REQUIRE(batch.size() == 16);
  std::vector<int> seen;
  for (int a : batch.actions) {
    CHECK(std::find(seen.begin(), seen.end(), a) == seen.end());
    seen.push_back(a);
  }
  CHECK_THROWS_AS(buf.sample(41, rng), Error);
}

namespace {

TransitionBatch tiny_batch(int obs_dim, int n, int n_actions, bool all_terminal, Rng& rng) {
  TransitionBatch batch;
  batch.obs.resize(n, obs_dim);
  batch.next_obs.resize(n, obs_dim);
  batch.actions.resize(n);
  batch.rewards.resize(n);
  batch.terminal.assign(n, all_terminal ? 1 : 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < obs_dim; ++c) {
      batch.obs(r, c) = rng.uniform();
      batch.next_obs(r, c) = rng.uniform();
    }
    batch.actions[r] = static_cast<int>(rng.uniform_int(n_actions));
    batch.rewards(r) = rng.uniform();
  }
  return batch;
}

}  // namespace

TEST_CASE("terminal transitions bootstrap nothing") {
  DqnConfig cfg;
  Rng rng(17);
  Mlp q = Mlp::init(3, 5, {8}, 2);
  const Mlp target = Mlp::init(3, 5, {8}, 3);
  Adam opt = Adam::init(q, cfg.learning_rate, cfg.adam_epsilon);
  TransitionBatch batch = tiny_batch(3, 4, 5, true, rng);

  // expected loss: mean (Q(s)[a] - r)^2, independent of the target net
  double expect = 0.0;
  for (int r = 0; r < 4; ++r) {
    const Eigen::VectorXd qv = q.forward(Eigen::VectorXd(batch.obs.row(r).transpose()));
    const double err = qv(batch.actions[r]) - batch.rewards(r);
    expect += err * err / 4.0;
  }
  const double loss = dqn_train_step(q, target, batch, cfg, opt);
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("a fixed point of the TD equations yields zero loss and no movement") {
  DqnConfig cfg;
  cfg.discount = 1.0;
  Mlp q = Mlp::init(2, 3, {4}, 4);
  for (auto& w : q.w) w.setZero();
  for (auto& b : q.b) b.setZero();
  const Mlp target = q;
  Adam opt = Adam::init(q, cfg.learning_rate, cfg.adam_epsilon);
  Rng rng(23);
  TransitionBatch batch = tiny_batch(2, 4, 3, false, rng);
  batch.rewards.setZero();  // 0 + max_a 0 = 0 = Q, everywhere
  const double loss = dqn_train_step(q, target, batch, cfg, opt);
  CHECK(loss == 0.0);
  for (const auto& w : q.w) CHECK(w.isZero());
}

TEST_CASE("repeated steps on one batch reduce the TD loss") {
  DqnConfig cfg;
  Rng rng(31);
  Mlp q = Mlp::init(4, 6, {16, 16}, 7);
  const Mlp target = Mlp::init(4, 6, {16, 16}, 8);
  Adam opt = Adam::init(q, cfg.learning_rate, cfg.adam_epsilon);
  TransitionBatch batch = tiny_batch(4, 16, 6, false, rng);
  const double first = dqn_train_step(q, target, batch, cfg, opt);
  double last = first;
  for (int s = 0; s < 99; ++s) last = dqn_train_step(q, target, batch, cfg, opt);
  CHECK(last < 0.1 * first);
}

TEST_CASE("policy sampling matches the softmax and its log-probability") {
  Mlp policy = Mlp::init(3, 15, {8}, 11);
  const Mlp value = Mlp::init(3, 1, {8}, 12);
  Rng rng(13);
  const std::vector<double> obs{0.1, 0.5, 0.9};

  const Eigen::VectorXd logits = policy.forward(Eigen::Map<const Eigen::VectorXd>(obs.data(), 3));
  const Eigen::VectorXd logp = log_softmax(logits);
  CHECK(logp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<int> counts(15, 0);
  for (int trial = 0; trial < 5000; ++trial) {
    const PpoAction a = ppo_act(policy, value, obs, rng);
    CHECK(a.log_prob == doctest::Approx(logp(a.action)).epsilon(1e-9));
    ++counts[a.action];
  }
  for (int a = 0; a < 15; ++a) {
    const double expect = 5000.0 * std::exp(logp(a));
    CHECK(std::abs(counts[a] - expect) < 5.0 * std::sqrt(expect) + 10.0);
  }

  // uniform logits: every action near 1/15
  for (auto& w : policy.w) w.setZero();
  std::vector<int> uniform_counts(15, 0);
  for (int trial = 0; trial < 15000; ++trial)
    ++uniform_counts[ppo_act(policy, value, obs, rng).action];
  for (int a = 0; a < 15; ++a) CHECK(std::abs(uniform_counts[a] - 1000) < 150);

  CHECK(ppo_greedy(policy, obs) == 0);  // all-equal logits: lowest index
}

namespace {

RolloutBatch synthetic_rollout(int steps, int obs_dim, double reward, double value, Rng& rng) {
  RolloutBatch r;
  r.obs.resize(steps, obs_dim);
  r.actions.resize(steps);
  r.log_probs.resize(steps);
  r.values.setConstant(steps, value);
  r.rewards.setConstant(steps, reward);
  r.terminal.assign(steps, 0);
  r.terminal.back() = 1;
  for (int i = 0; i < steps; ++i) {
    for (int c = 0; c < obs_dim; ++c) r.obs(i, c) = rng.uniform();
    r.actions[i] = static_cast<int>(rng.uniform_int(3));
    r.log_probs(i) = -1.0986;
  }
  return r;
}

}  // namespace

TEST_CASE("gae worked examples") {
  PpoConfig cfg;
  Rng rng(41);

  // zero rewards, zero values: zero advantages
  RolloutBatch zero = synthetic_rollout(10, 2, 0.0, 0.0, rng);
  compute_gae(zero, cfg);
  CHECK(zero.advantages.cwiseAbs().maxCoeff() == 0.0);

  // lambda 0: advantage equals the one-step TD error
  PpoConfig lam0 = cfg;
  lam0.gae_lambda = 0.0;
  RolloutBatch td = synthetic_rollout(6, 2, 1.0, 0.25, rng);
  compute_gae(td, lam0);
  for (int t = 0; t < 5; ++t)
    CHECK(td.advantages(t) == doctest::Approx(1.0 + 0.25 - 0.25).epsilon(1e-12));
  CHECK(td.advantages(5) == doctest::Approx(1.0 - 0.25).epsilon(1e-12));

  // lambda 1, discount 1, V = 0: advantage is the tail sum of rewards
  PpoConfig lam1 = cfg;
  lam1.gae_lambda = 1.0;
  lam1.discount = 1.0;
  const int episode_len = 8;
  RolloutBatch tail = synthetic_rollout(episode_len, 2, 0.5, 0.0, rng);
  compute_gae(tail, lam1);
  for (int t = 0; t < episode_len; ++t)
    CHECK(tail.advantages(t) == doctest::Approx(0.5 * (episode_len - t)).epsilon(1e-12));
  CHECK(tail.returns(0) == doctest::Approx(tail.advantages(0)).epsilon(1e-12));

  // rollout must close its episode
  RolloutBatch open = synthetic_rollout(4, 2, 0.0, 0.0, rng);
  open.terminal.back() = 0;
  CHECK_THROWS_AS(compute_gae(open, cfg), Error);
}

TEST_CASE("gae treats episode segments independently") {
  PpoConfig cfg;
  cfg.gae_lambda = 1.0;
  cfg.discount = 1.0;
  Rng rng(43);
  RolloutBatch two = synthetic_rollout(6, 2, 1.0, 0.0, rng);
  two.terminal = {0, 0, 1, 0, 0, 1};
  compute_gae(two, cfg);
  CHECK(two.advantages(0) == doctest::Approx(3.0));
  CHECK(two.advantages(3) == doctest::Approx(3.0));
  CHECK(two.advantages(5) == doctest::Approx(1.0));
}

TEST_CASE("ppo update with zero advantages and perfect values is entropy-only") {
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.num_minibatches = 1;
  cfg.normalize_advantages = false;
  Rng rng(47);
  Mlp policy = Mlp::init(2, 3, {4}, 21);
  Mlp value = Mlp::init(2, 1, {4}, 22);
  Adam p_opt = Adam::init(policy, cfg.learning_rate, cfg.adam_epsilon);
  Adam v_opt = Adam::init(value, cfg.learning_rate, cfg.adam_epsilon);

  RolloutBatch rollout = synthetic_rollout(10, 2, 0.0, 0.0, rng);
  // consistent sampled data: log-probs and values from the actual networks
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> obs{rollout.obs(i, 0), rollout.obs(i, 1)};
    const Eigen::VectorXd logp =
        log_softmax(policy.forward(Eigen::Map<const Eigen::VectorXd>(obs.data(), 2)));
    rollout.log_probs(i) = logp(rollout.actions[i]);
    rollout.values(i) = value.forward(obs)[0];
  }
  rollout.advantages.setZero(10);
  rollout.returns = rollout.values;  // value targets met exactly

  const Mlp value_before = value;
  const PpoLosses losses = ppo_update(policy, value, p_opt, v_opt, rollout, 0, cfg, rng);
  CHECK(losses.policy_loss == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(losses.value_loss == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(losses.entropy > 0.0);
  // the value net saw a zero gradient; only the entropy term moves the policy
  for (size_t l = 0; l < value.w.size(); ++l) CHECK(value.w[l] == value_before.w[l]);
}

TEST_CASE("unit ratios reduce the surrogate to the negative mean advantage") {
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.num_minibatches = 1;
  cfg.normalize_advantages = false;
  cfg.entropy_max = 1e-10;  // effectively disable the entropy term
  cfg.entropy_min = 1e-10;
  Rng rng(53);
  Mlp policy = Mlp::init(2, 3, {4}, 31);
  Mlp value = Mlp::init(2, 1, {4}, 32);
  Adam p_opt = Adam::init(policy, cfg.learning_rate, cfg.adam_epsilon);
  Adam v_opt = Adam::init(value, cfg.learning_rate, cfg.adam_epsilon);

  RolloutBatch rollout = synthetic_rollout(8, 2, 0.0, 0.0, rng);
  for (int i = 0; i < 8; ++i) {
    const std::vector<double> obs{rollout.obs(i, 0), rollout.obs(i, 1)};
    const Eigen::VectorXd logp =
        log_softmax(policy.forward(Eigen::Map<const Eigen::VectorXd>(obs.data(), 2)));
    rollout.log_probs(i) = logp(rollout.actions[i]);
    rollout.values(i) = value.forward(obs)[0];
  }
  rollout.advantages.resize(8);
  for (int i = 0; i < 8; ++i) rollout.advantages(i) = rng.uniform(-1, 1);
  const double adv_mean = rollout.advantages.mean();
  rollout.returns = rollout.values;

  const PpoLosses losses = ppo_update(policy, value, p_opt, v_opt, rollout, 0, cfg, rng);
  CHECK(losses.policy_loss == doctest::Approx(-adv_mean).epsilon(1e-9));
}

TEST_CASE("fully clipped samples contribute no policy gradient") {
  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.num_minibatches = 1;
  cfg.normalize_advantages = false;
  cfg.entropy_max = 1e-10;
  cfg.entropy_min = 1e-10;
  Rng rng(59);
  Mlp policy = Mlp::init(2, 2, {4}, 41);
  Mlp value = Mlp::init(2, 1, {4}, 42);
  Adam p_opt = Adam::init(policy, cfg.learning_rate, cfg.adam_epsilon);
  Adam v_opt = Adam::init(value, cfg.learning_rate, cfg.adam_epsilon);

  // two-action toy batch engineered so every ratio lands beyond the clip with
  // a positive advantage: min(r*A, clip(r)*A) picks the clipped constant.
  RolloutBatch rollout = synthetic_rollout(4, 2, 0.0, 0.0, rng);
  for (int i = 0; i < 4; ++i) {
    const std::vector<double> obs{rollout.obs(i, 0), rollout.obs(i, 1)};
    const Eigen::VectorXd logp =
        log_softmax(policy.forward(Eigen::Map<const Eigen::VectorXd>(obs.data(), 2)));
    rollout.actions[i] = 0;
    rollout.log_probs(i) = logp(0) - std::log(2.0);  // new/old ratio = 2 > 1.2
  }
  rollout.advantages.setConstant(4, 1.0);
  rollout.returns = rollout.values;

  const Mlp policy_before = policy;
  ppo_update(policy, value, p_opt, v_opt, rollout, 0, cfg, rng);
  for (size_t l = 0; l < policy.w.size(); ++l)
    CHECK((policy.w[l] - policy_before.w[l]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rollouts smaller than the minibatch count are rejected") {
  PpoConfig cfg;
  cfg.num_minibatches = 10;
  Rng rng(61);
  Mlp policy = Mlp::init(2, 3, {4}, 51);
  Mlp value = Mlp::init(2, 1, {4}, 52);
  Adam p_opt = Adam::init(policy, cfg.learning_rate, cfg.adam_epsilon);
  Adam v_opt = Adam::init(value, cfg.learning_rate, cfg.adam_epsilon);
  RolloutBatch rollout = synthetic_rollout(8, 2, 0.0, 0.0, rng);
  rollout.advantages.setZero(8);
  rollout.returns = rollout.values;
  CHECK_THROWS_AS(ppo_update(policy, value, p_opt, v_opt, rollout, 0, cfg, rng), Error);
}
