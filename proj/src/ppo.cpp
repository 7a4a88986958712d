#include "ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pricelab {

void PpoConfig::validate() const {
  require(training_updates >= 1, Errc::config, "ppo: training_updates must be >= 1");
  require(epochs >= 1, Errc::config, "ppo: epochs must be >= 1");
  require(num_minibatches >= 1, Errc::config, "ppo: num_minibatches must be >= 1");
  require(num_envs >= 1, Errc::config, "ppo: num_envs must be >= 1");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, Errc::config, "ppo: gae_lambda in [0,1]");
  require(clip_coef > 0.0, Errc::config, "ppo: clip_coef must be > 0");
  require(grad_clip > 0.0, Errc::config, "ppo: grad_clip must be > 0");
  require(entropy_min > 0.0 && entropy_min <= entropy_max, Errc::config,
          "ppo: need 0 < entropy_min <= entropy_max");
  require(entropy_anneal_fraction > 0.0 && entropy_anneal_fraction <= 1.0, Errc::config,
          "ppo: entropy_anneal_fraction in (0,1]");
}

double entropy_coef_at(long update, const PpoConfig& cfg) {
  require(update >= 0 && update <= cfg.training_updates, Errc::invalid_argument,
          "entropy_coef_at: update outside the run");
  const double anneal_end =
      cfg.entropy_anneal_fraction * static_cast<double>(cfg.training_updates);
  const double frac = static_cast<double>(update) / anneal_end;
  const double coef = cfg.entropy_max * std::pow(cfg.entropy_min / cfg.entropy_max, frac);
  return std::max(coef, cfg.entropy_min);
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  const double lse = std::log((logits.array() - max).exp().sum()) + max;
  return logits.array() - lse;
}

PpoAction ppo_act(const Mlp& policy, const Mlp& value, const std::vector<double>& obs,
                  Rng& rng) {
  const Eigen::Map<const Eigen::VectorXd> x(obs.data(), static_cast<long>(obs.size()));
  const Eigen::VectorXd logp = log_softmax(policy.forward(x));
  const double u = rng.uniform();
  double cum = 0.0;
  int action = static_cast<int>(logp.size()) - 1;
  for (long a = 0; a < logp.size(); ++a) {
    cum += std::exp(logp(a));
    if (u < cum) {
      action = static_cast<int>(a);
      break;
    }
  }
  PpoAction out;
  out.action = action;
  out.log_prob = logp(action);
  out.value = value.forward(x)(0);
  return out;
}

int ppo_greedy(const Mlp& policy, const std::vector<double>& obs) {
  const std::vector<double> logits = policy.forward(obs);
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best;
}

void compute_gae(RolloutBatch& rollout, const PpoConfig& cfg) {
  const long n = rollout.size();
  require(n >= 1, Errc::invalid_argument, "compute_gae: empty rollout");
  require(!rollout.terminal.empty() && rollout.terminal.back(), Errc::invalid_argument,
          "incomplete-episode: rollout must end on a terminal step");
  rollout.advantages.resize(n);
  rollout.returns.resize(n);
  double adv = 0.0;
  for (long t = n - 1; t >= 0; --t) {
    const double not_done = rollout.terminal[t] ? 0.0 : 1.0;
    const double next_value = t + 1 < n ? rollout.values(t + 1) : 0.0;
    const double delta =
        rollout.rewards(t) + cfg.discount * next_value * not_done - rollout.values(t);
    adv = delta + cfg.discount * cfg.gae_lambda * not_done * adv;
    rollout.advantages(t) = adv;
    rollout.returns(t) = adv + rollout.values(t);
  }
}

PpoLosses ppo_update(Mlp& policy, Mlp& value, Adam& policy_opt, Adam& value_opt,
                     const RolloutBatch& rollout, long update_index, const PpoConfig& cfg,
                     Rng& shuffle_rng) {
  cfg.validate();
  const long n = rollout.size();
  require(n >= cfg.num_minibatches, Errc::invalid_argument,
          "minibatch-too-small: rollout smaller than the number of minibatches");
  const long mb_size = n / cfg.num_minibatches;  // remainder dropped after shuffling
  const double ent_coef = entropy_coef_at(update_index, cfg);

  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoLosses last;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (long i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    for (int mb = 0; mb < cfg.num_minibatches; ++mb) {
      const long begin = mb * mb_size;
      Eigen::MatrixXd obs(mb_size, rollout.obs.cols());
      Eigen::VectorXd adv(mb_size);
      for (long r = 0; r < mb_size; ++r) {
        obs.row(r) = rollout.obs.row(order[begin + r]);
        adv(r) = rollout.advantages(order[begin + r]);
      }
      if (cfg.normalize_advantages) {
        const double mean = adv.mean();
        const double stdev =
            std::sqrt((adv.array() - mean).square().sum() / static_cast<double>(mb_size));
        adv = (adv.array() - mean) / (stdev + 1e-8);
      }

      // Policy pass: clipped surrogate plus entropy bonus.
      Mlp::Cache pi_cache;
      const Eigen::MatrixXd logits = policy.forward_batch(obs, &pi_cache);
      Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(mb_size, logits.cols());
      double policy_loss = 0.0;
      double entropy = 0.0;
      const double inv_b = 1.0 / static_cast<double>(mb_size);
      for (long r = 0; r < mb_size; ++r) {
        const long idx = order[begin + r];
        const Eigen::VectorXd logp = log_softmax(logits.row(r).transpose());
        const Eigen::VectorXd prob = logp.array().exp();
        const int action = rollout.actions[idx];
        const double ratio = std::exp(logp(action) - rollout.log_probs(idx));
        const double unclipped = ratio * adv(r);
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_coef, 1.0 + cfg.clip_coef) * adv(r);
        policy_loss += -std::min(unclipped, clipped) * inv_b;

        // d(-min(u, c))/dlogits: zero when the clipped branch is active.
        if (unclipped <= clipped) {
          const double dl_dlogp_a = -ratio * adv(r) * inv_b;
          for (long a = 0; a < logits.cols(); ++a)
            dlogits(r, a) += dl_dlogp_a * ((a == action ? 1.0 : 0.0) - prob(a));
        }

        const double ent = -(prob.array() * logp.array()).sum();
        entropy += ent * inv_b;
        // d(-coef * H)/dlogit_a = coef * sum_k dH/dlogit via softmax jacobian
        for (long a = 0; a < logits.cols(); ++a) {
          const double dent_dlogit = -prob(a) * (logp(a) + ent);
          dlogits(r, a) += -ent_coef * dent_dlogit * inv_b;
        }
      }
      Grads pi_grads = policy.backward(pi_cache, dlogits);

      // Value pass: clipped squared error against the returns.
      Mlp::Cache v_cache;
      const Eigen::MatrixXd v_out = value.forward_batch(obs, &v_cache);
      Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(mb_size, 1);
      double value_loss = 0.0;
      for (long r = 0; r < mb_size; ++r) {
        const long idx = order[begin + r];
        const double v_old = rollout.values(idx);
        const double ret = rollout.returns(idx);
        const double v_new = v_out(r, 0);
        const double v_clipped =
            v_old + std::clamp(v_new - v_old, -cfg.clip_coef, cfg.clip_coef);
        const double sq = (v_new - ret) * (v_new - ret);
        const double sq_clipped = (v_clipped - ret) * (v_clipped - ret);
        value_loss += std::max(sq, sq_clipped) * inv_b;
        // When the clipped term wins the max its clamp is saturated, so the
        // sample contributes no gradient.
        if (sq >= sq_clipped) dv(r, 0) = cfg.value_coef * 2.0 * (v_new - ret) * inv_b;
      }
      Grads v_grads = value.backward(v_cache, dv);

      std::vector<Grads*> both{&pi_grads, &v_grads};
      clip_global_norm(both, cfg.grad_clip);
      policy_opt.update(policy, pi_grads);
      value_opt.update(value, v_grads);

      last.policy_loss = policy_loss;
      last.value_loss = value_loss;
      last.entropy = entropy;
    }
  }
  return last;
}

PpoAgent PpoAgent::init(int obs_dim, int n_actions, const PpoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Mlp policy = Mlp::init(obs_dim, n_actions, cfg.hidden, splitmix64(seed));
  Mlp value = Mlp::init(obs_dim, 1, cfg.hidden, splitmix64(seed + 0x9e3779b97f4a7c15ULL));
  Adam p_opt = Adam::init(policy, cfg.learning_rate, cfg.adam_epsilon);
  Adam v_opt = Adam::init(value, cfg.learning_rate, cfg.adam_epsilon);
  return PpoAgent{cfg, std::move(policy), std::move(value), std::move(p_opt), std::move(v_opt)};
}

}  // namespace pricelab
