/*
 * pricelab public C API.
 *
 * A session holds one effective experiment configuration (file defaults plus
 * key=value overrides). All operations run behind this boundary and report
 * errors as status codes; plab_session_last_error() returns the matching
 * message. Handles are opaque and single-threaded; independent sessions may
 * run concurrently.
 */
#ifndef PRICELAB_PRICELAB_H
#define PRICELAB_PRICELAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define PLAB_MAX_AGENTS 16

typedef enum plab_status {
  PLAB_OK = 0,
  PLAB_ERR_CONFIG = 1,         /* bad config file, key, value, or combination */
  PLAB_ERR_NO_CONVERGENCE = 2, /* equilibrium solver could not certify a solution */
  PLAB_ERR_INVALID = 3,        /* bad argument to an API call */
  PLAB_ERR_IO = 4,             /* file read/write failure */
  PLAB_ERR_RUNTIME = 5,        /* any other failure */
} plab_status;

typedef struct plab_session plab_session;

plab_session* plab_session_new(void);
void plab_session_free(plab_session* session);

/* Load a config file (NULL for built-in defaults) and apply "key=value"
 * overrides on top, in order. Replaces any previously loaded config. */
plab_status plab_session_load(plab_session* session, const char* config_path,
                              const char* const* overrides, int n_overrides);

/* Message for the most recent failing call on this session. */
const char* plab_session_last_error(const plab_session* session);

/* Hex hash of the effective config; embedded in every output file. */
plab_status plab_config_hash(plab_session* session, char* buf, size_t cap);

/* Canonical key = value dump of the effective config. */
plab_status plab_config_dump(plab_session* session, char* buf, size_t cap);

/* Seeds listed under run.seeds. Returns the total count through *count and
 * fills up to cap entries. */
plab_status plab_run_seeds(plab_session* session, uint64_t* buf, int cap, int* count);

typedef struct plab_equilibrium {
  int n_agents;
  double price[PLAB_MAX_AGENTS];
  long per_period_demand[PLAB_MAX_AGENTS];
  double per_period_profit[PLAB_MAX_AGENTS];
  long capacity_per_period;
  double certification_gap;
} plab_equilibrium;

/* Solve the competitive and collusive benchmarks at the configured capacity
 * and write the equilibrium CSV under out_dir. Output pointers may be NULL. */
plab_status plab_solve(plab_session* session, const char* out_dir, plab_equilibrium* nash,
                       plab_equilibrium* monopoly);

/* One equilibrium CSV row per capacity (units per period). */
plab_status plab_capacity_sweep(plab_session* session, const long* capacities, int count,
                                const char* out_dir);

/* Reward normalization bounds over the joint action grid at full inventory. */
plab_status plab_reward_bounds(plab_session* session, double* r_min, double* r_max);

typedef struct plab_train_result {
  double convergence_metric;
  int converged;
  double collusion_index_last10;
} plab_train_result;

/* Train one seed with the configured algorithm; writes the run log CSV,
 * benchmark CSV, and agent<k>.ckpt checkpoints under out_dir. */
plab_status plab_train(plab_session* session, uint64_t seed, const char* out_dir,
                       plab_train_result* result);

/* Greedy evaluation episode for agents loaded from checkpoint_dir
 * (agent<k>.ckpt); writes the trajectory CSV under out_dir. */
plab_status plab_eval(plab_session* session, const char* checkpoint_dir, uint64_t seed,
                      const char* out_dir, double* collusion_index);

/* Forced-deviation probe: agent's action is overridden at the 1-based
 * timestep; action -1 picks the one-step best response. Writes the
 * side-by-side episode CSV under out_dir. */
plab_status plab_deviate(plab_session* session, const char* checkpoint_dir, int agent,
                         int timestep, int action, uint64_t seed, const char* out_dir,
                         double* overall_profit_ratio);

/* Greedy best-response surface of one agent over all previous-price cells at
 * the given timesteps (NULL = 4 evenly spaced samples). */
plab_status plab_surface(plab_session* session, const char* checkpoint_dir, int agent,
                         const int* timesteps, int n_timesteps, const char* out_dir);

/* Hyperparameter sweep: one training run per (value, seed) over `parameter`,
 * seeds 1..seeds_per_value, at most `parallel` runs in flight. Writes the
 * sweep CSV under out_dir. */
plab_status plab_sweep(plab_session* session, const char* parameter, const char* const* values,
                       int n_values, int seeds_per_value, int parallel, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* PRICELAB_PRICELAB_H */
