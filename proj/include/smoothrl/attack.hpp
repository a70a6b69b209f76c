#pragma once
// Budget-bounded empirical attacks: targeted PGD on the Q-network for DQN
// agents, regularized descent through actor and critic for DDPG, and the
// smoothed-agent variants that evaluate and differentiate mean outputs over
// a fixed bundle of noise draws.

#include <cstdint>
#include <span>
#include <vector>

#include "smoothrl/agents.hpp"
#include "smoothrl/env.hpp"
#include "smoothrl/net.hpp"
#include "smoothrl/smoothing.hpp"

namespace smoothrl {

struct AttackConfig {
  double budget = 0.0;        // episode budget B (per-step calls get the remainder)
  double eta = 0.01;          // PGD step size
  double nu_mult = 2.0;       // DQN: iterations = floor(nu_mult * B / eta)
  int tau_steps = 100;        // DDPG: fixed iteration count
  double lambda_q = 0.0;      // DQN: minimum clean-Q gap before an action is targeted
  double lambda_reg = 0.0;    // DDPG: weight of the l2 regularizer
  int smoothing_samples = 0;  // m > 0 attacks the smoothed agent
  double sigma = 0.0;         // smoothing std used by the defended agent
  std::vector<double> obs_lo, obs_hi;  // crafted-observation box (empty = none)
};

// Stacked frames before the current one, as the attacker knows them: the
// true values (clean) and the values the agent has perceived (dirty,
// including past eps and realized noise). Zero-padded to frames-1 blocks.
struct AttackContext {
  std::vector<double> clean_prior;
  std::vector<double> dirty_prior;
  int real_prior = 0;  // trailing blocks that are real frames, not padding
  int obs_dim = 0;
  int frames = 1;
};

AttackContext make_attack_context(const FrameBuffer& history, int frames);

struct AttackStepResult {
  std::vector<double> observation;  // crafted current frame
  double remaining_budget = 0.0;    // sqrt(B^2 - ||observation - clean||^2)
  bool flipped = false;             // DQN: a target action was induced
  int target = -1;
};

AttackStepResult attack_dqn_step(const MlpNet& q_net, const AttackContext& ctx,
                                 std::span<const double> obs, const AttackConfig& cfg,
                                 Rng& rng);

AttackStepResult attack_ddpg_step(const MlpNet& critic, const MlpNet& actor,
                                  const AttackContext& ctx, std::span<const double> obs,
                                  const AttackConfig& cfg, Rng& rng);

// Full attacked episodes through the smoothing rollout; the per-step call
// receives the ledger's remaining budget, so the episode satisfies
// sqrt(sum ||eps_t||^2) <= B exactly. Observations are box-clipped where the
// environment clips them (the config's box is filled in from the env spec).
Rollout attack_episode(Env& env, const DqnAgent& agent, const SmoothingConfig& scfg,
                       const AttackConfig& acfg, std::uint64_t episode_index);
Rollout attack_episode(Env& env, const DdpgAgent& agent, const SmoothingConfig& scfg,
                       const AttackConfig& acfg, std::uint64_t episode_index);

}  // namespace smoothrl
