#pragma once
// Policies trained under smoothing noise: DQN for the discrete-action
// survival task, DDPG for the continuous-action one. Both trainers keep the
// best-validation checkpoint and log validation scores.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "smoothrl/env.hpp"
#include "smoothrl/net.hpp"
#include "smoothrl/smoothing.hpp"

namespace smoothrl {

struct Transition {
  std::vector<double> obs;       // stacked noisy observation
  std::vector<double> next_obs;
  int action_disc = 0;
  double action_cont = 0.0;
  double reward = 0.0;
  bool terminal = false;  // true termination, not the time-limit cutoff
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Uniform sample without replacement within the batch.
  std::vector<const Transition*> sample(Rng& rng, std::size_t batch) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;  // FIFO write cursor once full
  std::vector<Transition> data_;
};

struct EpsSchedule {
  double initial = 1.0;
  double final_value = 0.0;
  double fraction = 0.16;  // of total steps over which epsilon decays

  double at(std::int64_t step, std::int64_t total_steps) const;
};

struct TrainLogEntry {
  std::int64_t step = 0;
  double validation_mean = 0.0;
  bool is_best = false;
};

struct DqnHyperparams {
  std::int64_t total_steps = 500000;
  int validation_interval = 2000;
  int validation_episodes = 10;
  double learning_rate = 1e-4;
  std::size_t buffer_capacity = 100000;
  int learning_starts = 1000;
  EpsSchedule eps;
  int target_update_interval = 10;  // env steps
  int batch_size = 1024;
  int train_interval = 256;  // env steps between update phases
  int gradient_steps = 128;
  double gamma = 0.99;
  std::vector<int> hidden = {256, 256};
  int restarts = 1;
  double early_stop_at = std::numeric_limits<double>::infinity();
};

struct DqnAgent {
  MlpNet q_net;
  MlpNet target_net;
  int frames = 1;
  double sigma = 0.0;  // smoothing noise the agent was trained with
};

struct OuNoise {
  double theta = 0.15;
  double sigma = 0.5;
  double dt = 1e-2;
  double state = 0.0;

  void reset() { state = 0.0; }
  double sample(Rng& rng);
};

struct DdpgHyperparams {
  std::int64_t total_steps = 300000;
  int validation_interval = 2000;
  int validation_episodes = 10;
  double learning_rate = 1e-4;
  std::size_t buffer_capacity = 1000000;
  int learning_starts = 100;
  int batch_size = 100;
  double tau = 0.005;  // soft target update coefficient
  double gamma = 0.99;
  double ou_sigma = 0.5;
  std::vector<int> hidden_actor = {400, 300};
  std::vector<int> hidden_critic = {400, 300};
  int restarts = 1;
  double early_stop_at = std::numeric_limits<double>::infinity();
};

struct DdpgAgent {
  MlpNet actor;
  MlpNet critic;  // input = stacked obs ++ action
  MlpNet target_actor;
  MlpNet target_critic;
  int frames = 1;
  double sigma = 0.0;
};

template <typename AgentT>
struct TrainResult {
  AgentT agent;
  std::vector<TrainLogEntry> log;
  double best_validation = 0.0;
};

TrainResult<DqnAgent> train_dqn(Env& env, const SmoothingConfig& smoothing,
                                const DqnHyperparams& hp, std::uint64_t seed);
TrainResult<DdpgAgent> train_ddpg(Env& env, const SmoothingConfig& smoothing,
                                  const DdpgHyperparams& hp, std::uint64_t seed);

// Deterministic greedy actions; DQN ties break toward the lowest index.
int greedy_action(const MlpNet& q_net, std::span<const double> stacked_obs);
double actor_action(const MlpNet& actor, std::span<const double> stacked_obs);

Policy make_policy(const DqnAgent& agent);
Policy make_policy(const DdpgAgent& agent);

// Soft update: target <- (1 - tau) * target + tau * online.
void soft_update(MlpNet& target, const MlpNet& online, double tau);

// Agent checkpoints (versioned JSON; wraps the net format).
void save_dqn_agent(const DqnAgent& agent, const std::string& path);
DqnAgent load_dqn_agent(const std::string& path);
void save_ddpg_agent(const DdpgAgent& agent, const std::string& path);
DdpgAgent load_ddpg_agent(const std::string& path);

// Writes (step, validation mean reward) rows.
void write_training_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log,
                            const std::string& config_hash);

}  // namespace smoothrl
