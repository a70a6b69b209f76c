#pragma once
// From-scratch deterministic-seeded environments: the two classic-control
// tasks plus the two synthetic games used for validating the certificates.

#include <array>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "smoothrl/rng.hpp"

namespace smoothrl {

enum class ActionKind { Discrete, Continuous };

struct ActionSpace {
  ActionKind kind = ActionKind::Discrete;
  int n = 0;               // Discrete: number of actions (>= 2)
  double lo = 0, hi = 0;   // Continuous: scalar action box
};

enum class RewardKind { PerStepSurvival, TerminalBoolean };

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  ActionSpace action_space;
  int max_steps = 0;
  RewardKind reward_kind = RewardKind::PerStepSurvival;
  double reward_min = 0.0;  // known bounds on the episode total reward
  double reward_max = 0.0;
  bool has_obs_box = false;           // true where the env clips observations
  std::vector<double> obs_lo, obs_hi;
};

struct EnvState {
  std::vector<double> features;
  int step_index = 0;
  bool done = false;
};

// Discrete actions are the int alternative, continuous the double one.
using Action = std::variant<int, double>;

struct StepResult {
  EnvState state;
  double reward = 0.0;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual EnvState reset(Rng& rng) = 0;
  virtual StepResult step(const Action& action) = 0;  // throws StepAfterDone
  virtual std::unique_ptr<Env> clone() const = 0;
  const EnvState& state() const { return state_; }

 protected:
  EnvState state_;
};

// Pure dynamics, exposed for direct cross-checking against an independent
// reference implementation of the benchmarks.
std::array<double, 4> cartpole_dynamics(const std::array<double, 4>& s, int action);
std::array<double, 2> mountaincar_dynamics(const std::array<double, 2>& s, double force);

class CartPole final : public Env {
 public:
  CartPole();
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) override;
  StepResult step(const Action& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPole>(*this); }

 private:
  EnvSpec spec_;
};

class MountainCar final : public Env {
 public:
  MountainCar();
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) override;
  StepResult step(const Action& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<MountainCar>(*this); }

 private:
  EnvSpec spec_;
  bool goal_reached_ = false;
};

// One-step game: fixed observation, reward nu for action 0 and zero for
// action 1.
class WorstCaseGame final : public Env {
 public:
  explicit WorstCaseGame(double nu = 1.0, std::vector<double> observation = {0.0, 0.0});
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) override;
  StepResult step(const Action& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<WorstCaseGame>(*this); }
  double nu() const { return nu_; }

 private:
  EnvSpec spec_;
  double nu_;
  std::vector<double> observation_;
};

// Two-step 1-D game with fixed ground-truth observations; reward 1 iff both
// actions are 0, paid on the final step.
class TwoStepGame final : public Env {
 public:
  explicit TwoStepGame(double obs1 = 0.0, double obs2 = 0.0);
  const EnvSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) override;
  StepResult step(const Action& action) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<TwoStepGame>(*this); }

 private:
  EnvSpec spec_;
  double obs1_, obs2_;
  int first_action_ = -1;
};

// Factory for the CLI: cartpole | mountaincar | worstcase | toy2.
std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace smoothrl
