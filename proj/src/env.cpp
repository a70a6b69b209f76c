#include "smoothrl/env.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrl/errors.hpp"

namespace smoothrl {

namespace {

int discrete_action(const Action& a, int n) {
  const int* v = std::get_if<int>(&a);
  if (!v) throw BadConfig("discrete environment received a continuous action");
  if (*v < 0 || *v >= n) throw BadConfig("discrete action out of range");
  return *v;
}

double continuous_action(const Action& a) {
  const double* v = std::get_if<double>(&a);
  if (!v) throw BadConfig("continuous environment received a discrete action");
  return *v;
}

// Cart-pole constants (reference benchmark values; the paper does not state
// them).
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kTotalMass = kMassCart + kMassPole;
constexpr double kPoleHalfLength = 0.5;
constexpr double kPoleMassLength = kMassPole * kPoleHalfLength;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;
constexpr double kThetaLimit = 12.0 * 2.0 * M_PI / 360.0;
constexpr double kXLimit = 2.4;

// Mountain-car constants.
constexpr double kMinPosition = -1.2;
constexpr double kMaxPosition = 0.6;
constexpr double kMaxSpeed = 0.07;
constexpr double kGoalPosition = 0.45;
constexpr double kPower = 0.0015;

}  // namespace

std::array<double, 4> cartpole_dynamics(const std::array<double, 4>& s, int action) {
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
  const double costheta = std::cos(theta);
  const double sintheta = std::sin(theta);
  const double temp =
      (force + kPoleMassLength * theta_dot * theta_dot * sintheta) / kTotalMass;
  const double theta_acc =
      (kGravity * sintheta - costheta * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kMassPole * costheta * costheta / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * costheta / kTotalMass;
  // Explicit Euler, state updated with the pre-step derivatives.
  return {x + kTau * x_dot, x_dot + kTau * x_acc, theta + kTau * theta_dot,
          theta_dot + kTau * theta_acc};
}

std::array<double, 2> mountaincar_dynamics(const std::array<double, 2>& s, double force) {
  force = std::clamp(force, -1.0, 1.0);
  double position = s[0], velocity = s[1];
  velocity += force * kPower - 0.0025 * std::cos(3.0 * position);
  velocity = std::clamp(velocity, -kMaxSpeed, kMaxSpeed);
  position += velocity;
  position = std::clamp(position, kMinPosition, kMaxPosition);
  if (position <= kMinPosition && velocity < 0.0) velocity = 0.0;
  return {position, velocity};
}

CartPole::CartPole() {
  spec_.name = "cartpole";
  spec_.obs_dim = 4;
  spec_.action_space = {ActionKind::Discrete, 2, 0, 0};
  spec_.max_steps = 200;
  spec_.reward_kind = RewardKind::PerStepSurvival;
  spec_.reward_min = 0.0;
  spec_.reward_max = 200.0;
  // No observation box: the kinematic limits here end the episode rather
  // than clip the features.
  state_.done = true;
}

EnvState CartPole::reset(Rng& rng) {
  state_.features.resize(4);
  for (auto& f : state_.features) f = rng.uniform(-0.05, 0.05);
  state_.step_index = 0;
  state_.done = false;
  return state_;
}

StepResult CartPole::step(const Action& action) {
  if (state_.done) throw StepAfterDone();
  const int a = discrete_action(action, 2);
  const std::array<double, 4> cur{state_.features[0], state_.features[1],
                                  state_.features[2], state_.features[3]};
  const auto nxt = cartpole_dynamics(cur, a);
  state_.features.assign(nxt.begin(), nxt.end());
  state_.step_index += 1;
  const bool failed = std::fabs(nxt[0]) > kXLimit || std::fabs(nxt[2]) > kThetaLimit;
  state_.done = failed || state_.step_index >= spec_.max_steps;
  return {state_, 1.0};
}

MountainCar::MountainCar() {
  spec_.name = "mountaincar";
  spec_.obs_dim = 2;
  spec_.action_space = {ActionKind::Continuous, 0, -1.0, 1.0};
  spec_.max_steps = 999;
  spec_.reward_kind = RewardKind::TerminalBoolean;
  spec_.reward_min = 0.0;
  spec_.reward_max = 1.0;
  spec_.has_obs_box = true;
  spec_.obs_lo = {kMinPosition, -kMaxSpeed};
  spec_.obs_hi = {kMaxPosition, kMaxSpeed};
  state_.done = true;
}

EnvState MountainCar::reset(Rng& rng) {
  state_.features = {rng.uniform(-0.6, -0.4), 0.0};
  state_.step_index = 0;
  state_.done = false;
  goal_reached_ = false;
  return state_;
}

StepResult MountainCar::step(const Action& action) {
  if (state_.done) throw StepAfterDone();
  const double force = continuous_action(action);
  const std::array<double, 2> cur{state_.features[0], state_.features[1]};
  const auto nxt = mountaincar_dynamics(cur, force);
  state_.features.assign(nxt.begin(), nxt.end());
  state_.step_index += 1;
  const bool at_goal = nxt[0] >= kGoalPosition;
  double reward = 0.0;
  if (at_goal && !goal_reached_) {
    reward = 1.0;
    goal_reached_ = true;
  }
  state_.done = at_goal || state_.step_index >= spec_.max_steps;
  return {state_, reward};
}

WorstCaseGame::WorstCaseGame(double nu, std::vector<double> observation)
    : nu_(nu), observation_(std::move(observation)) {
  spec_.name = "worstcase";
  spec_.obs_dim = static_cast<int>(observation_.size());
  spec_.action_space = {ActionKind::Discrete, 2, 0, 0};
  spec_.max_steps = 1;
  spec_.reward_kind = RewardKind::TerminalBoolean;
  spec_.reward_min = 0.0;
  spec_.reward_max = nu_;
  state_.done = true;
}

EnvState WorstCaseGame::reset(Rng&) {
  state_.features = observation_;
  state_.step_index = 0;
  state_.done = false;
  return state_;
}

StepResult WorstCaseGame::step(const Action& action) {
  if (state_.done) throw StepAfterDone();
  const int a = discrete_action(action, 2);
  state_.step_index = 1;
  state_.done = true;
  return {state_, a == 0 ? nu_ : 0.0};
}

TwoStepGame::TwoStepGame(double obs1, double obs2) : obs1_(obs1), obs2_(obs2) {
  spec_.name = "toy2";
  spec_.obs_dim = 1;
  spec_.action_space = {ActionKind::Discrete, 2, 0, 0};
  spec_.max_steps = 2;
  spec_.reward_kind = RewardKind::TerminalBoolean;
  spec_.reward_min = 0.0;
  spec_.reward_max = 1.0;
  state_.done = true;
}

EnvState TwoStepGame::reset(Rng&) {
  state_.features = {obs1_};
  state_.step_index = 0;
  state_.done = false;
  first_action_ = -1;
  return state_;
}

StepResult TwoStepGame::step(const Action& action) {
  if (state_.done) throw StepAfterDone();
  const int a = discrete_action(action, 2);
  if (state_.step_index == 0) {
    first_action_ = a;
    state_.features = {obs2_};
    state_.step_index = 1;
    return {state_, 0.0};
  }
  state_.step_index = 2;
  state_.done = true;
  return {state_, (first_action_ == 0 && a == 0) ? 1.0 : 0.0};
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "cartpole") return std::make_unique<CartPole>();
  if (name == "mountaincar") return std::make_unique<MountainCar>();
  if (name == "worstcase") return std::make_unique<WorstCaseGame>();
  if (name == "toy2") return std::make_unique<TwoStepGame>();
  throw BadConfig("unknown environment: " + name);
}

}  // namespace smoothrl
