#include "smoothrl/smoothing.hpp"

#include <cmath>

#include "smoothrl/errors.hpp"
#include "smoothrl/kernels.hpp"

namespace smoothrl {

BudgetLedger::BudgetLedger(double total_budget) : total_(total_budget) {
  if (total_ < 0.0) throw BadConfig("budget must be >= 0");
}

void BudgetLedger::charge(std::span<const double> eps) {
  const double n2 = kernels::sq_norm(eps.data(), eps.size());
  if (used_sq_ + n2 > total_ * total_ + 1e-12)
    throw BudgetExceeded("episode budget exceeded: used_sq " +
                         std::to_string(used_sq_ + n2) + " > B^2 " +
                         std::to_string(total_ * total_));
  used_sq_ += n2;
  step_norms_.push_back(std::sqrt(n2));
}

double BudgetLedger::remaining() const {
  const double r2 = total_ * total_ - used_sq_;
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

FrameBuffer::FrameBuffer(int frames, int obs_dim) : frames_(frames), obs_dim_(obs_dim) {
  if (frames < 1) throw BadConfig("frame stack depth must be >= 1");
  if (obs_dim < 1) throw BadConfig("obs_dim must be >= 1");
}

void FrameBuffer::push(std::span<const double> clean, std::span<const double> eps,
                       std::span<const double> delta) {
  if (static_cast<int>(clean.size()) != obs_dim_ ||
      static_cast<int>(eps.size()) != obs_dim_ ||
      static_cast<int>(delta.size()) != obs_dim_)
    throw DimMismatch("FrameBuffer::push: frame size != obs_dim");
  clean_.emplace_back(clean.begin(), clean.end());
  eps_.emplace_back(eps.begin(), eps.end());
  delta_.emplace_back(delta.begin(), delta.end());
  std::vector<double> noisy(obs_dim_);
  for (int i = 0; i < obs_dim_; ++i) noisy[i] = clean[i] + eps[i] + delta[i];
  noisy_.push_back(std::move(noisy));
}

void FrameBuffer::stacked_into(std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(frames_) * obs_dim_, 0.0);
  const int have = frame_count();
  const int take = std::min(frames_, have);
  // Pre-episode padding frames stay zero: they carry no noise and no budget.
  for (int k = 0; k < take; ++k) {
    const auto& f = noisy_[have - take + k];
    std::copy(f.begin(), f.end(), out.begin() + static_cast<std::size_t>(frames_ - take + k) * obs_dim_);
  }
}

std::vector<double> FrameBuffer::stacked() const {
  std::vector<double> out;
  stacked_into(out);
  return out;
}

std::vector<double> sample_noise(Rng& rng, double sigma, int dim) {
  std::vector<double> delta(dim, 0.0);
  if (sigma > 0.0) {
    for (auto& d : delta) d = sigma * rng.normal();
  }
  return delta;
}

Rollout rollout(Env& env, const Policy& policy, const SmoothingConfig& cfg,
                const Adversary& adversary, double budget, std::uint64_t episode_index) {
  if (cfg.sigma < 0.0) throw BadConfig("sigma must be >= 0");

  const std::uint64_t episode_seed = derive_seed(cfg.seed, episode_index);
  Rng rng_env(derive_seed(episode_seed, 0));
  Rng rng_noise(derive_seed(episode_seed, 1));
  Rng rng_adv(derive_seed(episode_seed, 2));

  const int obs_dim = env.spec().obs_dim;
  FrameBuffer buf(cfg.frames, obs_dim);
  BudgetLedger ledger(budget);

  Rollout out;
  out.budget = budget;
  out.sigma = cfg.sigma;
  out.frames = cfg.frames;
  out.episode_index = episode_index;

  EnvState state = env.reset(rng_env);
  std::vector<Action> actions;
  std::vector<double> stacked;
  const std::vector<double> zero_eps(obs_dim, 0.0);

  while (!state.done) {
    const std::vector<double> clean = state.features;

    std::vector<double> eps;
    if (adversary) {
      AdversaryView view;
      view.step_index = state.step_index;
      view.clean_frame = clean;
      view.history = &buf;
      view.actions = actions;
      view.remaining_budget = ledger.remaining();
      eps = adversary(view, rng_adv);
      if (static_cast<int>(eps.size()) != obs_dim)
        throw DimMismatch("adversary returned eps of wrong dimension");
    } else {
      eps = zero_eps;
    }
    ledger.charge(eps);

    const std::vector<double> delta = sample_noise(rng_noise, cfg.sigma, obs_dim);
    buf.push(clean, eps, delta);
    buf.stacked_into(stacked);

    const Action action = policy(stacked);
    actions.push_back(action);
    const StepResult sr = env.step(action);

    StepRecord rec;
    rec.clean = clean;
    rec.delta = delta;
    rec.eps = std::move(eps);
    rec.action = action;
    rec.reward = sr.reward;
    out.steps.push_back(std::move(rec));
    out.total_reward += sr.reward;
    state = sr.state;
  }
  out.spent_sq = ledger.used_sq();
  return out;
}

Rollout rollout(Env& env, const Policy& policy, const SmoothingConfig& cfg,
                std::uint64_t episode_index) {
  return rollout(env, policy, cfg, Adversary{}, 0.0, episode_index);
}

}  // namespace smoothrl
