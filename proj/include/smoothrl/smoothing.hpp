#pragma once
// Policy smoothing: Gaussian noise injected into each newly observed frame
// exactly once, frame stacking that preserves the fixed noisy frames, and
// the episode-level l2 budget ledger for adversarial offsets.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "smoothrl/env.hpp"
#include "smoothrl/rng.hpp"

namespace smoothrl {

struct SmoothingConfig {
  double sigma = 0.0;       // noise std in observation units
  int frames = 1;           // observation stack depth
  std::uint64_t seed = 0;   // master seed; episodes derive independent streams
};

// Tracks sum ||eps_t||^2 against B^2. charge() rejects any step that would
// push the episode past its budget (tolerance 1e-12).
class BudgetLedger {
 public:
  explicit BudgetLedger(double total_budget);

  void charge(std::span<const double> eps);
  double total() const { return total_; }
  double used_sq() const { return used_sq_; }
  double remaining() const;  // sqrt(max(B^2 - used_sq, 0))
  const std::vector<double>& step_norms() const { return step_norms_; }

 private:
  double total_;
  double used_sq_ = 0.0;
  std::vector<double> step_norms_;
};

// Holds every frame of the episode: clean, per-frame noise delta, adversarial
// offset eps, and the resulting noisy frame. delta is attached when the frame
// is pushed and never resampled; stacks reuse the stored noisy frames.
class FrameBuffer {
 public:
  FrameBuffer(int frames, int obs_dim);

  void push(std::span<const double> clean, std::span<const double> eps,
            std::span<const double> delta);

  // Concatenation of the `frames` most recent noisy frames, oldest first,
  // zero-padded before `frames` observations exist.
  std::vector<double> stacked() const;
  void stacked_into(std::vector<double>& out) const;

  int frame_count() const { return static_cast<int>(noisy_.size()); }
  int stack_depth() const { return frames_; }
  int obs_dim() const { return obs_dim_; }
  const std::vector<double>& clean(int i) const { return clean_[i]; }
  const std::vector<double>& noisy(int i) const { return noisy_[i]; }
  const std::vector<double>& delta(int i) const { return delta_[i]; }
  const std::vector<double>& eps(int i) const { return eps_[i]; }

 private:
  int frames_;
  int obs_dim_;
  std::vector<std::vector<double>> clean_, noisy_, delta_, eps_;
};

struct AdversaryView {
  int step_index = 0;
  std::span<const double> clean_frame;   // current frame, before noise
  const FrameBuffer* history = nullptr;  // frames of previous steps
  std::span<const Action> actions;       // actions taken so far
  double remaining_budget = 0.0;
};

// Returns eps_t with ||eps_t|| <= view.remaining_budget. The Rng is an
// adversary-private stream (adversaries may randomize; smoothed attacks
// draw their noise bundles from it).
using Adversary = std::function<std::vector<double>(const AdversaryView&, Rng&)>;

using Policy = std::function<Action(std::span<const double> stacked)>;

struct StepRecord {
  std::vector<double> clean, delta, eps;
  Action action;
  double reward = 0.0;
};

struct Rollout {
  std::vector<StepRecord> steps;
  double total_reward = 0.0;  // gamma = 1
  double budget = 0.0;
  double spent_sq = 0.0;
  double sigma = 0.0;
  int frames = 1;
  std::uint64_t episode_index = 0;
};

std::vector<double> sample_noise(Rng& rng, double sigma, int dim);

// Runs one full episode of the smoothed policy. The adversary may be empty.
// The per-episode streams (env init, noise, adversary) are derived from
// (cfg.seed, episode_index), so batches of episodes parallelize
// deterministically.
Rollout rollout(Env& env, const Policy& policy, const SmoothingConfig& cfg,
                const Adversary& adversary, double budget, std::uint64_t episode_index);

// Convenience: clean smoothed evaluation (no adversary, budget 0).
Rollout rollout(Env& env, const Policy& policy, const SmoothingConfig& cfg,
                std::uint64_t episode_index);

}  // namespace smoothrl
