#include "smoothrl/attack.hpp"

#include <algorithm>
#include <cmath>

#include "smoothrl/errors.hpp"
#include "smoothrl/kernels.hpp"

namespace smoothrl {

namespace {

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void clip_box(std::vector<double>& o, const AttackConfig& cfg) {
  if (cfg.obs_lo.empty()) return;
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = std::clamp(o[i], cfg.obs_lo[i], cfg.obs_hi[i]);
}

// Projects o onto the l2 ball of radius `radius` around `center`. The box
// clip afterwards only moves coordinates toward the (in-box) center, so the
// ball constraint survives it.
void project_ball(std::vector<double>& o, std::span<const double> center, double radius) {
  std::vector<double> diff(o.size());
  for (std::size_t i = 0; i < o.size(); ++i) diff[i] = o[i] - center[i];
  const double n = std::sqrt(kernels::sq_norm(diff.data(), diff.size()));
  if (n > radius) {
    const double s = radius / n;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = center[i] + s * diff[i];
  }
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double remaining_after(double budget, double spent) {
  const double r2 = budget * budget - spent * spent;
  return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

// Q-network evaluations with optional smoothing averages. The noise bundle
// is drawn once per step and reused across every PGD iteration; the dirty
// side perturbs only the current frame (the dirty context already carries
// the agent's realized noise), the clean side perturbs all real frames.
class QOracle {
 public:
  QOracle(const MlpNet& net, const AttackContext& ctx, const AttackConfig& cfg, Rng& rng)
      : net_(net), ctx_(ctx), m_(std::max(cfg.smoothing_samples, 0)) {
    const bool noisy = m_ > 0 && cfg.sigma > 0.0;
    const int draws = noisy ? m_ : 1;
    const int dim = ctx.obs_dim;
    clean_noise_.assign(static_cast<std::size_t>(draws) * (ctx.real_prior + 1) * dim, 0.0);
    dirty_noise_.assign(static_cast<std::size_t>(draws) * dim, 0.0);
    if (noisy) {
      for (auto& v : clean_noise_) v = cfg.sigma * rng.normal();
      for (auto& v : dirty_noise_) v = cfg.sigma * rng.normal();
    }
    samples_ = draws;
    stack_.resize(static_cast<std::size_t>(ctx.frames) * dim);
  }

  std::vector<double> q_clean(std::span<const double> o) {
    const int dim = ctx_.obs_dim;
    std::vector<double> mean(net_.output_dim(), 0.0);
    for (int j = 0; j < samples_; ++j) {
      std::copy(ctx_.clean_prior.begin(), ctx_.clean_prior.end(), stack_.begin());
      std::copy(o.begin(), o.end(), stack_.end() - dim);
      const double* noise = clean_noise_.data() +
                            static_cast<std::size_t>(j) * (ctx_.real_prior + 1) * dim;
      // Real prior blocks sit at the tail of the prior stack; padding stays
      // noise-free, matching what the agent actually sees.
      double* real_begin = stack_.data() + static_cast<std::size_t>(ctx_.frames - 1 -
                                                                    ctx_.real_prior) * dim;
      for (int i = 0; i < (ctx_.real_prior + 1) * dim; ++i) real_begin[i] += noise[i];
      const auto& q = forward(net_, stack_, trace_);
      for (std::size_t a = 0; a < mean.size(); ++a) mean[a] += q[a];
    }
    for (auto& v : mean) v /= samples_;
    return mean;
  }

  std::vector<double> q_dirty(std::span<const double> o_adv) {
    const int dim = ctx_.obs_dim;
    std::vector<double> mean(net_.output_dim(), 0.0);
    for (int j = 0; j < samples_; ++j) {
      std::copy(ctx_.dirty_prior.begin(), ctx_.dirty_prior.end(), stack_.begin());
      double* cur = stack_.data() + stack_.size() - dim;
      const double* noise = dirty_noise_.data() + static_cast<std::size_t>(j) * dim;
      for (int i = 0; i < dim; ++i) cur[i] = o_adv[i] + noise[i];
      const auto& q = forward(net_, stack_, trace_);
      for (std::size_t a = 0; a < mean.size(); ++a) mean[a] += q[a];
    }
    for (auto& v : mean) v /= samples_;
    return mean;
  }

  // d/d(o_adv) of <upstream, mean_j Q(dirty stack_j)>, written to grad.
  void q_dirty_grad(std::span<const double> o_adv, std::span<const double> upstream,
                    std::vector<double>& grad) {
    const int dim = ctx_.obs_dim;
    grad.assign(dim, 0.0);
    for (int j = 0; j < samples_; ++j) {
      std::copy(ctx_.dirty_prior.begin(), ctx_.dirty_prior.end(), stack_.begin());
      double* cur = stack_.data() + stack_.size() - dim;
      const double* noise = dirty_noise_.data() + static_cast<std::size_t>(j) * dim;
      for (int i = 0; i < dim; ++i) cur[i] = o_adv[i] + noise[i];
      const GradBundle g = backward(net_, stack_, upstream);
      const double* slice = g.d_input.data() + g.d_input.size() - dim;
      for (int i = 0; i < dim; ++i) grad[i] += slice[i];
    }
    for (auto& v : grad) v /= samples_;
  }

 private:
  const MlpNet& net_;
  const AttackContext& ctx_;
  int m_;
  int samples_ = 1;
  std::vector<double> clean_noise_, dirty_noise_;
  std::vector<double> stack_;
  ForwardTrace trace_;
};

}  // namespace

AttackContext make_attack_context(const FrameBuffer& history, int frames) {
  AttackContext ctx;
  ctx.obs_dim = history.obs_dim();
  ctx.frames = frames;
  const int prior = frames - 1;
  ctx.clean_prior.assign(static_cast<std::size_t>(prior) * ctx.obs_dim, 0.0);
  ctx.dirty_prior.assign(static_cast<std::size_t>(prior) * ctx.obs_dim, 0.0);
  const int have = history.frame_count();
  ctx.real_prior = std::min(prior, have);
  for (int k = 0; k < ctx.real_prior; ++k) {
    const auto& clean = history.clean(have - ctx.real_prior + k);
    const auto& noisy = history.noisy(have - ctx.real_prior + k);
    const std::size_t off = static_cast<std::size_t>(prior - ctx.real_prior + k) * ctx.obs_dim;
    std::copy(clean.begin(), clean.end(), ctx.clean_prior.begin() + off);
    std::copy(noisy.begin(), noisy.end(), ctx.dirty_prior.begin() + off);
  }
  return ctx;
}

AttackStepResult attack_dqn_step(const MlpNet& q_net, const AttackContext& ctx,
                                 std::span<const double> obs, const AttackConfig& cfg,
                                 Rng& rng) {
  AttackStepResult res;
  res.observation.assign(obs.begin(), obs.end());
  res.remaining_budget = cfg.budget;

  const auto iters = static_cast<long>(std::floor(cfg.nu_mult * cfg.budget / cfg.eta));
  if (iters < 1) return res;  // too little budget to move anywhere

  QOracle oracle(q_net, ctx, cfg, rng);
  const std::vector<double> q_clean = oracle.q_clean(obs);
  const double q_best = *std::max_element(q_clean.begin(), q_clean.end());

  double q_worst = q_best;
  std::vector<double> grad, softmax(q_clean.size()), upstream(q_clean.size());

  for (int a = 0; a < static_cast<int>(q_clean.size()); ++a) {
    if (!(q_clean[a] <= q_best - cfg.lambda_q)) continue;  // not a target

    std::vector<double> o_adv(obs.begin(), obs.end());
    for (long i = 0; i < iters; ++i) {
      const std::vector<double> q = oracle.q_dirty(o_adv);
      if (argmax_lowest(q) == a) {
        if (q_clean[a] < q_worst) {
          q_worst = q_clean[a];
          res.observation = o_adv;
          res.flipped = true;
          res.target = a;
        }
        break;
      }
      // Ascend log softmax of the perceived Q at the target index.
      double mx = *std::max_element(q.begin(), q.end());
      double z = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) z += std::exp(q[k] - mx);
      for (std::size_t k = 0; k < q.size(); ++k) softmax[k] = std::exp(q[k] - mx) / z;
      for (std::size_t k = 0; k < q.size(); ++k) upstream[k] = -softmax[k];
      upstream[a] += 1.0;
      oracle.q_dirty_grad(o_adv, upstream, grad);
      const double gn = std::sqrt(kernels::sq_norm(grad.data(), grad.size()));
      if (gn == 0.0) break;
      for (std::size_t k = 0; k < o_adv.size(); ++k) o_adv[k] += cfg.eta * grad[k] / gn;
      project_ball(o_adv, obs, cfg.budget);
      clip_box(o_adv, cfg);
    }
  }
  res.remaining_budget = remaining_after(cfg.budget, dist(res.observation, obs));
  return res;
}

AttackStepResult attack_ddpg_step(const MlpNet& critic, const MlpNet& actor,
                                  const AttackContext& ctx, std::span<const double> obs,
                                  const AttackConfig& cfg, Rng& rng) {
  AttackStepResult res;
  res.observation.assign(obs.begin(), obs.end());
  res.remaining_budget = cfg.budget;
  if (cfg.budget <= 0.0 || cfg.tau_steps < 1) return res;

  const int dim = ctx.obs_dim;
  const int stack_dim = ctx.frames * dim;
  const bool noisy = cfg.smoothing_samples > 0 && cfg.sigma > 0.0;
  const int m = noisy ? cfg.smoothing_samples : 1;

  // Fixed noise bundles for the whole step: the clean side perturbs the real
  // frames of (C, o), the dirty side o' independently.
  std::vector<double> clean_noise(static_cast<std::size_t>(m) * (ctx.real_prior + 1) * dim, 0.0);
  std::vector<double> dirty_noise(static_cast<std::size_t>(m) * dim, 0.0);
  if (noisy) {
    for (auto& v : clean_noise) v = cfg.sigma * rng.normal();
    for (auto& v : dirty_noise) v = cfg.sigma * rng.normal();
  }

  // Clean observation stacks (one per sample), actions appended per iteration.
  std::vector<std::vector<double>> clean_stacks(m);
  for (int j = 0; j < m; ++j) {
    auto& s = clean_stacks[j];
    s.resize(stack_dim);
    std::copy(ctx.clean_prior.begin(), ctx.clean_prior.end(), s.begin());
    std::copy(obs.begin(), obs.end(), s.end() - dim);
    const double* noise = clean_noise.data() + static_cast<std::size_t>(j) * (ctx.real_prior + 1) * dim;
    double* real_begin = s.data() + static_cast<std::size_t>(ctx.frames - 1 - ctx.real_prior) * dim;
    for (int i = 0; i < (ctx.real_prior + 1) * dim; ++i) real_begin[i] += noise[i];
  }

  std::vector<double> o_adv(obs.begin(), obs.end());
  std::vector<double> dirty_stack(stack_dim);
  std::vector<double> critic_in(stack_dim + 1);
  std::vector<double> grad(dim), upstream(1);
  ForwardTrace trace_a;

  for (int it = 0; it < cfg.tau_steps; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int j = 0; j < m; ++j) {
      std::copy(ctx.dirty_prior.begin(), ctx.dirty_prior.end(), dirty_stack.begin());
      double* cur = dirty_stack.data() + stack_dim - dim;
      const double* noise = dirty_noise.data() + static_cast<std::size_t>(j) * dim;
      for (int i = 0; i < dim; ++i) cur[i] = o_adv[i] + noise[i];

      const double a = forward(actor, dirty_stack, trace_a)[0];
      std::copy(clean_stacks[j].begin(), clean_stacks[j].end(), critic_in.begin());
      critic_in[stack_dim] = a;
      upstream[0] = 1.0;
      const GradBundle dq = backward(critic, critic_in, upstream);
      upstream[0] = dq.d_input[stack_dim];
      GradBundle da = GradBundle::zeros_like(actor);
      backward_accumulate(actor, trace_a, upstream, da);
      const double* slice = da.d_input.data() + da.d_input.size() - dim;
      for (int i = 0; i < dim; ++i) grad[i] += slice[i];
    }
    for (int i = 0; i < dim; ++i) {
      grad[i] = grad[i] / m + 2.0 * cfg.lambda_reg * (o_adv[i] - obs[i]);
    }
    const double gn = std::sqrt(kernels::sq_norm(grad.data(), grad.size()));
    const double on = std::sqrt(kernels::sq_norm(o_adv.data(), o_adv.size()));
    if (gn <= 1e-3 * on || gn == 0.0) break;
    // Descend the objective (the adversary minimizes the agent's value).
    for (int i = 0; i < dim; ++i) o_adv[i] -= cfg.eta * grad[i] / gn;
    project_ball(o_adv, obs, cfg.budget);
    clip_box(o_adv, cfg);
  }

  res.observation = std::move(o_adv);
  res.remaining_budget = remaining_after(cfg.budget, dist(res.observation, obs));
  return res;
}

namespace {

AttackConfig with_env_box(const AttackConfig& acfg, const Env& env, double sigma) {
  AttackConfig cfg = acfg;
  cfg.sigma = sigma;
  if (env.spec().has_obs_box) {
    cfg.obs_lo = env.spec().obs_lo;
    cfg.obs_hi = env.spec().obs_hi;
  } else {
    cfg.obs_lo.clear();
    cfg.obs_hi.clear();
  }
  return cfg;
}

}  // namespace

Rollout attack_episode(Env& env, const DqnAgent& agent, const SmoothingConfig& scfg,
                       const AttackConfig& acfg, std::uint64_t episode_index) {
  if (agent.frames != scfg.frames) throw BadConfig("agent frames != smoothing frames");
  const AttackConfig base = with_env_box(acfg, env, scfg.sigma);
  const Adversary adv = [&agent, base](const AdversaryView& view, Rng& rng) {
    AttackContext ctx = make_attack_context(*view.history, agent.frames);
    AttackConfig cfg = base;
    cfg.budget = view.remaining_budget;
    const AttackStepResult res = attack_dqn_step(agent.q_net, ctx, view.clean_frame, cfg, rng);
    std::vector<double> eps(res.observation.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = res.observation[i] - view.clean_frame[i];
    return eps;
  };
  return rollout(env, make_policy(agent), scfg, adv, acfg.budget, episode_index);
}

Rollout attack_episode(Env& env, const DdpgAgent& agent, const SmoothingConfig& scfg,
                       const AttackConfig& acfg, std::uint64_t episode_index) {
  if (agent.frames != scfg.frames) throw BadConfig("agent frames != smoothing frames");
  const AttackConfig base = with_env_box(acfg, env, scfg.sigma);
  const Adversary adv = [&agent, base](const AdversaryView& view, Rng& rng) {
    AttackContext ctx = make_attack_context(*view.history, agent.frames);
    AttackConfig cfg = base;
    cfg.budget = view.remaining_budget;
    const AttackStepResult res =
        attack_ddpg_step(agent.critic, agent.actor, ctx, view.clean_frame, cfg, rng);
    std::vector<double> eps(res.observation.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = res.observation[i] - view.clean_frame[i];
    return eps;
  };
  return rollout(env, make_policy(agent), scfg, adv, acfg.budget, episode_index);
}

}  // namespace smoothrl
