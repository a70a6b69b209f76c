// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is pinned here, in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <vector>

#include "smoothrl/agents.hpp"
#include "smoothrl/attack.hpp"
#include "smoothrl/certify.hpp"
#include "smoothrl/env.hpp"
#include "smoothrl/net.hpp"
#include "smoothrl/normal.hpp"
#include "smoothrl/rng.hpp"
#include "smoothrl/smoothing.hpp"
#include "smoothrl/stats.hpp"
#include "smoothrl/transcript.hpp"
#include "smoothrl/verify.hpp"

using namespace smoothrl;

namespace {

int g_failures = 0;

class Criterion {
 public:
  explicit Criterion(int number, const char* title) : number_(number), title_(title) {
    start_ = std::chrono::steady_clock::now();
  }
  void finish(bool ok, const std::string& detail) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::printf("[%s] criterion %d (%s): %s  [%.1fs]\n", ok ? "PASS" : "FAIL", number_, title_,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }

 private:
  int number_;
  const char* title_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion1_closed_form() {
  Criterion c(1, "closed-form bound");
  Rng rng(11);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(1e-9, 1.0 - 1e-9);
    const double sigma = rng.uniform(0.01, 5.0);
    max_err = std::max(max_err, std::fabs(theorem1_lower(p, 0.0, sigma) - p));
  }
  bool monotone = true;
  double prev = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double b = 3.0 * i / 99.0;
    const double v = theorem1_lower(0.9, b, 0.5);
    if (v > prev) monotone = false;
    prev = v;
  }
  c.finish(max_err <= 1e-12 && monotone,
           fmt("identity error %.2e (<= 1e-12), monotone over 100 budgets: %s", max_err,
               monotone ? "yes" : "no"));
}

void criterion2_tightness() {
  Criterion c(2, "tightness of the certificate");
  const double sigma = 0.5;
  bool ok = true;
  std::string worst;
  double worst_ratio = 0.0;
  for (double p : {0.7, 0.9, 0.975}) {
    for (double ratio : {0.5, 1.0, 2.0}) {
      const TightnessResult r =
          tightness_experiment(p, ratio * sigma, sigma, 1000000, 2026);
      const double gap = std::fabs(r.empirical - r.bound) / r.std_err;
      if (gap > worst_ratio) {
        worst_ratio = gap;
        worst = fmt("p=%.3f B/s=%.1f: |%.6f-%.6f| = %.2f se", p, ratio, r.empirical, r.bound,
                    gap);
      }
      if (gap > 3.0) ok = false;
    }
  }
  c.finish(ok, "worst deviation " + worst + " (limit 3 se, 1e6 episodes each)");
}

void criterion3_soundness() {
  Criterion c(3, "soundness against adaptive grid adversaries");
  const double sigma = 0.5;
  const double omega = sigma * norm_ppf(0.9);
  const SoundnessGrid grid;  // 21 x 11 x 8 default resolution
  bool ok = true;
  std::string detail;
  for (double ratio : {0.5, 1.0, 2.0}) {
    const SoundnessResult r = soundness_search(ratio * sigma, sigma, omega, omega, grid,
                                               200000, 1000000, 31337);
    if (!r.sound) ok = false;
    detail += fmt("B/s=%.1f: min %.4f vs bound %.4f (tol %.4f); ", ratio, r.min_adaptive,
                  r.bound, r.tolerance);
  }
  c.finish(ok, detail);
}

void criterion4_coverage() {
  Criterion c(4, "statistical coverage");
  Rng rng(4444);
  const double p_true = 0.3;
  const int n = 200;
  int cp_covered = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    int k = 0;
    for (int i = 0; i < n; ++i) k += rng.uniform() < p_true ? 1 : 0;
    if (clopper_pearson_lower(k, n, 0.05) <= p_true) ++cp_covered;
  }

  int dkw_covered = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> s(n);
    for (auto& x : s) x = rng.uniform();
    EcdfBand band(s, 0.05);
    const auto& sorted = band.sorted_samples();
    const double w = band.half_width();
    bool contained = true;
    for (int i = 1; i <= n && contained; ++i) {
      if (sorted[i - 1] - static_cast<double>(i - 1) / n > w) contained = false;
      if (static_cast<double>(i) / n - sorted[i - 1] > w) contained = false;
    }
    if (contained) ++dkw_covered;
  }
  c.finish(cp_covered >= 940 && dkw_covered >= 940,
           fmt("clopper-pearson %d/1000, dkw %d/1000 (need >= 940)", cp_covered, dkw_covered));
}

Policy pd_balancer() {
  // Hand-tuned linear balancer on the newest (noisy) frame; gives a spread
  // of survival times under smoothing noise without any training.
  return [](std::span<const double> stacked) -> Action {
    const std::size_t d = 4;
    const std::size_t off = stacked.size() - d;
    const double x = stacked[off], xd = stacked[off + 1], th = stacked[off + 2],
                 thd = stacked[off + 3];
    return (3.0 * th + thd + 0.05 * x + 0.2 * xd) > 0.0 ? 1 : 0;
  };
}

std::vector<double> cartpole_totals(const Policy& policy, double sigma, int frames,
                                    std::uint64_t seed, int episodes) {
  CartPole env;
  const SmoothingConfig cfg{sigma, frames, seed};
  std::vector<double> totals(episodes);
  for (int e = 0; e < episodes; ++e)
    totals[e] = rollout(env, policy, cfg, static_cast<std::uint64_t>(e)).total_reward;
  return totals;
}

void criterion5_equivalence() {
  Criterion c(5, "certification pipeline equivalence");

  // Exact agreement on {0,1} rewards with a single threshold.
  Rng rng(55);
  BoundInputs bern;
  for (int i = 0; i < 2000; ++i) bern.samples.push_back(rng.uniform() < 0.7 ? 1.0 : 0.0);
  bern.alpha = 0.05;
  bern.sigma = 0.4;
  bern.budgets = {0.0, 0.1, 0.2, 0.4, 0.8};
  bern.reward_min = 0.0;
  bern.reward_max = 1.0;
  bern.num_thresholds = 1;
  const Certificate ca = certify_expected_reward(bern, CertMethod::BernoulliCP);
  const Certificate cb = certify_expected_reward(bern, CertMethod::PerThresholdCP);
  bool exact = true;
  for (std::size_t i = 0; i < bern.budgets.size(); ++i)
    exact = exact && ca.per_budget[i].lower_bound == cb.per_budget[i].lower_bound;

  // On cart-pole transcripts the per-threshold certificate should dominate
  // the DKW one on at least 95% of the budget grid.
  const double sigma = 0.2;
  BoundInputs cart;
  cart.samples = cartpole_totals(pd_balancer(), sigma, 1, 505, 10000);
  cart.alpha = 0.05;
  cart.sigma = sigma;
  for (int i = 0; i < 20; ++i) cart.budgets.push_back(4.0 * sigma * i / 19.0);
  cart.reward_min = 0.0;
  cart.reward_max = 200.0;
  cart.num_thresholds = 200;
  const Certificate cp = certify_expected_reward(cart, CertMethod::PerThresholdCP);
  const Certificate dkw = certify_expected_reward(cart, CertMethod::CdfDkw);
  int wins = 0;
  for (std::size_t i = 0; i < cart.budgets.size(); ++i)
    if (cp.per_budget[i].lower_bound >= dkw.per_budget[i].lower_bound) ++wins;

  c.finish(exact && wins >= 19,
           fmt("bernoulli==per-threshold exactly: %s; per-threshold >= dkw at %d/20 budgets",
               exact ? "yes" : "no", wins));
}

void criterion6_gradients() {
  Criterion c(6, "gradient fidelity");
  const std::vector<std::vector<int>> architectures{
      {20, 64, 64, 2},    // desk-scale q-network
      {20, 256, 256, 2},  // published q-network
      {10, 64, 64, 1},    // desk-scale actor (tanh head below)
      {11, 64, 64, 1},    // desk-scale critic
      {10, 400, 300, 1},  // published actor shape
  };
  constexpr double h = 1e-5;
  Rng rng(66);
  double max_rel = 0.0;
  long skipped = 0, total = 0;

  for (std::size_t arch = 0; arch < architectures.size(); ++arch) {
    const auto& dims = architectures[arch];
    const bool tanh_head = dims.back() == 1 && dims.front() == 10;
    for (int rep = 0; rep < 100; ++rep) {
      const MlpNet net =
          MlpNet::he_uniform(dims, rng,
                             tanh_head ? OutputHead::TanhScaled : OutputHead::Linear, -1, 1);
      std::vector<double> x(dims.front());
      for (auto& v : x) v = rng.uniform(-1, 1);
      std::vector<double> u(dims.back());
      for (auto& v : u) v = rng.uniform(-1, 1);
      const GradBundle g = backward(net, x, u);

      auto value = [&](const MlpNet& n, const std::vector<double>& in, ForwardTrace& tr) {
        const auto& y = forward(n, in, tr);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += u[i] * y[i];
        return s;
      };
      auto hidden_signs_differ = [&](const ForwardTrace& a, const ForwardTrace& b) {
        for (std::size_t l = 0; l + 1 < net.layer_count(); ++l)
          for (std::size_t i = 0; i < a.pre[l].size(); ++i)
            if ((a.pre[l][i] > 0.0) != (b.pre[l][i] > 0.0)) return true;
        return false;
      };
      auto check_one = [&](double analytic, double fp, double fm, bool valid) {
        ++total;
        if (!valid) {
          ++skipped;
          return;
        }
        const double fd = (fp - fm) / (2.0 * h);
        const double rel =
            std::fabs(analytic - fd) / std::max({1.0, std::fabs(analytic), std::fabs(fd)});
        max_rel = std::max(max_rel, rel);
      };

      // All input coordinates.
      ForwardTrace tp, tm;
      for (int i = 0; i < dims.front(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fp = value(net, xp, tp);
        const double fm = value(net, xm, tm);
        check_one(g.d_input[i], fp, fm, !hidden_signs_differ(tp, tm));
      }
      // A random slice of parameter coordinates.
      MlpNet np = net, nm = net;
      for (int probe = 0; probe < 40; ++probe) {
        const std::size_t l = rng.uniform_int(net.layer_count());
        const std::size_t k = rng.uniform_int(net.weights[l].size());
        np.weights[l][k] = net.weights[l][k] + h;
        nm.weights[l][k] = net.weights[l][k] - h;
        const double fp = value(np, x, tp);
        const double fm = value(nm, x, tm);
        check_one(g.d_weights[l][k], fp, fm, !hidden_signs_differ(tp, tm));
        np.weights[l][k] = net.weights[l][k];
        nm.weights[l][k] = net.weights[l][k];
      }
    }
  }
  const bool ok = max_rel <= 1e-5 && skipped * 100 <= total;
  c.finish(ok, fmt("max relative error %.2e (<= 1e-5) over %ld checks, %ld kink-crossing "
                   "probes excluded",
                   max_rel, total, skipped));
}

struct EndToEnd {
  std::vector<double> cert_budgets;
  Certificate cert;
  DqnAgent defended;
};

void criterion7_end_to_end(EndToEnd& out) {
  Criterion c(7, "end-to-end desk-scale cartpole");

  DqnHyperparams fast;
  fast.total_steps = 50000;
  fast.learning_rate = 1e-3;
  fast.buffer_capacity = 50000;
  fast.learning_starts = 1000;
  fast.batch_size = 128;
  fast.train_interval = 4;
  fast.gradient_steps = 1;
  fast.target_update_interval = 500;
  fast.hidden = {64, 64};
  fast.early_stop_at = 200.0;

  // Defended agent: sigma = 0.2 smoothing at train and test time.
  CartPole env;
  const double sigma = 0.2;
  const SmoothingConfig defended_cfg{sigma, 5, 1};
  const auto defended = train_dqn(env, defended_cfg, fast, 1);

  // Undefended agent at the published architecture (more attackable).
  DqnHyperparams big = fast;
  big.hidden = {256, 256};
  big.total_steps = 100000;
  const SmoothingConfig undefended_cfg{0.0, 5, 1};
  const auto undefended = train_dqn(env, undefended_cfg, big, 1);

  // Clean smoothed evaluation of the defended agent, 10k episodes.
  const SmoothingConfig eval_cfg{sigma, 5, 42};
  std::vector<double> totals(10000);
  {
    CartPole eval_env;
    const Policy pol = make_policy(defended.agent);
    for (int e = 0; e < 10000; ++e)
      totals[e] = rollout(eval_env, pol, eval_cfg, static_cast<std::uint64_t>(e)).total_reward;
  }
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= totals.size();

  // Certify.
  BoundInputs in;
  in.samples = totals;
  in.alpha = 0.05;
  in.sigma = sigma;
  in.budgets = {0.0, 0.1, 0.25, 0.5, 0.6, 0.75};
  in.reward_min = 0.0;
  in.reward_max = 200.0;
  in.num_thresholds = 200;
  const Certificate cert = certify_expected_reward(in, CertMethod::PerThresholdCP);

  // The B = 0 bound must sit inside the Clopper-Pearson band of the mean:
  // the pipeline may not lose more than the per-threshold band itself.
  double band_loss = 0.0;
  {
    std::vector<double> sorted = totals;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<std::int64_t>(sorted.size());
    for (int t = 1; t <= 200; ++t) {
      const auto it =
          std::lower_bound(sorted.begin(), sorted.end(), static_cast<double>(t) - 1e-9);
      const auto k = static_cast<std::int64_t>(n - (it - sorted.begin()));
      band_loss += static_cast<double>(k) / n - clopper_pearson_lower(k, n, 0.05 / 200);
    }
  }
  const double b0 = cert.per_budget[0].lower_bound;
  const bool b0_in_band = b0 <= mean && b0 >= mean - band_loss - 1e-6;

  bool monotone = true;
  for (std::size_t i = 1; i < cert.per_budget.size(); ++i)
    if (cert.per_budget[i].lower_bound > cert.per_budget[i - 1].lower_bound) monotone = false;

  // Attack the undefended agent; the pointwise minimum over lambda is the
  // reported robustness curve.
  const std::vector<double> attack_budgets{0.5, 0.6};
  const std::vector<double> lambdas{0.25, 0.5, 1.0};
  std::vector<double> attacked_min(attack_budgets.size(),
                                   std::numeric_limits<double>::infinity());
  {
    CartPole attack_env;
    const SmoothingConfig scfg{0.0, 5, 5};
    for (std::size_t bi = 0; bi < attack_budgets.size(); ++bi) {
      for (double lambda : lambdas) {
        AttackConfig acfg;
        acfg.budget = attack_budgets[bi];
        acfg.lambda_q = lambda;
        double sum = 0.0;
        const int episodes = 300;
        for (int e = 0; e < episodes; ++e)
          sum += attack_episode(attack_env, undefended.agent, scfg, acfg,
                                static_cast<std::uint64_t>(e))
                     .total_reward;
        attacked_min[bi] = std::min(attacked_min[bi], sum / episodes);
      }
    }
  }

  // Non-vacuousness: some positive budget where the certified floor of the
  // defended agent beats the observed attacked reward of the undefended one.
  bool nonvacuous = false;
  std::string compare;
  for (std::size_t bi = 0; bi < attack_budgets.size(); ++bi) {
    double cert_at_b = 0.0;
    for (std::size_t i = 0; i < in.budgets.size(); ++i)
      if (in.budgets[i] == attack_budgets[bi]) cert_at_b = cert.per_budget[i].lower_bound;
    compare += fmt("B=%.2f: cert %.1f vs attacked %.1f; ", attack_budgets[bi], cert_at_b,
                   attacked_min[bi]);
    if (cert_at_b > attacked_min[bi]) nonvacuous = true;
  }

  const bool ok = mean >= 150.0 && b0_in_band && monotone && nonvacuous;
  c.finish(ok, fmt("clean mean %.2f (>=150); B=0 bound %.2f within band loss %.2f of mean: %s; "
                   "monotone: %s; %s nonvacuous: %s",
                   mean, b0, band_loss, b0_in_band ? "yes" : "no", monotone ? "yes" : "no",
                   compare.c_str(), nonvacuous ? "yes" : "no"));

  out.cert_budgets = in.budgets;
  out.cert = cert;
  out.defended = defended.agent;
}

void criterion8_ledger() {
  Criterion c(8, "episode budget ledger");
  CartPole env;
  Rng rng_net(88);
  DqnAgent agent;
  agent.q_net = MlpNet::he_uniform({8, 16, 2}, rng_net);
  agent.target_net = agent.q_net;
  agent.frames = 2;
  agent.sigma = 0.1;
  const SmoothingConfig scfg{0.1, 2, 808};

  bool ledger_ok = true;
  bool b0_identical = true;
  double worst_slack = 0.0;
  for (int e = 0; e < 10000; ++e) {
    AttackConfig acfg;
    acfg.budget = 0.1 * static_cast<double>(e % 11);  // mixed budgets incl. zero
    acfg.lambda_q = 0.0;
    const Rollout r = attack_episode(env, agent, scfg, acfg, static_cast<std::uint64_t>(e));
    const double slack = r.spent_sq - acfg.budget * acfg.budget;
    worst_slack = std::max(worst_slack, slack);
    if (slack > 1e-12) ledger_ok = false;
    if (acfg.budget == 0.0) {
      const Rollout clean = rollout(env, make_policy(agent), scfg, static_cast<std::uint64_t>(e));
      if (rollout_to_jsonl(r, true) != rollout_to_jsonl(clean, true)) b0_identical = false;
    }
  }
  c.finish(ledger_ok && b0_identical,
           fmt("worst sum ||eps||^2 - B^2 = %.2e (<= 1e-12); B=0 transcripts bit-identical: %s",
               worst_slack, b0_identical ? "yes" : "no"));
}

void criterion9_attack_oracle() {
  Criterion c(9, "attack correctness oracle");
  // Linear Q: Q0 = o1 + d, Q1 = -o1 - d; boundary at distance d from the
  // origin along the first coordinate.
  const double d = 0.3;
  MlpNet q = MlpNet::zeros({2, 2});
  q.weights[0] = {1.0, 0.0, -1.0, 0.0};
  q.biases[0] = {d, -d};
  AttackContext ctx;
  ctx.obs_dim = 2;
  ctx.frames = 1;
  ctx.real_prior = 0;

  AttackConfig cfg;
  cfg.eta = 0.01;
  cfg.nu_mult = 2.0;
  cfg.lambda_q = 0.5;

  bool ok = true;
  std::string detail;
  // Flips iff B >= d, within the 2-eta discretization band.
  for (double budget : {0.1, 0.2, d - 2 * cfg.eta}) {
    Rng rng(9);
    cfg.budget = budget;
    const auto res = attack_dqn_step(q, ctx, std::vector<double>{0, 0}, cfg, rng);
    if (res.flipped) ok = false;
  }
  for (double budget : {d + 2 * cfg.eta, 0.5, 1.0}) {
    Rng rng(9);
    cfg.budget = budget;
    const auto res = attack_dqn_step(q, ctx, std::vector<double>{0, 0}, cfg, rng);
    if (!res.flipped) ok = false;
  }
  // Remaining budget within 5% away from the boundary.
  for (double budget : {0.5, 1.0}) {
    Rng rng(9);
    cfg.budget = budget;
    const auto res = attack_dqn_step(q, ctx, std::vector<double>{0, 0}, cfg, rng);
    const double want = std::sqrt(budget * budget - d * d);
    const double err = std::fabs(res.remaining_budget - want) / want;
    detail += fmt("B=%.1f: remaining %.4f vs sqrt(B^2-d^2) %.4f (%.1f%%); ", budget,
                  res.remaining_budget, want, 100.0 * err);
    if (err > 0.05) ok = false;
  }
  c.finish(ok, "flip boundary respected; " + detail);
}

}  // namespace

int main() {
  criterion1_closed_form();
  criterion2_tightness();
  criterion3_soundness();
  criterion4_coverage();
  criterion5_equivalence();
  criterion6_gradients();
  EndToEnd e2e;
  criterion7_end_to_end(e2e);
  criterion8_ledger();
  criterion9_attack_oracle();

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
