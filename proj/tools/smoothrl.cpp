// Command-line entry point: train / rollout / certify / attack / verify.
// Every run writes a self-describing metadata record next to its outputs,
// and every CSV carries the generating config hash in its header.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smoothrl/agents.hpp"
#include "smoothrl/attack.hpp"
#include "smoothrl/certify.hpp"
#include "smoothrl/env.hpp"
#include "smoothrl/errors.hpp"
#include "smoothrl/kernels.hpp"
#include "smoothrl/normal.hpp"
#include "smoothrl/parallel.hpp"
#include "smoothrl/smoothing.hpp"
#include "smoothrl/transcript.hpp"
#include "smoothrl/verify.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;
using namespace smoothrl;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

// The hash covers the experiment parameters, not the output destination, so
// re-running the same experiment into a different file reproduces the hash.
struct RunMeta {
  std::string command;
  json config;

  std::string hash() const { return fnv1a_hex(config.dump()); }

  void write(const std::string& out_path) const {
    json j;
    j["tool"] = "smoothrl";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["config_hash"] = hash();
    j["output"] = out_path;
    j["kernel_backend"] = std::string(kernels::backend_name(kernels::active_backend()));
    std::ofstream out(out_path + ".meta.json");
    if (out) out << j.dump(2) << '\n';
  }
};

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

// --config <file.json> is applied before CLI parsing, so flags given on the
// command line win over file values.
json load_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    std::string path;
    if (s == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (s.rfind("--config=", 0) == 0) {
      path = s.substr(9);
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw BadConfig("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
  }
  return json::object();
}

void apply(const json& j, const char* k, double& v) { if (j.contains(k)) v = j.at(k).get<double>(); }
void apply(const json& j, const char* k, int& v) { if (j.contains(k)) v = j.at(k).get<int>(); }
void apply(const json& j, const char* k, bool& v) { if (j.contains(k)) v = j.at(k).get<bool>(); }
void apply(const json& j, const char* k, std::int64_t& v) { if (j.contains(k)) v = j.at(k).get<std::int64_t>(); }
void apply(const json& j, const char* k, std::uint64_t& v) { if (j.contains(k)) v = j.at(k).get<std::uint64_t>(); }
void apply(const json& j, const char* k, std::string& v) { if (j.contains(k)) v = j.at(k).get<std::string>(); }

struct EvalStats {
  double mean = 0.0;
  double std_err = 0.0;
};

EvalStats mean_and_se(const std::vector<double>& xs) {
  EvalStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  var /= std::max<std::size_t>(1, xs.size() - 1);
  s.std_err = std::sqrt(var / xs.size());
  return s;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string env_name = "cartpole";
  double sigma = 0.0;
  int frames = 5;
  std::uint64_t seed = 0;
  std::string profile = "paper";  // paper | fast
  std::int64_t steps = -1;        // -1 = profile default
  std::string hidden_csv;         // override hidden widths, e.g. "256,256"
  int restarts = 1;
  std::string out = "agent.json";
  std::string log_path;

  void from_json(const json& j) {
    apply(j, "env", env_name);
    apply(j, "sigma", sigma);
    apply(j, "frames", frames);
    apply(j, "seed", seed);
    apply(j, "profile", profile);
    apply(j, "steps", steps);
    apply(j, "hidden", hidden_csv);
    apply(j, "restarts", restarts);
    apply(j, "out", out);
    apply(j, "log", log_path);
  }
};

std::vector<int> parse_hidden(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

int cmd_train(const TrainArgs& a) {
  auto env = make_env(a.env_name);
  const bool fast = a.profile == "fast";
  if (!fast && a.profile != "paper") throw BadConfig("profile must be paper or fast");
  SmoothingConfig smoothing{a.sigma, a.frames, a.seed};
  RunMeta meta;
  meta.command = "train";
  meta.config = {{"env", a.env_name},       {"sigma", a.sigma},     {"frames", a.frames},
                 {"seed", a.seed},          {"profile", a.profile}, {"steps", a.steps},
                 {"restarts", a.restarts}};

  if (env->spec().action_space.kind == ActionKind::Discrete) {
    DqnHyperparams hp;
    if (fast) {
      hp.total_steps = 50000;
      hp.learning_rate = 1e-3;
      hp.buffer_capacity = 50000;
      hp.learning_starts = 1000;
      hp.batch_size = 128;
      hp.train_interval = 4;
      hp.gradient_steps = 1;
      hp.target_update_interval = 500;
      hp.hidden = {64, 64};
    }
    if (a.steps > 0) hp.total_steps = a.steps;
    if (!a.hidden_csv.empty()) hp.hidden = parse_hidden(a.hidden_csv);
    hp.restarts = a.restarts;
    if (env->spec().reward_kind == RewardKind::PerStepSurvival)
      hp.early_stop_at = env->spec().reward_max;
    meta.config["algo"] = "dqn";
    meta.config["hidden"] = hp.hidden;
    meta.config["total_steps"] = hp.total_steps;
    auto result = train_dqn(*env, smoothing, hp, a.seed);
    save_dqn_agent(result.agent, a.out);
    if (!a.log_path.empty()) write_training_log_csv(a.log_path, result.log, meta.hash());
    meta.write(a.out);
    std::cout << "trained dqn agent, best validation " << result.best_validation
              << ", saved to " << a.out << "\n";
  } else {
    DdpgHyperparams hp;
    if (fast) {
      hp.total_steps = 60000;
      hp.learning_rate = 1e-3;
      hp.hidden_actor = {64, 64};
      hp.hidden_critic = {64, 64};
    }
    if (a.steps > 0) hp.total_steps = a.steps;
    if (!a.hidden_csv.empty()) {
      hp.hidden_actor = parse_hidden(a.hidden_csv);
      hp.hidden_critic = hp.hidden_actor;
    }
    hp.restarts = a.restarts;
    hp.early_stop_at = 1.0;
    meta.config["algo"] = "ddpg";
    meta.config["hidden_actor"] = hp.hidden_actor;
    meta.config["total_steps"] = hp.total_steps;
    auto result = train_ddpg(*env, smoothing, hp, a.seed);
    save_ddpg_agent(result.agent, a.out);
    if (!a.log_path.empty()) write_training_log_csv(a.log_path, result.log, meta.hash());
    meta.write(a.out);
    std::cout << "trained ddpg agent, best validation " << result.best_validation
              << ", saved to " << a.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// rollout

struct RolloutArgs {
  std::string env_name = "cartpole";
  std::string checkpoint;
  std::uint64_t episodes = 10000;
  std::uint64_t seed = 0;
  int threads = default_thread_count();
  bool detail = false;
  std::string out = "transcripts.jsonl";

  void from_json(const json& j) {
    apply(j, "env", env_name);
    apply(j, "checkpoint", checkpoint);
    apply(j, "episodes", episodes);
    apply(j, "seed", seed);
    apply(j, "threads", threads);
    apply(j, "detail", detail);
    apply(j, "out", out);
  }
};

Policy load_policy(const std::string& checkpoint, double& sigma, int& frames) {
  std::ifstream in(checkpoint);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + checkpoint);
  json j;
  in >> j;
  const std::string algo = j.value("algo", "");
  if (algo == "dqn") {
    DqnAgent agent = load_dqn_agent(checkpoint);
    sigma = agent.sigma;
    frames = agent.frames;
    return make_policy(agent);
  }
  if (algo == "ddpg") {
    DdpgAgent agent = load_ddpg_agent(checkpoint);
    sigma = agent.sigma;
    frames = agent.frames;
    return make_policy(agent);
  }
  throw BadConfig("unknown agent checkpoint algo: " + algo);
}

int cmd_rollout(const RolloutArgs& a) {
  if (a.episodes < 1) throw BadConfig("episodes must be >= 1");
  double sigma = 0.0;
  int frames = 1;
  Policy policy = load_policy(a.checkpoint, sigma, frames);
  const SmoothingConfig cfg{sigma, frames, a.seed};

  std::vector<Rollout> rollouts(a.episodes);
  auto proto = make_env(a.env_name);
  parallel_for(a.episodes, a.threads, [&](std::uint64_t e) {
    auto env = proto->clone();
    rollouts[e] = rollout(*env, policy, cfg, e);
  });

  write_transcripts(a.out, rollouts, a.detail);
  RunMeta meta;
  meta.command = "rollout";
  meta.config = {{"env", a.env_name},  {"checkpoint", a.checkpoint},
                 {"episodes", a.episodes}, {"seed", a.seed},
                 {"sigma", sigma},     {"frames", frames},
                 {"detail", a.detail}};
  meta.write(a.out);

  std::vector<double> totals;
  totals.reserve(rollouts.size());
  for (const auto& r : rollouts) totals.push_back(r.total_reward);
  const EvalStats s = mean_and_se(totals);
  std::cout << "rolled out " << a.episodes << " episodes, mean reward " << s.mean << " +- "
            << s.std_err << ", wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// certify

struct CertifyArgs {
  std::string transcripts;
  std::string env_name = "cartpole";
  std::string checkpoint;
  std::uint64_t episodes = 10000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string budgets_csv;
  std::string method;  // empty = per env default
  int threads = default_thread_count();
  std::string out = "certificate.csv";

  void from_json(const json& j) {
    apply(j, "transcripts", transcripts);
    apply(j, "env", env_name);
    apply(j, "checkpoint", checkpoint);
    apply(j, "episodes", episodes);
    apply(j, "seed", seed);
    apply(j, "alpha", alpha);
    apply(j, "budgets", budgets_csv);
    apply(j, "method", method);
    apply(j, "threads", threads);
    apply(j, "out", out);
  }
};

int cmd_certify(const CertifyArgs& a) {
  auto env = make_env(a.env_name);
  const EnvSpec& spec = env->spec();

  std::vector<double> totals;
  double sigma = 0.0;
  if (!a.transcripts.empty()) {
    TranscriptTotals t = read_transcript_totals(a.transcripts);
    totals = std::move(t.totals);
    sigma = t.sigma;
  } else {
    if (a.episodes < 1) throw BadConfig("episodes must be >= 1");
    int frames = 1;
    Policy policy = load_policy(a.checkpoint, sigma, frames);
    const SmoothingConfig cfg{sigma, frames, a.seed};
    totals.assign(a.episodes, 0.0);
    auto proto = make_env(a.env_name);
    parallel_for(a.episodes, a.threads, [&](std::uint64_t e) {
      auto env_e = proto->clone();
      totals[e] = rollout(*env_e, policy, cfg, e).total_reward;
    });
  }

  CertMethod method;
  if (!a.method.empty()) {
    method = cert_method_from_name(a.method);
  } else if (spec.reward_kind == RewardKind::PerStepSurvival) {
    method = CertMethod::PerThresholdCP;  // the better certificate for survival rewards
  } else {
    method = CertMethod::BernoulliCP;
  }

  BoundInputs inputs;
  inputs.samples = totals;
  inputs.alpha = a.alpha;
  inputs.sigma = sigma;
  inputs.budgets = a.budgets_csv.empty() ? default_budget_grid(sigma) : parse_grid(a.budgets_csv);
  inputs.reward_min = spec.reward_min;
  inputs.reward_max = spec.reward_max;
  inputs.num_thresholds = spec.reward_kind == RewardKind::PerStepSurvival ? spec.max_steps : 0;

  const Certificate cert = certify_expected_reward(inputs, method);

  RunMeta meta;
  meta.command = "certify";
  meta.config = {{"env", a.env_name},         {"transcripts", a.transcripts},
                 {"checkpoint", a.checkpoint}, {"episodes", totals.size()},
                 {"alpha", a.alpha},           {"sigma", sigma},
                 {"budgets", inputs.budgets},  {"method", cert_method_name(method)}};

  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot open for write: " + a.out);
  out << "# config_hash=" << meta.hash() << "\n";
  out << "budget_l2,reward_lower_bound,method,episodes,alpha,sigma\n";
  for (const auto& bc : cert.per_budget) {
    out << fmt(bc.budget) << ',' << fmt(bc.lower_bound) << ',' << cert_method_name(method)
        << ',' << cert.n << ',' << fmt(cert.alpha) << ',' << fmt(cert.sigma) << "\n";
  }
  out.close();
  meta.write(a.out);
  std::cout << "certified " << totals.size() << " episodes at alpha " << a.alpha << " with "
            << cert_method_name(method) << ", wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string env_name = "cartpole";
  std::string checkpoint;
  std::uint64_t episodes = 1000;
  std::uint64_t seed = 0;
  std::string budgets_csv;
  std::string lambdas_csv;  // lambda_q (dqn) or lambda (ddpg) grid
  double eta = 0.01;
  double nu_mult = 2.0;
  int tau_steps = 100;
  int smoothing_samples = 0;
  int threads = default_thread_count();
  std::string out = "attack.csv";

  void from_json(const json& j) {
    apply(j, "env", env_name);
    apply(j, "checkpoint", checkpoint);
    apply(j, "episodes", episodes);
    apply(j, "seed", seed);
    apply(j, "budgets", budgets_csv);
    apply(j, "lambdas", lambdas_csv);
    apply(j, "eta", eta);
    apply(j, "nu", nu_mult);
    apply(j, "tau_steps", tau_steps);
    apply(j, "m", smoothing_samples);
    apply(j, "threads", threads);
    apply(j, "out", out);
  }
};

int cmd_attack(const AttackArgs& a) {
  if (a.episodes < 1) throw BadConfig("episodes must be >= 1");
  auto proto = make_env(a.env_name);

  std::ifstream in(a.checkpoint);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + a.checkpoint);
  json jck;
  in >> jck;
  const std::string algo = jck.value("algo", "");
  in.close();

  const bool is_dqn = algo == "dqn";
  DqnAgent dqn;
  DdpgAgent ddpg;
  double sigma = 0.0;
  int frames = 1;
  if (is_dqn) {
    dqn = load_dqn_agent(a.checkpoint);
    sigma = dqn.sigma;
    frames = dqn.frames;
  } else if (algo == "ddpg") {
    ddpg = load_ddpg_agent(a.checkpoint);
    sigma = ddpg.sigma;
    frames = ddpg.frames;
  } else {
    throw BadConfig("unknown agent checkpoint algo: " + algo);
  }

  if (a.budgets_csv.empty() && sigma == 0.0)
    throw BadConfig("undefended attack needs an explicit --budgets grid");
  const std::vector<double> budgets =
      a.budgets_csv.empty() ? default_budget_grid(sigma) : parse_grid(a.budgets_csv);
  const std::vector<double> lambdas =
      a.lambdas_csv.empty() ? (is_dqn ? std::vector<double>{4, 6, 8, 10}
                                      : std::vector<double>{1e-3, 1e-4, 1e-5})
                            : parse_grid(a.lambdas_csv);

  RunMeta meta;
  meta.command = "attack";
  meta.config = {{"env", a.env_name},        {"checkpoint", a.checkpoint},
                 {"episodes", a.episodes},   {"seed", a.seed},
                 {"budgets", budgets},       {"lambdas", lambdas},
                 {"eta", a.eta},             {"nu_mult", a.nu_mult},
                 {"tau_steps", a.tau_steps}, {"smoothing_samples", a.smoothing_samples},
                 {"sigma", sigma}};

  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot open for write: " + a.out);
  out << "# config_hash=" << meta.hash() << "\n";
  out << "budget_l2,lambda,mean_reward,std_err,episodes\n";

  const SmoothingConfig scfg{sigma, frames, a.seed};
  for (double budget : budgets) {
    double min_mean = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {
      AttackConfig acfg;
      acfg.budget = budget;
      acfg.eta = a.eta;
      acfg.nu_mult = a.nu_mult;
      acfg.tau_steps = a.tau_steps;
      acfg.lambda_q = lambda;
      acfg.lambda_reg = lambda;
      acfg.smoothing_samples = a.smoothing_samples;

      std::vector<double> totals(a.episodes, 0.0);
      parallel_for(a.episodes, a.threads, [&](std::uint64_t e) {
        auto env_e = proto->clone();
        const Rollout r = is_dqn ? attack_episode(*env_e, dqn, scfg, acfg, e)
                                 : attack_episode(*env_e, ddpg, scfg, acfg, e);
        totals[e] = r.total_reward;
      });

      const EvalStats s = mean_and_se(totals);
      min_mean = std::min(min_mean, s.mean);
      out << fmt(budget) << ',' << fmt(lambda) << ',' << fmt(s.mean) << ',' << fmt(s.std_err)
          << ',' << a.episodes << "\n";
      std::cout << "attack B=" << budget << " lambda=" << lambda << " mean=" << s.mean << "\n";
    }
    // Pointwise minimum over the lambda grid, as reported in robustness curves.
    out << fmt(budget) << ",min," << fmt(min_mean) << ",," << a.episodes << "\n";
  }
  out.close();
  meta.write(a.out);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string mode = "tightness";
  double sigma = 0.5;
  std::string p_csv = "0.7,0.9,0.975";
  std::string budget_ratios_csv = "0.5,1,2";
  std::uint64_t episodes = 1000000;
  std::uint64_t seed = 0;
  double c = 0.5;  // nonisometry response magnitude
  std::string out = "verify.csv";

  void from_json(const json& j) {
    apply(j, "mode", mode);
    apply(j, "sigma", sigma);
    apply(j, "p", p_csv);
    apply(j, "budget_ratios", budget_ratios_csv);
    apply(j, "episodes", episodes);
    apply(j, "seed", seed);
    apply(j, "c", c);
    apply(j, "out", out);
  }
};

int cmd_verify(const VerifyArgs& a) {
  RunMeta meta;
  meta.command = "verify";
  meta.config = {{"mode", a.mode},         {"sigma", a.sigma},
                 {"p", a.p_csv},           {"budget_ratios", a.budget_ratios_csv},
                 {"episodes", a.episodes}, {"seed", a.seed},
                 {"c", a.c}};
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot open for write: " + a.out);
  out << "# config_hash=" << meta.hash() << "\n";

  bool all_ok = true;
  if (a.mode == "tightness") {
    out << "p,budget_l2,sigma,bound,empirical,std_err,episodes,within_3se\n";
    for (double p : parse_grid(a.p_csv)) {
      for (double ratio : parse_grid(a.budget_ratios_csv)) {
        const double budget = ratio * a.sigma;
        const TightnessResult r = tightness_experiment(p, budget, a.sigma, a.episodes, a.seed);
        const bool ok = std::fabs(r.empirical - r.bound) <= 3.0 * r.std_err;
        all_ok = all_ok && ok;
        out << fmt(p) << ',' << fmt(budget) << ',' << fmt(a.sigma) << ',' << fmt(r.bound) << ','
            << fmt(r.empirical) << ',' << fmt(r.std_err) << ',' << r.episodes << ','
            << (ok ? 1 : 0) << "\n";
        std::cout << "tightness p=" << p << " B/sigma=" << ratio << " bound=" << r.bound
                  << " empirical=" << r.empirical << (ok ? " ok" : " VIOLATION") << "\n";
      }
    }
  } else if (a.mode == "soundness") {
    out << "budget_l2,sigma,p0_hat,bound,min_adaptive,tolerance,sound\n";
    const SoundnessGrid grid;
    const double omega = a.sigma * norm_ppf(0.9);  // per-step clean success 0.9
    for (double ratio : parse_grid(a.budget_ratios_csv)) {
      const double budget = ratio * a.sigma;
      const SoundnessResult r =
          soundness_search(budget, a.sigma, omega, omega, grid,
                           std::max<std::uint64_t>(a.episodes / 5, 10000), a.episodes, a.seed);
      all_ok = all_ok && r.sound;
      out << fmt(budget) << ',' << fmt(a.sigma) << ',' << fmt(r.p0_hat) << ',' << fmt(r.bound)
          << ',' << fmt(r.min_adaptive) << ',' << fmt(r.tolerance) << ',' << (r.sound ? 1 : 0)
          << "\n";
      std::cout << "soundness B/sigma=" << ratio << " bound=" << r.bound
                << " min_adaptive=" << r.min_adaptive << (r.sound ? " ok" : " VIOLATION")
                << "\n";
    }
  } else if (a.mode == "nonisometry") {
    out << "rule,sigma,c,cov_offdiag,expected_cov,kurtosis2,expected_kurtosis,episodes\n";
    for (bool adaptive : {false, true}) {
      const NonisometryResult r = nonisometry_demo(a.sigma, a.c, adaptive, a.episodes, a.seed, 0);
      out << (adaptive ? "adaptive" : "independent") << ',' << fmt(a.sigma) << ',' << fmt(a.c)
          << ',' << fmt(r.cov_offdiag) << ',' << fmt(r.expected_cov) << ',' << fmt(r.kurtosis2)
          << ',' << fmt(r.expected_kurtosis) << ',' << r.episodes << "\n";
      std::cout << "nonisometry " << (adaptive ? "adaptive" : "independent")
                << " cov=" << r.cov_offdiag << " (expect " << r.expected_cov << ")\n";
    }
  } else {
    throw BadConfig("unknown verify mode: " + a.mode);
  }
  out.close();
  meta.write(a.out);
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-smoothing RL robustness toolkit"};
  app.require_subcommand(1);

  bool no_simd = false;
  app.add_flag("--no-simd", no_simd, "force the scalar kernel backend");

  json file_config;
  try {
    file_config = load_config_arg(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::string config_path;  // registered so CLI11 accepts the flag

  TrainArgs train_args;
  train_args.from_json(file_config);
  auto* train_cmd = app.add_subcommand("train", "train an agent under smoothing noise");
  train_cmd->add_option("--config", config_path, "JSON config file (flags win)");
  train_cmd->add_option("--env", train_args.env_name, "cartpole|mountaincar");
  train_cmd->add_option("--sigma", train_args.sigma, "smoothing noise std");
  train_cmd->add_option("--frames", train_args.frames, "observation stack depth");
  train_cmd->add_option("--seed", train_args.seed, "master seed");
  train_cmd->add_option("--profile", train_args.profile, "paper|fast");
  train_cmd->add_flag_callback("--fast", [&train_args]() { train_args.profile = "fast"; },
                               "shortcut for --profile fast");
  train_cmd->add_option("--steps", train_args.steps, "override total env steps");
  train_cmd->add_option("--hidden", train_args.hidden_csv, "override hidden widths, e.g. 256,256");
  train_cmd->add_option("--restarts", train_args.restarts, "independent restarts, keep best");
  train_cmd->add_option("--out", train_args.out, "checkpoint path");
  train_cmd->add_option("--log", train_args.log_path, "training log CSV path");

  RolloutArgs rollout_args;
  rollout_args.from_json(file_config);
  auto* rollout_cmd = app.add_subcommand("rollout", "run clean smoothed episodes");
  rollout_cmd->add_option("--config", config_path, "JSON config file (flags win)");
  rollout_cmd->add_option("--env", rollout_args.env_name, "environment");
  rollout_cmd->add_option("--checkpoint", rollout_args.checkpoint, "agent checkpoint");
  rollout_cmd->add_option("--episodes", rollout_args.episodes, "episode count");
  rollout_cmd->add_option("--seed", rollout_args.seed, "master seed");
  rollout_cmd->add_option("--threads", rollout_args.threads, "worker threads");
  rollout_cmd->add_flag("--detail", rollout_args.detail, "include per-step detail");
  rollout_cmd->add_option("--out", rollout_args.out, "transcript JSONL path");

  CertifyArgs certify_args;
  certify_args.from_json(file_config);
  auto* certify_cmd = app.add_subcommand("certify", "certify expected reward lower bounds");
  certify_cmd->add_option("--config", config_path, "JSON config file (flags win)");
  certify_cmd->add_option("--transcripts", certify_args.transcripts, "JSONL transcripts");
  certify_cmd->add_option("--env", certify_args.env_name, "environment");
  certify_cmd->add_option("--checkpoint", certify_args.checkpoint,
                          "agent checkpoint (inline rollouts)");
  certify_cmd->add_option("--episodes", certify_args.episodes, "inline episode count");
  certify_cmd->add_option("--seed", certify_args.seed, "master seed");
  certify_cmd->add_option("--alpha", certify_args.alpha, "failure probability");
  certify_cmd->add_option("--budgets", certify_args.budgets_csv, "comma-separated B grid");
  certify_cmd->add_option("--method", certify_args.method,
                          "bernoulli_cp|cdf_dkw|per_threshold_cp");
  certify_cmd->add_option("--threads", certify_args.threads, "worker threads");
  certify_cmd->add_option("--out", certify_args.out, "certificate CSV path");

  AttackArgs attack_args;
  attack_args.from_json(file_config);
  auto* attack_cmd = app.add_subcommand("attack", "attack an agent over a budget grid");
  attack_cmd->add_option("--config", config_path, "JSON config file (flags win)");
  attack_cmd->add_option("--env", attack_args.env_name, "environment");
  attack_cmd->add_option("--checkpoint", attack_args.checkpoint, "agent checkpoint");
  attack_cmd->add_option("--episodes", attack_args.episodes, "episodes per (B, lambda)");
  attack_cmd->add_option("--seed", attack_args.seed, "master seed");
  attack_cmd->add_option("--budgets", attack_args.budgets_csv, "comma-separated B grid");
  attack_cmd->add_option("--lambdas", attack_args.lambdas_csv, "comma-separated lambda grid");
  attack_cmd->add_option("--eta", attack_args.eta, "PGD step size");
  attack_cmd->add_option("--nu", attack_args.nu_mult, "DQN iteration multiplier");
  attack_cmd->add_option("--tau-steps", attack_args.tau_steps, "DDPG iteration count");
  attack_cmd->add_option("--m", attack_args.smoothing_samples,
                         "smoothing samples for smoothed-agent attacks");
  attack_cmd->add_option("--threads", attack_args.threads, "worker threads");
  attack_cmd->add_option("--out", attack_args.out, "robustness CSV path");

  VerifyArgs verify_args;
  verify_args.from_json(file_config);
  auto* verify_cmd = app.add_subcommand("verify", "validate the theory empirically");
  verify_cmd->add_option("--config", config_path, "JSON config file (flags win)");
  verify_cmd->add_option("--mode", verify_args.mode, "tightness|soundness|nonisometry");
  verify_cmd->add_option("--sigma", verify_args.sigma, "smoothing noise std");
  verify_cmd->add_option("--p", verify_args.p_csv, "clean success probabilities");
  verify_cmd->add_option("--budget-ratios", verify_args.budget_ratios_csv, "B/sigma grid");
  verify_cmd->add_option("--episodes", verify_args.episodes, "episodes per point");
  verify_cmd->add_option("--seed", verify_args.seed, "master seed");
  verify_cmd->add_option("--c", verify_args.c, "nonisometry response magnitude");
  verify_cmd->add_option("--out", verify_args.out, "report CSV path");

  CLI11_PARSE(app, argc, argv);

  if (no_simd) kernels::set_backend(kernels::Backend::Scalar);

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (rollout_cmd->parsed()) {
      if (rollout_args.checkpoint.empty()) throw BadConfig("rollout needs --checkpoint");
      return cmd_rollout(rollout_args);
    }
    if (certify_cmd->parsed()) {
      if (certify_args.transcripts.empty() && certify_args.checkpoint.empty())
        throw BadConfig("certify needs --transcripts or --checkpoint");
      return cmd_certify(certify_args);
    }
    if (attack_cmd->parsed()) {
      if (attack_args.checkpoint.empty()) throw BadConfig("attack needs --checkpoint");
      return cmd_attack(attack_args);
    }
    if (verify_cmd->parsed()) return cmd_verify(verify_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
