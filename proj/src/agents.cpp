#include "smoothrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "smoothrl/errors.hpp"

namespace smoothrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw BadConfig("replay capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(Rng& rng, std::size_t batch) const {
  if (batch > data_.size()) throw BadConfig("batch larger than replay size");
  std::vector<const Transition*> out;
  out.reserve(batch);
  if (batch * 2 >= data_.size()) {
    // Partial Fisher-Yates over all indices.
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t j = i + rng.uniform_int(idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.push_back(&data_[idx[i]]);
    }
  } else {
    std::unordered_set<std::size_t> seen;
    while (out.size() < batch) {
      const std::size_t j = rng.uniform_int(data_.size());
      if (seen.insert(j).second) out.push_back(&data_[j]);
    }
  }
  return out;
}

double EpsSchedule::at(std::int64_t step, std::int64_t total_steps) const {
  const double horizon = fraction * static_cast<double>(total_steps);
  if (horizon <= 0.0) return final_value;
  const double frac = std::min(1.0, static_cast<double>(step) / horizon);
  return initial + (final_value - initial) * frac;
}

double OuNoise::sample(Rng& rng) {
  state += theta * (0.0 - state) * dt + sigma * std::sqrt(dt) * rng.normal();
  return state;
}

int greedy_action(const MlpNet& q_net, std::span<const double> stacked_obs) {
  const std::vector<double> q = forward(q_net, stacked_obs);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a) {
    if (q[a] > q[best]) best = a;  // ties keep the lowest index
  }
  return best;
}

double actor_action(const MlpNet& actor, std::span<const double> stacked_obs) {
  return forward(actor, stacked_obs)[0];
}

Policy make_policy(const DqnAgent& agent) {
  return [net = agent.q_net](std::span<const double> obs) -> Action {
    return greedy_action(net, obs);
  };
}

Policy make_policy(const DdpgAgent& agent) {
  return [net = agent.actor](std::span<const double> obs) -> Action {
    return actor_action(net, obs);
  };
}

void soft_update(MlpNet& target, const MlpNet& online, double tau) {
  for (std::size_t l = 0; l < target.layer_count(); ++l) {
    for (std::size_t i = 0; i < target.weights[l].size(); ++i)
      target.weights[l][i] = (1.0 - tau) * target.weights[l][i] + tau * online.weights[l][i];
    for (std::size_t i = 0; i < target.biases[l].size(); ++i)
      target.biases[l][i] = (1.0 - tau) * target.biases[l][i] + tau * online.biases[l][i];
  }
}

namespace {

double huber_loss(double e) {
  const double a = std::fabs(e);
  return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

double huber_grad(double e) { return std::fabs(e) <= 1.0 ? e : (e > 0.0 ? 1.0 : -1.0); }

// Mean smoothed total reward of a greedy policy over a block of episodes.
double validation_score(Env& env, const Policy& policy, double sigma, int frames,
                        std::uint64_t stream_seed, int episodes) {
  SmoothingConfig cfg{sigma, frames, stream_seed};
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    total += rollout(env, policy, cfg, static_cast<std::uint64_t>(e)).total_reward;
  }
  return total / episodes;
}

struct DqnRun {
  DqnAgent agent;
  std::vector<TrainLogEntry> log;
  double best_validation = -std::numeric_limits<double>::infinity();
};

DqnRun train_dqn_once(Env& env, const SmoothingConfig& smoothing, const DqnHyperparams& hp,
                      std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  if (spec.action_space.kind != ActionKind::Discrete)
    throw BadConfig("train_dqn needs a discrete-action environment");
  const int obs_dim = spec.obs_dim;
  const int n_actions = spec.action_space.n;
  const int frames = smoothing.frames;
  const int stack_dim = frames * obs_dim;

  Rng rng_init(derive_seed(seed, 0));
  Rng rng_explore(derive_seed(seed, 1));
  const std::uint64_t episode_master = derive_seed(seed, 2);
  const std::uint64_t val_master = derive_seed(seed, 3);

  std::vector<int> dims{stack_dim};
  dims.insert(dims.end(), hp.hidden.begin(), hp.hidden.end());
  dims.push_back(n_actions);

  MlpNet q_net = MlpNet::he_uniform(dims, rng_init);
  MlpNet target = q_net;
  MlpNet best_net = q_net;
  AdamState adam;
  ReplayBuffer buffer(hp.buffer_capacity);

  DqnRun run;
  GradBundle grads = GradBundle::zeros_like(q_net);
  ForwardTrace trace;

  std::int64_t step = 0;
  std::uint64_t episode = 0;
  bool stop = false;

  while (!stop) {
    const std::uint64_t ep_seed = derive_seed(episode_master, episode);
    Rng rng_env(derive_seed(ep_seed, 0));
    Rng rng_noise(derive_seed(ep_seed, 1));
    ++episode;

    EnvState state = env.reset(rng_env);
    FrameBuffer buf(frames, obs_dim);
    buf.push(state.features, std::vector<double>(obs_dim, 0.0),
             sample_noise(rng_noise, smoothing.sigma, obs_dim));
    std::vector<double> stacked = buf.stacked();

    while (!state.done && !stop) {
      const double eps = hp.eps.at(step, hp.total_steps);
      int action;
      if (rng_explore.uniform() < eps) {
        action = static_cast<int>(rng_explore.uniform_int(n_actions));
      } else {
        action = greedy_action(q_net, stacked);
      }

      const StepResult sr = env.step(action);
      state = sr.state;
      // The new frame receives its noise exactly once, even if terminal.
      buf.push(state.features, std::vector<double>(obs_dim, 0.0),
               sample_noise(rng_noise, smoothing.sigma, obs_dim));
      std::vector<double> next_stacked = buf.stacked();

      Transition t;
      t.obs = stacked;
      t.next_obs = next_stacked;
      t.action_disc = action;
      t.reward = sr.reward;
      t.terminal = state.done && state.step_index < spec.max_steps;
      buffer.push(std::move(t));
      stacked = std::move(next_stacked);
      ++step;

      if (step >= hp.learning_starts && step % hp.train_interval == 0 &&
          buffer.size() >= static_cast<std::size_t>(hp.batch_size)) {
        for (int g = 0; g < hp.gradient_steps; ++g) {
          const auto batch = buffer.sample(rng_explore, hp.batch_size);
          grads.scale(0.0);
          double loss = 0.0;
          std::vector<double> upstream(n_actions, 0.0);
          for (const Transition* tr : batch) {
            const std::vector<double> q_next = forward(target, tr->next_obs);
            const double max_next = *std::max_element(q_next.begin(), q_next.end());
            const double y = tr->reward + hp.gamma * (tr->terminal ? 0.0 : max_next);
            const auto& q = forward(q_net, tr->obs, trace);
            const double e = q[tr->action_disc] - y;
            loss += huber_loss(e);
            std::fill(upstream.begin(), upstream.end(), 0.0);
            upstream[tr->action_disc] = huber_grad(e) / batch.size();
            backward_accumulate(q_net, trace, upstream, grads);
          }
          if (!std::isfinite(loss)) throw DivergedTraining("DQN loss is not finite");
          adam_update(q_net, grads, hp.learning_rate, adam);
        }
      }
      if (step % hp.target_update_interval == 0) target = q_net;

      if (step % hp.validation_interval == 0) {
        auto env_val = env.clone();
        const Policy pol = [&q_net](std::span<const double> o) -> Action {
          return greedy_action(q_net, o);
        };
        const double score =
            validation_score(*env_val, pol, smoothing.sigma, frames,
                             derive_seed(val_master, step / hp.validation_interval),
                             hp.validation_episodes);
        const bool is_best = score > run.best_validation;
        if (is_best) {
          run.best_validation = score;
          best_net = q_net;
        }
        run.log.push_back({step, score, is_best});
        if (run.best_validation >= hp.early_stop_at) stop = true;
      }
      if (step >= hp.total_steps) stop = true;
    }
  }

  run.agent.q_net = std::move(best_net);
  run.agent.target_net = run.agent.q_net;
  run.agent.frames = frames;
  run.agent.sigma = smoothing.sigma;
  return run;
}

}  // namespace

TrainResult<DqnAgent> train_dqn(Env& env, const SmoothingConfig& smoothing,
                                const DqnHyperparams& hp, std::uint64_t seed) {
  if (hp.restarts < 1) throw BadConfig("restarts must be >= 1");
  DqnRun best;
  for (int r = 0; r < hp.restarts; ++r) {
    DqnRun run = train_dqn_once(env, smoothing, hp, derive_seed(seed, 7000 + r));
    if (r == 0 || run.best_validation > best.best_validation) best = std::move(run);
  }
  return {std::move(best.agent), std::move(best.log), best.best_validation};
}

namespace {

struct DdpgRun {
  DdpgAgent agent;
  std::vector<TrainLogEntry> log;
  double best_validation = -std::numeric_limits<double>::infinity();
};

DdpgRun train_ddpg_once(Env& env, const SmoothingConfig& smoothing, const DdpgHyperparams& hp,
                        std::uint64_t seed) {
  const EnvSpec& spec = env.spec();
  if (spec.action_space.kind != ActionKind::Continuous)
    throw BadConfig("train_ddpg needs a continuous-action environment");
  const int obs_dim = spec.obs_dim;
  const int frames = smoothing.frames;
  const int stack_dim = frames * obs_dim;
  const double lo = spec.action_space.lo, hi = spec.action_space.hi;

  Rng rng_init(derive_seed(seed, 0));
  Rng rng_train(derive_seed(seed, 1));
  const std::uint64_t episode_master = derive_seed(seed, 2);
  const std::uint64_t val_master = derive_seed(seed, 3);

  std::vector<int> actor_dims{stack_dim};
  actor_dims.insert(actor_dims.end(), hp.hidden_actor.begin(), hp.hidden_actor.end());
  actor_dims.push_back(1);
  std::vector<int> critic_dims{stack_dim + 1};
  critic_dims.insert(critic_dims.end(), hp.hidden_critic.begin(), hp.hidden_critic.end());
  critic_dims.push_back(1);

  DdpgAgent agent;
  agent.actor = MlpNet::he_uniform(actor_dims, rng_init, OutputHead::TanhScaled, lo, hi);
  agent.critic = MlpNet::he_uniform(critic_dims, rng_init);
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  agent.frames = frames;
  agent.sigma = smoothing.sigma;

  MlpNet best_actor = agent.actor;
  MlpNet best_critic = agent.critic;
  AdamState adam_actor, adam_critic;
  ReplayBuffer buffer(hp.buffer_capacity);
  OuNoise ou;
  ou.sigma = hp.ou_sigma;

  DdpgRun run;
  GradBundle critic_grads = GradBundle::zeros_like(agent.critic);
  GradBundle actor_grads = GradBundle::zeros_like(agent.actor);
  ForwardTrace trace_c, trace_a;

  std::int64_t step = 0;
  std::uint64_t episode = 0;
  bool stop = false;

  auto train_batch = [&]() {
    const auto batch = buffer.sample(rng_train, hp.batch_size);
    const double inv_b = 1.0 / batch.size();

    // Critic regression toward the soft-target bootstrap value.
    critic_grads.scale(0.0);
    double loss = 0.0;
    std::vector<double> critic_in(stack_dim + 1);
    std::vector<double> upstream(1, 0.0);
    for (const Transition* tr : batch) {
      const double a_next = actor_action(agent.target_actor, tr->next_obs);
      std::copy(tr->next_obs.begin(), tr->next_obs.end(), critic_in.begin());
      critic_in[stack_dim] = a_next;
      const double q_next = forward(agent.target_critic, critic_in)[0];
      const double y = tr->reward + hp.gamma * (tr->terminal ? 0.0 : q_next);

      std::copy(tr->obs.begin(), tr->obs.end(), critic_in.begin());
      critic_in[stack_dim] = tr->action_cont;
      const double q = forward(agent.critic, critic_in, trace_c)[0];
      const double e = q - y;
      loss += 0.5 * e * e;
      upstream[0] = e * inv_b;
      backward_accumulate(agent.critic, trace_c, upstream, critic_grads);
    }
    if (!std::isfinite(loss)) throw DivergedTraining("DDPG critic loss is not finite");
    adam_update(agent.critic, critic_grads, hp.learning_rate, adam_critic);

    // Actor ascends the critic value of its own action.
    actor_grads.scale(0.0);
    for (const Transition* tr : batch) {
      const double a = forward(agent.actor, tr->obs, trace_a)[0];
      std::copy(tr->obs.begin(), tr->obs.end(), critic_in.begin());
      critic_in[stack_dim] = a;
      upstream[0] = 1.0;
      const GradBundle dq = backward(agent.critic, critic_in, upstream);
      upstream[0] = -dq.d_input[stack_dim] * inv_b;
      backward_accumulate(agent.actor, trace_a, upstream, actor_grads);
    }
    adam_update(agent.actor, actor_grads, hp.learning_rate, adam_actor);

    soft_update(agent.target_actor, agent.actor, hp.tau);
    soft_update(agent.target_critic, agent.critic, hp.tau);
  };

  while (!stop) {
    const std::uint64_t ep_seed = derive_seed(episode_master, episode);
    Rng rng_env(derive_seed(ep_seed, 0));
    Rng rng_noise(derive_seed(ep_seed, 1));
    ++episode;
    ou.reset();

    EnvState state = env.reset(rng_env);
    FrameBuffer buf(frames, obs_dim);
    buf.push(state.features, std::vector<double>(obs_dim, 0.0),
             sample_noise(rng_noise, smoothing.sigma, obs_dim));
    std::vector<double> stacked = buf.stacked();
    int episode_steps = 0;

    while (!state.done && !stop) {
      const double a =
          std::clamp(actor_action(agent.actor, stacked) + ou.sample(rng_train), lo, hi);
      const StepResult sr = env.step(a);
      state = sr.state;
      buf.push(state.features, std::vector<double>(obs_dim, 0.0),
               sample_noise(rng_noise, smoothing.sigma, obs_dim));
      std::vector<double> next_stacked = buf.stacked();

      Transition t;
      t.obs = stacked;
      t.next_obs = next_stacked;
      t.action_cont = a;
      t.reward = sr.reward;
      t.terminal = state.done && state.step_index < spec.max_steps;
      buffer.push(std::move(t));
      stacked = std::move(next_stacked);
      ++step;
      ++episode_steps;

      if (step % hp.validation_interval == 0) {
        auto env_val = env.clone();
        const Policy pol = [&agent](std::span<const double> o) -> Action {
          return actor_action(agent.actor, o);
        };
        const double score =
            validation_score(*env_val, pol, smoothing.sigma, frames,
                             derive_seed(val_master, step / hp.validation_interval),
                             hp.validation_episodes);
        const bool is_best = score > run.best_validation;
        if (is_best) {
          run.best_validation = score;
          best_actor = agent.actor;
          best_critic = agent.critic;
        }
        run.log.push_back({step, score, is_best});
        if (run.best_validation >= hp.early_stop_at) stop = true;
      }
      if (step >= hp.total_steps) stop = true;
    }

    // One update phase per episode, as many gradient steps as env steps.
    if (step >= hp.learning_starts &&
        buffer.size() >= static_cast<std::size_t>(hp.batch_size)) {
      for (int g = 0; g < episode_steps && !stop; ++g) train_batch();
    }
  }

  run.agent = std::move(agent);
  run.agent.actor = std::move(best_actor);
  run.agent.critic = std::move(best_critic);
  run.agent.target_actor = run.agent.actor;
  run.agent.target_critic = run.agent.critic;
  return run;
}

}  // namespace

TrainResult<DdpgAgent> train_ddpg(Env& env, const SmoothingConfig& smoothing,
                                  const DdpgHyperparams& hp, std::uint64_t seed) {
  if (hp.restarts < 1) throw BadConfig("restarts must be >= 1");
  DdpgRun best;
  for (int r = 0; r < hp.restarts; ++r) {
    DdpgRun run = train_ddpg_once(env, smoothing, hp, derive_seed(seed, 7000 + r));
    if (r == 0 || run.best_validation > best.best_validation) best = std::move(run);
  }
  return {std::move(best.agent), std::move(best.log), best.best_validation};
}

namespace {

nlohmann::json net_json(const MlpNet& net) { return nlohmann::json::parse(net_to_json(net)); }

}  // namespace

void save_dqn_agent(const DqnAgent& agent, const std::string& path) {
  nlohmann::json j;
  j["format"] = "smoothrl-agent";
  j["version"] = 1;
  j["algo"] = "dqn";
  j["frames"] = agent.frames;
  j["sigma"] = agent.sigma;
  j["q_net"] = net_json(agent.q_net);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump() << '\n';
}

DqnAgent load_dqn_agent(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "smoothrl-agent" || j.value("algo", "") != "dqn")
    throw BadConfig("not a DQN agent checkpoint: " + path);
  DqnAgent agent;
  agent.frames = j.at("frames").get<int>();
  agent.sigma = j.at("sigma").get<double>();
  agent.q_net = net_from_json(j.at("q_net").dump());
  agent.target_net = agent.q_net;
  return agent;
}

void save_ddpg_agent(const DdpgAgent& agent, const std::string& path) {
  nlohmann::json j;
  j["format"] = "smoothrl-agent";
  j["version"] = 1;
  j["algo"] = "ddpg";
  j["frames"] = agent.frames;
  j["sigma"] = agent.sigma;
  j["actor"] = net_json(agent.actor);
  j["critic"] = net_json(agent.critic);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << j.dump() << '\n';
}

DdpgAgent load_ddpg_agent(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "smoothrl-agent" || j.value("algo", "") != "ddpg")
    throw BadConfig("not a DDPG agent checkpoint: " + path);
  DdpgAgent agent;
  agent.frames = j.at("frames").get<int>();
  agent.sigma = j.at("sigma").get<double>();
  agent.actor = net_from_json(j.at("actor").dump());
  agent.critic = net_from_json(j.at("critic").dump());
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  return agent;
}

void write_training_log_csv(const std::string& path, const std::vector<TrainLogEntry>& log,
                            const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "step,validation_mean_reward,is_best\n";
  for (const auto& e : log) {
    out << e.step << ',' << e.validation_mean << ',' << (e.is_best ? 1 : 0) << '\n';
  }
}

}  // namespace smoothrl
