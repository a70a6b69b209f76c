#include "smoothrl/transcript.hpp"

#include <fstream>

#include <json.hpp>

#include "smoothrl/errors.hpp"

namespace smoothrl {

std::string rollout_to_jsonl(const Rollout& r, bool include_detail) {
  nlohmann::json j;
  j["episode"] = r.episode_index;
  j["sigma"] = r.sigma;
  j["frames"] = r.frames;
  j["budget"] = r.budget;
  j["spent_sq"] = r.spent_sq;
  j["steps"] = r.steps.size();
  j["total_reward"] = r.total_reward;
  if (include_detail) {
    nlohmann::json d;
    auto& clean = d["clean"];
    auto& delta = d["delta"];
    auto& eps = d["eps"];
    auto& rewards = d["rewards"];
    bool discrete = !r.steps.empty() && std::holds_alternative<int>(r.steps.front().action);
    d["discrete_actions"] = discrete;
    auto& actions = d["actions"];
    for (const auto& s : r.steps) {
      clean.push_back(s.clean);
      delta.push_back(s.delta);
      eps.push_back(s.eps);
      rewards.push_back(s.reward);
      if (discrete) {
        actions.push_back(std::get<int>(s.action));
      } else {
        actions.push_back(std::get<double>(s.action));
      }
    }
    j["detail"] = std::move(d);
  }
  return j.dump();
}

Rollout rollout_from_jsonl(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Rollout r;
  r.episode_index = j.at("episode").get<std::uint64_t>();
  r.sigma = j.at("sigma").get<double>();
  r.frames = j.at("frames").get<int>();
  r.budget = j.at("budget").get<double>();
  r.spent_sq = j.value("spent_sq", 0.0);
  r.total_reward = j.at("total_reward").get<double>();
  if (j.contains("detail")) {
    const auto& d = j.at("detail");
    const bool discrete = d.at("discrete_actions").get<bool>();
    const auto& clean = d.at("clean");
    const auto& delta = d.at("delta");
    const auto& eps = d.at("eps");
    const auto& rewards = d.at("rewards");
    const auto& actions = d.at("actions");
    for (std::size_t i = 0; i < clean.size(); ++i) {
      StepRecord s;
      s.clean = clean[i].get<std::vector<double>>();
      s.delta = delta[i].get<std::vector<double>>();
      s.eps = eps[i].get<std::vector<double>>();
      s.reward = rewards[i].get<double>();
      if (discrete) {
        s.action = actions[i].get<int>();
      } else {
        s.action = actions[i].get<double>();
      }
      r.steps.push_back(std::move(s));
    }
  }
  return r;
}

void write_transcripts(const std::string& path, const std::vector<Rollout>& rollouts,
                       bool include_detail) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const auto& r : rollouts) out << rollout_to_jsonl(r, include_detail) << '\n';
}

std::vector<Rollout> read_transcripts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transcripts: " + path);
  std::vector<Rollout> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(rollout_from_jsonl(line));
  }
  return out;
}

TranscriptTotals read_transcript_totals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open transcripts: " + path);
  TranscriptTotals out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const double sigma = j.at("sigma").get<double>();
    const int frames = j.at("frames").get<int>();
    if (first) {
      out.sigma = sigma;
      out.frames = frames;
      first = false;
    } else if (sigma != out.sigma || frames != out.frames) {
      throw BadConfig("transcript episodes disagree on sigma/frames: " + path);
    }
    out.totals.push_back(j.at("total_reward").get<double>());
  }
  if (out.totals.empty()) throw BadConfig("no episodes in transcript file: " + path);
  return out;
}

}  // namespace smoothrl
