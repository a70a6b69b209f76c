#pragma once
// Episode transcripts as JSON lines, one episode per line, for offline
// certification. Summaries always carry enough to certify (total reward,
// sigma, frames, budget); per-step detail is optional.

#include <string>
#include <vector>

#include "smoothrl/smoothing.hpp"

namespace smoothrl {

std::string rollout_to_jsonl(const Rollout& r, bool include_detail);
Rollout rollout_from_jsonl(const std::string& line);

void write_transcripts(const std::string& path, const std::vector<Rollout>& rollouts,
                       bool include_detail);
std::vector<Rollout> read_transcripts(const std::string& path);

struct TranscriptTotals {
  std::vector<double> totals;
  double sigma = 0.0;
  int frames = 1;
};

// Fast path for certification: totals plus the shared noise parameters.
// Throws BadConfig if the episodes disagree on sigma or frames.
TranscriptTotals read_transcript_totals(const std::string& path);

}  // namespace smoothrl
