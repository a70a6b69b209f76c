#pragma once

#include <stdexcept>
#include <string>

namespace smoothrl {

struct StepAfterDone : std::logic_error {
  StepAfterDone() : std::logic_error("step() called on a finished episode") {}
};

struct DimMismatch : std::invalid_argument {
  explicit DimMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct DivergedTraining : std::runtime_error {
  explicit DivergedTraining(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

struct BadConfig : std::invalid_argument {
  explicit BadConfig(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidSigma : std::invalid_argument {
  InvalidSigma() : std::invalid_argument("sigma must be > 0") {}
};

struct MissingCheckpoint : std::runtime_error {
  explicit MissingCheckpoint(const std::string& what) : std::runtime_error(what) {}
};

struct GridInfeasible : std::logic_error {
  explicit GridInfeasible(const std::string& what) : std::logic_error(what) {}
};

}  // namespace smoothrl
