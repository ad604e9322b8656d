#pragma once

#include <stdexcept>
#include <string>

namespace cascadia {

struct MalformedGraph : std::runtime_error {
  explicit MalformedGraph(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidLoadingFactor : std::runtime_error {
  explicit InvalidLoadingFactor(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidGamma : std::runtime_error {
  explicit InvalidGamma(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionViolated : std::runtime_error {
  explicit PreconditionViolated(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

struct InsufficientData : std::runtime_error {
  explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cascadia
