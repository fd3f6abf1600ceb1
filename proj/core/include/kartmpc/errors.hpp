#pragma once

#include <stdexcept>
#include <string>

namespace kartmpc {

// Linear algebra broke down (Cholesky failure, negative variance, ...).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Hyperparameter optimization diverged; carries no params, callers keep the
// last valid iterate themselves.
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Spatial dynamics evaluated where ds/dt (or 1 - zeta*e_y) vanishes.
struct SingularityError : std::runtime_error {
  explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Vehicle position cannot be projected onto the track centerline.
struct LocalizationError : std::runtime_error {
  explicit LocalizationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Plant longitudinal velocity dropped below the operational floor.
struct PlantStallError : std::runtime_error {
  explicit PlantStallError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kartmpc
