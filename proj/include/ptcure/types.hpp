#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ptcure/errors.hpp"

namespace ptcure {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

// Model-ready tabular data: numeric covariates plus right-censored outcomes.
struct Dataset {
  Matrix covariates;  // N x q
  Vector time;        // N, all > 0
  IntVector event;    // N, 0/1
  std::vector<std::string> feature_names;

  Index rows() const { return covariates.rows(); }
  Index cols() const { return covariates.cols(); }
};

inline void validate_outcomes(const Vector& time, const IntVector& event) {
  if (time.size() != event.size())
    throw ValidationError("time and event vectors differ in length");
  for (Index i = 0; i < time.size(); ++i) {
    if (!(time[i] > 0.0) || !std::isfinite(time[i]))
      throw ValidationError("observed times must be positive and finite (row " +
                            std::to_string(i) + ")");
    if (event[i] != 0 && event[i] != 1)
      throw ValidationError("event indicators must be 0 or 1 (row " + std::to_string(i) + ")");
  }
}

inline void validate(const Dataset& data) {
  if (data.rows() == 0) throw ValidationError("dataset is empty");
  if (data.time.size() != data.rows() || data.event.size() != data.rows())
    throw ValidationError("dataset outcome vectors do not match covariate rows");
  if (!data.covariates.allFinite())
    throw ValidationError("covariate matrix contains non-finite values");
  validate_outcomes(data.time, data.event);
}

}  // namespace ptcure
