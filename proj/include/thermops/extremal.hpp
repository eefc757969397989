#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "thermops/tomography.hpp"
#include "thermops/types.hpp"

namespace thermops {

struct SpectralResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenstates;  // orthonormal columns, deterministic phases
  std::vector<std::vector<int>> degenerate_groups;
};

enum class Direction { min, max };

struct ExtremalResult {
  double value = 0.0;
  DensityMatrix state;
  bool degenerate = false;
};

SpectralResult spectral(const ThermoOperator& op);

// Pure-state input achieving the extremal expectation value of op.
ExtremalResult extremize(const ThermoOperator& op, Direction direction);

// [lambda_min, lambda_max]: the attainable range of tr(rho op).
std::pair<double, double> range(const ThermoOperator& op);

// Expected work of the two-point measurement scheme, as an observable of the
// pre-measurement state. Degeneracy-safe projector form.
ThermoOperator tpm_work_operator(const Eigen::MatrixXcd& h,
                                 const Eigen::MatrixXcd& h_final,
                                 const Eigen::MatrixXcd& u);

}  // namespace thermops
