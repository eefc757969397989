#pragma once

#include <Eigen/Dense>

#include "thermops/basis.hpp"
#include "thermops/type2.hpp"
#include "thermops/types.hpp"

namespace thermops {

// Second-order model of a type-II objective around a full-rank reference:
// f(pi + eps) ~ f_ref + eps.j + eps.H.eps/2 in Bloch coordinates.
struct QuadraticModel {
  BlochVector ref_bloch;
  Eigen::VectorXd j;
  Eigen::MatrixXd hess;
  double f_ref = 0.0;
  double scale = 1.0;
  OperatorBasis basis;
};

QuadraticModel build_model(const Type2Objective& obj, const DensityMatrix& pi);

// d2 S / db_m db_n for the state's entropy in the given basis; uses the
// reciprocal logarithmic mean kernel, with the continuous 1/a branch on
// (near-)degenerate eigenvalue pairs.
Eigen::MatrixXd entropy_hessian(const DensityMatrix& rho,
                                const OperatorBasis& basis);

struct PerturbativeResult {
  DensityMatrix state;
  double value = 0.0;
  // eps* was shrunk to stay physical: the quadratic regime does not reach the
  // unconstrained stationary point.
  bool regime_exceeded = false;
  // j has a component outside range(H); the model has no stationary point
  // along that direction and the answer drops it.
  bool out_of_model_range = false;
};

// eps* = -H^# j with H^# the group inverse; state rho(pi + eps*), value
// f_ref + j.eps* + eps*.H.eps*/2.
PerturbativeResult solve_optimal(const QuadraticModel& model);

}  // namespace thermops
