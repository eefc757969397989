#pragma once

#include <Eigen/Dense>
#include <vector>

#include "thermops/tomography.hpp"
#include "thermops/types.hpp"

namespace thermops {

// f(rho) = scale * [tr(rho X) + S(rho_tau) - S(rho)], with rho_tau the channel
// image obtained from the propagated basis. Convex in rho.
struct Type2Objective {
  ThermoOperator op;
  PropagatedBasis propagated;
  OperatorBasis basis;
  double scale = 1.0;
};

Type2Objective make_objective(const TestEnsemble& ens, const ThermoOperator& op,
                              double scale = 1.0);

struct FrankWolfeOptions {
  long max_iter = 100000;
  double tol = -1.0;  // < 0 selects 1e-8 * max(1, scale*||X||)
  bool line_search = false;
};

struct DescentIterate {
  long k = 0;
  double f = 0.0;
  double step = 0.0;   // step size actually taken
  double moved = 0.0;  // trace distance between consecutive iterates
  double gap = 0.0;    // tr[(sigma - rho) grad f], the convergence certificate
};

struct DescentTrace {
  std::vector<DescentIterate> iterates;
  DensityMatrix final_state;
  bool converged = false;
};

double evaluate(const Type2Objective& obj, const DensityMatrix& rho);

// Channel image of rho under the objective's propagated basis.
Eigen::MatrixXcd propagate(const Type2Objective& obj, const DensityMatrix& rho);

// df/db_m = scale * [tr(Gamma_m X) + tr(Gamma_m ln rho) - tr(Gamma'_m ln rho_tau)].
Eigen::VectorXd gradient_bloch(const Type2Objective& obj,
                               const DensityMatrix& rho);

// Hermitian gradient sum_m Gamma_m df/db_m.
Eigen::MatrixXcd gradient(const Type2Objective& obj, const DensityMatrix& rho);

DescentTrace frank_wolfe_min(const Type2Objective& obj,
                             const DensityMatrix& rho_init,
                             FrankWolfeOptions opts = {});

// Seeds itself at the pure state maximizing tr(rho X); reports a local
// maximum (global only for overwriting channels).
DescentTrace frank_wolfe_max(const Type2Objective& obj,
                             FrankWolfeOptions opts = {});

// Closed-form minimizer for overwriting channels: omega = e^{-X}/tr(e^{-X}).
struct OverwritingMinimizer {
  DensityMatrix state;
  double log_partition = 0.0;  // ln tr(e^{-X})
  double scale = 1.0;

  // Minimal objective value given the entropy of the fixed output state.
  double min_value(double entropy_r_tau) const {
    return scale * (entropy_r_tau - log_partition);
  }
};

OverwritingMinimizer overwriting_minimizer(const ThermoOperator& op,
                                           double scale = 1.0);

// A channel counts as overwriting when all recorded outputs agree to 1e-6 in
// trace distance with their mean.
bool is_overwriting(const TestEnsemble& ens);

// |(f_rho - f_alpha) - scale*(D[rho||alpha] - D[rho_out||alpha_out])|, with
// both sides computed from the supplied channel data.
double mismatch_check(const Type2Objective& obj, const DensityMatrix& rho,
                      const DensityMatrix& alpha,
                      const DensityMatrix& alpha_out,
                      const DensityMatrix& rho_out);

}  // namespace thermops
