#include "thermops/perturbative.hpp"

#include <cmath>
#include <vector>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

// Reciprocal logarithmic mean with the continuous branch on near-degenerate
// pairs (|a - b| < 1e-12).
double phi(double a, double b) {
  if (std::abs(a - b) < 1e-12) return 1.0 / a;
  return (std::log(a) - std::log(b)) / (a - b);
}

// sum_{k,l} phi(lambda_k, lambda_l) <k|G_n|l><l|G_m|k> for the state with
// eigendecomposition (V, lambda). Eigenvalues are clamped below so exact
// null spaces (embedded subspace states, overwrite outputs) contribute only
// through their (vanishing) matrix elements.
Eigen::MatrixXd curvature_kernel(const Eigen::MatrixXcd& rho,
                                 const std::vector<Eigen::MatrixXcd>& elems) {
  const EighResult eig = eigh(rho);
  const int d = static_cast<int>(eig.eigenvalues.size());
  const int count = static_cast<int>(elems.size());
  Eigen::VectorXd lambda = eig.eigenvalues.cwiseMax(1e-18);

  Eigen::MatrixXd kernel(d, d);
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      kernel(k, l) = phi(lambda[k], lambda[l]);
    }
  }
  std::vector<Eigen::MatrixXcd> rotated(count);
  for (int n = 0; n < count; ++n) {
    rotated[n] = eig.eigenvectors.adjoint() * elems[n] * eig.eigenvectors;
  }
  Eigen::MatrixXd out(count, count);
  for (int m = 0; m < count; ++m) {
    for (int n = m; n < count; ++n) {
      // <k|G_n|l><l|G_m|k> = A_n(k,l) * conj(A_m(k,l)) for Hermitian A_m.
      const double value =
          (rotated[n].array() * rotated[m].array().conjugate() *
           kernel.array().cast<std::complex<double>>())
              .sum()
              .real();
      out(m, n) = value;
      out(n, m) = value;
    }
  }
  return out;
}

void require_positive_definite(const Eigen::MatrixXcd& rho,
                               const OperatorBasis& basis) {
  const Eigen::MatrixXcd frame = subspace_frame(basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      frame.adjoint() * rho * frame, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < 1e-12) {
    throw NotPositiveDefiniteError(
        "reference state is not positive definite on the basis support "
        "(min eigenvalue " +
        std::to_string(min_eig) + ")");
  }
}

}  // namespace

QuadraticModel build_model(const Type2Objective& obj, const DensityMatrix& pi) {
  if (pi.dim() != obj.basis.ambient_dim()) {
    throw DimensionMismatchError("reference state/objective dimension mismatch");
  }
  require_positive_definite(pi.mat(), obj.basis);

  const BlochVector pi_bloch = to_bloch(pi, obj.basis);
  const Eigen::MatrixXcd rho_tau = propagate(obj.propagated, pi_bloch);

  QuadraticModel model;
  model.ref_bloch = pi_bloch;
  model.scale = obj.scale;
  model.basis = obj.basis;
  model.f_ref = obj.scale * (trace_product_real(pi.mat(), obj.op.mat) +
                             von_neumann_entropy(rho_tau) -
                             von_neumann_entropy(pi));

  const Eigen::MatrixXcd log_in = matrix_log_clamped(pi.mat());
  const Eigen::MatrixXcd log_out = matrix_log_clamped(rho_tau);
  const int count = obj.basis.count();
  model.j.resize(count);
  for (int n = 0; n < count; ++n) {
    model.j[n] =
        obj.scale *
        (obj.op.vec[n] + trace_product_real(obj.basis.gammas[n], log_in) -
         trace_product_real(obj.propagated.gamma_primes[n + 1], log_out));
  }

  std::vector<Eigen::MatrixXcd> primes(obj.propagated.gamma_primes.begin() + 1,
                                       obj.propagated.gamma_primes.end());
  model.hess = obj.scale * (curvature_kernel(pi.mat(), obj.basis.gammas) -
                            curvature_kernel(rho_tau, primes));
  return model;
}

Eigen::MatrixXd entropy_hessian(const DensityMatrix& rho,
                                const OperatorBasis& basis) {
  if (rho.dim() != basis.ambient_dim()) {
    throw DimensionMismatchError("state/basis dimension mismatch");
  }
  require_positive_definite(rho.mat(), basis);
  return -curvature_kernel(rho.mat(), basis.gammas);
}

PerturbativeResult solve_optimal(const QuadraticModel& model) {
  const int count = static_cast<int>(model.j.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.hess);
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::MatrixXd& evecs = solver.eigenvectors();
  const double lambda_max = evals.maxCoeff();
  const double cutoff = 1e-10 * std::max(lambda_max, 0.0);

  Eigen::VectorXd eps = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd range_projection = Eigen::VectorXd::Zero(count);
  for (int i = 0; i < count; ++i) {
    if (evals[i] > cutoff) {
      const double coeff = evecs.col(i).dot(model.j);
      eps -= (coeff / evals[i]) * evecs.col(i);
      range_projection += coeff * evecs.col(i);
    }
  }

  PerturbativeResult result;
  result.out_of_model_range = (range_projection - model.j).norm() >
                              1e-8 * std::max(1.0, model.j.norm());

  // Shrink toward pi until the state is physical (quadratic regime exceeded
  // when any shrink is needed).
  Eigen::MatrixXcd mat;
  for (int attempt = 0;; ++attempt) {
    const BlochVector b{model.ref_bloch.coords + eps, model.basis.dim};
    mat = hermitize(bloch_expand(b, model.basis));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> check(
        mat, Eigen::EigenvaluesOnly);
    if (check.eigenvalues().minCoeff() > tol::psd_floor) break;
    if (attempt >= 60) {
      throw NonPhysicalStateError(
          "perturbative step could not be shrunk into the physical set",
          check.eigenvalues().minCoeff());
    }
    eps *= 0.5;
    result.regime_exceeded = true;
  }

  result.state = DensityMatrix(mat);
  result.value = model.f_ref + model.j.dot(eps) +
                 0.5 * eps.dot(model.hess * eps);
  return result;
}

}  // namespace thermops
