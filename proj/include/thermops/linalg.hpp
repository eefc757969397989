#pragma once

#include <random>

#include "thermops/types.hpp"

namespace thermops {

// Numeric helpers shared by every module. All functions are pure.

struct EighResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXcd eigenvectors; // columns, orthonormal
};

// Eigendecomposition of a Hermitian matrix (the anti-Hermitian part, if any,
// is discarded). Eigenvalues ascending.
EighResult eigh(const Eigen::MatrixXcd& m);

// Deterministic phase convention: scales each column so its
// largest-magnitude component is real and positive.
void fix_phases(Eigen::MatrixXcd& vectors);

inline Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& m) {
  return 0.5 * (m + m.adjoint());
}

inline double trace_real(const Eigen::MatrixXcd& m) {
  return m.trace().real();
}

// Hilbert-Schmidt pairing tr(a b), real part.
double trace_product_real(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// Largest singular value (spectral norm); equals max |eigenvalue| for
// Hermitian input.
double operator_norm(const Eigen::MatrixXcd& m);

// Matrix logarithm of a Hermitian PSD matrix with eigenvalues clamped below
// at `floor` so rank-deficient states stay finite.
Eigen::MatrixXcd matrix_log_clamped(const Eigen::MatrixXcd& rho,
                                    double floor = 1e-300);

// exp of a Hermitian matrix.
Eigen::MatrixXcd matrix_exp_hermitian(const Eigen::MatrixXcd& x);

// Von Neumann entropy in nats, with the 0 ln 0 = 0 convention. Small
// negative eigenvalues from floating-point noise contribute nothing.
double von_neumann_entropy(const Eigen::MatrixXcd& rho);
double von_neumann_entropy(const DensityMatrix& rho);

// Relative entropy D(rho || sigma) in nats. Throws SupportMismatchError when
// rho has weight on sigma's null space (the divergence is infinite).
double relative_entropy(const Eigen::MatrixXcd& rho,
                        const Eigen::MatrixXcd& sigma);
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);

// Trace distance (1/2) * ||a - b||_1 for Hermitian a, b.
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

double purity(const DensityMatrix& rho);

// Partial trace over the second (environment) tensor factor of a
// (d*env) x (d*env) matrix ordered system-major.
Eigen::MatrixXcd partial_trace_env(const Eigen::MatrixXcd& m, int d, int env);

// ---------------------------------------------------------------------------
// Seeded random objects. All draws use the caller's engine so a single seed
// fixes an entire experiment.
// ---------------------------------------------------------------------------

// d x d matrix of standard complex Gaussians.
Eigen::MatrixXcd ginibre(int d, std::mt19937_64& rng);

// Full-rank random state GG^dag / tr (Hilbert-Schmidt ensemble).
DensityMatrix random_density(int d, std::mt19937_64& rng);

DensityMatrix random_pure(int d, std::mt19937_64& rng);

// GUE-like Hermitian matrix (G + G^dag) / (2 sqrt(2)).
Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng);

// Haar-distributed unitary via QR of a Ginibre matrix.
Eigen::MatrixXcd haar_unitary(int d, std::mt19937_64& rng);

}  // namespace thermops
