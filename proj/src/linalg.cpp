#include "thermops/linalg.hpp"

#include <cmath>
#include <limits>

namespace thermops {

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Eigen::MatrixXcd mat) {
  if (mat.rows() != mat.cols() || mat.rows() < 1) {
    throw NonPhysicalStateError("density matrix must be square and non-empty",
                                std::numeric_limits<double>::quiet_NaN());
  }
  const double herm = (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  if (herm >= tol::hermitian) {
    throw NonPhysicalStateError(
        "matrix is not Hermitian: max |m - m^dag| = " + std::to_string(herm),
        std::numeric_limits<double>::quiet_NaN());
  }
  const double tr = mat.trace().real();
  if (std::abs(tr - 1.0) >= tol::trace_one) {
    throw NonPhysicalStateError(
        "matrix trace is not one: tr = " + std::to_string(tr),
        std::numeric_limits<double>::quiet_NaN());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      mat, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig <= tol::psd_floor) {
    throw NonPhysicalStateError(
        "matrix is not positive semidefinite: min eigenvalue = " +
            std::to_string(min_eig),
        min_eig);
  }
  mat_ = std::move(mat);
}

DensityMatrix DensityMatrix::unchecked(Eigen::MatrixXcd mat) {
  DensityMatrix rho;
  rho.mat_ = std::move(mat);
  return rho;
}

// ---------------------------------------------------------------------------
// Decompositions and matrix functions
// ---------------------------------------------------------------------------

EighResult eigh(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitize(m));
  return {solver.eigenvalues(), solver.eigenvectors()};
}

void fix_phases(Eigen::MatrixXcd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index imax = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&imax);
    const std::complex<double> pivot = vectors(imax, c);
    const double norm = std::abs(pivot);
    if (norm > 0.0) vectors.col(c) *= std::conj(pivot) / norm;
  }
}

double trace_product_real(const Eigen::MatrixXcd& a,
                          const Eigen::MatrixXcd& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

double operator_norm(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()[0];
}

Eigen::MatrixXcd matrix_log_clamped(const Eigen::MatrixXcd& rho,
                                    double floor) {
  const EighResult es = eigh(rho);
  Eigen::VectorXd logs(es.eigenvalues.size());
  for (Eigen::Index i = 0; i < logs.size(); ++i) {
    logs[i] = std::log(std::max(es.eigenvalues[i], floor));
  }
  return es.eigenvectors * logs.asDiagonal() * es.eigenvectors.adjoint();
}

Eigen::MatrixXcd matrix_exp_hermitian(const Eigen::MatrixXcd& x) {
  const EighResult es = eigh(x);
  const Eigen::VectorXd exps = es.eigenvalues.array().exp();
  return es.eigenvectors * exps.asDiagonal() * es.eigenvectors.adjoint();
}

double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      hermitize(rho), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double p = solver.eigenvalues()[i];
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double von_neumann_entropy(const DensityMatrix& rho) {
  return von_neumann_entropy(rho.mat());
}

double relative_entropy(const Eigen::MatrixXcd& rho,
                        const Eigen::MatrixXcd& sigma) {
  const EighResult ss = eigh(sigma);
  const double support_floor = 1e-14 * std::max(1.0, ss.eigenvalues.maxCoeff());
  for (Eigen::Index i = 0; i < ss.eigenvalues.size(); ++i) {
    if (ss.eigenvalues[i] < support_floor) {
      const double weight =
          (ss.eigenvectors.col(i).adjoint() * rho * ss.eigenvectors.col(i))
              .value()
              .real();
      if (weight > 1e-12) {
        throw SupportMismatchError(
            "relative entropy is infinite: first argument has weight " +
            std::to_string(weight) + " on the second argument's null space");
      }
    }
  }
  const Eigen::MatrixXcd log_sigma = matrix_log_clamped(sigma);
  const EighResult rs = eigh(rho);
  double tr_rho_log_rho = 0.0;
  for (Eigen::Index i = 0; i < rs.eigenvalues.size(); ++i) {
    const double p = rs.eigenvalues[i];
    if (p > 0.0) tr_rho_log_rho += p * std::log(p);
  }
  return tr_rho_log_rho - trace_product_real(rho, log_sigma);
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return relative_entropy(rho.mat(), sigma.mat());
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      hermitize(a - b), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.mat(), b.mat());
}

double purity(const DensityMatrix& rho) {
  return trace_product_real(rho.mat(), rho.mat());
}

Eigen::MatrixXcd partial_trace_env(const Eigen::MatrixXcd& m, int d, int env) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      std::complex<double> sum = 0.0;
      for (int k = 0; k < env; ++k) sum += m(i * env + k, j * env + k);
      out(i, j) = sum;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random objects
// ---------------------------------------------------------------------------

Eigen::MatrixXcd ginibre(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      g(i, j) = std::complex<double>(re, im);
    }
  }
  return g;
}

DensityMatrix random_density(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd g = ginibre(d, rng);
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::unchecked(hermitize(rho));
}

DensityMatrix random_pure(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd psi(d);
  for (int i = 0; i < d; ++i) {
    psi[i] = std::complex<double>(gauss(rng), gauss(rng));
  }
  psi.normalize();
  return DensityMatrix::unchecked(psi * psi.adjoint());
}

Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd g = ginibre(d, rng);
  return (g + g.adjoint()) / (2.0 * std::sqrt(2.0));
}

Eigen::MatrixXcd haar_unitary(int d, std::mt19937_64& rng) {
  const Eigen::MatrixXcd g = ginibre(d, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase ambiguity so the distribution is exactly Haar.
  for (int i = 0; i < d; ++i) {
    const std::complex<double> rii = r(i, i);
    q.col(i) *= rii / std::abs(rii);
  }
  return q;
}

}  // namespace thermops
