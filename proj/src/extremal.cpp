#include "thermops/extremal.hpp"

#include <cmath>

#include "thermops/basis.hpp"
#include "thermops/linalg.hpp"

namespace thermops {

namespace {

// Groups ascending eigenvalues with gap < 1e-9 * max(1, ||op||).
std::vector<std::vector<int>> group_degenerate(const Eigen::VectorXd& evals,
                                               double scale) {
  const double gap_tol = 1e-9 * std::max(1.0, scale);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < evals.size(); ++i) {
    if (i == 0 || evals[i] - evals[i - 1] >= gap_tol) {
      groups.emplace_back();
    }
    groups.back().push_back(i);
  }
  return groups;
}

}  // namespace

SpectralResult spectral(const ThermoOperator& op) {
  const EighResult eig = eigh(op.mat);
  SpectralResult result;
  result.eigenvalues = eig.eigenvalues;
  result.eigenstates = eig.eigenvectors;
  fix_phases(result.eigenstates);
  const double scale =
      std::max(std::abs(eig.eigenvalues.minCoeff()),
               std::abs(eig.eigenvalues.maxCoeff()));
  result.degenerate_groups = group_degenerate(eig.eigenvalues, scale);
  return result;
}

ExtremalResult extremize(const ThermoOperator& op, Direction direction) {
  const SpectralResult s = spectral(op);
  const int n = static_cast<int>(s.eigenvalues.size());
  const int index = direction == Direction::min ? 0 : n - 1;
  const Eigen::VectorXcd v = s.eigenstates.col(index);
  ExtremalResult result;
  result.value = s.eigenvalues[index];
  result.state = DensityMatrix(v * v.adjoint());
  const auto& group = direction == Direction::min
                          ? s.degenerate_groups.front()
                          : s.degenerate_groups.back();
  result.degenerate = group.size() > 1;
  return result;
}

std::pair<double, double> range(const ThermoOperator& op) {
  const EighResult eig = eigh(op.mat);
  return {eig.eigenvalues.minCoeff(), eig.eigenvalues.maxCoeff()};
}

ThermoOperator tpm_work_operator(const Eigen::MatrixXcd& h,
                                 const Eigen::MatrixXcd& h_final,
                                 const Eigen::MatrixXcd& u) {
  const int d = static_cast<int>(h.rows());
  if (h.cols() != d || h_final.rows() != d || h_final.cols() != d ||
      u.rows() != d || u.cols() != d) {
    throw DimensionMismatchError("tpm operands must share one square shape");
  }
  if ((u.adjoint() * u - Eigen::MatrixXcd::Identity(d, d))
          .cwiseAbs()
          .maxCoeff() > 1e-10) {
    throw InvalidPropagatorError("propagator is not unitary");
  }
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 ||
      (h_final - h_final.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw Error("tpm Hamiltonians must be Hermitian");
  }

  // Spectral projectors with degenerate levels merged, so measurement
  // statistics are basis-choice independent.
  const auto projectors = [](const Eigen::MatrixXcd& ham) {
    const EighResult eig = eigh(ham);
    const double scale = std::max(
        {1.0, std::abs(eig.eigenvalues.minCoeff()),
         std::abs(eig.eigenvalues.maxCoeff())});
    std::vector<std::pair<double, Eigen::MatrixXcd>> out;
    int i = 0;
    const int n = static_cast<int>(eig.eigenvalues.size());
    while (i < n) {
      int j = i;
      while (j + 1 < n &&
             eig.eigenvalues[j + 1] - eig.eigenvalues[j] < 1e-9 * scale) {
        ++j;
      }
      Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(n, n);
      double energy = 0.0;
      for (int k = i; k <= j; ++k) {
        p += eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();
        energy += eig.eigenvalues[k];
      }
      out.emplace_back(energy / (j - i + 1), std::move(p));
      i = j + 1;
    }
    return out;
  };

  const auto initial = projectors(h);
  const auto final_ = projectors(h_final);

  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(d, d);
  for (const auto& [e, p] : initial) {
    for (const auto& [ep, pp] : final_) {
      w += (ep - e) * (p * (u.adjoint() * pp * u) * p);
    }
  }
  return make_operator(Label::tpm_work(), hermitize(w), gellmann_basis(d));
}

}  // namespace thermops
