#include "thermops/tomography.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

// Requires measurements[label] with one value per input.
const std::vector<double>& measurement_row(const TestEnsemble& ens,
                                           const Label& label) {
  const auto it = ens.measurements.find(label);
  if (it == ens.measurements.end() ||
      static_cast<int>(it->second.size()) != ens.size()) {
    throw IncompleteEnsembleError("ensemble has no complete measurement list "
                                  "for label '" +
                                  label.id + "'");
  }
  return it->second;
}

}  // namespace

std::vector<DensityMatrix> default_inputs(const OperatorBasis& basis) {
  std::vector<DensityMatrix> inputs;
  inputs.reserve(basis.size());
  const Eigen::MatrixXcd ref = basis.identity_element();
  // Physicality is judged on the basis support; ambient eigenvalues of a
  // restricted state are zero outside the blocks by construction.
  const Eigen::MatrixXcd frame = subspace_frame(basis);
  inputs.emplace_back(ref);
  for (const auto& gamma : basis.gammas) {
    double kappa = 0.9 / basis.dim;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Eigen::MatrixXcd candidate =
          frame.adjoint() * hermitize(ref + kappa * gamma) * frame;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
          candidate, Eigen::EigenvaluesOnly);
      if (solver.eigenvalues().minCoeff() > 1e-12) break;
      kappa *= 0.5;
    }
    inputs.emplace_back(hermitize(ref + kappa * gamma));
  }
  return inputs;
}

TestEnsemble make_ensemble(const OperatorBasis& basis,
                           std::vector<DensityMatrix> inputs) {
  const int l = static_cast<int>(inputs.size());
  if (l != basis.size()) {
    throw IncompleteEnsembleError(
        "ensemble needs exactly " + std::to_string(basis.size()) +
        " inputs for this basis, got " + std::to_string(l));
  }
  TestEnsemble ens;
  ens.basis = basis;
  ens.bloch_matrix.resize(l, l);
  for (int n = 0; n < l; ++n) {
    const BlochVector b = to_bloch(inputs[n], basis);
    ens.bloch_matrix(n, 0) = 1.0;
    ens.bloch_matrix.row(n).tail(l - 1) = b.coords.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      ens.bloch_matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  if (smin <= tol::singular_value_floor) {
    // Name the near-null combination: the right singular vector of the
    // smallest singular value gives coefficients of a dependent mix.
    const Eigen::VectorXd null_dir = svd.matrixV().col(l - 1);
    std::ostringstream msg;
    msg << "test inputs are not linearly independent (smallest singular value "
        << smin << "); near-null combination:";
    for (int n = 0; n < l; ++n) {
      if (std::abs(null_dir[n]) > 1e-3) {
        msg << " " << null_dir[n] << "*input[" << n << "]";
      }
    }
    throw DependentInputsError(msg.str());
  }
  ens.inputs = std::move(inputs);
  return ens;
}

ThermoOperator make_operator(const Label& label, const Eigen::MatrixXcd& mat,
                             const OperatorBasis& basis) {
  if (mat.rows() != basis.ambient_dim() || mat.cols() != basis.ambient_dim()) {
    throw DimensionMismatchError("operator/basis dimension mismatch");
  }
  ThermoOperator op;
  op.label = label;
  op.mat = hermitize(mat);
  op.ref_value = trace_product_real(basis.identity_element(), op.mat);
  op.vec.resize(basis.count());
  for (int n = 0; n < basis.count(); ++n) {
    op.vec[n] = trace_product_real(basis.gammas[n], op.mat);
  }
  return op;
}

ThermoOperator reconstruct_operator(const TestEnsemble& ens,
                                    const Label& label) {
  const std::vector<double>& values = measurement_row(ens, label);
  const int l = ens.size();
  Eigen::VectorXd rhs(l);
  for (int n = 0; n < l; ++n) rhs[n] = values[n];
  const Eigen::VectorXd sol = ens.bloch_matrix.colPivHouseholderQr().solve(rhs);

  const OperatorBasis& basis = ens.basis;
  const Eigen::MatrixXcd identity_p =
      basis.identity_element() * static_cast<double>(basis.dim);
  Eigen::MatrixXcd mat = sol[0] * identity_p;
  for (int n = 0; n + 1 < l; ++n) {
    mat += (sol[n + 1] / basis.eta) * basis.gammas[n];
  }
  ThermoOperator op;
  op.label = label;
  op.mat = hermitize(mat);
  op.ref_value = sol[0];
  op.vec = sol.tail(l - 1);
  return op;
}

ThermoOperator restricted_reconstruct(const TestEnsemble& ens,
                                      const Label& label) {
  return reconstruct_operator(ens, label);
}

PropagatedBasis propagate_basis(const TestEnsemble& ens) {
  const int l = ens.size();
  if (static_cast<int>(ens.outputs.size()) != l) {
    throw IncompleteEnsembleError(
        "ensemble outputs are not populated; run a device first");
  }
  const Eigen::MatrixXd inv =
      ens.bloch_matrix.colPivHouseholderQr().solve(
          Eigen::MatrixXd::Identity(l, l));
  PropagatedBasis pb;
  pb.gamma_primes.reserve(l);
  const int d_out = ens.outputs.front().dim();
  for (int m = 0; m < l; ++m) {
    Eigen::MatrixXcd gp = Eigen::MatrixXcd::Zero(d_out, d_out);
    for (int n = 0; n < l; ++n) gp += inv(m, n) * ens.outputs[n].mat();
    pb.gamma_primes.push_back(std::move(gp));
  }
  return pb;
}

Eigen::MatrixXcd propagate(const PropagatedBasis& pb, const BlochVector& b) {
  if (b.coords.size() + 1 != static_cast<Eigen::Index>(pb.gamma_primes.size())) {
    throw DimensionMismatchError(
        "Bloch vector does not match the propagated basis size");
  }
  Eigen::MatrixXcd out = pb.gamma_primes[0];
  for (Eigen::Index m = 0; m < b.coords.size(); ++m) {
    out += b.coords[m] * pb.gamma_primes[m + 1];
  }
  return out;
}

double predict(const ThermoOperator& op, const DensityMatrix& rho) {
  if (rho.dim() != op.dim()) {
    throw DimensionMismatchError("state/operator dimension mismatch");
  }
  return trace_product_real(rho.mat(), op.mat);
}

}  // namespace thermops
