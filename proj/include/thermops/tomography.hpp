#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "thermops/basis.hpp"
#include "thermops/types.hpp"

namespace thermops {

// Hermitian observable on the initial state, X = ref_value*I + (vec . Gamma)/eta,
// so that tr(rho X) = ref_value + b(rho) . vec.
struct ThermoOperator {
  Label label = Label::custom("x");
  Eigen::MatrixXcd mat;
  double ref_value = 0.0;   // <X> at the maximally mixed input
  Eigen::VectorXd vec;      // tr(Gamma_n X)

  int dim() const { return static_cast<int>(mat.rows()); }
};

// L linearly independent test inputs plus whatever a device produced for them.
struct TestEnsemble {
  OperatorBasis basis;
  std::vector<DensityMatrix> inputs;
  Eigen::MatrixXd bloch_matrix;  // L x L, row n = (1, b0^(n))
  std::vector<DensityMatrix> outputs;
  std::map<Label, std::vector<double>> measurements;

  int size() const { return static_cast<int>(inputs.size()); }
};

// Channel images of the basis elements: gamma_primes[0] is the image of the
// reference state, gamma_primes[m] (m >= 1) the image of Gamma_m.
struct PropagatedBasis {
  std::vector<Eigen::MatrixXcd> gamma_primes;
};

// Deterministic default probe scheme: the reference state plus one state
// displaced along each basis direction (displacement shrunk until physical).
std::vector<DensityMatrix> default_inputs(const OperatorBasis& basis);

// Assembles B and verifies linear independence (smallest singular value).
TestEnsemble make_ensemble(const OperatorBasis& basis,
                           std::vector<DensityMatrix> inputs);

// Builds a ThermoOperator for a known matrix (ref_value/vec from the basis).
ThermoOperator make_operator(const Label& label, const Eigen::MatrixXcd& mat,
                             const OperatorBasis& basis);

// Solves B [ref; x] = measurements and assembles the operator.
ThermoOperator reconstruct_operator(const TestEnsemble& ens, const Label& label);

// Subspace variant; the subspace support of the inputs is enforced when the
// ensemble is built, so this shares the reconstruction path.
ThermoOperator restricted_reconstruct(const TestEnsemble& ens, const Label& label);

// Gamma'_m = sum_n (B^-1)_{m,n} outputs[n].
PropagatedBasis propagate_basis(const TestEnsemble& ens);

// Image of a state with Bloch coordinates b: Gamma'_0 + sum_m b_m Gamma'_m.
Eigen::MatrixXcd propagate(const PropagatedBasis& pb, const BlochVector& b);

double predict(const ThermoOperator& op, const DensityMatrix& rho);

}  // namespace thermops
