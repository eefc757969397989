#pragma once

#include <vector>

#include "thermops/types.hpp"

namespace thermops {

// ---------------------------------------------------------------------------
// OperatorBasis
// ---------------------------------------------------------------------------

// An ordered tuple (identity element, Gamma_1 ... Gamma_{L-1}) of Hermitian
// matrices with tr(Gamma_n) = 0 and tr(Gamma_m Gamma_n) = eta delta_mn.
// For a full space L = d^2 and eta = (d-1)/d. A restricted basis spans the
// block-diagonal subspace of a projector family; its elements are embedded
// in the ambient space (zero outside the blocks), dim is the subspace
// dimension d_P, and eta = (d_P-1)/d_P.
struct OperatorBasis {
  int dim = 0;                               // d, or d_P when restricted
  double eta = 0.0;
  std::vector<Eigen::MatrixXcd> gammas;      // L-1 elements, ambient-sized
  std::vector<Eigen::MatrixXcd> projectors;  // empty unless restricted

  bool restricted() const { return !projectors.empty(); }
  int count() const { return static_cast<int>(gammas.size()); }  // L-1
  int size() const { return count() + 1; }                       // L
  int ambient_dim() const {
    return gammas.empty() ? dim : static_cast<int>(gammas.front().rows());
  }

  // I/d for a full basis; (sum of projectors)/d_P when restricted. This is
  // the state with zero Bloch vector.
  Eigen::MatrixXcd identity_element() const;
};

// Scaled generalized Gell-Mann basis for dimension d >= 2. Ordering:
// diagonal elements (l = 1..d-1), then symmetric off-diagonal pairs in
// lexicographic (j,k) order, then antisymmetric pairs likewise. For d = 2
// this yields (sigma_z/2, sigma_x/2, sigma_y/2).
OperatorBasis gellmann_basis(int d);

// Basis for a bipartite space from two full-space bases: the blocks
// I (x) Gamma', Gamma (x) I, Gamma_m (x) Gamma'_n (lexicographic in (m,n)),
// rescaled so tr(G_m G_n) = eta'' delta_mn with eta'' = (dd'-1)/(dd').
OperatorBasis composite_basis(const OperatorBasis& a, const OperatorBasis& b);

// Basis for the block-diagonal subspace of a family of mutually orthogonal
// projectors. Elements: Gell-Mann-style diagonal combinations over the
// concatenated block bases first, then symmetric/antisymmetric pairs within
// each block (blocks in the given order). Block bases come from a
// deterministic Gram-Schmidt pass over each projector's columns.
OperatorBasis restricted_basis(const std::vector<Eigen::MatrixXcd>& projectors);

// Orthonormal columns spanning the basis support: the identity for a full
// basis, the concatenated deterministic block bases when restricted. The
// optimizers use it to keep eigenvector searches inside the subspace.
Eigen::MatrixXcd subspace_frame(const OperatorBasis& basis);

// b_n = tr(rho Gamma_n) / eta. For restricted bases rho must be supported
// on the subspace (Frobenius distance to its block-diagonal projection
// below 1e-10), else OutOfSubspaceError.
BlochVector to_bloch(const DensityMatrix& rho, const OperatorBasis& basis);

// identity_element + sum_n b_n Gamma_n, without the physicality check.
Eigen::MatrixXcd bloch_expand(const BlochVector& b, const OperatorBasis& basis);

// Same expansion, validated: throws NonPhysicalStateError (with the
// offending eigenvalue) when the vector lies outside the physical set.
DensityMatrix from_bloch(const BlochVector& b, const OperatorBasis& basis);

}  // namespace thermops
