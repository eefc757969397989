#include "thermops/basis.hpp"

#include <cmath>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

// Diagonal, symmetric, and antisymmetric Gell-Mann elements over an
// orthonormal column family, scaled so each has squared norm 2 n^2.
// Passing unit vectors e_1..e_d with n = sqrt((d-1)/(2d)) reproduces the
// standard construction; restricted bases reuse it on block bases.
void append_gellmann_family(const std::vector<Eigen::VectorXcd>& basis,
                            double n, bool per_block_pairs,
                            const std::vector<int>& block_sizes,
                            std::vector<Eigen::MatrixXcd>* out) {
  const int dp = static_cast<int>(basis.size());
  for (int l = 1; l < dp; ++l) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(basis[0].size(), basis[0].size());
    for (int j = 0; j < l; ++j) m += basis[j] * basis[j].adjoint();
    m -= static_cast<double>(l) * basis[l] * basis[l].adjoint();
    out->push_back(n * std::sqrt(2.0 / (static_cast<double>(l) * (l + 1))) * m);
  }
  // Pair elements. For a full space there is a single block covering all
  // indices and the pairs come out in global lexicographic order.
  int offset = 0;
  for (int blk : block_sizes) {
    for (int j = offset; j < offset + blk; ++j) {
      for (int k = j + 1; k < offset + blk; ++k) {
        out->push_back(n * (basis[k] * basis[j].adjoint() +
                            basis[j] * basis[k].adjoint()));
      }
    }
    if (per_block_pairs) {
      for (int j = offset; j < offset + blk; ++j) {
        for (int k = j + 1; k < offset + blk; ++k) {
          out->push_back(std::complex<double>(0.0, 1.0) * n *
                         (basis[k] * basis[j].adjoint() -
                          basis[j] * basis[k].adjoint()));
        }
      }
    }
    offset += blk;
  }
  if (!per_block_pairs) {
    // Full space: all symmetric pairs were emitted above in one block; now
    // the antisymmetric ones.
    offset = 0;
    for (int j = 0; j < dp; ++j) {
      for (int k = j + 1; k < dp; ++k) {
        out->push_back(std::complex<double>(0.0, 1.0) * n *
                       (basis[k] * basis[j].adjoint() -
                        basis[j] * basis[k].adjoint()));
      }
    }
  }
}

std::vector<Eigen::VectorXcd> standard_vectors(int d) {
  std::vector<Eigen::VectorXcd> e(d);
  for (int i = 0; i < d; ++i) {
    e[i] = Eigen::VectorXcd::Zero(d);
    e[i][i] = 1.0;
  }
  return e;
}

// Deterministic orthonormal basis per block: Gram-Schmidt over each
// projector's columns in index order.
std::vector<Eigen::VectorXcd> block_orthonormal(
    const std::vector<Eigen::MatrixXcd>& projectors,
    std::vector<int>* block_sizes) {
  std::vector<Eigen::VectorXcd> block_vectors;
  const Eigen::Index n = projectors.front().rows();
  for (const auto& p : projectors) {
    const int rank = static_cast<int>(std::round(p.trace().real()));
    int found = 0;
    for (Eigen::Index c = 0; c < n && found < rank; ++c) {
      Eigen::VectorXcd v = p.col(c);
      for (size_t k = block_vectors.size() - found; k < block_vectors.size();
           ++k) {
        v -= block_vectors[k] * block_vectors[k].dot(v);
      }
      const double norm = v.norm();
      if (norm > 1e-10) {
        block_vectors.push_back(v / norm);
        ++found;
      }
    }
    if (found != rank) {
      throw InvalidProjectorError(
          "projector columns span fewer directions than its trace indicates");
    }
    if (block_sizes != nullptr) block_sizes->push_back(rank);
  }
  return block_vectors;
}

}  // namespace

Eigen::MatrixXcd OperatorBasis::identity_element() const {
  const int n = ambient_dim();
  if (!restricted()) {
    return Eigen::MatrixXcd::Identity(n, n) / static_cast<double>(dim);
  }
  Eigen::MatrixXcd ip = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& p : projectors) ip += p;
  return ip / static_cast<double>(dim);
}

OperatorBasis gellmann_basis(int d) {
  if (d < 2) {
    throw InvalidDimensionError("operator basis requires dimension >= 2, got " +
                                std::to_string(d));
  }
  OperatorBasis basis;
  basis.dim = d;
  basis.eta = static_cast<double>(d - 1) / d;
  basis.gammas.reserve(d * d - 1);
  const double n = std::sqrt((d - 1) / (2.0 * d));
  append_gellmann_family(standard_vectors(d), n, /*per_block_pairs=*/false,
                         {d}, &basis.gammas);
  return basis;
}

OperatorBasis composite_basis(const OperatorBasis& a, const OperatorBasis& b) {
  if (a.restricted() || b.restricted()) {
    throw UnsupportedCompositionError(
        "composite bases are defined for full-space factors only");
  }
  const int d = a.dim;
  const int dp = b.dim;
  const int dd = d * dp;
  OperatorBasis out;
  out.dim = dd;
  out.eta = static_cast<double>(dd - 1) / dd;
  out.gammas.reserve(dd * dd - 1);

  const Eigen::MatrixXcd id_a = Eigen::MatrixXcd::Identity(d, d);
  const Eigen::MatrixXcd id_b = Eigen::MatrixXcd::Identity(dp, dp);
  const double c_ib = std::sqrt(out.eta / (b.eta * d));
  const double c_ai = std::sqrt(out.eta / (a.eta * dp));
  const double c_ab = std::sqrt(out.eta / (a.eta * b.eta));

  auto kron = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
    Eigen::MatrixXcd z(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        z.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
      }
    }
    return z;
  };

  for (const auto& g : b.gammas) out.gammas.push_back(c_ib * kron(id_a, g));
  for (const auto& g : a.gammas) out.gammas.push_back(c_ai * kron(g, id_b));
  for (const auto& ga : a.gammas) {
    for (const auto& gb : b.gammas) {
      out.gammas.push_back(c_ab * kron(ga, gb));
    }
  }
  return out;
}

OperatorBasis restricted_basis(
    const std::vector<Eigen::MatrixXcd>& projectors) {
  if (projectors.empty()) {
    throw InvalidProjectorError("restricted basis requires at least one projector");
  }
  const Eigen::Index n = projectors.front().rows();
  for (size_t i = 0; i < projectors.size(); ++i) {
    const auto& p = projectors[i];
    if (p.rows() != n || p.cols() != n) {
      throw InvalidProjectorError("projectors must share one square shape");
    }
    if ((p - p.adjoint()).cwiseAbs().maxCoeff() > 1e-10 ||
        (p * p - p).cwiseAbs().maxCoeff() > 1e-10) {
      throw InvalidProjectorError("projector " + std::to_string(i) +
                                  " is not an orthogonal projector");
    }
    for (size_t j = i + 1; j < projectors.size(); ++j) {
      if ((p * projectors[j]).cwiseAbs().maxCoeff() > 1e-10) {
        throw InvalidProjectorError("projectors " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not orthogonal");
      }
    }
    const double trace = p.trace().real();
    if (std::abs(trace - std::round(trace)) > 1e-8 || trace < 0.5) {
      throw InvalidProjectorError("projector " + std::to_string(i) +
                                  " has non-integer or zero trace");
    }
  }

  std::vector<int> block_sizes;
  const std::vector<Eigen::VectorXcd> block_vectors =
      block_orthonormal(projectors, &block_sizes);

  const int dp = static_cast<int>(block_vectors.size());
  if (dp < 2) {
    throw InvalidDimensionError("restricted subspace must have dimension >= 2");
  }
  OperatorBasis out;
  out.dim = dp;
  out.eta = static_cast<double>(dp - 1) / dp;
  out.projectors = projectors;
  const double scale = std::sqrt((dp - 1) / (2.0 * dp));
  append_gellmann_family(block_vectors, scale, /*per_block_pairs=*/true,
                         block_sizes, &out.gammas);
  for (auto& g : out.gammas) g = hermitize(g);
  return out;
}

Eigen::MatrixXcd subspace_frame(const OperatorBasis& basis) {
  const int n = basis.ambient_dim();
  if (!basis.restricted()) return Eigen::MatrixXcd::Identity(n, n);
  const std::vector<Eigen::VectorXcd> vectors =
      block_orthonormal(basis.projectors, nullptr);
  Eigen::MatrixXcd frame(n, vectors.size());
  for (size_t i = 0; i < vectors.size(); ++i) frame.col(i) = vectors[i];
  return frame;
}

BlochVector to_bloch(const DensityMatrix& rho, const OperatorBasis& basis) {
  if (rho.dim() != basis.ambient_dim()) {
    throw DimensionMismatchError("state dimension " + std::to_string(rho.dim()) +
                                 " does not match basis ambient dimension " +
                                 std::to_string(basis.ambient_dim()));
  }
  if (basis.restricted()) {
    Eigen::MatrixXcd blocked = Eigen::MatrixXcd::Zero(rho.dim(), rho.dim());
    for (const auto& p : basis.projectors) blocked += p * rho.mat() * p;
    const double off = (rho.mat() - blocked).norm();
    if (off >= 1e-10) {
      throw OutOfSubspaceError(
          "state has weight outside the restricted subspace: " +
          std::to_string(off));
    }
  }
  BlochVector b;
  b.basis_dim = basis.dim;
  b.coords.resize(basis.count());
  for (int m = 0; m < basis.count(); ++m) {
    b.coords[m] = trace_product_real(rho.mat(), basis.gammas[m]) / basis.eta;
  }
  return b;
}

Eigen::MatrixXcd bloch_expand(const BlochVector& b, const OperatorBasis& basis) {
  if (b.coords.size() != basis.count()) {
    throw DimensionMismatchError("Bloch vector length " +
                                 std::to_string(b.coords.size()) +
                                 " does not match basis size " +
                                 std::to_string(basis.count()));
  }
  Eigen::MatrixXcd m = basis.identity_element();
  for (int i = 0; i < basis.count(); ++i) m += b.coords[i] * basis.gammas[i];
  return m;
}

DensityMatrix from_bloch(const BlochVector& b, const OperatorBasis& basis) {
  const Eigen::MatrixXcd m = hermitize(bloch_expand(b, basis));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      m, Eigen::EigenvaluesOnly);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig <= tol::psd_floor) {
    throw NonPhysicalStateError(
        "Bloch vector lies outside the physical set: min eigenvalue = " +
            std::to_string(min_eig),
        min_eig);
  }
  return DensityMatrix::unchecked(m);
}

}  // namespace thermops
