#include <doctest.h>

#include <complex>
#include <random>
#include <vector>

#include "thermops/basis.hpp"
#include "thermops/extremal.hpp"
#include "thermops/linalg.hpp"
#include "thermops/tomography.hpp"

using namespace thermops;
using Eigen::MatrixXcd;

namespace {

ThermoOperator wrap(const MatrixXcd& x) {
  return make_operator(Label::custom("x"), x,
                       gellmann_basis(static_cast<int>(x.rows())));
}

// Independent oracle for the two-point measurement scheme: enumerate both
// measurement outcomes over the spectral projectors and sum w * Pr(w).
double tpm_expected_work(const MatrixXcd& h, const MatrixXcd& h_final,
                         const MatrixXcd& u, const MatrixXcd& rho) {
  const EighResult ei = eigh(h);
  const EighResult ef = eigh(h_final);
  const int d = static_cast<int>(h.rows());
  double work = 0.0;
  for (int a = 0; a < d; ++a) {
    const MatrixXcd pa =
        ei.eigenvectors.col(a) * ei.eigenvectors.col(a).adjoint();
    for (int b = 0; b < d; ++b) {
      const MatrixXcd pb =
          ef.eigenvectors.col(b) * ef.eigenvectors.col(b).adjoint();
      const double prob =
          (pb * u * pa * rho * pa * u.adjoint()).trace().real();
      work += (ef.eigenvalues[b] - ei.eigenvalues[a]) * prob;
    }
  }
  return work;
}

}  // namespace

TEST_CASE("spectral: ascending eigenvalues, orthonormal states, groups") {
  std::mt19937_64 rng(51);
  const MatrixXcd x = random_hermitian(4, rng);
  const SpectralResult s = spectral(wrap(x));
  for (int i = 1; i < 4; ++i) CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
  CHECK((s.eigenstates.adjoint() * s.eigenstates - MatrixXcd::Identity(4, 4))
            .norm() < 1e-12);
  REQUIRE(s.degenerate_groups.size() == 4);  // generic: all singletons
}

TEST_CASE("spectral groups degenerate levels") {
  MatrixXcd x = MatrixXcd::Zero(3, 3);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  x(2, 2) = 2.0;
  const SpectralResult s = spectral(wrap(x));
  REQUIRE(s.degenerate_groups.size() == 2);
  CHECK(s.degenerate_groups[0].size() == 2);
  CHECK(s.degenerate_groups[1].size() == 1);
}

TEST_CASE("extremize returns the extremal pure eigenstates") {
  std::mt19937_64 rng(52);
  for (int d : {2, 3, 5}) {
    const MatrixXcd x = random_hermitian(d, rng);
    const ThermoOperator op = wrap(x);
    const ExtremalResult lo = extremize(op, Direction::min);
    const ExtremalResult hi = extremize(op, Direction::max);
    const EighResult e = eigh(x);
    CHECK(lo.value == doctest::Approx(e.eigenvalues[0]).epsilon(1e-12));
    CHECK(hi.value == doctest::Approx(e.eigenvalues[d - 1]).epsilon(1e-12));
    CHECK(purity(lo.state) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(trace_product_real(lo.state.mat(), x) ==
          doctest::Approx(lo.value).epsilon(1e-12));
    CHECK_FALSE(lo.degenerate);
    const auto [a, b] = range(op);
    CHECK(a == doctest::Approx(lo.value));
    CHECK(b == doctest::Approx(hi.value));
    // No state beats the range ends.
    for (int i = 0; i < 50; ++i) {
      const double v =
          trace_product_real(random_density(d, rng).mat(), x);
      CHECK(v >= a - 1e-12);
      CHECK(v <= b + 1e-12);
    }
  }
}

TEST_CASE("extremize flags a degenerate extremal level") {
  MatrixXcd x = MatrixXcd::Zero(3, 3);
  x(0, 0) = -1.0;
  x(1, 1) = -1.0;
  x(2, 2) = 3.0;
  const ExtremalResult lo = extremize(wrap(x), Direction::min);
  CHECK(lo.degenerate);
  CHECK_FALSE(extremize(wrap(x), Direction::max).degenerate);
}

TEST_CASE("TPM operator matches the outcome-enumeration oracle") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + trial % 3;
    const MatrixXcd h = random_hermitian(d, rng);
    const MatrixXcd hf = random_hermitian(d, rng);
    const MatrixXcd u = haar_unitary(d, rng);
    const ThermoOperator w = tpm_work_operator(h, hf, u);
    for (int i = 0; i < 5; ++i) {
      const DensityMatrix rho = random_density(d, rng);
      CHECK(std::abs(predict(w, rho) -
                     tpm_expected_work(h, hf, u, rho.mat())) < 1e-12);
    }
  }
}

TEST_CASE("TPM with degenerate initial Hamiltonian stays basis-independent") {
  std::mt19937_64 rng(54);
  MatrixXcd h = MatrixXcd::Zero(3, 3);
  h(2, 2) = 1.0;  // twofold ground degeneracy
  const MatrixXcd hf = random_hermitian(3, rng);
  const MatrixXcd u = haar_unitary(3, rng);
  const ThermoOperator w = tpm_work_operator(h, hf, u);
  // Oracle with explicit degenerate projector P = |0><0| + |1><1|.
  const EighResult ef = eigh(hf);
  for (int i = 0; i < 5; ++i) {
    const DensityMatrix rho = random_density(3, rng);
    double work = 0.0;
    std::vector<MatrixXcd> projs;
    MatrixXcd p0 = MatrixXcd::Zero(3, 3);
    p0(0, 0) = p0(1, 1) = 1.0;
    MatrixXcd p1 = MatrixXcd::Zero(3, 3);
    p1(2, 2) = 1.0;
    const double ea[2] = {0.0, 1.0};
    const MatrixXcd pa[2] = {p0, p1};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 3; ++b) {
        const MatrixXcd pb =
            ef.eigenvectors.col(b) * ef.eigenvectors.col(b).adjoint();
        const double prob =
            (pb * u * pa[a] * rho.mat() * pa[a] * u.adjoint()).trace().real();
        work += (ef.eigenvalues[b] - ea[a]) * prob;
      }
    }
    CHECK(std::abs(predict(w, rho) - work) < 1e-12);
  }
}

TEST_CASE("TPM trivial cases and validation") {
  std::mt19937_64 rng(55);
  const MatrixXcd h = random_hermitian(2, rng);
  // No evolution, same Hamiltonian: no work on eigenstate inputs and zero
  // operator overall.
  const ThermoOperator w =
      tpm_work_operator(h, h, MatrixXcd::Identity(2, 2));
  CHECK(w.mat.norm() < 1e-12);
  MatrixXcd not_unitary = MatrixXcd::Identity(2, 2) * 2.0;
  CHECK_THROWS_AS((void)tpm_work_operator(h, h, not_unitary),
                  InvalidPropagatorError);
}
