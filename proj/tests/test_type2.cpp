#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "thermops/basis.hpp"
#include "thermops/devices.hpp"
#include "thermops/linalg.hpp"
#include "thermops/tomography.hpp"
#include "thermops/type2.hpp"

using namespace thermops;

namespace {

// Objective built from a measured ensemble of the given device.
Type2Objective channel_objective(const Device& dev, const Eigen::MatrixXcd& x,
                                 double scale = 1.0) {
  const OperatorBasis basis = gellmann_basis(dev.dim());
  TestEnsemble ens = make_ensemble(basis, default_inputs(basis));
  measure_ensemble(dev, ens);
  return make_objective(ens, make_operator(Label::custom("x"), x, basis),
                        scale);
}

// Interior state: mixed enough that small Bloch displacements stay physical.
DensityMatrix interior_state(int d, std::mt19937_64& rng) {
  const DensityMatrix r = random_density(d, rng);
  const Eigen::MatrixXcd m =
      0.6 * Eigen::MatrixXcd::Identity(d, d) / d + 0.4 * r.mat();
  return DensityMatrix(m);
}

// tanh closed form for the minimizer of tr(rho X) - S(rho) with
// X = c I + v . sigma on a qubit.
Eigen::Matrix2cd qubit_gibbs_like(const Eigen::Vector3d& v) {
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
  sz << 1, 0, 0, -1;
  const double n = v.norm();
  const Eigen::Matrix2cd dir = (v[0] * sx + v[1] * sy + v[2] * sz) / n;
  return 0.5 * Eigen::Matrix2cd::Identity() - 0.5 * std::tanh(n) * dir;
}

}  // namespace

TEST_CASE("objective matches its definition through the true channel") {
  std::mt19937_64 rng(3);
  for (int d : {2, 3}) {
    const RandomChannelDevice dev(d, 2, 700 + d);
    const Eigen::MatrixXcd x = random_hermitian(d, rng);
    const Type2Objective obj = channel_objective(dev, x, 1.7);
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix rho = random_density(d, rng);
      const Eigen::MatrixXcd out = dev.apply(rho.mat());
      const double expected =
          1.7 * (trace_product_real(rho.mat(), x) + von_neumann_entropy(out) -
                 von_neumann_entropy(rho));
      CHECK(evaluate(obj, rho) == doctest::Approx(expected).epsilon(1e-9));
      CHECK((propagate(obj, rho) - out).norm() < 1e-9);
    }
  }
}

TEST_CASE("bloch gradient matches central finite differences") {
  std::mt19937_64 rng(17);
  for (int d : {2, 3}) {
    const RandomChannelDevice dev(d, 2, 55 + d);
    const Eigen::MatrixXcd x = random_hermitian(d, rng);
    const Type2Objective obj = channel_objective(dev, x);
    const int n = obj.basis.count();
    std::normal_distribution<double> gauss;

    for (int trial = 0; trial < 3; ++trial) {
      const DensityMatrix rho = interior_state(d, rng);
      const Eigen::VectorXd g = gradient_bloch(obj, rho);
      const BlochVector b0 = to_bloch(rho, obj.basis);
      for (int dir = 0; dir < 5; ++dir) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
        v.normalize();
        const double eps = 1e-5;
        const auto shift = [&](double s) {
          BlochVector b = b0;
          b.coords += s * v;
          return evaluate(obj, from_bloch(b, obj.basis));
        };
        const double fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        CHECK(std::abs(fd - g.dot(v)) < 1e-5 * std::max(1.0, std::abs(fd)));
      }
      // The matrix gradient carries the same directional derivatives.
      const Eigen::MatrixXcd gm = gradient(obj, rho);
      for (int m = 0; m < n; ++m) {
        CHECK(trace_product_real(obj.basis.gammas[m], gm) / obj.basis.eta ==
              doctest::Approx(g[m]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("objective is convex along random segments") {
  std::mt19937_64 rng(29);
  const RandomChannelDevice dev(2, 2, 909);
  const Eigen::MatrixXcd x = random_hermitian(2, rng);
  const Type2Objective obj = channel_objective(dev, x);
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityMatrix a = random_density(2, rng);
    const DensityMatrix b = random_density(2, rng);
    const double lam = unif(rng);
    const DensityMatrix mid(lam * a.mat() + (1.0 - lam) * b.mat());
    CHECK(evaluate(obj, mid) <=
          lam * evaluate(obj, a) + (1.0 - lam) * evaluate(obj, b) + 1e-10);
  }
}

TEST_CASE("descent on an overwriting channel reaches the closed form") {
  std::mt19937_64 rng(31);
  for (int d : {2, 3}) {
    const Eigen::MatrixXcd x = 2.0 * random_hermitian(d, rng);
    const DensityMatrix target = random_density(d, rng);
    const ExactOverwriteDevice dev(target, x, Label::custom("x"));
    const Type2Objective obj = channel_objective(dev, x);
    const OverwritingMinimizer omega =
        overwriting_minimizer(obj.op, obj.scale);

    const DensityMatrix start(Eigen::MatrixXcd::Identity(d, d) / d);
    const DescentTrace trace = frank_wolfe_min(obj, start);
    CHECK(trace.converged);
    CHECK(trace_distance(trace.final_state, omega.state) < 1e-3);
    const double fmin = omega.min_value(von_neumann_entropy(target));
    CHECK(std::abs(trace.iterates.back().f - fmin) < 1e-6);

    // Objective values never increase along the trace.
    for (std::size_t k = 1; k < trace.iterates.size(); ++k) {
      CHECK(trace.iterates[k].f <= trace.iterates[k - 1].f + 1e-12);
    }
    // No state beats the closed-form value.
    for (int trial = 0; trial < 200; ++trial) {
      CHECK(evaluate(obj, random_density(d, rng)) > fmin - 1e-9);
    }
  }
}

TEST_CASE("overwriting minimizer matches the qubit tanh closed form") {
  std::mt19937_64 rng(37);
  const OperatorBasis basis = gellmann_basis(2);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v[i] = gauss(rng);
    Eigen::Matrix2cd sx, sy, sz;
    sx << 0, 1, 1, 0;
    sy << 0, std::complex<double>(0, -1), std::complex<double>(0, 1), 0;
    sz << 1, 0, 0, -1;
    const Eigen::Matrix2cd x = gauss(rng) * Eigen::Matrix2cd::Identity() +
                               v[0] * sx + v[1] * sy + v[2] * sz;
    const OverwritingMinimizer omega =
        overwriting_minimizer(make_operator(Label::custom("x"), x, basis));
    CHECK(trace_distance(omega.state.mat(), qubit_gibbs_like(v)) < 1e-10);

    // ln tr e^{-X} computed from the eigenvalues directly.
    const auto eig = eigh(x);
    const double lz = std::log(std::exp(-eig.eigenvalues[0]) +
                               std::exp(-eig.eigenvalues[1]));
    CHECK(omega.log_partition == doctest::Approx(lz).epsilon(1e-12));
  }
}

TEST_CASE("relative entropy identity holds against the closed-form reference") {
  std::mt19937_64 rng(41);
  const int d = 3;
  const Eigen::MatrixXcd x = random_hermitian(d, rng);
  const DensityMatrix target = random_density(d, rng);
  const ExactOverwriteDevice dev(target, x, Label::custom("x"));
  const Type2Objective obj = channel_objective(dev, x, 2.5);
  const OverwritingMinimizer omega = overwriting_minimizer(obj.op, obj.scale);

  for (int trial = 0; trial < 20; ++trial) {
    const DensityMatrix rho = random_density(d, rng);
    CHECK(mismatch_check(obj, rho, omega.state, target, target) < 1e-8);
  }
  // A generic reference state breaks the identity.
  const DensityMatrix alpha = random_density(d, rng);
  CHECK(mismatch_check(obj, random_density(d, rng), alpha, target, target) >
        1e-3);
}

TEST_CASE("is_overwriting distinguishes channel types") {
  std::mt19937_64 rng(43);
  const OperatorBasis basis = gellmann_basis(2);

  const ExactOverwriteDevice over(random_density(2, rng),
                                  random_hermitian(2, rng));
  TestEnsemble ens_over = make_ensemble(basis, default_inputs(basis));
  measure_ensemble(over, ens_over);
  CHECK(is_overwriting(ens_over));

  const RandomChannelDevice generic(2, 2, 77);
  TestEnsemble ens_gen = make_ensemble(basis, default_inputs(basis));
  measure_ensemble(generic, ens_gen);
  CHECK_FALSE(is_overwriting(ens_gen));
}

TEST_CASE("ascent finds the top eigenstate on an overwriting channel") {
  std::mt19937_64 rng(47);
  const int d = 3;
  const Eigen::MatrixXcd x = random_hermitian(d, rng);
  const DensityMatrix target = random_density(d, rng);
  const ExactOverwriteDevice dev(target, x, Label::custom("x"));
  const Type2Objective obj = channel_objective(dev, x);

  const DescentTrace trace = frank_wolfe_max(obj);
  const auto eig = eigh(x);
  const Eigen::VectorXcd top = eig.eigenvectors.col(d - 1);
  const Eigen::MatrixXcd proj = top * top.adjoint();
  CHECK(trace_distance(trace.final_state.mat(), proj) < 1e-6);
  const double fmax =
      eig.eigenvalues[d - 1] + von_neumann_entropy(target);
  CHECK(trace.iterates.back().f == doctest::Approx(fmax).epsilon(1e-8));
}

TEST_CASE("line search agrees with the open-loop schedule") {
  std::mt19937_64 rng(53);
  const int d = 2;
  const Eigen::MatrixXcd x = random_hermitian(d, rng);
  const ExactOverwriteDevice dev(random_density(d, rng), x,
                                 Label::custom("x"));
  const Type2Objective obj = channel_objective(dev, x);
  const DensityMatrix start = random_density(d, rng);

  FrankWolfeOptions with_ls;
  with_ls.line_search = true;
  const DescentTrace a = frank_wolfe_min(obj, start);
  const DescentTrace b = frank_wolfe_min(obj, start, with_ls);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(std::abs(a.iterates.back().f - b.iterates.back().f) < 1e-6);
}

TEST_CASE("two descents from different seeds agree in value") {
  std::mt19937_64 rng(59);
  const RandomChannelDevice dev(2, 2, 811);
  const Eigen::MatrixXcd x = random_hermitian(2, rng);
  const Type2Objective obj = channel_objective(dev, x);

  const DescentTrace a = frank_wolfe_min(obj, random_density(2, rng));
  const DescentTrace b = frank_wolfe_min(obj, random_density(2, rng));
  CHECK(std::abs(a.iterates.back().f - b.iterates.back().f) < 1e-5);
  // Neither run should report a large outstanding gap.
  CHECK(std::abs(a.iterates.back().gap) < 1e-6);
  CHECK(std::abs(b.iterates.back().gap) < 1e-6);
}

TEST_CASE("descent restricted to a classical subspace stays classical") {
  std::mt19937_64 rng(61);
  const int d = 3;
  std::vector<Eigen::MatrixXcd> projs;
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(d, d);
    p(i, i) = 1.0;
    projs.push_back(p);
  }
  const OperatorBasis basis = restricted_basis(projs);

  Eigen::VectorXd diag(d);
  diag << 0.8, -0.4, 1.3;
  const Eigen::MatrixXcd x = diag.asDiagonal().toDenseMatrix().cast<std::complex<double>>();
  Eigen::VectorXd tp(d);
  tp << 0.5, 0.3, 0.2;
  const DensityMatrix target(
      tp.asDiagonal().toDenseMatrix().cast<std::complex<double>>());
  const ExactOverwriteDevice dev(target, x, Label::custom("x"));

  TestEnsemble ens = make_ensemble(basis, default_inputs(basis));
  measure_ensemble(dev, ens);
  const Type2Objective obj =
      make_objective(ens, make_operator(Label::custom("x"), x, basis));

  const DensityMatrix start(Eigen::MatrixXcd::Identity(d, d) / d);
  const DescentTrace trace = frank_wolfe_min(obj, start);
  CHECK(trace.converged);
  // Iterates never leave the diagonal subspace.
  Eigen::MatrixXcd off = trace.final_state.mat();
  off.diagonal().setZero();
  CHECK(off.norm() < 1e-12);

  // The diagonal problem has the same closed form.
  const Eigen::VectorXd w = (-diag.array()).exp();
  const Eigen::VectorXd omega = w / w.sum();
  CHECK((trace.final_state.mat().diagonal().real() - omega).norm() < 1e-3);
}
