#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "thermops/doublewell.hpp"
#include "thermops/linalg.hpp"
#include "thermops/types.hpp"

using namespace thermops;

namespace {

// Cheap grid for spectral unit tests; the default 1024-point grid is used by
// the long-run checks only.
DoubleWellConfig small_config() {
  DoubleWellConfig cfg;
  cfg.n_points = 512;
  cfg.n_keep = 12;
  cfg.subspace_dim = 6;
  return cfg;
}

}  // namespace

TEST_CASE("protocol shape hits the quarter-cycle corner values") {
  const DoubleWellConfig cfg;
  const double tau = cfg.duration;
  const auto corner = [&](double t, double g, double f) {
    const auto [gv, fv] = protocol_shape(t, cfg);
    CHECK(gv == doctest::Approx(g).epsilon(1e-12));
    CHECK(fv == doctest::Approx(f).epsilon(1e-12));
  };
  corner(0.0, 1.0, 0.0);          // resting double well
  corner(0.25 * tau, 1.0, 1.0);   // tilt fully on
  corner(0.50 * tau, 0.0, 1.0);   // barrier removed
  corner(0.75 * tau, 0.0, 0.0);   // symmetric single well
  corner(tau, 1.0, 0.0);          // cycle closes

  // Continuity across the branch junctions.
  for (double frac : {0.25, 0.5, 0.75}) {
    const double t = frac * tau;
    const double d = 1e-9 * tau;
    const auto [gl, fl] = protocol_shape(t - d, cfg);
    const auto [gr, fr] = protocol_shape(t + d, cfg);
    CHECK(std::abs(gl - gr) < 1e-7);
    CHECK(std::abs(fl - fr) < 1e-7);
  }
  // Times are clamped to the cycle.
  const auto [g_past, f_past] = protocol_shape(2.0 * tau, cfg);
  CHECK(g_past == doctest::Approx(1.0));
  CHECK(f_past == doctest::Approx(0.0));
}

TEST_CASE("resting potential has depth -h0 at the well minima") {
  const DoubleWellConfig cfg;
  const double xm = 0.5 * cfg.separation;
  CHECK(potential(0.0, xm, cfg) == doctest::Approx(-cfg.barrier).epsilon(1e-14));
  CHECK(potential(0.0, -xm, cfg) ==
        doctest::Approx(-cfg.barrier).epsilon(1e-14));
  CHECK(potential(0.0, 0.0, cfg) == 0.0);
  // Symmetric at rest, tilted mid-protocol.
  for (double x : {0.3, 1.1, 2.7}) {
    CHECK(potential(0.0, x, cfg) ==
          doctest::Approx(potential(0.0, -x, cfg)).epsilon(1e-13));
    CHECK(potential(0.5 * cfg.duration, x, cfg) <
          potential(0.5 * cfg.duration, -x, cfg));
  }
}

TEST_CASE("grid points span the box uniformly") {
  const DoubleWellConfig cfg = small_config();
  const Eigen::VectorXd xs = grid_points(cfg);
  REQUIRE(xs.size() == cfg.n_points);
  CHECK(xs[0] == doctest::Approx(cfg.x_min));
  CHECK(xs[cfg.n_points - 1] == doctest::Approx(cfg.x_max));
  const double dx = xs[1] - xs[0];
  for (int i = 2; i < cfg.n_points; ++i) {
    CHECK(xs[i] - xs[i - 1] == doctest::Approx(dx).epsilon(1e-12));
  }
}

TEST_CASE("banded solver reproduces harmonic oscillator levels") {
  const int n = 1024;
  const double omega = 3.0;
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(n, -4.5, 4.5);
  const Eigen::VectorXd v =
      std::numbers::pi * omega * omega * xs.array().square();
  const InstantSpectrum spec = solve_potential(v, -4.5, 4.5, 12);
  for (int k = 0; k < 12; ++k) {
    const double expected = omega * (k + 0.5);
    CHECK(std::abs(spec.energies[k] - expected) < 1e-6 * expected);
  }
  // Grid orthonormality of the eigenvectors.
  const Eigen::MatrixXd overlap = spec.vectors.transpose() * spec.vectors;
  CHECK((overlap - Eigen::MatrixXd::Identity(12, 12)).norm() < 1e-10);
}

TEST_CASE("states crowded by the box walls are rejected") {
  const int n = 512;
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(n, -4.5, 4.5);
  const Eigen::VectorXd v =
      std::numbers::pi * 0.04 * xs.array().square();  // weak confinement
  CHECK_THROWS_AS(solve_potential(v, -4.5, 4.5, 40), BoundaryLeakageError);
}

TEST_CASE("resting spectrum shows tunneling doublets and parity selection") {
  const DoubleWellConfig cfg = small_config();
  const InstantSpectrum spec = spectrum(0.0, cfg);

  for (int k = 1; k < cfg.n_keep; ++k) {
    CHECK(spec.energies[k] >= spec.energies[k - 1]);
  }
  // Bound levels sit between the well bottom and the barrier top.
  CHECK(spec.energies[0] > -cfg.barrier);
  CHECK(spec.energies[0] < 0.0);
  // The ground doublet is split by tunneling only.
  CHECK(spec.energies[1] - spec.energies[0] <
        0.01 * (spec.energies[2] - spec.energies[0]));

  // Parity: diagonal dipole elements vanish up to the eigensolver mixing of
  // near-degenerate doublet partners; the doublet itself is strongly coupled.
  for (int k = 0; k < cfg.n_keep; ++k) {
    CHECK(std::abs(spec.dipole(k, k)) < 1e-4);
  }
  CHECK(std::abs(spec.dipole(0, 1)) > 1.0);
  CHECK((spec.dipole - spec.dipole.transpose()).norm() < 1e-12);
}

TEST_CASE("transition rates obey detailed balance") {
  const DoubleWellConfig cfg = small_config();
  const InstantSpectrum spec = spectrum(0.3 * cfg.duration, cfg);
  const Eigen::MatrixXd r = rates(spec, cfg);

  for (int j = 0; j < cfg.n_keep; ++j) {
    CHECK(r(j, j) == 0.0);
    for (int k = 0; k < cfg.n_keep; ++k) {
      CHECK(r(j, k) >= 0.0);
      if (j == k || r(j, k) <= 0.0 || r(k, j) <= 0.0) continue;
      const double w = spec.energies[j] - spec.energies[k];
      CHECK(r(j, k) / r(k, j) == doctest::Approx(std::exp(w)).epsilon(1e-10));
    }
  }
}

TEST_CASE("rates vanish inside degenerate pairs") {
  DoubleWellConfig cfg;
  InstantSpectrum spec;
  spec.energies = Eigen::Vector3d(0.0, 0.0, 1.0);
  spec.dipole = Eigen::Matrix3d::Ones();
  const Eigen::MatrixXd r = rates(spec, cfg);
  CHECK(r(0, 1) == 0.0);
  CHECK(r(1, 0) == 0.0);
  CHECK(r(2, 0) > 0.0);
  CHECK(r(2, 0) / r(0, 2) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("dissipative step with zero rates is a pure phase rotation") {
  Eigen::MatrixXcd sigma(2, 2);
  sigma << 0.7, std::complex<double>(0.1, 0.05),
      std::complex<double>(0.1, -0.05), 0.3;
  const Eigen::VectorXd e = Eigen::Vector2d(0.25, 1.75);
  const Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXcd s = sigma;
  const double dt = 0.8;
  dissipative_step(s, e, r, dt);
  CHECK(s(0, 0).real() == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(s(1, 1).real() == doctest::Approx(0.3).epsilon(1e-15));
  const std::complex<double> phase =
      std::exp(std::complex<double>(0.0, -(e[0] - e[1]) * dt));
  CHECK(std::abs(s(0, 1) - sigma(0, 1) * phase) < 1e-15);
}

TEST_CASE("dissipative step matches the two-level rate equation") {
  // First-order splitting against the exact classical propagator.
  Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(2, 2);
  sigma(0, 0) = 0.85;
  sigma(1, 1) = 0.15;
  const Eigen::VectorXd e = Eigen::Vector2d(0.0, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2, 2);
  r(0, 1) = 2.0;  // 0 -> 1
  r(1, 0) = 5.0;  // 1 -> 0
  const double dt = 5e-4;

  // Closed form: relaxation toward r10/(r01+r10) at rate r01+r10.
  const double total = r(0, 1) + r(1, 0);
  const double p_ss = r(1, 0) / total;
  Eigen::Vector2d exact;
  exact[0] = p_ss + (0.85 - p_ss) * std::exp(-total * dt);
  exact[1] = 1.0 - exact[0];

  Eigen::MatrixXcd s = sigma;
  dissipative_step(s, e, r, dt);
  CHECK(std::abs(s.trace().real() - 1.0) < 1e-15);
  const double rdt = 5.0 * dt;
  CHECK(std::abs(s(0, 0).real() - exact[0]) < 2.0 * rdt * rdt);
  CHECK(std::abs(s(1, 1).real() - exact[1]) < 2.0 * rdt * rdt);
}

TEST_CASE("work increment damps energetic coherences") {
  const Eigen::VectorXd e = Eigen::Vector2d(0.0, 2.0 * std::numbers::pi);
  const double dt = 1.0;  // w dt = 2 pi: coherence averages out exactly
  Eigen::MatrixXcd sigma(2, 2);
  sigma << 0.5, std::complex<double>(0.2, 0.1),
      std::complex<double>(0.2, -0.1), 0.5;
  Eigen::MatrixXcd dh = Eigen::MatrixXcd::Zero(2, 2);
  dh(0, 1) = std::complex<double>(0.3, -0.4);
  dh(1, 0) = std::conj(dh(0, 1));

  CHECK(std::abs(work_increment(sigma, e, dh, dt)) < 1e-15);
  CHECK(std::abs(work_increment(sigma, e, dh, dt, true)) > 0.01);

  // Diagonal states feel no damping at all.
  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(2, 2);
  diag(0, 0) = 0.6;
  diag(1, 1) = 0.4;
  Eigen::MatrixXcd dh_full(2, 2);
  dh_full << 1.2, std::complex<double>(0.1, 0.2),
      std::complex<double>(0.1, -0.2), -0.7;
  const double expected = 0.6 * 1.2 + 0.4 * -0.7;
  CHECK(work_increment(diag, e, dh_full, dt) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(work_increment(diag, e, dh_full, dt, true) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("projection engine tracks the direct solver") {
  CHECK(validate_projection(small_config()) < 1e-9);
}

TEST_CASE("coarse protocol run conserves probability and the first law") {
  DoubleWellConfig cfg;
  cfg.dt = 1e6;  // coarse but within the stepper gate
  cfg.snapshot_times = {0.0, 0.5 * cfg.duration, cfg.duration};

  const int ns = cfg.subspace_dim;
  Eigen::MatrixXcd ground = Eigen::MatrixXcd::Zero(ns, ns);
  ground(0, 0) = 1.0;
  Eigen::MatrixXcd excited = Eigen::MatrixXcd::Zero(ns, ns);
  excited(1, 1) = 1.0;
  const Eigen::MatrixXcd mix = 0.5 * ground + 0.5 * excited;
  const std::vector<DensityMatrix> inputs = {
      DensityMatrix(ground), DensityMatrix(excited), DensityMatrix(mix)};

  const std::vector<DoubleWellRun> runs = run_batch(inputs, cfg);
  REQUIRE(runs.size() == 3);

  const InstantSpectrum s0 = spectrum(0.0, cfg);
  const InstantSpectrum s1 = spectrum(cfg.duration, cfg);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const DoubleWellRun& run = runs[i];
    const Trajectory& traj = run.trajectory;
    REQUIRE(traj.times.size() == cfg.steps() + 1);
    CHECK(traj.times[cfg.steps()] == doctest::Approx(cfg.duration));
    CHECK(traj.work[0] == 0.0);
    CHECK(traj.scalar(Label::entropy_flow()) ==
          doctest::Approx(-traj.scalar(Label::heat())));

    CHECK(run.leak_total < 1e-6);
    CHECK((run.final_reduced - run.final_reduced.adjoint()).norm() < 1e-12);
    CHECK(std::abs(run.final_reduced.trace().real() -
                   (1.0 - run.leak_total)) < 1e-9);
    CHECK(eigh(run.final_reduced).eigenvalues.minCoeff() > -1e-9);

    // First law: accumulated work plus heat equals the energy change
    // evaluated in the respective instantaneous eigenbases.
    double e_init = 0.0;
    for (int j = 0; j < ns; ++j) {
      e_init += s0.energies[j] * inputs[i].mat()(j, j).real();
    }
    double e_fin = 0.0;
    for (int j = 0; j < cfg.n_keep; ++j) {
      e_fin += s1.energies[j] * run.final_reduced(j, j).real();
    }
    CHECK(std::abs(traj.scalar(Label::work()) + traj.scalar(Label::heat()) -
                   (e_fin - e_init)) < 1e-8);
  }

  // Everything downstream of the initial state is linear.
  CHECK(runs[2].trajectory.scalar(Label::work()) ==
        doctest::Approx(0.5 * runs[0].trajectory.scalar(Label::work()) +
                        0.5 * runs[1].trajectory.scalar(Label::work()))
            .epsilon(1e-10));
  CHECK(runs[2].trajectory.scalar(Label::heat()) ==
        doctest::Approx(0.5 * runs[0].trajectory.scalar(Label::heat()) +
                        0.5 * runs[1].trajectory.scalar(Label::heat()))
            .epsilon(1e-10));

  // Spatial snapshots: normalized, essentially nonnegative, and symmetric for
  // the resting ground state.
  const DoubleWellRun& g = runs[0];
  REQUIRE(g.densities.size() == 3);
  const double dx = (cfg.x_max - cfg.x_min) / (cfg.n_points - 1);
  for (const auto& [t, p] : g.densities) {
    REQUIRE(p.size() == cfg.n_points);
    CHECK(p.minCoeff() > -1e-9);
    CHECK(std::abs(p.sum() * dx - 1.0) < 1e-4);
  }
  const Eigen::VectorXd& p0 = g.densities.front().second;
  double asym = 0.0;
  for (int idx = 0; idx < cfg.n_points; ++idx) {
    asym = std::max(asym, std::abs(p0[idx] - p0[cfg.n_points - 1 - idx]));
  }
  CHECK(asym < 1e-5);
}

TEST_CASE("double-well configuration gates") {
  DoubleWellConfig cfg;
  cfg.dt = 1e7;  // (gamma dt)^2 above the stepper gate
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(8, 8);
  rho(0, 0) = 1.0;
  CHECK_THROWS_AS(run_protocol(DensityMatrix(rho), cfg), StepperFailureError);

  cfg = {};
  cfg.subspace_dim = 30;  // exceeds n_keep
  CHECK_THROWS_AS(run_protocol(DensityMatrix(rho), cfg),
                  InvalidDimensionError);

  cfg = {};
  Eigen::MatrixXcd wrong = Eigen::MatrixXcd::Identity(4, 4) / 4.0;
  CHECK_THROWS_AS(run_protocol(DensityMatrix(wrong), cfg),
                  DimensionMismatchError);

  CHECK(DoubleWellConfig{}.steps() == 40000);
  CHECK(DoubleWellConfig::default_gamma() ==
        doctest::Approx(9.2787e-9).epsilon(1e-4));
}
