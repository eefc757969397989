#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "thermops/devices.hpp"
#include "thermops/extremal.hpp"
#include "thermops/tomography.hpp"
#include "thermops/types.hpp"

namespace thermops {

// Cyclic double-well work-extraction protocol. Units throughout: energies in
// k_BT, lengths in lambda_th (thermal de Broglie wavelength), times in
// beta*hbar; the blackbody dissipation prefactor gamma is per beta*hbar.
struct DoubleWellConfig {
  double barrier = 8.0;      // h0
  double separation = 3.0;   // w0
  double max_tilt = 8.0 / (3.0 * std::sqrt(2.0 * std::numbers::pi));
  double duration = 4.0e9;   // tau
  double dt = 1.0e5;
  int n_keep = 20;
  double x_min = -4.5;
  double x_max = 4.5;
  int n_points = 1024;
  double gamma = default_gamma();
  int subspace_dim = 8;      // low-energy input subspace
  bool use_projection = true;
  bool naive_work = false;   // drop the coherence damping in the work estimator
  std::vector<double> snapshot_times;  // spatial-density capture times

  // 8 pi alpha (k_BT / m_e c^2) k_BT/hbar in protocol units, electron at 300 K.
  static double default_gamma();
  int steps() const { return static_cast<int>(std::llround(duration / dt)); }
};

// (g_t, f_t) with f normalized to [0, 1]; multiply by max_tilt for the
// potential. Piecewise sin^2/cos^2 ramps over four quarters, cyclic endpoints.
std::pair<double, double> protocol_shape(double t, const DoubleWellConfig& cfg);

// V_t(x) = 16 h0 (x/w0)^4 - 8 h0 (x/w0)^2 g_t - h0 (x/w0) f_t f_max.
double potential(double t, double x, const DoubleWellConfig& cfg);

Eigen::VectorXd grid_points(const DoubleWellConfig& cfg);

struct InstantSpectrum {
  Eigen::VectorXd energies;  // lowest n_keep, ascending
  Eigen::MatrixXd vectors;   // n_points x n_keep, orthonormal on the grid
  Eigen::MatrixXd dipole;    // <m| x/lambda_th |n>
};

// Banded finite-difference solve of the instantaneous Hamiltonian for an
// arbitrary potential sampled on the uniform grid (test hook).
InstantSpectrum solve_potential(const Eigen::VectorXd& v_grid, double x_min,
                                double x_max, int n_keep);

InstantSpectrum spectrum(double t, const DoubleWellConfig& cfg);

// r(m -> n) = gamma |w|^3 |dipole_mn|^2 * N(|w|) (absorption) or (N+1)
// (emission); zero diagonal, zero within degenerate pairs.
Eigen::MatrixXd rates(const InstantSpectrum& spec, const DoubleWellConfig& cfg);

// One dissipative step in the instantaneous eigenbasis: exact phases, then
// the first-order population transfer. Trace-preserving by construction.
void dissipative_step(Eigen::MatrixXcd& sigma, const Eigen::VectorXd& energies,
                      const Eigen::MatrixXd& r, double dt);

// tr(rho_bar dH) with energetic coherences damped by sinc(w dt/2) e^{i w dt/2};
// naive = true uses rho as-is (comparison mode).
double work_increment(const Eigen::MatrixXcd& sigma,
                      const Eigen::VectorXd& energies,
                      const Eigen::MatrixXcd& dh, double dt, bool naive = false);

struct DoubleWellRun {
  Trajectory trajectory;  // per-step work/heat; stored state: the input
  // Reduced state over the retained levels in the final eigenbasis; its trace
  // is 1 minus the accumulated truncation leakage.
  Eigen::MatrixXcd final_reduced;
  double leak_total = 0.0;
  std::vector<std::pair<double, Eigen::VectorXd>> densities;  // (t, p(x))
};

// Max |energy deviation| of the projection engine against the direct solver
// at sampled protocol times.
double validate_projection(const DoubleWellConfig& cfg);

// Evolves inputs supported on the lowest subspace_dim t = 0 eigenstates.
// All inputs share the per-step spectra (one frame).
std::vector<DoubleWellRun> run_batch(const std::vector<DensityMatrix>& inputs,
                                     const DoubleWellConfig& cfg);
DoubleWellRun run_protocol(const DensityMatrix& rho0,
                           const DoubleWellConfig& cfg);

// The full work study: default tomography ensemble on the low-energy
// subspace, expected-work operator, and held-out probes (the subspace energy
// eigenstates plus the extremal eigenvectors of the reconstructed operator)
// re-simulated for consistency.
struct DoubleWellStudy {
  OperatorBasis basis;
  TestEnsemble ensemble;
  ThermoOperator work_op;
  std::vector<DensityMatrix> probe_states;
  std::vector<double> probe_predicted;
  std::vector<double> probe_simulated;
  std::vector<DoubleWellRun> probe_runs;
};

DoubleWellStudy run_default_study(const DoubleWellConfig& cfg);

}  // namespace thermops
