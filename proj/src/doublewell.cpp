#include "thermops/doublewell.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

// 8th-order central finite-difference Laplacian stencil, diagonal first.
constexpr double kStencil[5] = {205.0 / 72.0, -8.0 / 5.0, 1.0 / 5.0,
                                -8.0 / 315.0, 1.0 / 560.0};

double kinetic_prefactor(double dx) {
  // p^2/2m in (k_BT, lambda_th) units: hbar^2/(2m dx^2) = 1/(4 pi dx^2).
  return 1.0 / (4.0 * std::numbers::pi * dx * dx);
}

Eigen::MatrixXd rate_matrix(const Eigen::VectorXd& energies,
                            const Eigen::MatrixXd& dipole, double gamma) {
  const int n = static_cast<int>(energies.size());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const double om = energies[k] - energies[j];
      const double a = std::abs(om);
      if (j == k || a < 1e-12) continue;
      const double nb = 1.0 / std::expm1(a);
      const double bose = om > 0 ? nb : nb + 1.0;
      r(j, k) = gamma * a * a * a * dipole(j, k) * dipole(j, k) * bose;
    }
  }
  return r;
}

// Supplies per-time truncated spectra in a fixed coordinate space so that
// consecutive frames compare by plain overlap matrices.
class SpectrumProvider {
 public:
  virtual ~SpectrumProvider() = default;
  // Lowest n_keep levels; modes are columns in the provider's coordinates.
  virtual void eval(double t, Eigen::VectorXd* energies,
                    Eigen::MatrixXd* modes) const = 0;
  // modes^T diag((x/w0)^p) modes.
  virtual Eigen::MatrixXd u_matrix(const Eigen::MatrixXd& modes,
                                   int power) const = 0;
  // Grid wavefunctions for spatial densities.
  virtual Eigen::MatrixXd grid_modes(const Eigen::MatrixXd& modes) const = 0;
};

class DirectProvider : public SpectrumProvider {
 public:
  explicit DirectProvider(const DoubleWellConfig& cfg)
      : cfg_(cfg), xs_(grid_points(cfg)) {
    u_ = xs_ / cfg.separation;
  }

  void eval(double t, Eigen::VectorXd* energies,
            Eigen::MatrixXd* modes) const override {
    Eigen::VectorXd v(xs_.size());
    for (int i = 0; i < xs_.size(); ++i) v[i] = potential(t, xs_[i], cfg_);
    const InstantSpectrum s =
        solve_potential(v, cfg_.x_min, cfg_.x_max, cfg_.n_keep);
    *energies = s.energies;
    *modes = s.vectors;
  }

  Eigen::MatrixXd u_matrix(const Eigen::MatrixXd& modes,
                           int power) const override {
    Eigen::ArrayXd w = u_.array();
    if (power == 2) w = w * w;
    return modes.transpose() * (w.matrix().asDiagonal() * modes);
  }

  Eigen::MatrixXd grid_modes(const Eigen::MatrixXd& modes) const override {
    return modes;
  }

 private:
  DoubleWellConfig cfg_;
  Eigen::VectorXd xs_;
  Eigen::VectorXd u_;
};

// Reduced solver: the union of instantaneous eigenspaces sampled across the
// protocol is low-dimensional, so one SVD-compressed frame supports every
// per-step diagonalization at a fraction of the grid cost.
class ProjectedProvider : public SpectrumProvider {
 public:
  explicit ProjectedProvider(const DoubleWellConfig& cfg) : cfg_(cfg) {
    const Eigen::VectorXd xs = grid_points(cfg);
    const int n = cfg.n_points;
    const int anchor_levels = std::max(46, 2 * cfg.n_keep + 6);
    const int anchors = 17;
    Eigen::MatrixXd stack(n, anchors * anchor_levels);
    for (int a = 0; a < anchors; ++a) {
      const double t = cfg.duration * a / (anchors - 1.0);
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v[i] = potential(t, xs[i], cfg);
      const InstantSpectrum s =
          solve_potential(v, cfg.x_min, cfg.x_max, anchor_levels);
      stack.block(0, a * anchor_levels, n, anchor_levels) = s.vectors;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stack, Eigen::ComputeThinU);
    int m = 0;
    while (m < svd.singularValues().size() && svd.singularValues()[m] > 1e-8) {
      ++m;
    }
    if (m < cfg.n_keep) {
      throw StepperFailureError("projection frame smaller than n_keep");
    }
    w_ = svd.matrixU().leftCols(m);

    const double dx = xs[1] - xs[0];
    const double kin = kinetic_prefactor(dx);
    // K W with the 8th-order stencil applied columnwise.
    Eigen::MatrixXd kw = kStencil[0] * w_;
    for (int o = 1; o <= 4; ++o) {
      kw.bottomRows(n - o) += kStencil[o] * w_.topRows(n - o);
      kw.topRows(n - o) += kStencil[o] * w_.bottomRows(n - o);
    }
    kw *= kin;
    const Eigen::ArrayXd u = xs.array() / cfg.separation;
    kp_ = w_.transpose() * kw;
    u1_ = w_.transpose() * (u.matrix().asDiagonal() * w_);
    u2_ = w_.transpose() * ((u * u).matrix().asDiagonal() * w_);
    const Eigen::ArrayXd u4 = (u * u) * (u * u);
    base_ = kp_ + 16.0 * cfg.barrier * w_.transpose() *
                      (u4.matrix().asDiagonal() * w_);
  }

  void eval(double t, Eigen::VectorXd* energies,
            Eigen::MatrixXd* modes) const override {
    const auto [g, f] = protocol_shape(t, cfg_);
    Eigen::MatrixXd h = base_ - 8.0 * cfg_.barrier * g * u2_ -
                        cfg_.barrier * f * cfg_.max_tilt * u1_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    *energies = solver.eigenvalues().head(cfg_.n_keep);
    *modes = solver.eigenvectors().leftCols(cfg_.n_keep);
  }

  Eigen::MatrixXd u_matrix(const Eigen::MatrixXd& modes,
                           int power) const override {
    const Eigen::MatrixXd& up = power == 2 ? u2_ : u1_;
    return modes.transpose() * (up * modes);
  }

  Eigen::MatrixXd grid_modes(const Eigen::MatrixXd& modes) const override {
    return w_ * modes;
  }

 private:
  DoubleWellConfig cfg_;
  Eigen::MatrixXd w_;
  Eigen::MatrixXd kp_, u1_, u2_, base_;
};

std::unique_ptr<SpectrumProvider> make_provider(const DoubleWellConfig& cfg) {
  if (cfg.use_projection) return std::make_unique<ProjectedProvider>(cfg);
  return std::make_unique<DirectProvider>(cfg);
}

// Flip columns of next so each overlaps its predecessor positively.
void align_signs(Eigen::MatrixXd& next, const Eigen::MatrixXd& prev) {
  for (int m = 0; m < next.cols(); ++m) {
    if (next.col(m).dot(prev.col(m)) < 0.0) next.col(m) = -next.col(m);
  }
}

double diagonal_energy(const Eigen::MatrixXcd& sigma,
                       const Eigen::VectorXd& energies) {
  double e = 0.0;
  for (int j = 0; j < energies.size(); ++j) {
    e += energies[j] * sigma(j, j).real();
  }
  return e;
}

void check_config(const DoubleWellConfig& cfg) {
  if (cfg.n_points < 16 || cfg.n_keep < 2 || cfg.subspace_dim < 1 ||
      cfg.subspace_dim > cfg.n_keep || cfg.x_max <= cfg.x_min ||
      cfg.duration <= 0.0 || cfg.dt <= 0.0 || cfg.separation <= 0.0) {
    throw InvalidDimensionError("invalid double-well configuration");
  }
  const double gdt = cfg.gamma * cfg.dt;
  if (gdt * gdt >= 1e-4) {
    throw StepperFailureError(
        "dissipative step too coarse: (gamma dt)^2 = " +
        std::to_string(gdt * gdt) + " >= 1e-4");
  }
  if (cfg.steps() < 1) {
    throw StepperFailureError("protocol shorter than one step");
  }
}

}  // namespace

double DoubleWellConfig::default_gamma() {
  const double alpha = 7.2973525693e-3;        // fine-structure constant
  const double kbt = 1.380649e-23 * 300.0;     // J at 300 K
  const double me_c2 = 8.18710565e-14;         // electron rest energy, J
  return 8.0 * std::numbers::pi * alpha * (kbt / me_c2);
}

std::pair<double, double> protocol_shape(double t,
                                         const DoubleWellConfig& cfg) {
  const double s = std::clamp(t / cfg.duration, 0.0, 1.0);
  const double sn = std::sin(2.0 * std::numbers::pi * s);
  const double cs = std::cos(2.0 * std::numbers::pi * s);
  if (s < 0.25) return {1.0, sn * sn};
  if (s < 0.5) return {sn * sn, 1.0};
  if (s < 0.75) return {0.0, cs * cs};
  return {cs * cs, 0.0};
}

double potential(double t, double x, const DoubleWellConfig& cfg) {
  if (t < 0.0 || t > cfg.duration) {
    throw Error("time outside the protocol window [0, duration]");
  }
  const auto [g, f] = protocol_shape(t, cfg);
  const double u = x / cfg.separation;
  const double u2 = u * u;
  return 16.0 * cfg.barrier * u2 * u2 - 8.0 * cfg.barrier * u2 * g -
         cfg.barrier * u * f * cfg.max_tilt;
}

Eigen::VectorXd grid_points(const DoubleWellConfig& cfg) {
  return Eigen::VectorXd::LinSpaced(cfg.n_points, cfg.x_min, cfg.x_max);
}

InstantSpectrum solve_potential(const Eigen::VectorXd& v_grid, double x_min,
                                double x_max, int n_keep) {
  const int n = static_cast<int>(v_grid.size());
  if (n < 16 || n_keep < 1 || n_keep > n) {
    throw InvalidDimensionError("bad grid/levels for the banded eigensolve");
  }
  if (x_max <= x_min) throw InvalidDimensionError("empty grid interval");
  const double dx = (x_max - x_min) / (n - 1);
  const double kin = kinetic_prefactor(dx);

  // Lower banded column-major storage: ab[j*ldab + o] = H(j+o, j).
  constexpr int kd = 4;
  constexpr int ldab = kd + 1;
  std::vector<double> ab(static_cast<size_t>(ldab) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    ab[static_cast<size_t>(j) * ldab] = kin * kStencil[0] + v_grid[j];
  }
  for (int o = 1; o <= kd; ++o) {
    for (int j = 0; j + o < n; ++j) {
      ab[static_cast<size_t>(j) * ldab + o] = kin * kStencil[o];
    }
  }

  std::vector<double> q(static_cast<size_t>(n) * n);
  std::vector<double> w(n);
  std::vector<double> z(static_cast<size_t>(n) * n_keep);
  std::vector<lapack_int> ifail(n);
  lapack_int found = 0;
  const double abstol = 2.0 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dsbevx(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', n, kd, ab.data(), ldab, q.data(), n,
      0.0, 0.0, 1, n_keep, abstol, &found, w.data(), z.data(), n,
      ifail.data());
  if (info != 0 || found != n_keep) {
    throw Error("banded eigensolver failed (info " + std::to_string(info) +
                ")");
  }

  InstantSpectrum spec;
  spec.energies = Eigen::Map<Eigen::VectorXd>(w.data(), n_keep);
  spec.vectors = Eigen::Map<Eigen::MatrixXd>(z.data(), n, n_keep);
  for (int m = 0; m < n_keep; ++m) {
    const double edge = std::max(std::abs(spec.vectors(0, m)),
                                 std::abs(spec.vectors(n - 1, m)));
    if (edge >= 1e-8) {
      throw BoundaryLeakageError(
          "level " + std::to_string(m) + " reaches the grid edge (amplitude " +
          std::to_string(edge) + "); widen the grid or lower n_keep");
    }
  }
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(n, x_min, x_max);
  spec.dipole =
      spec.vectors.transpose() * (xs.asDiagonal() * spec.vectors);
  return spec;
}

InstantSpectrum spectrum(double t, const DoubleWellConfig& cfg) {
  if (t < 0.0 || t > cfg.duration) {
    throw Error("time outside the protocol window [0, duration]");
  }
  const Eigen::VectorXd xs = grid_points(cfg);
  Eigen::VectorXd v(xs.size());
  for (int i = 0; i < xs.size(); ++i) v[i] = potential(t, xs[i], cfg);
  return solve_potential(v, cfg.x_min, cfg.x_max, cfg.n_keep);
}

Eigen::MatrixXd rates(const InstantSpectrum& spec,
                      const DoubleWellConfig& cfg) {
  return rate_matrix(spec.energies, spec.dipole, cfg.gamma);
}

void dissipative_step(Eigen::MatrixXcd& sigma, const Eigen::VectorXd& energies,
                      const Eigen::MatrixXd& r, double dt) {
  const int n = static_cast<int>(energies.size());
  // Exact unitary phases in the eigenbasis.
  Eigen::VectorXcd ph(n);
  for (int j = 0; j < n; ++j) {
    ph[j] = std::exp(std::complex<double>(0.0, -energies[j] * dt));
  }
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      sigma(j, k) *= ph[j] * std::conj(ph[k]);
    }
  }
  // Population gain from the pre-decay diagonal keeps the step trace-exact.
  Eigen::VectorXd gain = Eigen::VectorXd::Zero(n);
  for (int dst = 0; dst < n; ++dst) {
    for (int src = 0; src < n; ++src) {
      gain[dst] += r(src, dst) * sigma(src, src).real();
    }
  }
  gain *= dt;
  const Eigen::VectorXd rout = r.rowwise().sum();
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      sigma(j, k) *= 1.0 - 0.5 * dt * (rout[j] + rout[k]);
    }
  }
  for (int j = 0; j < n; ++j) sigma(j, j) += gain[j];
}

double work_increment(const Eigen::MatrixXcd& sigma,
                      const Eigen::VectorXd& energies,
                      const Eigen::MatrixXcd& dh, double dt, bool naive) {
  const int n = static_cast<int>(energies.size());
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      std::complex<double> damp(1.0, 0.0);
      if (!naive) {
        const double arg = 0.5 * (energies[k] - energies[j]) * dt;
        const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
        damp = sinc * std::exp(std::complex<double>(0.0, arg));
      }
      sum += (sigma(j, k) * damp * dh(k, j)).real();
    }
  }
  return sum;
}

double validate_projection(const DoubleWellConfig& cfg) {
  const ProjectedProvider projected(cfg);
  const DirectProvider direct(cfg);
  double worst = 0.0;
  // Off-anchor interior times probe the frame where it interpolates.
  for (int i = 0; i <= 12; ++i) {
    const double t = cfg.duration * i / 12.0;
    Eigen::VectorXd ep, ed;
    Eigen::MatrixXd cp, cd;
    projected.eval(t, &ep, &cp);
    direct.eval(t, &ed, &cd);
    worst = std::max(worst, (ep - ed).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<DoubleWellRun> run_batch(const std::vector<DensityMatrix>& inputs,
                                     const DoubleWellConfig& cfg) {
  check_config(cfg);
  if (inputs.empty()) throw Error("no input states");
  for (const DensityMatrix& rho : inputs) {
    if (rho.dim() != cfg.subspace_dim) {
      throw DimensionMismatchError(
          "input dimension does not match the low-energy subspace");
    }
  }

  const auto provider = make_provider(cfg);
  const int nsteps = cfg.steps();
  const int nk = cfg.n_keep;
  const int ns = cfg.subspace_dim;
  const int b = static_cast<int>(inputs.size());
  const double dt = cfg.dt;
  const Eigen::VectorXd xs = grid_points(cfg);
  const double dx = xs[1] - xs[0];

  // Requested snapshot times, bucketed by the step index they precede.
  std::multimap<int, double> snaps;
  for (double t : cfg.snapshot_times) {
    const int k = static_cast<int>(
        std::clamp<long long>(std::llround(t / dt), 0, nsteps));
    snaps.emplace(k, t);
  }

  Eigen::VectorXd e0;
  Eigen::MatrixXd c0;
  provider->eval(0.0, &e0, &c0);

  std::vector<Eigen::MatrixXcd> sig(b, Eigen::MatrixXcd::Zero(nk, nk));
  for (int i = 0; i < b; ++i) {
    sig[i].topLeftCorner(ns, ns) = inputs[i].mat();
  }

  // Transport the t = 0 frame onto the first dynamics frame (left endpoints:
  // the same time, kept for structural uniformity).
  Eigen::VectorXd e;
  Eigen::MatrixXd c;
  provider->eval(0.0, &e, &c);
  align_signs(c, c0);
  {
    const Eigen::MatrixXcd o =
        (c.transpose() * c0).cast<std::complex<double>>();
    for (int i = 0; i < b; ++i) {
      sig[i] = (o * sig[i] * o.transpose()).eval();
    }
  }

  std::vector<Eigen::VectorXd> wcum(b, Eigen::VectorXd::Zero(nsteps + 1));
  std::vector<Eigen::VectorXd> qcum(b, Eigen::VectorXd::Zero(nsteps + 1));
  std::vector<double> leak(b, 0.0);
  std::vector<double> energy(b);
  std::vector<std::vector<std::pair<double, Eigen::VectorXd>>> dens(b);
  for (int i = 0; i < b; ++i) energy[i] = diagonal_energy(sig[i], e);

  const auto capture = [&](int k) {
    const auto range = snaps.equal_range(k);
    if (range.first == range.second) return;
    const Eigen::MatrixXcd phi =
        provider->grid_modes(c).cast<std::complex<double>>();
    for (auto it = range.first; it != range.second; ++it) {
      for (int i = 0; i < b; ++i) {
        const Eigen::MatrixXcd g = phi * sig[i];
        const Eigen::VectorXd p =
            ((g.array() * phi.array()).rowwise().sum().real() / dx).matrix();
        dens[i].emplace_back(it->second, p);
      }
    }
  };

  for (int k = 0; k < nsteps; ++k) {
    capture(k);
    const Eigen::MatrixXd m1 = provider->u_matrix(c, 1);
    const Eigen::MatrixXd m2 = provider->u_matrix(c, 2);
    const Eigen::MatrixXd dipole = cfg.separation * m1;
    const Eigen::MatrixXd r = rate_matrix(e, dipole, cfg.gamma);
    const auto [gc, fc] = protocol_shape(k * dt, cfg);
    const auto [gn, fn] = protocol_shape((k + 1) * dt, cfg);
    const Eigen::MatrixXcd dh =
        (-8.0 * cfg.barrier * (gn - gc) * m2 -
         cfg.barrier * (fn - fc) * cfg.max_tilt * m1)
            .cast<std::complex<double>>();

    for (int i = 0; i < b; ++i) {
      const double trace_before = sig[i].trace().real();
      wcum[i][k + 1] =
          wcum[i][k] + work_increment(sig[i], e, dh, dt, cfg.naive_work);
      dissipative_step(sig[i], e, r, dt);
      if (std::abs(sig[i].trace().real() - trace_before) > 1e-8) {
        throw StepperFailureError("trace drift in the dissipative step at t=" +
                                  std::to_string(k * dt));
      }
    }

    const double tn = k + 1 < nsteps ? (k + 1) * dt : cfg.duration;
    Eigen::VectorXd en;
    Eigen::MatrixXd cn;
    provider->eval(tn, &en, &cn);
    align_signs(cn, c);
    const Eigen::MatrixXcd o =
        (cn.transpose() * c).cast<std::complex<double>>();
    for (int i = 0; i < b; ++i) {
      const double trace_pre = sig[i].trace().real();
      sig[i] = (o * sig[i] * o.transpose()).eval();
      const double step_leak = trace_pre - sig[i].trace().real();
      if (std::abs(step_leak) > 1e-6) {
        throw BasisTrackingError(
            "eigenbasis overlap lost " + std::to_string(step_leak) +
            " of the trace at step " + std::to_string(k) +
            "; refine the grid or raise n_keep");
      }
      leak[i] += step_leak;
      const double energy_after = diagonal_energy(sig[i], en);
      qcum[i][k + 1] = qcum[i][k] + (energy_after - energy[i]) -
                       (wcum[i][k + 1] - wcum[i][k]);
      energy[i] = energy_after;
    }
    e = en;
    c = cn;
  }
  capture(nsteps);

  std::vector<DoubleWellRun> runs;
  runs.reserve(b);
  Eigen::VectorXd times(nsteps + 1);
  for (int k = 0; k <= nsteps; ++k) times[k] = k * dt;
  times[nsteps] = cfg.duration;
  for (int i = 0; i < b; ++i) {
    DoubleWellRun run;
    run.trajectory.times = times;
    run.trajectory.work = wcum[i];
    run.trajectory.heat = qcum[i];
    run.trajectory.entropy_flow = -qcum[i];
    run.trajectory.state_indices = {0};
    run.trajectory.states = {inputs[i]};
    run.trajectory.scalars[Label::work()] = wcum[i][nsteps];
    run.trajectory.scalars[Label::heat()] = qcum[i][nsteps];
    run.trajectory.scalars[Label::entropy_flow()] = -qcum[i][nsteps];
    run.final_reduced = sig[i];
    run.leak_total = leak[i];
    run.densities = std::move(dens[i]);
    runs.push_back(std::move(run));
  }
  return runs;
}

DoubleWellRun run_protocol(const DensityMatrix& rho0,
                           const DoubleWellConfig& cfg) {
  return run_batch({rho0}, cfg).front();
}

DoubleWellStudy run_default_study(const DoubleWellConfig& cfg) {
  DoubleWellStudy study;
  study.basis = gellmann_basis(cfg.subspace_dim);
  const std::vector<DensityMatrix> inputs = default_inputs(study.basis);
  study.ensemble = make_ensemble(study.basis, inputs);

  const std::vector<DoubleWellRun> runs = run_batch(inputs, cfg);
  std::vector<double>& work = study.ensemble.measurements[Label::work()];
  work.reserve(runs.size());
  for (const DoubleWellRun& run : runs) {
    work.push_back(run.trajectory.scalar(Label::work()));
  }
  study.work_op = reconstruct_operator(study.ensemble, Label::work());

  // Probes held out of the fit: the subspace energy eigenstates plus both
  // extremal eigenvectors of the reconstructed operator.
  for (int j = 0; j < cfg.subspace_dim; ++j) {
    Eigen::MatrixXcd m =
        Eigen::MatrixXcd::Zero(cfg.subspace_dim, cfg.subspace_dim);
    m(j, j) = 1.0;
    study.probe_states.emplace_back(m);
  }
  study.probe_states.push_back(extremize(study.work_op, Direction::min).state);
  study.probe_states.push_back(extremize(study.work_op, Direction::max).state);

  for (const DensityMatrix& probe : study.probe_states) {
    study.probe_predicted.push_back(predict(study.work_op, probe));
  }
  study.probe_runs = run_batch(study.probe_states, cfg);
  for (const DoubleWellRun& run : study.probe_runs) {
    study.probe_simulated.push_back(run.trajectory.scalar(Label::work()));
  }
  return study;
}

}  // namespace thermops
