#include "thermops/devices.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Eigen::Matrix2cd pauli_y() {
  Eigen::Matrix2cd m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DensityMatrix checked_state(const Eigen::MatrixXcd& rho, double t) {
  try {
    return DensityMatrix(rho);
  } catch (const NonPhysicalStateError& e) {
    throw IntegrationFailureError(
        "state left the physical set during integration: " +
            std::string(e.what()),
        t);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

const DensityMatrix& Trajectory::final_state() const {
  if (states.empty()) throw Error("trajectory holds no states");
  return states.back();
}

double Trajectory::scalar(const Label& label) const {
  const auto it = scalars.find(label);
  if (it == scalars.end()) {
    throw Error("trajectory has no scalar for label '" + label.id + "'");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// QubitResetDevice
// ---------------------------------------------------------------------------

QubitResetDevice::QubitResetDevice(QubitResetOptions opts)
    : opts_(std::move(opts)) {
  if (opts_.tau <= 0.0 || opts_.steps < 1 || opts_.state_stride < 1) {
    throw InvalidDimensionError("qubit reset options out of range");
  }
}

std::vector<Label> QubitResetDevice::labels() const {
  return {Label::work(), Label::heat(), Label::entropy_flow(),
          Label::energy_change()};
}

double QubitResetDevice::energy_gap(double t) const {
  const double s = std::sin(std::numbers::pi * t / 100.0);
  return (1.0 + 49.0 * s * s) / 5.0;
}

double QubitResetDevice::angle(double t) const {
  return std::numbers::pi * t / 50.0;
}

Eigen::Matrix2cd QubitResetDevice::hamiltonian(double t) const {
  const double e = energy_gap(t);
  const double th = angle(t);
  return 0.5 * e * (std::cos(th) * pauli_z() + std::sin(th) * pauli_x());
}

Eigen::Matrix2cd QubitResetDevice::lowering(double t) const {
  const double th = angle(t);
  return 0.5 * (std::cos(th) * pauli_x() - kI * pauli_y() -
                std::sin(th) * pauli_z());
}

std::pair<double, double> QubitResetDevice::rates(double t) const {
  const double e = energy_gap(t);
  const double n = 1.0 / std::expm1(e);
  return {opts_.coupling * e * (n + 1.0), opts_.coupling * e * n};
}

DensityMatrix QubitResetDevice::gibbs_state(double t) const {
  const Eigen::MatrixXcd g = matrix_exp_hermitian(-hamiltonian(t));
  return DensityMatrix(g / g.trace().real());
}

Eigen::Matrix2cd QubitResetDevice::generator(double t,
                                             const Eigen::Matrix2cd& rho) const {
  const double tp = opts_.frozen_time >= 0.0 ? opts_.frozen_time : t;
  const Eigen::Matrix2cd h = hamiltonian(tp);
  const Eigen::Matrix2cd l = lowering(tp);
  const Eigen::Matrix2cd ldag = l.adjoint();
  const auto [down, up] = rates(tp);
  Eigen::Matrix2cd out = -kI * (h * rho - rho * h);
  const Eigen::Matrix2cd ll = ldag * l;
  out += down * (l * rho * ldag - 0.5 * (ll * rho + rho * ll));
  const Eigen::Matrix2cd lldag = l * ldag;
  out += up * (ldag * rho * l - 0.5 * (lldag * rho + rho * lldag));
  return out;
}

Trajectory QubitResetDevice::run(const DensityMatrix& rho0) const {
  if (rho0.dim() != 2) {
    throw DimensionMismatchError("qubit reset device takes 2x2 states");
  }
  const int steps = opts_.steps;
  const double dt = opts_.tau / steps;
  const auto ham = [&](double t) {
    return hamiltonian(opts_.frozen_time >= 0.0 ? opts_.frozen_time : t);
  };

  Trajectory traj;
  traj.times.resize(steps + 1);
  traj.work = Eigen::VectorXd::Zero(steps + 1);
  traj.heat = Eigen::VectorXd::Zero(steps + 1);
  traj.entropy_flow = Eigen::VectorXd::Zero(steps + 1);

  Eigen::Matrix2cd rho = rho0.mat();
  Eigen::Matrix2cd h_prev = ham(0.0);
  traj.times[0] = 0.0;
  traj.state_indices.push_back(0);
  traj.states.push_back(rho0);

  double w_acc = 0.0;
  double q_acc = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Eigen::Matrix2cd k1 = generator(t, rho);
    const Eigen::Matrix2cd k2 =
        generator(t + 0.5 * dt, rho + 0.5 * dt * k1);
    const Eigen::Matrix2cd k3 =
        generator(t + 0.5 * dt, rho + 0.5 * dt * k2);
    const Eigen::Matrix2cd k4 = generator(t + dt, rho + dt * k3);
    const Eigen::Matrix2cd rho_next =
        rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Eigen::Matrix2cd h_next = ham(t + dt);

    // Midpoint splitting keeps Delta tr(rho H) = dW + dQ exact per step.
    w_acc += trace_product_real(0.5 * (rho + rho_next), h_next - h_prev);
    q_acc += trace_product_real(rho_next - rho, 0.5 * (h_prev + h_next));

    rho = hermitize(rho_next);
    const double drift = std::abs(rho.trace().real() - 1.0);
    if (drift > 1e-8) {
      throw IntegrationFailureError(
          "trace drift " + std::to_string(drift) + " exceeds 1e-8", t + dt);
    }
    h_prev = h_next;

    traj.times[k + 1] = t + dt;
    traj.work[k + 1] = w_acc;
    traj.heat[k + 1] = q_acc;
    traj.entropy_flow[k + 1] = -q_acc;
    if ((k + 1) % opts_.state_stride == 0 || k + 1 == steps) {
      traj.state_indices.push_back(k + 1);
      traj.states.push_back(checked_state(rho, t + dt));
    }
  }

  traj.scalars[Label::work()] = w_acc;
  traj.scalars[Label::heat()] = q_acc;
  traj.scalars[Label::entropy_flow()] = -q_acc;
  traj.scalars[Label::energy_change()] =
      trace_product_real(rho, h_prev) -
      trace_product_real(rho0.mat(), ham(0.0));
  return traj;
}

// ---------------------------------------------------------------------------
// ExactOverwriteDevice
// ---------------------------------------------------------------------------

ExactOverwriteDevice::ExactOverwriteDevice(DensityMatrix r_tau,
                                           Eigen::MatrixXcd x, Label label)
    : r_tau_(std::move(r_tau)), x_(std::move(x)), label_(std::move(label)) {
  if (x_.rows() != r_tau_.dim() || x_.cols() != r_tau_.dim()) {
    throw DimensionMismatchError("observable/target dimension mismatch");
  }
  x_ = hermitize(x_);
}

int ExactOverwriteDevice::dim() const { return r_tau_.dim(); }

std::vector<Label> ExactOverwriteDevice::labels() const { return {label_}; }

Trajectory ExactOverwriteDevice::run(const DensityMatrix& rho0) const {
  if (rho0.dim() != dim()) {
    throw DimensionMismatchError("state/device dimension mismatch");
  }
  Trajectory traj;
  traj.times = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);
  traj.work = Eigen::VectorXd::Zero(2);
  traj.heat = Eigen::VectorXd::Zero(2);
  traj.entropy_flow = Eigen::VectorXd::Zero(2);
  traj.state_indices = {0, 1};
  traj.states = {rho0, r_tau_};
  traj.scalars[label_] = trace_product_real(rho0.mat(), x_);
  return traj;
}

// ---------------------------------------------------------------------------
// RandomChannelDevice
// ---------------------------------------------------------------------------

RandomChannelDevice::RandomChannelDevice(int d, int env_dim,
                                         unsigned long long seed)
    : d_(d), env_(env_dim) {
  if (d < 2 || env_dim < 1) {
    throw InvalidDimensionError(
        "random channel needs system dim >= 2 and environment dim >= 1");
  }
  std::mt19937_64 rng(seed);
  u_ = haar_unitary(d * env_dim, rng);
  h_ = random_hermitian(d, rng);
}

std::vector<Label> RandomChannelDevice::labels() const {
  return {Label::energy_change()};
}

Eigen::MatrixXcd RandomChannelDevice::apply(const Eigen::MatrixXcd& rho) const {
  Eigen::MatrixXcd env0 = Eigen::MatrixXcd::Zero(env_, env_);
  env0(0, 0) = 1.0;
  const Eigen::MatrixXcd lifted = u_ * kron(rho, env0) * u_.adjoint();
  return partial_trace_env(lifted, d_, env_);
}

Trajectory RandomChannelDevice::run(const DensityMatrix& rho0) const {
  if (rho0.dim() != d_) {
    throw DimensionMismatchError("state/device dimension mismatch");
  }
  const Eigen::MatrixXcd out = hermitize(apply(rho0.mat()));
  Trajectory traj;
  traj.times = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);
  traj.work = Eigen::VectorXd::Zero(2);
  traj.heat = Eigen::VectorXd::Zero(2);
  traj.entropy_flow = Eigen::VectorXd::Zero(2);
  traj.state_indices = {0, 1};
  traj.states = {rho0, DensityMatrix(out)};
  traj.scalars[Label::energy_change()] =
      trace_product_real(out, h_) - trace_product_real(rho0.mat(), h_);
  return traj;
}

// ---------------------------------------------------------------------------
// measure_ensemble
// ---------------------------------------------------------------------------

void measure_ensemble(const Device& device, TestEnsemble& ens,
                      std::vector<Label> labels) {
  if (device.dim() != ens.basis.ambient_dim()) {
    throw DimensionMismatchError("device/basis dimension mismatch");
  }
  if (labels.empty()) labels = device.labels();
  ens.outputs.clear();
  for (const Label& label : labels) ens.measurements[label].clear();
  for (const DensityMatrix& input : ens.inputs) {
    const Trajectory traj = device.run(input);
    ens.outputs.push_back(traj.final_state());
    for (const Label& label : labels) {
      ens.measurements[label].push_back(traj.scalar(label));
    }
  }
}

}  // namespace thermops
