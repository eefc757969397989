#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "thermops/tomography.hpp"
#include "thermops/types.hpp"

namespace thermops {

// One finite-time run: thermodynamic accumulants on the full time grid plus
// states stored at state_indices (stride-controlled to keep long runs cheap).
struct Trajectory {
  Eigen::VectorXd times;
  Eigen::VectorXd work;          // accumulated <W>, units k_BT
  Eigen::VectorXd heat;          // accumulated <Q>, units k_BT
  Eigen::VectorXd entropy_flow;  // Phi = -Q/T, units k_B
  std::vector<int> state_indices;
  std::vector<DensityMatrix> states;
  std::map<Label, double> scalars;  // final measured values by label

  const DensityMatrix& final_state() const;
  double scalar(const Label& label) const;
};

class Device {
 public:
  virtual ~Device() = default;
  virtual int dim() const = 0;
  virtual std::vector<Label> labels() const = 0;
  virtual Trajectory run(const DensityMatrix& rho0) const = 0;
};

// Single-qubit reset protocol: H_t = (E_t/2)(cos(theta_t) sz + sin(theta_t) sx)
// with E_t = (1 + 49 sin^2(pi t / 100))/5 k_BT and theta_t = pi t / 50, coupled
// to one bath through the instantaneous lowering operator. Times in beta*hbar.
struct QubitResetOptions {
  double tau = 50.0;
  int steps = 10000;
  double coupling = 0.2;
  // When >= 0, the Hamiltonian and bath coupling are held at this time for the
  // whole run (stationarity checks); the protocol is time dependent otherwise.
  double frozen_time = -1.0;
  int state_stride = 1;
};

class QubitResetDevice : public Device {
 public:
  explicit QubitResetDevice(QubitResetOptions opts = {});

  int dim() const override { return 2; }
  std::vector<Label> labels() const override;
  Trajectory run(const DensityMatrix& rho0) const override;

  double energy_gap(double t) const;
  double angle(double t) const;
  Eigen::Matrix2cd hamiltonian(double t) const;
  Eigen::Matrix2cd lowering(double t) const;
  // (emission, absorption) = (cE(N+1), cEN) with N the Bose factor at gap E.
  std::pair<double, double> rates(double t) const;
  DensityMatrix gibbs_state(double t) const;

  const QubitResetOptions& options() const { return opts_; }

 private:
  Eigen::Matrix2cd generator(double t, const Eigen::Matrix2cd& rho) const;

  QubitResetOptions opts_;
};

// Synthetic overwriting process: every input maps to r_tau; the measured
// scalar is tr(rho0 X).
class ExactOverwriteDevice : public Device {
 public:
  ExactOverwriteDevice(DensityMatrix r_tau, Eigen::MatrixXcd x,
                       Label label = Label::custom("x"));

  int dim() const override;
  std::vector<Label> labels() const override;
  Trajectory run(const DensityMatrix& rho0) const override;

  const DensityMatrix& target() const { return r_tau_; }
  const Eigen::MatrixXcd& observable() const { return x_; }

 private:
  DensityMatrix r_tau_;
  Eigen::MatrixXcd x_;
  Label label_;
};

// Stinespring oracle channel: fixed Haar unitary on system x environment with
// the environment in |0><0|; reports the energy change of a fixed random
// Hermitian observable. env_dim = 1 gives a unitary channel.
class RandomChannelDevice : public Device {
 public:
  RandomChannelDevice(int d, int env_dim, unsigned long long seed);

  int dim() const override { return d_; }
  std::vector<Label> labels() const override;
  Trajectory run(const DensityMatrix& rho0) const override;

  const Eigen::MatrixXcd& unitary() const { return u_; }
  const Eigen::MatrixXcd& observable() const { return h_; }
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

 private:
  int d_;
  int env_;
  Eigen::MatrixXcd u_;  // (d*env) x (d*env)
  Eigen::MatrixXcd h_;  // d x d
};

// Runs the device on every ensemble input, filling outputs and the
// measurement lists for the requested labels (device labels when empty).
void measure_ensemble(const Device& device, TestEnsemble& ens,
                      std::vector<Label> labels = {});

}  // namespace thermops
