#include "thermops/type2.hpp"

#include <cmath>
#include <functional>
#include <utility>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

constexpr double kRegularization = 1e-6;

Eigen::VectorXd bloch_raw(const Eigen::MatrixXcd& rho,
                          const OperatorBasis& basis) {
  Eigen::VectorXd b(basis.count());
  for (int m = 0; m < basis.count(); ++m) {
    b[m] = trace_product_real(rho, basis.gammas[m]) / basis.eta;
  }
  return b;
}

Eigen::MatrixXcd output_raw(const PropagatedBasis& pb,
                            const Eigen::VectorXd& b) {
  Eigen::MatrixXcd out = pb.gamma_primes[0];
  for (Eigen::Index m = 0; m < b.size(); ++m) {
    out += b[m] * pb.gamma_primes[m + 1];
  }
  return out;
}

double eval_raw(const Type2Objective& obj, const Eigen::MatrixXcd& rho) {
  const Eigen::VectorXd b = bloch_raw(rho, obj.basis);
  const Eigen::MatrixXcd rho_tau = output_raw(obj.propagated, b);
  return obj.scale * (trace_product_real(rho, obj.op.mat) +
                      von_neumann_entropy(rho_tau) -
                      von_neumann_entropy(rho));
}

Eigen::VectorXd gradient_bloch_raw(const Type2Objective& obj,
                                   const Eigen::MatrixXcd& rho) {
  const Eigen::VectorXd b = bloch_raw(rho, obj.basis);
  const Eigen::MatrixXcd log_in = matrix_log_clamped(rho);
  const Eigen::MatrixXcd log_out =
      matrix_log_clamped(output_raw(obj.propagated, b));
  Eigen::VectorXd g(obj.basis.count());
  for (int m = 0; m < obj.basis.count(); ++m) {
    g[m] = obj.scale *
           (obj.op.vec[m] + trace_product_real(obj.basis.gammas[m], log_in) -
            trace_product_real(obj.propagated.gamma_primes[m + 1], log_out));
  }
  return g;
}

Eigen::MatrixXcd assemble_gradient(const Type2Objective& obj,
                                   const Eigen::VectorXd& g) {
  const int n = obj.basis.ambient_dim();
  Eigen::MatrixXcd grad = Eigen::MatrixXcd::Zero(n, n);
  for (int m = 0; m < obj.basis.count(); ++m) {
    grad += g[m] * obj.basis.gammas[m];
  }
  return grad;
}

// Pure state in the basis support extremizing tr(sigma op): the
// extremal-eigenvalue eigenvector of frame^dag op frame, lifted back.
Eigen::MatrixXcd extremal_vertex(const Eigen::MatrixXcd& op,
                                 const Eigen::MatrixXcd& frame, bool top) {
  const Eigen::MatrixXcd reduced = frame.adjoint() * op * frame;
  const EighResult eig = eigh(reduced);
  const Eigen::Index col = top ? eig.eigenvalues.size() - 1 : 0;
  const Eigen::VectorXcd v = frame * eig.eigenvectors.col(col);
  return v * v.adjoint();
}

// Golden-section minimum of f on [0, 1]; f must be unimodal there (convex
// objectives restricted to a segment are).
double golden_section(const std::function<double(double)>& f) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0, hi = 1.0;
  double c = hi - gr * (hi - lo);
  double d = lo + gr * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 40; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

// Shared Frank-Wolfe loop; sign = +1 minimizes, -1 maximizes. Monotone in
// the chosen direction: the nominal step 2/(k+2) is halved if it would move
// f the wrong way (only possible once the iterate is near-stationary, so the
// O(1/k) envelope is preserved).
DescentTrace frank_wolfe_loop(const Type2Objective& obj,
                              Eigen::MatrixXcd rho,
                              const FrankWolfeOptions& opts, double sign) {
  const double tolerance =
      opts.tol >= 0.0
          ? opts.tol
          : 1e-8 * std::max(1.0, obj.scale * operator_norm(obj.op.mat));
  const Eigen::MatrixXcd frame = subspace_frame(obj.basis);

  DescentTrace trace;
  double f_cur = eval_raw(obj, rho);
  for (long k = 0; k < opts.max_iter; ++k) {
    const Eigen::MatrixXcd grad =
        hermitize(assemble_gradient(obj, gradient_bloch_raw(obj, rho)));
    const Eigen::MatrixXcd sigma = extremal_vertex(grad, frame, sign < 0.0);
    const double gap = trace_product_real(sigma - rho, grad);
    if (sign * gap > -tolerance) {
      trace.iterates.push_back({k, f_cur, 0.0, 0.0, gap});
      trace.converged = true;
      break;
    }

    double a;
    double f_new;
    Eigen::MatrixXcd cand;
    if (opts.line_search) {
      a = golden_section([&](double s) {
        return sign * eval_raw(obj, (1.0 - s) * rho + s * sigma);
      });
      cand = (1.0 - a) * rho + a * sigma;
      f_new = eval_raw(obj, cand);
    } else {
      a = 2.0 / static_cast<double>(k + 2);
      cand = (1.0 - a) * rho + a * sigma;
      f_new = eval_raw(obj, cand);
      for (int h = 0; h < 60 && sign * (f_new - f_cur) > 0.0; ++h) {
        a *= 0.5;
        cand = (1.0 - a) * rho + a * sigma;
        f_new = eval_raw(obj, cand);
      }
    }
    if (sign * (f_new - f_cur) > 0.0) {
      // No step length improves f: numerically stationary.
      trace.iterates.push_back({k, f_cur, 0.0, 0.0, gap});
      trace.converged = true;
      break;
    }
    const double moved = trace_distance(rho, cand);
    rho = std::move(cand);
    // Convex combinations preserve the trace exactly only in exact
    // arithmetic; renormalize so long runs cannot drift off trace one.
    rho /= rho.trace().real();
    f_cur = f_new;
    trace.iterates.push_back({k, f_cur, a, moved, gap});
  }
  trace.final_state = DensityMatrix(hermitize(rho));
  return trace;
}

void check_objective(const Type2Objective& obj) {
  if (obj.op.dim() != obj.basis.ambient_dim() ||
      static_cast<int>(obj.propagated.gamma_primes.size()) !=
          obj.basis.size()) {
    throw DimensionMismatchError(
        "objective parts disagree on basis size or dimension");
  }
  if (obj.scale <= 0.0) {
    throw Error("objective scale must be positive");
  }
}

Eigen::MatrixXcd full_rank_on_support(const Eigen::MatrixXcd& rho,
                                      const OperatorBasis& basis,
                                      const Eigen::MatrixXcd& frame) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      frame.adjoint() * rho * frame, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() >= 1e-12) return rho;
  return (1.0 - kRegularization) * rho +
         kRegularization * basis.identity_element();
}

}  // namespace

Type2Objective make_objective(const TestEnsemble& ens,
                              const ThermoOperator& op, double scale) {
  Type2Objective obj{op, propagate_basis(ens), ens.basis, scale};
  check_objective(obj);
  return obj;
}

double evaluate(const Type2Objective& obj, const DensityMatrix& rho) {
  return eval_raw(obj, rho.mat());
}

Eigen::MatrixXcd propagate(const Type2Objective& obj,
                           const DensityMatrix& rho) {
  return output_raw(obj.propagated, bloch_raw(rho.mat(), obj.basis));
}

Eigen::VectorXd gradient_bloch(const Type2Objective& obj,
                               const DensityMatrix& rho) {
  return gradient_bloch_raw(obj, rho.mat());
}

Eigen::MatrixXcd gradient(const Type2Objective& obj, const DensityMatrix& rho) {
  return hermitize(assemble_gradient(obj, gradient_bloch_raw(obj, rho.mat())));
}

DescentTrace frank_wolfe_min(const Type2Objective& obj,
                             const DensityMatrix& rho_init,
                             FrankWolfeOptions opts) {
  check_objective(obj);
  if (rho_init.dim() != obj.basis.ambient_dim()) {
    throw DimensionMismatchError("initial state/objective dimension mismatch");
  }
  const Eigen::MatrixXcd frame = subspace_frame(obj.basis);
  return frank_wolfe_loop(
      obj, full_rank_on_support(rho_init.mat(), obj.basis, frame), opts, 1.0);
}

DescentTrace frank_wolfe_max(const Type2Objective& obj,
                             FrankWolfeOptions opts) {
  check_objective(obj);
  const Eigen::MatrixXcd frame = subspace_frame(obj.basis);
  const Eigen::MatrixXcd seed = extremal_vertex(obj.op.mat, frame, true);
  return frank_wolfe_loop(obj, full_rank_on_support(seed, obj.basis, frame),
                          opts, -1.0);
}

OverwritingMinimizer overwriting_minimizer(const ThermoOperator& op,
                                           double scale) {
  const EighResult eig = eigh(op.mat);
  const double lambda_min = eig.eigenvalues.minCoeff();
  Eigen::VectorXd weights =
      (-(eig.eigenvalues.array() - lambda_min)).exp().matrix();
  const double z_shifted = weights.sum();
  weights /= z_shifted;
  const Eigen::MatrixXcd omega = eig.eigenvectors *
                                 weights.asDiagonal() *
                                 eig.eigenvectors.adjoint();
  OverwritingMinimizer result;
  result.state = DensityMatrix(hermitize(omega));
  result.log_partition = std::log(z_shifted) - lambda_min;
  result.scale = scale;
  return result;
}

bool is_overwriting(const TestEnsemble& ens) {
  if (ens.outputs.empty() ||
      static_cast<int>(ens.outputs.size()) != ens.size()) {
    throw IncompleteEnsembleError(
        "overwriting check needs the ensemble outputs");
  }
  Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(ens.outputs.front().dim(),
                                                 ens.outputs.front().dim());
  for (const auto& out : ens.outputs) mean += out.mat();
  mean /= static_cast<double>(ens.outputs.size());
  for (const auto& out : ens.outputs) {
    if (trace_distance(out.mat(), mean) >= 1e-6) return false;
  }
  return true;
}

double mismatch_check(const Type2Objective& obj, const DensityMatrix& rho,
                      const DensityMatrix& alpha,
                      const DensityMatrix& alpha_out,
                      const DensityMatrix& rho_out) {
  const double f_rho =
      obj.scale * (trace_product_real(rho.mat(), obj.op.mat) +
                   von_neumann_entropy(rho_out) - von_neumann_entropy(rho));
  const double f_alpha =
      obj.scale * (trace_product_real(alpha.mat(), obj.op.mat) +
                   von_neumann_entropy(alpha_out) - von_neumann_entropy(alpha));
  const double lhs = f_rho - f_alpha;
  const double rhs = obj.scale * (relative_entropy(rho, alpha) -
                                  relative_entropy(rho_out, alpha_out));
  return std::abs(lhs - rhs);
}

}  // namespace thermops
