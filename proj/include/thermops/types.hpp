#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

namespace thermops {

// Validation tolerances shared across the library.
namespace tol {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace_one = 1e-12;
inline constexpr double psd_floor = -1e-10;
inline constexpr double singular_value_floor = 1e-10;
}  // namespace tol

// ---------------------------------------------------------------------------
// Error hierarchy
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidDimensionError : Error { using Error::Error; };
struct DimensionMismatchError : Error { using Error::Error; };
struct UnsupportedCompositionError : Error { using Error::Error; };
struct InvalidProjectorError : Error { using Error::Error; };
struct OutOfSubspaceError : Error { using Error::Error; };
struct DependentInputsError : Error { using Error::Error; };
struct IncompleteEnsembleError : Error { using Error::Error; };
struct InvalidPropagatorError : Error { using Error::Error; };
struct SupportMismatchError : Error { using Error::Error; };
struct NotPositiveDefiniteError : Error { using Error::Error; };
struct StepperFailureError : Error { using Error::Error; };
struct BoundaryLeakageError : Error { using Error::Error; };
struct BasisTrackingError : Error { using Error::Error; };

// Raised when a matrix fails the density-matrix invariants. Carries the
// offending minimum eigenvalue when the failure is a PSD violation.
struct NonPhysicalStateError : Error {
  double min_eigenvalue;
  NonPhysicalStateError(const std::string& msg, double min_eig)
      : Error(msg), min_eigenvalue(min_eig) {}
};

// Raised when a trajectory integration leaves the physical state set.
struct IntegrationFailureError : Error {
  double time;
  IntegrationFailureError(const std::string& msg, double t)
      : Error(msg), time(t) {}
};

// ---------------------------------------------------------------------------
// DensityMatrix
// ---------------------------------------------------------------------------

// A d x d complex matrix that is Hermitian, unit-trace, and positive
// semidefinite within the tolerances above. Immutable after construction.
class DensityMatrix {
 public:
  // Empty placeholder (dim 0) so result structs can be default-constructed;
  // every factory below produces a real state.
  DensityMatrix() = default;

  // Validates all three invariants; throws NonPhysicalStateError otherwise.
  explicit DensityMatrix(Eigen::MatrixXcd mat);

  // Skips validation. For internal hot paths where the invariants are
  // guaranteed by construction.
  static DensityMatrix unchecked(Eigen::MatrixXcd mat);

  const Eigen::MatrixXcd& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

 private:
  Eigen::MatrixXcd mat_;
};

// ---------------------------------------------------------------------------
// BlochVector
// ---------------------------------------------------------------------------

// Real coordinates of a state (or operator) in a traceless Hermitian
// operator basis; length L-1 where L is the basis size including identity.
struct BlochVector {
  Eigen::VectorXd coords;
  int basis_dim = 0;

  double magnitude() const { return coords.norm(); }
};

// ---------------------------------------------------------------------------
// Label
// ---------------------------------------------------------------------------

// Identifies which thermodynamic quantity an operator or measurement row
// refers to. The built-in labels cover the standard bookkeeping; custom
// labels name synthetic observables.
struct Label {
  std::string id;

  static Label work() { return {"work"}; }
  static Label heat() { return {"heat"}; }
  static Label entropy_flow() { return {"entropy_flow"}; }
  static Label energy_change() { return {"energy_change"}; }
  static Label tpm_work() { return {"tpm_work"}; }
  static Label custom(std::string name) { return {std::move(name)}; }

  bool operator==(const Label& o) const { return id == o.id; }
  bool operator<(const Label& o) const { return id < o.id; }
};

}  // namespace thermops
