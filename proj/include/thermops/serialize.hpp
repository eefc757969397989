#pragma once

#include <json.hpp>
#include <string>

#include "thermops/basis.hpp"
#include "thermops/devices.hpp"
#include "thermops/extremal.hpp"
#include "thermops/perturbative.hpp"
#include "thermops/tomography.hpp"
#include "thermops/type2.hpp"
#include "thermops/types.hpp"

namespace thermops {

// Complex scalars serialize as [re, im]; matrices as row-major lists of them.
// Doubles round-trip exactly (shortest-representation printing).

nlohmann::json matrix_to_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j, int rows, int cols);

nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

nlohmann::json basis_to_json(const OperatorBasis& basis);
OperatorBasis basis_from_json(const nlohmann::json& j);

nlohmann::json operator_to_json(const ThermoOperator& op);
ThermoOperator operator_from_json(const nlohmann::json& j);

nlohmann::json spectral_to_json(const SpectralResult& s);

// Ensemble file references its basis by path (basis_ref); the basis itself is
// loaded separately and passed in.
nlohmann::json ensemble_to_json(const TestEnsemble& ens,
                                const std::string& basis_ref);
TestEnsemble ensemble_from_json(const nlohmann::json& j, OperatorBasis basis);

nlohmann::json model_to_json(const QuadraticModel& model);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// CSV emitters; every file starts with a '# units: ...' line.
void write_trace_csv(const std::string& path, const DescentTrace& trace);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_density_csv(const std::string& path, const Eigen::VectorXd& x,
                       const std::vector<std::pair<double, Eigen::VectorXd>>&
                           densities);

}  // namespace thermops
