#include "thermops/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <utility>

#include "thermops/linalg.hpp"

namespace thermops {

namespace {

nlohmann::json complex_to_json(const std::complex<double>& c) {
  return nlohmann::json::array({c.real(), c.imag()});
}

std::complex<double> complex_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error("complex entries must be [re, im] pairs");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json real_matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(m(i, k));
  }
  return data;
}

std::vector<double> vector_payload(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("expected a numeric array");
  return j.get<std::vector<double>>();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

nlohmann::json matrix_to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      data.push_back(complex_to_json(m(i, k)));
    }
  }
  return data;
}

Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j, int rows,
                                  int cols) {
  if (!j.is_array() ||
      j.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols)) {
    throw Error("matrix payload has the wrong number of entries");
  }
  Eigen::MatrixXcd m(rows, cols);
  size_t idx = 0;
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = complex_from_json(j[idx++]);
  }
  return m;
}

nlohmann::json density_to_json(const DensityMatrix& rho) {
  return {{"dim", rho.dim()}, {"matrix", matrix_to_json(rho.mat())}};
}

DensityMatrix density_from_json(const nlohmann::json& j) {
  const int d = j.at("dim").get<int>();
  return DensityMatrix(matrix_from_json(j.at("matrix"), d, d));
}

nlohmann::json basis_to_json(const OperatorBasis& basis) {
  nlohmann::json gammas = nlohmann::json::array();
  for (const Eigen::MatrixXcd& g : basis.gammas) {
    gammas.push_back(matrix_to_json(g));
  }
  nlohmann::json projectors = nlohmann::json::array();
  for (const Eigen::MatrixXcd& p : basis.projectors) {
    projectors.push_back(matrix_to_json(p));
  }
  return {{"dim", basis.dim},
          {"eta", basis.eta},
          {"ambient_dim", basis.ambient_dim()},
          {"gammas", gammas},
          {"projectors", projectors}};
}

OperatorBasis basis_from_json(const nlohmann::json& j) {
  OperatorBasis basis;
  basis.dim = j.at("dim").get<int>();
  basis.eta = j.at("eta").get<double>();
  const int ambient = j.at("ambient_dim").get<int>();
  if (basis.dim < 2 || ambient < basis.dim || basis.eta <= 0.0) {
    throw Error("malformed basis file");
  }
  for (const nlohmann::json& g : j.at("gammas")) {
    basis.gammas.push_back(matrix_from_json(g, ambient, ambient));
  }
  for (const nlohmann::json& p : j.at("projectors")) {
    basis.projectors.push_back(matrix_from_json(p, ambient, ambient));
  }
  const int count = static_cast<int>(basis.gammas.size());
  if (basis.restricted() ? count < basis.dim - 1
                         : count != basis.dim * basis.dim - 1) {
    throw Error("basis element count does not match its dimension");
  }
  return basis;
}

nlohmann::json operator_to_json(const ThermoOperator& op) {
  return {{"label", op.label.id},
          {"dim", op.dim()},
          {"matrix", matrix_to_json(op.mat)},
          {"ref_value", op.ref_value},
          {"vec", std::vector<double>(op.vec.begin(), op.vec.end())}};
}

ThermoOperator operator_from_json(const nlohmann::json& j) {
  ThermoOperator op;
  op.label = Label{j.at("label").get<std::string>()};
  const int d = j.at("dim").get<int>();
  op.mat = matrix_from_json(j.at("matrix"), d, d);
  op.ref_value = j.at("ref_value").get<double>();
  const std::vector<double> vec = vector_payload(j.at("vec"));
  op.vec = Eigen::Map<const Eigen::VectorXd>(vec.data(), vec.size());
  return op;
}

nlohmann::json spectral_to_json(const SpectralResult& s) {
  const int n = static_cast<int>(s.eigenvalues.size());
  return {{"dim", n},
          {"eigenvalues",
           std::vector<double>(s.eigenvalues.begin(), s.eigenvalues.end())},
          {"eigenstates", matrix_to_json(s.eigenstates)},
          {"degenerate_groups", s.degenerate_groups}};
}

nlohmann::json ensemble_to_json(const TestEnsemble& ens,
                                const std::string& basis_ref) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const DensityMatrix& rho : ens.inputs) {
    inputs.push_back(density_to_json(rho));
  }
  nlohmann::json outputs = nlohmann::json::array();
  for (const DensityMatrix& rho : ens.outputs) {
    outputs.push_back(density_to_json(rho));
  }
  nlohmann::json measurements = nlohmann::json::object();
  for (const auto& [label, values] : ens.measurements) {
    measurements[label.id] = values;
  }
  return {{"basis_ref", basis_ref},
          {"inputs", inputs},
          {"outputs", outputs},
          {"measurements", measurements}};
}

TestEnsemble ensemble_from_json(const nlohmann::json& j, OperatorBasis basis) {
  std::vector<DensityMatrix> inputs;
  for (const nlohmann::json& rho : j.at("inputs")) {
    inputs.push_back(density_from_json(rho));
  }
  // Rebuilding through make_ensemble revalidates linear independence.
  TestEnsemble ens = make_ensemble(basis, std::move(inputs));
  for (const nlohmann::json& rho : j.at("outputs")) {
    ens.outputs.push_back(density_from_json(rho));
  }
  for (const auto& [key, values] : j.at("measurements").items()) {
    ens.measurements[Label{key}] = values.get<std::vector<double>>();
  }
  return ens;
}

nlohmann::json model_to_json(const QuadraticModel& model) {
  return {{"basis_dim", model.ref_bloch.basis_dim},
          {"ref_bloch", std::vector<double>(model.ref_bloch.coords.begin(),
                                            model.ref_bloch.coords.end())},
          {"j", std::vector<double>(model.j.begin(), model.j.end())},
          {"hess_rows", model.hess.rows()},
          {"hess", real_matrix_to_json(model.hess)},
          {"f_ref", model.f_ref},
          {"scale", model.scale}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write to " + path + " failed");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_trace_csv(const std::string& path, const DescentTrace& trace) {
  std::ofstream out = open_out(path);
  out << "# units: f and gap follow the objective (k_BT-scaled); step and "
         "moved are dimensionless\n";
  out << "k,f,step,moved,gap\n";
  for (const DescentIterate& it : trace.iterates) {
    out << it.k << ',' << it.f << ',' << it.step << ',' << it.moved << ','
        << it.gap << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  out << "# units: t/(beta*hbar), W/k_BT, Q/k_BT, Phi/k_B, S/k_B, purity\n";
  out << "t,work,heat,entropy_flow,entropy,purity\n";
  std::map<int, const DensityMatrix*> stored;
  for (size_t i = 0; i < traj.state_indices.size(); ++i) {
    stored[traj.state_indices[i]] = &traj.states[i];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < traj.times.size(); ++i) {
    double entropy = nan;
    double pur = nan;
    const auto it = stored.find(static_cast<int>(i));
    if (it != stored.end()) {
      entropy = von_neumann_entropy(*it->second);
      pur = purity(*it->second);
    }
    out << traj.times[i] << ',' << traj.work[i] << ',' << traj.heat[i] << ','
        << traj.entropy_flow[i] << ',' << entropy << ',' << pur << '\n';
  }
}

void write_density_csv(const std::string& path, const Eigen::VectorXd& x,
                       const std::vector<std::pair<double, Eigen::VectorXd>>&
                           densities) {
  for (const auto& [t, p] : densities) {
    if (p.size() != x.size()) {
      throw Error("density column does not match the grid");
    }
  }
  std::ofstream out = open_out(path);
  out << "# units: x/lambda_th; densities p(x)*lambda_th at the listed times "
         "(beta*hbar)\n";
  out << "x";
  for (const auto& [t, p] : densities) out << ",t=" << t;
  out << '\n';
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out << x[i];
    for (const auto& [t, p] : densities) out << ',' << p[i];
    out << '\n';
  }
}

}  // namespace thermops
