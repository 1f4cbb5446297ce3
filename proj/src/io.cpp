#include "nphisd/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nphisd {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

TrajectoryLogger::TrajectoryLogger(const std::string& path, int k) : k_(k) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw std::runtime_error("TrajectoryLogger: cannot open '" + path + "'");
  std::fprintf(f_, "step,t,energy,force_norm,tau,segment,tangency");
  for (int i = 1; i <= k_; ++i) std::fprintf(f_, ",rayleigh_%d", i);
  std::fprintf(f_, "\n");
}

TrajectoryLogger::~TrajectoryLogger() {
  if (f_) std::fclose(f_);
}

void TrajectoryLogger::record(const StepRecord& rec) {
  std::fprintf(f_, "%ld,%s,%s,%s,%s,%d,%s", rec.step, format_double(rec.t).c_str(),
               format_double(rec.energy).c_str(), format_double(rec.force_norm).c_str(),
               format_double(rec.tau).c_str(), rec.segment_id,
               format_double(rec.tangency_drift).c_str());
  for (int i = 0; i < k_; ++i) {
    const double rq =
        rec.rayleigh && i < static_cast<int>(rec.rayleigh->size()) ? (*rec.rayleigh)[i] : 0.0;
    std::fprintf(f_, ",%s", format_double(rq).c_str());
  }
  std::fprintf(f_, "\n");
}

StepCallback TrajectoryLogger::callback() {
  return [this](const StepRecord& rec) { record(rec); };
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

void write_vector_json(const std::string& path, const StateVector& v,
                       const nlohmann::json& meta) {
  nlohmann::json j = meta;
  j["dim"] = v.size();
  j["values"] = std::vector<double>(v.data(), v.data() + v.size());
  write_json_file(path, j);
}

StateVector read_vector_json(const std::string& path, nlohmann::json* meta) {
  nlohmann::json j = read_json_file(path);
  if (!j.contains("values") || !j["values"].is_array()) {
    throw std::runtime_error("'" + path + "' has no 'values' array");
  }
  const auto vals = j["values"].get<std::vector<double>>();
  if (j.contains("dim") && j["dim"].get<long>() != static_cast<long>(vals.size())) {
    throw std::runtime_error("'" + path + "': dim does not match values length");
  }
  StateVector v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  if (meta) *meta = j;
  return v;
}

nlohmann::json point_to_json(const StationaryPoint& p, bool with_state) {
  nlohmann::json j;
  j["energy"] = p.energy;
  j["residual"] = p.residual;
  j["index"] = p.index;
  j["nullspace_dim"] = p.nullspace_dim;
  j["smallest_eigenvalues"] = p.smallest_eigenvalues;
  if (!p.label.empty()) j["label"] = p.label;
  if (p.id >= 0) j["id"] = p.id;
  if (with_state) j["phi"] = std::vector<double>(p.phi.data(), p.phi.data() + p.phi.size());
  return j;
}

void write_point_json(const std::string& path, const StationaryPoint& p,
                      const nlohmann::json& extra) {
  nlohmann::json j = point_to_json(p);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_json_file(path, j);
}

void write_xyz(const std::string& path, const LennardJonesCluster& model, const StateVector& x,
               const std::string& comment) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_xyz: cannot open '" + path + "'");
  const Eigen::VectorXd r = model.positions(x);
  std::fprintf(f, "%d\n%s\n", model.atoms(), comment.c_str());
  for (int a = 0; a < model.atoms(); ++a) {
    std::fprintf(f, "X %s %s %s\n", format_double(r[3 * a]).c_str(),
                 format_double(r[3 * a + 1]).c_str(), format_double(r[3 * a + 2]).c_str());
  }
  std::fclose(f);
}

} // namespace nphisd
