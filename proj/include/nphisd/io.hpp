#pragma once

#include <cstdio>
#include <string>

#include "json.hpp"
#include "nphisd/dynamics.hpp"
#include "nphisd/lennard_jones.hpp"

namespace nphisd {

// Round-trip-exact text form of a double.
std::string format_double(double v);

// CSV step log: step,t,energy,force_norm,tau,segment,tangency,rayleigh_1..k.
class TrajectoryLogger {
public:
  TrajectoryLogger(const std::string& path, int k);
  ~TrajectoryLogger();
  TrajectoryLogger(const TrajectoryLogger&) = delete;
  TrajectoryLogger& operator=(const TrajectoryLogger&) = delete;

  void record(const StepRecord& rec);
  StepCallback callback(); // valid while the logger is alive

private:
  std::FILE* f_ = nullptr;
  int k_ = 0;
};

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

// State vectors as {"dim": m, "values": [...]} plus caller metadata.
void write_vector_json(const std::string& path, const StateVector& v,
                       const nlohmann::json& meta = nlohmann::json::object());
StateVector read_vector_json(const std::string& path, nlohmann::json* meta = nullptr);

nlohmann::json point_to_json(const StationaryPoint& p, bool with_state = true);
void write_point_json(const std::string& path, const StationaryPoint& p,
                      const nlohmann::json& extra = nlohmann::json::object());

// Plain xyz snapshot (atom 1 at the origin first).
void write_xyz(const std::string& path, const LennardJonesCluster& model, const StateVector& x,
               const std::string& comment = "");

} // namespace nphisd
