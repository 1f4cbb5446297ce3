#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nphisd/dynamics.hpp"

namespace nphisd {

struct LandscapeOptions {
  SearchConfig search;       // template for every walk; k is overwritten per walk
  int max_index = 1;         // the seed is climbed to this index before the cascade
  double perturbation = 0.0; // offset along an eigendirection; 0 -> 1e-2 * (1 + |phi|_inf)
  double distance_tol = 1e-3; // same point when |phi_a - phi_b|/sqrt(M) and |E_a - E_b|
  double energy_tol = 1e-6;   // both fall below these and the indices agree
  int max_nodes = 64;
  int jobs = 1; // walks from one node may run concurrently; results merge in a fixed order
};

struct LandscapeNode {
  StationaryPoint point;
  int id = 0;
  std::string label;       // GLM-j for index 0, GSP<k>-j otherwise
  int found_from = -1;     // node whose walk produced this one, -1 for the seed
  std::string found_by;    // "seed", "up", "down"
  bool off_target = false; // upward walk that settled at an index other than its target
};

// The walk left `parent` along eigendirection `direction` with the given
// sign. Downward edges point from the higher index to the lower one; the
// single upward edge of a climb points from lower to higher.
struct LandscapeEdge {
  int parent = -1;
  int child = -1;
  int direction = 0;
  int sign = 1;
  bool down = true;
};

struct Landscape {
  std::vector<LandscapeNode> nodes; // sorted by (energy, id); ids follow discovery order
  std::vector<LandscapeEdge> edges;
  std::string model_name;
  std::uint64_t config_hash = 0;
  std::uint64_t rng_seed = 0; // eigensolver stream shared by every walk
  long total_searches = 0;
  long failed_searches = 0;
  long anomalies = 0;
  double max_frame_ortho_err = 0.0;
  double max_null_cross_err = 0.0;
  double max_tangency_err = 0.0;
  double max_sphere_norm_err = 0.0;
};

// Climb from a converged stationary point toward a higher index: offset the
// state along the softest eigendirection above the zero threshold and run
// the coupled dynamics at k = target_index. Requires from.index <
// target_index. The endpoint is classified as found; callers decide what to
// do when it settles off target.
SearchResult upward_search(const EnergyModel& model, const StationaryPoint& from,
                           int target_index, const LandscapeOptions& opts);

// Relax away from a saddle: one walk per unstable direction and sign, run at
// k = from.index - 1 (plain descent when that is zero; the nullspace is
// still tracked on degenerate models). Converged children are deduplicated
// against each other; a child whose index failed to drop is an anomaly and
// is excluded. Requires from.index >= 1.
std::vector<StationaryPoint> downward_search(const EnergyModel& model,
                                             const StationaryPoint& from,
                                             const LandscapeOptions& opts);

// Stationary-point graph around a converged seed: one upward climb to
// max_index, then a breadth-first downward cascade until the index-0 layer.
// Matching points (same index, close in state and energy) collapse onto the
// first copy found; symmetry images at a distance count as separate nodes.
// Before returning, every node is re-classified with an independent
// eigensolver stream; a mismatch aborts the build. Deterministic for fixed
// options.
Landscape build_landscape(const EnergyModel& model, const StationaryPoint& seed,
                          const LandscapeOptions& opts);

// Convenience: converges an arbitrary state at opts.search.k first.
Landscape build_landscape(const EnergyModel& model, const StateVector& seed,
                          const LandscapeOptions& opts);

nlohmann::json landscape_to_json(const Landscape& ls, bool with_states = false);

// with_states writes the node states to a sidecar (<path minus .json>_states.csv,
// one "id,components..." row per node) and points each node's phi_ref at its row.
void write_landscape_json(const Landscape& ls, const std::string& path, bool with_states = false);
void write_landscape_dot(const Landscape& ls, const std::string& path);

} // namespace nphisd
