#include "nphisd/landscape.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "nphisd/io.hpp"
#include "nphisd/log.hpp"
#include "nphisd/sphere.hpp"

namespace nphisd {

namespace {

void absorb(Landscape& ls, const SearchResult& r) {
  ls.total_searches += 1;
  if (!r.converged) ls.failed_searches += 1;
  ls.anomalies += r.anomalies;
  ls.max_frame_ortho_err = std::max(ls.max_frame_ortho_err, r.max_frame_ortho_err);
  ls.max_null_cross_err = std::max(ls.max_null_cross_err, r.max_null_cross_err);
  ls.max_tangency_err = std::max(ls.max_tangency_err, r.max_tangency_err);
  ls.max_sphere_norm_err = std::max(ls.max_sphere_norm_err, r.max_sphere_norm_err);
}

bool points_match(const StationaryPoint& a, const StationaryPoint& b,
                  const LandscapeOptions& opts) {
  if (a.index != b.index) return false;
  if (std::abs(a.energy - b.energy) > opts.energy_tol) return false;
  const double scale = std::sqrt(static_cast<double>(a.phi.size()));
  return (a.phi - b.phi).norm() / scale <= opts.distance_tol;
}

int find_match(const Landscape& ls, const StationaryPoint& p, const LandscapeOptions& opts) {
  for (const LandscapeNode& node : ls.nodes) {
    if (points_match(node.point, p, opts)) return node.id;
  }
  return -1;
}

int add_node(Landscape& ls, StationaryPoint p, int from, const std::string& how,
             std::vector<int>& class_counts) {
  const int id = static_cast<int>(ls.nodes.size());
  if (p.index >= static_cast<int>(class_counts.size())) class_counts.resize(p.index + 1, 0);
  class_counts[p.index] += 1;
  LandscapeNode node;
  node.id = id;
  node.found_from = from;
  node.found_by = how;
  if (p.index == 0) {
    node.label = "GLM-" + std::to_string(class_counts[0]);
  } else {
    node.label = "GSP" + std::to_string(p.index) + "-" + std::to_string(class_counts[p.index]);
  }
  p.label = node.label;
  p.id = id;
  node.point = std::move(p);
  ls.nodes.push_back(std::move(node));
  return id;
}

double walk_offset(const StationaryPoint& from, const LandscapeOptions& opts) {
  if (opts.perturbation > 0) return opts.perturbation;
  return 1e-2 * (1.0 + from.phi.lpNorm<Eigen::Infinity>());
}

struct NodeDirections {
  Frame vectors;
  std::vector<double> values;
  double threshold = 0.0;
};

NodeDirections node_directions(const EnergyModel& model, const StationaryPoint& at,
                               const LandscapeOptions& opts) {
  const SearchConfig& cfg = opts.search;
  const int expected = cfg.expected_nullspace_dim >= 0 ? cfg.expected_nullspace_dim : 4;
  int count = at.index + expected + 4;
  const int cap = model.constraint() == Constraint::UnitSphere
                      ? model.dim() - 1
                      : model.dim() - static_cast<int>(model.excluded_directions().cols());
  count = std::min(count, cap);
  EigenResult eigs = model_smallest_eigenpairs(model, at.phi, count, cfg.nullspace.eigs);
  NodeDirections out;
  out.vectors = eigs.vectors;
  out.values = eigs.eigenvalues;
  double max_abs = 0.0;
  for (double v : eigs.eigenvalues) max_abs = std::max(max_abs, std::abs(v));
  out.threshold =
      std::max(cfg.nullspace.zero_threshold, cfg.nullspace.zero_threshold_rel * max_abs);
  return out;
}

// Climbs along +delta v first and retries -delta v when that walk fails to
// converge: the eigensolver's sign is arbitrary, and the two offsets can
// land in different basins. stats (optional) absorbs the discarded attempt.
SearchResult upward_walk(const EnergyModel& model, const StationaryPoint& from,
                         int target_index, const LandscapeOptions& opts, int* direction_out,
                         int* sign_out, Landscape* stats) {
  if (from.index < 0) {
    throw std::invalid_argument("upward_search: start point is not classified");
  }
  if (from.index >= target_index) {
    throw std::invalid_argument("upward_search: target index must exceed the start index");
  }
  const NodeDirections dirs = node_directions(model, from, opts);
  int soft = -1;
  for (int i = 0; i < static_cast<int>(dirs.values.size()); ++i) {
    if (dirs.values[i] > dirs.threshold) {
      soft = i;
      break;
    }
  }
  if (soft < 0) {
    throw std::runtime_error(
        "upward_search: no stable direction above the zero threshold to climb along");
  }
  if (direction_out) *direction_out = soft;
  if (sign_out) *sign_out = +1;
  SearchConfig cfg = opts.search;
  cfg.k = target_index;
  const double delta = walk_offset(from, opts);
  SearchResult r = run_model_search(model, from.phi + delta * dirs.vectors.col(soft), cfg);
  if (!r.converged) {
    log_info("upward climb along +delta stalled (" + r.stop_reason + "), retrying -delta");
    if (stats) absorb(*stats, r);
    if (sign_out) *sign_out = -1;
    r = run_model_search(model, from.phi - delta * dirs.vectors.col(soft), cfg);
  }
  return r;
}

struct DownWalk {
  int direction = 0;
  int sign = 1;
  SearchResult run;
  std::string error;
};

// Walks run (possibly concurrently) and merge strictly in direction/sign
// order so the outcome is identical for any job count.
std::vector<DownWalk> downward_walks(const EnergyModel& model, const StationaryPoint& from,
                                     const LandscapeOptions& opts) {
  if (from.index < 1) {
    throw std::invalid_argument("downward_search: start point must have positive index");
  }
  const NodeDirections dirs = node_directions(model, from, opts);
  const double delta = walk_offset(from, opts);

  std::vector<DownWalk> walks;
  for (int i = 0; i < static_cast<int>(dirs.values.size()) && i < from.index; ++i) {
    if (dirs.values[i] < -dirs.threshold) {
      walks.push_back({i, +1, {}, {}});
      walks.push_back({i, -1, {}, {}});
    }
  }

  auto do_walk = [&](size_t wi) {
    SearchConfig cfg = opts.search;
    cfg.k = from.index - 1;
    const StateVector start =
        from.phi + (walks[wi].sign * delta) * dirs.vectors.col(walks[wi].direction);
    try {
      walks[wi].run = run_model_search(model, start, cfg);
    } catch (const std::exception& e) {
      walks[wi].error = e.what();
      if (walks[wi].error.empty()) walks[wi].error = "unknown failure";
    }
  };
  const size_t jobs = static_cast<size_t>(std::max(1, opts.jobs));
  if (jobs == 1) {
    for (size_t wi = 0; wi < walks.size(); ++wi) do_walk(wi);
  } else {
    for (size_t base = 0; base < walks.size(); base += jobs) {
      std::vector<std::thread> pool;
      for (size_t wi = base; wi < walks.size() && wi < base + jobs; ++wi) {
        pool.emplace_back(do_walk, wi);
      }
      for (std::thread& t : pool) t.join();
    }
  }
  return walks;
}

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t options_fingerprint(const LandscapeOptions& o) {
  const SearchConfig& c = o.search;
  char buf[768];
  std::snprintf(buf, sizeof(buf),
                "k=%d beta=%.17g gamma=%.17g tau=%.17g rule=%d taumin=%.17g taumax=%.17g "
                "scheme=%d ftol=%.17g steps=%ld check=%d rztol=%.17g actol=%.17g segcap=%d "
                "zthr=%.17g zrel=%.17g probe=%d etol=%.17g eit=%d extra=%d eseed=%" PRIu64
                " stag=%d expnull=%d maxidx=%d pert=%.17g dtol=%.17g entol=%.17g cap=%d",
                c.k, c.beta, c.gamma, c.tau, static_cast<int>(c.step_rule), c.tau_min, c.tau_max,
                static_cast<int>(c.scheme), c.force_tol, c.max_steps, c.segment.check_every,
                c.segment.rayleigh_zero_tol, c.segment.anchor_curvature_tol,
                c.segment.max_segment_steps, c.nullspace.zero_threshold,
                c.nullspace.zero_threshold_rel, c.nullspace.probe_count, c.nullspace.eigs.tol,
                c.nullspace.eigs.max_iter, c.nullspace.eigs.extra,
                static_cast<std::uint64_t>(c.nullspace.eigs.seed),
                c.nullspace.eigs.stagnation_window, c.expected_nullspace_dim, o.max_index,
                o.perturbation, o.distance_tol, o.energy_tol, o.max_nodes);
  return fnv1a(14695981039346656037ULL, buf);
}

// Every node must reproduce its stored classification under a fresh
// eigensolver stream; a flip means the stored index or nullspace count was a
// solver artifact and the graph cannot be trusted.
void verify_nodes(const EnergyModel& model, const Landscape& ls, const LandscapeOptions& opts) {
  for (const LandscapeNode& node : ls.nodes) {
    SearchConfig cfg = opts.search;
    cfg.k = std::max(1, node.point.index);
    cfg.nullspace.eigs.seed += 1;
    const StationaryPoint check = classify_model_point(model, node.point.phi, cfg);
    if (check.index != node.point.index || check.nullspace_dim != node.point.nullspace_dim) {
      throw std::runtime_error(
          "build_landscape: reclassification mismatch at " + node.label + " (stored index " +
          std::to_string(node.point.index) + "/" + std::to_string(node.point.nullspace_dim) +
          ", recheck " + std::to_string(check.index) + "/" + std::to_string(check.nullspace_dim) +
          ")");
    }
    if (!(check.residual <= opts.search.force_tol * 1.01)) {
      throw std::runtime_error("build_landscape: node " + node.label +
                               " fails the residual recheck");
    }
    if (std::abs(check.energy - node.point.energy) > 1e-12 * (1.0 + std::abs(node.point.energy))) {
      throw std::runtime_error("build_landscape: node " + node.label +
                               " fails the energy recheck");
    }
  }
}

} // namespace

SearchResult upward_search(const EnergyModel& model, const StationaryPoint& from,
                           int target_index, const LandscapeOptions& opts) {
  return upward_walk(model, from, target_index, opts, nullptr, nullptr, nullptr);
}

std::vector<StationaryPoint> downward_search(const EnergyModel& model,
                                             const StationaryPoint& from,
                                             const LandscapeOptions& opts) {
  std::vector<StationaryPoint> children;
  for (const DownWalk& w : downward_walks(model, from, opts)) {
    if (!w.error.empty()) {
      log_anomaly("downward_search: walk failed: " + w.error);
      continue;
    }
    if (!w.run.converged) continue;
    if (w.run.point.index >= from.index) {
      log_anomaly("downward_search: child index did not drop (" +
                  std::to_string(w.run.point.index) + " from " + std::to_string(from.index) +
                  "), child dropped");
      continue;
    }
    const bool dup = std::any_of(children.begin(), children.end(), [&](const StationaryPoint& c) {
      return points_match(c, w.run.point, opts);
    });
    if (!dup) children.push_back(w.run.point);
  }
  return children;
}

Landscape build_landscape(const EnergyModel& model, const StationaryPoint& seed,
                          const LandscapeOptions& opts) {
  if (seed.index < 0) {
    throw std::invalid_argument("build_landscape: seed point is not classified");
  }
  if (opts.max_index < 0) throw std::invalid_argument("build_landscape: max_index < 0");
  if (opts.max_nodes < 1) throw std::invalid_argument("build_landscape: max_nodes < 1");
  if (!(opts.distance_tol > 0) || !(opts.energy_tol > 0)) {
    throw std::invalid_argument("build_landscape: dedup tolerances must be positive");
  }
  opts.search.validate();

  Landscape ls;
  ls.model_name = model.name();
  ls.config_hash = options_fingerprint(opts);
  ls.rng_seed = opts.search.nullspace.eigs.seed;
  std::vector<int> class_counts;
  add_node(ls, seed, -1, "seed", class_counts);

  if (seed.index < opts.max_index) {
    int direction = 0;
    int sign = +1;
    SearchResult up;
    try {
      up = upward_walk(model, ls.nodes[0].point, opts.max_index, opts, &direction, &sign, &ls);
    } catch (const std::exception& e) {
      // a runaway climb (no saddle along the soft direction) must not void
      // the cascade; the graph is returned partial
      ls.total_searches += 1;
      ls.failed_searches += 1;
      log_anomaly("build_landscape: upward climb failed: " + std::string(e.what()));
      up = SearchResult{};
      up.stop_reason = e.what();
    }
    if (up.steps > 0 || up.converged) absorb(ls, up);
    if (!up.converged) {
      log_anomaly("build_landscape: upward climb did not converge (" + up.stop_reason +
                  "), returning the partial graph");
    } else {
      int child = find_match(ls, up.point, opts);
      if (child < 0) {
        child = add_node(ls, up.point, 0, "up", class_counts);
        if (up.point.index != opts.max_index) {
          ls.nodes[child].off_target = true;
          log_anomaly("build_landscape: climb settled at index " +
                      std::to_string(up.point.index) + " instead of " +
                      std::to_string(opts.max_index));
        }
      }
      if (child != 0 && ls.nodes[child].point.index > ls.nodes[0].point.index) {
        ls.edges.push_back({0, child, direction, sign, false});
      } else if (child == 0) {
        ls.anomalies += 1;
        log_anomaly("build_landscape: climb fell back onto the seed");
      }
    }
  }

  // ids are assigned in discovery order and nodes are only appended, so a
  // plain id sweep expands the graph breadth first
  for (int id = 0; id < static_cast<int>(ls.nodes.size()); ++id) {
    if (ls.nodes[id].point.index < 1) continue;
    if (static_cast<int>(ls.nodes.size()) >= opts.max_nodes) {
      log_info("build_landscape: node cap reached, stopping expansion");
      break;
    }
    const StationaryPoint parent = ls.nodes[id].point;
    for (const DownWalk& w : downward_walks(model, parent, opts)) {
      if (!w.error.empty()) {
        ls.total_searches += 1;
        ls.failed_searches += 1;
        log_anomaly("build_landscape: downward walk failed: " + w.error);
        continue;
      }
      absorb(ls, w.run);
      if (!w.run.converged) continue;
      if (w.run.point.index >= parent.index) {
        ls.anomalies += 1;
        log_anomaly("build_landscape: downward walk from " + ls.nodes[id].label +
                    " rose to index " + std::to_string(w.run.point.index) + ", child dropped");
        continue;
      }
      int child = find_match(ls, w.run.point, opts);
      if (child < 0) {
        if (static_cast<int>(ls.nodes.size()) >= opts.max_nodes) {
          log_info("build_landscape: node cap reached, dropping a new child");
          continue;
        }
        child = add_node(ls, w.run.point, id, "down", class_counts);
      }
      const bool dup = std::any_of(ls.edges.begin(), ls.edges.end(), [&](const LandscapeEdge& e) {
        return e.parent == id && e.child == child && e.direction == w.direction &&
               e.sign == w.sign;
      });
      if (!dup) ls.edges.push_back({id, child, w.direction, w.sign, true});
    }
  }

  verify_nodes(model, ls, opts);
  std::stable_sort(ls.nodes.begin(), ls.nodes.end(),
                   [](const LandscapeNode& a, const LandscapeNode& b) {
                     if (a.point.energy != b.point.energy) return a.point.energy < b.point.energy;
                     return a.id < b.id;
                   });
  return ls;
}

Landscape build_landscape(const EnergyModel& model, const StateVector& seed,
                          const LandscapeOptions& opts) {
  SearchResult seed_run = run_model_search(model, seed, opts.search);
  if (!seed_run.converged) {
    throw std::runtime_error("build_landscape: seed walk did not converge (" +
                             seed_run.stop_reason + ")");
  }
  Landscape ls = build_landscape(model, seed_run.point, opts);
  // the seed walk is part of the build's cost and drift record
  absorb(ls, seed_run);
  return ls;
}

nlohmann::json landscape_to_json(const Landscape& ls, bool with_states) {
  nlohmann::json j;
  j["metadata"] = {{"model", ls.model_name},
                   {"config_hash", ls.config_hash},
                   {"seed", ls.rng_seed}};
  j["nodes"] = nlohmann::json::array();
  for (const LandscapeNode& n : ls.nodes) {
    nlohmann::json nj = point_to_json(n.point, with_states);
    nj["id"] = n.id;
    nj["label"] = n.label;
    nj["found_from"] = n.found_from;
    nj["found_by"] = n.found_by;
    if (n.off_target) nj["off_target"] = true;
    j["nodes"].push_back(nj);
  }
  j["edges"] = nlohmann::json::array();
  for (const LandscapeEdge& e : ls.edges) {
    j["edges"].push_back({{"parent", e.parent},
                          {"child", e.child},
                          {"direction", e.direction},
                          {"sign", e.sign},
                          {"kind", e.down ? "downward" : "upward"}});
  }
  j["total_searches"] = ls.total_searches;
  j["failed_searches"] = ls.failed_searches;
  j["anomalies"] = ls.anomalies;
  return j;
}

void write_landscape_json(const Landscape& ls, const std::string& path, bool with_states) {
  nlohmann::json j = landscape_to_json(ls, false);
  if (with_states) {
    std::string stem = path;
    if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".json") == 0) {
      stem.resize(stem.size() - 5);
    }
    const std::string sidecar = stem + "_states.csv";
    std::ofstream csv(sidecar);
    if (!csv) throw std::runtime_error("cannot open '" + sidecar + "' for writing");
    std::string base = sidecar;
    const size_t slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    char num[32];
    for (size_t i = 0; i < ls.nodes.size(); ++i) {
      const LandscapeNode& n = ls.nodes[i];
      csv << n.id;
      for (Eigen::Index c = 0; c < n.point.phi.size(); ++c) {
        std::snprintf(num, sizeof(num), "%.17g", n.point.phi[c]);
        csv << ',' << num;
      }
      csv << '\n';
      j["nodes"][i]["phi_ref"] = base + ":" + std::to_string(n.id);
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

void write_landscape_dot(const Landscape& ls, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "digraph landscape {\n  rankdir=TB;\n";
  for (const LandscapeNode& n : ls.nodes) {
    out << "  n" << n.id << " [label=\"" << n.label << "\\nE=" << n.point.energy << "\"];\n";
  }
  for (const LandscapeEdge& e : ls.edges) {
    out << "  n" << e.parent << " -> n" << e.child << (e.down ? "" : " [style=dashed]") << ";\n";
  }
  out << "}\n";
}

} // namespace nphisd
