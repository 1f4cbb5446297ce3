#include "nphisd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nphisd/diagnostics.hpp"
#include "nphisd/dynamics.hpp"
#include "nphisd/gross_pitaevskii.hpp"
#include "nphisd/io.hpp"
#include "nphisd/landscape.hpp"
#include "nphisd/lennard_jones.hpp"
#include "nphisd/lifshitz_petrich.hpp"
#include "nphisd/log.hpp"
#include "nphisd/model_factory.hpp"

namespace nphisd {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config parsing

EigsOptions parse_eigs(const json& j) {
  check_known_keys(j, {"tol", "max_iter", "extra", "seed", "stagnation_window"}, "eigs");
  EigsOptions o;
  o.tol = j.value("tol", o.tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.extra = j.value("extra", o.extra);
  o.seed = j.value("seed", o.seed);
  o.stagnation_window = j.value("stagnation_window", o.stagnation_window);
  return o;
}

NullspaceOptions parse_nullspace(const json& j) {
  check_known_keys(j, {"zero_threshold", "zero_threshold_rel", "probe_count", "eigs"},
                   "nullspace");
  NullspaceOptions o;
  o.zero_threshold = j.value("zero_threshold", o.zero_threshold);
  o.zero_threshold_rel = j.value("zero_threshold_rel", o.zero_threshold_rel);
  o.probe_count = j.value("probe_count", o.probe_count);
  if (j.contains("eigs")) o.eigs = parse_eigs(j.at("eigs"));
  return o;
}

SegmentPolicy parse_segment(const json& j) {
  check_known_keys(
      j, {"check_every", "rayleigh_zero_tol", "anchor_curvature_tol", "max_segment_steps"},
      "segment");
  SegmentPolicy p;
  p.check_every = j.value("check_every", p.check_every);
  p.rayleigh_zero_tol = j.value("rayleigh_zero_tol", p.rayleigh_zero_tol);
  p.anchor_curvature_tol = j.value("anchor_curvature_tol", p.anchor_curvature_tol);
  p.max_segment_steps = j.value("max_segment_steps", p.max_segment_steps);
  return p;
}

SearchConfig parse_search(const json& j) {
  check_known_keys(j,
                   {"k", "beta", "gamma", "tau", "tau_min", "tau_max", "step_rule", "scheme",
                    "force_tol", "max_steps", "expected_nullspace_dim", "segment", "nullspace"},
                   "search");
  SearchConfig c;
  c.k = j.value("k", c.k);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.tau = j.value("tau", c.tau);
  c.tau_min = j.value("tau_min", c.tau_min);
  c.tau_max = j.value("tau_max", c.tau_max);
  if (j.contains("step_rule")) {
    const std::string s = j.at("step_rule").get<std::string>();
    if (s == "fixed")
      c.step_rule = StepRule::Fixed;
    else if (s == "bb")
      c.step_rule = StepRule::BarzilaiBorwein;
    else
      throw std::invalid_argument("search.step_rule must be 'fixed' or 'bb'");
  }
  if (j.contains("scheme")) {
    const std::string s = j.at("scheme").get<std::string>();
    if (s == "explicit")
      c.scheme = Scheme::Explicit;
    else if (s == "semi_implicit")
      c.scheme = Scheme::SemiImplicit;
    else
      throw std::invalid_argument("search.scheme must be 'explicit' or 'semi_implicit'");
  }
  c.force_tol = j.value("force_tol", c.force_tol);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.expected_nullspace_dim = j.value("expected_nullspace_dim", c.expected_nullspace_dim);
  if (j.contains("segment")) c.segment = parse_segment(j.at("segment"));
  if (j.contains("nullspace")) c.nullspace = parse_nullspace(j.at("nullspace"));
  return c;
}

std::unique_ptr<EnergyModel> model_from_config(const json& cfg) {
  if (!cfg.contains("model")) throw std::invalid_argument("config: missing 'model' section");
  const json& m = cfg.at("model");
  check_known_keys(m, {"name", "params"}, "model");
  if (!m.contains("name")) throw std::invalid_argument("model: missing 'name'");
  return make_model(m.at("name").get<std::string>(),
                    m.value("params", json::object()));
}

StateVector gaussian_state(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  StateVector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  return v;
}

// Initial state from the config's `init` section. Kinds:
//   file         {"path": ...}                 read a saved state vector
//   raw          {"values": [...]}             literal coordinates
//   random_cloud {"seed", "spread"}            particle clusters only
//   pattern      {"pattern", "amplitude", "amplitude2"}  grid pattern models
//   gaussian     {"width"}                     condensate ground-state seed
// An optional "perturb": {"amplitude", "seed"} adds admissible noise.
StateVector build_initial_state(const EnergyModel& model, const json& init,
                                std::optional<std::uint64_t> seed_override) {
  check_known_keys(init,
                   {"kind", "path", "values", "seed", "spread", "pattern", "amplitude",
                    "amplitude2", "width", "perturb"},
                   "init");
  if (!init.contains("kind")) throw std::invalid_argument("init: missing 'kind'");
  const std::string kind = init.at("kind").get<std::string>();

  StateVector phi;
  if (kind == "file") {
    if (!init.contains("path")) throw std::invalid_argument("init: 'file' needs 'path'");
    phi = read_vector_json(init.at("path").get<std::string>());
    if (phi.size() != model.dim()) {
      throw std::invalid_argument("init: state file dimension does not match the model");
    }
  } else if (kind == "raw") {
    if (!init.contains("values")) throw std::invalid_argument("init: 'raw' needs 'values'");
    const auto vals = init.at("values").get<std::vector<double>>();
    if (static_cast<int>(vals.size()) != model.dim()) {
      throw std::invalid_argument("init: 'values' length does not match the model dimension");
    }
    phi = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  } else if (kind == "random_cloud") {
    const auto* lj = dynamic_cast<const LennardJonesCluster*>(&model);
    if (!lj) throw std::invalid_argument("init: 'random_cloud' needs a particle-cluster model");
    const std::uint64_t seed = seed_override.value_or(init.value("seed", std::uint64_t{1}));
    phi = lj->random_configuration(seed, init.value("spread", 1.2));
  } else if (kind == "pattern") {
    const auto* lp = dynamic_cast<const LifshitzPetrichModel*>(&model);
    if (!lp) throw std::invalid_argument("init: 'pattern' needs a grid pattern model");
    if (!init.contains("pattern")) throw std::invalid_argument("init: 'pattern' needs 'pattern'");
    phi = lp->seed_pattern(init.at("pattern").get<std::string>(), init.value("amplitude", 0.0),
                           init.value("amplitude2", 0.0));
  } else if (kind == "gaussian") {
    const auto* gp = dynamic_cast<const GrossPitaevskiiModel*>(&model);
    if (!gp) throw std::invalid_argument("init: 'gaussian' needs a condensate model");
    phi = gp->ground_state_seed(init.value("width", 1.0));
  } else {
    throw std::invalid_argument("init: unknown kind '" + kind + "'");
  }

  if (init.contains("perturb")) {
    const json& p = init.at("perturb");
    check_known_keys(p, {"amplitude", "seed"}, "init.perturb");
    const double amp = p.value("amplitude", 1e-2);
    const std::uint64_t seed = seed_override.value_or(p.value("seed", std::uint64_t{99}));
    StateVector d = model.project_admissible(gaussian_state(model.dim(), seed));
    const double dn = d.norm();
    if (dn > 0) phi += (amp / dn) * d;
  }
  return phi;
}

// ---------------------------------------------------------------------------
// shared plumbing

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string log_level = "info";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

void apply_log_level(const std::string& level) {
  if (level == "quiet")
    set_log_level(LogLevel::Quiet);
  else if (level == "info")
    set_log_level(LogLevel::Info);
  else if (level == "debug")
    set_log_level(LogLevel::Debug);
  else
    throw std::invalid_argument("log level must be quiet, info or debug");
}

json load_config(const CommonArgs& a) {
  json cfg = read_json_file(a.config_path);
  if (!cfg.is_object()) throw std::invalid_argument("config: top level must be an object");
  return cfg;
}

// Echo the effective config to stdout and, when an output directory is in
// play, into it for provenance.
void echo_config(const json& cfg, const CommonArgs& a) {
  std::printf("%s\n", cfg.dump(2).c_str());
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    write_json_file(a.out_dir + "/config.json", cfg);
  }
}

struct OutputOptions {
  long every = 1;        // trajectory thinning
  bool states = true;    // include raw state vectors in JSON outputs
  bool trajectory = true;
  bool xyz = true;       // particle models only
};

OutputOptions parse_output(const json& cfg) {
  OutputOptions o;
  if (!cfg.contains("output")) return o;
  const json& j = cfg.at("output");
  check_known_keys(j, {"every", "states", "trajectory", "xyz"}, "output");
  o.every = j.value("every", o.every);
  if (o.every < 1) throw std::invalid_argument("output.every must be >= 1");
  o.states = j.value("states", o.states);
  o.trajectory = j.value("trajectory", o.trajectory);
  o.xyz = j.value("xyz", o.xyz);
  return o;
}

void write_point_outputs(const std::string& dir, const std::string& stem,
                         const EnergyModel& model, const StationaryPoint& p,
                         const OutputOptions& out, const json& extra = json::object()) {
  write_point_json(dir + "/" + stem + ".json", p, extra);
  if (out.states) {
    json meta;
    meta["model"] = model.name();
    meta["energy"] = p.energy;
    meta["index"] = p.index;
    write_vector_json(dir + "/" + stem + "_state.json", p.phi, meta);
  }
  if (out.xyz) {
    if (const auto* lj = dynamic_cast<const LennardJonesCluster*>(&model)) {
      char comment[128];
      std::snprintf(comment, sizeof(comment), "E=%.17g index=%d", p.energy, p.index);
      write_xyz(dir + "/" + stem + ".xyz", *lj, p.phi, comment);
    }
  }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_search(const CommonArgs& a) {
  json cfg = load_config(a);
  check_known_keys(cfg, {"model", "init", "search", "output"}, "config");
  if (!cfg.contains("init")) throw std::invalid_argument("config: missing 'init' section");
  if (!cfg.contains("search")) throw std::invalid_argument("config: missing 'search' section");

  auto model = model_from_config(cfg);
  SearchConfig sc = parse_search(cfg.at("search"));
  if (a.seed) sc.nullspace.eigs.seed = *a.seed;
  sc.validate(true);
  const OutputOptions out = parse_output(cfg);
  echo_config(cfg, a);

  const StateVector phi0 = build_initial_state(*model, cfg.at("init"), a.seed);

  std::unique_ptr<TrajectoryLogger> logger;
  StepCallback cb;
  if (!a.out_dir.empty() && out.trajectory) {
    logger = std::make_unique<TrajectoryLogger>(a.out_dir + "/trajectory.csv", sc.k);
    cb = [&logger, &out](const StepRecord& rec) {
      if (rec.step % out.every == 0) logger->record(rec);
    };
  }

  const SearchResult res = run_model_search(*model, phi0, sc, cb);

  std::printf("converged:      %s\n", res.converged ? "yes" : "no");
  std::printf("stop reason:    %s\n", res.stop_reason.c_str());
  std::printf("energy:         %s\n", format_double(res.point.energy).c_str());
  std::printf("residual:       %s\n", format_double(res.point.residual).c_str());
  std::printf("index:          %d\n", res.point.index);
  std::printf("nullspace dim:  %d\n", res.point.nullspace_dim);
  std::printf("steps:          %ld\n", res.steps);
  std::printf("segments:       %d\n", res.segments);
  std::printf("anomalies:      %ld\n", res.anomalies);
  std::printf("max frame orthogonality drift: %s\n",
              format_double(res.max_frame_ortho_err).c_str());
  std::printf("max frozen-basis cross term:   %s\n",
              format_double(res.max_null_cross_err).c_str());
  if (model->constraint() == Constraint::UnitSphere) {
    std::printf("max tangency drift:            %s\n",
                format_double(res.max_tangency_err).c_str());
    std::printf("max unit-norm drift:           %s\n",
                format_double(res.max_sphere_norm_err).c_str());
  }

  if (!a.out_dir.empty()) {
    json extra;
    extra["converged"] = res.converged;
    extra["steps"] = res.steps;
    extra["segments"] = res.segments;
    extra["stop_reason"] = res.stop_reason;
    extra["anomalies"] = res.anomalies;
    extra["max_frame_ortho_err"] = res.max_frame_ortho_err;
    extra["max_null_cross_err"] = res.max_null_cross_err;
    extra["max_tangency_err"] = res.max_tangency_err;
    extra["max_sphere_norm_err"] = res.max_sphere_norm_err;
    write_point_outputs(a.out_dir, "point", *model, res.point, out, extra);
  }
  return res.converged ? 0 : 2;
}

int cmd_landscape(const CommonArgs& a) {
  json cfg = load_config(a);
  check_known_keys(cfg, {"model", "init", "landscape", "output"}, "config");
  if (!cfg.contains("init")) throw std::invalid_argument("config: missing 'init' section");
  if (!cfg.contains("landscape")) {
    throw std::invalid_argument("config: missing 'landscape' section");
  }

  auto model = model_from_config(cfg);
  const json& lj = cfg.at("landscape");
  check_known_keys(lj,
                   {"search", "max_index", "perturbation", "distance_tol", "energy_tol",
                    "max_nodes", "jobs"},
                   "landscape");
  LandscapeOptions opts;
  if (lj.contains("search")) opts.search = parse_search(lj.at("search"));
  opts.max_index = lj.value("max_index", opts.max_index);
  opts.perturbation = lj.value("perturbation", opts.perturbation);
  opts.distance_tol = lj.value("distance_tol", opts.distance_tol);
  opts.energy_tol = lj.value("energy_tol", opts.energy_tol);
  opts.max_nodes = lj.value("max_nodes", opts.max_nodes);
  opts.jobs = lj.value("jobs", opts.jobs);
  if (a.jobs > 1) opts.jobs = a.jobs;
  if (a.seed) opts.search.nullspace.eigs.seed = *a.seed;
  opts.search.validate();
  const OutputOptions out = parse_output(cfg);
  echo_config(cfg, a);

  const StateVector seed = build_initial_state(*model, cfg.at("init"), a.seed);

  Landscape ls;
  try {
    ls = build_landscape(*model, seed, opts);
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("seed walk did not converge") != std::string::npos) {
      std::fprintf(stderr, "nphisd: %s\n", what.c_str());
      return 2;
    }
    throw;
  }

  std::printf("nodes: %zu  edges: %zu  searches: %ld (failed %ld)\n", ls.nodes.size(),
              ls.edges.size(), ls.total_searches, ls.failed_searches);
  for (const auto& n : ls.nodes) {
    std::printf("  [%2d] %-8s index=%d null=%d E=%s\n", n.id, n.label.c_str(), n.point.index,
                n.point.nullspace_dim, format_double(n.point.energy).c_str());
  }
  for (const auto& e : ls.edges) {
    std::printf("  edge %d -> %d (direction %d, sign %+d)\n", e.parent, e.child, e.direction,
                e.sign);
  }

  if (!a.out_dir.empty()) {
    write_landscape_json(ls, a.out_dir + "/landscape.json", out.states);
    write_landscape_dot(ls, a.out_dir + "/landscape.dot");
    for (const auto& n : ls.nodes) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "node-%d", n.id);
      json extra;
      extra["label"] = n.label;
      extra["found_from"] = n.found_from;
      extra["found_by"] = n.found_by;
      write_point_outputs(a.out_dir, stem, *model, n.point, out, extra);
    }
  }
  return 0;
}

int cmd_convergence(const CommonArgs& a) {
  json cfg = load_config(a);
  check_known_keys(cfg, {"model", "init", "search", "study", "output"}, "config");
  if (!cfg.contains("init")) throw std::invalid_argument("config: missing 'init' section");
  if (!cfg.contains("search")) throw std::invalid_argument("config: missing 'search' section");
  if (!cfg.contains("study")) throw std::invalid_argument("config: missing 'study' section");

  auto model = model_from_config(cfg);
  SearchConfig sc = parse_search(cfg.at("search"));
  if (a.seed) sc.nullspace.eigs.seed = *a.seed;
  sc.validate();

  const json& st = cfg.at("study");
  check_known_keys(st, {"horizon", "taus", "reference_divisions"}, "study");
  if (!st.contains("horizon") || !st.contains("taus")) {
    throw std::invalid_argument("study: needs 'horizon' and 'taus'");
  }
  const double horizon = st.at("horizon").get<double>();
  const auto taus = st.at("taus").get<std::vector<double>>();
  const long ref_div = st.value("reference_divisions", 1024L);
  echo_config(cfg, a);

  const StateVector phi0 = build_initial_state(*model, cfg.at("init"), a.seed);
  const StepSizeStudy study = step_size_study(*model, phi0, sc, horizon, taus, ref_div);

  std::printf("%14s %22s %10s\n", "tau", "error", "order");
  for (std::size_t i = 0; i < study.taus.size(); ++i) {
    if (i == 0) {
      std::printf("%14.8g %22.15e %10s\n", study.taus[i], study.errors[i], "-");
    } else {
      std::printf("%14.8g %22.15e %10.4f\n", study.taus[i], study.errors[i],
                  study.orders[i - 1]);
    }
  }

  if (!a.out_dir.empty()) {
    std::FILE* f = std::fopen((a.out_dir + "/convergence.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot open convergence.csv for writing");
    std::fprintf(f, "tau,error,order\n");
    for (std::size_t i = 0; i < study.taus.size(); ++i) {
      std::fprintf(f, "%s,%s,%s\n", format_double(study.taus[i]).c_str(),
                   format_double(study.errors[i]).c_str(),
                   i == 0 ? "" : format_double(study.orders[i - 1]).c_str());
    }
    std::fclose(f);
  }
  return 0;
}

// A state to probe the derivative checks at: admissible, finite energy, and
// away from model singularities.
StateVector random_check_state(const EnergyModel& model, std::uint64_t seed, double amplitude) {
  if (const auto* lj = dynamic_cast<const LennardJonesCluster*>(&model)) {
    return lj->random_configuration(seed);
  }
  StateVector v = model.project_admissible(gaussian_state(model.dim(), seed));
  if (model.constraint() == Constraint::UnitSphere) {
    const double n0 = v.norm();
    if (n0 > 0) v /= n0;
    return v;
  }
  return amplitude * v;
}

int cmd_verify(const CommonArgs& a) {
  json cfg;
  if (std::filesystem::exists(a.config_path)) {
    cfg = read_json_file(a.config_path);
    check_known_keys(cfg, {"model", "verify"}, "config");
  } else {
    // bare model name
    cfg["model"] = {{"name", a.config_path}};
  }
  auto model = model_from_config(cfg);

  int states = 10;
  double force_tol = 1e-5, symmetry_tol = 1e-9, amplitude = 0.05;
  std::uint64_t seed = a.seed.value_or(777);
  if (cfg.contains("verify")) {
    const json& v = cfg.at("verify");
    check_known_keys(v, {"states", "force_tol", "symmetry_tol", "amplitude", "seed"}, "verify");
    states = v.value("states", states);
    force_tol = v.value("force_tol", force_tol);
    symmetry_tol = v.value("symmetry_tol", symmetry_tol);
    amplitude = v.value("amplitude", amplitude);
    if (!a.seed) seed = v.value("seed", seed);
  }
  echo_config(cfg, a);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ok = true;
  for (int i = 0; i < states; ++i) {
    const StateVector phi = random_check_state(*model, seed + 1000 * (i + 1), amplitude);

    const double force_err = finite_difference_force_check(*model, phi);

    // symmetry of the Hessian action at phi over random admissible pairs
    double sym_err = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      StateVector u(model->dim()), w(model->dim());
      for (int q = 0; q < model->dim(); ++q) {
        u[q] = gauss(rng);
        w[q] = gauss(rng);
      }
      u = model->project_admissible(u).normalized();
      w = model->project_admissible(w).normalized();
      const double uhw = u.dot(model->hessian_vec(phi, w));
      const double whu = w.dot(model->hessian_vec(phi, u));
      sym_err = std::max(sym_err, std::abs(uhw - whu) / (1.0 + std::abs(uhw)));
    }

    const bool pass = force_err <= force_tol && sym_err <= symmetry_tol;
    ok = ok && pass;
    std::printf("state %2d: force_err=%.3e  symmetry_err=%.3e  %s\n", i + 1, force_err, sym_err,
                pass ? "ok" : "FAIL");
  }
  std::printf("%s: derivative checks %s\n", model->name().c_str(), ok ? "passed" : "FAILED");
  return ok ? 0 : 1;
}

} // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Saddle point search and solution landscapes for degenerate energies"};
  app.require_subcommand(1);

  CommonArgs a;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub, bool config_is_file) {
    auto* pos = sub->add_option("config", a.config_path, "run configuration (JSON)");
    pos->required();
    if (config_is_file) pos->check(CLI::ExistingFile);
    sub->add_option("--out", a.out_dir, "output directory (created if missing)");
    sub->add_option("--log-level", a.log_level, "quiet, info or debug");
    sub->add_option("--seed", seed_value, "override the randomized seeds")
        ->each([&](const std::string&) { a.seed = seed_value; });
  };

  CLI::App* search = app.add_subcommand("search", "single saddle search");
  add_common(search, true);
  CLI::App* landscape = app.add_subcommand("landscape", "build a solution landscape");
  add_common(landscape, true);
  landscape->add_option("--jobs", a.jobs, "parallel walks per node (default 1)");
  CLI::App* convergence = app.add_subcommand("convergence", "step-size refinement study");
  add_common(convergence, true);
  CLI::App* verify = app.add_subcommand("verify", "derivative checks for a model");
  add_common(verify, false); // accepts a config path or a bare model name

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("nphisd");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    apply_log_level(a.log_level);
    if (search->parsed()) return cmd_search(a);
    if (landscape->parsed()) return cmd_landscape(a);
    if (convergence->parsed()) return cmd_convergence(a);
    if (verify->parsed()) return cmd_verify(a);
    throw std::logic_error("no subcommand dispatched");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nphisd: error: %s\n", e.what());
    return 1;
  }
}

} // namespace nphisd
