#include "nphisd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nphisd/log.hpp"

namespace nphisd {

void SearchConfig::validate(bool require_ascent) const {
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("beta and gamma must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(force_tol > 0.0)) throw std::invalid_argument("force_tol must be positive");
  if (k < 0) throw std::invalid_argument("k must be non-negative");
  if (require_ascent && k < 1) throw std::invalid_argument("k must be >= 1 for an upward search");
  if (!(tau_min > 0.0) || tau_max < tau_min) throw std::invalid_argument("invalid tau clamp range");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (segment.check_every < 1) throw std::invalid_argument("segment.check_every must be >= 1");
  if (segment.max_segment_steps < 1) throw std::invalid_argument("segment.max_segment_steps must be >= 1");
}

namespace {

int probe_window(const SearchConfig& cfg, int dim, int deflated) {
  const int base = cfg.expected_nullspace_dim >= 0 ? cfg.expected_nullspace_dim + 4 : 8;
  const int probe = cfg.nullspace.probe_count > 0 ? cfg.nullspace.probe_count : cfg.k + base;
  return std::min(probe, dim - deflated);
}

} // namespace

DynamicsState init_search(const EnergyModel& model, const StateVector& phi0,
                          const SearchConfig& cfg, const NullspaceBasis* hint) {
  cfg.validate(false);
  const int m = model.dim();
  if (phi0.size() != m) throw std::invalid_argument("init_search: state dimension mismatch");
  require_finite(phi0, "initial state");

  DynamicsState s;
  s.phi = phi0;
  if (hint) {
    if (hint->basis.rows() != m) throw std::invalid_argument("init_search: nullspace hint dimension mismatch");
    s.nullspace = *hint;
  } else if (cfg.k > 0) {
    NullspaceOptions opts = cfg.nullspace;
    opts.probe_count = probe_window(cfg, m, 0);
    s.nullspace = detect_nullspace(model, phi0, cfg.expected_nullspace_dim, opts);
  } else {
    s.nullspace.basis = empty_frame(m);
    s.nullspace.anchor = phi0;
  }

  const int l = s.nullspace.dim();
  if (cfg.k + l > m) {
    throw std::invalid_argument("k plus nullspace dimension exceeds problem dimension");
  }
  if (cfg.k > 0) {
    EigenResult e = smallest_eigenpairs(model, phi0, cfg.k, s.nullspace.basis, cfg.nullspace.eigs);
    s.V = e.vectors;
  } else {
    s.V = empty_frame(m);
  }
  s.null_work = s.nullspace.basis;
  s.rayleigh.assign(static_cast<size_t>(cfg.k), 0.0);
  refresh_force(s, model);
  return s;
}

void refresh_force(DynamicsState& s, const EnergyModel& model) {
  s.F = model.force(s.phi);
  require_finite(s.F, "force");
  s.energy = model.energy(s.phi);
  if (!std::isfinite(s.energy)) throw std::runtime_error("model returned non-finite value in energy");
  s.force_norm = s.F.norm();
  s.force_fresh = true;
}

StateVector reflected_force(const DynamicsState& s) {
  StateVector g = s.F;
  if (s.V.cols() > 0) g.noalias() -= 2.0 * (s.V * (s.V.transpose() * s.F));
  return g;
}

double bb_step_size(const DynamicsState& s, const StateVector& g_now, const SearchConfig& cfg) {
  if (!s.has_prev) return cfg.tau;
  const StateVector dphi = s.phi - s.prev_phi;
  const StateVector dg = g_now - s.prev_g;
  const double den = dphi.dot(dg);
  if (std::abs(den) < 1e-14) return cfg.tau;
  const double tau = std::abs(dphi.squaredNorm() / den);
  return std::clamp(tau, cfg.tau_min, cfg.tau_max);
}

namespace {

void finish_step(DynamicsState& s, const StateVector& phi_new, double tau) {
  s.phi = phi_new;
  s.t += tau;
  s.step += 1;
  s.steps_in_segment += 1;
  s.last_tau = tau;
  s.force_fresh = false;
}

void track_frame_invariants(DynamicsState& s) {
  s.max_frame_ortho_err = std::max(s.max_frame_ortho_err, orthonormality_error(s.V));
  s.max_null_cross_err = std::max(s.max_null_cross_err, max_cross_dot(s.V, s.null_work));
}

} // namespace

void step_explicit(DynamicsState& s, const EnergyModel& model, double tau,
                   const SearchConfig& cfg) {
  if (!s.force_fresh) refresh_force(s, model);
  const int k = s.k();
  const Frame& W = s.null_work;

  StateVector phi_new = s.phi + (tau * cfg.beta) * reflected_force(s);
  require_finite(phi_new, "position update");

  if (k > 0) {
    const Eigen::Index m = s.phi.size();
    Matrix T(m, k);
    s.rayleigh.resize(k);
    for (int i = 0; i < k; ++i) {
      const StateVector hv = model.hessian_vec(s.phi, s.V.col(i));
      require_finite(hv, "hessian_vec");
      const double rq = s.V.col(i).dot(hv);
      s.rayleigh[i] = rq;
      StateVector a = hv - rq * s.V.col(i);
      for (int j = 0; j < i; ++j) a.noalias() -= 2.0 * s.V.col(j) * s.V.col(j).dot(hv);
      if (W.cols() > 0) a.noalias() -= W * (W.transpose() * hv);
      T.col(i) = s.V.col(i) - (tau * cfg.gamma) * a;
    }
    Frame Vn = gram_schmidt(T);
    const double drift = max_cross_dot(Vn, W);
    s.max_null_cross_err = std::max(s.max_null_cross_err, drift);
    if (drift > 1e-8) {
      log_anomaly("explicit step: frame drifted into the frozen basis (" +
                  std::to_string(drift) + "), applying corrective projection");
      Vn = gram_schmidt(Vn, W);
      s.anomalies += 1;
    }
    s.V = Vn;
    s.max_frame_ortho_err = std::max(s.max_frame_ortho_err, orthonormality_error(s.V));
  }
  finish_step(s, phi_new, tau);
}

void step_semi_implicit(DynamicsState& s, const EnergyModel& model, double tau,
                        const SearchConfig& cfg) {
  if (!model.has_linear_split()) {
    throw std::runtime_error("semi-implicit requires split: model '" + model.name() + "'");
  }
  if (!s.force_fresh) refresh_force(s, model);
  const int k = s.k();
  const Frame& W = s.null_work;

  StateVector rhs = s.phi + (tau * cfg.beta) * model.apply_nonlinear(s.phi);
  if (k > 0) rhs.noalias() -= (2.0 * tau * cfg.beta) * (s.V * (s.V.transpose() * s.F));
  StateVector phi_new = model.solve_shifted(tau * cfg.beta, rhs);
  require_finite(phi_new, "position solve");

  if (k > 0) {
    const Eigen::Index m = s.phi.size();
    Matrix T(m, k);
    s.rayleigh.resize(k);
    for (int i = 0; i < k; ++i) {
      const StateVector hv = model.hessian_vec(phi_new, s.V.col(i));
      require_finite(hv, "hessian_vec");
      const StateVector lv = model.apply_linear(s.V.col(i));
      const double rq = s.V.col(i).dot(hv);
      s.rayleigh[i] = rq;
      // -H v  ->  L v_new + N'(phi_new) v, with N' v = -H v - L v
      StateVector vr = s.V.col(i) + (tau * cfg.gamma) * (-hv - lv);
      StateVector proj = rq * s.V.col(i);
      for (int j = 0; j < i; ++j) proj.noalias() += 2.0 * s.V.col(j) * s.V.col(j).dot(hv);
      if (W.cols() > 0) proj.noalias() += W * (W.transpose() * hv);
      vr.noalias() += (tau * cfg.gamma) * proj;
      StateVector tv = model.solve_shifted(tau * cfg.gamma, vr);
      if (W.cols() > 0) tv.noalias() -= W * (W.transpose() * tv);
      T.col(i) = tv;
    }
    s.V = gram_schmidt(T);
    track_frame_invariants(s);
  }
  finish_step(s, phi_new, tau);
}

SegmentCheckResult segment_check(DynamicsState& s, const EnergyModel& model,
                                 const SearchConfig& cfg) {
  SegmentCheckResult res;
  const int k = s.k();
  const int l = s.null_work.cols();

  double min_rq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const StateVector hv = model.hessian_vec(s.phi, s.V.col(i));
    min_rq = std::min(min_rq, std::abs(s.V.col(i).dot(hv)));
  }
  res.min_frame_rayleigh_abs = k > 0 ? min_rq : 0.0;

  double max_curv = 0.0;
  for (int i = 0; i < l; ++i) {
    const StateVector hw = model.hessian_vec(s.phi, s.null_work.col(i));
    max_curv = std::max(max_curv, std::abs(s.null_work.col(i).dot(hw)));
  }
  res.max_anchor_curvature = max_curv;

  double scale = s.nullspace.smallest_nonzero_abs;
  if (!std::isfinite(scale) || scale <= 0.0) scale = 1.0;

  if (k > 0 && res.min_frame_rayleigh_abs < cfg.segment.rayleigh_zero_tol * scale) {
    res.refresh = true;
    res.reason = "frame curvature approaching zero";
  } else if (l > 0 && res.max_anchor_curvature > cfg.segment.anchor_curvature_tol) {
    res.refresh = true;
    res.reason = "frozen null direction gained curvature";
  } else if (s.steps_in_segment >= cfg.segment.max_segment_steps) {
    res.refresh = true;
    res.reason = "segment step cap";
  }
  return res;
}

void refresh_segment(DynamicsState& s, const EnergyModel& model, const SearchConfig& cfg) {
  const int m = model.dim();
  const int k = s.k();
  const int old_dim = s.nullspace.dim();

  // A narrow window re-anchors an already-tracked nullspace; the old basis
  // and frame seed the probe, so the refresh solve is cheap. The init-sized
  // window is only needed when starting cold.
  NullspaceOptions opts = cfg.nullspace;
  opts.probe_count = std::min(old_dim + 4, m - static_cast<int>(model.excluded_directions().cols()));
  Frame guess(m, old_dim + k);
  if (old_dim > 0) guess.leftCols(old_dim) = s.null_work;
  if (k > 0) guess.rightCols(k) = s.V;
  NullspaceBasis ns = detect_nullspace(model, s.phi, old_dim, opts, &guess);

  if (k + ns.dim() > m) {
    throw std::runtime_error("refresh_segment: k plus nullspace dimension exceeds problem dimension");
  }
  bool reseed = ns.dim() != old_dim;
  if (!reseed && k > 0) {
    try {
      s.V = gram_schmidt(s.V, ns.basis);
    } catch (const std::runtime_error&) {
      log_anomaly("refresh_segment: frame collapse against the new basis, re-seeding frame");
      reseed = true;
    }
  }
  if (reseed && k > 0) {
    EigenResult e = smallest_eigenpairs(model, s.phi, k, ns.basis, cfg.nullspace.eigs, &s.V);
    s.V = e.vectors;
  }
  s.nullspace = ns;
  s.null_work = ns.basis;
  s.segment_id += 1;
  s.steps_in_segment = 0;
  if (k > 0) track_frame_invariants(s);
}

StationaryPoint classify_point(const EnergyModel& model, const StateVector& phi,
                               const SearchConfig& cfg) {
  const int m = model.dim();
  const int probe = probe_window(cfg, m, 0);
  EigenResult eigs = smallest_eigenpairs(model, phi, probe, Frame(), cfg.nullspace.eigs);
  if (!eigs.converged) {
    log_anomaly("classify_point: probe eigensolve did not fully converge");
  }

  double max_abs = 0.0;
  for (double v : eigs.eigenvalues) max_abs = std::max(max_abs, std::abs(v));
  const double thr = std::max(cfg.nullspace.zero_threshold,
                              cfg.nullspace.zero_threshold_rel * max_abs);

  StationaryPoint p;
  p.phi = phi;
  p.energy = model.energy(phi);
  p.residual = model.force(phi).norm();
  p.smallest_eigenvalues = eigs.eigenvalues;
  p.index = 0;
  p.nullspace_dim = 0;
  for (double v : eigs.eigenvalues) {
    if (v < -thr) p.index += 1;
    else if (std::abs(v) <= thr) p.nullspace_dim += 1;
  }
  return p;
}

SearchResult run_search(const EnergyModel& model, const StateVector& phi0,
                        const SearchConfig& cfg, const StepCallback& on_step,
                        const NullspaceBasis* hint) {
  DynamicsState s = init_search(model, phi0, cfg, hint);
  SearchResult r;
  r.segments = 1;

  for (;;) {
    if (!s.force_fresh) refresh_force(s, model);
    if (on_step) {
      on_step(StepRecord{s.step, s.t, s.energy, s.force_norm, s.last_tau, s.segment_id,
                         &s.rayleigh, 0.0});
    }
    if (s.force_norm < cfg.force_tol) {
      r.converged = true;
      r.stop_reason = "force norm below tolerance";
      break;
    }
    if (s.step >= cfg.max_steps) {
      r.stop_reason = "max steps reached";
      break;
    }
    if (cfg.k > 0 && s.steps_in_segment > 0 &&
        s.steps_in_segment % cfg.segment.check_every == 0) {
      SegmentCheckResult chk = segment_check(s, model, cfg);
      if (chk.refresh) {
        log_debug("segment refresh at step " + std::to_string(s.step) + ": " + chk.reason);
        refresh_segment(s, model, cfg);
        r.segments += 1;
      }
    }
    const StateVector g = reflected_force(s);
    const double tau =
        cfg.step_rule == StepRule::BarzilaiBorwein ? bb_step_size(s, g, cfg) : cfg.tau;
    s.prev_phi = s.phi;
    s.prev_g = g;
    s.has_prev = true;
    if (cfg.scheme == Scheme::SemiImplicit) {
      step_semi_implicit(s, model, tau, cfg);
    } else {
      step_explicit(s, model, tau, cfg);
    }
  }

  r.point = classify_point(model, s.phi, cfg);
  r.point.residual = s.force_norm;
  r.steps = s.step;
  r.max_frame_ortho_err = s.max_frame_ortho_err;
  r.max_null_cross_err = s.max_null_cross_err;
  r.max_tangency_err = s.max_tangency_err;
  r.max_sphere_norm_err = s.max_sphere_norm_err;
  r.anomalies = s.anomalies;
  return r;
}

namespace {

long steps_for(double horizon, double tau) {
  const double raw = horizon / tau;
  const long n = std::lround(raw);
  if (n < 1 || std::abs(static_cast<double>(n) * tau - horizon) > 1e-9 * horizon) {
    throw std::invalid_argument("step size does not divide the horizon");
  }
  return n;
}

// Position error plus per-column frame error, each column compared up to sign.
double trajectory_error(const DynamicsState& a, const DynamicsState& b) {
  double err = (a.phi - b.phi).norm();
  const int k = std::min<int>(a.V.cols(), b.V.cols());
  for (int j = 0; j < k; ++j) {
    const double plus = (a.V.col(j) - b.V.col(j)).norm();
    const double minus = (a.V.col(j) + b.V.col(j)).norm();
    err += std::min(plus, minus);
  }
  return err;
}

} // namespace

StepSizeStudy step_size_study(const EnergyModel& model, const StateVector& phi0,
                              const SearchConfig& cfg, double horizon,
                              const std::vector<double>& taus,
                              long reference_divisions) {
  if (taus.size() < 3) throw std::invalid_argument("need >= 3 step sizes");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (reference_divisions < 2) {
    throw std::invalid_argument("reference_divisions must be >= 2");
  }
  for (double tau : taus) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    steps_for(horizon, tau);
  }

  const DynamicsState start = init_model_search(model, phi0, cfg);
  const double ref_tau = horizon / static_cast<double>(reference_divisions);
  const DynamicsState ref =
      integrate_fixed_steps(model, start, cfg, ref_tau, reference_divisions);

  StepSizeStudy study;
  study.taus = taus;
  study.errors.reserve(taus.size());
  for (double tau : taus) {
    const DynamicsState end =
        integrate_fixed_steps(model, start, cfg, tau, steps_for(horizon, tau));
    study.errors.push_back(trajectory_error(end, ref));
  }
  for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
    const double num = std::log(study.errors[i] / study.errors[i + 1]);
    const double den = std::log(taus[i] / taus[i + 1]);
    study.orders.push_back(num / den);
  }
  return study;
}

} // namespace nphisd
