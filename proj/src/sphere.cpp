#include "nphisd/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nphisd/log.hpp"

namespace nphisd {

StateVector tangent_project(const StateVector& phi, const StateVector& x) {
  return x - phi * phi.dot(x);
}

StateVector riemannian_hessian_vec(const EnergyModel& model, const StateVector& phi,
                                   const StateVector& F, const StateVector& v) {
  StateVector hv = model.hessian_vec(phi, v);
  return tangent_project(phi, hv) + phi.dot(F) * v;
}

namespace {

int sphere_probe_window(const SearchConfig& cfg, int dim, int deflated) {
  const int base = cfg.expected_nullspace_dim >= 0 ? cfg.expected_nullspace_dim + 4 : 8;
  const int probe = cfg.nullspace.probe_count > 0 ? cfg.nullspace.probe_count : cfg.k + base;
  return std::min(probe, dim - 1 - deflated);
}

SymOp tangential_operator(const EnergyModel& model, StateVector phi, StateVector F) {
  const double c = phi.dot(F);
  return [&model, phi, F, c](const StateVector& x) {
    StateVector xt = x - phi * phi.dot(x);
    StateVector hv = model.hessian_vec(phi, xt);
    hv -= phi * phi.dot(hv);
    hv += c * xt;
    return hv;
  };
}

SymOp tangential_preconditioner(const EnergyModel& model, StateVector phi) {
  if (!model.has_preconditioner()) return SymOp();
  return [&model, phi](const StateVector& r) {
    StateVector p = model.precondition(r - phi * phi.dot(r));
    return StateVector(p - phi * phi.dot(p));
  };
}

Frame phi_frame(const StateVector& phi) {
  Frame f(phi.size(), 1);
  f.col(0) = phi;
  return f;
}

Frame concat_frames(const Frame& a, const Frame& b) {
  Frame out(a.rows(), a.cols() + b.cols());
  if (a.cols() > 0) out.leftCols(a.cols()) = a;
  if (b.cols() > 0) out.rightCols(b.cols()) = b;
  return out;
}

void refresh_sphere_force(DynamicsState& s, const EnergyModel& model) {
  s.F = model.force(s.phi);
  require_finite(s.F, "force");
  s.energy = model.energy(s.phi);
  if (!std::isfinite(s.energy)) throw std::runtime_error("model returned non-finite value in energy");
  s.force_norm = tangent_project(s.phi, s.F).norm();
  s.force_fresh = true;
}

double current_tangency(const DynamicsState& s) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.V.cols(); ++i) {
    worst = std::max(worst, std::abs(s.phi.dot(s.V.col(i))));
  }
  for (Eigen::Index i = 0; i < s.null_work.cols(); ++i) {
    worst = std::max(worst, std::abs(s.phi.dot(s.null_work.col(i))));
  }
  return worst;
}

void track_sphere_invariants(DynamicsState& s) {
  s.max_sphere_norm_err = std::max(s.max_sphere_norm_err, std::abs(s.phi.norm() - 1.0));
  s.max_tangency_err = std::max(s.max_tangency_err, current_tangency(s));
  s.max_frame_ortho_err = std::max(s.max_frame_ortho_err, orthonormality_error(s.V));
  s.max_null_cross_err = std::max(s.max_null_cross_err, max_cross_dot(s.V, s.null_work));
}

// Carries the frozen basis and the frame to the tangent space at phi_new and
// restores all pairwise constraints. Raw update vectors for the frame come in
// through T (k columns).
void transport_and_restore(DynamicsState& s, const StateVector& phi_new, const Matrix& T) {
  if (s.null_work.cols() > 0) {
    Matrix wt = s.null_work;
    for (Eigen::Index i = 0; i < wt.cols(); ++i) {
      wt.col(i) = tangent_project(phi_new, wt.col(i));
    }
    try {
      s.null_work = gram_schmidt(wt);
    } catch (const std::runtime_error&) {
      throw std::runtime_error("frame collapse while transporting the frozen basis");
    }
  }
  if (T.cols() > 0) {
    Matrix vt = T;
    for (Eigen::Index i = 0; i < vt.cols(); ++i) {
      vt.col(i) = tangent_project(phi_new, vt.col(i));
    }
    try {
      s.V = gram_schmidt(vt, s.null_work);
    } catch (const std::runtime_error&) {
      throw std::runtime_error("frame collapse during tangent transport");
    }
  }
}

StateVector sphere_modified_force(const DynamicsState& s) {
  StateVector g = tangent_project(s.phi, s.F);
  if (s.V.cols() > 0) g.noalias() -= 2.0 * (s.V * (s.V.transpose() * s.F));
  if (s.null_work.cols() > 0) {
    g.noalias() -= s.null_work * (s.null_work.transpose() * s.F);
  }
  return g;
}

} // namespace

DynamicsState init_sphere_search(const EnergyModel& model, const StateVector& phi0,
                                 const SearchConfig& cfg, const NullspaceBasis* hint) {
  cfg.validate(false);
  const int m = model.dim();
  if (phi0.size() != m) throw std::invalid_argument("init_sphere_search: state dimension mismatch");
  require_finite(phi0, "initial state");
  const double n0 = phi0.norm();
  if (!(n0 > 0.0)) throw std::invalid_argument("init_sphere_search: initial state has zero norm");

  DynamicsState s;
  s.phi = phi0 / n0;
  refresh_sphere_force(s, model);

  if (hint) {
    if (hint->basis.rows() != m) {
      throw std::invalid_argument("init_sphere_search: nullspace hint dimension mismatch");
    }
    s.nullspace = *hint;
    if (s.nullspace.dim() > 0) {
      Matrix b = s.nullspace.basis;
      for (Eigen::Index i = 0; i < b.cols(); ++i) b.col(i) = tangent_project(s.phi, b.col(i));
      s.nullspace.basis = gram_schmidt(b);
    }
  } else if (cfg.k > 0) {
    NullspaceOptions opts = cfg.nullspace;
    opts.probe_count = sphere_probe_window(cfg, m, 0);
    s.nullspace = detect_nullspace_op(tangential_operator(model, s.phi, s.F), m, s.phi,
                                      phi_frame(s.phi), cfg.expected_nullspace_dim, opts,
                                      tangential_preconditioner(model, s.phi));
  } else {
    s.nullspace.basis = empty_frame(m);
    s.nullspace.anchor = s.phi;
  }

  const int l = s.nullspace.dim();
  if (cfg.k + l > m - 1) {
    throw std::invalid_argument("k plus nullspace dimension exceeds problem dimension");
  }
  if (cfg.k > 0) {
    EigenResult e = smallest_eigenpairs_op(
        tangential_operator(model, s.phi, s.F), m, cfg.k,
        concat_frames(phi_frame(s.phi), s.nullspace.basis),
        tangential_preconditioner(model, s.phi), cfg.nullspace.eigs);
    s.V = e.vectors;
  } else {
    s.V = empty_frame(m);
  }
  s.null_work = s.nullspace.basis;
  s.rayleigh.assign(static_cast<size_t>(cfg.k), 0.0);
  track_sphere_invariants(s);
  return s;
}

void sphere_step_explicit(DynamicsState& s, const EnergyModel& model, double tau,
                          const SearchConfig& cfg) {
  if (!s.force_fresh) refresh_sphere_force(s, model);
  const int k = s.k();
  const Eigen::Index m = s.phi.size();

  StateVector phi_new = s.phi + (tau * cfg.beta) * sphere_modified_force(s);
  const double nn = phi_new.norm();
  if (!(nn > 0.0) || !std::isfinite(nn)) {
    throw std::runtime_error("sphere step left the state degenerate");
  }
  phi_new /= nn;

  Matrix T(m, k);
  if (k > 0) {
    s.rayleigh.resize(k);
    for (int i = 0; i < k; ++i) {
      const StateVector hv = riemannian_hessian_vec(model, s.phi, s.F, s.V.col(i));
      require_finite(hv, "hessian_vec");
      const double rq = s.V.col(i).dot(hv);
      s.rayleigh[i] = rq;
      StateVector a = hv - s.phi * s.phi.dot(hv) - rq * s.V.col(i);
      for (int j = 0; j < i; ++j) a.noalias() -= 2.0 * s.V.col(j) * s.V.col(j).dot(hv);
      if (s.null_work.cols() > 0) {
        a.noalias() -= s.null_work * (s.null_work.transpose() * hv);
      }
      T.col(i) = s.V.col(i) - (tau * cfg.gamma) * a + (tau * cfg.gamma) * s.V.col(i).dot(s.F) * s.phi;
    }
  }
  transport_and_restore(s, phi_new, T);
  s.phi = phi_new;
  s.t += tau;
  s.step += 1;
  s.steps_in_segment += 1;
  s.last_tau = tau;
  s.force_fresh = false;
  track_sphere_invariants(s);
}

void sphere_step_semi_implicit(DynamicsState& s, const EnergyModel& model, double tau,
                               const SearchConfig& cfg) {
  if (!model.has_linear_split()) {
    throw std::runtime_error("semi-implicit requires split: model '" + model.name() + "'");
  }
  if (!s.force_fresh) refresh_sphere_force(s, model);
  const int k = s.k();
  const Eigen::Index m = s.phi.size();

  // Implicit in the linear operator, explicit in everything else:
  // (I - tau*beta*L) phi~ = phi + tau*beta*(g - L phi), then retract.
  const StateVector g = sphere_modified_force(s);
  StateVector rhs = s.phi + (tau * cfg.beta) * (g - model.apply_linear(s.phi));
  StateVector phi_new = model.solve_shifted(tau * cfg.beta, rhs);
  require_finite(phi_new, "position solve");
  const double nn = phi_new.norm();
  if (!(nn > 0.0)) throw std::runtime_error("sphere step left the state degenerate");
  phi_new /= nn;

  Matrix T(m, k);
  if (k > 0) {
    s.rayleigh.resize(k);
    for (int i = 0; i < k; ++i) {
      const StateVector hv = riemannian_hessian_vec(model, s.phi, s.F, s.V.col(i));
      require_finite(hv, "hessian_vec");
      const double rq = s.V.col(i).dot(hv);
      s.rayleigh[i] = rq;
      StateVector a = hv - s.phi * s.phi.dot(hv) - rq * s.V.col(i);
      for (int j = 0; j < i; ++j) a.noalias() -= 2.0 * s.V.col(j) * s.V.col(j).dot(hv);
      if (s.null_work.cols() > 0) {
        a.noalias() -= s.null_work * (s.null_work.transpose() * hv);
      }
      const StateVector rhs_v = -a + s.V.col(i).dot(s.F) * s.phi;
      StateVector b = s.V.col(i) + (tau * cfg.gamma) * (rhs_v - model.apply_linear(s.V.col(i)));
      T.col(i) = model.solve_shifted(tau * cfg.gamma, b);
    }
  }
  transport_and_restore(s, phi_new, T);
  s.phi = phi_new;
  s.t += tau;
  s.step += 1;
  s.steps_in_segment += 1;
  s.last_tau = tau;
  s.force_fresh = false;
  track_sphere_invariants(s);
}

namespace {

SegmentCheckResult sphere_segment_check(DynamicsState& s, const EnergyModel& model,
                                        const SearchConfig& cfg) {
  SegmentCheckResult res;
  const int k = s.k();
  const int l = static_cast<int>(s.null_work.cols());

  double min_rq = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const StateVector hv = riemannian_hessian_vec(model, s.phi, s.F, s.V.col(i));
    min_rq = std::min(min_rq, std::abs(s.V.col(i).dot(hv)));
  }
  res.min_frame_rayleigh_abs = k > 0 ? min_rq : 0.0;

  double max_curv = 0.0;
  for (int i = 0; i < l; ++i) {
    const StateVector hw = riemannian_hessian_vec(model, s.phi, s.F, s.null_work.col(i));
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

void refresh_sphere_segment(DynamicsState& s, const EnergyModel& model,
                            const SearchConfig& cfg) {
  const int m = model.dim();
  const int k = s.k();
  const int old_dim = s.nullspace.dim();

  // A narrow window re-anchors an already-tracked nullspace; the old basis
  // and frame (already tangent at phi) seed the probe, so the refresh solve
  // converges in a few iterations instead of starting cold.
  NullspaceOptions opts = cfg.nullspace;
  opts.probe_count = std::min(old_dim + 4,
                              m - 1 - static_cast<int>(model.excluded_directions().cols()));
  Frame guess(m, old_dim + k);
  if (old_dim > 0) guess.leftCols(old_dim) = s.null_work;
  if (k > 0) guess.rightCols(k) = s.V;
  NullspaceBasis ns = detect_nullspace_op(tangential_operator(model, s.phi, s.F), m, s.phi,
                                          phi_frame(s.phi), old_dim, opts,
                                          tangential_preconditioner(model, s.phi), &guess);
  if (k + ns.dim() > m - 1) {
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
    EigenResult e = smallest_eigenpairs_op(
        tangential_operator(model, s.phi, s.F), m, k,
        concat_frames(phi_frame(s.phi), ns.basis),
        tangential_preconditioner(model, s.phi), cfg.nullspace.eigs, &s.V);
    s.V = e.vectors;
  }
  s.nullspace = ns;
  s.null_work = ns.basis;
  s.segment_id += 1;
  s.steps_in_segment = 0;
  track_sphere_invariants(s);
}

} // namespace

StationaryPoint classify_sphere_point(const EnergyModel& model, const StateVector& phi,
                                      const SearchConfig& cfg) {
  const int m = model.dim();
  StateVector unit = phi;
  const double n0 = unit.norm();
  if (!(n0 > 0.0)) throw std::invalid_argument("classify_sphere_point: state has zero norm");
  unit /= n0;
  const StateVector F = model.force(unit);

  const int probe = sphere_probe_window(cfg, m, 0);
  EigenResult eigs = smallest_eigenpairs_op(tangential_operator(model, unit, F), m, probe,
                                            phi_frame(unit),
                                            tangential_preconditioner(model, unit),
                                            cfg.nullspace.eigs);
  if (!eigs.converged) {
    log_anomaly("classify_sphere_point: probe eigensolve did not fully converge");
  }

  double max_abs = 0.0;
  for (double v : eigs.eigenvalues) max_abs = std::max(max_abs, std::abs(v));
  const double thr = std::max(cfg.nullspace.zero_threshold,
                              cfg.nullspace.zero_threshold_rel * max_abs);

  StationaryPoint p;
  p.phi = unit;
  p.energy = model.energy(unit);
  p.residual = tangent_project(unit, F).norm();
  p.smallest_eigenvalues = eigs.eigenvalues;
  p.index = 0;
  p.nullspace_dim = 0;
  for (double v : eigs.eigenvalues) {
    if (v < -thr) p.index += 1;
    else if (std::abs(v) <= thr) p.nullspace_dim += 1;
  }
  return p;
}

SearchResult run_sphere_search(const EnergyModel& model, const StateVector& phi0,
                               const SearchConfig& cfg, const StepCallback& on_step,
                               const NullspaceBasis* hint) {
  DynamicsState s = init_sphere_search(model, phi0, cfg, hint);
  SearchResult r;
  r.segments = 1;

  for (;;) {
    if (!s.force_fresh) refresh_sphere_force(s, model);
    if (on_step) {
      on_step(StepRecord{s.step, s.t, s.energy, s.force_norm, s.last_tau, s.segment_id,
                         &s.rayleigh, current_tangency(s)});
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
      SegmentCheckResult chk = sphere_segment_check(s, model, cfg);
      if (chk.refresh) {
        log_debug("segment refresh at step " + std::to_string(s.step) + ": " + chk.reason);
        refresh_sphere_segment(s, model, cfg);
        r.segments += 1;
      }
    }
    const StateVector g = sphere_modified_force(s);
    const double tau =
        cfg.step_rule == StepRule::BarzilaiBorwein ? bb_step_size(s, g, cfg) : cfg.tau;
    s.prev_phi = s.phi;
    s.prev_g = g;
    s.has_prev = true;
    if (cfg.scheme == Scheme::SemiImplicit) {
      sphere_step_semi_implicit(s, model, tau, cfg);
    } else {
      sphere_step_explicit(s, model, tau, cfg);
    }
  }

  r.point = classify_sphere_point(model, s.phi, cfg);
  r.point.residual = s.force_norm;
  r.steps = s.step;
  r.max_frame_ortho_err = s.max_frame_ortho_err;
  r.max_null_cross_err = s.max_null_cross_err;
  r.max_tangency_err = s.max_tangency_err;
  r.max_sphere_norm_err = s.max_sphere_norm_err;
  r.anomalies = s.anomalies;
  return r;
}

SearchResult run_model_search(const EnergyModel& model, const StateVector& phi0,
                              const SearchConfig& cfg, const StepCallback& on_step,
                              const NullspaceBasis* hint) {
  if (model.constraint() == Constraint::UnitSphere) {
    return run_sphere_search(model, phi0, cfg, on_step, hint);
  }
  return run_search(model, phi0, cfg, on_step, hint);
}

StationaryPoint classify_model_point(const EnergyModel& model, const StateVector& phi,
                                     const SearchConfig& cfg) {
  if (model.constraint() == Constraint::UnitSphere) {
    return classify_sphere_point(model, phi, cfg);
  }
  return classify_point(model, phi, cfg);
}

DynamicsState init_model_search(const EnergyModel& model, const StateVector& phi0,
                                const SearchConfig& cfg, const NullspaceBasis* hint) {
  if (model.constraint() == Constraint::UnitSphere) {
    return init_sphere_search(model, phi0, cfg, hint);
  }
  return init_search(model, phi0, cfg, hint);
}

DynamicsState integrate_fixed_steps(const EnergyModel& model, DynamicsState state,
                                    const SearchConfig& cfg, double tau,
                                    long n_steps) {
  const bool sphere = model.constraint() == Constraint::UnitSphere;
  const bool implicit = cfg.scheme == Scheme::SemiImplicit;
  for (long i = 0; i < n_steps; ++i) {
    if (!state.force_fresh) {
      if (sphere) {
        refresh_sphere_force(state, model);
      } else {
        refresh_force(state, model);
      }
    }
    if (sphere) {
      if (implicit) {
        sphere_step_semi_implicit(state, model, tau, cfg);
      } else {
        sphere_step_explicit(state, model, tau, cfg);
      }
    } else {
      if (implicit) {
        step_semi_implicit(state, model, tau, cfg);
      } else {
        step_explicit(state, model, tau, cfg);
      }
    }
  }
  return state;
}

EigenResult model_smallest_eigenpairs(const EnergyModel& model, const StateVector& phi,
                                      int count, const EigsOptions& opts) {
  if (model.constraint() == Constraint::UnitSphere) {
    StateVector unit = phi;
    const double n0 = unit.norm();
    if (!(n0 > 0.0)) throw std::invalid_argument("model_smallest_eigenpairs: state has zero norm");
    unit /= n0;
    const StateVector F = model.force(unit);
    return smallest_eigenpairs_op(tangential_operator(model, unit, F), model.dim(), count,
                                  phi_frame(unit), tangential_preconditioner(model, unit), opts);
  }
  return smallest_eigenpairs(model, phi, count, Frame(), opts);
}

} // namespace nphisd
