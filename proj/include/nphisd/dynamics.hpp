#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nphisd/linalg.hpp"
#include "nphisd/model.hpp"
#include "nphisd/types.hpp"

namespace nphisd {

enum class Scheme { Explicit, SemiImplicit };
enum class StepRule { Fixed, BarzilaiBorwein };

// When to re-anchor the frozen nullspace basis (start of a new segment).
struct SegmentPolicy {
  int check_every = 10;
  // fires when min_i |<v_i, H v_i>| drops below this times the anchor's
  // smallest nonzero |eigenvalue| (an eigenvalue is heading for zero)
  double rayleigh_zero_tol = 1e-6;
  // fires when a frozen null direction shows curvature |<w, H w>| above this
  double anchor_curvature_tol = 1e-6;
  int max_segment_steps = 500;
};

struct SearchConfig {
  int k = 1; // target index; 0 runs plain gradient flow
  double beta = 1.0;
  double gamma = 1.0;
  double tau = 1e-3;
  StepRule step_rule = StepRule::Fixed;
  double tau_min = 1e-9; // clamp for adaptive steps
  double tau_max = 1.0;
  Scheme scheme = Scheme::Explicit;
  double force_tol = 1e-7;
  long max_steps = 200000;
  SegmentPolicy segment;
  NullspaceOptions nullspace;
  int expected_nullspace_dim = -1;

  // throws std::invalid_argument on bad values; upward searches require k >= 1
  void validate(bool require_ascent = false) const;
};

struct DynamicsState {
  StateVector phi;
  Frame V;                // ascent frame, dim x k
  NullspaceBasis nullspace;
  Frame null_work;        // working copy (re-tangentialized on the sphere)

  double t = 0.0;
  long step = 0;
  int segment_id = 0;
  long steps_in_segment = 0;

  // force cache at phi
  bool force_fresh = false;
  StateVector F;
  double energy = 0.0;
  double force_norm = 0.0; // tangential norm on the sphere

  // adaptive-step history (previous accepted state and its modified force)
  bool has_prev = false;
  StateVector prev_phi;
  StateVector prev_g;
  double last_tau = 0.0;

  // diagnostics
  std::vector<double> rayleigh; // frame Rayleigh quotients from the last step
  double max_frame_ortho_err = 0.0;
  double max_null_cross_err = 0.0;
  double max_tangency_err = 0.0;    // sphere only
  double max_sphere_norm_err = 0.0; // sphere only
  long anomalies = 0;

  int k() const { return static_cast<int>(V.cols()); }
};

struct StepRecord {
  long step;
  double t;
  double energy;
  double force_norm;
  double tau;
  int segment_id;
  const std::vector<double>* rayleigh;
  double tangency_drift; // sphere only, else 0
};
using StepCallback = std::function<void(const StepRecord&)>;

struct SearchResult {
  StationaryPoint point;
  bool converged = false;
  long steps = 0;
  int segments = 1;
  double max_frame_ortho_err = 0.0;
  double max_null_cross_err = 0.0;
  double max_tangency_err = 0.0;
  double max_sphere_norm_err = 0.0;
  long anomalies = 0;
  std::string stop_reason;
};

// Detects the nullspace at phi0 (unless hint is given), seeds the frame from
// the k smallest deflated eigenvectors. Throws when k + nullspace dim exceeds
// the model dimension. k = 0 skips detection and runs with an empty basis.
DynamicsState init_search(const EnergyModel& model, const StateVector& phi0,
                          const SearchConfig& cfg, const NullspaceBasis* hint = nullptr);

// Recomputes F/energy/force_norm at state.phi.
void refresh_force(DynamicsState& state, const EnergyModel& model);

// (I - 2 V V^T) F, the right side of the position equation.
StateVector reflected_force(const DynamicsState& state);

// Step size from the last accepted move: |<dphi,dphi> / <dphi,dg>| clamped to
// [tau_min, tau_max]; falls back to cfg.tau with no history or when the
// denominator is below 1e-14 in magnitude.
double bb_step_size(const DynamicsState& state, const StateVector& g_now,
                    const SearchConfig& cfg);

// One explicit Euler step of the coupled position/frame dynamics. Requires a
// fresh force cache. The frame stays orthogonal to the frozen basis by
// construction; drift is monitored and only corrected (as an anomaly) beyond
// 1e-8.
void step_explicit(DynamicsState& state, const EnergyModel& model, double tau,
                   const SearchConfig& cfg);

// One semi-implicit step: (I - tau*beta*L) position solve with the nonlinear
// and reflection terms explicit; frame solves use the Hessian at the new
// position, then re-project onto the frozen-basis complement.
void step_semi_implicit(DynamicsState& state, const EnergyModel& model, double tau,
                        const SearchConfig& cfg);

struct SegmentCheckResult {
  bool refresh = false;
  std::string reason;
  double min_frame_rayleigh_abs = 0.0;
  double max_anchor_curvature = 0.0;
};

// Evaluates the re-anchoring indicators at the current state.
SegmentCheckResult segment_check(DynamicsState& state, const EnergyModel& model,
                                 const SearchConfig& cfg);

// Re-anchors the frozen basis at the current position; keeps the frame when
// the dimension is unchanged (project + re-orthonormalize), otherwise re-seeds
// it from a deflated eigensolve.
void refresh_segment(DynamicsState& state, const EnergyModel& model,
                     const SearchConfig& cfg);

// Full Hessian probe window at phi: index = #{lambda < -thr},
// nullspace_dim = #{|lambda| <= thr}.
StationaryPoint classify_point(const EnergyModel& model, const StateVector& phi,
                               const SearchConfig& cfg);

SearchResult run_search(const EnergyModel& model, const StateVector& phi0,
                        const SearchConfig& cfg, const StepCallback& on_step = StepCallback(),
                        const NullspaceBasis* hint = nullptr);

// Dispatches on model.constraint().
SearchResult run_model_search(const EnergyModel& model, const StateVector& phi0,
                              const SearchConfig& cfg,
                              const StepCallback& on_step = StepCallback(),
                              const NullspaceBasis* hint = nullptr);

// Constraint-dispatching variants of init_search and the raw steppers, used by
// the step-size study and anywhere a trajectory must be driven manually.
DynamicsState init_model_search(const EnergyModel& model, const StateVector& phi0,
                                const SearchConfig& cfg,
                                const NullspaceBasis* hint = nullptr);

// Integrates exactly n_steps steps of size tau with no convergence or
// re-anchoring checks. The segment stays frozen for the whole run.
DynamicsState integrate_fixed_steps(const EnergyModel& model, DynamicsState state,
                                    const SearchConfig& cfg, double tau,
                                    long n_steps);

struct StepSizeStudy {
  std::vector<double> taus;
  std::vector<double> errors;  // against the fine-step reference
  std::vector<double> orders;  // successive ln-ratio slopes, size-1 shorter
};

// Integrates to a fixed horizon at each step size and compares position and
// frame (sign-aligned per column) against a reference trajectory at
// tau = horizon / reference_divisions. Every tau must divide the horizon.
StepSizeStudy step_size_study(const EnergyModel& model, const StateVector& phi0,
                              const SearchConfig& cfg, double horizon,
                              const std::vector<double>& taus,
                              long reference_divisions);

} // namespace nphisd
