#pragma once

#include "nphisd/dynamics.hpp"

namespace nphisd {

// Component of x orthogonal to phi. phi must be unit length.
StateVector tangent_project(const StateVector& phi, const StateVector& x);

// Action of the constrained second-derivative operator on a tangent vector:
// P(H v) + <phi, F> v, where P projects onto the tangent space at phi and
// F is the (ambient) force at phi.
StateVector riemannian_hessian_vec(const EnergyModel& model, const StateVector& phi,
                                   const StateVector& F, const StateVector& v);

DynamicsState init_sphere_search(const EnergyModel& model, const StateVector& phi0,
                                 const SearchConfig& cfg,
                                 const NullspaceBasis* hint = nullptr);

void sphere_step_explicit(DynamicsState& s, const EnergyModel& model, double tau,
                          const SearchConfig& cfg);
void sphere_step_semi_implicit(DynamicsState& s, const EnergyModel& model, double tau,
                               const SearchConfig& cfg);

StationaryPoint classify_sphere_point(const EnergyModel& model, const StateVector& phi,
                                      const SearchConfig& cfg);

SearchResult run_sphere_search(const EnergyModel& model, const StateVector& phi0,
                               const SearchConfig& cfg,
                               const StepCallback& on_step = StepCallback(),
                               const NullspaceBasis* hint = nullptr);

// Constraint-aware dispatchers used by callers that handle either kind of
// model uniformly (the landscape builder, the command line front end).
StationaryPoint classify_model_point(const EnergyModel& model, const StateVector& phi,
                                     const SearchConfig& cfg);
EigenResult model_smallest_eigenpairs(const EnergyModel& model, const StateVector& phi,
                                      int count, const EigsOptions& opts = EigsOptions());

} // namespace nphisd
