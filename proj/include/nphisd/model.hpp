#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nphisd/types.hpp"

namespace nphisd {

enum class Constraint { None, UnitSphere };

// Energy landscape seen by the search routines. force() is the negative
// gradient of energy() in the plain Euclidean sense; every override must keep
// that identity (the finite-difference check below is the contract).
class EnergyModel {
public:
  virtual ~EnergyModel() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual Constraint constraint() const { return Constraint::None; }

  virtual double energy(const StateVector& phi) const = 0;
  virtual StateVector force(const StateVector& phi) const = 0;

  // Hessian-vector product H(phi) v with H = grad^2 E. The default is a
  // central finite difference of force(); analytic models override.
  virtual StateVector hessian_vec(const StateVector& phi, const StateVector& v) const;
  virtual bool has_analytic_hessian() const { return false; }

  // Optional split F(phi) = L phi + N(phi) with L linear and cheaply
  // shift-invertible; required by the semi-implicit scheme.
  virtual bool has_linear_split() const { return false; }
  virtual StateVector apply_linear(const StateVector& v) const;
  virtual StateVector apply_nonlinear(const StateVector& phi) const;
  // Solves (I - c L) x = rhs.
  virtual StateVector solve_shifted(double c, const StateVector& rhs) const;

  // Optional SPD scaling applied to eigensolver residuals.
  virtual bool has_preconditioner() const { return false; }
  virtual StateVector precondition(const StateVector& r) const;

  // Models whose state space is a linear subspace of R^dim (a conserved
  // quantity baked into the discretization) override these. Probes and
  // spectra are restricted to the admissible subspace; excluded_directions()
  // returns an orthonormal basis of its complement.
  virtual StateVector project_admissible(const StateVector& d) const { return d; }
  virtual Frame excluded_directions() const { return empty_frame(dim()); }
};

// Converged end point of a search, with its local spectral data.
struct StationaryPoint {
  StateVector phi;
  double energy = 0.0;
  double residual = 0.0; // ||F||@2 (tangential norm for sphere models)
  int index = -1;        // number of negative curvature directions
  int nullspace_dim = 0;
  std::vector<double> smallest_eigenvalues; // ascending probe window
  std::string label;
  int id = -1;
};

// Max over probed coordinates of |FD(-dE) - F_i| / (1 + |F_i|), central
// differences. Dimensions above 256 probe a seeded random subset of 64
// coordinates to keep the check affordable.
double finite_difference_force_check(const EnergyModel& model, const StateVector& phi,
                                     double h = 0.0, std::uint64_t seed = 0);

// Central-difference fallback for H v: [F(phi - h u) - F(phi + h u)] / (2h) * ||v||
// with u = v/||v||. Default h = 1e-5 * (1 + ||phi||_inf).
StateVector hessian_vec_fd_fallback(const EnergyModel& model, const StateVector& phi,
                                    const StateVector& v, double h = 0.0);

inline double default_fd_step(const StateVector& phi) {
  return 1e-5 * (1.0 + phi.lpNorm<Eigen::Infinity>());
}

void require_finite(const StateVector& v, const char* what);

} // namespace nphisd
