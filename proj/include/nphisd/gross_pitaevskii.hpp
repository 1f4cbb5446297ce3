#pragma once

#include <complex>
#include <memory>

#include "nphisd/model.hpp"
#include "nphisd/spectral.hpp"

namespace nphisd {

// Complex order parameter on a periodic n x n grid, stored as a stacked real
// vector y = [Re; Im] scaled so that the physical field is n * y; the mass
// constraint (grid-averaged squared modulus = 1) is then the unit Euclidean
// sphere ||y|| = 1. With K = -laplacian per component and r2 the pointwise
// squared modulus of y,
//   E = y' K y / 2 + sum V r2 + (eta n^2 / 2) sum r2^2.
// Every stationary point carries the global phase rotation as a symmetry, so
// the constrained Hessian has the direction (-Im; Re) in its null space.
class GrossPitaevskiiModel : public EnergyModel {
public:
  GrossPitaevskiiModel(int n = 64, double omega = 1.0, double eta = 300.0,
                       double length = 0.0, double lattice_depth = 2.0); // length 0 -> 4 pi

  int dim() const override { return 2 * n_ * n_; }
  std::string name() const override { return "gross_pitaevskii"; }
  Constraint constraint() const override { return Constraint::UnitSphere; }

  double energy(const StateVector& y) const override;
  StateVector force(const StateVector& y) const override;
  StateVector hessian_vec(const StateVector& y, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  // F = L y + N(y) with L = -K (kinetic part), diagonal in Fourier space.
  bool has_linear_split() const override { return true; }
  StateVector apply_linear(const StateVector& v) const override;
  StateVector apply_nonlinear(const StateVector& y) const override;
  StateVector solve_shifted(double c, const StateVector& rhs) const override;

  bool has_preconditioner() const override { return true; }
  StateVector precondition(const StateVector& r) const override;

  int n() const { return n_; }
  double length() const { return L_; }
  double grid_coord(int j) const { return -0.5 * L_ + L_ * j / n_; }
  const Eigen::VectorXd& potential() const { return V_; }

  // Normalized Gaussian with zero imaginary part.
  StateVector ground_state_seed(double width = 1.0) const;

  StateVector phase_rotate(const StateVector& y, double theta) const;
  StateVector phase_mode(const StateVector& y) const; // (-Im; Re), unnormalized

private:
  StateVector apply_kinetic_symbol(const Eigen::VectorXd& sym, const StateVector& y) const;

  int n_;
  double omega_, eta_, L_, depth_;
  Eigen::VectorXd V_;    // grid samples of the trap + lattice potential
  Eigen::VectorXd ksym_; // |kappa|^2 per mode
  Eigen::VectorXd psym_; // preconditioner multiplier 1 / (|kappa|^2 + 10)
  std::unique_ptr<Fft2D> fft_;
};

} // namespace nphisd
