#pragma once

#include <memory>
#include <string>

#include "nphisd/model.hpp"
#include "nphisd/spectral.hpp"

namespace nphisd {

// Two-length-scale pattern functional on a periodic n x n grid. The state
// stores the field divided by n, so plain Euclidean inner products equal
// grid-averaged L2 ones and the state Hessian has the same spectrum as the
// variational operator of the field equations. States are mean-zero; the
// constant direction is excluded from the admissible space.
//
// In field units, with S the Fourier multiplier (1-|k|^2)^2 (q^2-|k|^2)^2:
//   E = avg[ phi S phi / 2 - eps phi^2 / 2 - alpha phi^3 / 3 + phi^4 / 4 ].
class LifshitzPetrichModel : public EnergyModel {
public:
  LifshitzPetrichModel(int n = 128, double eps = 0.03, double alpha = 0.1,
                       double q_sq = 2.0, double length = 0.0); // length 0 -> 16 pi

  int dim() const override { return n_ * n_; }
  std::string name() const override { return "lifshitz_petrich"; }
  double energy(const StateVector& u) const override;
  StateVector force(const StateVector& u) const override;
  StateVector hessian_vec(const StateVector& u, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  // F = L u + N(u) with L = eps - S diagonal in Fourier space.
  bool has_linear_split() const override { return true; }
  StateVector apply_linear(const StateVector& v) const override;
  StateVector apply_nonlinear(const StateVector& u) const override;
  StateVector solve_shifted(double c, const StateVector& rhs) const override;

  bool has_preconditioner() const override { return true; }
  StateVector precondition(const StateVector& r) const override;

  StateVector project_admissible(const StateVector& d) const override;
  Frame excluded_directions() const override;

  int n() const { return n_; }
  double length() const { return L_; }
  double grid_coord(int j) const { return -0.5 * L_ + L_ * j / n_; }

  StateVector state_from_field(const Eigen::VectorXd& field) const;
  Eigen::VectorXd field_from_state(const StateVector& u) const;

  // "lam": stripes 2a cos(x). "oc4": a (cos x + cos y) + b cos(x+y) with b = a
  // unless amplitude2 is given; relaxation picks up the fourth mode pair with
  // its own amplitude, which is what makes the crystal oblique. Default a = 0.1.
  StateVector seed_pattern(const std::string& kind, double amplitude = 0.0,
                           double amplitude2 = 0.0) const;

  // Cyclic grid shift; the functional is invariant under it.
  StateVector translate_state(const StateVector& u, int shift_row, int shift_col) const;

private:
  StateVector apply_symbol(const Eigen::VectorXd& sym, const StateVector& v) const;
  void check_state(const StateVector& u, const char* what) const;

  int n_;
  double eps_, alpha_, q2_, L_;
  Eigen::VectorXd sym_;     // S(k) per mode, row-major FFT layout
  Eigen::VectorXd precond_; // 1 / (|eps - S| + 1)
  std::unique_ptr<Fft2D> fft_;
};

} // namespace nphisd
