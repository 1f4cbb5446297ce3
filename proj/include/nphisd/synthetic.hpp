#pragma once

#include <vector>

#include "nphisd/model.hpp"

namespace nphisd {

// E = 1/2 phi' A phi for a fixed symmetric A.
class QuadraticModel : public EnergyModel {
public:
  explicit QuadraticModel(Matrix A, std::string name = "quadratic");

  int dim() const override { return static_cast<int>(A_.rows()); }
  std::string name() const override { return name_; }
  double energy(const StateVector& phi) const override;
  StateVector force(const StateVector& phi) const override;
  StateVector hessian_vec(const StateVector& phi, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  const Matrix& matrix() const { return A_; }

private:
  Matrix A_;
  std::string name_;
};

// Rotation by theta in the (axis_a, axis_b) coordinate plane, identity on
// every other coordinate.
Matrix plane_rotation(int dim, int axis_a, int axis_b, double theta);

// H(theta) = R(theta)^T diag(values) R(theta) with R = plane_rotation. The
// spectrum stays fixed while the eigenvectors turn, so a direction frozen at
// theta = 0 against eigenvalue values[axis_a] sees curvature
//   values[axis_a] cos^2(theta) + values[axis_b] sin^2(theta).
QuadraticModel rotated_quadratic(const std::vector<double>& values, double theta, int axis_a = 0,
                                 int axis_b = 1);

// E = (phi_1^2 - 1)^2 / 4 + transverse/2 * sum_{i >= 2} phi_i^2.
// One index-1 point at the origin, two minima at phi_1 = +-1.
class DoubleWellModel : public EnergyModel {
public:
  explicit DoubleWellModel(int dim = 2, double transverse = 1.0);

  int dim() const override { return dim_; }
  std::string name() const override { return "double_well"; }
  double energy(const StateVector& phi) const override;
  StateVector force(const StateVector& phi) const override;
  StateVector hessian_vec(const StateVector& phi, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

private:
  int dim_;
  double transverse_;
};

// A flat valley whose hard direction turns as the state moves along
// coordinate 3:
//   E = valley/2 * u^2 + tilt * phi_3 + sum_i tail_i/2 * phi_{4+i}^2,
//   u = -phi_1 sin(twist * phi_3) + phi_2 cos(twist * phi_3).
// On the valley floor (u = 0, phi_1 = phi_2 = 0) the Hessian is exactly the
// rank-1 rotated stiffness plus the diagonal tail, so a direction frozen at
// phi_3 = 0 gains curvature valley * sin(twist * phi_3)^2 in closed form.
class RotatingValleyModel : public EnergyModel {
public:
  RotatingValleyModel(double valley, double twist, double tilt, std::vector<double> tail);

  int dim() const override { return 3 + static_cast<int>(tail_.size()); }
  std::string name() const override { return "rotating_valley"; }
  double energy(const StateVector& phi) const override;
  StateVector force(const StateVector& phi) const override;
  StateVector hessian_vec(const StateVector& phi, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  double frozen_direction_curvature(double phi3) const;

private:
  StateVector grad_u(const StateVector& phi) const;
  double u_of(const StateVector& phi) const;

  double valley_;
  double twist_;
  double tilt_;
  std::vector<double> tail_;
};

// E = sum over the first dim() - flat coordinates of
//   phi_i^4 / 4 + stiffness_i/2 * phi_i^2;
// the last `flat` coordinates never enter the energy, so the Hessian carries
// those coordinate directions as an exact null space at every state while the
// remaining curvatures 3 phi_i^2 + stiffness_i move with the state.
class FlatTailModel : public EnergyModel {
public:
  FlatTailModel(std::vector<double> stiffness, int flat);

  int dim() const override { return static_cast<int>(stiffness_.size()) + flat_; }
  std::string name() const override { return "flat_tail"; }
  double energy(const StateVector& phi) const override;
  StateVector force(const StateVector& phi) const override;
  StateVector hessian_vec(const StateVector& phi, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  int flat_dims() const { return flat_; }

private:
  std::vector<double> stiffness_;
  int flat_;
};

// E = (|phi|^2 - 1)^2 / 4: every point of the unit sphere is a minimum with
// an (m-1)-dimensional null space. Coordinate-free degeneracy for exercising
// the null-capture machinery.
class RingMinimumModel : public EnergyModel {
public:
  explicit RingMinimumModel(int dim) : dim_(dim) {}

  int dim() const override { return dim_; }
  std::string name() const override { return "ring_minimum"; }
  double energy(const StateVector& phi) const override;
  StateVector force(const StateVector& phi) const override;
  StateVector hessian_vec(const StateVector& phi, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

private:
  int dim_;
};

} // namespace nphisd
