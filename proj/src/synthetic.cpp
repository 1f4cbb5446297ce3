#include "nphisd/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nphisd {

QuadraticModel::QuadraticModel(Matrix A, std::string name)
    : A_(std::move(A)), name_(std::move(name)) {
  if (A_.rows() != A_.cols()) throw std::invalid_argument("QuadraticModel: matrix not square");
  A_ = (0.5 * (A_ + A_.transpose())).eval();
}

double QuadraticModel::energy(const StateVector& phi) const {
  return 0.5 * phi.dot(A_ * phi);
}

StateVector QuadraticModel::force(const StateVector& phi) const { return -(A_ * phi); }

StateVector QuadraticModel::hessian_vec(const StateVector&, const StateVector& v) const {
  return A_ * v;
}

DoubleWellModel::DoubleWellModel(int dim, double transverse)
    : dim_(dim), transverse_(transverse) {
  if (dim < 1) throw std::invalid_argument("DoubleWellModel: dim must be >= 1");
}

double DoubleWellModel::energy(const StateVector& phi) const {
  const double a = phi[0] * phi[0] - 1.0;
  double e = 0.25 * a * a;
  for (int i = 1; i < dim_; ++i) e += 0.5 * transverse_ * phi[i] * phi[i];
  return e;
}

StateVector DoubleWellModel::force(const StateVector& phi) const {
  StateVector f = -transverse_ * phi;
  f[0] = -(phi[0] * phi[0] - 1.0) * phi[0];
  return f;
}

StateVector DoubleWellModel::hessian_vec(const StateVector& phi, const StateVector& v) const {
  StateVector hv = transverse_ * v;
  hv[0] = (3.0 * phi[0] * phi[0] - 1.0) * v[0];
  return hv;
}

RotatingValleyModel::RotatingValleyModel(double valley, double twist, double tilt,
                                         std::vector<double> tail)
    : valley_(valley), twist_(twist), tilt_(tilt), tail_(std::move(tail)) {
  if (!(valley_ > 0.0)) throw std::invalid_argument("RotatingValleyModel: valley must be positive");
}

double RotatingValleyModel::u_of(const StateVector& phi) const {
  const double th = twist_ * phi[2];
  return -phi[0] * std::sin(th) + phi[1] * std::cos(th);
}

StateVector RotatingValleyModel::grad_u(const StateVector& phi) const {
  const double th = twist_ * phi[2];
  const double s = std::sin(th), c = std::cos(th);
  StateVector g = StateVector::Zero(dim());
  g[0] = -s;
  g[1] = c;
  g[2] = twist_ * (-phi[0] * c - phi[1] * s);
  return g;
}

double RotatingValleyModel::energy(const StateVector& phi) const {
  const double u = u_of(phi);
  double e = 0.5 * valley_ * u * u + tilt_ * phi[2];
  for (size_t i = 0; i < tail_.size(); ++i) e += 0.5 * tail_[i] * phi[3 + i] * phi[3 + i];
  return e;
}

StateVector RotatingValleyModel::force(const StateVector& phi) const {
  const double u = u_of(phi);
  StateVector g = valley_ * u * grad_u(phi);
  g[2] += tilt_;
  for (size_t i = 0; i < tail_.size(); ++i) g[3 + i] += tail_[i] * phi[3 + i];
  return -g;
}

StateVector RotatingValleyModel::hessian_vec(const StateVector& phi, const StateVector& v) const {
  const double th = twist_ * phi[2];
  const double s = std::sin(th), c = std::cos(th);
  const double u = u_of(phi);
  const StateVector gu = grad_u(phi);

  // grad^2 u has entries (1,3) = -twist*c, (2,3) = -twist*s,
  // (3,3) = twist^2 * (phi_1 s - phi_2 c); everything else vanishes
  StateVector huv = StateVector::Zero(dim());
  huv[0] = -twist_ * c * v[2];
  huv[1] = -twist_ * s * v[2];
  huv[2] = -twist_ * c * v[0] - twist_ * s * v[1] +
           twist_ * twist_ * (phi[0] * s - phi[1] * c) * v[2];

  StateVector hv = valley_ * (gu.dot(v) * gu + u * huv);
  for (size_t i = 0; i < tail_.size(); ++i) hv[3 + i] += tail_[i] * v[3 + i];
  return hv;
}

double RotatingValleyModel::frozen_direction_curvature(double phi3) const {
  const double s = std::sin(twist_ * phi3);
  return valley_ * s * s;
}

Matrix plane_rotation(int dim, int axis_a, int axis_b, double theta) {
  if (axis_a < 0 || axis_b < 0 || axis_a >= dim || axis_b >= dim || axis_a == axis_b)
    throw std::invalid_argument("plane_rotation: axes must be distinct and inside the dimension");
  Matrix R = Matrix::Identity(dim, dim);
  const double c = std::cos(theta), s = std::sin(theta);
  R(axis_a, axis_a) = c;
  R(axis_b, axis_b) = c;
  R(axis_a, axis_b) = -s;
  R(axis_b, axis_a) = s;
  return R;
}

QuadraticModel rotated_quadratic(const std::vector<double>& values, double theta, int axis_a,
                                 int axis_b) {
  const int m = static_cast<int>(values.size());
  const Matrix R = plane_rotation(m, axis_a, axis_b, theta);
  Matrix D = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) D(i, i) = values[i];
  return QuadraticModel(R.transpose() * D * R, "rotated_quadratic");
}

FlatTailModel::FlatTailModel(std::vector<double> stiffness, int flat)
    : stiffness_(std::move(stiffness)), flat_(flat) {
  if (stiffness_.empty()) throw std::invalid_argument("FlatTailModel: empty stiffness list");
  if (flat_ < 0) throw std::invalid_argument("FlatTailModel: flat dimension count negative");
}

double FlatTailModel::energy(const StateVector& phi) const {
  double e = 0.0;
  for (size_t i = 0; i < stiffness_.size(); ++i) {
    const double x = phi[i];
    e += 0.25 * x * x * x * x + 0.5 * stiffness_[i] * x * x;
  }
  return e;
}

StateVector FlatTailModel::force(const StateVector& phi) const {
  StateVector g = StateVector::Zero(dim());
  for (size_t i = 0; i < stiffness_.size(); ++i) {
    const double x = phi[i];
    g[i] = -(x * x * x + stiffness_[i] * x);
  }
  return g;
}

StateVector FlatTailModel::hessian_vec(const StateVector& phi, const StateVector& v) const {
  StateVector hv = StateVector::Zero(dim());
  for (size_t i = 0; i < stiffness_.size(); ++i) {
    hv[i] = (3.0 * phi[i] * phi[i] + stiffness_[i]) * v[i];
  }
  return hv;
}

double RingMinimumModel::energy(const StateVector& phi) const {
  const double a = phi.squaredNorm() - 1.0;
  return 0.25 * a * a;
}

StateVector RingMinimumModel::force(const StateVector& phi) const {
  return -(phi.squaredNorm() - 1.0) * phi;
}

StateVector RingMinimumModel::hessian_vec(const StateVector& phi, const StateVector& v) const {
  return (phi.squaredNorm() - 1.0) * v + 2.0 * phi.dot(v) * phi;
}

} // namespace nphisd
