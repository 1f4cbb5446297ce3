#include "nphisd/lifshitz_petrich.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nphisd {

LifshitzPetrichModel::LifshitzPetrichModel(int n, double eps, double alpha, double q_sq,
                                           double length)
    : n_(n), eps_(eps), alpha_(alpha), q2_(q_sq), L_(length > 0 ? length : 16.0 * M_PI) {
  if (n < 4) throw std::invalid_argument("LifshitzPetrichModel: grid too small");
  fft_ = std::make_unique<Fft2D>(n_);
  sym_.resize(n_ * n_);
  precond_.resize(n_ * n_);
  const double dk = 2.0 * M_PI / L_;
  for (int r = 0; r < n_; ++r) {
    const double ky = fft_mode(r, n_) * dk;
    for (int c = 0; c < n_; ++c) {
      const double kx = fft_mode(c, n_) * dk;
      const double k2 = kx * kx + ky * ky;
      const double s = (1.0 - k2) * (1.0 - k2) * (q2_ - k2) * (q2_ - k2);
      sym_[r * n_ + c] = s;
      precond_[r * n_ + c] = 1.0 / (std::abs(eps_ - s) + 1.0);
    }
  }
}

void LifshitzPetrichModel::check_state(const StateVector& u, const char* what) const {
  if (u.size() != dim()) throw std::invalid_argument("lifshitz_petrich: state size mismatch");
  require_finite(u, what);
  const double mean = u.mean();
  if (std::abs(mean) > 1e-10 * (1.0 + u.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("lifshitz_petrich: state must have zero mean");
  }
}

StateVector LifshitzPetrichModel::apply_symbol(const Eigen::VectorXd& sym,
                                               const StateVector& v) const {
  const int m = n_ * n_;
  std::vector<std::complex<double>> buf(m), out(m);
  for (int i = 0; i < m; ++i) buf[i] = v[i];
  fft_->forward(buf.data(), out.data());
  for (int i = 0; i < m; ++i) out[i] *= sym[i];
  fft_->backward(out.data(), buf.data());
  StateVector res(m);
  const double scale = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) res[i] = buf[i].real() * scale;
  return res;
}

double LifshitzPetrichModel::energy(const StateVector& u) const {
  check_state(u, "energy");
  const StateVector su = apply_symbol(sym_, u);
  const double n = static_cast<double>(n_);
  const double quad = 0.5 * u.dot(su) - 0.5 * eps_ * u.squaredNorm();
  const double cubic = -(alpha_ * n / 3.0) * u.array().cube().sum();
  const double quartic = 0.25 * n * n * u.array().square().square().sum();
  return quad + cubic + quartic;
}

StateVector LifshitzPetrichModel::force(const StateVector& u) const {
  check_state(u, "force");
  const double n = static_cast<double>(n_);
  StateVector f = -apply_symbol(sym_, u);
  f.array() += eps_ * u.array() + alpha_ * n * u.array().square() -
               n * n * u.array().cube();
  f.array() -= f.mean();
  return f;
}

StateVector LifshitzPetrichModel::hessian_vec(const StateVector& u, const StateVector& v) const {
  check_state(u, "hessian_vec");
  if (v.size() != dim()) throw std::invalid_argument("lifshitz_petrich: vector size mismatch");
  const double n = static_cast<double>(n_);
  StateVector vp = v;
  vp.array() -= vp.mean();
  StateVector hv = apply_symbol(sym_, vp);
  hv.array() += -eps_ * vp.array() - 2.0 * alpha_ * n * u.array() * vp.array() +
                3.0 * n * n * u.array().square() * vp.array();
  hv.array() -= hv.mean();
  return hv;
}

StateVector LifshitzPetrichModel::apply_linear(const StateVector& v) const {
  StateVector lv = -apply_symbol(sym_, v);
  lv.array() += eps_ * v.array();
  return lv;
}

StateVector LifshitzPetrichModel::apply_nonlinear(const StateVector& u) const {
  check_state(u, "apply_nonlinear");
  const double n = static_cast<double>(n_);
  StateVector nl = (alpha_ * n * u.array().square() - n * n * u.array().cube()).matrix();
  nl.array() -= nl.mean();
  return nl;
}

StateVector LifshitzPetrichModel::solve_shifted(double c, const StateVector& rhs) const {
  if (rhs.size() != dim()) throw std::invalid_argument("lifshitz_petrich: rhs size mismatch");
  const int m = n_ * n_;
  std::vector<std::complex<double>> buf(m), out(m);
  for (int i = 0; i < m; ++i) buf[i] = rhs[i];
  fft_->forward(buf.data(), out.data());
  for (int i = 0; i < m; ++i) {
    const double den = 1.0 - c * (eps_ - sym_[i]);
    if (!(std::abs(den) > 1e-12)) throw std::runtime_error("lifshitz_petrich: degenerate shift");
    out[i] /= den;
  }
  fft_->backward(out.data(), buf.data());
  StateVector res(m);
  const double scale = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) res[i] = buf[i].real() * scale;
  return res;
}

StateVector LifshitzPetrichModel::precondition(const StateVector& r) const {
  return apply_symbol(precond_, r);
}

StateVector LifshitzPetrichModel::project_admissible(const StateVector& d) const {
  StateVector out = d;
  out.array() -= out.mean();
  return out;
}

Frame LifshitzPetrichModel::excluded_directions() const {
  Frame f(dim(), 1);
  f.setConstant(1.0 / static_cast<double>(n_));
  return f;
}

StateVector LifshitzPetrichModel::state_from_field(const Eigen::VectorXd& field) const {
  if (field.size() != dim()) throw std::invalid_argument("state_from_field: size mismatch");
  StateVector u = field / static_cast<double>(n_);
  u.array() -= u.mean();
  return u;
}

Eigen::VectorXd LifshitzPetrichModel::field_from_state(const StateVector& u) const {
  return u * static_cast<double>(n_);
}

StateVector LifshitzPetrichModel::seed_pattern(const std::string& kind, double amplitude,
                                               double amplitude2) const {
  const double a = amplitude > 0 ? amplitude : 0.1;
  const double b = amplitude2 > 0 ? amplitude2 : a;
  Eigen::VectorXd field(dim());
  for (int r = 0; r < n_; ++r) {
    const double y = grid_coord(r);
    for (int c = 0; c < n_; ++c) {
      const double x = grid_coord(c);
      double v = 0.0;
      if (kind == "lam") {
        v = 2.0 * a * std::cos(x);
      } else if (kind == "oc4") {
        v = a * (std::cos(x) + std::cos(y)) + b * std::cos(x + y);
      } else {
        throw std::invalid_argument("seed_pattern: unknown kind '" + kind + "'");
      }
      field[r * n_ + c] = v;
    }
  }
  return state_from_field(field);
}

StateVector LifshitzPetrichModel::translate_state(const StateVector& u, int shift_row,
                                                  int shift_col) const {
  StateVector out(u.size());
  auto wrap = [this](int i) { return ((i % n_) + n_) % n_; };
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      out[wrap(r + shift_row) * n_ + wrap(c + shift_col)] = u[r * n_ + c];
    }
  }
  return out;
}

} // namespace nphisd
