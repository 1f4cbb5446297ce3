#include "nphisd/gross_pitaevskii.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nphisd {

GrossPitaevskiiModel::GrossPitaevskiiModel(int n, double omega, double eta, double length,
                                           double lattice_depth)
    : n_(n), omega_(omega), eta_(eta), L_(length > 0 ? length : 4.0 * M_PI),
      depth_(lattice_depth) {
  if (n < 4) throw std::invalid_argument("GrossPitaevskiiModel: grid too small");
  fft_ = std::make_unique<Fft2D>(n_);
  const int m = n_ * n_;
  V_.resize(m);
  ksym_.resize(m);
  const double dk = 2.0 * M_PI / L_;
  for (int r = 0; r < n_; ++r) {
    const double y = grid_coord(r);
    const double ky = fft_mode(r, n_) * dk;
    for (int c = 0; c < n_; ++c) {
      const double x = grid_coord(c);
      const double kx = fft_mode(c, n_) * dk;
      V_[r * n_ + c] = 0.5 * omega_ * (x * x + y * y) + depth_ * (std::cos(x) + std::cos(y));
      ksym_[r * n_ + c] = kx * kx + ky * ky;
    }
  }
  psym_ = (ksym_.array() + 10.0).inverse();
}

// Applies a real Fourier multiplier to both components through one complex
// transform: the multiplier commutes with the complex structure.
StateVector GrossPitaevskiiModel::apply_kinetic_symbol(const Eigen::VectorXd& sym,
                                                       const StateVector& y) const {
  const int m = n_ * n_;
  std::vector<std::complex<double>> buf(m), out(m);
  for (int i = 0; i < m; ++i) buf[i] = {y[i], y[m + i]};
  fft_->forward(buf.data(), out.data());
  for (int i = 0; i < m; ++i) out[i] *= sym[i];
  fft_->backward(out.data(), buf.data());
  StateVector res(2 * m);
  const double scale = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    res[i] = buf[i].real() * scale;
    res[m + i] = buf[i].imag() * scale;
  }
  return res;
}

double GrossPitaevskiiModel::energy(const StateVector& y) const {
  if (y.size() != dim()) throw std::invalid_argument("gross_pitaevskii: state size mismatch");
  require_finite(y, "energy");
  const int m = n_ * n_;
  const StateVector ky = apply_kinetic_symbol(ksym_, y);
  double e = 0.5 * y.dot(ky);
  const double nn = static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    const double r2 = y[i] * y[i] + y[m + i] * y[m + i];
    e += V_[i] * r2 + 0.5 * eta_ * nn * r2 * r2;
  }
  return e;
}

StateVector GrossPitaevskiiModel::force(const StateVector& y) const {
  if (y.size() != dim()) throw std::invalid_argument("gross_pitaevskii: state size mismatch");
  require_finite(y, "force");
  const int m = n_ * n_;
  StateVector f = -apply_kinetic_symbol(ksym_, y);
  const double nn = static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    const double r2 = y[i] * y[i] + y[m + i] * y[m + i];
    const double w = 2.0 * V_[i] + 2.0 * eta_ * nn * r2;
    f[i] -= w * y[i];
    f[m + i] -= w * y[m + i];
  }
  return f;
}

StateVector GrossPitaevskiiModel::hessian_vec(const StateVector& y, const StateVector& v) const {
  if (y.size() != dim() || v.size() != dim()) {
    throw std::invalid_argument("gross_pitaevskii: size mismatch");
  }
  const int m = n_ * n_;
  StateVector hv = apply_kinetic_symbol(ksym_, v);
  const double nn = static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    const double a = y[i], b = y[m + i];
    const double r2 = a * a + b * b;
    const double p = v[i], q = v[m + i];
    hv[i] += 2.0 * V_[i] * p + 2.0 * eta_ * nn * ((r2 + 2.0 * a * a) * p + 2.0 * a * b * q);
    hv[m + i] += 2.0 * V_[i] * q + 2.0 * eta_ * nn * (2.0 * a * b * p + (r2 + 2.0 * b * b) * q);
  }
  return hv;
}

StateVector GrossPitaevskiiModel::apply_linear(const StateVector& v) const {
  return -apply_kinetic_symbol(ksym_, v);
}

StateVector GrossPitaevskiiModel::apply_nonlinear(const StateVector& y) const {
  const int m = n_ * n_;
  StateVector f(2 * m);
  const double nn = static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    const double r2 = y[i] * y[i] + y[m + i] * y[m + i];
    const double w = 2.0 * V_[i] + 2.0 * eta_ * nn * r2;
    f[i] = -w * y[i];
    f[m + i] = -w * y[m + i];
  }
  return f;
}

StateVector GrossPitaevskiiModel::solve_shifted(double c, const StateVector& rhs) const {
  if (rhs.size() != dim()) throw std::invalid_argument("gross_pitaevskii: rhs size mismatch");
  const int m = n_ * n_;
  std::vector<std::complex<double>> buf(m), out(m);
  for (int i = 0; i < m; ++i) buf[i] = {rhs[i], rhs[m + i]};
  fft_->forward(buf.data(), out.data());
  for (int i = 0; i < m; ++i) out[i] /= (1.0 + c * ksym_[i]);
  fft_->backward(out.data(), buf.data());
  StateVector res(2 * m);
  const double scale = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    res[i] = buf[i].real() * scale;
    res[m + i] = buf[i].imag() * scale;
  }
  return res;
}

StateVector GrossPitaevskiiModel::precondition(const StateVector& r) const {
  return apply_kinetic_symbol(psym_, r);
}

StateVector GrossPitaevskiiModel::ground_state_seed(double width) const {
  const int m = n_ * n_;
  StateVector y = StateVector::Zero(2 * m);
  for (int r = 0; r < n_; ++r) {
    const double yy = grid_coord(r);
    for (int c = 0; c < n_; ++c) {
      const double xx = grid_coord(c);
      y[r * n_ + c] = std::exp(-(xx * xx + yy * yy) / (2.0 * width * width));
    }
  }
  y /= y.norm();
  return y;
}

StateVector GrossPitaevskiiModel::phase_rotate(const StateVector& y, double theta) const {
  const int m = n_ * n_;
  StateVector out(2 * m);
  const double c = std::cos(theta), s = std::sin(theta);
  for (int i = 0; i < m; ++i) {
    out[i] = c * y[i] - s * y[m + i];
    out[m + i] = s * y[i] + c * y[m + i];
  }
  return out;
}

StateVector GrossPitaevskiiModel::phase_mode(const StateVector& y) const {
  const int m = n_ * n_;
  StateVector out(2 * m);
  out.head(m) = -y.tail(m);
  out.tail(m) = y.head(m);
  return out;
}

} // namespace nphisd
