#include "nphisd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nphisd {

void require_finite(const StateVector& v, const char* what) {
  if (!v.allFinite()) throw std::runtime_error(std::string("model returned non-finite value in ") + what);
}

StateVector EnergyModel::hessian_vec(const StateVector& phi, const StateVector& v) const {
  return hessian_vec_fd_fallback(*this, phi, v);
}

StateVector EnergyModel::apply_linear(const StateVector&) const {
  throw std::runtime_error("semi-implicit requires split: model '" + name() + "' has no linear part");
}

StateVector EnergyModel::apply_nonlinear(const StateVector&) const {
  throw std::runtime_error("semi-implicit requires split: model '" + name() + "' has no nonlinear part");
}

StateVector EnergyModel::solve_shifted(double, const StateVector&) const {
  throw std::runtime_error("semi-implicit requires split: model '" + name() + "' has no shifted solve");
}

StateVector EnergyModel::precondition(const StateVector& r) const { return r; }

double finite_difference_force_check(const EnergyModel& model, const StateVector& phi,
                                     double h, std::uint64_t seed) {
  const int m = model.dim();
  if (phi.size() != m) throw std::invalid_argument("finite_difference_force_check: dimension mismatch");
  if (h <= 0.0) h = default_fd_step(phi);

  const StateVector f = model.force(phi);
  require_finite(f, "force");

  std::vector<int> coords(m);
  std::iota(coords.begin(), coords.end(), 0);
  if (m > 256) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(64);
  }

  double worst = 0.0;
  for (int i : coords) {
    // probe along the admissible image of the coordinate direction so models
    // with a conserved linear quantity are tested inside their state space
    StateVector d = StateVector::Zero(m);
    d[i] = 1.0;
    d = model.project_admissible(d);
    const double dn = d.norm();
    if (dn < 0.5) continue;
    const double ep = model.energy(phi + h * d);
    const double em = model.energy(phi - h * d);
    const double fd = -(ep - em) / (2.0 * h);
    const double fi = f.dot(d);
    worst = std::max(worst, std::abs(fd - fi) / (1.0 + std::abs(fi)));
  }
  return worst;
}

StateVector hessian_vec_fd_fallback(const EnergyModel& model, const StateVector& phi,
                                    const StateVector& v, double h) {
  const double nv = v.norm();
  if (nv == 0.0) return StateVector::Zero(phi.size());
  if (h <= 0.0) h = default_fd_step(phi);
  const StateVector u = v / nv;
  const StateVector fp = model.force(phi + h * u);
  const StateVector fm = model.force(phi - h * u);
  StateVector hv = (fm - fp) * (nv / (2.0 * h));
  require_finite(hv, "hessian_vec fallback");
  if (hv.isZero(0.0) && !fp.isZero(0.0)) {
    std::fprintf(stderr, "nphisd: warning: finite-difference step underflow in hessian_vec\n");
  }
  return hv;
}

} // namespace nphisd
