#include "nphisd/lennard_jones.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nphisd {

namespace {

// nu(r) = r^-12 - 2 r^-6, nu'(r) = -12 (r^-13 - r^-7), nu'' = 156 r^-14 - 84 r^-8.
struct Pair {
  double nu, dnu, d2nu;
};

Pair pair_terms(double r2) {
  if (!(r2 > 1e-12)) throw std::runtime_error("singular configuration");
  const double inv2 = 1.0 / r2;
  const double inv6 = inv2 * inv2 * inv2;
  const double inv12 = inv6 * inv6;
  const double r = std::sqrt(r2);
  Pair p;
  p.nu = inv12 - 2.0 * inv6;
  p.dnu = -12.0 * (inv12 - inv6) / r;
  p.d2nu = (156.0 * inv12 - 84.0 * inv6) * inv2;
  return p;
}

} // namespace

LennardJonesCluster::LennardJonesCluster(int atoms) : atoms_(atoms) {
  if (atoms < 2) throw std::invalid_argument("LennardJonesCluster: need at least 2 atoms");
}

std::string LennardJonesCluster::name() const { return "lj" + std::to_string(atoms_); }

Eigen::VectorXd LennardJonesCluster::positions(const StateVector& x) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(3 * atoms_);
  r.tail(3 * (atoms_ - 1)) = x;
  return r;
}

StateVector LennardJonesCluster::state_from_positions(const Eigen::VectorXd& r) const {
  if (r.size() != 3 * atoms_) throw std::invalid_argument("state_from_positions: size mismatch");
  // shift so atom 1 sits at the origin
  StateVector x(3 * (atoms_ - 1));
  for (int i = 1; i < atoms_; ++i) {
    x.segment<3>(3 * (i - 1)) = r.segment<3>(3 * i) - r.segment<3>(0);
  }
  return x;
}

double LennardJonesCluster::energy(const StateVector& x) const {
  const Eigen::VectorXd r = positions(x);
  double e = 0.0;
  for (int a = 0; a < atoms_; ++a) {
    for (int b = a + 1; b < atoms_; ++b) {
      const Eigen::Vector3d d = r.segment<3>(3 * a) - r.segment<3>(3 * b);
      e += pair_terms(d.squaredNorm()).nu;
    }
  }
  return e;
}

StateVector LennardJonesCluster::force(const StateVector& x) const {
  const Eigen::VectorXd r = positions(x);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(3 * atoms_);
  for (int a = 0; a < atoms_; ++a) {
    for (int b = a + 1; b < atoms_; ++b) {
      const Eigen::Vector3d d = r.segment<3>(3 * a) - r.segment<3>(3 * b);
      const double r2 = d.squaredNorm();
      const Pair p = pair_terms(r2);
      const Eigen::Vector3d g = (p.dnu / std::sqrt(r2)) * d;
      grad.segment<3>(3 * a) += g;
      grad.segment<3>(3 * b) -= g;
    }
  }
  return -grad.tail(3 * (atoms_ - 1));
}

StateVector LennardJonesCluster::hessian_vec(const StateVector& x, const StateVector& v) const {
  const Eigen::VectorXd r = positions(x);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3 * atoms_);
  w.tail(3 * (atoms_ - 1)) = v;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * atoms_);
  for (int a = 0; a < atoms_; ++a) {
    for (int b = a + 1; b < atoms_; ++b) {
      const Eigen::Vector3d d = r.segment<3>(3 * a) - r.segment<3>(3 * b);
      const double r2 = d.squaredNorm();
      const Pair p = pair_terms(r2);
      const double rn = std::sqrt(r2);
      const Eigen::Vector3d u = d / rn;
      const Eigen::Vector3d rel = w.segment<3>(3 * a) - w.segment<3>(3 * b);
      const double ur = u.dot(rel);
      const Eigen::Vector3d hrel = p.d2nu * ur * u + (p.dnu / rn) * (rel - ur * u);
      out.segment<3>(3 * a) += hrel;
      out.segment<3>(3 * b) -= hrel;
    }
  }
  return out.tail(3 * (atoms_ - 1));
}

StateVector LennardJonesCluster::random_configuration(std::uint64_t seed, double spread) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, spread);
  const int m = dim();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    StateVector x(m);
    for (int i = 0; i < m; ++i) x[i] = gauss(rng);
    const Eigen::VectorXd r = positions(x);
    bool ok = true;
    for (int a = 0; a < atoms_ && ok; ++a) {
      for (int b = a + 1; b < atoms_ && ok; ++b) {
        if ((r.segment<3>(3 * a) - r.segment<3>(3 * b)).squaredNorm() < 0.25) ok = false;
      }
    }
    if (ok) return x;
  }
  throw std::runtime_error("random_configuration: could not draw a non-overlapping cloud");
}

StateVector LennardJonesCluster::rotate(const StateVector& x, const Eigen::Matrix3d& R) const {
  StateVector out(x.size());
  for (int i = 0; i + 2 < x.size(); i += 3) out.segment<3>(i) = R * x.segment<3>(i);
  return out;
}

} // namespace nphisd
