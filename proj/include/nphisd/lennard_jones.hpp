#pragma once

#include <cstdint>

#include "nphisd/model.hpp"

namespace nphisd {

// Cluster of identical particles with pair energy r^-12 - 2 r^-6 (pair
// minimum -1 at r = 1). Coordinates are the positions of atoms 2..N with
// atom 1 pinned at the origin, so dim = 3(N-1); rigid rotations about the
// origin survive as symmetries and give a 3-dimensional null space at
// generic stationary points.
class LennardJonesCluster : public EnergyModel {
public:
  explicit LennardJonesCluster(int atoms = 7);

  int dim() const override { return 3 * (atoms_ - 1); }
  std::string name() const override;
  double energy(const StateVector& x) const override;
  StateVector force(const StateVector& x) const override;
  StateVector hessian_vec(const StateVector& x, const StateVector& v) const override;
  bool has_analytic_hessian() const override { return true; }

  int atoms() const { return atoms_; }

  // Ambient positions, 3 per atom, atom 1 (the pinned one) first.
  Eigen::VectorXd positions(const StateVector& x) const;
  StateVector state_from_positions(const Eigen::VectorXd& r) const;

  // Deterministic Gaussian cloud; start points for descent sweeps. Resamples
  // until no pair starts closer than 0.5.
  StateVector random_configuration(std::uint64_t seed, double spread = 1.2) const;

  // Applies one rotation matrix to every atom.
  StateVector rotate(const StateVector& x, const Eigen::Matrix3d& R) const;

private:
  int atoms_;
};

} // namespace nphisd
