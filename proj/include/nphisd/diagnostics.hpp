#pragma once

#include "nphisd/linalg.hpp"
#include "nphisd/model.hpp"

namespace nphisd {

// Assembles the full Hessian column by column through hessian_vec. Intended
// for small problems and cross-checks, not for production paths.
Matrix dense_hessian(const EnergyModel& model, const StateVector& phi);

struct DenseSpectrum {
  std::vector<double> eigenvalues; // ascending
  Frame vectors;
};

// Direct symmetric eigendecomposition, smallest `count` pairs. `deflate`
// restricts to the orthogonal complement of the given frame.
DenseSpectrum dense_smallest(const Matrix& H, int count, const Frame& deflate = Frame());

// Certificate relating a k-column frame V to a target invariant subspace in
// the presence of a drifting null basis. certified is the computable test
//   ||sin angles(null_current, null_anchor)||_F^2
//     + sum of sin^2 over the k principal angles between V and target  <  1
// and dim_intersection is the numerical rank of the projection of V onto the
// target. matches records whether the certificate agrees with rank == k.
struct AlignmentCertificate {
  double null_rotation = 0.0;
  double frame_misalignment = 0.0;
  int dim_intersection = 0;
  bool certified = false;
  bool matches = false;
};

AlignmentCertificate alignment_certificate(const Frame& V, const Frame& target,
                                           const Frame& null_current,
                                           const Frame& null_anchor,
                                           double rank_tol = 1e-8);

} // namespace nphisd
