#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nphisd/model.hpp"
#include "nphisd/types.hpp"

namespace nphisd {

// Sequential Gram-Schmidt with renormalization (two projection sweeps for
// numerical hygiene). Column i of the result depends only on columns 1..i of
// the input, matching the update order of the dynamics. `against` is an
// orthonormal frame projected out of every column first. Throws
// "rank deficiency at vector i" when a normalization constant falls below
// rank_tol.
Frame gram_schmidt(const Matrix& input, const Frame& against = Frame(),
                   double rank_tol = 1e-12);

// Like gram_schmidt but silently drops dependent columns; used internally by
// the block eigensolver.
Frame orthonormalize_drop(const Matrix& input, const Frame& against = Frame(),
                          double drop_tol = 1e-10);

// max_j |<v_i, w_j>| over all frame/basis pairs; 0 for empty inputs.
double max_cross_dot(const Frame& a, const Frame& b);
// max deviation of a'a from identity.
double orthonormality_error(const Frame& a);

struct EigsOptions {
  double tol = 1e-8;       // residual target: ||H v - t v|| <= tol * max(1, |t|)
  int max_iter = 2000;
  int extra = 2;           // guard vectors carried beyond `count`
  std::uint64_t seed = 12345;
  int stagnation_window = 300; // stop when max residual stops improving
};

struct EigenResult {
  std::vector<double> eigenvalues; // ascending
  Frame vectors;                   // dim x count, orthonormal
  std::vector<double> residuals;
  std::vector<char> converged_flags;
  int iterations = 0;
  bool converged = false; // all requested pairs met the residual target
};

using SymOp = std::function<StateVector(const StateVector&)>;

// Deflated block Rayleigh-quotient iteration (LOBPCG family) for the `count`
// algebraically smallest eigenpairs of a symmetric operator restricted to the
// orthogonal complement of `deflate`. `precond` may be empty. `guess` warm
// starts the iteration subspace (extra columns are filled randomly).
EigenResult smallest_eigenpairs_op(const SymOp& op, int dim, int count,
                                   const Frame& deflate = Frame(),
                                   const SymOp& precond = SymOp(),
                                   const EigsOptions& opts = EigsOptions(),
                                   const Frame* guess = nullptr);

// Convenience wrapper over model.hessian_vec at a fixed state.
EigenResult smallest_eigenpairs(const EnergyModel& model, const StateVector& phi,
                                int count, const Frame& deflate = Frame(),
                                const EigsOptions& opts = EigsOptions(),
                                const Frame* guess = nullptr);

struct NullspaceOptions {
  double zero_threshold = 1e-9;   // absolute cut on |lambda|
  double zero_threshold_rel = 0;  // relative to max |lambda| in the probe window
  int probe_count = 0;            // 0: expected >= 0 ? expected + 4 : 8
  EigsOptions eigs;
};

// Near-zero eigenspace of the Hessian at `anchor`, frozen for one dynamics
// segment.
struct NullspaceBasis {
  Frame basis; // dim x l, orthonormal
  StateVector anchor;
  double threshold_used = 0.0;
  std::vector<double> probe_eigenvalues; // ascending window that was inspected
  std::vector<double> zero_eigenvalues;
  double smallest_nonzero_abs = 0.0; // scale used by segment checks

  int dim() const { return static_cast<int>(basis.cols()); }
};

NullspaceBasis detect_nullspace(const EnergyModel& model, const StateVector& phi,
                                int expected_dim = -1,
                                const NullspaceOptions& opts = NullspaceOptions(),
                                const Frame* guess = nullptr);

// Operator-level variant (used by the sphere machinery, where the relevant
// operator is the tangential Hessian deflated against the state itself).
NullspaceBasis detect_nullspace_op(const SymOp& op, int dim, const StateVector& anchor,
                                   const Frame& deflate, int expected_dim,
                                   const NullspaceOptions& opts,
                                   const SymOp& precond = SymOp(),
                                   const Frame* guess = nullptr);

// Sines of the principal angles between span(W) and span(What), ascending in
// angle; min(cols) entries. Singular values clamped to [0, 1].
Eigen::VectorXd principal_angle_sines(const Frame& W, const Frame& What);

// ||sin Theta||_F, the subspace-drift scalar used by the segment theory.
double sin_theta_frobenius(const Frame& W, const Frame& What);

} // namespace nphisd
