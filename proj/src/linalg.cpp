#include "nphisd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace nphisd {

namespace {

void project_out(StateVector& r, const Frame& frame) {
  if (frame.cols() > 0) r.noalias() -= frame * (frame.transpose() * r);
}

} // namespace

Frame gram_schmidt(const Matrix& input, const Frame& against, double rank_tol) {
  const Eigen::Index m = input.rows();
  const Eigen::Index k = input.cols();
  Frame out(m, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    StateVector r = input.col(i);
    for (int pass = 0; pass < 2; ++pass) {
      project_out(r, against);
      for (Eigen::Index j = 0; j < i; ++j) r.noalias() -= out.col(j) * out.col(j).dot(r);
    }
    const double y = r.norm();
    if (!(y > rank_tol)) {
      throw std::runtime_error("rank deficiency at vector " + std::to_string(i) +
                               " (normalization constant " + std::to_string(y) + ")");
    }
    out.col(i) = r / y;
  }
  return out;
}

Frame orthonormalize_drop(const Matrix& input, const Frame& against, double drop_tol) {
  const Eigen::Index m = input.rows();
  Frame out(m, input.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < input.cols(); ++i) {
    StateVector r = input.col(i);
    const double n0 = r.norm();
    if (n0 == 0.0) continue;
    r /= n0;
    for (int pass = 0; pass < 2; ++pass) {
      project_out(r, against);
      for (Eigen::Index j = 0; j < kept; ++j) r.noalias() -= out.col(j) * out.col(j).dot(r);
    }
    const double y = r.norm();
    if (y > drop_tol) out.col(kept++) = r / y;
  }
  out.conservativeResize(Eigen::NoChange, kept);
  return out;
}

double max_cross_dot(const Frame& a, const Frame& b) {
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  return (a.transpose() * b).cwiseAbs().maxCoeff();
}

double orthonormality_error(const Frame& a) {
  if (a.cols() == 0) return 0.0;
  Matrix g = a.transpose() * a;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

namespace {

struct RitzStep {
  Matrix basis_coeff; // columns: Ritz vectors expressed in the supplied basis
  Eigen::VectorXd values;
};

// Rayleigh-Ritz on span(S) given A = S'HS and G = S'S, with whitening that
// drops near-dependent directions.
bool rayleigh_ritz(const Matrix& A, const Matrix& G, int want, RitzStep& out) {
  Eigen::SelfAdjointEigenSolver<Matrix> gs(G);
  if (gs.info() != Eigen::Success) return false;
  const double dmax = gs.eigenvalues().maxCoeff();
  if (!(dmax > 0)) return false;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < gs.eigenvalues().size(); ++i) {
    if (gs.eigenvalues()[i] > 1e-10 * dmax) keep.push_back(i);
  }
  if (static_cast<int>(keep.size()) < want) return false;
  Matrix B(G.rows(), keep.size());
  for (size_t j = 0; j < keep.size(); ++j) {
    B.col(j) = gs.eigenvectors().col(keep[j]) / std::sqrt(gs.eigenvalues()[keep[j]]);
  }
  Matrix At = B.transpose() * A * B;
  At = 0.5 * (At + At.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(At);
  if (es.info() != Eigen::Success) return false;
  out.basis_coeff = B * es.eigenvectors().leftCols(want);
  out.values = es.eigenvalues().head(want);
  return true;
}

} // namespace

EigenResult smallest_eigenpairs_op(const SymOp& op, int dim, int count,
                                   const Frame& deflate, const SymOp& precond,
                                   const EigsOptions& opts, const Frame* guess) {
  const int free_dim = dim - static_cast<int>(deflate.cols());
  if (count < 1) throw std::invalid_argument("smallest_eigenpairs: count must be >= 1");
  if (count > free_dim) {
    throw std::invalid_argument("smallest_eigenpairs: count exceeds deflated dimension");
  }

  auto apply = [&](const StateVector& v) {
    StateVector w = op(v);
    require_finite(w, "eigensolver operator");
    project_out(w, deflate);
    return w;
  };
  auto apply_block = [&](const Matrix& X) {
    Matrix HX(dim, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) HX.col(j) = apply(X.col(j));
    return HX;
  };

  const int b = std::min(count + std::max(opts.extra, 0), free_dim);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Index seeded = guess ? std::min<Eigen::Index>(guess->cols(), b) : 0;
  Matrix X(dim, b);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix raw(dim, b);
    if (seeded > 0) raw.leftCols(seeded) = guess->leftCols(seeded);
    for (Eigen::Index j = attempt == 0 ? seeded : 0; j < b; ++j)
      for (int i = 0; i < dim; ++i) raw(i, j) = gauss(rng);
    X = orthonormalize_drop(raw, deflate);
    if (X.cols() == b) break;
  }
  if (X.cols() != b) throw std::runtime_error("smallest_eigenpairs: could not seed iteration subspace");

  Matrix HX = apply_block(X);
  Matrix P(dim, 0), HP(dim, 0);

  EigenResult res;
  res.eigenvalues.assign(count, 0.0);
  res.residuals.assign(count, 0.0);
  res.converged_flags.assign(count, 0);

  Eigen::VectorXd theta(b);
  for (int j = 0; j < b; ++j) theta[j] = X.col(j).dot(HX.col(j));

  double best_worst = std::numeric_limits<double>::infinity();
  int since_improve = 0;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    res.iterations = iter;
    Matrix R = HX - X * theta.asDiagonal();

    bool all_ok = true;
    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
      const double rn = R.col(j).norm();
      res.residuals[j] = rn;
      const double target = opts.tol * std::max(1.0, std::abs(theta[j]));
      res.converged_flags[j] = rn <= target;
      if (!res.converged_flags[j]) all_ok = false;
      worst = std::max(worst, rn / std::max(1.0, std::abs(theta[j])));
    }
    for (int j = 0; j < count; ++j) res.eigenvalues[j] = theta[j];
    if (all_ok) {
      res.converged = true;
      break;
    }
    if (worst < best_worst * 0.995) {
      best_worst = worst;
      since_improve = 0;
    } else if (++since_improve >= opts.stagnation_window) {
      break; // residuals have hit their floor; report what we have
    }

    Matrix W(dim, b);
    for (int j = 0; j < b; ++j) {
      StateVector w = precond ? precond(R.col(j)) : StateVector(R.col(j));
      project_out(w, deflate);
      const double wn = w.norm();
      W.col(j) = wn > 0 ? StateVector(w / wn) : StateVector::Zero(dim);
    }
    Matrix HW = apply_block(W);

    const Eigen::Index ns = X.cols() + W.cols() + P.cols();
    Matrix S(dim, ns), HS(dim, ns);
    S << X, W, P;
    HS << HX, HW, HP;
    Matrix A = S.transpose() * HS;
    A = 0.5 * (A + A.transpose()).eval();
    Matrix G = S.transpose() * S;

    RitzStep step;
    if (!rayleigh_ritz(A, G, b, step)) {
      // fall back to a basis without the P block
      const Eigen::Index ns2 = X.cols() + W.cols();
      Matrix A2 = A.topLeftCorner(ns2, ns2), G2 = G.topLeftCorner(ns2, ns2);
      if (!rayleigh_ritz(A2, G2, b, step)) break;
      S.conservativeResize(Eigen::NoChange, ns2);
      HS.conservativeResize(Eigen::NoChange, ns2);
    }

    Matrix Xn = S * step.basis_coeff;
    Matrix HXn = HS * step.basis_coeff;
    // implicit P: the part of the new block outside span(X)
    Matrix Cp = step.basis_coeff;
    Cp.topRows(X.cols()).setZero();
    Matrix Pn = S * Cp;
    Matrix HPn = HS * Cp;

    // normalize X and keep basis clean w.r.t. the deflation frame
    for (int j = 0; j < b; ++j) {
      StateVector x = Xn.col(j);
      project_out(x, deflate);
      const double xn = x.norm();
      if (xn > 0) {
        Xn.col(j) = x / xn;
        HXn.col(j) /= xn;
      }
    }
    X = Xn;
    HX = HXn;
    for (int j = 0; j < b; ++j) theta[j] = X.col(j).dot(HX.col(j));

    // keep P columns bounded
    Eigen::Index pk = 0;
    for (Eigen::Index j = 0; j < Pn.cols(); ++j) {
      const double pn = Pn.col(j).norm();
      if (pn > 1e-12) {
        Pn.col(pk) = Pn.col(j) / pn;
        HPn.col(pk) = HPn.col(j) / pn;
        ++pk;
      }
    }
    P = Pn.leftCols(pk);
    HP = HPn.leftCols(pk);
  }

  // Recombination drift in HX scales with ||H||; a fresh apply keeps the
  // reported eigenvalues at operator accuracy even for stiff spectra.
  HX = apply_block(X);
  for (int j = 0; j < b; ++j) theta[j] = X.col(j).dot(HX.col(j));

  // final ordering and extraction of the requested pairs
  std::vector<int> order(b);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int c) { return theta[a] < theta[c]; });
  Frame V(dim, count);
  for (int j = 0; j < count; ++j) {
    const int src = order[j];
    V.col(j) = X.col(src);
    res.eigenvalues[j] = theta[src];
    res.residuals[j] = (HX.col(src) - theta[src] * X.col(src)).norm();
    res.converged_flags[j] =
        res.residuals[j] <= opts.tol * std::max(1.0, std::abs(theta[src]));
  }
  res.vectors = orthonormalize_drop(V, deflate);
  if (res.vectors.cols() != count) {
    throw std::runtime_error("smallest_eigenpairs: frame collapse in returned eigenvectors");
  }
  res.converged = std::all_of(res.converged_flags.begin(), res.converged_flags.end(),
                              [](char c) { return c != 0; });
  return res;
}

namespace {

// Directions a model excludes from its state space always join the caller's
// deflation frame, so spectra are taken on the admissible subspace.
Frame with_excluded(const EnergyModel& model, const Frame& deflate) {
  const Frame excl = model.excluded_directions();
  if (excl.cols() == 0) return deflate;
  if (deflate.cols() == 0) return excl;
  Frame all(excl.rows(), excl.cols() + deflate.cols());
  all << excl, deflate;
  return all;
}

} // namespace

EigenResult smallest_eigenpairs(const EnergyModel& model, const StateVector& phi,
                                int count, const Frame& deflate, const EigsOptions& opts,
                                const Frame* guess) {
  SymOp op = [&](const StateVector& v) { return model.hessian_vec(phi, v); };
  SymOp pre;
  if (model.has_preconditioner()) {
    pre = [&](const StateVector& r) { return model.precondition(r); };
  }
  return smallest_eigenpairs_op(op, model.dim(), count, with_excluded(model, deflate), pre, opts,
                                guess);
}

namespace {

NullspaceBasis build_nullspace(const EigenResult& eigs, const StateVector& anchor,
                               const NullspaceOptions& opts) {
  double max_abs = 0.0;
  for (double v : eigs.eigenvalues) max_abs = std::max(max_abs, std::abs(v));
  const double thr = std::max(opts.zero_threshold, opts.zero_threshold_rel * max_abs);

  std::vector<int> zero_idx;
  for (size_t i = 0; i < eigs.eigenvalues.size(); ++i) {
    if (std::abs(eigs.eigenvalues[i]) <= thr) zero_idx.push_back(static_cast<int>(i));
  }
  if (zero_idx.size() == eigs.eigenvalues.size()) {
    throw std::runtime_error(
        "probe window too small: every probed eigenvalue sits below the zero threshold");
  }

  NullspaceBasis ns;
  ns.anchor = anchor;
  ns.threshold_used = thr;
  ns.probe_eigenvalues = eigs.eigenvalues;
  ns.basis = Frame(anchor.size(), zero_idx.size());
  for (size_t j = 0; j < zero_idx.size(); ++j) {
    ns.basis.col(j) = eigs.vectors.col(zero_idx[j]);
    ns.zero_eigenvalues.push_back(eigs.eigenvalues[zero_idx[j]]);
  }
  if (zero_idx.size() > 1) ns.basis = gram_schmidt(ns.basis);

  double smallest_nonzero = std::numeric_limits<double>::infinity();
  for (double v : eigs.eigenvalues) {
    if (std::abs(v) > thr) smallest_nonzero = std::min(smallest_nonzero, std::abs(v));
  }
  ns.smallest_nonzero_abs = smallest_nonzero;
  return ns;
}

} // namespace

NullspaceBasis detect_nullspace(const EnergyModel& model, const StateVector& phi,
                                int expected_dim, const NullspaceOptions& opts,
                                const Frame* guess) {
  SymOp op = [&](const StateVector& v) { return model.hessian_vec(phi, v); };
  SymOp pre;
  if (model.has_preconditioner()) {
    pre = [&](const StateVector& r) { return model.precondition(r); };
  }
  return detect_nullspace_op(op, model.dim(), phi, with_excluded(model, Frame()), expected_dim,
                             opts, pre, guess);
}

NullspaceBasis detect_nullspace_op(const SymOp& op, int dim, const StateVector& anchor,
                                   const Frame& deflate, int expected_dim,
                                   const NullspaceOptions& opts, const SymOp& precond,
                                   const Frame* guess) {
  int probe = opts.probe_count > 0 ? opts.probe_count
                                   : (expected_dim >= 0 ? expected_dim + 4 : 8);
  probe = std::min(probe, dim - static_cast<int>(deflate.cols()));
  if (probe < 1) throw std::invalid_argument("detect_nullspace: no free directions to probe");
  EigenResult eigs = smallest_eigenpairs_op(op, dim, probe, deflate, precond, opts.eigs, guess);
  return build_nullspace(eigs, anchor, opts);
}

Eigen::VectorXd principal_angle_sines(const Frame& W, const Frame& What) {
  const Eigen::Index k = std::min(W.cols(), What.cols());
  if (k == 0) return Eigen::VectorXd(0);
  Matrix cross = W.transpose() * What;
  Eigen::JacobiSVD<Matrix> svd(cross);
  Eigen::VectorXd sines(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, std::max(0.0, svd.singularValues()[i]));
    sines[i] = std::sqrt(std::max(0.0, 1.0 - c * c));
  }
  // singular values descend, so angles already ascend
  return sines;
}

double sin_theta_frobenius(const Frame& W, const Frame& What) {
  return principal_angle_sines(W, What).norm();
}

} // namespace nphisd
