#include "nphisd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nphisd {

Matrix dense_hessian(const EnergyModel& model, const StateVector& phi) {
  const int m = model.dim();
  Matrix H(m, m);
  StateVector e = StateVector::Zero(m);
  for (int j = 0; j < m; ++j) {
    e[j] = 1.0;
    H.col(j) = model.hessian_vec(phi, e);
    e[j] = 0.0;
  }
  return H;
}

DenseSpectrum dense_smallest(const Matrix& H, int count, const Frame& deflate) {
  if (H.rows() != H.cols()) throw std::invalid_argument("dense_smallest: matrix not square");
  Matrix A = 0.5 * (H + H.transpose());
  if (deflate.cols() > 0) {
    // restrict to the complement of the deflation frame
    const Matrix P = Matrix::Identity(A.rows(), A.cols()) - deflate * deflate.transpose();
    A = (P * A * P).eval();
    // push the deflated directions out of the low end of the spectrum
    const double shift = A.cwiseAbs().maxCoeff() + 1.0;
    A += shift * (deflate * deflate.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_smallest: eigensolver failed");
  const int avail = static_cast<int>(A.rows() - deflate.cols());
  if (count > avail) throw std::invalid_argument("dense_smallest: count exceeds deflated dimension");
  DenseSpectrum out;
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + count);
  out.vectors = es.eigenvectors().leftCols(count);
  return out;
}

AlignmentCertificate alignment_certificate(const Frame& V, const Frame& target,
                                           const Frame& null_current,
                                           const Frame& null_anchor, double rank_tol) {
  AlignmentCertificate cert;
  const int k = static_cast<int>(V.cols());

  cert.null_rotation = sin_theta_frobenius(null_current, null_anchor);

  double rho = 0.0;
  int rank = 0;
  if (k > 0 && target.cols() > 0) {
    const Matrix cross = target.transpose() * V;
    Eigen::JacobiSVD<Matrix> svd(cross);
    const int p = static_cast<int>(svd.singularValues().size());
    for (int i = 0; i < p; ++i) {
      const double c = std::min(1.0, std::max(0.0, svd.singularValues()[i]));
      rho += 1.0 - c * c;
      if (svd.singularValues()[i] > rank_tol) ++rank;
    }
    rho += static_cast<double>(k - p); // directions with no counterpart sit at a right angle
  } else {
    rho = static_cast<double>(k);
  }
  cert.frame_misalignment = rho;
  cert.dim_intersection = rank;
  cert.certified = cert.null_rotation * cert.null_rotation + rho < 1.0;
  cert.matches = cert.certified == (rank == k);
  return cert;
}

} // namespace nphisd
