#include "nphisd/spectral.hpp"

#include <cstring>
#include <stdexcept>

#include <fftw3.h>

namespace nphisd {

namespace {
// FFTW plan creation mutates global planner state; serialize it.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

Fft2D::Fft2D(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("Fft2D: grid must have at least 2 points per side");
  const size_t count = static_cast<size_t>(n) * static_cast<size_t>(n);
  buf_in_ = fftw_malloc(sizeof(fftw_complex) * count);
  buf_out_ = fftw_malloc(sizeof(fftw_complex) * count);
  if (!buf_in_ || !buf_out_) {
    fftw_free(buf_in_);
    fftw_free(buf_out_);
    throw std::bad_alloc();
  }
  std::lock_guard<std::mutex> lock(planner_mutex());
  // FFTW_ESTIMATE keeps planning deterministic and leaves the buffers untouched
  plan_fwd_ = fftw_plan_dft_2d(n, n, static_cast<fftw_complex*>(buf_in_),
                               static_cast<fftw_complex*>(buf_out_), FFTW_FORWARD, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_2d(n, n, static_cast<fftw_complex*>(buf_in_),
                               static_cast<fftw_complex*>(buf_out_), FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_bwd_) {
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buf_in_);
    fftw_free(buf_out_);
    throw std::runtime_error("Fft2D: plan creation failed");
  }
}

Fft2D::~Fft2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

void Fft2D::run(void* plan, const std::complex<double>* in, std::complex<double>* out) const {
  const size_t bytes = sizeof(fftw_complex) * static_cast<size_t>(n_) * static_cast<size_t>(n_);
  std::lock_guard<std::mutex> lock(mtx_);
  std::memcpy(buf_in_, in, bytes);
  fftw_execute(static_cast<fftw_plan>(plan));
  std::memcpy(out, buf_out_, bytes);
}

void Fft2D::forward(const std::complex<double>* in, std::complex<double>* out) const {
  run(plan_fwd_, in, out);
}

void Fft2D::backward(const std::complex<double>* in, std::complex<double>* out) const {
  run(plan_bwd_, in, out);
}

} // namespace nphisd
