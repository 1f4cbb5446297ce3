#pragma once

#include <complex>
#include <mutex>
#include <vector>

namespace nphisd {

// Unnormalized 2-D complex transforms on an n x n row-major grid.
// backward(forward(x)) == n*n * x. Plans are created deterministically and
// calls are internally serialized, so one instance may be shared.
class Fft2D {
public:
  explicit Fft2D(int n);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int n() const { return n_; }
  void forward(const std::complex<double>* in, std::complex<double>* out) const;
  void backward(const std::complex<double>* in, std::complex<double>* out) const;

private:
  void run(void* plan, const std::complex<double>* in, std::complex<double>* out) const;

  int n_ = 0;
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
  void* buf_in_ = nullptr;
  void* buf_out_ = nullptr;
  mutable std::mutex mtx_;
};

// Signed integer mode index for FFT bin i of an n-point transform
// (0, 1, ..., n/2-1, -n/2, ..., -1).
inline int fft_mode(int i, int n) { return i <= n / 2 - 1 ? i : i - n; }

} // namespace nphisd
