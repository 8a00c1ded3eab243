#pragma once

#include <complex>
#include <vector>

namespace vpidm::detail {

/// Real DFT of arbitrary length backed by FFTW. Plans are created once per
/// length behind a mutex; execution is reentrant.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  /// in: n reals, out: n / 2 + 1 complex values.
  void forward(const double* in, std::complex<double>* out) const;
  /// in: n / 2 + 1 complex values, out: n reals, scaled by 1 / n so that
  /// inverse(forward(x)) == x.
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace vpidm::detail
