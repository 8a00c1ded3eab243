#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace vpidm::detail {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// Plans live for the whole process; FFTW's planner is not thread-safe.
std::pair<fftw_plan, fftw_plan> plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<double> real(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n / 2 + 1));
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{fftw_plan_dft_r2c_1d(n, real.data(), cplx, flags),
               fftw_plan_dft_c2r_1d(n, cplx, real.data(), flags)};
    if (p.forward == nullptr || p.inverse == nullptr)
      throw std::runtime_error("FFTW failed to create a plan");
    it = cache.emplace(n, p).first;
  }
  return {it->second.forward, it->second.inverse};
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("FFT size must be at least 2");
  auto [f, i] = plans_for(n);
  forward_plan_ = f;
  inverse_plan_ = i;
}

void RealFft::forward(const double* in, std::complex<double>* out) const {
  // r2c leaves the input untouched; the const_cast only satisfies the C API.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
  // c2r overwrites its input.
  std::vector<std::complex<double>> scratch(in, in + bins());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(scratch.data()), out);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] *= scale;
}

}  // namespace vpidm::detail
