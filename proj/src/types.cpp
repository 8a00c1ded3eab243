#include "vpidm/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vpidm {

void validate(const Waveform& w) {
  if (w.samples.empty()) throw InvalidArgument("waveform is empty");
  if (w.sample_rate <= 0) throw InvalidArgument("waveform sample rate must be positive");
  if (!std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidArgument("waveform contains non-finite samples");
}

ComplexSpectrum::ComplexSpectrum(std::size_t frames, std::size_t bins, Complex fill)
    : frames_(frames), bins_(bins), data_(frames * bins, fill) {}

double ComplexSpectrum::squared_norm() const {
  double acc = 0.0;
  for (const auto& v : data_) acc += std::norm(v);
  return acc;
}

bool ComplexSpectrum::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const Complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

ComplexSpectrum ComplexSpectrum::frame_slice(std::size_t first, std::size_t count) const {
  if (first + count > frames_) throw InvalidArgument("frame slice out of range");
  ComplexSpectrum out(count, bins_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * bins_), count * bins_,
              out.data_.begin());
  return out;
}

ComplexSpectrum& ComplexSpectrum::operator+=(const ComplexSpectrum& rhs) {
  require_same_shape(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

ComplexSpectrum& ComplexSpectrum::operator-=(const ComplexSpectrum& rhs) {
  require_same_shape(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

ComplexSpectrum& ComplexSpectrum::operator*=(double k) {
  for (auto& v : data_) v *= k;
  return *this;
}

ComplexSpectrum& ComplexSpectrum::operator*=(Complex k) {
  for (auto& v : data_) v *= k;
  return *this;
}

ComplexSpectrum& ComplexSpectrum::add_scaled(const ComplexSpectrum& x, double k) {
  require_same_shape(*this, x, "add_scaled");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += k * x.data_[i];
  return *this;
}

ComplexSpectrum operator+(ComplexSpectrum lhs, const ComplexSpectrum& rhs) { return lhs += rhs; }
ComplexSpectrum operator-(ComplexSpectrum lhs, const ComplexSpectrum& rhs) { return lhs -= rhs; }
ComplexSpectrum operator*(double k, ComplexSpectrum x) { return x *= k; }
ComplexSpectrum operator*(ComplexSpectrum x, double k) { return x *= k; }

void require_same_shape(const ComplexSpectrum& a, const ComplexSpectrum& b, const char* where) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(where) + ": shape mismatch (" + std::to_string(a.frames()) +
                        "x" + std::to_string(a.bins()) + " vs " + std::to_string(b.frames()) +
                        "x" + std::to_string(b.bins()) + ")");
  }
}

}  // namespace vpidm
