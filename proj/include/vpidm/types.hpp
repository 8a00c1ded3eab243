#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpidm {

using Complex = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (range, shape, configuration).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its layout is not supported (e.g. stereo WAV).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Mono time-domain signal. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
};

/// Throws InvalidArgument unless the waveform is non-empty, finite and has a
/// positive sample rate.
void validate(const Waveform& w);

/// L x M complex matrix (frames x frequency bins), stored row-major
/// (frame-major): element (l, m) lives at index l * bins + m.
class ComplexSpectrum {
 public:
  ComplexSpectrum() = default;
  ComplexSpectrum(std::size_t frames, std::size_t bins, Complex fill = {});

  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Complex& operator()(std::size_t frame, std::size_t bin) { return data_[frame * bins_ + bin]; }
  const Complex& operator()(std::size_t frame, std::size_t bin) const {
    return data_[frame * bins_ + bin];
  }
  Complex& operator[](std::size_t i) { return data_[i]; }
  const Complex& operator[](std::size_t i) const { return data_[i]; }

  std::span<Complex> values() { return data_; }
  std::span<const Complex> values() const { return data_; }

  bool same_shape(const ComplexSpectrum& other) const {
    return frames_ == other.frames_ && bins_ == other.bins_;
  }

  /// Sum of |v|^2 over all entries.
  double squared_norm() const;
  bool all_finite() const;

  /// Copy of frames [first, first + count).
  ComplexSpectrum frame_slice(std::size_t first, std::size_t count) const;

  ComplexSpectrum& operator+=(const ComplexSpectrum& rhs);
  ComplexSpectrum& operator-=(const ComplexSpectrum& rhs);
  ComplexSpectrum& operator*=(double k);
  ComplexSpectrum& operator*=(Complex k);

  /// this += k * x
  ComplexSpectrum& add_scaled(const ComplexSpectrum& x, double k);

  friend bool operator==(const ComplexSpectrum&, const ComplexSpectrum&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t bins_ = 0;
  std::vector<Complex> data_;
};

ComplexSpectrum operator+(ComplexSpectrum lhs, const ComplexSpectrum& rhs);
ComplexSpectrum operator-(ComplexSpectrum lhs, const ComplexSpectrum& rhs);
ComplexSpectrum operator*(double k, ComplexSpectrum x);
ComplexSpectrum operator*(ComplexSpectrum x, double k);

/// Throws ShapeMismatch naming `where` when the two spectra differ in shape.
void require_same_shape(const ComplexSpectrum& a, const ComplexSpectrum& b, const char* where);

}  // namespace vpidm
