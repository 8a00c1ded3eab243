#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "vpidm/types.hpp"

namespace vpidm::test {

inline ComplexSpectrum random_spectrum(std::size_t frames, std::size_t bins, std::uint64_t seed,
                                       double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, scale);
  ComplexSpectrum x(frames, bins);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {n(gen), n(gen)};
  return x;
}

inline Waveform sine(double freq_hz, std::size_t samples, int rate = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(samples);
  for (std::size_t n = 0; n < samples; ++n)
    w.samples[n] = amp * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(n) / rate);
  return w;
}

inline Waveform white(std::size_t samples, std::uint64_t seed, double sd = 0.1, int rate = 16000) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, sd);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(samples);
  for (auto& v : w.samples) v = n(gen);
  return w;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vpidm-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace vpidm::test
