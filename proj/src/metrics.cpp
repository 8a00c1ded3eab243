#include "vpidm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vpidm {

namespace {

void require_same_length(const Waveform& a, const Waveform& b, const char* where) {
  if (a.size() != b.size())
    throw ShapeMismatch(std::string(where) + ": lengths differ (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
}

}  // namespace

double si_sdr(const Waveform& reference, const Waveform& estimate) {
  require_same_length(reference, estimate, "si_sdr");
  double ref_energy = 0.0, est_energy = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference.samples[i] * reference.samples[i];
    est_energy += estimate.samples[i] * estimate.samples[i];
    cross += reference.samples[i] * estimate.samples[i];
  }
  if (!(ref_energy > 0.0)) throw InvalidArgument("si_sdr: reference has zero power");
  if (!(est_energy > 0.0)) throw InvalidArgument("si_sdr: estimate has zero power");
  const double scale = cross / ref_energy;
  double target = 0.0, error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = scale * reference.samples[i];
    const double e = estimate.samples[i] - t;
    target += t * t;
    error += e * e;
  }
  if (error <= 0.0) return kSiSdrCapDb;
  return std::min(kSiSdrCapDb, 10.0 * std::log10(target / error));
}

double segmental_snr(const Waveform& reference, const Waveform& estimate, int frame_length) {
  require_same_length(reference, estimate, "segmental_snr");
  if (frame_length < 1) throw InvalidArgument("segmental_snr: frame_length must be >= 1");
  const auto len = static_cast<std::size_t>(frame_length);
  double sum = 0.0;
  int frames = 0;
  for (std::size_t start = 0; start + len <= reference.size(); start += len) {
    double sig = 0.0, err = 0.0;
    for (std::size_t i = start; i < start + len; ++i) {
      const double e = reference.samples[i] - estimate.samples[i];
      sig += reference.samples[i] * reference.samples[i];
      err += e * e;
    }
    if (sig <= 0.0) continue;
    const double snr = err > 0.0 ? 10.0 * std::log10(sig / err) : 35.0;
    sum += std::clamp(snr, -10.0, 35.0);
    ++frames;
  }
  if (frames == 0) throw InvalidArgument("segmental_snr: reference is silent");
  return sum / frames;
}

double residual_noise_power(const ComplexSpectrum& v_hat, const ComplexSpectrum& clean) {
  require_same_shape(v_hat, clean, "residual_noise_power");
  if (v_hat.empty()) throw InvalidArgument("residual_noise_power: empty spectrum");
  double acc = 0.0;
  for (std::size_t i = 0; i < v_hat.size(); ++i) acc += std::norm(v_hat[i] - clean[i]);
  return acc / static_cast<double>(v_hat.size());
}

double log_spectral_distance(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  require_same_shape(a, b, "log_spectral_distance");
  if (a.empty()) throw InvalidArgument("log_spectral_distance: empty spectrum");
  constexpr double kFloor = 1e-8;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 20.0 * (std::log10(std::abs(a[i]) + kFloor) - std::log10(std::abs(b[i]) + kFloor));
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace vpidm
