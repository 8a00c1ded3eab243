#include <catch_amalgamated.hpp>

#include <cmath>

#include "support.hpp"
#include "vpidm/diffusion.hpp"
#include "vpidm/metrics.hpp"

using namespace vpidm;
using Catch::Approx;

TEST_CASE("SI-SDR examples") {
  const auto ref = test::white(4000, 1, 0.3);
  CHECK(si_sdr(ref, ref) == kSiSdrCapDb);
  Waveform doubled = ref;
  for (auto& v : doubled.samples) v *= 2.0;
  CHECK(si_sdr(ref, doubled) == kSiSdrCapDb);

  // Remove the component along ref, then match powers.
  auto noise = test::white(4000, 2, 0.3);
  double dot = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += noise.samples[i] * ref.samples[i];
    rr += ref.samples[i] * ref.samples[i];
  }
  double nn = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    noise.samples[i] -= dot / rr * ref.samples[i];
    nn += noise.samples[i] * noise.samples[i];
  }
  Waveform est = ref;
  for (std::size_t i = 0; i < ref.size(); ++i) est.samples[i] += std::sqrt(rr / nn) * noise.samples[i];
  CHECK(std::abs(si_sdr(ref, est)) < 1e-6);
}

TEST_CASE("SI-SDR is invariant to positive scaling of the estimate") {
  const auto ref = test::white(3000, 3, 0.2);
  Waveform est = ref;
  const auto noise = test::white(3000, 4, 0.1);
  for (std::size_t i = 0; i < est.size(); ++i) est.samples[i] += noise.samples[i];
  const double base = si_sdr(ref, est);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const double scale = std::exp(6.0 * (rng.uniform() - 0.5));
    Waveform scaled = est;
    for (auto& v : scaled.samples) v *= scale;
    CHECK(si_sdr(ref, scaled) == Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("SI-SDR argument checks") {
  const auto ref = test::white(100, 1);
  CHECK_THROWS_AS(si_sdr(ref, test::white(99, 1)), ShapeMismatch);
  Waveform silent;
  silent.samples.assign(100, 0.0);
  CHECK_THROWS_AS(si_sdr(silent, ref), InvalidArgument);
  CHECK_THROWS_AS(si_sdr(ref, silent), InvalidArgument);
}

TEST_CASE("segmental SNR") {
  const auto ref = test::white(2560, 6, 0.3);
  CHECK(segmental_snr(ref, ref) == 35.0);
  Waveform est = ref;
  for (auto& v : est.samples) v *= 1.1;  // per-frame SNR 20 dB
  CHECK(segmental_snr(ref, est) == Approx(20.0).epsilon(1e-9));
  Waveform zero = ref;
  for (auto& v : zero.samples) v = 0.0;
  CHECK(segmental_snr(ref, zero) == Approx(0.0).margin(1e-12));
}

TEST_CASE("residual noise power") {
  const Schedule s;
  const auto x = test::random_spectrum(5, 7, 1);
  const auto n = test::random_spectrum(5, 7, 2);
  const auto y = x + n;
  CHECK(residual_noise_power(x, x) == 0.0);
  const double mean_n = n.squared_norm() / double(n.size());
  double prev = -1.0;
  for (double tau : {0.04, 0.2, 0.5, 0.8, 1.0}) {
    const double eta = noise_weight(s, tau);
    const double p = residual_noise_power(interpolate(x, y, s, tau), x);
    CHECK(p == Approx(eta * eta * mean_n).epsilon(1e-12));
    CHECK(p > prev);
    prev = p;
  }
  CHECK_THROWS_AS(residual_noise_power(x, ComplexSpectrum(5, 6)), ShapeMismatch);
}

TEST_CASE("log-spectral distance") {
  const auto a = test::random_spectrum(6, 9, 3);
  CHECK(log_spectral_distance(a, a) == 0.0);
  CHECK(log_spectral_distance(a, 10.0 * a) == Approx(20.0).epsilon(1e-6));

  const auto b = test::random_spectrum(6, 9, 4);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 20.0 * (std::log10(std::abs(a[i]) + 1e-8) - std::log10(std::abs(b[i]) + 1e-8));
    acc += d * d;
  }
  CHECK(std::abs(log_spectral_distance(a, b) - std::sqrt(acc / double(a.size()))) < 1e-12);
}
