#include "vpidm/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"

namespace vpidm {

void StftConfig::validate() const {
  if (window_length < 2) throw InvalidArgument("STFT window length must be at least 2");
  if (hop < 1) throw InvalidArgument("STFT hop must be positive");
  if (hop > window_length) throw InvalidArgument("STFT hop must not exceed the window length");
  if (fft_size < window_length) throw InvalidArgument("FFT size must be >= window length");
  if (fixed_frames && *fixed_frames < 1) throw InvalidArgument("fixed frame count must be >= 1");
}

void CompressionConfig::validate() const {
  if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("compression scale a must be in (0, 1]");
  if (!(c > 0.0 && c <= 1.0)) throw InvalidArgument("compression exponent c must be in (0, 1]");
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n)
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

std::size_t frame_count(std::size_t samples, const StftConfig& cfg) {
  return 1 + samples / static_cast<std::size_t>(cfg.hop);
}

Complex compress(Complex z, const CompressionConfig& cfg) {
  const double mag = std::abs(z);
  if (mag == 0.0) return {0.0, 0.0};
  return std::polar(cfg.a * std::pow(mag, cfg.c), std::arg(z));
}

Complex decompress(Complex v, const CompressionConfig& cfg) {
  const double mag = std::abs(v);
  if (mag == 0.0) return {0.0, 0.0};
  return std::polar(std::pow(mag / cfg.a, 1.0 / cfg.c), std::arg(v));
}

ComplexSpectrum compress(const ComplexSpectrum& z, const CompressionConfig& cfg) {
  cfg.validate();
  ComplexSpectrum out(z.frames(), z.bins());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = compress(z[i], cfg);
  return out;
}

ComplexSpectrum decompress(const ComplexSpectrum& v, const CompressionConfig& cfg) {
  cfg.validate();
  ComplexSpectrum out(v.frames(), v.bins());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = decompress(v[i], cfg);
  return out;
}

ComplexSpectrum stft(const Waveform& w, const StftConfig& cfg) {
  validate(w);
  cfg.validate();
  const detail::RealFft fft(cfg.fft_size);
  const auto window = hann_window(cfg.window_length);
  const auto n = static_cast<std::ptrdiff_t>(w.size());
  const std::ptrdiff_t pad = cfg.window_length / 2;
  const std::size_t frames = frame_count(w.size(), cfg);

  ComplexSpectrum out(frames, static_cast<std::size_t>(cfg.bins()));
  std::vector<double> buffer(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t l = 0; l < frames; ++l) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(l) * cfg.hop - pad;
    for (int k = 0; k < cfg.window_length; ++k) {
      const std::ptrdiff_t idx = start + k;
      if (idx >= 0 && idx < n)
        buffer[static_cast<std::size_t>(k)] =
            window[static_cast<std::size_t>(k)] * w.samples[static_cast<std::size_t>(idx)];
    }
    fft.forward(buffer.data(), &out(l, 0));
  }
  return out;
}

Waveform istft(const ComplexSpectrum& z, const StftConfig& cfg, int sample_rate,
               std::optional<std::size_t> length) {
  cfg.validate();
  if (z.bins() != static_cast<std::size_t>(cfg.bins()))
    throw ShapeMismatch("istft: spectrum has " + std::to_string(z.bins()) +
                        " bins, STFT configuration expects " + std::to_string(cfg.bins()));
  if (z.frames() == 0) throw ShapeMismatch("istft: spectrum has no frames");
  if (!z.all_finite()) throw InvalidArgument("istft: spectrum contains non-finite values");

  const detail::RealFft fft(cfg.fft_size);
  const auto window = hann_window(cfg.window_length);
  const std::ptrdiff_t pad = cfg.window_length / 2;
  const std::size_t out_len = length.value_or((z.frames() - 1) * static_cast<std::size_t>(cfg.hop));

  std::vector<double> acc(out_len, 0.0);
  std::vector<double> envelope(out_len, 0.0);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t l = 0; l < z.frames(); ++l) {
    fft.inverse(&z(l, 0), frame.data());
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(l) * cfg.hop - pad;
    for (int k = 0; k < cfg.window_length; ++k) {
      const std::ptrdiff_t idx = start + k;
      if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(out_len)) continue;
      const double wk = window[static_cast<std::size_t>(k)];
      acc[static_cast<std::size_t>(idx)] += wk * frame[static_cast<std::size_t>(k)];
      envelope[static_cast<std::size_t>(idx)] += wk * wk;
    }
  }

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = envelope[i] > 1e-10 ? acc[i] / envelope[i] : 0.0;
  return out;
}

ComplexSpectrum analyze(const Waveform& w, const StftConfig& stft_cfg,
                        const CompressionConfig& comp_cfg) {
  comp_cfg.validate();
  ComplexSpectrum spec = compress(stft(w, stft_cfg), comp_cfg);
  if (!stft_cfg.fixed_frames) return spec;

  const auto target = static_cast<std::size_t>(*stft_cfg.fixed_frames);
  if (spec.frames() >= target) return spec.frame_slice(0, target);
  ComplexSpectrum padded(target, spec.bins());
  for (std::size_t l = 0; l < spec.frames(); ++l)
    for (std::size_t m = 0; m < spec.bins(); ++m) padded(l, m) = spec(l, m);
  return padded;
}

Waveform synthesize(const ComplexSpectrum& s, const StftConfig& stft_cfg,
                    const CompressionConfig& comp_cfg, int sample_rate,
                    std::optional<std::size_t> length) {
  comp_cfg.validate();
  stft_cfg.validate();
  if (s.bins() != static_cast<std::size_t>(stft_cfg.bins()))
    throw ShapeMismatch("synthesize: spectrum has " + std::to_string(s.bins()) +
                        " bins, STFT configuration expects " + std::to_string(stft_cfg.bins()));
  return istft(decompress(s, comp_cfg), stft_cfg, sample_rate, length);
}

double signal_power(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : w.samples) acc += v * v;
  return acc / static_cast<double>(w.samples.size());
}

double snr_noise_gain(double clean_power, double noise_power, double snr_db) {
  if (!std::isfinite(snr_db)) throw InvalidArgument("SNR must be finite");
  if (!(clean_power > 0.0)) throw InvalidArgument("clean signal has zero power");
  if (!(noise_power > 0.0)) throw InvalidArgument("noise signal has zero power");
  return std::sqrt(clean_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
}

Waveform mix_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  validate(clean);
  validate(noise);
  if (clean.sample_rate != noise.sample_rate)
    throw InvalidArgument("mix_snr: clean and noise sample rates differ");

  Waveform aligned{std::vector<double>(clean.size()), clean.sample_rate};
  for (std::size_t i = 0; i < clean.size(); ++i)
    aligned.samples[i] = noise.samples[i % noise.size()];

  const double k = snr_noise_gain(signal_power(clean), signal_power(aligned), snr_db);
  Waveform out{std::vector<double>(clean.size()), clean.sample_rate};
  for (std::size_t i = 0; i < clean.size(); ++i)
    out.samples[i] = clean.samples[i] + k * aligned.samples[i];
  return out;
}

}  // namespace vpidm
