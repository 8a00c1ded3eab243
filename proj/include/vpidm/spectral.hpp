#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "vpidm/types.hpp"

namespace vpidm {

/// Short-time Fourier transform layout. Frames are centred: the signal is
/// zero-padded by window_length / 2 on both sides, so frame l is centred on
/// sample l * hop and a D-sample signal yields 1 + D / hop frames.
struct StftConfig {
  int window_length = 510;
  int hop = 128;
  int fft_size = 510;  ///< true DFT length; bins = fft_size / 2 + 1
  /// When set, analyze() zero-pads or crops (from the start) to this many frames.
  std::optional<int> fixed_frames;

  int bins() const { return fft_size / 2 + 1; }
  void validate() const;
};

/// Magnitude compression v = a |z|^c e^{j angle z}.
struct CompressionConfig {
  double a = 0.15;
  double c = 0.5;

  void validate() const;
};

/// Periodic Hann window of the given length.
std::vector<double> hann_window(int length);

/// Number of frames analyze() produces for `samples` input samples (ignoring
/// fixed-length mode).
std::size_t frame_count(std::size_t samples, const StftConfig& cfg);

Complex compress(Complex z, const CompressionConfig& cfg);
Complex decompress(Complex v, const CompressionConfig& cfg);
ComplexSpectrum compress(const ComplexSpectrum& z, const CompressionConfig& cfg);
ComplexSpectrum decompress(const ComplexSpectrum& v, const CompressionConfig& cfg);

/// Plain (uncompressed) STFT with a Hann analysis window.
ComplexSpectrum stft(const Waveform& w, const StftConfig& cfg);

/// Weighted overlap-add inverse of stft(): Hann synthesis window, normalized
/// by the summed squared-window envelope. `length` defaults to
/// (frames - 1) * hop.
Waveform istft(const ComplexSpectrum& z, const StftConfig& cfg, int sample_rate,
               std::optional<std::size_t> length = std::nullopt);

/// Compressed STFT: a |STFT(w)|^c e^{j angle STFT(w)}.
ComplexSpectrum analyze(const Waveform& w, const StftConfig& stft_cfg = {},
                        const CompressionConfig& comp_cfg = {});

/// Inverse of analyze(): decompress element-wise, then istft().
Waveform synthesize(const ComplexSpectrum& s, const StftConfig& stft_cfg = {},
                    const CompressionConfig& comp_cfg = {}, int sample_rate = 16000,
                    std::optional<std::size_t> length = std::nullopt);

/// Mean of squared samples.
double signal_power(const Waveform& w);

/// clean + k * noise with k chosen so that 10 log10(P_clean / P_{k noise})
/// equals snr_db. The noise is looped or trimmed to the clean length.
Waveform mix_snr(const Waveform& clean, const Waveform& noise, double snr_db);

/// Noise gain used by mix_snr().
double snr_noise_gain(double clean_power, double noise_power, double snr_db);

}  // namespace vpidm
