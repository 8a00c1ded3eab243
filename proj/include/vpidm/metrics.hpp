#pragma once

#include "vpidm/types.hpp"

namespace vpidm {

inline constexpr double kSiSdrCapDb = 80.0;

/// Scale-invariant SDR in dB: the estimate is projected onto the reference
/// and 10 log10(|target|^2 / |estimate - target|^2) is reported, capped at
/// +80 dB. Throws ShapeMismatch on unequal lengths and InvalidArgument on a
/// zero-power reference or estimate.
double si_sdr(const Waveform& reference, const Waveform& estimate);

/// Mean over frames of the per-frame SNR (dB, clamped to [-10, 35]); frames
/// whose reference is silent are skipped. Non-overlapping frames of
/// `frame_length` samples.
double segmental_snr(const Waveform& reference, const Waveform& estimate, int frame_length = 256);

/// mean |v_hat - clean|^2 over all bins.
double residual_noise_power(const ComplexSpectrum& v_hat, const ComplexSpectrum& clean);

/// RMS over bins of 20 (log10(|a| + 1e-8) - log10(|b| + 1e-8)), in dB.
double log_spectral_distance(const ComplexSpectrum& a, const ComplexSpectrum& b);

}  // namespace vpidm
