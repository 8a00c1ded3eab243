#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "vpidm/diffusion.hpp"
#include "vpidm/rng.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/score.hpp"
#include "vpidm/spectral.hpp"
#include "vpidm/types.hpp"

namespace vpidm {

enum class SamplerMode { full, early_stop };

std::string_view to_string(SamplerMode m);
SamplerMode parse_sampler_mode(std::string_view name);

struct SamplerConfig {
  int K = 25;
  int K1 = 12;  ///< reverse steps taken in early-stop mode
  std::uint64_t seed = 0;
  SamplerMode mode = SamplerMode::full;

  void validate() const;
};

/// Per-step record emitted while sampling. `residual_proxy` estimates the
/// target-noise power left in the mid-output without a clean reference:
/// (eta / lambda)^2 mean|V_hat - Y|^2, which is eta^2 mean|N|^2 when V_hat is
/// exact. It is 0 for vpdm.
struct StepDiagnostic {
  int k = 0;
  double tau = 0.0;
  double residual_proxy = 0.0;
  double state_norm = 0.0;  ///< sqrt(mean |S_k|^2)
};

void write_diagnostics_csv(std::ostream& out, const std::vector<StepDiagnostic>& rows);

/// S_K ~ CN(alpha(T) Y, G(T)^2 I) at tau = T.
DiffusionState init_state(const ComplexSpectrum& noisy, const Schedule& s, Rng& rng);

/// One step of the discretized reverse SDE from grid index k to k - 1:
///   S_{k-1} = S_k - [f(S_k, Y, tau_k) - g_k^2 Psi(S_k, Y, tau_k)] Delta + g_k sqrt(Delta) Z.
/// Requires 2 <= k <= K and S_k.tau == tau_k.
DiffusionState reverse_step(const DiffusionState& current, const ComplexSpectrum& noisy,
                            const ScoreFn& psi, const Schedule& s, const Grid& grid, int k,
                            Rng& rng);

/// Same step with an explicit draw Z and diffusion value g_k. Passing a zero
/// draw or g_k = 0 gives a deterministic step.
DiffusionState reverse_step(const DiffusionState& current, const ComplexSpectrum& noisy,
                            const ScoreFn& psi, const Schedule& s, const Grid& grid, int k,
                            const ComplexSpectrum& draw, double diffusion);

/// Runs `steps` reverse steps from S_K (fresh init_state with rng) and
/// returns S_{K - steps}. Throws DivergenceError if the state stops being
/// finite. Diagnostics, when requested, cover every visited state.
DiffusionState sample_reverse(const ComplexSpectrum& noisy, const ScoreFn& psi, const Schedule& s,
                              const Grid& grid, int steps, Rng& rng,
                              std::vector<StepDiagnostic>* diagnostics = nullptr);

/// Denoised mid-output V_hat = (S + G^2 Psi(S, Y, tau)) / alpha(tau).
ComplexSpectrum extract_v_hat(const DiffusionState& st, const ComplexSpectrum& noisy,
                              const ScoreFn& psi, const Schedule& s);

/// Full reverse process on a compressed spectrum: K - 1 steps down to
/// tau = epsilon; the final state is returned as the estimate.
ComplexSpectrum enhance_spectrum(const ComplexSpectrum& noisy, const ScoreFn& psi,
                                 const Schedule& s, const SamplerConfig& cfg,
                                 std::vector<StepDiagnostic>* diagnostics = nullptr);

/// Early-stopped process: min(K1, K - 1) steps, then V_hat at the reached tau.
ComplexSpectrum enhance_early_stop_spectrum(const ComplexSpectrum& noisy, const ScoreFn& psi,
                                            const Schedule& s, const SamplerConfig& cfg,
                                            std::vector<StepDiagnostic>* diagnostics = nullptr);

/// Waveform-level enhancement: analyze, sample (per cfg.mode), synthesize to
/// the input length. Deterministic given cfg.seed.
Waveform enhance(const Waveform& noisy, const ScoreFn& psi, const Schedule& s,
                 const SamplerConfig& cfg, const StftConfig& stft = {},
                 const CompressionConfig& comp = {},
                 std::vector<StepDiagnostic>* diagnostics = nullptr);

Waveform enhance_early_stop(const Waveform& noisy, const ScoreFn& psi, const Schedule& s,
                            const SamplerConfig& cfg, const StftConfig& stft = {},
                            const CompressionConfig& comp = {},
                            std::vector<StepDiagnostic>* diagnostics = nullptr);

}  // namespace vpidm
