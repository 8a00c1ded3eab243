#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "vpidm/diffusion.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/types.hpp"

namespace vpidm {

/// Drift and diffusion of dS = f dtau + g dW at one state.
struct SdeCoefficients {
  ComplexSpectrum drift;
  double diffusion = 0.0;
};

/// Scalars of the affine drift f = state_coef * S + noisy_coef * Y.
struct AffineDrift {
  double state_coef = 0.0;  ///< d ln(alpha lambda) / d tau
  double noisy_coef = 0.0;  ///< -alpha d ln lambda / d tau
};

AffineDrift noisy_drift_coefficients(const Schedule& s, double tau);

/// f(S, Y, tau) = d ln(alpha lambda)/dtau S - alpha d ln lambda/dtau Y.
/// Requires tau in (0, T].
ComplexSpectrum drift_noisy(const DiffusionState& st, const ComplexSpectrum& noisy,
                            const Schedule& s);

/// Equivalent drift written against the target noise N = Y - X:
/// f(S, N, tau) = d ln alpha/dtau S + alpha d eta/dtau N. Agrees with
/// drift_noisy() on the mean U(tau); differs elsewhere.
ComplexSpectrum drift_target_noise(const DiffusionState& st, const ComplexSpectrum& target_noise,
                                   const Schedule& s);

/// g^2 = dG^2/dtau - 2 G^2 d ln(alpha lambda)/dtau, evaluated from the
/// analytic schedule derivatives.
double diffusion_radicand(const Schedule& s, double tau);

/// g(tau) in closed form. For the VP variants
///   g^2 = beta alpha^2 + (1 - alpha^2)(beta - 2 d ln lambda/dtau),
/// which reduces to beta for vpdm. Throws DivergenceError on a negative radicand.
double diffusion_coefficient(const Schedule& s, double tau);

SdeCoefficients coefficients(const DiffusionState& st, const ComplexSpectrum& noisy,
                             const Schedule& s);

/// Two-term split of the mean dynamics dU/dtau:
///   amplitude_term = (d alpha/dtau) U / alpha   (rebuilds the clean amplitude)
///   noise_term     = alpha (d eta/dtau) N       (moves the target noise)
struct MeanOdeTerms {
  ComplexSpectrum amplitude_term;
  ComplexSpectrum noise_term;
};

MeanOdeTerms decompose_mean_ode(const ComplexSpectrum& mean, const ComplexSpectrum& target_noise,
                                const Schedule& s, double tau);

struct ForwardSimulationOptions {
  int n_paths = 10000;
  int n_steps = 1000;
  std::vector<double> checkpoints{0.25, 0.5, 1.0};  ///< must lie on the step grid T i / n_steps
  std::uint64_t seed = 0;
  unsigned threads = 0;  ///< 0 = hardware concurrency
};

/// Empirical statistics of the simulated paths at one checkpoint.
struct MarginalStatistics {
  double tau = 0.0;
  std::vector<Complex> mean;       ///< per bin
  std::vector<double> variance;    ///< per bin, E|S - mean|^2 (unbiased)
  std::vector<double> mean_stderr; ///< per bin, sqrt(variance / n_paths)
  int n_paths = 0;
};

/// Euler-Maruyama integration of the forward SDE from S(0) = X on a small
/// spectrum (flattened to its bins). Paths are grouped in fixed blocks, each
/// with its own random stream, so the result does not depend on the number
/// of threads.
std::vector<MarginalStatistics> simulate_forward_em(const ComplexSpectrum& clean,
                                                    const ComplexSpectrum& noisy,
                                                    const Schedule& s,
                                                    const ForwardSimulationOptions& opts);

/// CSV with columns tau,bin,quantity,analytic,empirical,stderr comparing the
/// simulated statistics with U(tau) and G^2(tau).
void write_marginals_csv(std::ostream& out, const std::vector<MarginalStatistics>& stats,
                         const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                         const Schedule& s);

}  // namespace vpidm
