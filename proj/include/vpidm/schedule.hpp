#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vpidm {

/// Members of the interpolation-diffusion family sharing the state equation
///   S(tau) = alpha(tau) [lambda(tau) X + (1 - lambda(tau)) Y] + G(tau) Z.
///
///   vpidm: alpha from the linear beta schedule, G = sqrt(1 - alpha^2),
///          interpolation 1 - lambda = 1 - e^{-gamma tau}.
///   vpdm:  as vpidm with the interpolating coefficient forced to 0.
///   veidm: alpha = 1, G from a geometric variance-exploding schedule.
enum class Variant { vpidm, vpdm, veidm };

std::string_view to_string(Variant v);
/// Accepts "vpidm", "vpdm", "veidm" (case-insensitive).
Variant parse_variant(std::string_view name);

/// Coefficient schedule. Defaults are the standard VPIDM hyperparameters.
struct Schedule {
  double gamma = 1.5;
  double beta_min = 0.1;
  double beta_max = 2.0;
  double T = 1.0;
  double epsilon = 0.04;
  Variant variant = Variant::vpidm;
  // Variance-exploding diffusion for veidm: g(tau) = s_min (s_max/s_min)^tau sqrt(2 ln(s_max/s_min)).
  double ve_sigma_min = 0.05;
  double ve_sigma_max = 0.5;

  void validate() const;
  bool is_variance_preserving() const { return variant != Variant::veidm; }
};

/// Stable 64-bit hash of every schedule field; used to pair checkpoints with
/// the schedule they were trained under.
std::uint64_t schedule_hash(const Schedule& s);

/// beta(tau) = (beta_max - beta_min) tau + beta_min.
double beta_rate(const Schedule& s, double tau);
/// Integral of beta over [0, tau].
double beta_integral(const Schedule& s, double tau);

/// lambda(tau): weight of the clean spectrum in the interpolation. 1 for vpdm.
double clean_weight(const Schedule& s, double tau);
/// eta(tau) = 1 - lambda(tau): the interpolating coefficient (target-noise weight).
double noise_weight(const Schedule& s, double tau);
/// alpha(tau): scale applied to the interpolated mean. 1 for veidm.
double mean_scale(const Schedule& s, double tau);
/// G(tau): standard deviation of the Gaussian component.
double state_sd(const Schedule& s, double tau);
/// G(tau)^2.
double state_variance(const Schedule& s, double tau);

/// d ln lambda / d tau.
double d_log_clean_weight(const Schedule& s, double tau);
/// d eta / d tau.
double d_noise_weight(const Schedule& s, double tau);
/// d ln alpha / d tau.
double d_log_mean_scale(const Schedule& s, double tau);
/// d ln(alpha lambda) / d tau.
double d_log_mean_coefficient(const Schedule& s, double tau);
/// d G^2 / d tau.
double d_state_variance(const Schedule& s, double tau);

/// Throws InvalidArgument unless 0 <= tau <= T.
void require_tau_in_range(const Schedule& s, double tau, const char* where);

/// Uniform discretization of [epsilon, T] into K points.
struct Grid {
  int K = 0;
  double delta = 0.0;
  std::vector<double> taus;  ///< taus[k - 1] is tau_k, k = 1..K

  /// tau_k for 1 <= k <= K.
  double tau(int k) const;
};

/// tau_k = (k - 1) delta + epsilon with delta = (T - epsilon) / (K - 1);
/// tau_K is set to exactly T.
Grid make_grid(const Schedule& s, int K);

/// Canonical text form, e.g. for logging and hashing.
std::string describe(const Schedule& s);

}  // namespace vpidm
