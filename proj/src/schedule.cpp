#include "vpidm/schedule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include "vpidm/types.hpp"

namespace vpidm {

namespace {

double ve_log_ratio(const Schedule& s) { return std::log(s.ve_sigma_max / s.ve_sigma_min); }

// G^2 for the variance-exploding variant, solving dG^2/dtau = g^2 - 2 gamma G^2
// (drift gamma (Y - S)) with g^2 = 2 r s_min^2 e^{2 r tau} and G(0) = 0.
double ve_variance(const Schedule& s, double tau) {
  const double r = ve_log_ratio(s);
  const double smin2 = s.ve_sigma_min * s.ve_sigma_min;
  return smin2 * r / (s.gamma + r) * (std::exp(2.0 * r * tau) - std::exp(-2.0 * s.gamma * tau));
}

double ve_variance_rate(const Schedule& s, double tau) {
  const double r = ve_log_ratio(s);
  const double smin2 = s.ve_sigma_min * s.ve_sigma_min;
  return smin2 * r / (s.gamma + r) *
         (2.0 * r * std::exp(2.0 * r * tau) + 2.0 * s.gamma * std::exp(-2.0 * s.gamma * tau));
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::vpidm: return "vpidm";
    case Variant::vpdm: return "vpdm";
    case Variant::veidm: return "veidm";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "vpidm") return Variant::vpidm;
  if (lower == "vpdm") return Variant::vpdm;
  if (lower == "veidm") return Variant::veidm;
  throw InvalidArgument("unknown diffusion variant: " + std::string(name));
}

void Schedule::validate() const {
  if (!(gamma >= 0.0)) throw InvalidArgument("schedule: gamma must be >= 0");
  if (!(beta_min >= 0.0)) throw InvalidArgument("schedule: beta_min must be >= 0");
  if (!(beta_max >= beta_min)) throw InvalidArgument("schedule: beta_max must be >= beta_min");
  if (!(T > 0.0)) throw InvalidArgument("schedule: T must be > 0");
  if (!(epsilon > 0.0 && epsilon < T)) throw InvalidArgument("schedule: epsilon must be in (0, T)");
  if (variant == Variant::veidm && !(ve_sigma_min > 0.0 && ve_sigma_max > ve_sigma_min))
    throw InvalidArgument("schedule: veidm needs 0 < ve_sigma_min < ve_sigma_max");
}

std::string describe(const Schedule& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "variant=%s gamma=%.17g beta_min=%.17g beta_max=%.17g T=%.17g epsilon=%.17g "
                "ve_sigma_min=%.17g ve_sigma_max=%.17g",
                std::string(to_string(s.variant)).c_str(), s.gamma, s.beta_min, s.beta_max, s.T,
                s.epsilon, s.ve_sigma_min, s.ve_sigma_max);
  return buf;
}

std::uint64_t schedule_hash(const Schedule& s) {
  // FNV-1a over the canonical description.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : describe(s)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void require_tau_in_range(const Schedule& s, double tau, const char* where) {
  if (!(tau >= 0.0 && tau <= s.T))
    throw InvalidArgument(std::string(where) + ": tau=" + std::to_string(tau) +
                          " outside [0, T]");
}

double beta_rate(const Schedule& s, double tau) {
  return (s.beta_max - s.beta_min) * tau + s.beta_min;
}

double beta_integral(const Schedule& s, double tau) {
  return 0.5 * (s.beta_max - s.beta_min) * tau * tau + s.beta_min * tau;
}

double clean_weight(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "clean_weight");
  if (s.variant == Variant::vpdm) return 1.0;
  return std::exp(-s.gamma * tau);
}

double noise_weight(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "noise_weight");
  if (s.variant == Variant::vpdm) return 0.0;
  return -std::expm1(-s.gamma * tau);
}

double mean_scale(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "mean_scale");
  if (s.variant == Variant::veidm) return 1.0;
  return std::exp(-0.5 * beta_integral(s, tau));
}

double state_variance(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "state_variance");
  if (s.variant == Variant::veidm) return ve_variance(s, tau);
  return -std::expm1(-beta_integral(s, tau));  // 1 - alpha^2
}

double state_sd(const Schedule& s, double tau) { return std::sqrt(state_variance(s, tau)); }

double d_log_clean_weight(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "d_log_clean_weight");
  return s.variant == Variant::vpdm ? 0.0 : -s.gamma;
}

double d_noise_weight(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "d_noise_weight");
  return s.variant == Variant::vpdm ? 0.0 : s.gamma * std::exp(-s.gamma * tau);
}

double d_log_mean_scale(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "d_log_mean_scale");
  return s.variant == Variant::veidm ? 0.0 : -0.5 * beta_rate(s, tau);
}

double d_log_mean_coefficient(const Schedule& s, double tau) {
  return d_log_mean_scale(s, tau) + d_log_clean_weight(s, tau);
}

double d_state_variance(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "d_state_variance");
  if (s.variant == Variant::veidm) return ve_variance_rate(s, tau);
  const double alpha = mean_scale(s, tau);
  return beta_rate(s, tau) * alpha * alpha;
}

double Grid::tau(int k) const {
  if (k < 1 || k > K) throw InvalidArgument("grid index k=" + std::to_string(k) + " outside [1, K]");
  return taus[static_cast<std::size_t>(k - 1)];
}

Grid make_grid(const Schedule& s, int K) {
  s.validate();
  if (K < 2) throw InvalidArgument("grid: K must be >= 2");
  Grid g;
  g.K = K;
  g.delta = (s.T - s.epsilon) / (K - 1);
  g.taus.resize(static_cast<std::size_t>(K));
  for (int k = 1; k < K; ++k) g.taus[static_cast<std::size_t>(k - 1)] = (k - 1) * g.delta + s.epsilon;
  g.taus.back() = s.T;
  return g;
}

}  // namespace vpidm
