#include "vpidm/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "vpidm/rng.hpp"

namespace vpidm {

namespace {

void require_open_tau(const Schedule& s, double tau, const char* where) {
  if (!(tau > 0.0 && tau <= s.T))
    throw InvalidArgument(std::string(where) + ": tau=" + std::to_string(tau) +
                          " outside (0, T]");
}

constexpr int kPathsPerBlock = 256;

struct BlockSums {
  // [checkpoint][bin]
  std::vector<std::vector<Complex>> sum;
  std::vector<std::vector<double>> sum_sq;
};

}  // namespace

AffineDrift noisy_drift_coefficients(const Schedule& s, double tau) {
  return {d_log_mean_coefficient(s, tau), -mean_scale(s, tau) * d_log_clean_weight(s, tau)};
}

ComplexSpectrum drift_noisy(const DiffusionState& st, const ComplexSpectrum& noisy,
                            const Schedule& s) {
  require_same_shape(st.state, noisy, "drift_noisy");
  require_open_tau(s, st.tau, "drift_noisy");
  const AffineDrift d = noisy_drift_coefficients(s, st.tau);
  ComplexSpectrum f(noisy.frames(), noisy.bins());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = d.state_coef * st.state[i] + d.noisy_coef * noisy[i];
  return f;
}

ComplexSpectrum drift_target_noise(const DiffusionState& st, const ComplexSpectrum& target_noise,
                                   const Schedule& s) {
  require_same_shape(st.state, target_noise, "drift_target_noise");
  require_open_tau(s, st.tau, "drift_target_noise");
  const double state_coef = d_log_mean_scale(s, st.tau);
  const double noise_coef = mean_scale(s, st.tau) * d_noise_weight(s, st.tau);
  ComplexSpectrum f(target_noise.frames(), target_noise.bins());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = state_coef * st.state[i] + noise_coef * target_noise[i];
  return f;
}

double diffusion_radicand(const Schedule& s, double tau) {
  return d_state_variance(s, tau) - 2.0 * state_variance(s, tau) * d_log_mean_coefficient(s, tau);
}

double diffusion_coefficient(const Schedule& s, double tau) {
  require_tau_in_range(s, tau, "diffusion_coefficient");
  double g2 = 0.0;
  if (s.variant == Variant::veidm) {
    const double r = std::log(s.ve_sigma_max / s.ve_sigma_min);
    g2 = 2.0 * r * s.ve_sigma_min * s.ve_sigma_min * std::exp(2.0 * r * tau);
  } else {
    const double alpha = mean_scale(s, tau);
    const double beta = beta_rate(s, tau);
    const double alpha2 = alpha * alpha;
    g2 = beta * alpha2 + (1.0 - alpha2) * (beta - 2.0 * d_log_clean_weight(s, tau));
  }
  if (!(g2 >= 0.0))
    throw DivergenceError("diffusion coefficient radicand is negative at tau=" +
                          std::to_string(tau));
  return std::sqrt(g2);
}

SdeCoefficients coefficients(const DiffusionState& st, const ComplexSpectrum& noisy,
                             const Schedule& s) {
  return {drift_noisy(st, noisy, s), diffusion_coefficient(s, st.tau)};
}

MeanOdeTerms decompose_mean_ode(const ComplexSpectrum& mean, const ComplexSpectrum& target_noise,
                                const Schedule& s, double tau) {
  require_same_shape(mean, target_noise, "decompose_mean_ode");
  require_open_tau(s, tau, "decompose_mean_ode");
  MeanOdeTerms terms{mean, target_noise};
  // (d alpha/dtau) / alpha is d ln alpha / dtau.
  terms.amplitude_term *= d_log_mean_scale(s, tau);
  terms.noise_term *= mean_scale(s, tau) * d_noise_weight(s, tau);
  return terms;
}

std::vector<MarginalStatistics> simulate_forward_em(const ComplexSpectrum& clean,
                                                    const ComplexSpectrum& noisy,
                                                    const Schedule& s,
                                                    const ForwardSimulationOptions& opts) {
  require_same_shape(clean, noisy, "simulate_forward_em");
  s.validate();
  if (opts.n_paths < 2) throw InvalidArgument("simulate_forward_em: n_paths must be >= 2");
  if (opts.n_steps < 1) throw InvalidArgument("simulate_forward_em: n_steps must be >= 1");

  const double h = s.T / opts.n_steps;
  std::vector<int> checkpoint_steps;
  for (double tau : opts.checkpoints) {
    const long step = std::lround(tau / h);
    if (step < 0 || step > opts.n_steps || std::abs(step * h - tau) > 1e-9)
      throw InvalidArgument("simulate_forward_em: checkpoint tau=" + std::to_string(tau) +
                            " is not on the step grid");
    checkpoint_steps.push_back(static_cast<int>(step));
  }

  // Coefficients evaluated at the left end of each step.
  std::vector<AffineDrift> drift(static_cast<std::size_t>(opts.n_steps));
  std::vector<double> noise_scale(static_cast<std::size_t>(opts.n_steps));
  const double sqrt_h = std::sqrt(h);
  for (int i = 0; i < opts.n_steps; ++i) {
    const double tau = s.T * i / opts.n_steps;
    drift[static_cast<std::size_t>(i)] = {d_log_mean_coefficient(s, tau),
                                          -mean_scale(s, tau) * d_log_clean_weight(s, tau)};
    noise_scale[static_cast<std::size_t>(i)] = diffusion_coefficient(s, tau) * sqrt_h;
  }

  const std::size_t bins = clean.size();
  const std::size_t n_checkpoints = checkpoint_steps.size();
  const int n_blocks = (opts.n_paths + kPathsPerBlock - 1) / kPathsPerBlock;
  std::vector<BlockSums> blocks(static_cast<std::size_t>(n_blocks));
  const Rng root(opts.seed);

  auto run_block = [&](int b) {
    BlockSums& acc = blocks[static_cast<std::size_t>(b)];
    acc.sum.assign(n_checkpoints, std::vector<Complex>(bins));
    acc.sum_sq.assign(n_checkpoints, std::vector<double>(bins));
    Rng rng = root.split(static_cast<std::uint64_t>(b));
    const int first = b * kPathsPerBlock;
    const int last = std::min(opts.n_paths, first + kPathsPerBlock);
    std::vector<Complex> path(bins);
    for (int p = first; p < last; ++p) {
      std::copy(clean.values().begin(), clean.values().end(), path.begin());
      auto record = [&](int step) {
        for (std::size_t c = 0; c < n_checkpoints; ++c) {
          if (checkpoint_steps[c] != step) continue;
          for (std::size_t m = 0; m < bins; ++m) {
            acc.sum[c][m] += path[m];
            acc.sum_sq[c][m] += std::norm(path[m]);
          }
        }
      };
      record(0);
      for (int i = 0; i < opts.n_steps; ++i) {
        const AffineDrift& d = drift[static_cast<std::size_t>(i)];
        const double scale = noise_scale[static_cast<std::size_t>(i)];
        for (std::size_t m = 0; m < bins; ++m) {
          const Complex f = d.state_coef * path[m] + d.noisy_coef * noisy[m];
          path[m] += f * h + scale * rng.complex_normal();
        }
        record(i + 1);
      }
    }
  };

  unsigned threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1U, static_cast<unsigned>(n_blocks));
  if (threads == 1) {
    for (int b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (int b = static_cast<int>(t); b < n_blocks; b += static_cast<int>(threads)) run_block(b);
      });
    }
  }

  const auto n = static_cast<double>(opts.n_paths);
  std::vector<MarginalStatistics> out;
  for (std::size_t c = 0; c < n_checkpoints; ++c) {
    MarginalStatistics st;
    st.tau = opts.checkpoints[c];
    st.n_paths = opts.n_paths;
    st.mean.assign(bins, {});
    st.variance.assign(bins, 0.0);
    st.mean_stderr.assign(bins, 0.0);
    for (std::size_t m = 0; m < bins; ++m) {
      Complex sum{};
      double sum_sq = 0.0;
      for (const auto& blk : blocks) {
        sum += blk.sum[c][m];
        sum_sq += blk.sum_sq[c][m];
      }
      const Complex mean = sum / n;
      const double var = std::max(0.0, (sum_sq - n * std::norm(mean)) / (n - 1.0));
      st.mean[m] = mean;
      st.variance[m] = var;
      st.mean_stderr[m] = std::sqrt(var / n);
    }
    out.push_back(std::move(st));
  }
  return out;
}

void write_marginals_csv(std::ostream& out, const std::vector<MarginalStatistics>& stats,
                         const ComplexSpectrum& clean, const ComplexSpectrum& noisy,
                         const Schedule& s) {
  out << "tau,bin,quantity,analytic,empirical,stderr\n";
  out.precision(12);
  for (const auto& st : stats) {
    const ComplexSpectrum u = conditional_mean(clean, noisy, s, st.tau);
    const double g2 = state_variance(s, st.tau);
    // Per-component standard error of the mean is stderr / sqrt(2).
    for (std::size_t m = 0; m < st.mean.size(); ++m) {
      const double comp_se = st.mean_stderr[m] / std::sqrt(2.0);
      out << st.tau << ',' << m << ",mean_re," << u[m].real() << ',' << st.mean[m].real() << ','
          << comp_se << '\n';
      out << st.tau << ',' << m << ",mean_im," << u[m].imag() << ',' << st.mean[m].imag() << ','
          << comp_se << '\n';
      out << st.tau << ',' << m << ",variance," << g2 << ',' << st.variance[m] << ','
          << st.variance[m] / std::sqrt(static_cast<double>(st.n_paths)) << '\n';
    }
  }
}

}  // namespace vpidm
