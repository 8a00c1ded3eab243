#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "vpidm/diffusion.hpp"
#include "vpidm/rng.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/types.hpp"

namespace vpidm {

/// Estimator of the score Psi(S, Y, tau) of the state given the noisy input.
/// Implementations must return a spectrum shaped like S and be safe to call
/// concurrently.
class ScoreFn {
 public:
  virtual ~ScoreFn() = default;
  virtual ComplexSpectrum evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                                   double tau) const = 0;
  virtual std::string name() const = 0;
};

/// Wraps a callable; handy for fixed or hand-made scores in experiments.
class LambdaScore : public ScoreFn {
 public:
  using Fn = std::function<ComplexSpectrum(const ComplexSpectrum&, const ComplexSpectrum&, double)>;
  LambdaScore(Fn fn, std::string name = "lambda") : fn_(std::move(fn)), name_(std::move(name)) {}

  ComplexSpectrum evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                           double tau) const override {
    return fn_(state, noisy, tau);
  }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// Psi = 0 everywhere.
class ZeroScore : public ScoreFn {
 public:
  ComplexSpectrum evaluate(const ComplexSpectrum& state, const ComplexSpectrum&,
                           double) const override {
    return ComplexSpectrum(state.frames(), state.bins());
  }
  std::string name() const override { return "zero"; }
};

/// A paired training or evaluation example in the compressed STFT domain.
struct TrainingPair {
  ComplexSpectrum clean;
  ComplexSpectrum noisy;
};

/// Exact conditional score -(S - U) / G^2 computed from the true clean
/// spectrum. Only usable when the clean reference is known.
///
/// Built from a single clean spectrum, it uses that reference for any noisy
/// input. Built from several pairs, it picks the reference whose noisy
/// spectrum is bitwise equal to the one passed to evaluate().
class OracleScore : public ScoreFn {
 public:
  OracleScore(ComplexSpectrum clean, Schedule s);
  OracleScore(const std::vector<TrainingPair>& pairs, Schedule s);

  ComplexSpectrum evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                           double tau) const override;
  std::string name() const override { return "oracle"; }

  /// Clean reference used for `noisy`; throws InvalidArgument if unknown.
  const ComplexSpectrum& clean_for(const ComplexSpectrum& noisy) const;

 private:
  Schedule schedule_;
  std::vector<ComplexSpectrum> cleans_;
  std::unordered_multimap<std::uint64_t, std::size_t> by_noisy_;
  std::vector<ComplexSpectrum> noisies_;
};

/// 64-bit content hash of a spectrum (shape and exact values).
std::uint64_t fingerprint(const ComplexSpectrum& x);

/// Draws tau uniformly from (epsilon, T].
double sample_training_tau(const Schedule& s, Rng& rng);

/// One term of the denoising score-matching objective.
struct DsmTerm {
  double tau = 0.0;
  double squared_error = 0.0;  ///< ||G Psi + Z||^2
  std::size_t dims = 0;        ///< L * M
};

/// Weighted denoising score-matching loss
///   (1/Q) sum_q ||G(tau_q) Psi(S_q, Y_q, tau_q) + Z_q||^2 / (L_q M_q)
/// with tau_q ~ U(epsilon, T] and S_q drawn from the state equation. Draws
/// are taken from `rng` pair by pair (tau first, then Z). Throws
/// InvalidArgument on an empty batch.
double dsm_loss(const ScoreFn& psi, const std::vector<TrainingPair>& batch, const Schedule& s,
                Rng& rng, std::vector<DsmTerm>* terms = nullptr);

}  // namespace vpidm
