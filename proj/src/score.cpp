#include "vpidm/score.hpp"

namespace vpidm {

std::uint64_t fingerprint(const ComplexSpectrum& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[2] = {x.frames(), x.bins()};
  mix(shape, sizeof shape);
  mix(x.values().data(), x.size() * sizeof(Complex));
  return h;
}

OracleScore::OracleScore(ComplexSpectrum clean, Schedule s) : schedule_(s) {
  schedule_.validate();
  cleans_.push_back(std::move(clean));
}

OracleScore::OracleScore(const std::vector<TrainingPair>& pairs, Schedule s) : schedule_(s) {
  schedule_.validate();
  if (pairs.empty()) throw InvalidArgument("OracleScore: no reference pairs");
  for (const auto& p : pairs) {
    require_same_shape(p.clean, p.noisy, "OracleScore");
    by_noisy_.emplace(fingerprint(p.noisy), cleans_.size());
    cleans_.push_back(p.clean);
    noisies_.push_back(p.noisy);
  }
}

const ComplexSpectrum& OracleScore::clean_for(const ComplexSpectrum& noisy) const {
  if (noisies_.empty()) return cleans_.front();
  auto [first, last] = by_noisy_.equal_range(fingerprint(noisy));
  for (auto it = first; it != last; ++it)
    if (noisies_[it->second] == noisy) return cleans_[it->second];
  throw InvalidArgument("OracleScore: no clean reference for this noisy spectrum");
}

ComplexSpectrum OracleScore::evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                                      double tau) const {
  return analytic_score({state, tau}, clean_for(noisy), noisy, schedule_);
}

double sample_training_tau(const Schedule& s, Rng& rng) {
  // 1 - u lies in (0, 1], so tau lies in (epsilon, T].
  return s.epsilon + (s.T - s.epsilon) * (1.0 - rng.uniform());
}

double dsm_loss(const ScoreFn& psi, const std::vector<TrainingPair>& batch, const Schedule& s,
                Rng& rng, std::vector<DsmTerm>* terms) {
  if (batch.empty()) throw InvalidArgument("dsm_loss: empty batch");
  double total = 0.0;
  for (const auto& pair : batch) {
    require_same_shape(pair.clean, pair.noisy, "dsm_loss");
    const double tau = sample_training_tau(s, rng);
    auto [st, draw] = forward_sample(pair.clean, pair.noisy, s, tau, rng);
    ComplexSpectrum residual = psi.evaluate(st.state, pair.noisy, tau);
    require_same_shape(residual, st.state, "dsm_loss: score output");
    residual *= state_sd(s, tau);
    residual += draw.noise;
    const double err = residual.squared_norm();
    total += err / static_cast<double>(residual.size());
    if (terms) terms->push_back({tau, err, residual.size()});
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace vpidm
