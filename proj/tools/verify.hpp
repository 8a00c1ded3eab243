#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "vpidm/schedule.hpp"
#include "vpidm/sde.hpp"

namespace vpidm::cli {

struct VerifyOptions {
  Schedule schedule;
  double perturb_g = 0.0;  ///< relative fault injected into the closed-form g
  int em_paths = 10000;
  int em_steps = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< worst observed error (or the measured quantity)
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::vector<MarginalStatistics> marginals;
  ComplexSpectrum em_clean;
  ComplexSpectrum em_noisy;

  bool all_passed() const;
};

/// Coefficient finite-difference suite, SDE marginal Monte Carlo, score and
/// loss checks, model gradient check and variant-specific reductions.
VerifyReport run_verification(const VerifyOptions& opts);

void write_report_csv(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace vpidm::cli
