#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vpidm/rng.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/score.hpp"
#include "vpidm/types.hpp"

namespace vpidm {

/// Layout of SmallScoreModel.
///
/// Every time-frequency bin gets three log-power features (state, noisy
/// input, and the state residual R = (S - alpha Y) / G). A 2-D convolution
/// over a kernel_frames x kernel_bins neighbourhood maps them to `hidden`
/// tanh units, with a sinusoidal embedding of tau added to the conv bias.
/// `hidden_layers` per-bin dense tanh layers follow. A linear head emits two
/// real gains (a, b) per bin and the weighted score is
///   G Psi = a R + b (alpha lambda / G) Y.
struct ModelConfig {
  int kernel_frames = 3;
  int kernel_bins = 5;
  int hidden = 16;
  int hidden_layers = 1;
  int embedding = 8;  ///< must be even

  static constexpr int kFeatures = 3;
  static constexpr int kOutputs = 2;

  void validate() const;
  std::size_t parameter_count() const;
};

enum class Optimizer { sgd_momentum, adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  int batch_size = 4;
  double learning_rate = 0.05;
  int steps = 600;
  double momentum = 0.9;
  Optimizer optimizer = Optimizer::sgd_momentum;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double clip_norm = 1.0;  ///< global gradient-norm clip; 0 disables
  int crop_frames = 32;    ///< random crop length per example
  int average_window = 50; ///< moving-average window for the loss trace
  std::uint64_t seed = 0;

  void validate() const;
};

/// One prepared training example: a crop of a pair, a tau, the draw Z and the
/// resulting state S.
struct TrainingSample {
  ComplexSpectrum state;
  ComplexSpectrum noisy;
  ComplexSpectrum noise;
  double tau = 0.0;
};

/// Deterministic stream of training batches. For every example the draws are
/// taken in a fixed order: pair index, crop offset, tau, Z.
class TrainingBatchSampler {
 public:
  TrainingBatchSampler(const std::vector<TrainingPair>& pairs, Schedule s, int batch_size,
                       int crop_frames, std::uint64_t seed);
  std::vector<TrainingSample> next();

 private:
  const std::vector<TrainingPair>* pairs_;
  Schedule schedule_;
  int batch_size_;
  int crop_frames_;
  Rng rng_;
};

class SmallScoreModel : public ScoreFn {
 public:
  SmallScoreModel(ModelConfig cfg, Schedule s, std::uint64_t init_seed);

  ComplexSpectrum evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                           double tau) const override;
  std::string name() const override { return "small_model"; }

  /// Weighted output G Psi for one example.
  ComplexSpectrum weighted_output(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                                  double tau) const;

  /// Batch loss (1/Q) sum_q ||G Psi + Z||^2 / (L M). When `grad` is non-null
  /// it receives d loss / d params (resized to parameter_count()).
  double loss_and_gradient(const std::vector<TrainingSample>& batch,
                           std::vector<double>* grad) const;

  const ModelConfig& config() const { return cfg_; }
  const Schedule& schedule() const { return schedule_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

 private:
  struct Offsets {
    std::size_t conv_w, conv_b, embed_w, dense_w, dense_b, head_w, head_b, total;
  };
  double forward_backward(const TrainingSample* sample, const ComplexSpectrum& state,
                          const ComplexSpectrum& noisy, double tau, ComplexSpectrum* out,
                          std::vector<double>* grad, double grad_scale) const;

  ModelConfig cfg_;
  Schedule schedule_;
  Offsets off_{};
  std::vector<double> params_;
};

struct TrainResult {
  SmallScoreModel model;
  std::vector<double> loss_trace;
  std::vector<double> moving_average;  ///< trailing mean over average_window steps
  std::size_t initial_index = 0;       ///< first full-window entry of moving_average

  /// 1 - (last moving average) / (first full-window moving average).
  double relative_reduction() const;
};

/// Called after every update with (step, loss).
using TrainObserver = std::function<void(int, double)>;

/// Minimizes the denoising score-matching loss of a SmallScoreModel on the
/// given pairs. Single-threaded and deterministic given cfg.seed. Throws
/// DivergenceError when the loss or gradient becomes non-finite.
TrainResult train_small_model(const std::vector<TrainingPair>& pairs, const ModelConfig& model_cfg,
                              const TrainConfig& cfg, const Schedule& s,
                              const TrainObserver& observer = {});

/// JSON checkpoint: format tag, version, schedule and its hash, model layout,
/// training seed and the flat parameter vector.
void save_checkpoint(const std::filesystem::path& path, const SmallScoreModel& model,
                     std::uint64_t seed);

/// Loads a checkpoint, refusing (FormatError) when its schedule hash differs
/// from `expected`.
SmallScoreModel load_checkpoint(const std::filesystem::path& path, const Schedule& expected);

}  // namespace vpidm
