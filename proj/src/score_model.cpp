#include "vpidm/score_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "vpidm/diffusion.hpp"

namespace vpidm {

namespace {

constexpr double kPowerFloor = 1e-3;
constexpr const char* kCheckpointFormat = "vpidm-score-model";
constexpr int kCheckpointVersion = 1;

double log_power_feature(double p) { return 0.5 * (std::log(p + kPowerFloor) + 3.0); }

std::vector<double> tau_embedding(double tau, int dims) {
  std::vector<double> e(static_cast<std::size_t>(dims));
  for (int i = 0; i < dims / 2; ++i) {
    const double w = std::numbers::pi * std::ldexp(1.0, i) * tau;
    e[static_cast<std::size_t>(2 * i)] = std::sin(w);
    e[static_cast<std::size_t>(2 * i + 1)] = std::cos(w);
  }
  return e;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void ModelConfig::validate() const {
  if (kernel_frames < 1 || kernel_frames % 2 == 0 || kernel_bins < 1 || kernel_bins % 2 == 0)
    throw InvalidArgument("model: kernel sizes must be odd and positive");
  if (hidden < 1) throw InvalidArgument("model: hidden must be >= 1");
  if (hidden_layers < 0) throw InvalidArgument("model: hidden_layers must be >= 0");
  if (embedding < 0 || embedding % 2 != 0)
    throw InvalidArgument("model: embedding must be even and >= 0");
}

std::size_t ModelConfig::parameter_count() const {
  const auto h = static_cast<std::size_t>(hidden);
  const auto conv = h * kFeatures * static_cast<std::size_t>(kernel_frames * kernel_bins);
  const auto dense = static_cast<std::size_t>(hidden_layers) * (h * h + h);
  return conv + h + h * static_cast<std::size_t>(embedding) + dense + kOutputs * h + kOutputs;
}

std::string_view to_string(Optimizer o) {
  return o == Optimizer::adam ? "adam" : "sgd_momentum";
}

Optimizer parse_optimizer(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "adam") return Optimizer::adam;
  if (lower == "sgd" || lower == "sgd_momentum") return Optimizer::sgd_momentum;
  throw InvalidArgument("unknown optimizer: " + std::string(name));
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("train: learning_rate must be finite and >= 0");
  if (steps < 0) throw InvalidArgument("train: steps must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("train: momentum must be in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw InvalidArgument("train: adam betas must be in [0, 1)");
  if (!(clip_norm >= 0.0)) throw InvalidArgument("train: clip_norm must be >= 0");
  if (crop_frames < 1) throw InvalidArgument("train: crop_frames must be >= 1");
  if (average_window < 1) throw InvalidArgument("train: average_window must be >= 1");
}

TrainingBatchSampler::TrainingBatchSampler(const std::vector<TrainingPair>& pairs, Schedule s,
                                           int batch_size, int crop_frames, std::uint64_t seed)
    : pairs_(&pairs), schedule_(s), batch_size_(batch_size), crop_frames_(crop_frames), rng_(seed) {
  if (pairs.empty()) throw InvalidArgument("training: no pairs");
  if (batch_size < 1 || crop_frames < 1) throw InvalidArgument("training: bad batch layout");
  for (const auto& p : pairs) require_same_shape(p.clean, p.noisy, "training pair");
}

std::vector<TrainingSample> TrainingBatchSampler::next() {
  std::vector<TrainingSample> batch;
  const auto n = pairs_->size();
  for (int q = 0; q < batch_size_; ++q) {
    const auto idx = std::min(n - 1, static_cast<std::size_t>(rng_.uniform() * n));
    const TrainingPair& pair = (*pairs_)[idx];
    const std::size_t frames = pair.clean.frames();
    const std::size_t crop = std::min(frames, static_cast<std::size_t>(crop_frames_));
    const auto span = frames - crop + 1;
    const auto start = std::min(span - 1, static_cast<std::size_t>(rng_.uniform() * span));
    const double tau = sample_training_tau(schedule_, rng_);
    TrainingSample sample;
    sample.tau = tau;
    sample.noisy = pair.noisy.frame_slice(start, crop);
    sample.noise = rng_.complex_normal(crop, pair.clean.bins());
    sample.state =
        state_from_draw(pair.clean.frame_slice(start, crop), sample.noisy, schedule_, tau, sample.noise)
            .state;
    batch.push_back(std::move(sample));
  }
  return batch;
}

SmallScoreModel::SmallScoreModel(ModelConfig cfg, Schedule s, std::uint64_t init_seed)
    : cfg_(cfg), schedule_(s) {
  cfg_.validate();
  schedule_.validate();
  const auto h = static_cast<std::size_t>(cfg_.hidden);
  const auto patch = static_cast<std::size_t>(ModelConfig::kFeatures * cfg_.kernel_frames * cfg_.kernel_bins);
  off_.conv_w = 0;
  off_.conv_b = off_.conv_w + h * patch;
  off_.embed_w = off_.conv_b + h;
  off_.dense_w = off_.embed_w + h * static_cast<std::size_t>(cfg_.embedding);
  off_.dense_b = off_.dense_w + static_cast<std::size_t>(cfg_.hidden_layers) * h * h;
  off_.head_w = off_.dense_b + static_cast<std::size_t>(cfg_.hidden_layers) * h;
  off_.head_b = off_.head_w + ModelConfig::kOutputs * h;
  off_.total = off_.head_b + ModelConfig::kOutputs;
  params_.assign(off_.total, 0.0);

  // Scaled normal initialization; the head starts at zero so the initial
  // model is Psi = 0.
  Rng rng(init_seed);
  const double conv_sd = 1.0 / std::sqrt(static_cast<double>(patch));
  for (std::size_t i = off_.conv_w; i < off_.conv_b; ++i) params_[i] = conv_sd * rng.normal();
  if (cfg_.embedding > 0) {
    const double emb_sd = 1.0 / std::sqrt(static_cast<double>(cfg_.embedding));
    for (std::size_t i = off_.embed_w; i < off_.dense_w; ++i) params_[i] = emb_sd * rng.normal();
  }
  const double dense_sd = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = off_.dense_w; i < off_.dense_b; ++i) params_[i] = dense_sd * rng.normal();
}

double SmallScoreModel::forward_backward(const TrainingSample* sample, const ComplexSpectrum& state,
                                         const ComplexSpectrum& noisy, double tau,
                                         ComplexSpectrum* out, std::vector<double>* grad,
                                         double grad_scale) const {
  require_same_shape(state, noisy, "SmallScoreModel");
  const double g = state_sd(schedule_, tau);
  if (!(g > 0.0)) throw InvalidArgument("SmallScoreModel: tau must be > 0 (G = 0)");
  const double alpha = mean_scale(schedule_, tau);
  const double noisy_gain = alpha * clean_weight(schedule_, tau) / g;

  const std::size_t frames = state.frames();
  const std::size_t bins = state.bins();
  const std::size_t n = state.size();
  const auto H = static_cast<std::size_t>(cfg_.hidden);
  const int kf = cfg_.kernel_frames;
  const int kb = cfg_.kernel_bins;
  const int pf = kf / 2;
  const int pb = kb / 2;
  const std::size_t patch_size = static_cast<std::size_t>(ModelConfig::kFeatures * kf * kb);
  const double* p = params_.data();

  std::vector<Complex> resid(n), scaled_noisy(n);
  std::vector<double> feats(ModelConfig::kFeatures * n);
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = (state[i] - alpha * noisy[i]) / g;
    scaled_noisy[i] = noisy_gain * noisy[i];
    feats[i] = log_power_feature(std::norm(state[i]));
    feats[n + i] = log_power_feature(std::norm(noisy[i]));
    feats[2 * n + i] = log_power_feature(std::norm(resid[i]));
  }

  const std::vector<double> emb = tau_embedding(tau, cfg_.embedding);
  std::vector<double> conv_bias(H);
  for (std::size_t j = 0; j < H; ++j) {
    double acc = p[off_.conv_b + j];
    for (std::size_t e = 0; e < emb.size(); ++e) acc += p[off_.embed_w + j * emb.size() + e] * emb[e];
    conv_bias[j] = acc;
  }

  auto gather_patch = [&](std::size_t l, std::size_t m, double* patch) {
    std::size_t idx = 0;
    for (int c = 0; c < ModelConfig::kFeatures; ++c) {
      const double* fc = feats.data() + static_cast<std::size_t>(c) * n;
      for (int dl = -pf; dl <= pf; ++dl) {
        const long ll = static_cast<long>(l) + dl;
        const bool row_ok = ll >= 0 && ll < static_cast<long>(frames);
        for (int dm = -pb; dm <= pb; ++dm) {
          const long mm = static_cast<long>(m) + dm;
          patch[idx++] = (row_ok && mm >= 0 && mm < static_cast<long>(bins))
                             ? fc[static_cast<std::size_t>(ll) * bins + static_cast<std::size_t>(mm)]
                             : 0.0;
        }
      }
    }
  };

  const auto layers = static_cast<std::size_t>(cfg_.hidden_layers);
  // activations[k] holds layer k for every bin: n x H.
  std::vector<std::vector<double>> act(layers + 1, std::vector<double>(n * H));
  std::vector<double> patch(patch_size);
  for (std::size_t l = 0; l < frames; ++l) {
    for (std::size_t m = 0; m < bins; ++m) {
      const std::size_t i = l * bins + m;
      gather_patch(l, m, patch.data());
      double* h0 = act[0].data() + i * H;
      for (std::size_t j = 0; j < H; ++j) {
        const double* w = p + off_.conv_w + j * patch_size;
        double acc = conv_bias[j];
        for (std::size_t q = 0; q < patch_size; ++q) acc += w[q] * patch[q];
        h0[j] = std::tanh(acc);
      }
    }
  }
  for (std::size_t k = 0; k < layers; ++k) {
    const double* w = p + off_.dense_w + k * H * H;
    const double* b = p + off_.dense_b + k * H;
    for (std::size_t i = 0; i < n; ++i) {
      const double* in = act[k].data() + i * H;
      double* o = act[k + 1].data() + i * H;
      for (std::size_t j = 0; j < H; ++j) {
        double acc = b[j];
        for (std::size_t r = 0; r < H; ++r) acc += w[j * H + r] * in[r];
        o[j] = std::tanh(acc);
      }
    }
  }

  const double* wa = p + off_.head_w;
  const double* wb = wa + H;
  const double ba = p[off_.head_b];
  const double bb = p[off_.head_b + 1];
  std::vector<double> gain_a(n), gain_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* h = act[layers].data() + i * H;
    double a = ba, b = bb;
    for (std::size_t j = 0; j < H; ++j) {
      a += wa[j] * h[j];
      b += wb[j] * h[j];
    }
    gain_a[i] = a;
    gain_b[i] = b;
  }

  if (out) {
    *out = ComplexSpectrum(frames, bins);
    for (std::size_t i = 0; i < n; ++i) (*out)[i] = gain_a[i] * resid[i] + gain_b[i] * scaled_noisy[i];
  }
  if (!sample) return 0.0;

  std::vector<Complex> err(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err[i] = gain_a[i] * resid[i] + gain_b[i] * scaled_noisy[i] + sample->noise[i];
    loss += std::norm(err[i]);
  }
  loss /= static_cast<double>(n);
  if (!grad) return loss;

  double* gp = grad->data();
  const double scale = grad_scale * 2.0 / static_cast<double>(n);
  // Back through the head into the last hidden layer (delta stored in place).
  std::vector<double> delta(n * H);
  for (std::size_t i = 0; i < n; ++i) {
    const double da = scale * (err[i].real() * resid[i].real() + err[i].imag() * resid[i].imag());
    const double db =
        scale * (err[i].real() * scaled_noisy[i].real() + err[i].imag() * scaled_noisy[i].imag());
    const double* h = act[layers].data() + i * H;
    double* d = delta.data() + i * H;
    for (std::size_t j = 0; j < H; ++j) {
      gp[off_.head_w + j] += da * h[j];
      gp[off_.head_w + H + j] += db * h[j];
      d[j] = (da * wa[j] + db * wb[j]) * (1.0 - h[j] * h[j]);
    }
    gp[off_.head_b] += da;
    gp[off_.head_b + 1] += db;
  }
  for (std::size_t k = layers; k-- > 0;) {
    const double* w = p + off_.dense_w + k * H * H;
    double* gw = gp + off_.dense_w + k * H * H;
    double* gb = gp + off_.dense_b + k * H;
    std::vector<double> prev(n * H);
    for (std::size_t i = 0; i < n; ++i) {
      const double* in = act[k].data() + i * H;
      const double* d = delta.data() + i * H;
      double* pd = prev.data() + i * H;
      for (std::size_t j = 0; j < H; ++j) {
        gb[j] += d[j];
        for (std::size_t r = 0; r < H; ++r) {
          gw[j * H + r] += d[j] * in[r];
          pd[r] += w[j * H + r] * d[j];
        }
      }
      for (std::size_t r = 0; r < H; ++r) pd[r] *= 1.0 - in[r] * in[r];
    }
    delta.swap(prev);
  }
  std::vector<double> bias_grad(H, 0.0);
  for (std::size_t l = 0; l < frames; ++l) {
    for (std::size_t m = 0; m < bins; ++m) {
      const std::size_t i = l * bins + m;
      gather_patch(l, m, patch.data());
      const double* d = delta.data() + i * H;
      for (std::size_t j = 0; j < H; ++j) {
        if (d[j] == 0.0) continue;
        double* gw = gp + off_.conv_w + j * patch_size;
        for (std::size_t q = 0; q < patch_size; ++q) gw[q] += d[j] * patch[q];
        bias_grad[j] += d[j];
      }
    }
  }
  for (std::size_t j = 0; j < H; ++j) {
    gp[off_.conv_b + j] += bias_grad[j];
    for (std::size_t e = 0; e < emb.size(); ++e)
      gp[off_.embed_w + j * emb.size() + e] += bias_grad[j] * emb[e];
  }
  return loss;
}

ComplexSpectrum SmallScoreModel::weighted_output(const ComplexSpectrum& state,
                                                 const ComplexSpectrum& noisy, double tau) const {
  ComplexSpectrum out;
  forward_backward(nullptr, state, noisy, tau, &out, nullptr, 0.0);
  return out;
}

ComplexSpectrum SmallScoreModel::evaluate(const ComplexSpectrum& state, const ComplexSpectrum& noisy,
                                          double tau) const {
  ComplexSpectrum out = weighted_output(state, noisy, tau);
  out *= 1.0 / state_sd(schedule_, tau);
  return out;
}

double SmallScoreModel::loss_and_gradient(const std::vector<TrainingSample>& batch,
                                          std::vector<double>* grad) const {
  if (batch.empty()) throw InvalidArgument("loss_and_gradient: empty batch");
  if (grad) grad->assign(params_.size(), 0.0);
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& sample : batch)
    total += forward_backward(&sample, sample.state, sample.noisy, sample.tau, nullptr, grad, weight);
  return total * weight;
}

double TrainResult::relative_reduction() const {
  if (moving_average.empty()) return 0.0;
  return 1.0 - moving_average.back() / moving_average[initial_index];
}

namespace {

std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window) {
  std::vector<double> out(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= window) acc -= xs[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace

TrainResult train_small_model(const std::vector<TrainingPair>& pairs, const ModelConfig& model_cfg,
                              const TrainConfig& cfg, const Schedule& s,
                              const TrainObserver& observer) {
  cfg.validate();
  TrainResult result{SmallScoreModel(model_cfg, s, mix_seed(cfg.seed, 1)), {}, {}, 0};
  TrainingBatchSampler sampler(pairs, s, cfg.batch_size, cfg.crop_frames, mix_seed(cfg.seed, 2));
  SmallScoreModel& model = result.model;
  std::vector<double>& params = model.params();
  const std::size_t n = params.size();
  std::vector<double> grad(n), first_moment(n, 0.0), second_moment(n, 0.0);

  for (int step = 0; step < cfg.steps; ++step) {
    const std::vector<TrainingSample> batch = sampler.next();
    const double loss = model.loss_and_gradient(batch, &grad);
    double norm2 = 0.0;
    for (double gi : grad) norm2 += gi * gi;
    if (!std::isfinite(loss) || !std::isfinite(norm2))
      throw DivergenceError("training diverged at step " + std::to_string(step) +
                            " (loss=" + std::to_string(loss) + ")");
    result.loss_trace.push_back(loss);
    if (observer) observer(step, loss);

    const double norm = std::sqrt(norm2);
    const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;
    if (cfg.optimizer == Optimizer::sgd_momentum) {
      for (std::size_t i = 0; i < n; ++i) {
        first_moment[i] = cfg.momentum * first_moment[i] + clip * grad[i];
        params[i] -= cfg.learning_rate * first_moment[i];
      }
    } else {
      const double t = step + 1.0;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
      for (std::size_t i = 0; i < n; ++i) {
        const double gi = clip * grad[i];
        first_moment[i] = cfg.adam_beta1 * first_moment[i] + (1.0 - cfg.adam_beta1) * gi;
        second_moment[i] = cfg.adam_beta2 * second_moment[i] + (1.0 - cfg.adam_beta2) * gi * gi;
        params[i] -= cfg.learning_rate * (first_moment[i] / c1) / (std::sqrt(second_moment[i] / c2) + 1e-8);
      }
    }
  }
  result.moving_average =
      trailing_mean(result.loss_trace, static_cast<std::size_t>(cfg.average_window));
  result.initial_index =
      std::min(result.loss_trace.size(), static_cast<std::size_t>(cfg.average_window)) - 1;
  if (result.loss_trace.empty()) result.initial_index = 0;
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const SmallScoreModel& model,
                     std::uint64_t seed) {
  const Schedule& s = model.schedule();
  const ModelConfig& c = model.config();
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["schedule_hash"] = hash_hex(schedule_hash(s));
  j["schedule"] = {{"variant", std::string(to_string(s.variant))},
                   {"gamma", s.gamma},
                   {"beta_min", s.beta_min},
                   {"beta_max", s.beta_max},
                   {"T", s.T},
                   {"epsilon", s.epsilon},
                   {"ve_sigma_min", s.ve_sigma_min},
                   {"ve_sigma_max", s.ve_sigma_max}};
  j["model"] = {{"kernel_frames", c.kernel_frames},
                {"kernel_bins", c.kernel_bins},
                {"hidden", c.hidden},
                {"hidden_layers", c.hidden_layers},
                {"embedding", c.embedding}};
  j["seed"] = seed;
  j["params"] = model.params();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

SmallScoreModel load_checkpoint(const std::filesystem::path& path, const Schedule& expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw FormatError("checkpoint " + path.string() + " has an unknown format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw FormatError("checkpoint " + path.string() + " has unsupported version " +
                        std::to_string(j.at("version").get<int>()));
    const std::string want = hash_hex(schedule_hash(expected));
    const std::string got = j.at("schedule_hash").get<std::string>();
    if (got != want)
      throw FormatError("checkpoint " + path.string() + " was trained with schedule " + got +
                        " but the current schedule is " + want + " (" + describe(expected) + ")");
    ModelConfig c;
    const auto& m = j.at("model");
    c.kernel_frames = m.at("kernel_frames").get<int>();
    c.kernel_bins = m.at("kernel_bins").get<int>();
    c.hidden = m.at("hidden").get<int>();
    c.hidden_layers = m.at("hidden_layers").get<int>();
    c.embedding = m.at("embedding").get<int>();
    SmallScoreModel model(c, expected, 0);
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != model.params().size())
      throw FormatError("checkpoint " + path.string() + " has " + std::to_string(params.size()) +
                        " parameters, expected " + std::to_string(model.params().size()));
    model.params() = std::move(params);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace vpidm
