#include "vpidm/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace vpidm {

namespace {

class Section {
 public:
  Section(const toml::table& root, const std::string& name, const std::string& source)
      : name_(name), source_(source) {
    if (const auto* node = root.get(name)) {
      table_ = node->as_table();
      if (!table_) throw InvalidArgument(source + ": [" + name + "] must be a table");
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!table_) return;
    const auto* node = table_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node->value<double>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = node->value<std::int64_t>()) {
        if (*v < 0 && std::is_unsigned_v<T>) throw bad(key, "must be non-negative");
        out = static_cast<T>(*v);
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (const auto* arr = node->as_array()) {
        std::vector<double> values;
        for (const auto& el : *arr) {
          auto v = el.value<double>();
          if (!v) throw bad(key, "must be an array of numbers");
          values.push_back(*v);
        }
        out = std::move(values);
        return;
      }
    }
    throw bad(key, "has the wrong type");
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      (void)node;
      if (!seen_.count(std::string(key.str())))
        throw InvalidArgument(source_ + ": unknown key '" + std::string(key.str()) + "' in [" +
                              name_ + "]");
    }
  }

 private:
  InvalidArgument bad(const std::string& key, const std::string& what) const {
    return InvalidArgument(source_ + ": " + name_ + "." + key + " " + what);
  }

  std::string name_;
  std::string source_;
  const toml::table* table_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

void Config::validate() const {
  schedule.validate();
  stft.validate();
  compression.validate();
  sampler.validate();
  train.validate();
  model.validate();
  corpus.validate();
}

Config parse_config(const std::string& toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw InvalidArgument(msg.str());
  }
  static const std::set<std::string> known = {"schedule", "stft",  "compression", "sampler",
                                              "train",    "model", "corpus"};
  for (const auto& [key, node] : root) {
    (void)node;
    if (!known.count(std::string(key.str())))
      throw InvalidArgument(source + ": unknown section [" + std::string(key.str()) + "]");
  }

  Config cfg;
  {
    Section sec(root, "schedule", source);
    std::string variant(to_string(cfg.schedule.variant));
    sec.read("variant", variant);
    cfg.schedule.variant = parse_variant(variant);
    sec.read("gamma", cfg.schedule.gamma);
    sec.read("beta_min", cfg.schedule.beta_min);
    sec.read("beta_max", cfg.schedule.beta_max);
    sec.read("T", cfg.schedule.T);
    sec.read("epsilon", cfg.schedule.epsilon);
    sec.read("ve_sigma_min", cfg.schedule.ve_sigma_min);
    sec.read("ve_sigma_max", cfg.schedule.ve_sigma_max);
    sec.finish();
  }
  {
    Section sec(root, "stft", source);
    sec.read("window_length", cfg.stft.window_length);
    sec.read("hop", cfg.stft.hop);
    sec.read("fft_size", cfg.stft.fft_size);
    int fixed = cfg.stft.fixed_frames.value_or(0);
    sec.read("fixed_frames", fixed);
    cfg.stft.fixed_frames = fixed > 0 ? std::optional<int>(fixed) : std::nullopt;
    sec.finish();
  }
  {
    Section sec(root, "compression", source);
    sec.read("a", cfg.compression.a);
    sec.read("c", cfg.compression.c);
    sec.finish();
  }
  {
    Section sec(root, "sampler", source);
    sec.read("K", cfg.sampler.K);
    // An unset K1 follows a smaller K.
    cfg.sampler.K1 = std::min(cfg.sampler.K1, cfg.sampler.K);
    sec.read("K1", cfg.sampler.K1);
    sec.read("seed", cfg.sampler.seed);
    std::string mode(to_string(cfg.sampler.mode));
    sec.read("mode", mode);
    cfg.sampler.mode = parse_sampler_mode(mode);
    sec.finish();
  }
  {
    Section sec(root, "train", source);
    sec.read("batch_size", cfg.train.batch_size);
    sec.read("learning_rate", cfg.train.learning_rate);
    sec.read("steps", cfg.train.steps);
    sec.read("momentum", cfg.train.momentum);
    std::string opt(to_string(cfg.train.optimizer));
    sec.read("optimizer", opt);
    cfg.train.optimizer = parse_optimizer(opt);
    sec.read("adam_beta1", cfg.train.adam_beta1);
    sec.read("adam_beta2", cfg.train.adam_beta2);
    sec.read("clip_norm", cfg.train.clip_norm);
    sec.read("crop_frames", cfg.train.crop_frames);
    sec.read("average_window", cfg.train.average_window);
    sec.read("seed", cfg.train.seed);
    sec.finish();
  }
  {
    Section sec(root, "model", source);
    sec.read("kernel_frames", cfg.model.kernel_frames);
    sec.read("kernel_bins", cfg.model.kernel_bins);
    sec.read("hidden", cfg.model.hidden);
    sec.read("hidden_layers", cfg.model.hidden_layers);
    sec.read("embedding", cfg.model.embedding);
    sec.finish();
  }
  {
    Section sec(root, "corpus", source);
    sec.read("n_utterances", cfg.corpus.n_utterances);
    sec.read("duration_s", cfg.corpus.duration_s);
    sec.read("sample_rate", cfg.corpus.sample_rate);
    sec.read("snr_levels_db", cfg.corpus.snr_levels_db);
    std::string clean(to_string(cfg.corpus.clean_kind)), noise(to_string(cfg.corpus.noise_kind));
    sec.read("clean_kind", clean);
    sec.read("noise_kind", noise);
    cfg.corpus.clean_kind = parse_clean_kind(clean);
    cfg.corpus.noise_kind = parse_noise_kind(noise);
    sec.read("seed", cfg.corpus.seed);
    sec.read("peak", cfg.corpus.peak);
    sec.finish();
  }
  cfg.validate();
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string dump_config(const Config& c) {
  toml::array snrs;
  for (double v : c.corpus.snr_levels_db) snrs.push_back(v);
  const toml::table root{
      {"schedule", toml::table{{"variant", std::string(to_string(c.schedule.variant))},
                               {"gamma", c.schedule.gamma},
                               {"beta_min", c.schedule.beta_min},
                               {"beta_max", c.schedule.beta_max},
                               {"T", c.schedule.T},
                               {"epsilon", c.schedule.epsilon},
                               {"ve_sigma_min", c.schedule.ve_sigma_min},
                               {"ve_sigma_max", c.schedule.ve_sigma_max}}},
      {"stft", toml::table{{"window_length", c.stft.window_length},
                           {"hop", c.stft.hop},
                           {"fft_size", c.stft.fft_size},
                           {"fixed_frames", c.stft.fixed_frames.value_or(0)}}},
      {"compression", toml::table{{"a", c.compression.a}, {"c", c.compression.c}}},
      {"sampler", toml::table{{"K", c.sampler.K},
                              {"K1", c.sampler.K1},
                              {"seed", static_cast<std::int64_t>(c.sampler.seed)},
                              {"mode", std::string(to_string(c.sampler.mode))}}},
      {"train", toml::table{{"batch_size", c.train.batch_size},
                            {"learning_rate", c.train.learning_rate},
                            {"steps", c.train.steps},
                            {"momentum", c.train.momentum},
                            {"optimizer", std::string(to_string(c.train.optimizer))},
                            {"adam_beta1", c.train.adam_beta1},
                            {"adam_beta2", c.train.adam_beta2},
                            {"clip_norm", c.train.clip_norm},
                            {"crop_frames", c.train.crop_frames},
                            {"average_window", c.train.average_window},
                            {"seed", static_cast<std::int64_t>(c.train.seed)}}},
      {"model", toml::table{{"kernel_frames", c.model.kernel_frames},
                            {"kernel_bins", c.model.kernel_bins},
                            {"hidden", c.model.hidden},
                            {"hidden_layers", c.model.hidden_layers},
                            {"embedding", c.model.embedding}}},
      {"corpus", toml::table{{"n_utterances", c.corpus.n_utterances},
                             {"duration_s", c.corpus.duration_s},
                             {"sample_rate", c.corpus.sample_rate},
                             {"snr_levels_db", snrs},
                             {"clean_kind", std::string(to_string(c.corpus.clean_kind))},
                             {"noise_kind", std::string(to_string(c.corpus.noise_kind))},
                             {"seed", static_cast<std::int64_t>(c.corpus.seed)},
                             {"peak", c.corpus.peak}}},
  };
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

}  // namespace vpidm
