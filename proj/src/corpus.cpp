#include "vpidm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "parallel.hpp"
#include "vpidm/rng.hpp"
#include "vpidm/spectral.hpp"
#include "vpidm/wav.hpp"

namespace vpidm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

void normalize_rms(std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / static_cast<double>(x.size()));
  if (p > 0.0)
    for (double& v : x) v /= p;
}

// Two-pole resonator driven by `in`, centre fc and bandwidth bw (Hz).
std::vector<double> resonate(const std::vector<double>& in, double fc, double bw, int sr) {
  const double r = std::exp(-std::numbers::pi * bw / sr);
  const double a1 = 2.0 * r * std::cos(kTwoPi * fc / sr);
  const double a2 = -r * r;
  std::vector<double> out(in.size());
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double y = in[i] + a1 * y1 + a2 * y2;
    out[i] = y;
    y2 = y1;
    y1 = y;
  }
  return out;
}

// Syllable-like on/off envelope: rectified sinusoid raised to 1.5.
std::vector<double> syllable_envelope(std::size_t n, int sr, Rng& rng) {
  const double rate = 2.0 + 2.0 * rng.uniform();
  const double phase = kTwoPi * rng.uniform();
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    env[i] = std::pow(std::max(0.0, std::sin(kTwoPi * rate * t + phase)), 1.5);
  }
  return env;
}

std::vector<double> multisine(std::size_t n, int sr, Rng& rng) {
  const double f0 = 100.0 + 150.0 * rng.uniform();
  std::vector<double> x(n, 0.0);
  for (int h = 1; h <= 10; ++h) {
    if (f0 * h > 0.45 * sr) break;
    const double amp = (0.2 + 0.8 * rng.uniform()) / h;
    const double vibrato_rate = 1.0 + 2.0 * rng.uniform();
    const double phase = kTwoPi * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sr;
      x[i] += amp * std::sin(kTwoPi * f0 * h * t * (1.0 + 0.03 * std::sin(kTwoPi * vibrato_rate * t)) + phase);
    }
  }
  return x;
}

std::vector<double> chirp(std::size_t n, int sr, Rng& rng) {
  const double f_start = 150.0 + 250.0 * rng.uniform();
  const double f_end = 1500.0 + 2500.0 * rng.uniform();
  const double duration = static_cast<double>(n) / sr;
  const double k = std::log(f_end / f_start) / duration;
  std::vector<double> x(n, 0.0);
  for (int h = 1; h <= 3; ++h) {
    const double phase0 = kTwoPi * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sr;
      // Exponential sweep: instantaneous frequency f_start e^{k t}.
      const double phase = kTwoPi * f_start * (std::exp(k * t) - 1.0) / k;
      if (h * f_start * std::exp(k * t) < 0.45 * sr) x[i] += std::sin(h * phase + phase0) / h;
    }
  }
  return x;
}

std::vector<double> filtered_noise(std::size_t n, int sr, Rng& rng) {
  std::vector<double> excitation(n);
  for (double& v : excitation) v = rng.normal();
  const double bands[3][2] = {{300.0, 900.0}, {900.0, 2200.0}, {2200.0, 3500.0}};
  std::vector<double> x(n, 0.0);
  for (const auto& band : bands) {
    const double fc = band[0] + (band[1] - band[0]) * rng.uniform();
    const double bw = 100.0 + 100.0 * rng.uniform();
    std::vector<double> y = resonate(excitation, fc, bw, sr);
    normalize_rms(y);
    const double gain = 0.3 + 0.7 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) x[i] += gain * y[i];
  }
  return x;
}

std::vector<double> pink(std::size_t n, Rng& rng) {
  // Paul Kellett's refined pinking filter.
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    x[i] = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
    b6 = w * 0.115926;
  }
  return x;
}

std::vector<double> babble_proxy(std::size_t n, int sr, Rng& rng) {
  std::vector<double> x(n, 0.0);
  for (int talker = 0; talker < 6; ++talker) {
    std::vector<double> w(n);
    for (double& v : w) v = rng.normal();
    const double fc = 200.0 + 3300.0 * rng.uniform();
    std::vector<double> band = resonate(w, fc, 150.0, sr);
    normalize_rms(band);
    const double fm = 2.0 + 4.0 * rng.uniform();
    const double phase = kTwoPi * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sr;
      x[i] += (1.0 + 0.8 * std::sin(kTwoPi * fm * t + phase)) * band[i];
    }
  }
  return x;
}

double peak_abs(const Waveform& w) {
  double p = 0.0;
  for (double v : w.samples) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace

std::string_view to_string(CleanKind k) {
  switch (k) {
    case CleanKind::multisine: return "multisine";
    case CleanKind::chirp: return "chirp";
    case CleanKind::filtered_noise: return "filtered_noise";
  }
  return "unknown";
}

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    case NoiseKind::babble_proxy: return "babble_proxy";
  }
  return "unknown";
}

CleanKind parse_clean_kind(std::string_view name) {
  const std::string s = lowercase(name);
  if (s == "multisine") return CleanKind::multisine;
  if (s == "chirp") return CleanKind::chirp;
  if (s == "filtered_noise") return CleanKind::filtered_noise;
  throw InvalidArgument("unknown clean kind: " + std::string(name));
}

NoiseKind parse_noise_kind(std::string_view name) {
  const std::string s = lowercase(name);
  if (s == "white") return NoiseKind::white;
  if (s == "pink") return NoiseKind::pink;
  if (s == "babble_proxy") return NoiseKind::babble_proxy;
  throw InvalidArgument("unknown noise kind: " + std::string(name));
}

std::size_t CorpusSpec::samples() const {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
}

void CorpusSpec::validate() const {
  if (n_utterances < 0) throw InvalidArgument("corpus: n_utterances must be >= 0");
  if (sample_rate <= 0) throw InvalidArgument("corpus: sample_rate must be > 0");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s))
    throw InvalidArgument("corpus: duration_s must be positive and finite");
  if (samples() < static_cast<std::size_t>(StftConfig{}.window_length))
    throw InvalidArgument("corpus: duration is shorter than one analysis window");
  if (snr_levels_db.empty()) throw InvalidArgument("corpus: snr_levels_db is empty");
  for (double snr : snr_levels_db)
    if (!std::isfinite(snr)) throw InvalidArgument("corpus: SNR levels must be finite");
  if (!(peak > 0.0 && peak < 0.99)) throw InvalidArgument("corpus: peak must be in (0, 0.99)");
}

Waveform make_clean(CleanKind kind, std::size_t samples, int sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x;
  switch (kind) {
    case CleanKind::multisine: x = multisine(samples, sample_rate, rng); break;
    case CleanKind::chirp: x = chirp(samples, sample_rate, rng); break;
    case CleanKind::filtered_noise: x = filtered_noise(samples, sample_rate, rng); break;
  }
  normalize_rms(x);
  const std::vector<double> env = syllable_envelope(samples, sample_rate, rng);
  for (std::size_t i = 0; i < samples; ++i) x[i] *= env[i];
  return {std::move(x), sample_rate};
}

Waveform make_noise(NoiseKind kind, std::size_t samples, int sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x;
  switch (kind) {
    case NoiseKind::white:
      x.resize(samples);
      for (double& v : x) v = rng.normal();
      break;
    case NoiseKind::pink: x = pink(samples, rng); break;
    case NoiseKind::babble_proxy: x = babble_proxy(samples, sample_rate, rng); break;
  }
  normalize_rms(x);
  return {std::move(x), sample_rate};
}

double measured_snr_db(const Waveform& clean, const Waveform& noisy) {
  if (clean.size() != noisy.size()) throw ShapeMismatch("measured_snr_db: lengths differ");
  double pc = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double n = noisy.samples[i] - clean.samples[i];
    pc += clean.samples[i] * clean.samples[i];
    pn += n * n;
  }
  return 10.0 * std::log10(pc / pn);
}

std::vector<CorpusItem> generate(const CorpusSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.n_utterances);
  std::vector<CorpusItem> items(n);
  const std::size_t samples = spec.samples();
  detail::parallel_for(n, spec.threads, [&](std::size_t u) {
    CorpusItem& item = items[u];
    item.seed = mix_seed(spec.seed, u);
    item.snr_db = spec.snr_levels_db[u % spec.snr_levels_db.size()];
    const Waveform clean =
        make_clean(spec.clean_kind, samples, spec.sample_rate, mix_seed(item.seed, 0));
    const Waveform noise =
        make_noise(spec.noise_kind, samples, spec.sample_rate, mix_seed(item.seed, 1));
    item.noisy = mix_snr(clean, noise, item.snr_db);
    item.clean = clean;
    const double scale = spec.peak / std::max(peak_abs(item.noisy), peak_abs(item.clean));
    for (double& v : item.clean.samples) v *= scale;
    for (double& v : item.noisy.samples) v *= scale;
  });
  return items;
}

std::pair<Waveform, Waveform> load_pair(const std::filesystem::path& clean_path,
                                        const std::filesystem::path& noisy_path) {
  Waveform clean = read_wav(clean_path);
  Waveform noisy = read_wav(noisy_path);
  if (clean.sample_rate != noisy.sample_rate)
    throw FormatError("sample rates differ: " + clean_path.string() + " is " +
                      std::to_string(clean.sample_rate) + " Hz, " + noisy_path.string() + " is " +
                      std::to_string(noisy.sample_rate) + " Hz");
  const std::size_t len = std::min(clean.size(), noisy.size());
  clean.samples.resize(len);
  noisy.samples.resize(len);
  return {std::move(clean), std::move(noisy)};
}

std::vector<ManifestEntry> write_corpus(const std::filesystem::path& dir,
                                        const std::vector<CorpusItem>& items) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "clean", ec);
  fs::create_directories(dir / "noisy", ec);
  if (ec) throw IoError("cannot create corpus directory " + dir.string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.jsonl").string());
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "utt%03zu.wav", i);
    ManifestEntry e{fs::path("clean") / name, fs::path("noisy") / name, items[i].snr_db, items[i].seed};
    write_wav(dir / e.clean, items[i].clean);
    write_wav(dir / e.noisy, items[i].noisy);
    nlohmann::json j = {{"index", i},
                        {"clean", e.clean.generic_string()},
                        {"noisy", e.noisy.generic_string()},
                        {"snr_db", e.snr_db},
                        {"seed", e.seed}};
    manifest << j.dump() << '\n';
    entries.push_back(std::move(e));
  }
  if (!manifest) throw IoError("failed writing manifest in " + dir.string());
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.noisy = resolve(j.at("noisy").get<std::string>());
      if (j.contains("clean") && !j["clean"].is_null()) e.clean = resolve(j["clean"].get<std::string>());
      e.snr_db = j.value("snr_db", 0.0);
      e.seed = j.value("seed", std::uint64_t{0});
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

}  // namespace vpidm
