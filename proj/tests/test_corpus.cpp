#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>

#include "support.hpp"
#include "vpidm/corpus.hpp"
#include "vpidm/metrics.hpp"
#include "vpidm/spectral.hpp"
#include "vpidm/wav.hpp"

using namespace vpidm;
using Catch::Approx;

namespace {

void put16(std::ofstream& f, std::uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); }
void put32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

// Minimal PCM header writer, independent of write_wav().
void write_raw_wav(const std::filesystem::path& p, int channels, int rate, int frames) {
  std::ofstream f(p, std::ios::binary);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * channels * 2);
  f.write("RIFF", 4);
  put32(f, 36 + data_bytes);
  f.write("WAVEfmt ", 8);
  put32(f, 16);
  put16(f, 1);
  put16(f, static_cast<std::uint16_t>(channels));
  put32(f, static_cast<std::uint32_t>(rate));
  put32(f, static_cast<std::uint32_t>(rate * channels * 2));
  put16(f, static_cast<std::uint16_t>(channels * 2));
  put16(f, 16);
  f.write("data", 4);
  put32(f, data_bytes);
  for (int i = 0; i < frames * channels; ++i) put16(f, static_cast<std::uint16_t>(i * 37));
}

double band_power(const Waveform& w, double lo_hz, double hi_hz) {
  const auto z = stft(w, {});
  double acc = 0.0;
  for (std::size_t l = 0; l < z.frames(); ++l)
    for (std::size_t m = 0; m < z.bins(); ++m) {
      const double hz = m * double(w.sample_rate) / 510.0;
      if (hz >= lo_hz && hz < hi_hz) acc += std::norm(z(l, m));
    }
  return acc;
}

}  // namespace

TEST_CASE("generated pairs hit the requested SNR") {
  CorpusSpec spec;
  spec.n_utterances = 6;
  spec.seed = 3;
  const auto items = generate(spec);
  REQUIRE(items.size() == 6u);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    CHECK(it.snr_db == spec.snr_levels_db[i % 3]);
    CHECK(std::abs(measured_snr_db(it.clean, it.noisy) - it.snr_db) < 1e-9);
    CHECK(it.clean.size() == 32640u);
    CHECK(it.noisy.size() == 32640u);
    double peak = 0.0;
    for (std::size_t n = 0; n < it.clean.size(); ++n) {
      REQUIRE(std::isfinite(it.noisy.samples[n]));
      peak = std::max({peak, std::abs(it.clean.samples[n]), std::abs(it.noisy.samples[n])});
    }
    CHECK(peak == Approx(0.98).epsilon(1e-12));
    CHECK(analyze(it.noisy).frames() >= 256u);
  }
}

TEST_CASE("0 dB white noise gives about 0 dB SI-SDR") {
  CorpusSpec spec;
  spec.n_utterances = 5;
  spec.snr_levels_db = {0.0};
  spec.seed = 4;
  for (const auto& it : generate(spec)) CHECK(std::abs(si_sdr(it.clean, it.noisy)) < 0.5);
}

TEST_CASE("generation is deterministic and thread-count independent") {
  CorpusSpec spec;
  spec.n_utterances = 4;
  spec.duration_s = 0.3;
  spec.noise_kind = NoiseKind::babble_proxy;
  spec.seed = 9;
  spec.threads = 1;
  const auto a = generate(spec);
  spec.threads = 3;
  const auto b = generate(spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].clean.samples == b[i].clean.samples);
    CHECK(a[i].noisy.samples == b[i].noisy.samples);
  }
  spec.seed = 10;
  CHECK(generate(spec)[0].noisy.samples != a[0].noisy.samples);
  spec.n_utterances = 0;
  CHECK(generate(spec).empty());
}

TEST_CASE("every generator kind produces finite, distinct audio") {
  for (CleanKind k : {CleanKind::multisine, CleanKind::chirp, CleanKind::filtered_noise}) {
    const auto w = make_clean(k, 8000, 16000, 1);
    CHECK(w.size() == 8000u);
    for (double v : w.samples) REQUIRE(std::isfinite(v));
    CHECK(signal_power(w) > 0.0);
    CHECK(parse_clean_kind(to_string(k)) == k);
  }
  for (NoiseKind k : {NoiseKind::white, NoiseKind::pink, NoiseKind::babble_proxy}) {
    const auto w = make_noise(k, 16000, 16000, 2);
    CHECK(std::sqrt(signal_power(w)) == Approx(1.0).epsilon(1e-9));
    CHECK(parse_noise_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_noise_kind("traffic"), InvalidArgument);
  // pink noise leans toward low frequencies, white noise does not
  const auto pink = make_noise(NoiseKind::pink, 32000, 16000, 3);
  const auto white = make_noise(NoiseKind::white, 32000, 16000, 3);
  CHECK(band_power(pink, 100, 1000) > 5.0 * band_power(pink, 7000, 7900));
  CHECK(band_power(white, 100, 1000) < 2.0 * band_power(white, 7000, 7900));
}

TEST_CASE("corpus spec validation") {
  CorpusSpec spec;
  spec.snr_levels_db = {};
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = CorpusSpec{};
  spec.peak = 1.2;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
  spec = CorpusSpec{};
  spec.n_utterances = -1;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("WAV round trip is exact after quantization") {
  test::TempDir dir("wav");
  const auto w = quantize_16bit(test::white(5000, 7, 0.3));
  write_wav(dir.path() / "a.wav", w);
  const auto back = read_wav(dir.path() / "a.wav");
  CHECK(back.sample_rate == 16000);
  CHECK(back.samples == w.samples);
  CHECK_THROWS_AS(read_wav(dir.path() / "a.wav", 8000), FormatError);
  CHECK_THROWS_AS(read_wav(dir.path() / "missing.wav"), IoError);
}

TEST_CASE("WAV reader rejects stereo and mismatched rates") {
  test::TempDir dir("wavfmt");
  write_raw_wav(dir.path() / "stereo.wav", 2, 16000, 100);
  CHECK_THROWS_AS(read_wav(dir.path() / "stereo.wav"), FormatError);
  write_raw_wav(dir.path() / "mono.wav", 1, 16000, 100);
  CHECK(read_wav(dir.path() / "mono.wav").size() == 100u);

  Waveform lo = test::white(800, 1, 0.1, 8000);
  Waveform hi = test::white(1600, 2, 0.1, 16000);
  write_wav(dir.path() / "lo.wav", lo);
  write_wav(dir.path() / "hi.wav", hi);
  CHECK_THROWS_AS(load_pair(dir.path() / "hi.wav", dir.path() / "lo.wav"), FormatError);

  Waveform shorter = test::white(1000, 3, 0.1, 16000);
  write_wav(dir.path() / "short.wav", shorter);
  const auto [c, n] = load_pair(dir.path() / "hi.wav", dir.path() / "short.wav");
  CHECK(c.size() == 1000u);
  CHECK(n.size() == 1000u);
}

TEST_CASE("corpus directory and manifest") {
  test::TempDir dir("corpus");
  CorpusSpec spec;
  spec.n_utterances = 3;
  spec.duration_s = 0.25;
  spec.seed = 1;
  const auto items = generate(spec);
  const auto written = write_corpus(dir.path(), items);
  REQUIRE(written.size() == 3u);
  CHECK(std::filesystem::exists(dir.path() / "clean" / "utt000.wav"));
  CHECK(std::filesystem::exists(dir.path() / "noisy" / "utt002.wav"));

  const auto entries = read_manifest(dir.path() / "manifest.jsonl");
  REQUIRE(entries.size() == 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(entries[i].snr_db == items[i].snr_db);
    CHECK(entries[i].seed == items[i].seed);
    const auto [c, n] = load_pair(entries[i].clean, entries[i].noisy);
    CHECK(c.samples == quantize_16bit(items[i].clean).samples);
    CHECK(n.samples == quantize_16bit(items[i].noisy).samples);
  }
  CHECK_THROWS_AS(read_manifest(dir.path() / "nope.jsonl"), IoError);
}
