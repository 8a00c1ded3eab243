#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vpidm/types.hpp"

namespace vpidm {

enum class CleanKind { multisine, chirp, filtered_noise };
enum class NoiseKind { white, pink, babble_proxy };

std::string_view to_string(CleanKind k);
std::string_view to_string(NoiseKind k);
CleanKind parse_clean_kind(std::string_view name);
NoiseKind parse_noise_kind(std::string_view name);

/// Recipe for a synthetic paired corpus. Utterance i uses
/// snr_levels_db[i % snr_levels_db.size()].
struct CorpusSpec {
  int n_utterances = 20;
  double duration_s = 2.04;  ///< 32640 samples, 256 frames at hop 128
  int sample_rate = 16000;
  std::vector<double> snr_levels_db{-5.0, 0.0, 5.0};
  CleanKind clean_kind = CleanKind::multisine;
  NoiseKind noise_kind = NoiseKind::white;
  std::uint64_t seed = 0;
  double peak = 0.98;  ///< both signals are scaled so the larger peak equals this
  unsigned threads = 0;

  std::size_t samples() const;
  void validate() const;
};

struct CorpusItem {
  Waveform clean;
  Waveform noisy;
  double snr_db = 0.0;
  std::uint64_t seed = 0;  ///< per-utterance seed
};

/// Deterministic given spec.seed, independent of spec.threads.
std::vector<CorpusItem> generate(const CorpusSpec& spec);

/// Individual generators; each output has unit RMS before the envelope.
Waveform make_clean(CleanKind kind, std::size_t samples, int sample_rate, std::uint64_t seed);
Waveform make_noise(NoiseKind kind, std::size_t samples, int sample_rate, std::uint64_t seed);

/// 10 log10(P_clean / P_{noisy - clean}).
double measured_snr_db(const Waveform& clean, const Waveform& noisy);

/// Reads a clean/noisy WAV pair, requiring equal sample rates, and trims
/// both to the shorter length.
std::pair<Waveform, Waveform> load_pair(const std::filesystem::path& clean_path,
                                        const std::filesystem::path& noisy_path);

struct ManifestEntry {
  std::filesystem::path clean;  ///< may be empty for noisy-only entries
  std::filesystem::path noisy;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Writes clean/uttNNN.wav, noisy/uttNNN.wav and manifest.jsonl under `dir`;
/// paths in the manifest are relative to `dir`.
std::vector<ManifestEntry> write_corpus(const std::filesystem::path& dir,
                                        const std::vector<CorpusItem>& items);

/// Reads a JSON-lines manifest; relative paths are resolved against the
/// manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace vpidm
