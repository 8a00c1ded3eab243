#pragma once

#include <filesystem>
#include <string>

#include "vpidm/corpus.hpp"
#include "vpidm/sampler.hpp"
#include "vpidm/schedule.hpp"
#include "vpidm/score_model.hpp"
#include "vpidm/spectral.hpp"

namespace vpidm {

/// Everything a CLI run can be configured with. Defaults are the standard
/// hyperparameters.
struct Config {
  Schedule schedule;
  StftConfig stft;
  CompressionConfig compression;
  SamplerConfig sampler;
  TrainConfig train;
  ModelConfig model;
  CorpusSpec corpus;

  void validate() const;
};

/// Parses a TOML file with optional sections [schedule], [stft],
/// [compression], [sampler], [train], [model] and [corpus]. Missing keys keep
/// their defaults; unknown sections or keys are rejected (InvalidArgument).
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& toml_text, const std::string& source = "config");

/// TOML text that parse_config() maps back to the same values.
std::string dump_config(const Config& cfg);

}  // namespace vpidm
