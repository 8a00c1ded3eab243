#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "verify.hpp"
#include "vpidm/config.hpp"
#include "vpidm/corpus.hpp"
#include "vpidm/metrics.hpp"
#include "vpidm/sampler.hpp"
#include "vpidm/score.hpp"
#include "vpidm/score_model.hpp"
#include "vpidm/spectral.hpp"
#include "vpidm/wav.hpp"

namespace fs = std::filesystem;

namespace vpidm::cli {

namespace {

class Logger {
 public:
  Logger(std::ostream& out, const bool& quiet) : out_(out), quiet_(quiet) {}
  template <typename... Args>
  void info(const Args&... args) const {
    if (quiet_) return;
    out_ << "[vpidm] ";
    (out_ << ... << args);
    out_ << '\n';
  }
  template <typename... Args>
  void error(const Args&... args) const {
    out_ << "[vpidm] error: ";
    (out_ << ... << args);
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  const bool& quiet_;
};

struct Common {
  std::string config_path;
  bool quiet = false;
};

// Resolved configuration plus a record of whether it came from a file.
struct Resolved {
  Config cfg;
  bool from_file = false;
};

Resolved resolve_config(const Common& common) {
  Resolved r;
  if (!common.config_path.empty()) {
    r.cfg = load_config(common.config_path);
    r.from_file = true;
  }
  return r;
}

template <typename T>
std::string show(const T& v) {
  std::ostringstream out;
  out << v;
  return out.str();
}
template <typename T>
std::string show(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

// Flags win over the config file; a conflicting value is logged.
template <typename T>
void apply_flag(const Logger& log, const Resolved& r, const char* flag, const char* key, T& target,
                const std::optional<T>& value) {
  if (!value) return;
  if (r.from_file && !(target == *value))
    log.info("flag ", flag, "=", show(*value), " overrides config ", key, "=", show(target));
  target = *value;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_resolved(const fs::path& dir, const Config& cfg) {
  auto out = open_out(dir / "resolved_config.toml");
  out << dump_config(cfg);
}

struct InputFile {
  fs::path noisy;
  fs::path clean;  ///< empty when no reference is known
  double snr_db = std::nan("");
};

std::vector<InputFile> collect_inputs(const std::string& in, const std::string& clean) {
  const fs::path p(in);
  std::vector<InputFile> files;
  if (p.extension() == ".jsonl") {
    for (const auto& e : read_manifest(p)) files.push_back({e.noisy, e.clean, e.snr_db});
    if (files.empty()) throw InvalidArgument("manifest " + in + " lists no files");
  } else {
    files.push_back({p, clean.empty() ? fs::path() : fs::path(clean), std::nan("")});
  }
  return files;
}

// Shared by enhance and sweep-steps so that equal settings give equal numbers.
struct FileResult {
  Waveform enhanced;
  std::vector<StepDiagnostic> diagnostics;
  bool has_reference = false;
  double si_sdr_in = 0.0;
  double si_sdr_out = 0.0;
  double lsd = 0.0;
};

struct ScoreSource {
  bool oracle = true;
  std::unique_ptr<SmallScoreModel> model;
};

ScoreSource load_score(const std::string& spec, const Config& cfg) {
  ScoreSource src;
  if (spec == "oracle") return src;
  src.oracle = false;
  src.model = std::make_unique<SmallScoreModel>(load_checkpoint(spec, cfg.schedule));
  return src;
}

FileResult process_file(const InputFile& f, const ScoreSource& score, const Config& cfg,
                        const SamplerConfig& sampler, bool want_diagnostics) {
  FileResult r;
  Waveform noisy, clean;
  if (!f.clean.empty()) {
    std::tie(clean, noisy) = load_pair(f.clean, f.noisy);
    r.has_reference = true;
  } else {
    noisy = read_wav(f.noisy);
  }
  std::unique_ptr<OracleScore> oracle;
  const ScoreFn* psi = score.model.get();
  if (score.oracle) {
    if (!r.has_reference)
      throw InvalidArgument("the oracle score needs a clean reference for " + f.noisy.string());
    oracle = std::make_unique<OracleScore>(analyze(clean, cfg.stft, cfg.compression), cfg.schedule);
    psi = oracle.get();
  }
  r.enhanced = quantize_16bit(enhance(noisy, *psi, cfg.schedule, sampler, cfg.stft, cfg.compression,
                                      want_diagnostics ? &r.diagnostics : nullptr));
  if (r.has_reference) {
    r.si_sdr_in = si_sdr(clean, noisy);
    r.si_sdr_out = si_sdr(clean, r.enhanced);
    r.lsd = log_spectral_distance(analyze(r.enhanced, cfg.stft, cfg.compression),
                                  analyze(clean, cfg.stft, cfg.compression));
  }
  return r;
}

std::vector<FileResult> process_all(const std::vector<InputFile>& files, const ScoreSource& score,
                                    const Config& cfg, bool want_diagnostics, unsigned threads) {
  std::vector<FileResult> results(files.size());
  detail::parallel_for(files.size(), threads, [&](std::size_t i) {
    SamplerConfig sc = cfg.sampler;
    sc.seed = mix_seed(cfg.sampler.seed, i);
    results[i] = process_file(files[i], score, cfg, sc, want_diagnostics);
  });
  return results;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& log_stream) {
  Common common;
  Logger log(log_stream, common.quiet);
  CLI::App app{"Interpolating diffusion speech enhancement: corpus, training, sampling, verification"};
  app.set_help_all_flag("--help-all");
  app.add_option("--config", common.config_path, "TOML configuration file")->check(CLI::ExistingFile);
  app.add_flag("-q,--quiet", common.quiet, "only print errors");
  app.require_subcommand(1);
  app.fallthrough();

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic paired corpus and its manifest");
  std::string gen_out;
  std::optional<int> gen_n;
  std::optional<std::vector<double>> gen_snr;
  std::optional<double> gen_duration;
  std::optional<std::string> gen_clean, gen_noise;
  std::optional<std::uint64_t> gen_seed;
  unsigned gen_threads = 0;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", gen_n, "number of utterances");
  gen->add_option("--snr", gen_snr, "SNR levels in dB, cycled over utterances")->delimiter(',');
  gen->add_option("--duration", gen_duration, "seconds per utterance");
  gen->add_option("--clean-kind", gen_clean, "multisine | chirp | filtered_noise");
  gen->add_option("--noise-kind", gen_noise, "white | pink | babble_proxy");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--threads", gen_threads, "worker threads (0 = all cores)");

  // train
  auto* train = app.add_subcommand("train", "train the small score model on a corpus manifest");
  std::string train_corpus, train_out;
  std::optional<int> train_steps, train_batch;
  std::optional<double> train_lr;
  std::optional<std::string> train_opt;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--corpus", train_corpus, "manifest.jsonl with clean references")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--steps", train_steps, "optimizer steps");
  train->add_option("--lr", train_lr, "learning rate");
  train->add_option("--optimizer", train_opt, "sgd | adam");
  train->add_option("--batch", train_batch, "batch size");
  train->add_option("--seed", train_seed, "training seed");

  // enhance
  auto* enh = app.add_subcommand("enhance", "enhance a WAV file or every file of a manifest");
  std::string enh_in, enh_clean, enh_out, enh_score = "oracle";
  std::optional<std::string> enh_mode;
  std::optional<int> enh_k, enh_k1;
  std::optional<std::uint64_t> enh_seed;
  bool enh_diag = false;
  unsigned enh_threads = 0;
  enh->add_option("--in", enh_in, "noisy WAV or manifest.jsonl")->required();
  enh->add_option("--clean", enh_clean, "clean reference for a single WAV input");
  enh->add_option("--score", enh_score, "'oracle' or a checkpoint path");
  enh->add_option("--mode", enh_mode, "full | early-stop");
  enh->add_option("--k", enh_k, "grid size K");
  enh->add_option("--k1", enh_k1, "reverse steps in early-stop mode");
  enh->add_option("--seed", enh_seed, "sampler seed");
  enh->add_option("--out", enh_out, "output directory")->required();
  enh->add_flag("--diagnostics", enh_diag, "write per-step diagnostics CSVs");
  enh->add_option("--threads", enh_threads, "worker threads (0 = all cores)");

  // sweep-steps
  auto* sweep = app.add_subcommand("sweep-steps", "metrics as a function of the grid size K");
  std::string sweep_in, sweep_out, sweep_score = "oracle";
  std::vector<int> sweep_k;
  std::optional<std::uint64_t> sweep_seed;
  unsigned sweep_threads = 0;
  sweep->add_option("--in", sweep_in, "manifest.jsonl with clean references")->required();
  sweep->add_option("--k-list", sweep_k, "comma-separated K values")->delimiter(',');
  sweep->add_option("--score", sweep_score, "'oracle' or a checkpoint path");
  sweep->add_option("--seed", sweep_seed, "sampler seed");
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--threads", sweep_threads, "worker threads (0 = all cores)");

  // verify
  auto* ver = app.add_subcommand("verify", "numerical self-checks of coefficients, SDE and score");
  std::string ver_out = ".";
  double ver_perturb = 0.0;
  std::optional<std::string> ver_variant;
  int ver_paths = 10000, ver_steps = 1000;
  std::uint64_t ver_seed = 0;
  unsigned ver_threads = 0;
  ver->add_option("--out", ver_out, "output directory");
  ver->add_option("--perturb-g", ver_perturb, "relative fault injected into g (testing the checks)");
  ver->add_option("--variant", ver_variant, "vpidm | vpdm | veidm");
  ver->add_option("--paths", ver_paths, "Monte Carlo paths");
  ver->add_option("--steps", ver_steps, "Euler-Maruyama steps");
  ver->add_option("--seed", ver_seed, "seed");
  ver->add_option("--threads", ver_threads, "worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log_stream << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    log_stream << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    log.error(e.what());
    log_stream << "run with --help for usage\n";
    return kUsage;
  }

  try {
    Resolved r = resolve_config(common);
    Config& cfg = r.cfg;

    if (gen->parsed()) {
      apply_flag(log, r, "--n", "corpus.n_utterances", cfg.corpus.n_utterances, gen_n);
      apply_flag(log, r, "--snr", "corpus.snr_levels_db", cfg.corpus.snr_levels_db, gen_snr);
      apply_flag(log, r, "--duration", "corpus.duration_s", cfg.corpus.duration_s, gen_duration);
      apply_flag(log, r, "--seed", "corpus.seed", cfg.corpus.seed, gen_seed);
      if (gen_clean) cfg.corpus.clean_kind = parse_clean_kind(*gen_clean);
      if (gen_noise) cfg.corpus.noise_kind = parse_noise_kind(*gen_noise);
      cfg.corpus.threads = gen_threads;
      cfg.validate();
      const auto items = generate(cfg.corpus);
      ensure_dir(gen_out);
      write_corpus(gen_out, items);
      write_resolved(gen_out, cfg);
      log.info("wrote ", items.size(), " pairs and manifest.jsonl to ", gen_out);
      return kOk;
    }

    if (train->parsed()) {
      apply_flag(log, r, "--steps", "train.steps", cfg.train.steps, train_steps);
      apply_flag(log, r, "--lr", "train.learning_rate", cfg.train.learning_rate, train_lr);
      apply_flag(log, r, "--batch", "train.batch_size", cfg.train.batch_size, train_batch);
      apply_flag(log, r, "--seed", "train.seed", cfg.train.seed, train_seed);
      if (train_opt) cfg.train.optimizer = parse_optimizer(*train_opt);
      cfg.validate();
      std::vector<TrainingPair> pairs;
      for (const auto& e : read_manifest(train_corpus)) {
        if (e.clean.empty()) throw InvalidArgument("training needs clean references in the manifest");
        const auto [clean, noisy] = load_pair(e.clean, e.noisy);
        pairs.push_back({analyze(clean, cfg.stft, cfg.compression), analyze(noisy, cfg.stft, cfg.compression)});
      }
      if (pairs.empty()) throw InvalidArgument("manifest " + train_corpus + " lists no files");
      log.info("training on ", pairs.size(), " pairs, ", cfg.model.parameter_count(), " parameters, ",
               cfg.train.steps, " steps");
      const int report_every = std::max(1, cfg.train.steps / 10);
      TrainResult result = train_small_model(pairs, cfg.model, cfg.train, cfg.schedule, [&](int step, double loss) {
        if (step % report_every == 0) log.info("step ", step, " loss ", loss);
      });
      ensure_dir(train_out);
      save_checkpoint(fs::path(train_out) / "checkpoint.json", result.model, cfg.train.seed);
      auto trace = open_out(fs::path(train_out) / "loss_trace.csv");
      trace << "step,loss,moving_average\n";
      trace.precision(10);
      for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
        trace << i << ',' << result.loss_trace[i] << ',' << result.moving_average[i] << '\n';
      write_resolved(train_out, cfg);
      log.info("loss moving average reduced by ", 100.0 * result.relative_reduction(), "%");
      return kOk;
    }

    if (enh->parsed()) {
      apply_flag(log, r, "--k", "sampler.K", cfg.sampler.K, enh_k);
      if (enh_k && !enh_k1 && cfg.sampler.K1 > cfg.sampler.K) {
        log.info("K1 lowered to K=", cfg.sampler.K);
        cfg.sampler.K1 = cfg.sampler.K;
      }
      apply_flag(log, r, "--k1", "sampler.K1", cfg.sampler.K1, enh_k1);
      apply_flag(log, r, "--seed", "sampler.seed", cfg.sampler.seed, enh_seed);
      if (enh_mode) cfg.sampler.mode = parse_sampler_mode(*enh_mode);
      cfg.validate();
      const auto files = collect_inputs(enh_in, enh_clean);
      const ScoreSource score = load_score(enh_score, cfg);
      const auto results = process_all(files, score, cfg, enh_diag, enh_threads);
      const fs::path out(enh_out);
      ensure_dir(out / "enhanced");
      if (enh_diag) ensure_dir(out / "diagnostics");
      bool any_reference = false;
      for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string stem = files[i].noisy.stem().string();
        write_wav(out / "enhanced" / (stem + ".wav"), results[i].enhanced);
        if (enh_diag) {
          auto d = open_out(out / "diagnostics" / (stem + ".csv"));
          write_diagnostics_csv(d, results[i].diagnostics);
        }
        any_reference = any_reference || results[i].has_reference;
      }
      if (any_reference) {
        auto m = open_out(out / "metrics.csv");
        m << "file,snr_db,si_sdr_in,si_sdr_out,si_sdr_improvement,lsd\n";
        m.precision(10);
        double total = 0.0;
        int counted = 0;
        for (std::size_t i = 0; i < files.size(); ++i) {
          const auto& res = results[i];
          if (!res.has_reference) continue;
          m << files[i].noisy.filename().string() << ',' << files[i].snr_db << ',' << res.si_sdr_in
            << ',' << res.si_sdr_out << ',' << res.si_sdr_out - res.si_sdr_in << ',' << res.lsd << '\n';
          total += res.si_sdr_out - res.si_sdr_in;
          ++counted;
        }
        log.info("mean SI-SDR improvement ", total / counted, " dB over ", counted, " files");
      }
      write_resolved(out, cfg);
      log.info("enhanced ", files.size(), " file(s) into ", (out / "enhanced").string());
      return kOk;
    }

    if (sweep->parsed()) {
      if (sweep_k.empty()) throw InvalidArgument("--k-list must name at least one K");
      apply_flag(log, r, "--seed", "sampler.seed", cfg.sampler.seed, sweep_seed);
      cfg.sampler.mode = SamplerMode::full;
      cfg.validate();
      const auto files = collect_inputs(sweep_in, "");
      const ScoreSource score = load_score(sweep_score, cfg);
      const fs::path out(sweep_out);
      ensure_dir(out);
      auto csv = open_out(out / "sweep_steps.csv");
      csv << "K,mean_si_sdr,mean_si_sdr_improvement,mean_lsd,files\n";
      csv.precision(10);
      for (int k : sweep_k) {
        Config run_cfg = cfg;
        run_cfg.sampler.K = k;
        run_cfg.sampler.K1 = std::min(run_cfg.sampler.K1, k);
        run_cfg.validate();
        const auto results = process_all(files, score, run_cfg, false, sweep_threads);
        double sdr = 0.0, imp = 0.0, lsd = 0.0;
        int counted = 0;
        for (const auto& res : results) {
          if (!res.has_reference) continue;
          sdr += res.si_sdr_out;
          imp += res.si_sdr_out - res.si_sdr_in;
          lsd += res.lsd;
          ++counted;
        }
        if (counted == 0) throw InvalidArgument("sweep-steps needs clean references");
        csv << k << ',' << sdr / counted << ',' << imp / counted << ',' << lsd / counted << ','
            << counted << '\n';
        log.info("K=", k, " mean SI-SDR ", sdr / counted, " dB");
      }
      write_resolved(out, cfg);
      return kOk;
    }

    if (ver->parsed()) {
      if (ver_variant) cfg.schedule.variant = parse_variant(*ver_variant);
      cfg.validate();
      VerifyOptions vo;
      vo.schedule = cfg.schedule;
      vo.perturb_g = ver_perturb;
      vo.em_paths = ver_paths;
      vo.em_steps = ver_steps;
      vo.seed = ver_seed;
      vo.threads = ver_threads;
      const VerifyReport report = run_verification(vo);
      const fs::path out(ver_out);
      ensure_dir(out);
      {
        auto csv = open_out(out / "verify_report.csv");
        write_report_csv(csv, report.checks);
      }
      {
        auto csv = open_out(out / "sde_marginals.csv");
        write_marginals_csv(csv, report.marginals, report.em_clean, report.em_noisy, cfg.schedule);
      }
      write_resolved(out, cfg);
      for (const auto& c : report.checks)
        log.info(c.passed ? "pass " : "FAIL ", c.name, " value=", c.value, " tol=", c.tolerance,
                 c.detail.empty() ? "" : " (" + c.detail + ")");
      if (!report.all_passed()) {
        log.error("verification failed");
        return kFailure;
      }
      log.info("all ", report.checks.size(), " checks passed");
      return kOk;
    }
  } catch (const InvalidArgument& e) {
    log.error(e.what());
    return kUsage;
  } catch (const IoError& e) {
    log.error(e.what());
    return kIo;
  } catch (const FormatError& e) {
    log.error(e.what());
    return kIo;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kFailure;
  }
  return kUsage;
}

}  // namespace vpidm::cli
