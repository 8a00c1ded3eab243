#include <catch_amalgamated.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string log;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"vpidm"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream log;
  const int code = vpidm::cli::run(static_cast<int>(argv.size()), argv.data(), log);
  return {code, log.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Small corpus shared by the enhance / sweep / train cases.
const fs::path& corpus_dir() {
  static vpidm::test::TempDir dir("cli-corpus");
  static bool made = false;
  if (!made) {
    const auto r = run({"generate", "--out", dir.path().string(), "--n", "2", "--snr", "0",
                        "--duration", "0.5", "--seed", "4", "-q"});
    REQUIRE(r.code == 0);
    made = true;
  }
  return dir.path();
}

}  // namespace

TEST_CASE("generate writes pairs, manifest and resolved config") {
  const auto& dir = corpus_dir();
  CHECK(fs::exists(dir / "clean" / "utt000.wav"));
  CHECK(fs::exists(dir / "noisy" / "utt001.wav"));
  CHECK(lines(dir / "manifest.jsonl").size() == 2u);
  CHECK(fs::exists(dir / "resolved_config.toml"));
}

TEST_CASE("enhance is byte-identical for a fixed seed") {
  vpidm::test::TempDir out("cli-enh");
  const auto manifest = (corpus_dir() / "manifest.jsonl").string();
  const auto a = out.path() / "a", b = out.path() / "b";
  REQUIRE(run({"enhance", "--in", manifest, "--score", "oracle", "--seed", "5", "--out", a.string(), "-q"}).code == 0);
  REQUIRE(run({"enhance", "--in", manifest, "--score", "oracle", "--seed", "5", "--out", b.string(), "-q"}).code == 0);
  for (const char* f : {"utt000.wav", "utt001.wav"}) {
    const auto x = slurp(a / "enhanced" / f);
    CHECK(!x.empty());
    CHECK(x == slurp(b / "enhanced" / f));
  }
  const auto metrics = lines(a / "metrics.csv");
  REQUIRE(metrics.size() == 3u);
  CHECK(metrics[0] == "file,snr_db,si_sdr_in,si_sdr_out,si_sdr_improvement,lsd");
  CHECK(fs::exists(a / "resolved_config.toml"));
}

TEST_CASE("enhance in early-stop mode with diagnostics") {
  vpidm::test::TempDir out("cli-early");
  const auto manifest = (corpus_dir() / "manifest.jsonl").string();
  const auto r = run({"enhance", "--in", manifest, "--score", "oracle", "--mode", "early-stop",
                      "--k1", "12", "--diagnostics", "--out", out.path().string()});
  REQUIRE(r.code == 0);
  const auto diag = lines(out.path() / "diagnostics" / "utt000.csv");
  CHECK(diag.front() == "k,tau,residual_proxy,state_norm");
  CHECK(diag.size() == 1u + 13u);  // S_25 down to S_13
}

TEST_CASE("a single WAV with a clean reference") {
  vpidm::test::TempDir out("cli-single");
  const auto r = run({"enhance", "--in", (corpus_dir() / "noisy" / "utt000.wav").string(), "--clean",
                      (corpus_dir() / "clean" / "utt000.wav").string(), "--out",
                      out.path().string(), "-q"});
  REQUIRE(r.code == 0);
  CHECK(lines(out.path() / "metrics.csv").size() == 2u);
}

TEST_CASE("sweep at K = 25 matches the enhance aggregate") {
  vpidm::test::TempDir out("cli-sweep");
  const auto manifest = (corpus_dir() / "manifest.jsonl").string();
  REQUIRE(run({"sweep-steps", "--in", manifest, "--k-list", "10,25", "--seed", "3", "--out",
               (out.path() / "s").string(), "-q"}).code == 0);
  REQUIRE(run({"enhance", "--in", manifest, "--seed", "3", "--out", (out.path() / "e").string(), "-q"})
              .code == 0);
  const auto sweep = lines(out.path() / "s" / "sweep_steps.csv");
  REQUIRE(sweep.size() == 3u);
  CHECK(sweep[0] == "K,mean_si_sdr,mean_si_sdr_improvement,mean_lsd,files");

  double total = 0.0;
  const auto metrics = lines(out.path() / "e" / "metrics.csv");
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    std::stringstream row(metrics[i]);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(row, cell, ',');
    total += std::stod(cell);
  }
  std::stringstream row(sweep[2]);
  std::string k, mean;
  std::getline(row, k, ',');
  std::getline(row, mean, ',');
  CHECK(k == "25");
  CHECK(std::stod(mean) == Catch::Approx(total / 2.0).epsilon(1e-9));
}

TEST_CASE("usage and I/O errors map to exit codes") {
  vpidm::test::TempDir out("cli-err");
  const auto manifest = (corpus_dir() / "manifest.jsonl").string();
  CHECK(run({"sweep-steps", "--in", manifest, "--k-list", "", "--out", out.path().string()}).code == 2);
  CHECK(run({"sweep-steps", "--in", manifest, "--out", out.path().string()}).code == 2);
  CHECK(run({"enhance", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"enhance", "--in", "/nonexistent/x.wav", "--out", out.path().string()}).code == 3);
  CHECK(run({"enhance", "--in", manifest, "--score", "/nonexistent/ckpt.json", "--out",
             out.path().string()}).code == 3);
}

TEST_CASE("flags override the config file and the override is logged") {
  vpidm::test::TempDir out("cli-cfg");
  std::ofstream(out.path() / "c.toml") << "[sampler]\nK = 10\nseed = 4\n";
  const auto r = run({"--config", (out.path() / "c.toml").string(), "enhance", "--in",
                      (corpus_dir() / "manifest.jsonl").string(), "--k", "12", "--out",
                      (out.path() / "o").string()});
  REQUIRE(r.code == 0);
  CHECK(r.log.find("overrides config sampler.K=10") != std::string::npos);
  const auto resolved = slurp(out.path() / "o" / "resolved_config.toml");
  CHECK(resolved.find("K = 12") != std::string::npos);
  CHECK(resolved.find("seed = 4") != std::string::npos);
}

TEST_CASE("train writes a checkpoint that enhance can load") {
  vpidm::test::TempDir out("cli-train");
  const auto manifest = (corpus_dir() / "manifest.jsonl").string();
  const auto r = run({"train", "--corpus", manifest, "--out", out.path().string(), "--steps", "8",
                      "--seed", "2", "-q"});
  REQUIRE(r.code == 0);
  const auto trace = lines(out.path() / "loss_trace.csv");
  CHECK(trace.front() == "step,loss,moving_average");
  CHECK(trace.size() == 9u);
  REQUIRE(fs::exists(out.path() / "checkpoint.json"));
  CHECK(run({"enhance", "--in", manifest, "--score", (out.path() / "checkpoint.json").string(),
             "--k", "5", "--out", (out.path() / "e").string(), "-q"}).code == 0);
}

TEST_CASE("verify passes by default and fails on an injected fault") {
  vpidm::test::TempDir out("cli-verify");
  const auto ok = run({"verify", "--out", (out.path() / "ok").string(), "-q"});
  CHECK(ok.code == 0);
  const auto report = lines(out.path() / "ok" / "verify_report.csv");
  REQUIRE(!report.empty());
  CHECK(report[0] == "check,status,value,tolerance,detail");
  CHECK(fs::exists(out.path() / "ok" / "sde_marginals.csv"));

  const auto bad = run({"verify", "--perturb-g", "1e-3", "--paths", "500", "--steps", "100",
                        "--out", (out.path() / "bad").string(), "-q"});
  CHECK(bad.code == 1);
  const auto bad_report = slurp(out.path() / "bad" / "verify_report.csv");
  CHECK(bad_report.find("FAIL") != std::string::npos);

  const auto ve = run({"verify", "--variant", "veidm", "--out", (out.path() / "ve").string(), "-q"});
  CHECK(ve.code == 0);
  CHECK(slurp(out.path() / "ve" / "verify_report.csv").find("veidm_drift_is_gamma_times_difference,pass") != std::string::npos);
}
