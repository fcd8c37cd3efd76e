#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "specgate/cli.hpp"
#include "specgate/datagen.hpp"
#include "specgate/metrics.hpp"
#include "specgate/wav.hpp"

using namespace specgate;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "specgate_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Signal noisy_tone(std::uint64_t seed) {
  Signal x = gen_tone(440.0, 1.0, 16000, 0.3);
  x.samples += 0.05 * testutil::randn(16000, seed).transpose();
  return x;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("denoise with defaults keeps length and rate") {
  const fs::path dir = scratch("denoise_defaults");
  write_wav(dir / "in.wav", noisy_tone(70), WavFormat::Pcm16);
  const Run r = cli({"denoise", (dir / "in.wav").string(), "-o", (dir / "out.wav").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out == (dir / "out.wav").string() + "\n");
  CHECK(r.err.find("spectral-gate") != std::string::npos);
  CHECK(r.err.find("realtime") != std::string::npos);
  const WavFile in = read_wav_file(dir / "in.wav");
  const WavFile out = read_wav_file(dir / "out.wav");
  CHECK(out.format == WavFormat::Pcm16);
  CHECK(out.signal.length() == in.signal.length());
  CHECK(out.signal.sample_rate == in.signal.sample_rate);
}

TEST_CASE("denoise with prop-decrease 0 is the identity") {
  const fs::path dir = scratch("denoise_identity");
  write_wav(dir / "in.wav", noisy_tone(71));
  const Run r = cli({"denoise", (dir / "in.wav").string(), "--prop-decrease", "0", "-o", (dir / "out.wav").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(testutil::max_abs_diff(read_wav(dir / "in.wav"), read_wav(dir / "out.wav")) <= 1e-6);
}

TEST_CASE("denoise savgol reproduces a quadratic ramp") {
  // Dyadic values survive the float32 file exactly, so any difference comes from the filter.
  const fs::path dir = scratch("denoise_savgol_exact");
  Eigen::VectorXd ramp(512);
  for (Eigen::Index i = 0; i < ramp.size(); ++i) {
    const double k = static_cast<double>(i) - 256.0;
    ramp[i] = (k * k) / 131072.0 - 0.25;  // dyadic, exact in float32
  }
  write_wav(dir / "ramp.wav", Signal::mono(ramp, 8000), WavFormat::Float32);
  REQUIRE(cli({"denoise", (dir / "ramp.wav").string(), "--algorithm", "savgol", "--window", "5", "--poly-order",
               "2", "-o", (dir / "out.wav").string()})
              .code == kExitOk);
  const Signal out = read_wav(dir / "out.wav");
  CHECK((out.samples.middleCols(2, 508).transpose() - ramp.segment(2, 508)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("denoise batch writes stems to the output directory in order") {
  const fs::path dir = scratch("denoise_batch");
  write_wav(dir / "a.noisy.wav", noisy_tone(72));
  write_wav(dir / "b.wav", noisy_tone(73));
  const Run r = cli({"denoise", (dir / "a.noisy.wav").string(), (dir / "b.wav").string(), "--output-dir",
                     (dir / "out").string(), "--threads", "2", "--algorithm", "wiener"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out == (dir / "out" / "a.denoised.wav").string() + "\n" + (dir / "out" / "b.denoised.wav").string() + "\n");
  CHECK(fs::exists(dir / "out" / "a.denoised.wav"));
  // Threads do not change the result.
  REQUIRE(cli({"denoise", (dir / "a.noisy.wav").string(), "--algorithm", "wiener", "-o", (dir / "single.wav").string()})
              .code == kExitOk);
  CHECK(slurp(dir / "single.wav") == slurp(dir / "out" / "a.denoised.wav"));
}

TEST_CASE("every algorithm runs through denoise") {
  const fs::path dir = scratch("denoise_all");
  write_wav(dir / "in.wav", noisy_tone(74));
  write_wav(dir / "noise.wav", testutil::noise_signal(8000, 16000, 75, 0.05));
  for (const char* alg : {"spectral-gate", "spectral-gate-nonstationary", "wiener", "iterative-wiener", "savgol",
                          "specsub"}) {
    CAPTURE(alg);
    const Run r = cli({"denoise", (dir / "in.wav").string(), "--noise", (dir / "noise.wav").string(), "--algorithm",
                       alg, "-o", (dir / (std::string(alg) + ".wav")).string()});
    CHECK(r.code == kExitOk);
    CHECK(read_wav(dir / (std::string(alg) + ".wav")).samples.allFinite());
  }
  // specsub without a noise clip is a usage problem.
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--algorithm", "specsub", "-o", (dir / "x.wav").string()}).code ==
        kExitUsage);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit_codes");
  write_wav(dir / "in.wav", noisy_tone(76));
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--bogus-flag", "1"}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--n-fft", "abc"}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--prop-decrease", "2"}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--hop-length", "1000"}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "missing.wav").string(), "-o", (dir / "o.wav").string()}).code == kExitIo);
  write_file(dir / "garbage.wav", "not a wav file at all, really");
  CHECK(cli({"denoise", (dir / "garbage.wav").string(), "-o", (dir / "o.wav").string()}).code == kExitIo);
  // A 10-sample file is too short for savgol's 11-point default window.
  write_wav(dir / "short.wav", testutil::noise_signal(10, 16000, 1, 0.1));
  CHECK(cli({"denoise", (dir / "short.wav").string(), "--algorithm", "savgol", "-o", (dir / "o.wav").string()}).code ==
        kExitProcessing);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("errors as JSON") {
  const Run r = cli({"--json", "denoise", "/nonexistent/in.wav", "-o", "/tmp/x.wav"});
  CHECK(r.code == kExitIo);
  const json j = json::parse(r.err);
  CHECK(j["error"]["exit_code"] == kExitIo);
  CHECK(j["error"]["kind"].is_string());
  CHECK(j["error"]["message"].get<std::string>().find("nonexistent") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("mix writes files and a consistent manifest") {
  const fs::path dir = scratch("mix");
  write_wav(dir / "clean.wav", gen_tone(300.0, 2.0, 16000, 0.2));
  const Run r = cli({"mix", (dir / "clean.wav").string(), "--noise-kind", "pink", "--snr-db", "0", "--seed", "9",
                     "-o", (dir / "mixed.wav").string()});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"mixed.wav", "mixed.noise.wav", "mixed.noiseclip.wav", "mixed.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const json m = json::parse(slurp(dir / "mixed.json"));
  CHECK(std::abs(m["measured_snr_db"].get<double>()) <= 1e-6);
  CHECK(m["snr_db"] == 0.0);
  CHECK(m["seed"] == 9);
  CHECK(m["level_basis"] == "rms");
  CHECK(m["clip_disjoint"] == true);
  CHECK(m["noise_kind"] == "pink");
  // Recompute from the written files (float32) as well.
  const Signal clean = read_wav(dir / "clean.wav");
  const Signal noise = read_wav(dir / "mixed.noise.wav");
  CHECK(std::abs(measured_snr_db(clean, noise)) <= 1e-5);
  CHECK(read_wav(dir / "mixed.noiseclip.wav").length() == 16000);
}

TEST_CASE("mix at 10 dB from a noise file") {
  const fs::path dir = scratch("mix_file");
  write_wav(dir / "clean.wav", gen_tone(300.0, 1.0, 16000, 0.2));
  write_wav(dir / "noise.wav", testutil::noise_signal(40000, 16000, 77, 0.1));
  const Run r = cli({"mix", (dir / "clean.wav").string(), "--noise", (dir / "noise.wav").string(), "--snr-db", "10",
                     "-o", (dir / "m.wav").string()});
  REQUIRE(r.code == kExitOk);
  const json m = json::parse(slurp(dir / "m.json"));
  CHECK(std::abs(m["measured_snr_db"].get<double>() - 10.0) <= 1e-6);
  CHECK(m["noise_kind"] == "file");
}

TEST_CASE("mix with a missing noise file exits with an I/O error") {
  const fs::path dir = scratch("mix_missing");
  write_wav(dir / "clean.wav", gen_tone(300.0, 1.0, 16000, 0.2));
  CHECK(cli({"mix", (dir / "clean.wav").string(), "--noise", (dir / "nope.wav").string(), "--snr-db", "0", "-o",
             (dir / "m.wav").string()})
            .code == kExitIo);
  CHECK(cli({"mix", (dir / "clean.wav").string(), "-o", (dir / "m.wav").string()}).code == kExitUsage);
}

TEST_CASE("mix is reproducible for a fixed seed") {
  const fs::path dir = scratch("mix_seed");
  write_wav(dir / "clean.wav", gen_tone(300.0, 1.0, 16000, 0.2));
  for (const char* out : {"a.wav", "b.wav"}) {
    REQUIRE(cli({"mix", (dir / "clean.wav").string(), "--snr-db", "5", "--seed", "3", "-o", (dir / out).string()})
                .code == kExitOk);
  }
  CHECK(slurp(dir / "a.wav") == slurp(dir / "b.wav"));
  CHECK(slurp(dir / "a.noise.wav") == slurp(dir / "b.noise.wav"));
  CHECK(slurp(dir / "a.noiseclip.wav") == slurp(dir / "b.noiseclip.wav"));
  REQUIRE(cli({"mix", (dir / "clean.wav").string(), "--snr-db", "5", "--seed", "4", "-o", (dir / "c.wav").string()})
              .code == kExitOk);
  CHECK(slurp(dir / "a.wav") != slurp(dir / "c.wav"));
}

TEST_CASE("eval on an identical pair") {
  const fs::path dir = scratch("eval_identical");
  const Signal x = noisy_tone(78);
  write_wav(dir / "item.clean.wav", x);
  write_wav(dir / "item.denoised.wav", x);
  const Run r = cli({"eval", dir.string()});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j["segsnr"]["items"][0]["value"] == 35.0);
  CHECK(j["sdr"]["items"][0]["value"] == "inf");
  CHECK(j["sdr"]["items"][0]["id"] == "item");
}

TEST_CASE("eval lists unmatched pairs") {
  const fs::path dir = scratch("eval_unmatched");
  write_wav(dir / "a.clean.wav", noisy_tone(79));
  write_wav(dir / "a.denoised.wav", noisy_tone(80));
  write_wav(dir / "b.clean.wav", noisy_tone(81));
  const Run r = cli({"eval", dir.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("b.clean.wav") != std::string::npos);
  CHECK(cli({"eval"}).code == kExitUsage);
}

TEST_CASE("eval CSV and JSON agree") {
  const fs::path dir = scratch("eval_formats");
  for (int i = 0; i < 3; ++i) {
    const Signal clean = gen_tone(200.0 + 50.0 * i, 1.0, 16000, 0.3);
    Signal den = clean;
    den.samples += 0.01 * (i + 1) * testutil::randn(16000, 90 + i).transpose();
    write_wav(dir / ("x" + std::to_string(i) + ".clean.wav"), clean);
    write_wav(dir / ("x" + std::to_string(i) + ".denoised.wav"), den);
  }
  const Run r = cli({"eval", dir.string(), "-o", (dir / "r.json").string(), "-o", (dir / "r.csv").string()});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(slurp(dir / "r.json"));
  std::istringstream csv(slurp(dir / "r.csv"));
  std::string line;
  std::getline(csv, line);
  int checked = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const std::string metric = line.substr(0, c1);
    const std::string id = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string value = line.substr(c2 + 1);
    if (id == "mean") {
      CHECK(std::stod(value) == j[metric]["mean"].get<double>());
    } else if (id == "sem") {
      CHECK(std::stod(value) == j[metric]["sem"].get<double>());
    } else if (id != "n") {
      for (const auto& item : j[metric]["items"]) {
        if (item["id"] == id) {
          CHECK(std::stod(value) == item["value"].get<double>());
          ++checked;
        }
      }
    }
  }
  CHECK(checked == 6);
}

TEST_CASE("eval on a denoised tone-burst pair reports the SDR improvement") {
  const fs::path dir = scratch("eval_pipeline");
  ToneBurstSpec spec;
  spec.sample_rate = 44100;
  spec.harmonics = 40;
  const Signal clean = gen_tone_bursts(spec);
  const Signal noise = gen_noise(NoiseKind::White, spec.duration_s + 1.0, spec.sample_rate, 7);
  const MixResult mix = mix_at_snr(clean, noise, 0.0);
  Rng rng(8);
  const Signal clip = noise_clip(noise, clean.length(), spec.sample_rate, mix.gain, rng);
  write_wav(dir / "burst.clean.wav", clean);
  write_wav(dir / "burst.noisy.wav", mix.mixed);
  write_wav(dir / "noise.wav", clip);
  REQUIRE(cli({"denoise", (dir / "burst.noisy.wav").string(), "--noise", (dir / "noise.wav").string()}).code ==
          kExitOk);
  REQUIRE(fs::exists(dir / "burst.denoised.wav"));
  const Run r = cli({"eval", dir.string()});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  const double gain = j["sdr_improvement"]["items"][0]["value"].get<double>();
  CAPTURE(gain);
  CHECK(gain >= 5.0);
  CHECK(j["segsnr_improvement"]["items"][0]["value"].get<double>() > 0.0);
}

TEST_CASE("eval with event files and a manifest") {
  const fs::path dir = scratch("eval_events");
  const Signal clean = gen_onset_event(30.0, 12.0, 10.0, 5);
  write_wav(dir / "quake.clean.wav", clean);
  write_wav(dir / "quake.denoised.wav", clean);
  write_file(dir / "quake.events.txt", "# onset\n12.0\n");
  write_file(dir / "m.json", R"({"pairs": [{"id": "q", "clean": "quake.clean.wav", "denoised": "quake.denoised.wav",
                                             "events": "quake.events.txt"}]})");
  const Run r = cli({"eval", "--manifest", (dir / "m.json").string(), "--event-metrics", "onset"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  CHECK(j["onset_error_s"]["items"][0]["id"] == "q");
  CHECK(j["onset_error_s"]["items"][0]["value"].get<double>() <= 0.5);
  CHECK_FALSE(j.contains("auc"));
}

TEST_CASE("bench ladder shape and monotone medians") {
  const fs::path dir = scratch("bench");
  const Run r = cli({"bench", "--lengths", "1,10", "--repetitions", "3", "--warmup", "1", "--threads", "1,2",
                     "-o", (dir / "b.csv").string()});
  REQUIRE(r.code == kExitOk);
  std::istringstream csv(slurp(dir / "b.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("algorithm,length_s,batch,threads,", 0) == 0);
  std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>> rows;
  int count = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 9);
    CHECK(cells[4] == "3");
    rows[{cells[0], std::stoi(cells[3])}].emplace_back(std::stod(cells[1]), std::stod(cells[5]));
    ++count;
  }
  CHECK(count == 6 * 2 * 2);
  CHECK(rows.size() == 12);
  for (const auto& [key, points] : rows) {
    CAPTURE(key.first);
    REQUIRE(points.size() == 2);
    CHECK(points[0].first == 1.0);
    CHECK(points[1].first == 10.0);
    CHECK(points[1].second * 1.5 >= points[0].second);
  }
}

TEST_CASE("config file values apply and flags override them") {
  const fs::path dir = scratch("config");
  write_wav(dir / "in.wav", noisy_tone(82));
  write_file(dir / "c.txt", "# gate settings\nprop-decrease = 0\nn-fft = 512\n");
  Run r = cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "c.txt").string(), "-o",
               (dir / "a.wav").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("n_fft=512") != std::string::npos);
  CHECK(r.err.find("prop_decrease=0") != std::string::npos);
  CHECK(testutil::max_abs_diff(read_wav(dir / "in.wav"), read_wav(dir / "a.wav")) <= 1e-6);

  // Flag after the config wins; so does a flag placed before --config.
  r = cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "c.txt").string(), "--prop-decrease", "1", "-o",
           (dir / "b.wav").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("prop_decrease=1") != std::string::npos);
  r = cli({"denoise", "--prop-decrease", "1", (dir / "in.wav").string(), "--config=" + (dir / "c.txt").string(), "-o",
           (dir / "c.wav").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("prop_decrease=1") != std::string::npos);
  CHECK(r.err.find("n_fft=512") != std::string::npos);
  CHECK(slurp(dir / "b.wav") == slurp(dir / "c.wav"));
}

TEST_CASE("config files reject unknown keys and bad lines") {
  const fs::path dir = scratch("config_bad");
  write_wav(dir / "in.wav", noisy_tone(83));
  write_file(dir / "bad.txt", "n-fft = 512\nwhat-is-this = 3\n");
  Run r = cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "bad.txt").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("what-is-this") != std::string::npos);
  write_file(dir / "bad2.txt", "n-fft 512\n");
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "bad2.txt").string()}).code == kExitUsage);
  // Keys belong to their subcommand.
  write_file(dir / "bad3.txt", "snr-db = 3\n");
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "bad3.txt").string()}).code == kExitUsage);
  CHECK(cli({"denoise", (dir / "in.wav").string(), "--config", (dir / "none.txt").string()}).code == kExitIo);
}

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# c\n\n  a = 1 \nb=\"x y\"\nc =\n");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0] == std::pair<std::string, std::string>{"a", "1"});
  CHECK(kv[1].second == "x y");
  CHECK(kv[2].second.empty());
}

}  // TEST_SUITE
