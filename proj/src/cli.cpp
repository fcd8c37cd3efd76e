#include "specgate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "specgate/bench.hpp"
#include "specgate/datagen.hpp"
#include "specgate/metrics.hpp"
#include "specgate/pipeline.hpp"
#include "specgate/report.hpp"
#include "specgate/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace specgate {

namespace {

// Bad arguments that are only detectable after parsing; exit code 2.
struct UsageError : std::runtime_error {
  UsageError(const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(what), details(std::move(details)) {}
  std::vector<std::string> details;
};

const std::vector<std::string> kSubcommands{"denoise", "mix", "eval", "bench"};

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream is(item);
    T v;
    if (!(is >> v) || !is.eof()) throw UsageError("invalid " + what + " entry: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(what + " must not be empty");
  return out;
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

// Strips ".wav" and one of the role suffixes used by mix/eval.
std::string item_stem(const fs::path& p) {
  std::string s = p.filename().string();
  if (s.size() > 4 && s.substr(s.size() - 4) == ".wav") s.resize(s.size() - 4);
  for (const std::string suffix : {".noisy", ".clean", ".denoised"}) {
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
      s.resize(s.size() - suffix.size());
      break;
    }
  }
  return s;
}

fs::path with_suffix(const fs::path& stem_path, const std::string& suffix) {
  return stem_path.parent_path() / (stem_path.filename().string() + suffix);
}

// ---------------------------------------------------------------------------
// Algorithm parameters shared by denoise and bench.

struct AlgoFlags {
  int n_fft = 1024;
  int win_length = 0;  // 0: n_fft
  int hop_length = 0;  // 0: win_length / 4
  std::string stft_window = "hann";
  double n_std_thresh = 1.5;
  double prop_decrease = 1.0;
  double freq_mask_smooth_hz = 500.0;
  double time_mask_smooth_ms = 50.0;
  double noise_window_ms = 1000.0;
  bool smoothing = true;
  int window = 0;  // 0: 15 for wiener, 11 for savgol
  int poly_order = 3;
  int frame_size = 0;  // 0: 32 ms
  int lpc_order = 10;
  double alpha = 0.9;
  double energy_threshold = 1.5;
  int iterations = 3;
};

void add_algo_options(CLI::App* app, AlgoFlags& f) {
  app->add_option("--n-fft", f.n_fft, "FFT size")->capture_default_str();
  app->add_option("--win-length", f.win_length, "analysis window length (0: n-fft)");
  app->add_option("--hop-length", f.hop_length, "hop length (0: win-length / 4)");
  app->add_option("--stft-window", f.stft_window, "hann, hamming or rect")->capture_default_str();
  app->add_option("--n-std-thresh", f.n_std_thresh, "threshold in noise standard deviations")->capture_default_str();
  app->add_option("--prop-decrease", f.prop_decrease, "fraction of the mask applied, 0..1")->capture_default_str();
  app->add_option("--freq-mask-smooth-hz", f.freq_mask_smooth_hz, "mask smoothing extent in Hz")->capture_default_str();
  app->add_option("--time-mask-smooth-ms", f.time_mask_smooth_ms, "mask smoothing extent in ms")->capture_default_str();
  app->add_option("--noise-window-size-nonstationary-ms", f.noise_window_ms,
                  "sliding statistics window for the non-stationary gate")->capture_default_str();
  app->add_option("--smoothing", f.smoothing, "mask smoothing on/off")->capture_default_str();
  app->add_option("--window", f.window, "filter length for wiener / savgol (0: algorithm default)");
  app->add_option("--poly-order", f.poly_order, "savgol polynomial order")->capture_default_str();
  app->add_option("--frame-size", f.frame_size, "iterative-wiener frame (0: 32 ms)");
  app->add_option("--lpc-order", f.lpc_order, "iterative-wiener LPC order")->capture_default_str();
  app->add_option("--alpha", f.alpha, "iterative-wiener noise smoothing")->capture_default_str();
  app->add_option("--energy-threshold", f.energy_threshold,
                  "iterative-wiener noise-frame energy ratio")->capture_default_str();
  app->add_option("--iterations", f.iterations, "iterative-wiener passes per speech frame")->capture_default_str();
}

PipelineConfig to_pipeline(const AlgoFlags& f, Algorithm algorithm) {
  PipelineConfig c;
  c.algorithm = algorithm;
  c.gate.stft.n_fft = f.n_fft;
  c.gate.stft.win_length = f.win_length > 0 ? f.win_length : f.n_fft;
  c.gate.stft.hop_length = f.hop_length > 0 ? f.hop_length : std::max(1, c.gate.stft.win_length / 4);
  c.gate.stft.window = window_from_string(f.stft_window);
  c.gate.n_std_thresh = f.n_std_thresh;
  c.gate.prop_decrease = f.prop_decrease;
  c.gate.freq_mask_smooth_hz = f.freq_mask_smooth_hz;
  c.gate.time_mask_smooth_ms = f.time_mask_smooth_ms;
  c.gate.noise_window_ms = f.noise_window_ms;
  c.gate.smoothing_enabled = f.smoothing;
  c.gate.mode = algorithm == Algorithm::SpectralGateNonstationary ? GateMode::NonStationary : GateMode::Stationary;
  c.wiener.window_size = f.window > 0 ? f.window : WienerParams{}.window_size;
  c.savgol.window_size = f.window > 0 ? f.window : SavGolParams{}.window_size;
  c.savgol.poly_order = f.poly_order;
  c.iterative_wiener.frame_size = f.frame_size;
  c.iterative_wiener.lpc_order = f.lpc_order;
  c.iterative_wiener.alpha = f.alpha;
  c.iterative_wiener.energy_threshold = f.energy_threshold;
  c.iterative_wiener.iterations = f.iterations;

  switch (algorithm) {
    case Algorithm::SpectralGate:
    case Algorithm::SpectralGateNonstationary:
      c.gate.validate();
      break;
    case Algorithm::Wiener:
      c.wiener.validate();
      break;
    case Algorithm::SavGol:
      c.savgol.validate();
      break;
    case Algorithm::SpecSub:
      c.gate.stft.validate();
      break;
    case Algorithm::IterativeWiener:
      if (f.frame_size != 0) c.iterative_wiener.validate();
      break;
  }
  return c;
}

// ---------------------------------------------------------------------------

struct DenoiseOptions {
  std::vector<std::string> inputs;
  std::string output;
  std::string output_dir;
  std::string noise;
  std::string algorithm = "spectral-gate";
  std::string format;
  int threads = default_threads();
  AlgoFlags algo;
};

int cmd_denoise(const DenoiseOptions& o, std::ostream& out, std::ostream& err) {
  const Algorithm algorithm = algorithm_from_string(o.algorithm);
  const PipelineConfig config = to_pipeline(o.algo, algorithm);
  if (o.threads < 1) throw UsageError("--threads must be >= 1");
  if (!o.output.empty() && o.inputs.size() > 1) throw UsageError("-o takes a single input; use --output-dir");
  if (!o.output.empty() && !o.output_dir.empty()) throw UsageError("-o and --output-dir are exclusive");

  std::vector<fs::path> outputs;
  for (const auto& in : o.inputs) {
    if (!o.output.empty()) {
      outputs.emplace_back(o.output);
    } else {
      const fs::path dir = o.output_dir.empty() ? fs::path(in).parent_path() : fs::path(o.output_dir);
      outputs.push_back(dir / (item_stem(in) + ".denoised.wav"));
    }
  }
  std::set<fs::path> distinct(outputs.begin(), outputs.end());
  if (distinct.size() != outputs.size()) throw UsageError("several inputs map to the same output path");
  if (!o.output_dir.empty()) fs::create_directories(o.output_dir);

  std::optional<Signal> noise;
  if (!o.noise.empty()) noise = read_wav(o.noise);

  std::vector<WavFile> inputs;
  for (const auto& in : o.inputs) inputs.push_back(read_wav_file(in));

  std::vector<Signal> results(inputs.size());
  std::vector<double> seconds(inputs.size());
  parallel_for(inputs.size(), o.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    results[i] = run_algorithm(config, inputs[i].signal, noise);
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const WavFormat format = o.format.empty() ? inputs[i].format : wav_format_from_string(o.format);
    const std::size_t clipped = write_wav(outputs[i], results[i], format);
    const double duration = inputs[i].signal.duration();
    err << "denoise: " << to_string(algorithm) << ' ' << describe(config) << " | " << o.inputs[i] << " -> "
        << outputs[i].string() << " | " << fixed(duration, 3) << " s | "
        << (seconds[i] > 0.0 ? fixed(duration / seconds[i], 1) : std::string("inf")) << "x realtime\n";
    if (clipped > 0) err << "warning: " << clipped << " samples clipped in " << outputs[i].string() << '\n';
    out << outputs[i].string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MixOptions {
  std::string clean;
  std::string noise;
  std::string noise_kind;
  double snr_db = 0.0;
  bool snr_given = false;
  std::uint64_t seed = 0;
  std::string output;
  double clip_s = 1.0;
  std::string format = "float32";
};

int cmd_mix(const MixOptions& o, std::ostream& out, std::ostream& err) {
  if (!o.noise.empty() && !o.noise_kind.empty()) throw UsageError("--noise and --noise-kind are exclusive");
  if (!(o.clip_s > 0.0)) throw UsageError("--clip-s must be positive");
  const WavFormat format = wav_format_from_string(o.format);
  const Signal clean = read_wav(o.clean);

  const auto clip_len = static_cast<Eigen::Index>(std::lround(o.clip_s * clean.sample_rate));
  Signal noise;
  std::string kind = "file";
  if (!o.noise.empty()) {
    noise = read_wav(o.noise);
  } else {
    const NoiseKind nk = noise_kind_from_string(o.noise_kind.empty() ? "white" : o.noise_kind);
    kind = to_string(nk);
    Rng rng(o.seed);
    const Eigen::Index n = clean.length() + clip_len;
    noise = Signal::mono(nk == NoiseKind::Pink ? pink_noise(n, rng) : white_noise(n, rng), clean.sample_rate);
  }

  const MixResult mix = mix_at_snr(clean, noise, o.snr_db);
  // The clip comes from noise beyond the mixed segment when there is enough of it.
  Rng clip_rng(o.seed + 1);
  const bool disjoint = noise.length() >= clean.length() + clip_len;
  const Signal clip = disjoint ? noise_clip(noise, clean.length(), clip_len, mix.gain, clip_rng)
                               : noise_clip(noise, 0, std::min(clip_len, noise.length()), mix.gain, clip_rng);
  if (!disjoint) err << "warning: noise too short for a disjoint clip; clip overlaps the mixed noise\n";

  const fs::path mixed_path = o.output;
  const fs::path stem = mixed_path.parent_path() / mixed_path.stem();
  const fs::path noise_path = with_suffix(stem, ".noise.wav");
  const fs::path clip_path = with_suffix(stem, ".noiseclip.wav");
  const fs::path manifest_path = with_suffix(stem, ".json");
  if (!mixed_path.parent_path().empty()) fs::create_directories(mixed_path.parent_path());

  const std::size_t clipped = write_wav(mixed_path, mix.mixed, format);
  write_wav(noise_path, mix.scaled_noise, format);
  write_wav(clip_path, clip, format);
  if (clipped > 0) err << "warning: " << clipped << " samples clipped in " << mixed_path.string() << '\n';

  json manifest = {
      {"clean", o.clean},
      {"mixed", mixed_path.string()},
      {"noise_source", o.noise.empty() ? json(nullptr) : json(o.noise)},
      {"noise_kind", kind},
      {"scaled_noise", noise_path.string()},
      {"noise_clip", clip_path.string()},
      {"clip_disjoint", disjoint},
      {"clip_s", static_cast<double>(clip.length()) / clean.sample_rate},
      {"snr_db", o.snr_db},
      {"measured_snr_db", number_to_json(measured_snr_db(clean, mix.scaled_noise))},
      {"level_basis", "rms"},
      {"noise_gain", mix.gain},
      {"seed", o.seed},
      {"sample_rate", clean.sample_rate},
      {"channels", clean.channels()},
      {"duration_s", clean.duration()},
      {"format", to_string(format)},
      {"clipped_samples", clipped},
  };
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  for (const auto& p : {mixed_path, noise_path, clip_path, manifest_path}) out << p.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string dir;
  std::string manifest;
  std::vector<std::string> outputs;
  double segment_ms = 30.0;
  std::string event_metrics = "onset,roc";
  double sta_s = 0.5;
  double lta_s = 10.0;
  double trigger_ratio = 4.0;
  double z_min = 1.0;
  double z_max = 15.0;
  double z_step = 0.5;
  double min_separation_ms = 1.0;
  double match_tolerance_ms = 1.0;
};

struct EvalItem {
  std::string id;
  fs::path clean;
  fs::path denoised;
  std::optional<fs::path> noisy;
  std::optional<fs::path> events;
};

std::vector<EvalItem> items_from_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::IoError, "not a directory: " + dir.string());
  std::map<std::string, EvalItem> by_stem;
  std::set<std::string> have_clean, have_denoised;
  auto ends_with = [](const std::string& s, const std::string& suf) {
    return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    for (const std::string suf : {".clean.wav", ".denoised.wav", ".noisy.wav", ".events.txt"}) {
      if (!ends_with(name, suf)) continue;
      const std::string stem = name.substr(0, name.size() - suf.size());
      EvalItem& item = by_stem[stem];
      item.id = stem;
      if (suf == ".clean.wav") {
        item.clean = entry.path();
        have_clean.insert(stem);
      } else if (suf == ".denoised.wav") {
        item.denoised = entry.path();
        have_denoised.insert(stem);
      } else if (suf == ".noisy.wav") {
        item.noisy = entry.path();
      } else {
        item.events = entry.path();
      }
      break;
    }
  }
  std::vector<std::string> unmatched;
  std::vector<EvalItem> items;
  for (auto& [stem, item] : by_stem) {
    const bool c = have_clean.count(stem) > 0;
    const bool d = have_denoised.count(stem) > 0;
    if (c && d) {
      items.push_back(item);
    } else if (c) {
      unmatched.push_back(stem + ".clean.wav has no " + stem + ".denoised.wav");
    } else if (d) {
      unmatched.push_back(stem + ".denoised.wav has no " + stem + ".clean.wav");
    }
  }
  if (!unmatched.empty()) throw UsageError("unmatched pairs in " + dir.string(), unmatched);
  if (items.empty()) throw UsageError("no *.clean.wav / *.denoised.wav pairs in " + dir.string());
  return items;
}

std::vector<EvalItem> items_from_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("invalid manifest JSON: " + std::string(e.what()));
  }
  const json& list = j.is_object() && j.contains("pairs") ? j.at("pairs") : j;
  if (!list.is_array() || list.empty()) throw UsageError("manifest must be a non-empty array of pairs");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  std::vector<EvalItem> items;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    if (!e.is_object() || !e.contains("clean") || !e.contains("denoised")) {
      problems.push_back("entry " + std::to_string(i) + " lacks clean or denoised");
      continue;
    }
    EvalItem item;
    item.clean = resolve(e.at("clean").get<std::string>());
    item.denoised = resolve(e.at("denoised").get<std::string>());
    item.id = e.contains("id") ? e.at("id").get<std::string>() : item_stem(item.clean);
    if (e.contains("noisy")) item.noisy = resolve(e.at("noisy").get<std::string>());
    if (e.contains("events")) item.events = resolve(e.at("events").get<std::string>());
    items.push_back(std::move(item));
  }
  if (!problems.empty()) throw UsageError("unmatched pairs in manifest", problems);
  return items;
}

std::vector<double> read_events(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<double> times;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    try {
      times.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad event time in " + path.string() + ": " + line);
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

// Onset error against the first listed event; a missed trigger counts as the recording length.
double onset_error_vs_events(const Signal& s, const std::vector<double>& events, const StaLtaParams& p) {
  const auto onset = sta_lta_onset(s, p);
  return onset ? std::abs(*onset - events.front()) : s.duration();
}

double event_auc(const Signal& s, const std::vector<double>& events, const EvalOptions& o) {
  std::vector<std::vector<double>> sweep;
  for (double z = o.z_min; z <= o.z_max + 1e-9; z += o.z_step) {
    sweep.push_back(detect_peaks(s, z, o.min_separation_ms));
  }
  return roc_auc(sweep, events, o.match_tolerance_ms, s.duration()).auc;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  if (o.dir.empty() == o.manifest.empty()) throw UsageError("give exactly one of DIR or --manifest");
  if (!(o.z_step > 0.0) || o.z_max < o.z_min) throw UsageError("invalid z sweep");
  std::set<std::string> wanted;
  for (const auto& m : split_names(o.event_metrics)) {
    if (m != "onset" && m != "roc") throw UsageError("unknown event metric: " + m);
    wanted.insert(m);
  }
  std::vector<ReportFormat> formats;
  for (const auto& p : o.outputs) formats.push_back(report_format_from_path(p));

  const std::vector<EvalItem> items = o.dir.empty() ? items_from_manifest(o.manifest) : items_from_directory(o.dir);
  const SegSnrParams seg{o.segment_ms};
  const StaLtaParams sta{o.sta_s, o.lta_s, o.trigger_ratio};

  MetricsReport report;
  for (const auto& item : items) {
    const Signal clean = read_wav(item.clean);
    const Signal denoised = read_wav(item.denoised);
    std::optional<Signal> noisy;
    if (item.noisy) noisy = read_wav(*item.noisy);

    const double sdr_d = sdr(clean, denoised);
    const double seg_d = segsnr(clean, denoised, seg);
    report["sdr"].add(item.id, sdr_d);
    report["segsnr"].add(item.id, seg_d);
    if (noisy) {
      const double sdr_n = sdr(clean, *noisy);
      const double seg_n = segsnr(clean, *noisy, seg);
      report["sdr_noisy"].add(item.id, sdr_n);
      report["segsnr_noisy"].add(item.id, seg_n);
      report["sdr_improvement"].add(item.id, sdr_d - sdr_n);
      report["segsnr_improvement"].add(item.id, seg_d - seg_n);
    }
    if (item.events) {
      const std::vector<double> events = read_events(*item.events);
      if (events.empty()) throw Error(ErrorKind::InvalidReference, "no events in " + item.events->string());
      if (wanted.count("onset")) {
        report["onset_error_s"].add(item.id, onset_error_vs_events(denoised, events, sta));
        if (noisy) report["onset_error_noisy_s"].add(item.id, onset_error_vs_events(*noisy, events, sta));
      }
      if (wanted.count("roc")) {
        report["auc"].add(item.id, event_auc(denoised, events, o));
        if (noisy) report["auc_noisy"].add(item.id, event_auc(*noisy, events, o));
      }
    }
  }

  if (o.outputs.empty()) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    for (std::size_t i = 0; i < o.outputs.size(); ++i) {
      write_report(report, o.outputs[i], formats[i]);
      out << o.outputs[i] << '\n';
    }
  }
  err << "eval: " << items.size() << " pairs\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string lengths = "1,10,30,60,120,300";
  std::string algorithms = "spectral-gate,spectral-gate-nonstationary,wiener,iterative-wiener,savgol,specsub";
  std::string threads = "1," + std::to_string(default_threads());
  int batch = 1;
  int repetitions = 5;
  int warmup = 2;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  std::string output;
  AlgoFlags algo;
};

// Harmonic tone bursts in white noise at 0 dB.
Signal bench_signal(double length_s, int sample_rate, std::uint64_t seed) {
  ToneBurstSpec spec;
  spec.sample_rate = sample_rate;
  spec.duration_s = length_s;
  spec.harmonics = 20;
  const Signal clean = gen_tone_bursts(spec);
  Rng rng(seed);
  const Signal noise = Signal::mono(white_noise(clean.length(), rng), sample_rate);
  return mix_at_snr(clean, noise, 0.0).mixed;
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  const auto lengths = parse_list<double>(o.lengths, "--lengths");
  const auto thread_counts = parse_list<int>(o.threads, "--threads");
  std::vector<Algorithm> algorithms;
  for (const auto& name : split_names(o.algorithms)) algorithms.push_back(algorithm_from_string(name));
  if (algorithms.empty()) throw UsageError("--algorithms must not be empty");
  if (o.batch < 1 || o.repetitions < 1 || o.warmup < 0) throw UsageError("invalid batch/repetitions/warmup");
  for (const double l : lengths) {
    if (!(l > 0.0)) throw UsageError("lengths must be positive");
  }
  for (const int t : thread_counts) {
    if (t < 1) throw UsageError("thread counts must be >= 1");
  }
  std::vector<PipelineConfig> configs;
  for (const Algorithm a : algorithms) configs.push_back(to_pipeline(o.algo, a));

  Rng clip_rng(o.seed ^ 0x5bd1e995u);
  const Signal clip = Signal::mono(white_noise(o.sample_rate, clip_rng), o.sample_rate);

  std::vector<std::pair<std::size_t, BenchResult>> rows;  // (algorithm index, result)
  for (const double length : lengths) {
    std::vector<Signal> batch;
    for (int i = 0; i < o.batch; ++i) batch.push_back(bench_signal(length, o.sample_rate, o.seed + i));
    const double gain = std::sqrt(mean_power(batch.front()) / 2.0);
    const Signal scaled_clip(clip.samples * gain, clip.sample_rate);
    for (std::size_t a = 0; a < configs.size(); ++a) {
      const PipelineConfig& cfg = configs[a];
      const Runner runner = [&cfg, &scaled_clip](const Signal& s) {
        return run_algorithm(cfg, s, std::optional<Signal>(scaled_clip));
      };
      for (const int t : thread_counts) {
        BenchResult r = thread_scaling_sweep(to_string(cfg.algorithm), runner, batch, {t}, o.repetitions,
                                             o.warmup).front();
        err << "bench: " << r.algorithm << ' ' << r.length_s << " s x" << r.batch << " threads=" << t
            << " median " << fixed(r.median_ms, 2) << " ms (" << fixed(r.realtime_factor, 1) << "x realtime)\n";
        rows.emplace_back(a, std::move(r));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& l, const auto& r) {
    return l.first < r.first || (l.first == r.first && l.second.threads < r.second.threads);
  });
  std::vector<BenchResult> results;
  for (auto& row : rows) results.push_back(std::move(row.second));

  const std::string csv = bench_to_csv(results);
  if (o.output.empty()) {
    out << csv;
  } else {
    write_text_file(o.output, csv);
    out << o.output << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int report_error(std::ostream& err, bool as_json, int code, const std::string& kind, const std::string& message,
                 const std::vector<std::string>& details = {}) {
  if (as_json) {
    err << json{{"error", {{"exit_code", code}, {"kind", kind}, {"message", message}, {"details", details}}}}.dump()
        << '\n';
  } else {
    err << "specgate: error: " << message << '\n';
    for (const auto& d : details) err << "  " << d << '\n';
  }
  return code;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::ParseError:
    case ErrorKind::Unsupported:
      return kExitIo;
    case ErrorKind::InvalidParams:
      return kExitUsage;
    default:
      return kExitProcessing;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rewrites `args` so config-file entries sit right after the subcommand and explicit
// flags, which come later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  const auto sub_it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end();
  });
  if (sub_it == args.end()) return args;
  CLI::App* sub = app.get_subcommand(*sub_it);

  std::string config_path;
  for (auto it = sub_it + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) config_path = *(it + 1);
    if (it->rfind("--config=", 0) == 0) config_path = it->substr(9);
  }
  if (config_path.empty()) return args;

  std::vector<std::string> injected;
  for (const auto& [key, value] : parse_config_text(read_text(config_path))) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (key == "config" || key == "help" || opt == nullptr) {
      throw UsageError("unknown config key '" + key + "' for " + *sub_it);
    }
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), sub_it + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), sub_it + 1, args.end());
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw UsageError("config line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const bool json_errors = std::find(args.begin(), args.end(), "--json") != args.end();

  CLI::App app{"Spectral gating noise reduction with baseline denoisers, metrics and benchmarks", "specgate"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  bool json_flag = false;
  std::string config_path;  // consumed by expand_config before parsing
  app.add_flag("--json", json_flag, "machine-readable errors on standard error");

  DenoiseOptions dn;
  CLI::App* denoise = app.add_subcommand("denoise", "denoise WAV files");
  denoise->fallthrough();
  denoise->add_option("inputs", dn.inputs, "input WAV files")->required();
  denoise->add_option("-o,--output", dn.output, "output WAV (single input)");
  denoise->add_option("--output-dir", dn.output_dir, "directory for <stem>.denoised.wav outputs");
  denoise->add_option("--noise", dn.noise, "noise-only WAV for the stationary profile / specsub");
  denoise->add_option("--algorithm", dn.algorithm,
                      "spectral-gate, spectral-gate-nonstationary, wiener, iterative-wiener, savgol, specsub")
      ->capture_default_str();
  denoise->add_option("--format", dn.format, "pcm16, pcm24, pcm32 or float32 (default: input format)");
  denoise->add_option("--threads", dn.threads, "worker threads for batches")->capture_default_str();
  denoise->add_option("--config", config_path, "flat key = value file; flags override it");
  add_algo_options(denoise, dn.algo);

  MixOptions mx;
  CLI::App* mix = app.add_subcommand("mix", "mix clean audio with noise at a target SNR");
  mix->fallthrough();
  mix->add_option("clean", mx.clean, "clean WAV")->required();
  mix->add_option("--noise", mx.noise, "noise WAV");
  mix->add_option("--noise-kind", mx.noise_kind, "generate white or pink noise instead of --noise");
  mix->add_option("--snr-db", mx.snr_db, "target SNR (RMS basis)")->required();
  mix->add_option("--seed", mx.seed, "RNG seed")->capture_default_str();
  mix->add_option("-o,--output", mx.output, "mixed WAV path; siblings get .noise.wav, .noiseclip.wav, .json")
      ->required();
  mix->add_option("--clip-s", mx.clip_s, "noise clip length in seconds")->capture_default_str();
  mix->add_option("--format", mx.format, "output WAV format")->capture_default_str();
  mix->add_option("--config", config_path, "flat key = value file; flags override it");

  EvalOptions ev;
  CLI::App* eval = app.add_subcommand("eval", "score denoised files against clean references");
  eval->fallthrough();
  eval->add_option("dir", ev.dir, "directory with <id>.clean.wav / <id>.denoised.wav pairs");
  eval->add_option("--manifest", ev.manifest, "JSON list of {id, clean, denoised, noisy, events}");
  eval->add_option("-o,--output", ev.outputs, "report path(s), .json or .csv")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  eval->add_option("--segment-ms", ev.segment_ms, "SegSNR segment length")->capture_default_str();
  eval->add_option("--event-metrics", ev.event_metrics, "with event files: onset, roc")->capture_default_str();
  eval->add_option("--sta-s", ev.sta_s, "STA window")->capture_default_str();
  eval->add_option("--lta-s", ev.lta_s, "LTA window")->capture_default_str();
  eval->add_option("--trigger-ratio", ev.trigger_ratio, "STA/LTA trigger")->capture_default_str();
  eval->add_option("--z-min", ev.z_min, "ROC sweep start (z-score)")->capture_default_str();
  eval->add_option("--z-max", ev.z_max, "ROC sweep end")->capture_default_str();
  eval->add_option("--z-step", ev.z_step, "ROC sweep step")->capture_default_str();
  eval->add_option("--min-separation-ms", ev.min_separation_ms, "peak separation")->capture_default_str();
  eval->add_option("--match-tolerance-ms", ev.match_tolerance_ms, "event match tolerance")->capture_default_str();
  eval->add_option("--config", config_path, "flat key = value file; flags override it");

  BenchOptions bn;
  CLI::App* bench = app.add_subcommand("bench", "time algorithms over a length ladder");
  bench->fallthrough();
  bench->add_option("--lengths", bn.lengths, "comma-separated signal lengths in seconds")->capture_default_str();
  bench->add_option("--algorithms", bn.algorithms, "comma-separated algorithm names")->capture_default_str();
  bench->add_option("--threads", bn.threads, "comma-separated thread counts")->capture_default_str();
  bench->add_option("--batch", bn.batch, "items per timed run")->capture_default_str();
  bench->add_option("--repetitions", bn.repetitions, "timed runs per point")->capture_default_str();
  bench->add_option("--warmup", bn.warmup, "untimed runs per point")->capture_default_str();
  bench->add_option("--sample-rate", bn.sample_rate, "sample rate of generated signals")->capture_default_str();
  bench->add_option("--seed", bn.seed, "RNG seed")->capture_default_str();
  bench->add_option("-o,--output", bn.output, "CSV path (default: standard output)");
  bench->add_option("--config", config_path, "flat key = value file; flags override it");
  add_algo_options(bench, bn.algo);

  try {
    std::vector<std::string> expanded = expand_config(args, app);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return report_error(err, json_errors, kExitUsage, "usage", e.what());
  } catch (const UsageError& e) {
    return report_error(err, json_errors, kExitUsage, "usage", e.what(), e.details);
  } catch (const Error& e) {
    return report_error(err, json_errors, exit_code_for(e.kind()), to_string(e.kind()), e.what());
  }

  try {
    if (denoise->parsed()) return cmd_denoise(dn, out, err);
    if (mix->parsed()) return cmd_mix(mx, out, err);
    if (eval->parsed()) return cmd_eval(ev, out, err);
    if (bench->parsed()) return cmd_bench(bn, out, err);
  } catch (const UsageError& e) {
    return report_error(err, json_errors, kExitUsage, "usage", e.what(), e.details);
  } catch (const Error& e) {
    return report_error(err, json_errors, exit_code_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, json_errors, kExitIo, "io", e.what());
  } catch (const std::exception& e) {
    return report_error(err, json_errors, kExitProcessing, "processing", e.what());
  }
  return report_error(err, json_errors, kExitUsage, "usage", "no subcommand");
}

}  // namespace specgate
