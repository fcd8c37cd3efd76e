#include "specgate/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace specgate {

using std::numbers::pi;

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * pi * u2);
  return r * std::cos(2.0 * pi * u2);
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw Error(ErrorKind::InvalidParams, "exponential rate must be positive");
  return -std::log1p(-uniform()) / rate;
}

const char* to_string(NoiseKind kind) {
  return kind == NoiseKind::White ? "white" : "pink";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "white") return NoiseKind::White;
  if (name == "pink") return NoiseKind::Pink;
  throw Error(ErrorKind::InvalidParams, "unknown noise kind: " + name);
}

double mean_power(const Signal& signal) {
  if (signal.empty()) throw Error(ErrorKind::EmptyInput, "empty signal");
  return signal.samples.squaredNorm() / static_cast<double>(signal.samples.size());
}

double measured_snr_db(const Signal& clean, const Signal& noise) {
  return 10.0 * std::log10(mean_power(clean) / mean_power(noise));
}

Signal fit_noise(const Signal& noise, Eigen::Index length, Eigen::Index channels) {
  if (noise.empty()) throw Error(ErrorKind::EmptyInput, "empty noise");
  if (noise.channels() != 1 && noise.channels() != channels) {
    throw Error(ErrorKind::ShapeMismatch, "noise must be mono or match the channel count");
  }
  SampleMatrix out(channels, length);
  for (Eigen::Index c = 0; c < channels; ++c) {
    const auto src = noise.channel(noise.channels() == 1 ? 0 : c);
    for (Eigen::Index i = 0; i < length; i += noise.length()) {
      const Eigen::Index n = std::min(noise.length(), length - i);
      out.row(c).segment(i, n) = src.head(n);
    }
  }
  return {std::move(out), noise.sample_rate};
}

MixResult mix_at_snr(const Signal& clean, const Signal& noise, double snr_db) {
  clean.validate();
  noise.validate();
  if (!std::isfinite(snr_db)) throw Error(ErrorKind::InvalidParams, "snr_db must be finite");
  if (clean.sample_rate != noise.sample_rate) {
    throw Error(ErrorKind::RateMismatch, "clean and noise sample rates differ");
  }
  Signal fitted = fit_noise(noise, clean.length(), clean.channels());
  const double pc = mean_power(clean);
  const double pn = mean_power(fitted);
  if (pc == 0.0) throw Error(ErrorKind::InvalidInput, "clean signal has zero power");
  if (pn == 0.0) throw Error(ErrorKind::InvalidInput, "noise has zero power");

  MixResult r;
  r.gain = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));
  fitted.samples *= r.gain;
  r.mixed = Signal(clean.samples + fitted.samples, clean.sample_rate);
  r.scaled_noise = std::move(fitted);
  return r;
}

Eigen::VectorXd white_noise(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
  return x;
}

Eigen::VectorXd pink_noise(Eigen::Index n, Rng& rng) {
  Eigen::Index m = 2;
  while (m < n) m *= 2;
  const Eigen::VectorXd w = white_noise(m, rng);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> time(w.data(), w.data() + m);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, time);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
  fft.inv(time, spec, m);

  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(time.data(), n);
  const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(n));
  return rms > 0.0 ? Eigen::VectorXd(x / rms) : x;
}

Signal gen_noise(NoiseKind kind, double duration_s, int sample_rate, std::uint64_t seed) {
  if (sample_rate <= 0) throw Error(ErrorKind::InvalidParams, "sample rate must be positive");
  const auto n = static_cast<Eigen::Index>(std::lround(duration_s * sample_rate));
  if (!(duration_s > 0.0) || n < 1) throw Error(ErrorKind::InvalidParams, "duration must be positive");
  Rng rng(seed);
  Eigen::VectorXd x;
  if (kind == NoiseKind::Pink) {
    x = pink_noise(n, rng);
  } else {
    x = white_noise(n, rng);
    x /= std::sqrt(x.squaredNorm() / static_cast<double>(n));
  }
  return Signal::mono(x, sample_rate);
}

namespace {

Eigen::Index sample_count(double duration_s, int sample_rate) {
  if (sample_rate <= 0) throw Error(ErrorKind::InvalidParams, "sample rate must be positive");
  const auto n = static_cast<Eigen::Index>(std::lround(duration_s * sample_rate));
  if (!(duration_s > 0.0) || n < 1) throw Error(ErrorKind::InvalidParams, "duration must be positive");
  return n;
}

}  // namespace

Signal gen_tone(double freq_hz, double duration_s, int sample_rate, double amplitude) {
  const Eigen::Index n = sample_count(duration_s, sample_rate);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * pi * freq_hz * static_cast<double>(i) / sample_rate);
  }
  return Signal::mono(x, sample_rate);
}

Signal gen_chirp(double f0_hz, double f1_hz, double duration_s, int sample_rate, double amplitude) {
  const Eigen::Index n = sample_count(duration_s, sample_rate);
  const double k = (f1_hz - f0_hz) / duration_s;
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    x[i] = amplitude * std::sin(2.0 * pi * (f0_hz * t + 0.5 * k * t * t));
  }
  return Signal::mono(x, sample_rate);
}

void ToneBurstSpec::validate() const {
  if (sample_rate <= 0 || !(duration_s > 0.0) || !(burst_s > 0.0) || !(gap_s >= 0.0) ||
      !(start_s >= 0.0)) {
    throw Error(ErrorKind::InvalidParams, "invalid tone burst timing");
  }
  if (f0_hz.empty() || harmonics < 1 || !(peak > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "invalid tone burst content");
  }
}

Signal gen_tone_bursts(const ToneBurstSpec& spec) {
  spec.validate();
  const Eigen::Index n = sample_count(spec.duration_s, spec.sample_rate);
  const double sr = spec.sample_rate;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double start = spec.start_s;
  for (std::size_t b = 0; start + spec.burst_s < spec.duration_s; ++b) {
    const double f0 = spec.f0_hz[b % spec.f0_hz.size()];
    const auto i0 = static_cast<Eigen::Index>(std::ceil(start * sr));
    for (Eigen::Index i = i0; i < n && i / sr < start + spec.burst_s; ++i) {
      const double tt = i / sr - start;
      const double env = std::pow(std::sin(pi * tt / spec.burst_s), 2);
      double v = 0.0;
      for (int h = 1; h <= spec.harmonics && f0 * h < 0.45 * sr; ++h) {
        v += std::sin(2.0 * pi * f0 * h * tt) / std::pow(h, spec.rolloff);
      }
      x[i] += env * v;
    }
    start += spec.burst_s + spec.gap_s;
  }
  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.0) x *= spec.peak / peak;
  return Signal::mono(x, spec.sample_rate);
}

void AmSceneSpec::validate() const {
  tones.validate();
  if (!(modulation_depth >= 0.0 && modulation_depth <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "modulation depth must lie in [0, 1]");
  }
  if (!(period_s >= 0.0)) throw Error(ErrorKind::InvalidParams, "period must be non-negative");
}

Scene gen_tone_and_am_noise_scene(const AmSceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.clean = gen_tone_bursts(spec.tones);
  const Eigen::Index n = scene.clean.length();
  Rng rng(spec.seed);
  Eigen::VectorXd noise = spec.noise_kind == NoiseKind::Pink ? pink_noise(n, rng) : white_noise(n, rng);
  const double sr = spec.tones.sample_rate;
  const double period = spec.period_s > 0.0 ? spec.period_s : static_cast<double>(n) / sr;
  const double d = spec.modulation_depth;
  for (Eigen::Index i = 0; i < n; ++i) {
    noise[i] *= (1.0 - d) + d * 0.5 * (1.0 - std::cos(2.0 * pi * (i / sr) / period));
  }
  scene.noise = Signal::mono(noise, spec.tones.sample_rate);
  return scene;
}

void SpikeRecordingSpec::validate() const {
  if (sample_rate <= 0 || !(duration_s > 0.0)) throw Error(ErrorKind::InvalidParams, "invalid timing");
  if (n_units < 0 || n_background_units < 0) throw Error(ErrorKind::InvalidParams, "negative unit count");
  if (!(amplitude_min > 0.0 && amplitude_max >= amplitude_min) ||
      !(background_amplitude_min > 0.0 && background_amplitude_max >= background_amplitude_min)) {
    throw Error(ErrorKind::InvalidParams, "amplitudes must be positive with min <= max");
  }
  if (!(width_min_ms > 0.0 && width_max_ms >= width_min_ms)) {
    throw Error(ErrorKind::InvalidParams, "widths must be positive with min <= max");
  }
  if (!(rate_min_hz >= 0.0 && rate_max_hz >= rate_min_hz) ||
      !(background_rate_min_hz >= 0.0 && background_rate_max_hz >= background_rate_min_hz)) {
    throw Error(ErrorKind::InvalidParams, "rates must be non-negative with min <= max");
  }
  if (!(noise_floor >= 0.0)) throw Error(ErrorKind::InvalidParams, "noise floor must be non-negative");
}

Eigen::VectorXd spike_template(double width_ms, double amplitude, int sample_rate, Eigen::Index* center) {
  const double w = width_ms / 1000.0 * sample_rate;
  const Eigen::Index len = static_cast<Eigen::Index>(6.0 * w) | 1;
  const Eigen::Index c = len / 2;
  const double s1 = w / 4.0;
  const double s2 = w / 2.0;
  const double off = w / 2.0;
  Eigen::VectorXd g(len);
  for (Eigen::Index k = 0; k < len; ++k) {
    const double i = static_cast<double>(k - c);
    g[k] = -std::exp(-0.5 * (i / s1) * (i / s1)) + 0.35 * std::exp(-0.5 * ((i - off) / s2) * ((i - off) / s2));
  }
  Eigen::Index trough = 0;
  const double depth = -g.minCoeff(&trough);
  if (center) *center = trough;
  return amplitude * g / depth;
}

namespace {

void add_unit(Eigen::VectorXd& x, Rng& rng, double amp, double width_ms, double rate, int sample_rate,
              double duration, int unit, std::vector<SpikeEvent>* truth) {
  if (rate <= 0.0) return;
  Eigen::Index center = 0;
  const Eigen::VectorXd tpl = spike_template(width_ms, amp, sample_rate, &center);
  const Eigen::Index n = x.size();
  const Eigen::Index len = tpl.size();
  double t = 0.0;
  while (true) {
    t += rng.exponential(rate);
    if (t >= duration) break;
    const Eigen::Index k = std::lround(t * sample_rate);
    const Eigen::Index a = std::max<Eigen::Index>(0, k - center);
    const Eigen::Index b = std::min(n, k - center + len);
    if (b > a) x.segment(a, b - a) += tpl.segment(a - (k - center), b - a);
    if (truth) truth->push_back({static_cast<double>(k) / sample_rate, unit});
  }
}

}  // namespace

SpikeRecording gen_spike_recording(const SpikeRecordingSpec& spec) {
  spec.validate();
  const Eigen::Index n = sample_count(spec.duration_s, spec.sample_rate);
  Rng rng(spec.seed);
  Eigen::VectorXd fg = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd bg = Eigen::VectorXd::Zero(n);
  SpikeRecording rec;

  for (int u = 0; u < spec.n_units + spec.n_background_units; ++u) {
    const bool foreground = u < spec.n_units;
    const double amp = foreground ? rng.uniform(spec.amplitude_min, spec.amplitude_max)
                                  : rng.uniform(spec.background_amplitude_min, spec.background_amplitude_max);
    const double width = rng.uniform(spec.width_min_ms, spec.width_max_ms);
    const double rate = foreground ? rng.uniform(spec.rate_min_hz, spec.rate_max_hz)
                                   : rng.uniform(spec.background_rate_min_hz, spec.background_rate_max_hz);
    add_unit(foreground ? fg : bg, rng, amp, width, rate, spec.sample_rate, spec.duration_s, u,
             foreground ? &rec.truth : nullptr);
  }
  for (Eigen::Index i = 0; i < n; ++i) bg[i] += spec.noise_floor * rng.normal();

  std::stable_sort(rec.truth.begin(), rec.truth.end(),
                   [](const SpikeEvent& a, const SpikeEvent& b) { return a.time_s < b.time_s; });
  rec.signal = Signal::mono(fg + bg, spec.sample_rate);
  rec.foreground = Signal::mono(fg, spec.sample_rate);
  return rec;
}

std::vector<double> spike_times(const std::vector<SpikeEvent>& events) {
  std::vector<double> t;
  t.reserve(events.size());
  for (const auto& e : events) t.push_back(e.time_s);
  return t;
}

void OnsetEventSpec::validate() const {
  if (sample_rate <= 0 || !(duration_s > 0.0)) throw Error(ErrorKind::InvalidParams, "invalid timing");
  if (!(onset_s > 0.0 && onset_s < duration_s)) {
    throw Error(ErrorKind::InvalidParams, "onset must lie inside the recording");
  }
  if (!(amplitude_ratio >= 0.0) || !(pre_onset_rms > 0.0) || !(decay_s > 0.0) || !(rise_s > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "invalid onset event shape");
  }
  if (!(freq_min_hz > 0.0 && freq_max_hz >= freq_min_hz)) {
    throw Error(ErrorKind::InvalidParams, "invalid frequency range");
  }
}

Signal gen_onset_event(const OnsetEventSpec& spec) {
  spec.validate();
  const Eigen::Index n = sample_count(spec.duration_s, spec.sample_rate);
  Rng rng(spec.seed);
  Eigen::VectorXd x = white_noise(n, rng) * spec.pre_onset_rms;
  const double f = rng.uniform(spec.freq_min_hz, spec.freq_max_hz);
  const double a = spec.amplitude_ratio * spec.pre_onset_rms * std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tt = static_cast<double>(i) / spec.sample_rate - spec.onset_s;
    if (tt < 0.0) continue;
    x[i] += a * std::exp(-tt / spec.decay_s) * std::sin(2.0 * pi * f * tt) * (1.0 - std::exp(-tt / spec.rise_s));
  }
  return Signal::mono(x, spec.sample_rate);
}

Signal gen_onset_event(double duration_s, double onset_s, double amplitude_ratio, std::uint64_t seed) {
  OnsetEventSpec spec;
  spec.duration_s = duration_s;
  spec.onset_s = onset_s;
  spec.amplitude_ratio = amplitude_ratio;
  spec.seed = seed;
  return gen_onset_event(spec);
}

Signal noise_clip(const Signal& noise, Eigen::Index skip, Eigen::Index clip_length, double gain, Rng& rng) {
  if (clip_length < 1) throw Error(ErrorKind::InvalidParams, "clip length must be positive");
  const Eigen::Index avail = noise.length() - skip;
  if (skip < 0 || avail < clip_length) {
    throw Error(ErrorKind::InputTooShort, "not enough noise beyond the mixed segment for a clip");
  }
  const auto slack = static_cast<std::uint64_t>(avail - clip_length);
  const Eigen::Index offset = skip + static_cast<Eigen::Index>(slack == 0 ? 0 : rng.next_u64() % (slack + 1));
  return {noise.samples.middleCols(offset, clip_length) * gain, noise.sample_rate};
}

}  // namespace specgate
