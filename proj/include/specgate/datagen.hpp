#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specgate/signal.hpp"

namespace specgate {

/// Seeded generator with outputs fixed across platforms: std::mt19937_64 (its output
/// sequence is pinned by the C++ standard), uniforms from the top 53 bits, normals by
/// Box-Muller (pairs, second value cached), exponentials by inversion. The std::
/// distributions are avoided because their algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Exponential with the given rate (mean 1 / rate).
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class NoiseKind { White, Pink };

const char* to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Mean of squared samples over every channel.
double mean_power(const Signal& signal);

/// 10 log10(P_clean / P_noise) from full-clip mean powers.
double measured_snr_db(const Signal& clean, const Signal& noise);

struct MixResult {
  Signal mixed;
  Signal scaled_noise;
  double gain = 1.0;  // factor applied to the (tiled) noise
};

/// Scales `noise` so the clip-wide SNR equals snr_db and adds it to `clean`. The noise is
/// tiled or truncated to the clean length; a mono noise is broadcast to every channel.
MixResult mix_at_snr(const Signal& clean, const Signal& noise, double snr_db);

/// `noise` tiled (or truncated) to `length` samples and broadcast to `channels`.
Signal fit_noise(const Signal& noise, Eigen::Index length, Eigen::Index channels);

/// I.i.d. standard normal samples.
Eigen::VectorXd white_noise(Eigen::Index n, Rng& rng);

/// White Gaussian noise shaped in the frequency domain to a 1/f power spectrum (DC
/// removed), unit RMS. The FFT length is the next power of two >= n.
Eigen::VectorXd pink_noise(Eigen::Index n, Rng& rng);

/// Unit-RMS mono noise; White is normalized too.
Signal gen_noise(NoiseKind kind, double duration_s, int sample_rate, std::uint64_t seed);

Signal gen_tone(double freq_hz, double duration_s, int sample_rate, double amplitude = 1.0);

/// Linear chirp from f0 to f1 over the duration.
Signal gen_chirp(double f0_hz, double f1_hz, double duration_s, int sample_rate, double amplitude = 1.0);

struct ToneBurstSpec {
  int sample_rate = 16000;
  double duration_s = 4.0;
  double start_s = 0.1;
  double burst_s = 0.4;
  double gap_s = 0.1;
  std::vector<double> f0_hz{100.0, 120.0, 140.0};  // cycled burst by burst
  int harmonics = 1;
  double rolloff = 1.0;  // harmonic h has amplitude 1 / h^rolloff
  double peak = 0.5;     // output is scaled to this peak |x|
  void validate() const;
};

/// Harmonic tone bursts with sin^2 envelopes. Harmonics above 0.45 * sample_rate are dropped.
Signal gen_tone_bursts(const ToneBurstSpec& spec);

struct AmSceneSpec {
  ToneBurstSpec tones{16000, 20.0, 0.1, 0.1, 0.4, {1000.0, 1500.0, 2000.0}, 1, 1.0, 0.5};
  NoiseKind noise_kind = NoiseKind::White;
  double modulation_depth = 0.8;
  double period_s = 0.0;  // 0 means one period over the whole scene
  std::uint64_t seed = 0;
  void validate() const;
};

struct Scene {
  Signal clean;
  Signal noise;
};

/// Tone bursts plus noise under the envelope (1 - d) + d (1 - cos(2 pi t / P)) / 2, which
/// is lowest at t = 0 and peaks at P / 2. The noise is not scaled to any SNR.
Scene gen_tone_and_am_noise_scene(const AmSceneSpec& spec);

struct SpikeRecordingSpec {
  int sample_rate = 30000;
  double duration_s = 60.0;
  int n_units = 10;
  double amplitude_min = 0.075;  // trough depth, mV
  double amplitude_max = 0.150;
  double width_min_ms = 0.3;
  double width_max_ms = 0.6;
  double rate_min_hz = 3.0;
  double rate_max_hz = 8.0;
  int n_background_units = 300;
  double background_amplitude_min = 0.005;
  double background_amplitude_max = 0.030;
  double background_rate_min_hz = 1.0;
  double background_rate_max_hz = 5.0;
  double noise_floor = 0.010;  // Gaussian floor standard deviation, mV
  std::uint64_t seed = 0;
  void validate() const;
};

struct SpikeEvent {
  double time_s = 0.0;
  int unit = 0;
};

struct SpikeRecording {
  Signal signal;      // foreground + background + floor
  Signal foreground;  // foreground units only
  std::vector<SpikeEvent> truth;  // foreground spikes, sorted by time
};

/// Biphasic difference-of-Gaussians spike shape, trough = -amplitude at index `center`.
Eigen::VectorXd spike_template(double width_ms, double amplitude, int sample_rate, Eigen::Index* center);

SpikeRecording gen_spike_recording(const SpikeRecordingSpec& spec);

std::vector<double> spike_times(const std::vector<SpikeEvent>& events);

struct OnsetEventSpec {
  int sample_rate = 100;
  double duration_s = 30.0;
  double onset_s = 15.0;
  double amplitude_ratio = 10.0;
  double pre_onset_rms = 0.01;
  double decay_s = 10.0;
  double rise_s = 0.05;
  double freq_min_hz = 3.0;
  double freq_max_hz = 8.0;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Gaussian background of pre_onset_rms plus, from onset_s, a decaying sinusoid whose
/// undecayed RMS is amplitude_ratio * pre_onset_rms.
Signal gen_onset_event(const OnsetEventSpec& spec);
Signal gen_onset_event(double duration_s, double onset_s, double amplitude_ratio, std::uint64_t seed);

/// A clip of `clip_length` samples drawn at a seeded offset from noise[skip:], scaled by
/// `gain`. Throws InputTooShort when fewer than clip_length samples follow `skip`.
Signal noise_clip(const Signal& noise, Eigen::Index skip, Eigen::Index clip_length, double gain, Rng& rng);

}  // namespace specgate
