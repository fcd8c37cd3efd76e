#include "specgate/gate.hpp"

#include <cmath>

namespace specgate {

void GateConfig::validate() const {
  stft.validate();
  if (!(prop_decrease >= 0.0 && prop_decrease <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "prop_decrease must lie in [0, 1]");
  }
  if (!std::isfinite(n_std_thresh)) throw Error(ErrorKind::InvalidParams, "n_std_thresh must be finite");
  if (!(freq_mask_smooth_hz >= 0.0) || !(time_mask_smooth_ms >= 0.0)) {
    throw Error(ErrorKind::InvalidParams, "smoothing extents must be non-negative");
  }
  if (mode == GateMode::NonStationary && !(noise_window_ms > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "noise_window_ms must be positive");
  }
}

NoiseProfile estimate_noise_profile(const Eigen::MatrixXd& noise_spec_db, double k) {
  if (noise_spec_db.cols() == 0 || noise_spec_db.rows() == 0) {
    throw Error(ErrorKind::EmptyInput, "noise spectrogram has no frames");
  }
  const double frames = static_cast<double>(noise_spec_db.cols());
  NoiseProfile p;
  p.mu_db = noise_spec_db.rowwise().sum() / frames;
  p.sigma_db =
      ((noise_spec_db.colwise() - p.mu_db).array().square().rowwise().sum() / frames).sqrt();
  p.thresh_db = p.mu_db + k * p.sigma_db;
  return p;
}

Mask build_mask_stationary(const Eigen::MatrixXd& sig_spec_db, const NoiseProfile& profile) {
  if (sig_spec_db.rows() != profile.thresh_db.size()) {
    throw Error(ErrorKind::ShapeMismatch, "spectrogram and profile frequency counts differ");
  }
  const Eigen::MatrixXd thresh = profile.thresh_db.replicate(1, sig_spec_db.cols());
  return (sig_spec_db.array() > thresh.array()).cast<double>().matrix();
}

Mask build_mask_nonstationary(const Eigen::MatrixXd& sig_spec_db, double k, int window_frames) {
  const SlidingStats stats = sliding_stats(sig_spec_db, window_frames);
  return (sig_spec_db.array() > (stats.mean + k * stats.std).array()).cast<double>().matrix();
}

int nonstationary_window_frames(double window_ms, int sample_rate, int hop_length) {
  int frames = static_cast<int>(std::lround(window_ms * sample_rate / (1000.0 * hop_length)));
  if (frames < 1) frames = 1;
  if (frames % 2 == 0) frames += 1;
  return frames;
}

SmoothingExtent smoothing_extent(double freq_smooth_hz, double time_smooth_ms, int sample_rate,
                                 const StftParams& stft) {
  if (!(freq_smooth_hz >= 0.0) || !(time_smooth_ms >= 0.0)) {
    throw Error(ErrorKind::InvalidParams, "smoothing extents must be non-negative");
  }
  const double bin_hz = static_cast<double>(sample_rate) / stft.n_fft;
  SmoothingExtent e;
  e.n_grad_freq = static_cast<int>(std::lround(freq_smooth_hz / bin_hz));
  e.n_grad_time = static_cast<int>(
      std::lround(time_smooth_ms * sample_rate / (1000.0 * stft.hop_length)));
  return e;
}

Eigen::VectorXd triangular_window(int n_grad) {
  if (n_grad <= 0) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd l(2 * n_grad + 1);
  for (int i = 0; i <= 2 * n_grad; ++i) {
    l[i] = 1.0 - std::abs(static_cast<double>(i - n_grad) / n_grad);
  }
  return l;
}

Eigen::MatrixXd smoothing_kernel(double freq_smooth_hz, double time_smooth_ms, int sample_rate,
                                 const StftParams& stft) {
  const SmoothingExtent e = smoothing_extent(freq_smooth_hz, time_smooth_ms, sample_rate, stft);
  const Eigen::MatrixXd w = triangular_window(e.n_grad_freq) * triangular_window(e.n_grad_time).transpose();
  return w / w.sum();
}

Mask compute_gate_mask(const Eigen::MatrixXd& sig_db, const Eigen::MatrixXd* noise_db,
                       const GateConfig& config, int sample_rate) {
  Mask mask;
  if (config.mode == GateMode::NonStationary) {
    const int window = nonstationary_window_frames(config.noise_window_ms, sample_rate,
                                                   config.stft.hop_length);
    mask = build_mask_nonstationary(sig_db, config.n_std_thresh, window);
  } else {
    const NoiseProfile profile =
        estimate_noise_profile(noise_db ? *noise_db : sig_db, config.n_std_thresh);
    mask = build_mask_stationary(sig_db, profile);
  }

  if (config.smoothing_enabled) {
    const SmoothingExtent e = smoothing_extent(config.freq_mask_smooth_hz,
                                               config.time_mask_smooth_ms, sample_rate,
                                               config.stft);
    if (e.n_grad_freq > 0 || e.n_grad_time > 0) {
      // The kernel is an outer product, so two 1-D passes give the same result
      // as the full 2-D correlation.
      Eigen::VectorXd lf = triangular_window(e.n_grad_freq);
      Eigen::VectorXd lt = triangular_window(e.n_grad_time);
      lf /= lf.sum();
      lt /= lt.sum();
      mask = conv2d_same_separable(mask, lf, lt).cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return mask;
}

Signal apply_gate(const Signal& signal, const std::optional<Signal>& noise,
                  const GateConfig& config) {
  signal.validate();
  config.validate();
  if (noise) {
    noise->validate();
    if (noise->sample_rate != signal.sample_rate) {
      throw Error(ErrorKind::RateMismatch, "noise clip sample rate differs from signal");
    }
    if (noise->channels() != 1 && noise->channels() != signal.channels()) {
      throw Error(ErrorKind::ShapeMismatch, "noise clip must have 1 or the signal's channel count");
    }
  }

  Spectrogram spec = stft(signal, config.stft);
  std::optional<Spectrogram> noise_spec;
  if (noise && config.mode == GateMode::Stationary) noise_spec = stft(*noise, config.stft);

  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    Eigen::MatrixXcd& s = spec.channels[c];
    const Eigen::MatrixXd sig_db = magnitude_db(s);
    Eigen::MatrixXd noise_db;
    if (noise_spec) {
      const std::size_t nc = noise_spec->channels.size() == 1 ? 0 : c;
      noise_db = magnitude_db(noise_spec->channels[nc]);
    }
    const Mask mask =
        compute_gate_mask(sig_db, noise_spec ? &noise_db : nullptr, config, signal.sample_rate);
    s.array() *= gate_gain(mask, config.prop_decrease).array().cast<std::complex<double>>();
  }
  return istft(spec);
}

}  // namespace specgate
