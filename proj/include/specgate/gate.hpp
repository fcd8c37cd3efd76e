#pragma once

#include <optional>

#include <Eigen/Dense>

#include "specgate/dsp.hpp"
#include "specgate/signal.hpp"

namespace specgate {

enum class GateMode { Stationary, NonStationary };

struct GateConfig {
  StftParams stft;
  double n_std_thresh = 1.5;
  double prop_decrease = 1.0;
  double freq_mask_smooth_hz = 500.0;
  double time_mask_smooth_ms = 50.0;
  GateMode mode = GateMode::Stationary;
  double noise_window_ms = 1000.0;
  bool smoothing_enabled = true;

  void validate() const;
};

/// Per-frequency statistics of a noise spectrogram in dB.
struct NoiseProfile {
  Eigen::VectorXd mu_db;
  Eigen::VectorXd sigma_db;
  Eigen::VectorXd thresh_db;
};

/// Gain mask over (frequency, frame), values in [0, 1].
using Mask = Eigen::MatrixXd;

/// Mean and population standard deviation over frames for every frequency row,
/// threshold = mean + k * std.
NoiseProfile estimate_noise_profile(const Eigen::MatrixXd& noise_spec_db, double k);

/// 1 where the dB value strictly exceeds the row threshold.
Mask build_mask_stationary(const Eigen::MatrixXd& sig_spec_db, const NoiseProfile& profile);

/// 1 where the dB value strictly exceeds its local sliding mean + k * std.
Mask build_mask_nonstationary(const Eigen::MatrixXd& sig_spec_db, double k, int window_frames);

/// Sliding window length in frames for the non-stationary statistics, forced odd.
int nonstationary_window_frames(double window_ms, int sample_rate, int hop_length);

struct SmoothingExtent {
  int n_grad_freq = 0;
  int n_grad_time = 0;
};

SmoothingExtent smoothing_extent(double freq_smooth_hz, double time_smooth_ms, int sample_rate,
                                 const StftParams& stft);

/// Triangle 1 - |(i - n) / n| over 0 <= i <= 2n; [1] for n = 0.
Eigen::VectorXd triangular_window(int n_grad);

/// Outer product of frequency and time triangles, normalized to sum 1.
Eigen::MatrixXd smoothing_kernel(double freq_smooth_hz, double time_smooth_ms, int sample_rate,
                                 const StftParams& stft);

/// Binary mask for one channel's dB spectrogram, smoothed and clamped when enabled.
/// `noise_db` is ignored in NonStationary mode; when absent in Stationary mode the
/// statistics come from `sig_db` itself.
Mask compute_gate_mask(const Eigen::MatrixXd& sig_db, const Eigen::MatrixXd* noise_db,
                       const GateConfig& config, int sample_rate);

/// G = 1 - prop_decrease * (1 - mask).
inline Eigen::MatrixXd gate_gain(const Mask& mask, double prop_decrease) {
  return (1.0 - prop_decrease * (1.0 - mask.array())).matrix();
}

/// Full spectral gating of every channel. A one-channel noise clip is shared
/// across all channels.
Signal apply_gate(const Signal& signal, const std::optional<Signal>& noise,
                  const GateConfig& config);

}  // namespace specgate
