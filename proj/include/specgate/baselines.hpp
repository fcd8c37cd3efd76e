#pragma once

#include <Eigen/Dense>

#include "specgate/dsp.hpp"
#include "specgate/signal.hpp"

namespace specgate {

struct WienerParams {
  int window_size = 15;
  void validate() const;
};

struct IterWienerParams {
  int frame_size = 512;
  int lpc_order = 10;
  double alpha = 0.9;
  /// A frame is treated as noise when its energy is at most this multiple of
  /// the running noise energy.
  double energy_threshold = 1.5;
  int iterations = 3;

  /// 32 ms frames at `sample_rate`, other fields at their defaults.
  static IterWienerParams for_rate(int sample_rate);
  void validate() const;
};

struct SavGolParams {
  int window_size = 11;
  int poly_order = 3;
  void validate() const;
};

/// Local-statistics Wiener filter: mu + max(0, var - nu2) / var * (y - mu), with nu2 the
/// mean of all local variances. Windows are truncated at the edges.
Signal wiener_filter(const Signal& signal, const WienerParams& params);

/// P_x / (P_x + P_n).
inline double wiener_gain(double signal_power, double noise_power) {
  const double denom = signal_power + noise_power;
  return denom > 0.0 ? signal_power / denom : 0.0;
}

/// First-order recursive noise update alpha * previous + (1 - alpha) * energy.
inline double update_noise_variance(double previous, double alpha, double frame_energy) {
  return alpha * previous + (1.0 - alpha) * frame_energy;
}

struct LpcFit {
  Eigen::VectorXd a;  // a[0] = 1, prediction polynomial A(z)
  double error = 0.0; // final prediction error power (same scale as r[0])
};

/// Levinson-Durbin recursion on autocorrelation lags r[0..order]. A zero-energy
/// input gives error 0 and a = [1, 0, ..., 0].
LpcFit levinson_durbin(const Eigen::VectorXd& autocorr, int order);

/// Autocorrelation-method LPC of one frame.
LpcFit lpc(const Eigen::Ref<const Eigen::VectorXd>& frame, int order);

/// |1 / A(e^{jw})|^2 at the n_fft / 2 + 1 non-negative FFT frequencies.
Eigen::VectorXd lpc_inverse_power(const Eigen::VectorXd& a, int n_fft);

/// Frame-wise iterative Wiener filtering driven by an all-pole speech model.
Signal iterative_wiener(const Signal& signal, const IterWienerParams& params);

/// Least-squares polynomial coefficients for a window of `window_size` samples, evaluated at
/// offset `position` from the window center (0 for the usual smoothing coefficients).
Eigen::VectorXd savgol_coefficients(int window_size, int poly_order, int position = 0);

Signal savitzky_golay(const Signal& signal, const SavGolParams& params);

/// max(0, |Y| - |N|).
inline double subtract_magnitude(double signal_mag, double noise_mag) {
  return signal_mag > noise_mag ? signal_mag - noise_mag : 0.0;
}

/// Replaces each bin's magnitude by subtract_magnitude(|Y|, noise_mag[bin]), keeping its phase.
void subtract_spectrum(Eigen::MatrixXcd& spec, const Eigen::VectorXd& noise_mag);

/// Magnitude spectral subtraction with the noisy phase; the noise estimate is the mean
/// magnitude spectrum of `noise`.
Signal spectral_subtraction(const Signal& signal, const Signal& noise, const StftParams& stft);

}  // namespace specgate
