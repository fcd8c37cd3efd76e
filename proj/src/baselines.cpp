#include "specgate/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace specgate {

void WienerParams::validate() const {
  if (window_size < 3 || window_size % 2 == 0) {
    throw Error(ErrorKind::InvalidParams, "wiener window_size must be odd and >= 3");
  }
}

IterWienerParams IterWienerParams::for_rate(int sample_rate) {
  IterWienerParams p;
  p.frame_size = std::max(4, static_cast<int>(std::lround(0.032 * sample_rate)));
  if (p.frame_size % 2 != 0) ++p.frame_size;
  return p;
}

void IterWienerParams::validate() const {
  if (frame_size < 4) throw Error(ErrorKind::InvalidParams, "frame_size must be >= 4");
  if (lpc_order < 1 || lpc_order >= frame_size) {
    throw Error(ErrorKind::InvalidParams, "lpc_order must satisfy 1 <= order < frame_size");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidParams, "alpha must lie in (0, 1)");
  if (!(energy_threshold > 0.0)) throw Error(ErrorKind::InvalidParams, "energy_threshold must be positive");
  if (iterations < 1) throw Error(ErrorKind::InvalidParams, "iterations must be >= 1");
}

void SavGolParams::validate() const {
  if (window_size < 1 || window_size % 2 == 0) {
    throw Error(ErrorKind::InvalidParams, "savgol window_size must be odd");
  }
  if (poly_order < 0 || poly_order >= window_size) {
    throw Error(ErrorKind::InvalidParams, "poly_order must be < window_size");
  }
}

Signal wiener_filter(const Signal& signal, const WienerParams& params) {
  signal.validate();
  params.validate();
  const Eigen::Index n = signal.length();
  if (n < params.window_size) throw Error(ErrorKind::InputTooShort, "signal shorter than wiener window");

  const Eigen::Index half = params.window_size / 2;
  Signal out = signal;
  Eigen::VectorXd mean(n);
  Eigen::VectorXd var(n);
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    const Eigen::VectorXd y = signal.channel(c).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index b = std::max<Eigen::Index>(0, i - half);
      const Eigen::Index e = std::min(n, i + half + 1);
      const auto seg = y.segment(b, e - b);
      const double count = static_cast<double>(e - b);
      double mu = seg.sum() / count;
      mu += (seg.array() - mu).sum() / count;
      mean[i] = mu;
      var[i] = (seg.array() - mu).square().sum() / count;
    }
    const double noise = var.mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (var[i] <= 0.0 || var[i] < noise) {
        out.samples(c, i) = mean[i];
      } else {
        out.samples(c, i) = mean[i] + (var[i] - noise) / var[i] * (y[i] - mean[i]);
      }
    }
  }
  return out;
}

LpcFit levinson_durbin(const Eigen::VectorXd& r, int order) {
  LpcFit fit;
  fit.a = Eigen::VectorXd::Zero(order + 1);
  fit.a[0] = 1.0;
  double err = r[0];
  if (!(err > 0.0)) {
    fit.error = 0.0;
    return fit;
  }
  Eigen::VectorXd prev = fit.a;
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += prev[j] * r[i - j];
    const double k = -acc / err;
    fit.a[i] = k;
    for (int j = 1; j < i; ++j) fit.a[j] = prev[j] + k * prev[i - j];
    err *= (1.0 - k * k);
    if (!(err > 0.0)) {
      // Perfectly predictable input; keep the model found so far.
      err = 0.0;
      break;
    }
    prev = fit.a;
  }
  fit.error = err;
  return fit;
}

LpcFit lpc(const Eigen::Ref<const Eigen::VectorXd>& frame, int order) {
  const Eigen::Index n = frame.size();
  Eigen::VectorXd r(order + 1);
  for (int k = 0; k <= order; ++k) {
    r[k] = k < n ? frame.head(n - k).dot(frame.tail(n - k)) : 0.0;
  }
  return levinson_durbin(r, order);
}

Eigen::VectorXd lpc_inverse_power(const Eigen::VectorXd& a, int n_fft) {
  const int bins = n_fft / 2 + 1;
  Eigen::VectorXd out(bins);
  for (int k = 0; k < bins; ++k) {
    const double w = 2.0 * std::numbers::pi * k / n_fft;
    std::complex<double> acc = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      acc += a[j] * std::polar(1.0, -w * static_cast<double>(j));
    }
    out[k] = 1.0 / std::max(std::norm(acc), 1e-300);
  }
  return out;
}

Signal iterative_wiener(const Signal& signal, const IterWienerParams& params) {
  signal.validate();
  params.validate();
  const Eigen::Index length = signal.length();
  if (length < params.frame_size) {
    throw Error(ErrorKind::InputTooShort, "signal shorter than iterative wiener frame");
  }

  const int frame = params.frame_size;
  const int hop = frame / 2;
  int n_fft = 1;
  while (n_fft < frame) n_fft <<= 1;
  const Eigen::VectorXd window = make_window(Window::Hann, frame);

  const Eigen::Index padded_len = length + 2 * hop;
  const Eigen::Index frames = 1 + (std::max<Eigen::Index>(0, padded_len - frame) + hop - 1) / hop;
  const Eigen::Index buffer_len = (frames - 1) * hop + frame;

  Eigen::VectorXd envelope = Eigen::VectorXd::Zero(buffer_len);
  for (Eigen::Index t = 0; t < frames; ++t) envelope.segment(t * hop, frame) += window;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> time_buf(n_fft);
  std::vector<std::complex<double>> spec;
  std::vector<std::complex<double>> filtered(n_fft / 2 + 1);
  std::vector<double> back;

  Signal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    Eigen::VectorXd padded = Eigen::VectorXd::Zero(buffer_len);
    padded.segment(hop, length) = signal.channel(c).transpose();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(buffer_len);

    // Running noise energy (mean power per windowed sample), seeded by the first full frame.
    double noise_energy =
        (signal.channel(c).head(frame).transpose().array() * window.array()).square().mean();

    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::VectorXd seg = padded.segment(t * hop, frame).cwiseProduct(window);
      const double energy = seg.squaredNorm() / frame;

      const bool is_noise = energy <= params.energy_threshold * noise_energy;
      if (is_noise) noise_energy = update_noise_variance(noise_energy, params.alpha, energy);
      const int passes = is_noise ? 1 : params.iterations;

      std::fill(time_buf.begin(), time_buf.end(), 0.0);
      for (int i = 0; i < frame; ++i) time_buf[i] = seg[i];
      fft.fwd(spec, time_buf);

      // Flat noise spectrum matching the periodogram scale of white noise.
      const double noise_psd = noise_energy * frame;
      Eigen::VectorXd estimate = seg;
      Eigen::VectorXd gain = Eigen::VectorXd::Zero(n_fft / 2 + 1);
      for (int pass = 0; pass < passes; ++pass) {
        const LpcFit fit = lpc(estimate, params.lpc_order);
        if (!(fit.error > 0.0) && estimate.squaredNorm() == 0.0) {
          gain.setZero();
          break;
        }
        const Eigen::VectorXd shape = lpc_inverse_power(fit.a, n_fft);
        const double est_energy = estimate.squaredNorm() / frame;
        const double speech_energy =
            pass == 0 ? std::max(est_energy - noise_energy, 0.0) : est_energy;
        const Eigen::VectorXd speech_psd = shape * (speech_energy * frame / shape.mean());
        for (Eigen::Index k = 0; k < gain.size(); ++k) {
          gain[k] = wiener_gain(speech_psd[k], noise_psd);
        }
        for (Eigen::Index k = 0; k < gain.size(); ++k) filtered[k] = spec[k] * gain[k];
        fft.inv(back, filtered, n_fft);
        for (int i = 0; i < frame; ++i) estimate[i] = back[i];
      }
      if (gain.isZero(0.0)) estimate.setZero();
      acc.segment(t * hop, frame) += estimate;
    }

    for (Eigen::Index i = 0; i < length; ++i) {
      const double e = envelope[i + hop];
      out.samples(c, i) = e > 1e-12 ? acc[i + hop] / e : 0.0;
    }
  }
  return out;
}

Eigen::VectorXd savgol_coefficients(int window_size, int poly_order, int position) {
  SavGolParams{window_size, poly_order}.validate();
  const int half = window_size / 2;
  Eigen::MatrixXd design(window_size, poly_order + 1);
  for (int i = 0; i < window_size; ++i) {
    double p = 1.0;
    for (int j = 0; j <= poly_order; ++j) {
      design(i, j) = p;
      p *= static_cast<double>(i - half);
    }
  }
  Eigen::VectorXd at(poly_order + 1);
  double p = 1.0;
  for (int j = 0; j <= poly_order; ++j) {
    at[j] = p;
    p *= static_cast<double>(position);
  }
  const Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
  return pinv.transpose() * at;
}

Signal savitzky_golay(const Signal& signal, const SavGolParams& params) {
  signal.validate();
  params.validate();
  const Eigen::Index n = signal.length();
  const int w = params.window_size;
  if (n < w) throw Error(ErrorKind::InputTooShort, "signal shorter than savgol window");
  const int half = w / 2;

  const Eigen::VectorXd center = savgol_coefficients(w, params.poly_order, 0);
  std::vector<Eigen::VectorXd> edge(half);
  for (int i = 0; i < half; ++i) edge[i] = savgol_coefficients(w, params.poly_order, i - half);

  Signal out = signal;
  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    const Eigen::VectorXd y = signal.channel(c).transpose();
    for (Eigen::Index i = half; i < n - half; ++i) {
      out.samples(c, i) = center.dot(y.segment(i - half, w));
    }
    const auto head = y.head(w);
    const Eigen::VectorXd tail_rev = y.tail(w).reverse();
    for (int i = 0; i < half; ++i) {
      out.samples(c, i) = edge[i].dot(head);
      // The fit is symmetric under time reversal.
      out.samples(c, n - 1 - i) = edge[i].dot(tail_rev);
    }
  }
  return out;
}

void subtract_spectrum(Eigen::MatrixXcd& spec, const Eigen::VectorXd& noise_mag) {
  if (noise_mag.size() != spec.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "noise spectrum and spectrogram bin counts differ");
  }
  for (Eigen::Index t = 0; t < spec.cols(); ++t) {
    for (Eigen::Index k = 0; k < spec.rows(); ++k) {
      const double mag = std::abs(spec(k, t));
      spec(k, t) = mag > 0.0 ? spec(k, t) * (subtract_magnitude(mag, noise_mag[k]) / mag) : std::complex<double>(0.0);
    }
  }
}

Signal spectral_subtraction(const Signal& signal, const Signal& noise, const StftParams& stft_params) {
  signal.validate();
  noise.validate();
  if (signal.sample_rate != noise.sample_rate) {
    throw Error(ErrorKind::RateMismatch, "noise clip sample rate differs from signal");
  }
  if (noise.channels() != 1 && noise.channels() != signal.channels()) {
    throw Error(ErrorKind::ShapeMismatch, "noise clip must have 1 or the signal's channel count");
  }
  Spectrogram spec = stft(signal, stft_params);
  const Spectrogram noise_spec = stft(noise, stft_params);
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    const std::size_t nc = noise_spec.channels.size() == 1 ? 0 : c;
    subtract_spectrum(spec.channels[c], noise_spec.channels[nc].cwiseAbs().rowwise().mean());
  }
  return istft(spec);
}

}  // namespace specgate
