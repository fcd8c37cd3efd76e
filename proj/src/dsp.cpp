#include "specgate/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace specgate {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RateMismatch: return "RateMismatch";
    case ErrorKind::InputTooShort: return "InputTooShort";
    case ErrorKind::InvalidReference: return "InvalidReference";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

void Signal::validate() const {
  if (sample_rate <= 0) throw Error(ErrorKind::InvalidInput, "sample_rate must be positive");
  if (empty()) throw Error(ErrorKind::EmptyInput, "signal has no samples");
  if (!samples.allFinite()) throw Error(ErrorKind::InvalidInput, "signal contains NaN or Inf");
}

const char* to_string(Window w) {
  switch (w) {
    case Window::Hann: return "hann";
    case Window::Hamming: return "hamming";
    case Window::Rectangular: return "rect";
  }
  return "unknown";
}

Window window_from_string(const std::string& name) {
  if (name == "hann") return Window::Hann;
  if (name == "hamming") return Window::Hamming;
  if (name == "rect" || name == "rectangular" || name == "boxcar") return Window::Rectangular;
  throw Error(ErrorKind::InvalidParams, "unknown window: " + name);
}

Eigen::VectorXd make_window(Window kind, int length) {
  Eigen::VectorXd w(length);
  const double n = static_cast<double>(length);
  for (int i = 0; i < length; ++i) {
    const double phase = 2.0 * std::numbers::pi * i / n;
    switch (kind) {
      case Window::Hann: w[i] = 0.5 - 0.5 * std::cos(phase); break;
      case Window::Hamming: w[i] = 0.54 - 0.46 * std::cos(phase); break;
      case Window::Rectangular: w[i] = 1.0; break;
    }
  }
  return w;
}

Eigen::VectorXd fft_window(const StftParams& params) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(params.n_fft);
  const int offset = (params.n_fft - params.win_length) / 2;
  w.segment(offset, params.win_length) = make_window(params.window, params.win_length);
  return w;
}

bool is_cola(Window kind, int win_length, int hop_length, double tolerance) {
  if (hop_length < 1 || win_length < 1 || hop_length > win_length) return false;
  const Eigen::VectorXd w = make_window(kind, win_length);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(hop_length);
  for (int i = 0; i < win_length; ++i) sum[i % hop_length] += w[i];
  const double hi = sum.maxCoeff();
  const double lo = sum.minCoeff();
  return hi > 0.0 && (hi - lo) <= tolerance * hi;
}

void StftParams::validate() const {
  if (n_fft < 2 || n_fft % 2 != 0) {
    throw Error(ErrorKind::InvalidParams, "n_fft must be even and >= 2");
  }
  if (!(0 < hop_length && hop_length <= win_length && win_length <= n_fft)) {
    throw Error(ErrorKind::InvalidParams, "require 0 < hop_length <= win_length <= n_fft");
  }
  if (!is_cola(window, win_length, hop_length)) {
    throw Error(ErrorKind::InvalidParams, std::string("window '") + to_string(window) +
                                              "' is not COLA for win_length " +
                                              std::to_string(win_length) + ", hop " +
                                              std::to_string(hop_length));
  }
}

Eigen::Index frame_count(Eigen::Index length, int hop_length) {
  if (length < 1) return 0;
  return 1 + (length - 1 + hop_length - 1) / hop_length;
}

namespace {

// Reflect index p about the signal edges without repeating the edge sample.
Eigen::Index reflect_index(Eigen::Index p, Eigen::Index length) {
  if (length == 1) return 0;
  const Eigen::Index period = 2 * (length - 1);
  Eigen::Index m = p % period;
  if (m < 0) m += period;
  return m < length ? m : period - m;
}

}  // namespace

Spectrogram stft(const Signal& signal, const StftParams& params) {
  if (signal.empty()) throw Error(ErrorKind::EmptyInput, "stft of an empty signal");
  params.validate();

  const Eigen::Index length = signal.length();
  const Eigen::Index frames = frame_count(length, params.hop_length);
  const int n_fft = params.n_fft;
  const int pad = n_fft / 2;
  const Eigen::VectorXd window = fft_window(params);

  Spectrogram spec;
  spec.params = params;
  spec.sample_rate = signal.sample_rate;
  spec.length = length;

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> bins;

  for (Eigen::Index c = 0; c < signal.channels(); ++c) {
    const auto x = signal.channel(c);
    Eigen::MatrixXcd out(params.bins(), frames);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index start = t * params.hop_length - pad;
      for (int i = 0; i < n_fft; ++i) {
        const Eigen::Index p = start + i;
        const double v = (p >= 0 && p < length) ? x[p] : x[reflect_index(p, length)];
        frame[i] = v * window[i];
      }
      fft.fwd(bins, frame);
      for (Eigen::Index k = 0; k < out.rows(); ++k) out(k, t) = bins[k];
    }
    spec.channels.push_back(std::move(out));
  }
  return spec;
}

Signal istft(const Spectrogram& spec) {
  const StftParams& params = spec.params;
  params.validate();
  if (spec.channels.empty()) throw Error(ErrorKind::EmptyInput, "istft of an empty spectrogram");
  if (spec.bins() != params.bins()) {
    throw Error(ErrorKind::ShapeMismatch, "spectrogram bin count does not match n_fft");
  }

  const int n_fft = params.n_fft;
  const int hop = params.hop_length;
  const int pad = n_fft / 2;
  const Eigen::Index frames = spec.frames();
  const Eigen::Index buffer_len = (frames - 1) * hop + n_fft;
  const Eigen::VectorXd window = fft_window(params);

  Eigen::VectorXd envelope = Eigen::VectorXd::Zero(buffer_len);
  for (Eigen::Index t = 0; t < frames; ++t) {
    envelope.segment(t * hop, n_fft) += window.cwiseAbs2();
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> bins(params.bins());
  std::vector<double> frame;

  SampleMatrix out(static_cast<Eigen::Index>(spec.channels.size()), spec.length);
  Eigen::VectorXd buffer(buffer_len);
  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    const Eigen::MatrixXcd& s = spec.channels[c];
    buffer.setZero();
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index k = 0; k < s.rows(); ++k) bins[k] = s(k, t);
      fft.inv(frame, bins, n_fft);
      for (int i = 0; i < n_fft; ++i) buffer[t * hop + i] += frame[i] * window[i];
    }
    for (Eigen::Index i = 0; i < spec.length; ++i) {
      const Eigen::Index p = i + pad;
      const double e = p < buffer_len ? envelope[p] : 0.0;
      out(static_cast<Eigen::Index>(c), i) = e > 1e-11 ? buffer[p] / e : 0.0;
    }
  }
  return {std::move(out), spec.sample_rate};
}

double to_db(double magnitude, double epsilon) {
  if (magnitude < 0.0 || std::isnan(magnitude)) {
    throw Error(ErrorKind::InvalidInput, "magnitude must be non-negative");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "epsilon must be positive");
  return 20.0 * std::log10(magnitude + epsilon);
}

Eigen::MatrixXd conv2d_same_separable(const Eigen::MatrixXd& grid,
                                      const Eigen::VectorXd& column_kernel,
                                      const Eigen::VectorXd& row_kernel) {
  const Eigen::MatrixXd along_rows = conv2d_same(grid, column_kernel);
  return conv2d_same(along_rows, row_kernel.transpose());
}

}  // namespace specgate
