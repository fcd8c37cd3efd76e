#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "specgate/signal.hpp"

namespace specgate {

enum class Window { Hann, Hamming, Rectangular };

const char* to_string(Window w);
Window window_from_string(const std::string& name);

struct StftParams {
  int n_fft = 1024;
  int win_length = 1024;
  int hop_length = 256;
  Window window = Window::Hann;

  /// n_fft with win_length = n_fft and hop = n_fft / 4.
  static StftParams for_fft(int n_fft, Window window = Window::Hann) {
    return {n_fft, n_fft, n_fft / 4, window};
  }

  int bins() const { return n_fft / 2 + 1; }

  /// Throws InvalidParams unless 0 < hop <= win <= n_fft, n_fft is even and the
  /// window is COLA for the hop.
  void validate() const;
};

/// Periodic window of `length` samples.
Eigen::VectorXd make_window(Window kind, int length);

/// The analysis window zero-padded (centered) to n_fft samples.
Eigen::VectorXd fft_window(const StftParams& params);

/// True when the overlapped window sum is constant within `tolerance`, relative.
bool is_cola(Window kind, int win_length, int hop_length, double tolerance = 1e-10);

/// Number of STFT frames for a signal of `length` samples.
Eigen::Index frame_count(Eigen::Index length, int hop_length);

struct Spectrogram {
  std::vector<Eigen::MatrixXcd> channels;  // bins x frames each
  StftParams params;
  int sample_rate = 0;
  Eigen::Index length = 0;  // original signal length in samples

  Eigen::Index bins() const { return channels.empty() ? 0 : channels.front().rows(); }
  Eigen::Index frames() const { return channels.empty() ? 0 : channels.front().cols(); }
};

/// One-sided STFT with frames centered at t * hop (reflect padding).
Spectrogram stft(const Signal& signal, const StftParams& params);

/// Weighted overlap-add inverse; output length equals spec.length.
Signal istft(const Spectrogram& spec);

constexpr double kDbEpsilon = 1e-12;

/// 20 log10(magnitude + epsilon).
double to_db(double magnitude, double epsilon = kDbEpsilon);

/// Elementwise 20 log10(|z| + epsilon).
template <typename Derived>
Eigen::MatrixXd magnitude_db(const Eigen::MatrixBase<Derived>& values, double epsilon = kDbEpsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "epsilon must be positive");
  return (20.0 * (values.cwiseAbs().array() + epsilon).log10()).matrix();
}

struct SlidingStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std;
};

/// Centered sliding mean and population standard deviation along each row.
/// Windows are truncated at the edges.
template <typename Derived>
SlidingStats sliding_stats(const Eigen::MatrixBase<Derived>& values, int window_frames) {
  if (window_frames < 1 || window_frames % 2 == 0) {
    throw Error(ErrorKind::InvalidParams, "window_frames must be odd and >= 1");
  }
  const Eigen::Index rows = values.rows();
  const Eigen::Index cols = values.cols();
  const Eigen::Index half = window_frames / 2;
  SlidingStats out{Eigen::MatrixXd(rows, cols), Eigen::MatrixXd(rows, cols)};
  const Eigen::MatrixXd v = values;
  for (Eigen::Index t = 0; t < cols; ++t) {
    const Eigen::Index begin = std::max<Eigen::Index>(0, t - half);
    const Eigen::Index end = std::min<Eigen::Index>(cols, t + half + 1);
    const auto block = v.middleCols(begin, end - begin);
    const double n = static_cast<double>(end - begin);
    // Corrected two-pass mean: exact for constant rows, so their spread is exactly zero.
    Eigen::VectorXd mean = block.rowwise().sum() / n;
    mean += (block.colwise() - mean).rowwise().sum() / n;
    out.mean.col(t) = mean;
    out.std.col(t) = ((block.colwise() - mean).array().square().rowwise().sum() / n).sqrt();
  }
  return out;
}

/// Same-size 2-D correlation with zero-padded borders. Kernel dimensions must be odd.
template <typename GridDerived, typename KernelDerived>
Eigen::MatrixXd conv2d_same(const Eigen::MatrixBase<GridDerived>& grid,
                            const Eigen::MatrixBase<KernelDerived>& kernel) {
  const Eigen::Index kr = kernel.rows();
  const Eigen::Index kc = kernel.cols();
  if (kr % 2 == 0 || kc % 2 == 0 || kr < 1 || kc < 1) {
    throw Error(ErrorKind::InvalidParams, "kernel dimensions must be odd");
  }
  const Eigen::Index rows = grid.rows();
  const Eigen::Index cols = grid.cols();
  const Eigen::Index hr = kr / 2;
  const Eigen::Index hc = kc / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  const Eigen::MatrixXd g = grid;
  for (Eigen::Index u = 0; u < kr; ++u) {
    const Eigen::Index dr = u - hr;
    const Eigen::Index r0 = std::max<Eigen::Index>(0, -dr);
    const Eigen::Index r1 = std::min(rows, rows - dr);
    if (r1 <= r0) continue;
    for (Eigen::Index v = 0; v < kc; ++v) {
      const double w = kernel(u, v);
      if (w == 0.0) continue;
      const Eigen::Index dc = v - hc;
      const Eigen::Index c0 = std::max<Eigen::Index>(0, -dc);
      const Eigen::Index c1 = std::min(cols, cols - dc);
      if (c1 <= c0) continue;
      out.block(r0, c0, r1 - r0, c1 - c0) += w * g.block(r0 + dr, c0 + dc, r1 - r0, c1 - c0);
    }
  }
  return out;
}

/// conv2d_same with the outer-product kernel column_kernel * row_kernel^T,
/// done as two 1-D passes.
Eigen::MatrixXd conv2d_same_separable(const Eigen::MatrixXd& grid,
                                      const Eigen::VectorXd& column_kernel,
                                      const Eigen::VectorXd& row_kernel);

}  // namespace specgate
