#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "specgate/dsp.hpp"

using namespace specgate;
using testutil::randn;
using testutil::randn_matrix;

namespace {

// Plain O(N^2) DFT of one windowed frame starting at `start` (no padding needed).
Eigen::VectorXcd direct_frame_dft(const Eigen::VectorXd& x, Eigen::Index start, const Eigen::VectorXd& w) {
  const Eigen::Index n = w.size();
  Eigen::VectorXcd out(n / 2 + 1);
  for (Eigen::Index k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += x[start + i] * w[i] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * i) / double(n));
    }
    out[k] = acc;
  }
  return out;
}

SlidingStats naive_sliding(const Eigen::MatrixXd& v, int window) {
  const int half = window / 2;
  SlidingStats s{Eigen::MatrixXd(v.rows(), v.cols()), Eigen::MatrixXd(v.rows(), v.cols())};
  for (Eigen::Index f = 0; f < v.rows(); ++f) {
    for (Eigen::Index t = 0; t < v.cols(); ++t) {
      double sum = 0.0;
      int n = 0;
      for (Eigen::Index u = t - half; u <= t + half; ++u) {
        if (u < 0 || u >= v.cols()) continue;
        sum += v(f, u);
        ++n;
      }
      const double mean = sum / n;
      double ss = 0.0;
      for (Eigen::Index u = t - half; u <= t + half; ++u) {
        if (u < 0 || u >= v.cols()) continue;
        ss += (v(f, u) - mean) * (v(f, u) - mean);
      }
      s.mean(f, t) = mean;
      s.std(f, t) = std::sqrt(ss / n);
    }
  }
  return s;
}

Eigen::MatrixXd naive_conv(const Eigen::MatrixXd& g, const Eigen::MatrixXd& k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  const Eigen::Index hr = k.rows() / 2;
  const Eigen::Index hc = k.cols() / 2;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index u = 0; u < k.rows(); ++u)
        for (Eigen::Index v = 0; v < k.cols(); ++v) {
          const Eigen::Index r = i + u - hr;
          const Eigen::Index c = j + v - hc;
          if (r >= 0 && r < g.rows() && c >= 0 && c < g.cols()) out(i, j) += k(u, v) * g(r, c);
        }
  return out;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("to_db reference values") {
  CHECK(std::abs(to_db(1.0)) < 1e-9);
  CHECK(to_db(10.0) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(to_db(0.0) == doctest::Approx(-240.0).epsilon(1e-12));
  CHECK_THROWS_AS(to_db(-1.0), Error);
  try {
    to_db(-0.5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
}

TEST_CASE("to_db is increasing") {
  Eigen::VectorXd m = randn(200, 3).cwiseAbs();
  std::sort(m.data(), m.data() + m.size());
  for (Eigen::Index i = 1; i < m.size(); ++i) CHECK(to_db(m[i]) >= to_db(m[i - 1]));
}

TEST_CASE("windows and COLA") {
  const Eigen::VectorXd w = make_window(Window::Hann, 8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  CHECK(is_cola(Window::Hann, 1024, 256));
  CHECK(is_cola(Window::Hann, 1024, 512));
  CHECK_FALSE(is_cola(Window::Hann, 1024, 768));
  CHECK(is_cola(Window::Rectangular, 64, 16));
  CHECK(is_cola(Window::Hamming, 512, 256));

  StftParams bad{1024, 1024, 768, Window::Hann};
  CHECK_THROWS_AS(bad.validate(), Error);
  StftParams odd{1023, 1023, 255, Window::Hann};
  CHECK_THROWS_AS(odd.validate(), Error);
  StftParams wide{512, 1024, 256, Window::Hann};
  CHECK_THROWS_AS(wide.validate(), Error);
}

TEST_CASE("stft of silence is zero") {
  const Signal x = Signal::mono(Eigen::VectorXd::Zero(4096), 16000);
  const Spectrogram s = stft(x, StftParams{});
  CHECK(s.bins() == 513);
  CHECK(s.channels[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stft rejects empty input and bad params") {
  Signal empty(SampleMatrix(1, 0), 16000);
  CHECK_THROWS_AS(stft(empty, StftParams{}), Error);
  try {
    stft(empty, StftParams{});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
  const Signal x = testutil::noise_signal(1000, 8000, 1);
  try {
    stft(x, StftParams{1024, 1024, 0, Window::Hann});
    FAIL("expected InvalidParams");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidParams);
  }
}

TEST_CASE("impulse at a frame center has a flat spectrum") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(256);
  x[128] = 1.0;
  const StftParams p{64, 64, 16, Window::Rectangular};
  const Spectrogram s = stft(Signal::mono(x, 8000), p);
  const Eigen::VectorXd mags = s.channels[0].col(128 / 16).cwiseAbs();
  for (Eigen::Index k = 0; k < mags.size(); ++k) CHECK(mags[k] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bin-centred sine peaks at its bin and frames match a direct DFT") {
  const int sr = 16000;
  const int n_fft = 1024;
  const int k = 37;
  const Signal x = gen_tone(double(k) * sr / n_fft, 1.0, sr);
  const StftParams p{};
  const Spectrogram s = stft(x, p);
  Eigen::Index argmax = 0;
  s.channels[0].cwiseAbs().rowwise().mean().maxCoeff(&argmax);
  CHECK(argmax == k);

  const Eigen::VectorXd xv = x.channel(0).transpose();
  const Eigen::VectorXd w = fft_window(p);
  for (const Eigen::Index t : {4, 10, 30}) {
    const Eigen::VectorXcd ref = direct_frame_dft(xv, t * p.hop_length - n_fft / 2, w);
    CHECK((s.channels[0].col(t) - ref).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("frame count covers the signal") {
  CHECK(frame_count(4096, 256) == 17);
  CHECK(frame_count(1, 256) == 1);
  CHECK(frame_count(257, 256) == 2);
  const Spectrogram s = stft(testutil::noise_signal(1000, 8000, 2), StftParams::for_fft(256));
  CHECK(s.frames() == frame_count(1000, 64));
  CHECK(s.bins() == 129);
}

TEST_CASE("round trip: one second of white noise") {
  const Signal x = testutil::noise_signal(16000, 16000, 3, 0.3);
  const Signal y = istft(stft(x, StftParams{}));
  CHECK(y.length() == x.length());
  CHECK(testutil::max_abs_diff(x, y) <= 1e-6);
}

TEST_CASE("round trip: 440 Hz tone at 22.05 kHz") {
  const Signal x = gen_tone(440.0, 1.0, 22050, 0.5);
  const Signal y = istft(stft(x, StftParams{}));
  CHECK((x.samples - y.samples).norm() / x.samples.norm() <= 1e-6);
}

TEST_CASE("round trip over assorted COLA parameter sets") {
  const StftParams sets[] = {
      {512, 512, 128, Window::Hann},  {256, 256, 128, Window::Hann},   {2048, 2048, 512, Window::Hann},
      {1024, 512, 128, Window::Hann}, {512, 512, 256, Window::Hamming}, {64, 64, 16, Window::Rectangular},
      {128, 100, 25, Window::Hann},   {32, 32, 32, Window::Rectangular},
  };
  std::uint64_t seed = 10;
  for (const auto& p : sets) {
    for (const Eigen::Index len : {1, 7, 100, 3001}) {
      const Signal x = testutil::noise_signal(len, 8000, seed++, 2.0);
      const Signal y = istft(stft(x, p));
      CAPTURE(p.n_fft);
      CAPTURE(len);
      CHECK(testutil::max_abs_diff(x, y) <= 1e-6 * std::max(1.0, x.samples.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("istft of zeros is zeros; non-COLA spectrogram is rejected") {
  Spectrogram s = stft(Signal::mono(Eigen::VectorXd::Zero(2000), 8000), StftParams::for_fft(256));
  CHECK(istft(s).samples.cwiseAbs().maxCoeff() == 0.0);
  s.params.hop_length = 200;
  CHECK_THROWS_AS(istft(s), Error);
}

TEST_CASE("stft is linear in amplitude") {
  const Signal x = testutil::noise_signal(5000, 16000, 4);
  const Signal x2(x.samples * 2.0, x.sample_rate);
  const Eigen::MatrixXd a = stft(x, StftParams{}).channels[0].cwiseAbs();
  const Eigen::MatrixXd b = stft(x2, StftParams{}).channels[0].cwiseAbs();
  CHECK(((b - 2.0 * a).cwiseAbs().array() <= 1e-12 * b.array().max(1e-300)).all());
}

TEST_CASE("multichannel stft treats channels independently") {
  SampleMatrix m(2, 3000);
  m.row(0) = randn(3000, 5).transpose();
  m.row(1) = randn(3000, 6).transpose();
  const Signal x(m, 16000);
  const Spectrogram s = stft(x, StftParams::for_fft(512));
  const Spectrogram s1 = stft(Signal::mono(m.row(1).transpose(), 16000), StftParams::for_fft(512));
  CHECK(s.channels.size() == 2);
  CHECK(s.channels[1] == s1.channels[0]);
  CHECK(testutil::max_abs_diff(istft(s), x) <= 1e-6);
}

TEST_CASE("sliding stats: constant row") {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(3, 20, 3.0);
  for (const int w : {1, 3, 7, 41}) {
    const SlidingStats s = sliding_stats(v, w);
    CHECK((s.mean.array() == 3.0).all());
    CHECK((s.std.array() == 0.0).all());
  }
}

TEST_CASE("sliding stats: impulse row") {
  Eigen::MatrixXd v(1, 5);
  v << 0, 0, 10, 0, 0;
  const SlidingStats s = sliding_stats(v, 3);
  CHECK(s.mean(0, 0) == 0.0);
  CHECK(s.mean(0, 4) == 0.0);
  for (int t = 1; t <= 3; ++t) CHECK(s.mean(0, t) == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("sliding stats match the brute-force recomputation") {
  const Eigen::MatrixXd v = randn_matrix(6, 50, 7) * 10.0;
  for (const int w : {1, 5, 9, 99}) {
    const SlidingStats s = sliding_stats(v, w);
    const SlidingStats ref = naive_sliding(v, w);
    CHECK((s.mean - ref.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.std - ref.std).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sliding stats reject even or empty windows") {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 5);
  CHECK_THROWS_AS(sliding_stats(v, 4), Error);
  CHECK_THROWS_AS(sliding_stats(v, 0), Error);
}

TEST_CASE("conv2d identity and impulse") {
  const Eigen::MatrixXd g = randn_matrix(5, 7, 8);
  CHECK(conv2d_same(g, Eigen::MatrixXd::Ones(1, 1)) == g);

  Eigen::MatrixXd impulse = Eigen::MatrixXd::Zero(9, 9);
  impulse(4, 4) = 1.0;
  const Eigen::MatrixXd k = randn_matrix(3, 5, 9);
  const Eigen::MatrixXd out = conv2d_same(impulse, k);
  // Correlation stamps the flipped kernel; the smoothing kernels are symmetric.
  const Eigen::MatrixXd stamped = out.block(3, 2, 3, 5);
  CHECK((stamped - k.reverse()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.sum() == doctest::Approx(k.sum()));

  Eigen::MatrixXd sym(3, 3);
  sym << 1, 2, 1, 2, 4, 2, 1, 2, 1;
  CHECK(conv2d_same(impulse, sym).block(3, 3, 3, 3) == sym);
}

TEST_CASE("conv2d matches the quadruple loop") {
  const Eigen::MatrixXd g = randn_matrix(8, 8, 10);
  const Eigen::MatrixXd k = randn_matrix(3, 5, 11);
  CHECK((conv2d_same(g, k) - naive_conv(g, k)).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::VectorXd a = randn(5, 12);
  const Eigen::VectorXd b = randn(3, 13);
  CHECK((conv2d_same_separable(g, a, b) - naive_conv(g, a * b.transpose())).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conv2d rejects even kernels") {
  CHECK_THROWS_AS(conv2d_same(Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Ones(2, 3)), Error);
  CHECK_THROWS_AS(conv2d_same(Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Ones(3, 4)), Error);
}

TEST_CASE("normalized kernel preserves the sum of interior support") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(20, 20);
  g.block(6, 6, 8, 8) = randn_matrix(8, 8, 14).cwiseAbs();
  Eigen::MatrixXd k = randn_matrix(5, 5, 15).cwiseAbs();
  k /= k.sum();
  CHECK(conv2d_same(g, k).sum() == doctest::Approx(g.sum()).epsilon(1e-9));
}

TEST_CASE("signal validation") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  x[3] = std::nan("");
  CHECK_THROWS_AS(Signal::mono(x, 8000).validate(), Error);
  CHECK_THROWS_AS(Signal::mono(Eigen::VectorXd::Zero(10), 0).validate(), Error);
  CHECK_NOTHROW(Signal::mono(Eigen::VectorXd::Zero(10), 8000).validate());
}

}  // TEST_SUITE
