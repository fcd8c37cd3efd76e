#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "specgate/datagen.hpp"
#include "specgate/signal.hpp"

namespace testutil {

inline Eigen::VectorXd randn(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  specgate::Rng rng(seed);
  return specgate::white_noise(n, rng) * scale;
}

inline Eigen::MatrixXd randn_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  specgate::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline specgate::Signal noise_signal(Eigen::Index n, int rate, std::uint64_t seed, double scale = 1.0) {
  return specgate::Signal::mono(randn(n, seed, scale), rate);
}

inline double rms(const specgate::Signal& s) {
  return std::sqrt(s.samples.squaredNorm() / static_cast<double>(s.samples.size()));
}

inline double max_abs_diff(const specgate::Signal& a, const specgate::Signal& b) {
  return (a.samples - b.samples).cwiseAbs().maxCoeff();
}

}  // namespace testutil
