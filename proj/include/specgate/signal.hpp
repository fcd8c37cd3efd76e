#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace specgate {

enum class ErrorKind {
  EmptyInput,
  InvalidParams,
  InvalidInput,
  ShapeMismatch,
  RateMismatch,
  InputTooShort,
  InvalidReference,
  ParseError,
  Unsupported,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Channel-major sample storage: row c holds channel c.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Multi-channel time-domain signal. Samples are nominally in [-1, 1].
struct Signal {
  SampleMatrix samples;
  int sample_rate = 0;

  Signal() = default;
  Signal(SampleMatrix s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  static Signal mono(const Eigen::Ref<const Eigen::VectorXd>& x, int rate) {
    SampleMatrix m(1, x.size());
    m.row(0) = x.transpose();
    return {std::move(m), rate};
  }

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index length() const { return samples.cols(); }
  bool empty() const { return samples.size() == 0; }
  double duration() const {
    return sample_rate > 0 ? static_cast<double>(length()) / sample_rate : 0.0;
  }

  auto channel(Eigen::Index c) const { return samples.row(c); }
  auto channel(Eigen::Index c) { return samples.row(c); }

  /// Throws when the rate is not positive, the signal is empty, or a sample is not finite.
  void validate() const;
};

inline bool operator==(const Signal& a, const Signal& b) {
  return a.sample_rate == b.sample_rate && a.samples.rows() == b.samples.rows() &&
         a.samples.cols() == b.samples.cols() && a.samples == b.samples;
}

}  // namespace specgate
