#include "specgate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace specgate {

namespace {

void require_same_shape(const Signal& a, const Signal& b) {
  if (a.sample_rate != b.sample_rate) throw Error(ErrorKind::RateMismatch, "sample rates differ");
  if (a.channels() != b.channels() || a.length() != b.length()) {
    throw Error(ErrorKind::ShapeMismatch, "signals differ in length or channel count");
  }
}

}  // namespace

double sdr(const Signal& clean, const Signal& estimate) {
  require_same_shape(clean, estimate);
  const double signal_power = clean.samples.squaredNorm();
  if (signal_power == 0.0) throw Error(ErrorKind::InvalidReference, "clean signal is all zero");
  const double residual = (clean.samples - estimate.samples).squaredNorm();
  if (residual == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_power / residual);
}

double segsnr(const Signal& clean, const Signal& estimate, const SegSnrParams& params) {
  require_same_shape(clean, estimate);
  const auto seg = static_cast<Eigen::Index>(std::lround(params.segment_ms * clean.sample_rate / 1000.0));
  if (seg < 1) throw Error(ErrorKind::InvalidParams, "segment shorter than one sample");
  const Eigen::Index segments = clean.length() / seg;
  if (segments < 1) throw Error(ErrorKind::InputTooShort, "signal shorter than one segment");

  double total = 0.0;
  for (Eigen::Index c = 0; c < clean.channels(); ++c) {
    for (Eigen::Index s = 0; s < segments; ++s) {
      const auto x = clean.samples.row(c).segment(s * seg, seg);
      const auto y = estimate.samples.row(c).segment(s * seg, seg);
      const double pc = x.squaredNorm();
      const double pr = (x - y).squaredNorm();
      double snr;
      if (pr == 0.0) {
        snr = params.clamp_high_db;
      } else if (pc == 0.0) {
        snr = params.clamp_low_db;
      } else {
        snr = std::clamp(10.0 * std::log10(pc / pr), params.clamp_low_db, params.clamp_high_db);
      }
      total += snr;
    }
  }
  return total / static_cast<double>(segments * clean.channels());
}

double mean_abs_db_error(const Signal& clean, const Signal& estimate, const StftParams& params,
                         double dynamic_range_db) {
  require_same_shape(clean, estimate);
  const Spectrogram a = stft(clean, params);
  const Spectrogram b = stft(estimate, params);
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> da, db;
  for (std::size_t c = 0; c < a.channels.size(); ++c) {
    da.push_back(magnitude_db(a.channels[c]));
    db.push_back(magnitude_db(b.channels[c]));
    peak = std::max(peak, da.back().maxCoeff());
  }
  const double floor = peak - dynamic_range_db;
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t c = 0; c < da.size(); ++c) {
    sum += (da[c].cwiseMax(floor) - db[c].cwiseMax(floor)).cwiseAbs().sum();
    count += static_cast<double>(da[c].size());
  }
  return sum / count;
}

void StaLtaParams::validate() const {
  if (!(sta_s > 0.0) || !(lta_s > sta_s)) {
    throw Error(ErrorKind::InvalidParams, "require lta_s > sta_s > 0");
  }
  if (!(trigger_ratio > 0.0)) throw Error(ErrorKind::InvalidParams, "trigger_ratio must be positive");
}

Eigen::VectorXd sta_lta_ratio(const Signal& signal, const StaLtaParams& params) {
  signal.validate();
  params.validate();
  const Eigen::Index n = signal.length();
  const auto ns = std::max<Eigen::Index>(1, std::lround(params.sta_s * signal.sample_rate));
  const auto nl = std::max<Eigen::Index>(ns + 1, std::lround(params.lta_s * signal.sample_rate));
  if (nl > n) throw Error(ErrorKind::InputTooShort, "LTA window longer than signal");

  std::vector<long double> prefix(n + 1, 0.0L);
  const double channels = static_cast<double>(signal.channels());
  for (Eigen::Index i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + static_cast<long double>(signal.samples.col(i).squaredNorm() / channels);
  }
  Eigen::VectorXd ratio = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = nl - 1; i < n; ++i) {
    const long double sta = (prefix[i + 1] - prefix[i + 1 - ns]) / static_cast<long double>(ns);
    const long double lta = (prefix[i + 1] - prefix[i + 1 - nl]) / static_cast<long double>(nl);
    ratio[i] = lta > 0.0L ? static_cast<double>(sta / lta) : 0.0;
  }
  return ratio;
}

std::optional<double> sta_lta_onset(const Signal& signal, const StaLtaParams& params) {
  const Eigen::VectorXd ratio = sta_lta_ratio(signal, params);
  for (Eigen::Index i = 0; i < ratio.size(); ++i) {
    if (!std::isnan(ratio[i]) && ratio[i] >= params.trigger_ratio) {
      return static_cast<double>(i) / signal.sample_rate;
    }
  }
  return std::nullopt;
}

std::optional<double> onset_error(const Signal& clean, const Signal& denoised, const StaLtaParams& params) {
  if (clean.sample_rate != denoised.sample_rate) {
    throw Error(ErrorKind::RateMismatch, "sample rates differ");
  }
  const auto reference = sta_lta_onset(clean, params);
  if (!reference) throw Error(ErrorKind::InvalidReference, "no onset detected in the clean signal");
  const auto detected = sta_lta_onset(denoised, params);
  if (!detected) return std::nullopt;
  return std::abs(*detected - *reference);
}

std::vector<double> detect_peaks(const Signal& signal, double threshold_z, double min_separation_ms) {
  signal.validate();
  const auto sep = static_cast<Eigen::Index>(std::lround(min_separation_ms * signal.sample_rate / 1000.0));
  if (sep < 1) throw Error(ErrorKind::InvalidParams, "min_separation must span at least one sample");

  const Eigen::VectorXd x = signal.channel(0).transpose();
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  if (!(sd > 0.0) || (x.array() == x[0]).all()) throw Error(ErrorKind::InvalidInput, "signal has zero variance");
  const Eigen::VectorXd a = ((x.array() - mean) / sd).abs();

  const Eigen::Index n = a.size();
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(a[i] > threshold_z)) continue;
    if (i > 0 && a[i] < a[i - 1]) continue;
    if (i + 1 < n && a[i] < a[i + 1]) continue;
    candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return a[l] > a[r]; });

  std::set<Eigen::Index> kept;
  for (const Eigen::Index i : candidates) {
    const auto it = kept.lower_bound(i - sep);
    if (it != kept.end() && *it <= i + sep) continue;
    kept.insert(i);
  }
  std::vector<double> times;
  times.reserve(kept.size());
  for (const Eigen::Index i : kept) times.push_back(static_cast<double>(i) / signal.sample_rate);
  return times;
}

MatchCounts match_events(const std::vector<double>& detections, const std::vector<double>& truth,
                         double tolerance_s) {
  std::vector<double> sorted_truth = truth;
  std::sort(sorted_truth.begin(), sorted_truth.end());

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const double t = detections[d];
    auto it = std::lower_bound(sorted_truth.begin(), sorted_truth.end(), t - tolerance_s);
    for (; it != sorted_truth.end() && *it <= t + tolerance_s; ++it) {
      pairs.emplace_back(std::abs(*it - t), d, static_cast<std::size_t>(it - sorted_truth.begin()));
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<bool> det_used(detections.size(), false);
  std::vector<bool> truth_used(sorted_truth.size(), false);
  MatchCounts counts;
  for (const auto& [dist, d, t] : pairs) {
    if (det_used[d] || truth_used[t]) continue;
    det_used[d] = truth_used[t] = true;
    ++counts.true_positives;
  }
  counts.false_positives = static_cast<int>(detections.size()) - counts.true_positives;
  counts.false_negatives = static_cast<int>(sorted_truth.size()) - counts.true_positives;
  return counts;
}

RocCurve make_roc_curve(std::vector<RocPoint> points) {
  std::sort(points.begin(), points.end(), [](const RocPoint& l, const RocPoint& r) {
    return l.fpr < r.fpr || (l.fpr == r.fpr && l.tpr < r.tpr);
  });
  points.insert(points.begin(), RocPoint{0.0, 0.0});
  points.push_back(RocPoint{1.0, 1.0});
  RocCurve curve;
  for (std::size_t i = 1; i < points.size(); ++i) {
    curve.auc += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  curve.points = std::move(points);
  return curve;
}

RocCurve roc_auc(const std::vector<std::vector<double>>& detections_per_threshold,
                 const std::vector<double>& truth_times, double match_tolerance_ms,
                 double signal_duration_s) {
  if (truth_times.empty()) throw Error(ErrorKind::InvalidReference, "no ground-truth events");
  if (!(match_tolerance_ms > 0.0)) throw Error(ErrorKind::InvalidParams, "tolerance must be positive");
  const double tol = match_tolerance_ms / 1000.0;
  const double negatives = signal_duration_s / tol - static_cast<double>(truth_times.size());
  if (!(negatives > 0.0)) {
    throw Error(ErrorKind::InvalidParams, "duration too short for the number of events at this tolerance");
  }
  std::vector<RocPoint> points;
  for (const auto& detections : detections_per_threshold) {
    const MatchCounts m = match_events(detections, truth_times, tol);
    RocPoint p;
    p.tpr = static_cast<double>(m.true_positives) / (m.true_positives + m.false_negatives);
    p.fpr = std::min(1.0, m.false_positives / negatives);
    points.push_back(p);
  }
  return make_roc_curve(std::move(points));
}

RocCurve roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "scores and labels differ in size");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw Error(ErrorKind::InvalidReference, "need both positive and negative labels");
  }
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });

  std::vector<RocPoint> points;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]]) tp += 1.0; else fp += 1.0;
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) {
      points.push_back({fp / negatives, tp / positives});
    }
  }
  return make_roc_curve(std::move(points));
}

double MetricSeries::mean() const {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "metric has no values");
  double s = 0.0;
  for (const double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::optional<double> MetricSeries::sem() const {
  if (values.size() < 2) return std::nullopt;
  const double m = mean();
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  const double n = static_cast<double>(values.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

}  // namespace specgate
