#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specgate/dsp.hpp"
#include "specgate/signal.hpp"

namespace specgate {

/// 10 log10(sum x^2 / sum (x - x_hat)^2) over all channels. +inf for a zero residual.
double sdr(const Signal& clean, const Signal& estimate);

struct SegSnrParams {
  double segment_ms = 30.0;
  double clamp_low_db = -10.0;
  double clamp_high_db = 35.0;
};

/// Mean of clamped per-segment SNRs; a trailing partial segment is dropped.
double segsnr(const Signal& clean, const Signal& estimate, const SegSnrParams& params = {});

/// Mean absolute difference of dB magnitude spectrograms, both floored at
/// (peak of clean) - dynamic_range_db.
double mean_abs_db_error(const Signal& clean, const Signal& estimate, const StftParams& stft,
                         double dynamic_range_db = 60.0);

struct StaLtaParams {
  double sta_s = 0.5;
  double lta_s = 10.0;
  double trigger_ratio = 4.0;
  void validate() const;
};

/// Trailing STA / LTA of the channel-averaged squared samples. Entries before the
/// LTA window is full are NaN; a zero LTA gives 0.
Eigen::VectorXd sta_lta_ratio(const Signal& signal, const StaLtaParams& params);

/// First time (s) the ratio reaches the trigger, if any.
std::optional<double> sta_lta_onset(const Signal& signal, const StaLtaParams& params = {});

/// |onset(denoised) - onset(clean)| in seconds; std::nullopt is a missed detection
/// on the denoised signal. Throws InvalidReference when the clean signal has no onset.
std::optional<double> onset_error(const Signal& clean, const Signal& denoised,
                                  const StaLtaParams& params = {});

/// Times (s) of local maxima of the globally z-scored |x| (channel 0) above threshold_z.
/// Peaks within min_separation_ms of a larger kept peak are dropped.
std::vector<double> detect_peaks(const Signal& signal, double threshold_z, double min_separation_ms);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by FPR, with (0,0) and (1,1)
  double auc = 0.0;
};

struct MatchCounts {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
};

/// Greedy nearest matching of detections to distinct truth events within tolerance_s.
MatchCounts match_events(const std::vector<double>& detections, const std::vector<double>& truth,
                         double tolerance_s);

/// Event-detection ROC over a threshold sweep. Negatives are the count of
/// tolerance-wide opportunity windows not occupied by a truth event.
RocCurve roc_auc(const std::vector<std::vector<double>>& detections_per_threshold,
                 const std::vector<double>& truth_times, double match_tolerance_ms,
                 double signal_duration_s);

/// Score ROC with one point per distinct score threshold; labels true = positive.
RocCurve roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Trapezoidal area under (fpr, tpr) points, after sorting and adding the endpoints.
RocCurve make_roc_curve(std::vector<RocPoint> points);

/// Named per-item metric values.
struct MetricSeries {
  std::vector<std::string> item_ids;
  std::vector<double> values;

  std::size_t n() const { return values.size(); }
  double mean() const;
  /// Sample standard deviation / sqrt(n); undefined for n < 2.
  std::optional<double> sem() const;
  void add(std::string id, double value) {
    item_ids.push_back(std::move(id));
    values.push_back(value);
  }
};

/// Metric name -> series, iterated in name order.
using MetricsReport = std::map<std::string, MetricSeries>;

}  // namespace specgate
