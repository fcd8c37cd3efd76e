#pragma once

#include <functional>
#include <string>
#include <vector>

#include "specgate/signal.hpp"

namespace specgate {

using Runner = std::function<Signal(const Signal&)>;

struct BenchResult {
  std::string algorithm;
  double length_s = 0.0;  // per item
  int batch = 1;          // items per repetition
  int threads = 1;
  int repetitions = 0;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  double realtime_factor = 0.0;  // batch * length_s / median wall time
  std::vector<double> samples_ms;
};

/// Linear-interpolation quantile (q in [0, 1]) of unsorted samples.
double quantile(std::vector<double> samples, double q);

/// Fills median, IQR and realtime factor from samples_ms, batch and length_s.
void summarize(BenchResult& result);

/// Runs `warmup` untimed calls, then times `repetitions` calls. Throws if any output
/// differs bitwise from the first; runner exceptions propagate.
BenchResult time_algorithm(const std::string& algorithm, const Runner& runner, const Signal& signal,
                           int repetitions, int warmup = 2);

/// Calls fn(0) .. fn(n - 1) on up to `threads` workers. The first exception thrown is
/// rethrown after all workers finish; indices not yet started are skipped.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Applies `runner` to every item on `threads` workers; results are in input order.
std::vector<Signal> parallel_map(const std::vector<Signal>& items, const Runner& runner, int threads);

/// Times the whole batch through parallel_map at each thread count; length_s is the mean
/// item duration. Outputs must be bitwise identical across repetitions and thread counts.
std::vector<BenchResult> thread_scaling_sweep(const std::string& algorithm, const Runner& runner,
                                              const std::vector<Signal>& batch,
                                              const std::vector<int>& thread_counts, int repetitions,
                                              int warmup = 1);

/// Columns algorithm,length_s,batch,threads,repetitions,median_ms,iqr_ms,realtime_factor,samples_ms;
/// raw samples are ';'-separated.
std::string bench_to_csv(const std::vector<BenchResult>& results);

}  // namespace specgate
