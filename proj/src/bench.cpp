#include "specgate/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "specgate/report.hpp"

namespace specgate {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double total_duration(const std::vector<Signal>& batch) {
  double s = 0.0;
  for (const auto& x : batch) s += x.duration();
  return s;
}

bool same_outputs(const std::vector<Signal>& a, const std::vector<Signal>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

double quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "no samples");
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

void summarize(BenchResult& r) {
  r.repetitions = static_cast<int>(r.samples_ms.size());
  r.median_ms = quantile(r.samples_ms, 0.5);
  r.iqr_ms = quantile(r.samples_ms, 0.75) - quantile(r.samples_ms, 0.25);
  r.realtime_factor = r.median_ms > 0.0 ? r.batch * r.length_s / (r.median_ms / 1000.0)
                                        : std::numeric_limits<double>::infinity();
}

BenchResult time_algorithm(const std::string& algorithm, const Runner& runner, const Signal& signal,
                           int repetitions, int warmup) {
  if (repetitions < 1) throw Error(ErrorKind::InvalidParams, "repetitions must be >= 1");
  if (warmup < 0) throw Error(ErrorKind::InvalidParams, "warmup must be >= 0");
  for (int i = 0; i < warmup; ++i) runner(signal);

  BenchResult r;
  r.algorithm = algorithm;
  r.length_s = signal.duration();
  r.threads = 1;
  Signal first;
  for (int i = 0; i < repetitions; ++i) {
    const auto start = Clock::now();
    Signal out = runner(signal);
    r.samples_ms.push_back(elapsed_ms(start));
    if (i == 0) {
      first = std::move(out);
    } else if (!(out == first)) {
      throw std::runtime_error(algorithm + ": output changed between repetitions");
    }
  }
  summarize(r);
  return r;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads < 1) throw Error(ErrorKind::InvalidParams, "threads must be >= 1");
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<Signal> parallel_map(const std::vector<Signal>& items, const Runner& runner, int threads) {
  std::vector<Signal> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) { out[i] = runner(items[i]); });
  return out;
}

std::vector<BenchResult> thread_scaling_sweep(const std::string& algorithm, const Runner& runner,
                                              const std::vector<Signal>& batch,
                                              const std::vector<int>& thread_counts, int repetitions,
                                              int warmup) {
  if (repetitions < 1) throw Error(ErrorKind::InvalidParams, "repetitions must be >= 1");
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "empty batch");
  std::vector<BenchResult> results;
  std::vector<Signal> reference;
  for (const int threads : thread_counts) {
    for (int i = 0; i < warmup; ++i) parallel_map(batch, runner, threads);
    BenchResult r;
    r.algorithm = algorithm;
    r.length_s = total_duration(batch) / static_cast<double>(batch.size());
    r.batch = static_cast<int>(batch.size());
    r.threads = threads;
    for (int i = 0; i < repetitions; ++i) {
      const auto start = Clock::now();
      std::vector<Signal> out = parallel_map(batch, runner, threads);
      r.samples_ms.push_back(elapsed_ms(start));
      if (reference.empty()) {
        reference = std::move(out);
      } else if (!same_outputs(out, reference)) {
        throw std::runtime_error(algorithm + ": batch output depends on thread count or repetition");
      }
    }
    summarize(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string bench_to_csv(const std::vector<BenchResult>& results) {
  std::ostringstream out;
  out << "algorithm,length_s,batch,threads,repetitions,median_ms,iqr_ms,realtime_factor,samples_ms\n";
  for (const auto& r : results) {
    out << r.algorithm << ',' << format_number(r.length_s) << ',' << r.batch << ',' << r.threads << ','
        << r.repetitions << ',' << format_number(r.median_ms) << ',' << format_number(r.iqr_ms) << ','
        << format_number(r.realtime_factor) << ',';
    for (std::size_t i = 0; i < r.samples_ms.size(); ++i) {
      out << (i ? ";" : "") << format_number(r.samples_ms[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace specgate
