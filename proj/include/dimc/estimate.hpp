#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dimc/rng.hpp"
#include "dimc/semantics.hpp"

namespace dimc {

inline constexpr double kZ99 = 2.5758293035489004;

struct ReachEstimate {
  double probability = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t truncated = 0;

  static ReachEstimate from_counts(std::size_t hits, std::size_t samples, std::size_t truncated) {
    ReachEstimate e;
    e.samples = samples;
    e.hits = hits;
    e.truncated = truncated;
    e.probability = samples ? static_cast<double>(hits) / static_cast<double>(samples) : 0.0;
    e.std_error = samples ? std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(samples)) : 0.0;
    e.ci_low = std::clamp(e.probability - kZ99 * e.std_error, 0.0, 1.0);
    e.ci_high = std::clamp(e.probability + kZ99 * e.std_error, 0.0, 1.0);
    return e;
  }
};

inline bool ci_overlap(const ReachEstimate& a, const ReachEstimate& b) {
  return std::max(a.ci_low, b.ci_low) <= std::min(a.ci_high, b.ci_high);
}

// DIMC_THREADS caps the worker count; 0 or unset means hardware concurrency.
inline unsigned worker_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DIMC_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min<unsigned long>(v, 256));
  }
  return hw;
}

// Runs `work(worker, begin, end)` over [0, count) split into contiguous
// chunks; rethrows the first exception.
template <typename Work>
void parallel_chunks(std::size_t count, Work&& work) {
  unsigned threads = static_cast<unsigned>(std::min<std::size_t>(worker_threads(), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    work(0u, std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < threads; ++w) {
    std::size_t begin = count * w / threads, end = count * (w + 1) / threads;
    pool.emplace_back([&, w, begin, end] {
      try {
        work(w, begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline ReachEstimate estimate_reach(const DistributedImc& model, const StrategyProfile& profile,
                                    const Scheduler& scheduler, std::size_t samples, const Horizon& horizon,
                                    std::uint64_t seed, const RoundLimit* rounds = nullptr) {
  if (samples == 0) throw SchemaError("samples must be at least 1");
  if (model.target().empty()) return ReachEstimate::from_counts(0, samples, 0);
  auto reach = std::make_shared<const TargetReachability>(model);
  std::atomic<std::size_t> hits{0}, truncated{0};
  parallel_chunks(samples, [&](unsigned, std::size_t begin, std::size_t end) {
    PlayOptions options;
    options.horizon = horizon;
    options.rounds = rounds;
    Simulator sim(model, profile, scheduler, options, reach);
    std::size_t h = 0, t = 0;
    for (std::size_t i = begin; i < end; ++i) {
      PlayResult r = sim.run(seed, i);
      h += r.reached_target;
      t += r.truncated;
    }
    hits += h;
    truncated += t;
  });
  return ReachEstimate::from_counts(hits, samples, truncated);
}

inline std::uint64_t scheduler_seed(std::uint64_t seed_base, const std::string& scheduler_name) {
  return splitmix64(seed_base ^ fnv1a(scheduler_name));
}

struct InvarianceReport {
  std::vector<std::string> schedulers;
  std::vector<ReachEstimate> estimates;
  // overlaps[a][b] for a < b
  std::vector<std::vector<bool>> overlaps;
  bool pass = true;
};

inline InvarianceReport scheduler_invariance_report(const DistributedImc& model, const StrategyProfile& profile,
                                                    const std::vector<std::string>& schedulers, std::size_t samples,
                                                    const Horizon& horizon, std::uint64_t seed_base) {
  if (schedulers.size() < 2) throw SchemaError("scheduler invariance needs at least two schedulers");
  InvarianceReport report;
  report.schedulers = schedulers;
  for (const auto& name : schedulers) {
    auto scheduler = make_scheduler(name);
    report.estimates.push_back(
        estimate_reach(model, profile, *scheduler, samples, horizon, scheduler_seed(seed_base, name)));
  }
  report.overlaps.assign(schedulers.size(), std::vector<bool>(schedulers.size(), true));
  for (std::size_t a = 0; a < schedulers.size(); ++a)
    for (std::size_t b = a + 1; b < schedulers.size(); ++b) {
      bool ok = ci_overlap(report.estimates[a], report.estimates[b]);
      report.overlaps[a][b] = report.overlaps[b][a] = ok;
      report.pass = report.pass && ok;
    }
  return report;
}

}  // namespace dimc
