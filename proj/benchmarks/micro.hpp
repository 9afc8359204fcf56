#pragma once

// Minimal timing harness: register cases, run each until ~0.4 s of samples
// accumulate, report the best-of-run average.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace microbench {

struct Case {
  std::string name;
  std::function<void()> fn;
};

inline std::vector<Case>& registry() {
  static std::vector<Case> cases;
  return cases;
}

struct Register {
  Register(std::string name, std::function<void()> fn) {
    registry().push_back({std::move(name), std::move(fn)});
  }
};

inline int run_all() {
  using clock = std::chrono::steady_clock;
  std::printf("%-36s %14s %10s\n", "benchmark", "time/op", "iters");
  for (auto& c : registry()) {
    // warmup
    c.fn();
    long iters = 0;
    double best = 1e300;
    const auto deadline = clock::now() + std::chrono::milliseconds(400);
    while (clock::now() < deadline) {
      const auto t0 = clock::now();
      c.fn();
      const double dt = std::chrono::duration<double>(clock::now() - t0).count();
      best = std::min(best, dt);
      ++iters;
    }
    const char* unit = "s ";
    double v = best;
    if (v < 1e-3) {
      v *= 1e6;
      unit = "us";
    } else if (v < 1.0) {
      v *= 1e3;
      unit = "ms";
    }
    std::printf("%-36s %11.3f %s %10ld\n", c.name.c_str(), v, unit, iters);
  }
  return 0;
}

}  // namespace microbench

#define MICRO_BENCH(name)                                        \
  static void bench_fn_##name();                                 \
  static microbench::Register reg_##name(#name, bench_fn_##name); \
  static void bench_fn_##name()
