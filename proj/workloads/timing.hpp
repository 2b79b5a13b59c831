#pragma once

#include <chrono>
#include <cstdio>
#include <string>

// Phase stopwatch printing `TIMING <phase> <seconds>` lines and a final
// `TOTAL <seconds>` line.
class PhaseClock {
 public:
  PhaseClock() : start_(clock::now()), mark_(start_) {}

  void lap(const std::string& phase) {
    auto now = clock::now();
    std::printf("TIMING %s %.17g\n", phase.c_str(), seconds(mark_, now));
    mark_ = now;
  }

  void total() {
    std::printf("TOTAL %.17g\n", seconds(start_, clock::now()));
    std::fflush(stdout);
  }

 private:
  using clock = std::chrono::steady_clock;
  static double seconds(clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  }
  clock::time_point start_;
  clock::time_point mark_;
};
