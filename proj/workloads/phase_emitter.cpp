// Sleeps through the named phases and reports the measured times.
//   crucible-phase-emitter phase=seconds...
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "timing.hpp"

int main(int argc, char** argv) {
  PhaseClock clock;
  for (int k = 1; k < argc; ++k) {
    std::string arg = argv[k];
    auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "expected phase=seconds, got '%s'\n", argv[k]);
      return 2;
    }
    double s = std::atof(arg.c_str() + eq + 1);
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
    clock.lap(arg.substr(0, eq));
  }
  clock.total();
  return 0;
}
