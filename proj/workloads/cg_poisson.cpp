// Conjugate gradients for the 5-point Laplacian on an n x n grid with
// f = 1 and zero boundary values.
//   crucible-cg-poisson [n] [output-file]
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "timing.hpp"

namespace {

using grid = std::vector<double>;

void apply_laplacian(const grid& u, grid& out, int n) {
  auto at = [&](int i, int j) {
    return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : u[i * n + j];
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out[i * n + j] = 4 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1);
    }
  }
}

double dot(const grid& a, const grid& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 64;
  const char* out_path = argc > 2 ? argv[2] : nullptr;
  if (n < 2) {
    std::fprintf(stderr, "grid size must be at least 2\n");
    return 2;
  }
  PhaseClock clock;

  double h = 1.0 / (n + 1);
  grid b(n * n, h * h), x(n * n, 0.0), r = b, p = b, ap(n * n);
  clock.lap("assemble");

  double rr = dot(r, r);
  double tol = 1e-10 * std::sqrt(rr);
  int iterations = 0;
  while (std::sqrt(rr) > tol && iterations < 10 * n * n) {
    apply_laplacian(p, ap, n);
    double alpha = rr / dot(p, ap);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    double rr_new = dot(r, r);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = r[k] + (rr_new / rr) * p[k];
    rr = rr_new;
    ++iterations;
  }
  clock.lap("solve");
  std::fprintf(stderr, "cg: %d iterations, residual %.3e\n", iterations, std::sqrt(rr));

  if (out_path) {
    std::ofstream out(out_path);
    for (double v : x) out << v << '\n';
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", out_path);
      return 1;
    }
  }
  clock.lap("io");
  clock.total();
  return 0;
}
