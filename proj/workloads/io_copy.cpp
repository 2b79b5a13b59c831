// Writes a scratch file, then copies it.
//   crucible-io-copy <dir> [megabytes]
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "timing.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: crucible-io-copy <dir> [megabytes]\n");
    return 2;
  }
  std::filesystem::path dir = argv[1];
  int mb = argc > 2 ? std::atoi(argv[2]) : 8;
  auto src = dir / "io_copy.src";
  auto dst = dir / "io_copy.dst";
  PhaseClock clock;

  std::vector<char> block(1 << 20);
  for (std::size_t k = 0; k < block.size(); ++k) block[k] = static_cast<char>(k * 31);
  {
    std::ofstream out(src, std::ios::binary);
    for (int k = 0; k < mb; ++k) out.write(block.data(), static_cast<std::streamsize>(block.size()));
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", src.c_str());
      return 1;
    }
  }
  clock.lap("write");

  std::error_code ec;
  std::filesystem::copy_file(src, dst, std::filesystem::copy_options::overwrite_existing, ec);
  if (ec) {
    std::fprintf(stderr, "copy failed: %s\n", ec.message().c_str());
    return 1;
  }
  clock.lap("read");
  std::filesystem::remove(src, ec);
  std::filesystem::remove(dst, ec);
  clock.total();
  return 0;
}
