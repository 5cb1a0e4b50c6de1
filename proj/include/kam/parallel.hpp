#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace kam {

/// Worker count for parallel loops; KAM_THREADS caps it.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KAM_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (...) {
      // malformed value: keep the hardware default
    }
  }
  return n;
}

}  // namespace kam
