#include "crs/parallel.hpp"

namespace crs {

namespace {
std::atomic<std::size_t> g_workers{0};
}

void set_worker_count(std::size_t workers) { g_workers = workers; }

std::size_t worker_count() {
  const std::size_t w = g_workers.load();
  if (w > 0) return w;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace crs
