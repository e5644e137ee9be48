#include "aucseg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace aucseg {

namespace {

std::atomic<int> g_override{0};

int env_threads() {
  const char* raw = std::getenv("AUCSEG_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int value = std::stoi(raw);
    return value > 0 ? value : 0;
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

int thread_count() {
  if (const int forced = g_override.load(); forced > 0) return forced;
  if (const int env = env_threads(); env > 0) return env;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(int threads) { g_override.store(std::max(0, threads)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(thread_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back(run_chunk, begin, end);
  }
  run_chunk(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace aucseg
