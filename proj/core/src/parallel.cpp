#include "trustbayes/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace trustbayes {

namespace {

std::atomic<std::size_t> g_thread_cap{0};

std::size_t default_threads() {
  if (const char* env = std::getenv("TRUSTBAYES_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace

void set_max_threads(std::size_t threads) { g_thread_cap.store(threads); }

std::size_t max_threads() {
  const std::size_t cap = g_thread_cap.load();
  return cap == 0 ? default_threads() : cap;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = std::min(max_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  // Lowest failing index wins so the reported error does not depend on timing.
  std::exception_ptr first_error;
  std::size_t first_error_index = count;
  std::mutex error_mutex;
  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    std::size_t i = begin;
    try {
      for (; i < end; ++i) body(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (i < first_error_index) {
        first_error_index = i;
        first_error = std::current_exception();
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run_chunk, begin, end);
  }
  run_chunk(0, std::min(count, chunk));
  pool.clear();  // joins

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace trustbayes
