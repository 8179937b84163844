#include "vibcreg/common.hpp"

#include <cstdio>
#include <mutex>

namespace vibcreg::warnings {

std::atomic<std::int64_t>& counter() {
  static std::atomic<std::int64_t> c{0};
  return c;
}

void emit(const std::string& message) {
  static std::mutex mu;
  counter().fetch_add(1, std::memory_order_relaxed);
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[warn] %s\n", message.c_str());
}

std::int64_t count() { return counter().load(std::memory_order_relaxed); }

}  // namespace vibcreg::warnings
