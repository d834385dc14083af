#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace afem {

/// Runs fn(chunk, begin, end) over `chunks` contiguous ranges of [0, n).
/// With one chunk everything runs on the calling thread.  The first
/// exception thrown by any chunk is rethrown.
template <class Fn>
void for_chunks(std::size_t n, unsigned chunks, Fn&& fn) {
  chunks = std::max(1u, std::min<unsigned>(chunks, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  auto range = [&](unsigned c) {
    return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks};
  };
  if (chunks == 1) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> workers;
    for (unsigned c = 0; c < chunks; ++c)
      workers.emplace_back([&, c] {
        try {
          const auto [b, e] = range(c);
          fn(c, b, e);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace afem
