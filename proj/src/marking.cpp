#include "afem/marking.hpp"

#include "afem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace afem {

namespace {

void validate(std::span<const double> eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in (0, 1]");
  bool any = false;
  for (double v : eta) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("indicators must be finite and non-negative");
    any = any || v > 0.0;
  }
  if (!any) throw EstimatorConverged();
}

// Walks `order`, marking until the running sum reaches theta times the sum
// over the same order.  Both sums use the same order, so the full nonzero
// support always suffices.
MarkingResult take_prefix(std::span<const double> eta, std::span<const std::size_t> order, double theta) {
  long double total = 0.0L;
  for (auto i : order) total += eta[i];
  MarkingResult r;
  r.theta = theta;
  long double sum = 0.0L;
  const long double goal = static_cast<long double>(theta) * total;
  for (auto i : order) {
    if (theta < 1.0 && sum >= goal) break;
    sum += eta[i];
    r.marked.push_back(i);
  }
  std::sort(r.marked.begin(), r.marked.end());
  r.achieved_fraction = static_cast<double>(sum / total);
  return r;
}

}  // namespace

MarkingResult mark_min(std::span<const double> eta, double theta) {
  validate(eta, theta);
  std::vector<std::size_t> order;
  order.reserve(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i)
    if (eta[i] > 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eta[a] > eta[b] || (eta[a] == eta[b] && a < b);
  });
  return take_prefix(eta, order, theta);
}

MarkingResult mark_binned(std::span<const double> eta, double theta) {
  validate(eta, theta);
  const double max = *std::max_element(eta.begin(), eta.end());
  const int top = std::ilogb(max);
  // Bin k holds the values with binary exponent top - k; members of a bin
  // are within a factor of two of each other.
  std::vector<int> bin(eta.size(), -1);
  int bins = 0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] == 0.0) continue;
    bin[i] = top - std::ilogb(eta[i]);
    bins = std::max(bins, bin[i] + 1);
  }
  std::vector<std::size_t> start(static_cast<std::size_t>(bins) + 1, 0);
  for (int b : bin)
    if (b >= 0) ++start[static_cast<std::size_t>(b) + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::size_t> order(start.back());
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (std::size_t i = 0; i < eta.size(); ++i)
    if (bin[i] >= 0) order[fill[static_cast<std::size_t>(bin[i])]++] = i;
  return take_prefix(eta, order, theta);
}

}  // namespace afem
