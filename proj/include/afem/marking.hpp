#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afem {

struct MarkingResult {
  std::vector<std::size_t> marked;  ///< sorted ascending
  double theta = 0.0;
  double achieved_fraction = 0.0;   ///< sum over marked / total
};

/// Doerfler marking with minimal cardinality: the shortest prefix of the
/// indicators sorted descending (ties by ascending index) whose sum reaches
/// theta times the total.
///
/// Throws InvalidArgument for theta outside (0,1] or negative/non-finite
/// indicators, EstimatorConverged when all indicators vanish.
MarkingResult mark_min(std::span<const double> indicators_sq, double theta);

/// Doerfler marking in linear time.  Indicators are binned by binary
/// exponent, bins are consumed from the largest down and the last bin in
/// index order, so at most twice the minimal number of elements is marked.
/// Zero indicators are never marked.
MarkingResult mark_binned(std::span<const double> indicators_sq, double theta);

}  // namespace afem
