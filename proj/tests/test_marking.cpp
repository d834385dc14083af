#include "afem/errors.hpp"
#include "afem/marking.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace afem;

namespace {

double sum_over(const std::vector<double>& eta, const std::vector<std::size_t>& idx) {
  double s = 0;
  for (auto i : idx) s += eta[i];
  return s;
}

// Smallest cardinality by trying every subset.
std::size_t brute_force_min(const std::vector<double>& eta, double theta) {
  const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
  const std::size_t n = eta.size();
  std::size_t best = n;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) s += eta[i];
    const auto k = std::size_t(std::popcount(mask));
    if (s >= theta * total && k < best) best = k;
  }
  return best;
}

std::vector<double> random_indicators(std::mt19937& rng, std::size_t n) {
  std::lognormal_distribution<double> d(0.0, 3.0);
  std::vector<double> eta(n);
  for (auto& e : eta) e = (rng() % 7 == 0) ? 0.0 : d(rng);
  if (std::all_of(eta.begin(), eta.end(), [](double e) { return e == 0.0; })) eta[0] = 1.0;
  return eta;
}

}  // namespace

TEST_CASE("minimal marking examples") {
  const std::vector<double> a{4, 3, 2, 1};
  CHECK(mark_min(a, 0.5).marked == std::vector<std::size_t>{0, 1});
  const std::vector<double> b{1, 1, 1, 1};
  CHECK(mark_min(b, 0.25).marked == std::vector<std::size_t>{0});
  const auto all = mark_min(a, 1.0);
  CHECK(all.marked == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(all.achieved_fraction == 1.0);
  const std::vector<double> c{0, 5, 0, 5};
  CHECK(mark_min(c, 1.0).marked == std::vector<std::size_t>{1, 3});
  CHECK(mark_min(c, 0.5).marked == std::vector<std::size_t>{1});
  const auto r = mark_min(a, 0.7);
  CHECK(r.theta == 0.7);
  CHECK(r.marked == std::vector<std::size_t>{0, 1});
  CHECK(r.achieved_fraction == doctest::Approx(0.7));
}

TEST_CASE("marking rejects bad input") {
  const std::vector<double> ok{1, 2};
  for (double theta : {0.0, -0.1, 1.5, std::nan("")}) {
    CHECK_THROWS_AS(mark_min(ok, theta), InvalidArgument);
    CHECK_THROWS_AS(mark_binned(ok, theta), InvalidArgument);
  }
  for (double bad : {-1.0, std::numeric_limits<double>::infinity(), std::nan("")}) {
    const std::vector<double> v{1, bad};
    CHECK_THROWS_AS(mark_min(v, 0.5), InvalidArgument);
    CHECK_THROWS_AS(mark_binned(v, 0.5), InvalidArgument);
  }
  const std::vector<double> zero{0, 0, 0};
  CHECK_THROWS_AS(mark_min(zero, 0.5), EstimatorConverged);
  CHECK_THROWS_AS(mark_binned(zero, 0.5), EstimatorConverged);
  CHECK_THROWS_AS(mark_min(std::vector<double>{}, 0.5), EstimatorConverged);
}

TEST_CASE("minimal marking has the cardinality of the best subset") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto eta = random_indicators(rng, 1 + rng() % 12);
    const double theta = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    const auto r = mark_min(eta, theta);
    const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
    CHECK(sum_over(eta, r.marked) >= theta * total * (1 - 1e-14));
    CHECK(r.marked.size() == brute_force_min(eta, theta));
    CHECK(std::is_sorted(r.marked.begin(), r.marked.end()));
  }
}

TEST_CASE("marked set grows with theta and ignores scaling") {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto eta = random_indicators(rng, 50);
    std::size_t last = 0;
    for (double theta = 0.05; theta <= 1.0; theta += 0.05) {
      const auto r = mark_min(eta, theta);
      CHECK(r.marked.size() >= last);
      last = r.marked.size();
    }
    auto scaled = eta;
    for (auto& e : scaled) e *= 1024.0;
    CHECK(mark_min(scaled, 0.4).marked == mark_min(eta, 0.4).marked);
    CHECK(mark_binned(scaled, 0.4).marked == mark_binned(eta, 0.4).marked);
  }
}

TEST_CASE("binned marking satisfies the criterion with at most twice the minimum") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto eta = random_indicators(rng, 1 + rng() % 400);
    const double theta = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    const auto b = mark_binned(eta, theta);
    const auto m = mark_min(eta, theta);
    const double total = std::accumulate(eta.begin(), eta.end(), 0.0);
    CHECK(sum_over(eta, b.marked) >= theta * total * (1 - 1e-14));
    CHECK(b.marked.size() <= 2 * m.marked.size());
    CHECK(std::is_sorted(b.marked.begin(), b.marked.end()));
    CHECK(std::adjacent_find(b.marked.begin(), b.marked.end()) == b.marked.end());
    for (auto i : b.marked) CHECK(eta[i] > 0.0);
  }
}

TEST_CASE("binned marking on special inputs") {
  std::vector<double> one(100, 0.0);
  one[42] = 3.0;
  CHECK(mark_binned(one, 0.9).marked == std::vector<std::size_t>{42});

  const std::vector<double> flat(64, 2.0);
  CHECK(mark_binned(flat, 0.5).marked.size() == 32);
  CHECK(mark_binned(flat, 0.5).marked.front() == 0);

  std::vector<double> geometric(40);
  for (std::size_t i = 0; i < geometric.size(); ++i) geometric[i] = std::ldexp(1.0, -int(i));
  for (double theta : {0.3, 0.5, 0.9, 0.999}) {
    const auto b = mark_binned(geometric, theta);
    const auto m = mark_min(geometric, theta);
    CHECK(b.marked == m.marked);
  }

  CHECK(mark_binned(flat, 1.0).marked.size() == 64);
  CHECK(mark_binned(one, 1.0).achieved_fraction == 1.0);
}

TEST_CASE("indicators spanning many binary orders") {
  std::vector<double> eta;
  for (int e = -1000; e <= 1000; e += 7) eta.push_back(std::ldexp(1.5, e));
  eta.push_back(std::numeric_limits<double>::denorm_min());
  const auto b = mark_binned(eta, 0.5);
  const auto m = mark_min(eta, 0.5);
  CHECK(m.marked.size() == 1);
  CHECK(b.marked == m.marked);
}
