#include "afem/checks.hpp"

#include "afem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace afem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_successor(const AfemTrace& trace, std::size_t l) { return l + 1 < trace.records.size(); }

}  // namespace

EstimatorReductionFit check_estimator_reduction(const AfemTrace& trace, double c_cap) {
  const auto& rs = trace.records;
  if (rs.size() < 3) throw TraceError("estimator reduction needs at least three iterations");
  EstimatorReductionFit fit;
  double q = 0.0;
  for (std::size_t l = 0; has_successor(trace, l); ++l) {
    const double e0 = rs[l].eta_sq, e1 = rs[l + 1].eta_sq, d = rs[l].diff_grad_sq;
    if (!std::isfinite(d)) continue;
    ++fit.steps;
    if (e0 > 0.0) {
      const double r = (e1 - c_cap * d) / e0;
      q = std::max(q, r);
      if (r >= 1.0) fit.violations.push_back(l);
    } else if (e1 > c_cap * d) {
      fit.violations.push_back(l);
    }
  }
  fit.q = q;
  for (std::size_t l = 0; has_successor(trace, l); ++l) {
    const double e0 = rs[l].eta_sq, e1 = rs[l + 1].eta_sq, d = rs[l].diff_grad_sq;
    if (!std::isfinite(d) || d <= 0.0) continue;
    fit.c = std::max(fit.c, (e1 - q * e0) / d);
  }
  return fit;
}

QuasiOrthogonalityResult check_quasi_orthogonality(const AfemTrace& trace, double epsilon, double noise_factor) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in [0, 1)");
  if (!std::isfinite(trace.noise_floor_sq)) throw TraceError("trace has no reference errors attached");
  const auto& rs = trace.records;
  const double guard = noise_factor * noise_factor * trace.noise_floor_sq;
  QuasiOrthogonalityResult out;
  out.epsilon = epsilon;
  for (std::size_t l = 0; has_successor(trace, l); ++l) {
    const double lhs = rs[l].diff_energy_sq;
    const double e0 = rs[l].energy_err_sq, e1 = rs[l + 1].energy_err_sq;
    if (!std::isfinite(lhs) || !(e0 > guard) || !(e1 > guard)) continue;
    const double slack = e0 / (1.0 - epsilon) - e1 - lhs;
    out.steps.push_back(l);
    out.slack.push_back(slack);
    if (slack < 0.0) out.failures.push_back(l);
  }
  if (!out.steps.empty()) {
    if (out.failures.empty())
      out.first_index = out.steps.front();
    else if (out.failures.back() != out.steps.back()) {
      const auto it = std::upper_bound(out.steps.begin(), out.steps.end(), out.failures.back());
      out.first_index = *it;
    }
  }
  return out;
}

double rlinear_constant(const AfemTrace& trace, double q) {
  const auto& rs = trace.records;
  const double log_q = std::log(q);
  double log_c = -kInf;
  for (std::size_t l = 0; l < rs.size(); ++l)
    for (std::size_t m = l + 1; m < rs.size(); ++m) {
      if (rs[m].eta_sq == 0.0) continue;
      if (rs[l].eta_sq == 0.0) return kInf;
      log_c = std::max(log_c, std::log(rs[m].eta_sq) - std::log(rs[l].eta_sq) - double(m - l) * log_q);
    }
  return std::exp(log_c);
}

RLinearFit check_rlinear(const AfemTrace& trace, double c_max) {
  const auto& rs = trace.records;
  if (rs.size() < 5) throw TraceError("R-linear fit needs at least five iterations");
  RLinearFit fit;

  std::vector<double> xs, ys;
  for (const auto& r : rs)
    if (r.eta_sq > 0.0) {
      xs.push_back(double(r.level));
      ys.push_back(std::log(r.eta_sq));
    }
  if (xs.size() >= 2) {
    const double n = double(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n, my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.q_lsq = std::exp(sxy / sxx);
  }

  double lo = -60.0, hi = 60.0;
  if (!(rlinear_constant(trace, std::exp(hi)) <= c_max)) {
    fit.q = kInf;
    fit.c = kInf;
    return fit;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rlinear_constant(trace, std::exp(mid)) <= c_max)
      hi = mid;
    else
      lo = mid;
  }
  fit.q = std::max(std::exp(hi), fit.q_lsq);
  fit.c = rlinear_constant(trace, fit.q);
  fit.pass = fit.q < 1.0 && fit.c <= c_max;
  return fit;
}

RateFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw TraceError("log-log fit needs at least two points");
  const double n = double(x.size());
  std::vector<double> lx(x.size()), ly(y.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw TraceError("log-log fit needs distinct abscissae");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.s = -fit.slope;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

namespace {

template <class Get>
RateFit windowed_fit(const AfemTrace& trace, std::size_t min_extra, Get get) {
  const auto& rs = trace.records;
  if (rs.empty()) throw TraceError("empty trace");
  const std::size_t n0 = rs.front().n_elements;
  std::vector<double> x, y;
  std::vector<std::size_t> window;
  for (const auto& r : rs) {
    const double v = get(r);
    if (r.n_elements <= n0 || r.n_elements - n0 < min_extra || !(v > 0.0) || !std::isfinite(v)) continue;
    x.push_back(double(r.n_elements - n0));
    y.push_back(std::sqrt(v));
    window.push_back(r.level);
  }
  if (x.size() < 6) throw TraceError("rate fit window has fewer than six iterations");
  auto fit = fit_loglog(x, y);
  fit.window = std::move(window);
  return fit;
}

}  // namespace

RateFit fit_rate(const AfemTrace& trace, std::size_t min_extra_elements) {
  return windowed_fit(trace, min_extra_elements, [](const IterationRecord& r) { return r.eta_sq; });
}

RateFit fit_error_rate(const AfemTrace& trace, std::size_t min_extra_elements) {
  return windowed_fit(trace, min_extra_elements, [](const IterationRecord& r) { return r.h1_err_sq; });
}

std::vector<MarkingOptimalityRow> check_marking_optimality(const AfemTrace& trace, std::span<const double> q_values) {
  const auto& rs = trace.records;
  const double theta = trace.meta.theta;
  std::vector<MarkingOptimalityRow> rows;
  for (std::size_t l = 0; has_successor(trace, l); ++l) {
    if (!std::isfinite(rs[l].refined_eta_sq) || !(rs[l].eta_sq > 0.0)) continue;
    const double fraction = rs[l].refined_eta_sq / rs[l].eta_sq;
    for (double q : q_values) {
      MarkingOptimalityRow row;
      row.level = l;
      row.q_d = q;
      row.refined_fraction = fraction;
      row.applicable = rs[l + 1].eta_sq <= q * rs[l].eta_sq;
      row.holds = !row.applicable || fraction >= theta * (1.0 - 1e-12);
      rows.push_back(row);
    }
  }
  return rows;
}

double check_discrete_reliability(const Mesh& coarse, const Mesh& fine, const EstimatorReport& coarse_report,
                                  const DiscreteSolution& coarse_solution, const DiscreteSolution& fine_solution) {
  if (coarse_report.mesh_id != coarse.id()) throw MeshMismatch("estimator report belongs to another mesh");
  const auto moved = transfer(coarse, coarse_solution, fine);
  const double dist = grad_distance_sq(fine, fine_solution, moved);
  const double refined = local_sum(coarse_report, refined_elements(coarse, fine));
  if (refined == 0.0) return dist == 0.0 ? 0.0 : kInf;
  return dist / refined;
}

DiscreteReliabilitySummary discrete_reliability_ratios(const AfemTrace& trace, std::size_t min_extra_elements) {
  const auto& rs = trace.records;
  DiscreteReliabilitySummary out;
  for (std::size_t l = 0; has_successor(trace, l); ++l) {
    const double d = rs[l].diff_grad_sq, s = rs[l].refined_eta_sq;
    if (!std::isfinite(d) || !std::isfinite(s)) continue;
    if (rs[l].n_elements - rs[0].n_elements < min_extra_elements) continue;
    out.levels.push_back(l);
    out.ratios.push_back(s == 0.0 ? (d == 0.0 ? 0.0 : kInf) : d / s);
  }
  if (!out.ratios.empty()) {
    out.max = *std::max_element(out.ratios.begin(), out.ratios.end());
    out.min = *std::min_element(out.ratios.begin(), out.ratios.end());
  }
  return out;
}

double closure_constant(const AfemTrace& trace) {
  const auto& rs = trace.records;
  if (rs.empty()) throw TraceError("empty trace");
  double c = 0.0;
  std::size_t marked = 0;
  for (std::size_t l = 1; l < rs.size(); ++l) {
    marked += rs[l - 1].n_marked;
    if (marked > 0) c = std::max(c, double(rs[l].n_elements - rs[0].n_elements) / double(marked));
  }
  return c;
}

ReliabilityFit fit_reliability(const AfemTrace& trace) {
  ReliabilityFit fit{std::nan(""), std::nan("")};
  for (const auto& r : trace.records) {
    if (!std::isfinite(r.h1_err_sq) || !(r.eta_sq > 0.0)) continue;
    const double rel = r.h1_err_sq / r.eta_sq;
    const double eff = r.eta_sq / (r.h1_err_sq + r.osc_sq);
    fit.c_rel = std::isnan(fit.c_rel) ? rel : std::max(fit.c_rel, rel);
    fit.c_eff = std::isnan(fit.c_eff) ? eff : std::max(fit.c_eff, eff);
  }
  return fit;
}

}  // namespace afem
