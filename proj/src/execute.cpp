#include "afem/execute.hpp"

#include "afem/checks.hpp"
#include "afem/errors.hpp"
#include "afem/mesh_io.hpp"
#include "afem/trace_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace afem {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

bool requested(const RunConfig& cfg, std::string_view name) {
  return std::find(cfg.checks.begin(), cfg.checks.end(), name) != cfg.checks.end();
}

CheckOutcome outcome(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, std::move(detail)};
}

CheckOutcome skipped(std::string name, std::string why) { return {std::move(name), CheckStatus::skipped, std::move(why)}; }

std::string_view status_text(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::skipped: return "SKIP";
  }
  return "SKIP";
}

CheckOutcome rate_outcome(const std::string& name, const AfemTrace& trace, std::size_t window,
                          std::optional<double> target, double tolerance) {
  try {
    const auto fit = fit_rate(trace, window);
    std::string detail = "s=" + fmt(fit.s) + " residual=" + fmt(fit.residual) + " points=" +
                         std::to_string(fit.window.size());
    bool ok = fit.s > 0.0;
    if (target) {
      ok = ok && std::abs(fit.s - *target) <= tolerance;
      detail += " target=" + fmt(*target) + "+-" + fmt(tolerance);
    }
    return outcome(name, ok, detail);
  } catch (const TraceError& e) {
    return skipped(name, e.what());
  }
}

CheckOutcome ellipticity_outcome(const RunConfig& cfg, const Problem& problem, const Mesh& mesh) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem)) {
    const auto r = check_ellipticity(*lin, mesh);
    return outcome("ellipticity", r.ok(), "margin=" + fmt(r.margin));
  }
  const auto& nl = std::get<NonlinearProblem>(problem);
  const auto r = sample_monotonicity(nl, cfg.seed, 2000);
  return outcome("ellipticity", r.ok(nl.c_mono),
                 "min_ratio=" + fmt(r.min_ratio) + " c_mono=" + fmt(nl.c_mono));
}

CheckOutcome conformity_outcome(const AfemResult& result) {
  if (result.meshes.empty()) return skipped("conformity", "no meshes");
  const double gamma0 = shape_regularity(result.meshes.front());
  double gamma = gamma0;
  for (std::size_t l = 0; l < result.meshes.size(); ++l) {
    const auto& mesh = result.meshes[l];
    const auto audit = audit_conformity(mesh);
    if (!audit.ok()) return outcome("conformity", false, "level " + std::to_string(l) + " fails the conformity audit");
    gamma = std::max(gamma, shape_regularity(mesh));
  }
  for (std::size_t l = 0; l < result.refinements.size() && l + 1 < result.meshes.size(); ++l) {
    const auto& rec = result.refinements[l];
    const auto& coarse = result.meshes[l];
    const auto& fine = result.meshes[l + 1];
    for (std::size_t i = 0; i < rec.refined.size(); ++i) {
      const auto t = rec.refined[i];
      for (const auto s : rec.sons[i]) {
        const double expected = std::ldexp(coarse.area(t), -int(fine.generation(s) - coarse.generation(t)));
        if (std::abs(fine.area(s) - expected) > 1e-12 * expected)
          return outcome("conformity", false, "level " + std::to_string(l) + ": son area is not a power-of-two fraction");
      }
    }
  }
  const bool ok = gamma <= 2.0 * gamma0;
  return outcome("conformity", ok, "gamma0=" + fmt(gamma0) + " gamma_max=" + fmt(gamma));
}

}  // namespace

std::vector<CheckOutcome> run_checks(const RunConfig& cfg, const Problem& problem, AfemResult& result,
                                     const AfemResult* uniform, unsigned threads) {
  std::vector<CheckOutcome> out;
  const auto& trace = result.trace;
  const std::size_t n = trace.records.size();

  if (requested(cfg, "ellipticity")) out.push_back(ellipticity_outcome(cfg, problem, result.meshes.front()));

  if (requested(cfg, "reduction")) {
    if (n < 3) {
      out.push_back(skipped("reduction", "fewer than three iterations"));
    } else {
      const auto fit = check_estimator_reduction(trace);
      out.push_back(outcome("reduction", fit.pass(),
                            "q_fit=" + fmt(fit.q) + " C_fit=" + fmt(fit.c) +
                                " violations=" + std::to_string(fit.violations.size())));
    }
  }

  if (requested(cfg, "orthogonality")) {
    if (n < 3) {
      out.push_back(skipped("orthogonality", "fewer than three iterations"));
    } else {
      if (!std::isfinite(result.trace.noise_floor_sq)) {
        const auto ref = compute_reference(problem, result.meshes.back(), result.solutions.back(),
                                           cfg.reference_levels, {}, threads);
        attach_reference_errors(result, problem, ref);
      }
      const auto qo = check_quasi_orthogonality(trace, cfg.epsilon);
      std::string detail = "epsilon=" + fmt(cfg.epsilon) + " guarded_steps=" + std::to_string(qo.steps.size()) +
                           " failures=" + std::to_string(qo.failures.size());
      detail += qo.first_index ? " l0=" + std::to_string(*qo.first_index) : std::string(" l0=none");
      const bool ok = !qo.steps.empty() && qo.first_index && *qo.first_index <= cfg.max_l0;
      out.push_back(outcome("orthogonality", ok, detail));
    }
  }

  if (requested(cfg, "rlinear")) {
    if (n < 5) {
      out.push_back(skipped("rlinear", "fewer than five iterations"));
    } else {
      const auto fit = check_rlinear(trace);
      out.push_back(outcome("rlinear", fit.pass, "q_fit=" + fmt(fit.q) + " C_fit=" + fmt(fit.c)));
    }
  }

  if (requested(cfg, "rate")) {
    out.push_back(rate_outcome("rate", trace, cfg.rate_window, cfg.rate_target, cfg.rate_tolerance));
    if (uniform)
      out.push_back(rate_outcome("rate_uniform", uniform->trace, cfg.rate_window, cfg.uniform_rate_target,
                                 cfg.rate_tolerance));
  }

  if (requested(cfg, "marking")) {
    const auto rows = check_marking_optimality(trace);
    std::size_t applicable = 0, broken = 0;
    for (const auto& r : rows) {
      applicable += r.applicable;
      broken += !r.holds;
    }
    if (rows.empty())
      out.push_back(skipped("marking", "no refinement steps"));
    else
      out.push_back(outcome("marking", broken == 0,
                            "applicable=" + std::to_string(applicable) + " violated=" + std::to_string(broken)));
  }

  if (requested(cfg, "reliability")) {
    const auto s = discrete_reliability_ratios(trace, cfg.rate_window);
    if (s.ratios.empty())
      out.push_back(skipped("reliability", "no refinement steps"));
    else
      out.push_back(outcome("reliability", std::isfinite(s.max) && s.spread() < 10.0,
                            "C_drel=" + fmt(s.max) + " min=" + fmt(s.min) + " spread=" + fmt(s.spread())));
  }

  if (requested(cfg, "closure")) {
    const double c = closure_constant(trace);
    out.push_back(n < 2 ? skipped("closure", "no refinement steps")
                        : outcome("closure", c <= 20.0, "C_mesh=" + fmt(c)));
  }

  if (requested(cfg, "conformity")) out.push_back(conformity_outcome(result));
  return out;
}

namespace {

void write_plotdata(const std::filesystem::path& path, const AfemTrace& adaptive, const AfemTrace* uniform) {
  std::ofstream out(path);
  out << "series,n_elements,log_n,log_eta\n";
  auto rows = [&](const char* series, const AfemTrace& t) {
    for (const auto& r : t.records)
      if (r.eta_sq > 0.0)
        out << series << ',' << r.n_elements << ',' << format_double(std::log(double(r.n_elements))) << ','
            << format_double(0.5 * std::log(r.eta_sq)) << '\n';
  };
  rows("adaptive", adaptive);
  if (uniform) rows("uniform", *uniform);
}

void write_plot_script(const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "import csv\n"
         "import matplotlib.pyplot as plt\n\n"
         "series = {}\n"
         "with open('plotdata.csv') as f:\n"
         "    for row in csv.DictReader(f):\n"
         "        xs, ys = series.setdefault(row['series'], ([], []))\n"
         "        xs.append(float(row['log_n']))\n"
         "        ys.append(float(row['log_eta']))\n\n"
         "for name, (xs, ys) in series.items():\n"
         "    plt.plot(xs, ys, 'o-', label=name)\n"
         "plt.xlabel('log N')\n"
         "plt.ylabel('log eta')\n"
         "plt.legend()\n"
         "plt.savefig('convergence.png', dpi=150)\n";
}

void write_report(const std::filesystem::path& path, const RunConfig& cfg, const RunSummary& run,
                  const AfemResult& result, const AfemResult* uniform) {
  std::ofstream out(path);
  const auto& rs = run.trace.records;
  out << "problem " << run.trace.meta.problem << '\n'
      << "theta " << format_double(run.theta) << '\n'
      << "marking " << to_string(cfg.marking) << '\n'
      << "seed " << cfg.seed << '\n'
      << "iterations " << rs.size() << '\n';
  if (!rs.empty()) {
    out << "initial_elements " << rs.front().n_elements << '\n'
        << "final_elements " << rs.back().n_elements << '\n'
        << "initial_eta " << format_double(std::sqrt(rs.front().eta_sq)) << '\n'
        << "final_eta " << format_double(std::sqrt(rs.back().eta_sq)) << '\n';
  }
  if (std::isfinite(run.trace.noise_floor_sq))
    out << "noise_floor " << format_double(std::sqrt(run.trace.noise_floor_sq)) << '\n';
  const auto rel = fit_reliability(run.trace);
  if (std::isfinite(rel.c_rel)) out << "C_rel " << fmt(rel.c_rel) << "\nC_eff " << fmt(rel.c_eff) << '\n';
  try {
    const auto e = fit_error_rate(run.trace, cfg.rate_window);
    out << "h1_error_rate " << fmt(e.s) << '\n';
  } catch (const TraceError&) {
  }
  if (uniform) out << "uniform_iterations " << uniform->trace.records.size() << '\n';
  if (result.failure) out << "solver_failure " << *result.failure << '\n';
  for (const auto& c : run.checks) out << "check " << c.name << ' ' << status_text(c.status) << ' ' << c.detail << '\n';
  out << "result " << (run.failures.empty() ? "PASS" : "FAIL") << '\n';
}

RunSummary run_one(const RunConfig& cfg, double theta, const std::filesystem::path& dir, const ExecuteOptions& opts,
                   unsigned threads) {
  const Problem problem = opts.problem_override ? *opts.problem_override : builtin_problem(cfg.problem);
  const Mesh initial = builtin_mesh(cfg.problem);

  AfemOptions ao;
  ao.theta = theta;
  ao.marking = cfg.marking;
  ao.max_elements = cfg.max_elements;
  ao.eta_tol = cfg.eta_tol;
  ao.seed = cfg.seed;
  ao.threads = threads;

  RunSummary run;
  run.theta = theta;
  run.directory = dir;
  if (const auto* lin = std::get_if<LinearProblem>(&problem); lin && opts.log) {
    const auto r = check_ellipticity(*lin, initial);
    if (!r.ok()) *opts.log << "warning: " << problem_name(problem) << " may not be elliptic (margin " << r.margin << ")\n";
  }

  AfemResult result = run_afem(problem, initial, ao);
  std::optional<AfemResult> uniform;
  if (cfg.uniform_baseline) {
    AfemOptions uo = ao;
    uo.marking = MarkingVariant::uniform;
    uniform = run_afem(problem, initial, uo);
  }

  if (result.failure) run.failures.push_back("solver: " + *result.failure);
  if (uniform && uniform->failure) run.failures.push_back("solver_uniform: " + *uniform->failure);
  if (!result.trace.records.empty()) {
    try {
      run.checks = run_checks(cfg, problem, result, uniform ? &*uniform : nullptr, threads);
    } catch (const Error& e) {
      run.failures.push_back(std::string("checks: ") + e.what());
    }
  } else if (!cfg.checks.empty()) {
    run.failures.push_back("checks: no iteration completed");
  }
  for (const auto& c : run.checks)
    if (c.status == CheckStatus::fail) run.failures.push_back(c.name + ": " + c.detail);
  run.trace = result.trace;

  std::filesystem::create_directories(dir / "meshes");
  write_trace(dir / "trace.csv", result.trace);
  if (uniform) write_trace(dir / "trace_uniform.csv", uniform->trace);
  {
    std::ofstream t(dir / "timings.csv");
    write_timings(t, result.wall_seconds);
  }
  write_mesh(dir / "meshes" / "initial.mesh", initial);
  write_mesh(dir / "meshes" / "final.mesh", result.meshes.empty() ? initial : result.meshes.back());
  write_plotdata(dir / "plotdata.csv", result.trace, uniform ? &uniform->trace : nullptr);
  write_plot_script(dir / "plot.py");
  write_report(dir / "report.txt", cfg, run, result, uniform ? &*uniform : nullptr);
  {
    std::ofstream f(dir / "failures.txt");
    for (const auto& line : run.failures) f << line << '\n';
  }
  return run;
}

std::string theta_dir(double theta) { return "theta_" + format_double(theta); }

}  // namespace

std::vector<RunSummary> execute_runs(const RunConfig& cfg, const ExecuteOptions& opts) {
  const std::size_t runs = cfg.thetas.size();
  const unsigned workers = cfg.sequential ? 1u : std::max(1u, std::min<unsigned>(cfg.jobs, unsigned(runs)));
  const unsigned threads = cfg.sequential ? 1u : std::max(1u, cfg.jobs / workers);

  std::vector<RunSummary> summaries(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        const auto dir = runs == 1 ? cfg.output_dir : cfg.output_dir / theta_dir(cfg.thetas[i]);
        summaries[i] = run_one(cfg, cfg.thetas[i], dir, opts, threads);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summaries;
}

int execute(const RunConfig& cfg, const ExecuteOptions& opts) {
  const auto runs = execute_runs(cfg, opts);
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream f(cfg.output_dir / "failures.txt");
  bool ok = true;
  for (const auto& run : runs) {
    const std::string prefix = runs.size() == 1 ? "" : theta_dir(run.theta) + " ";
    for (const auto& line : run.failures) {
      f << prefix << line << '\n';
      ok = false;
    }
    if (opts.log) {
      *opts.log << prefix << "iterations=" << run.trace.records.size();
      if (!run.trace.records.empty())
        *opts.log << " elements=" << run.trace.records.back().n_elements
                  << " eta=" << fmt(std::sqrt(run.trace.records.back().eta_sq));
      *opts.log << '\n';
      for (const auto& c : run.checks)
        *opts.log << prefix << c.name << ' ' << status_text(c.status) << ' ' << c.detail << '\n';
    }
  }
  return ok ? 0 : 1;
}

}  // namespace afem
