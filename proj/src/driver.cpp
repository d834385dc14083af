#include "afem/driver.hpp"

#include "afem/errors.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace afem {

std::string_view to_string(MarkingVariant v) {
  switch (v) {
    case MarkingVariant::minimal: return "min";
    case MarkingVariant::binned: return "binned";
    case MarkingVariant::uniform: return "uniform";
  }
  return "min";
}

MarkingVariant parse_marking(std::string_view text) {
  if (text == "min") return MarkingVariant::minimal;
  if (text == "binned") return MarkingVariant::binned;
  if (text == "uniform") return MarkingVariant::uniform;
  throw InvalidArgument("unknown marking variant '" + std::string(text) + "'");
}

SolveOutcome solve_problem(const Mesh& mesh, const Problem& problem, const DiscreteSolution* warm_start,
                           const NonlinearOptions& options, unsigned threads) {
  if (const auto* lin = std::get_if<LinearProblem>(&problem))
    return {solve_linear(assemble_linear(mesh, *lin, AssemblyOptions{threads})), 0};
  const auto& nl = std::get<NonlinearProblem>(problem);
  NonlinearOptions opts = options;
  opts.threads = threads;
  const DiscreteSolution start =
      warm_start && warm_start->mesh_id == mesh.id() ? *warm_start : zero_solution(mesh);
  auto r = solve_nonlinear(mesh, nl, start, opts);
  return {std::move(r.solution), r.newton_steps + r.fallback_steps};
}

namespace {

std::vector<std::size_t> select(const EstimatorReport& report, const AfemOptions& options) {
  switch (options.marking) {
    case MarkingVariant::minimal: return mark_min(report.indicators_sq, options.theta).marked;
    case MarkingVariant::binned: return mark_binned(report.indicators_sq, options.theta).marked;
    case MarkingVariant::uniform: {
      std::vector<std::size_t> all(report.indicators_sq.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
  }
  return {};
}

}  // namespace

AfemResult run_afem(const Problem& problem, const Mesh& initial_mesh, const AfemOptions& options) {
  if (!(options.theta > 0.0 && options.theta <= 1.0)) throw InvalidArgument("theta must lie in (0, 1]");
  if (options.max_elements < initial_mesh.num_triangles())
    throw InvalidArgument("max_elements is smaller than the initial mesh");

  AfemResult result;
  result.trace.meta = {problem_name(problem), options.theta, options.marking, options.seed};
  const auto& exact = exact_solution(problem);
  const AssemblyOptions assembly{options.threads};

  Mesh mesh = initial_mesh;
  std::optional<DiscreteSolution> warm;
  for (int level = 0; level < options.max_iterations; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveOutcome solved;
    try {
      solved = solve_problem(mesh, problem, warm ? &*warm : nullptr, options.nonlinear, options.threads);
    } catch (const SolverError& e) {
      result.failure = std::string("level ") + std::to_string(level) + ": " + e.what();
      break;
    }
    auto report = estimate(mesh, solved.solution, problem, assembly);

    IterationRecord rec;
    rec.level = static_cast<std::size_t>(level);
    rec.n_elements = mesh.num_triangles();
    rec.eta_sq = report.eta_sq_total;
    rec.osc_sq = report.osc_sq_total;
    rec.solver_iterations = solved.iterations;
    if (exact) rec.h1_err_sq = h1_error_sq(mesh, solved.solution, *exact);

    if (!result.solutions.empty()) {
      auto& prev = result.trace.records.back();
      const auto moved = transfer(result.meshes.back(), result.solutions.back(), mesh);
      prev.diff_grad_sq = grad_distance_sq(mesh, solved.solution, moved);
      prev.diff_energy_sq = energy_products(mesh, problem, solved.solution, moved).dl_sq;
    }

    result.trace.records.push_back(rec);
    result.meshes.push_back(mesh);
    result.solutions.push_back(solved.solution);
    result.reports.push_back(std::move(report));

    const double eta = std::sqrt(rec.eta_sq);
    bool stop = rec.eta_sq == 0.0 || (options.eta_tol && eta <= *options.eta_tol);
    if (!stop) {
      auto marked = select(result.reports.back(), options);
      auto [refined, record] = refine_nvb(mesh, marked);
      if (refined.num_triangles() > options.max_elements) {
        stop = true;
      } else {
        auto& back = result.trace.records.back();
        back.n_marked = record.marked.size();
        back.n_refined = record.refined.size();
        back.refined_eta_sq = local_sum(result.reports.back(), record.refined);
        result.refinements.push_back(std::move(record));
        if (is_nonlinear(problem)) warm = transfer(mesh, result.solutions.back(), refined);
        mesh = std::move(refined);
      }
    }
    result.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (stop) break;
  }
  return result;
}

ReferenceSolution compute_reference(const Problem& problem, const Mesh& finest, const DiscreteSolution& finest_solution,
                                    int levels, const NonlinearOptions& options, unsigned threads) {
  Mesh fine = overlay(finest, refine_uniform(finest, levels));
  DiscreteSolution warm = transfer(finest, finest_solution, fine);
  auto solved = solve_problem(fine, problem, &warm, options, threads);
  return {std::move(fine), std::move(solved.solution)};
}

void attach_reference_errors(AfemResult& result, const Problem& problem, const ReferenceSolution& reference) {
  auto& records = result.trace.records;
  for (std::size_t l = 0; l < records.size(); ++l) {
    const auto moved = transfer(result.meshes[l], result.solutions[l], reference.mesh);
    records[l].energy_err_sq = energy_products(reference.mesh, problem, reference.solution, moved).dl_sq;
  }
  if (!records.empty()) result.trace.noise_floor_sq = records.back().energy_err_sq;
}

}  // namespace afem
