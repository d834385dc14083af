#include "afem/trace_io.hpp"

#include "afem/errors.hpp"
#include "afem/mesh_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace afem {

namespace {

constexpr std::array<std::string_view, 17> kColumns = {
    "problem",        "theta",         "marking",        "seed",          "level",       "n_elements",
    "n_marked",       "n_refined",     "eta_sq",         "osc_sq",        "refined_eta_sq", "diff_grad_sq",
    "diff_energy_sq", "energy_err_sq", "h1_err_sq",      "noise_floor_sq", "solver_iterations"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse(const std::string& s, std::string_view column, std::size_t row) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw TraceError("row " + std::to_string(row) + ": bad value '" + s + "' in column " + std::string(column));
  return v;
}

}  // namespace

std::span<const std::string_view> trace_columns() { return kColumns; }

void write_trace(std::ostream& out, const AfemTrace& trace) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  const auto& m = trace.meta;
  for (const auto& r : trace.records) {
    out << m.problem << ',' << format_double(m.theta) << ',' << to_string(m.marking) << ',' << m.seed << ','
        << r.level << ',' << r.n_elements << ',' << r.n_marked << ',' << r.n_refined << ','
        << format_double(r.eta_sq) << ',' << format_double(r.osc_sq) << ',' << format_double(r.refined_eta_sq) << ','
        << format_double(r.diff_grad_sq) << ',' << format_double(r.diff_energy_sq) << ','
        << format_double(r.energy_err_sq) << ',' << format_double(r.h1_err_sq) << ','
        << format_double(trace.noise_floor_sq) << ',' << r.solver_iterations << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const AfemTrace& trace) {
  std::ofstream out(path);
  if (!out) throw TraceError("cannot open " + path.string() + " for writing");
  write_trace(out, trace);
}

AfemTrace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceError("missing header");
  const auto header = split(line);
  if (header.size() != kColumns.size() || !std::equal(header.begin(), header.end(), kColumns.begin()))
    throw TraceError("unexpected trace header");
  AfemTrace trace;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto f = split(line);
    if (f.size() != kColumns.size()) throw TraceError("row " + std::to_string(row) + ": wrong field count");
    RunMetadata meta;
    meta.problem = f[0];
    meta.theta = parse<double>(f[1], kColumns[1], row);
    try {
      meta.marking = parse_marking(f[2]);
    } catch (const InvalidArgument& e) {
      throw TraceError("row " + std::to_string(row) + ": " + e.what());
    }
    meta.seed = parse<std::uint64_t>(f[3], kColumns[3], row);
    if (row == 1)
      trace.meta = meta;
    else if (meta.problem != trace.meta.problem || meta.marking != trace.meta.marking || meta.seed != trace.meta.seed)
      throw TraceError("row " + std::to_string(row) + ": metadata differs from the first row");
    IterationRecord r;
    r.level = parse<std::size_t>(f[4], kColumns[4], row);
    r.n_elements = parse<std::size_t>(f[5], kColumns[5], row);
    r.n_marked = parse<std::size_t>(f[6], kColumns[6], row);
    r.n_refined = parse<std::size_t>(f[7], kColumns[7], row);
    double* fields[] = {&r.eta_sq,         &r.osc_sq,        &r.refined_eta_sq, &r.diff_grad_sq,
                        &r.diff_energy_sq, &r.energy_err_sq, &r.h1_err_sq};
    for (std::size_t k = 0; k < 7; ++k) *fields[k] = parse<double>(f[8 + k], kColumns[8 + k], row);
    trace.noise_floor_sq = parse<double>(f[15], kColumns[15], row);
    r.solver_iterations = parse<int>(f[16], kColumns[16], row);
    trace.records.push_back(r);
  }
  return trace;
}

AfemTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open " + path.string());
  return read_trace(in);
}

void write_timings(std::ostream& out, std::span<const double> wall_seconds) {
  out << "level,seconds\n";
  for (std::size_t l = 0; l < wall_seconds.size(); ++l) out << l << ',' << format_double(wall_seconds[l]) << '\n';
}

}  // namespace afem
