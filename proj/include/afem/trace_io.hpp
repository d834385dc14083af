#pragma once

#include "afem/driver.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>

namespace afem {

/// Column order of trace.csv.
std::span<const std::string_view> trace_columns();

/// One row per iteration, shortest round-trip decimals, NaN for missing.
void write_trace(std::ostream& out, const AfemTrace& trace);
void write_trace(const std::filesystem::path& path, const AfemTrace& trace);

/// Throws TraceError on a malformed file.
AfemTrace read_trace(std::istream& in);
AfemTrace read_trace(const std::filesystem::path& path);

/// level,seconds
void write_timings(std::ostream& out, std::span<const double> wall_seconds);

}  // namespace afem
