#pragma once

#include "afem/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace afem {

// Plain-text mesh format:
//   NV NT
//   x y                      (NV lines)
//   v0 v1 v2 ref_slot        (NT lines)
//   va vb marker             (boundary edges until end of input)
// ref_slot is the local slot of the vertex opposite the reference edge.
// The writer always normalizes to ref_slot = 0.

void write_mesh(std::ostream& out, const Mesh& mesh);
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);

/// Throws MeshFormatError on malformed input and the load_initial_mesh
/// errors on invalid geometry.
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace afem
