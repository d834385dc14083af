#include "afem/mesh_io.hpp"

#include "afem/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace afem {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  for (const auto& p : mesh.vertices()) out << format_double(p.x()) << ' ' << format_double(p.y()) << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << " 0\n";
  for (const auto& e : mesh.boundary_edges()) out << e.a << ' ' << e.b << ' ' << e.marker << '\n';
}

void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshFormatError("cannot open " + path.string() + " for writing");
  write_mesh(out, mesh);
}

namespace {

double parse_double(const std::string& token, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw MeshFormatError("line " + std::to_string(line) + ": bad number '" + token + "'");
  return v;
}

long parse_int(const std::string& token, std::size_t line) {
  long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw MeshFormatError("line " + std::to_string(line) + ": bad integer '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  std::vector<std::size_t> line_of;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    auto tokens = split(line);
    if (tokens.empty()) continue;
    rows.push_back(std::move(tokens));
    line_of.push_back(line_no);
  }
  if (rows.empty() || rows[0].size() != 2) throw MeshFormatError("missing 'NV NT' header");
  const long nv = parse_int(rows[0][0], line_of[0]);
  const long nt = parse_int(rows[0][1], line_of[0]);
  if (nv < 0 || nt < 0) throw MeshFormatError("negative counts in header");
  if (rows.size() < static_cast<std::size_t>(1 + nv + nt)) throw MeshFormatError("truncated mesh file");

  std::vector<Point> vertices;
  std::size_t r = 1;
  for (long i = 0; i < nv; ++i, ++r) {
    if (rows[r].size() != 2) throw MeshFormatError("line " + std::to_string(line_of[r]) + ": expected 'x y'");
    vertices.emplace_back(parse_double(rows[r][0], line_of[r]), parse_double(rows[r][1], line_of[r]));
  }
  std::vector<Triangle> triangles;
  std::vector<int> slots;
  for (long i = 0; i < nt; ++i, ++r) {
    if (rows[r].size() != 4)
      throw MeshFormatError("line " + std::to_string(line_of[r]) + ": expected 'v0 v1 v2 ref_slot'");
    triangles.push_back({static_cast<int>(parse_int(rows[r][0], line_of[r])),
                         static_cast<int>(parse_int(rows[r][1], line_of[r])),
                         static_cast<int>(parse_int(rows[r][2], line_of[r]))});
    slots.push_back(static_cast<int>(parse_int(rows[r][3], line_of[r])));
  }
  std::vector<BoundaryEdge> boundary;
  for (; r < rows.size(); ++r) {
    if (rows[r].size() != 3) throw MeshFormatError("line " + std::to_string(line_of[r]) + ": expected 'va vb marker'");
    boundary.push_back({static_cast<int>(parse_int(rows[r][0], line_of[r])),
                        static_cast<int>(parse_int(rows[r][1], line_of[r])),
                        static_cast<int>(parse_int(rows[r][2], line_of[r]))});
  }
  return load_initial_mesh(vertices, triangles, slots, boundary);
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshFormatError("cannot open " + path.string());
  return read_mesh(in);
}

}  // namespace afem
