#include "prdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "prdg/errors.hpp"

namespace prdg {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> elements)
    : vertices_(std::move(vertices)), elements_(std::move(elements)) {
  const int nv = num_vertices();
  areas_.resize(elements_.size());
  diameters_.resize(elements_.size());
  centroids_.resize(elements_.size());
  for (std::size_t t = 0; t < elements_.size(); ++t) {
    auto& tri = elements_[t];
    for (int v : tri) {
      if (v < 0 || v >= nv) {
        throw TopologyError("element " + std::to_string(t) + " references vertex " +
                            std::to_string(v) + " out of range");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw TopologyError("element " + std::to_string(t) + " repeats a vertex");
    }
    double area = signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
    const double scale = (vertices_[tri[1]] - vertices_[tri[0]]).squaredNorm() +
                         (vertices_[tri[2]] - vertices_[tri[0]]).squaredNorm();
    if (std::abs(area) <= 1e-14 * scale) {
      throw TopologyError("element " + std::to_string(t) + " is degenerate");
    }
    if (area < 0) {
      std::swap(tri[1], tri[2]);
      area = -area;
      warnings_.push_back("element " + std::to_string(t) + " was clockwise and has been reoriented");
    }
    areas_[t] = area;
    const Point& a = vertices_[tri[0]];
    const Point& b = vertices_[tri[1]];
    const Point& c = vertices_[tri[2]];
    diameters_[t] = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
    centroids_[t] = (a + b + c) / 3.0;
    h_max_ = std::max(h_max_, diameters_[t]);
  }
  build_faces();
  check_hanging_nodes();
}

void Mesh::build_faces() {
  std::map<std::pair<int, int>, int> edge_index;
  elem_faces_.assign(elements_.size(), {-1, -1, -1});
  for (int t = 0; t < num_elements(); ++t) {
    const auto& tri = elements_[t];
    // Local face i is opposite local vertex i.
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3];
      const int b = tri[(i + 2) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, num_faces());
      if (inserted) {
        Face f;
        f.vertices = {a, b};
        f.elements = {t, -1};
        const Point e = vertices_[b] - vertices_[a];
        f.diameter = e.norm();
        // Counter-clockwise traversal: outward normal is the edge rotated clockwise.
        f.normal = Point(e.y(), -e.x()) / f.diameter;
        faces_.push_back(f);
      } else {
        Face& f = faces_[it->second];
        if (f.elements[1] >= 0) {
          throw TopologyError("edge (" + std::to_string(key.first) + ", " +
                              std::to_string(key.second) + ") is shared by more than two elements");
        }
        f.elements[1] = t;
      }
      elem_faces_[t][i] = it->second;
    }
  }
}

void Mesh::check_hanging_nodes() const {
  for (const Face& f : faces_) {
    if (!f.is_boundary()) continue;
    const Point& a = vertices_[f.vertices[0]];
    const Point& b = vertices_[f.vertices[1]];
    const Point e = b - a;
    const double len2 = e.squaredNorm();
    for (int v = 0; v < num_vertices(); ++v) {
      if (v == f.vertices[0] || v == f.vertices[1]) continue;
      const Point d = vertices_[v] - a;
      const double s = d.dot(e) / len2;
      if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
      const double cross = e.x() * d.y() - e.y() * d.x();
      if (std::abs(cross) <= 1e-12 * len2) {
        throw TopologyError("vertex " + std::to_string(v) + " is a hanging node on edge (" +
                            std::to_string(f.vertices[0]) + ", " + std::to_string(f.vertices[1]) +
                            ")");
      }
    }
  }
}

int Mesh::num_boundary_faces() const {
  return static_cast<int>(
      std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.is_boundary(); }));
}

int Mesh::neighbor(int t, int f) const {
  const Face& face = faces_[f];
  return face.elements[0] == t ? face.elements[1] : face.elements[0];
}

Mesh build_structured(int n) {
  if (n < 1) throw DegenerateInput("build_structured: n must be positive");
  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    }
  }
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<Mesh::Triangle> elements;
  elements.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        elements.push_back({v00, v10, v11});
        elements.push_back({v00, v11, v01});
      } else {
        elements.push_back({v00, v10, v01});
        elements.push_back({v10, v11, v01});
      }
    }
  }
  return Mesh(std::move(vertices), std::move(elements));
}

Mesh refine_uniform(const Mesh& mesh) {
  std::vector<Point> vertices = mesh.vertices();
  std::vector<int> midpoint(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& face = mesh.face(f);
    midpoint[f] = static_cast<int>(vertices.size());
    vertices.push_back(0.5 * (mesh.vertex(face.vertices[0]) + mesh.vertex(face.vertices[1])));
  }
  std::vector<Mesh::Triangle> elements;
  elements.reserve(4 * static_cast<std::size_t>(mesh.num_elements()));
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const auto& tri = mesh.element(t);
    const auto& fc = mesh.element_faces(t);
    // Midpoint opposite to local vertex i.
    const int m0 = midpoint[fc[0]], m1 = midpoint[fc[1]], m2 = midpoint[fc[2]];
    elements.push_back({tri[0], m2, m1});
    elements.push_back({m2, tri[1], m0});
    elements.push_back({m1, m0, tri[2]});
    elements.push_back({m0, m1, m2});
  }
  return Mesh(std::move(vertices), std::move(elements));
}

std::vector<int> patch_of_element(const Mesh& mesh, int t) {
  std::vector<int> patch{t};
  for (int f : mesh.element_faces(t)) {
    const int nb = mesh.neighbor(t, f);
    if (nb >= 0) patch.push_back(nb);
  }
  std::sort(patch.begin(), patch.end());
  return patch;
}

namespace {

/// Yields whitespace-separated tokens with '#' comments stripped, tracking
/// line numbers for diagnostics.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  bool next(std::string& token) {
    while (!(line_ >> token)) {
      std::string raw;
      if (!std::getline(in_, raw)) return false;
      ++line_no_;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      line_.clear();
      line_.str(raw);
    }
    return true;
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::istringstream line_;
  int line_no_ = 0;
};

template <typename T>
T parse_number(TokenReader& reader, const char* what) {
  std::string token;
  if (!reader.next(token)) {
    throw ParseError(std::string("unexpected end of mesh file while reading ") + what);
  }
  std::istringstream ss(token);
  T value{};
  ss >> value;
  if (ss.fail() || !ss.eof()) {
    throw ParseError("line " + std::to_string(reader.line()) + ": cannot parse " + what + " from '" +
                     token + "'");
  }
  return value;
}

}  // namespace

Mesh load_mesh(std::istream& in) {
  TokenReader reader(in);
  const long nv = parse_number<long>(reader, "vertex count");
  const long ne = parse_number<long>(reader, "element count");
  if (nv < 3 || ne < 1) throw ParseError("mesh header must declare nv >= 3 and ne >= 1");
  std::vector<Point> vertices(nv);
  for (auto& v : vertices) {
    v.x() = parse_number<double>(reader, "x coordinate");
    v.y() = parse_number<double>(reader, "y coordinate");
  }
  std::vector<Mesh::Triangle> elements(ne);
  for (auto& tri : elements) {
    for (int& i : tri) i = parse_number<int>(reader, "vertex index");
  }
  std::string extra;
  if (reader.next(extra)) {
    throw ParseError("line " + std::to_string(reader.line()) + ": trailing data '" + extra + "'");
  }
  return Mesh(std::move(vertices), std::move(elements));
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.elements()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace prdg
