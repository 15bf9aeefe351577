#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace prdg {

using Point = Eigen::Vector2d;

/// Mesh edge. For interior faces the normal points out of elements[0] into
/// elements[1]; for boundary faces elements[1] == -1 and the normal points out
/// of the domain.
struct Face {
  std::array<int, 2> vertices{};
  std::array<int, 2> elements{-1, -1};
  Point normal = Point::Zero();
  double diameter = 0.0;

  bool is_boundary() const { return elements[1] < 0; }
};

/// Conforming triangular mesh of a polygonal domain. Immutable once built.
class Mesh {
 public:
  using Triangle = std::array<int, 3>;

  /// Builds faces and normals from connectivity. Clockwise triangles are
  /// reoriented (a warning is recorded); degenerate triangles, edges shared by
  /// more than two triangles and hanging nodes raise TopologyError.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> elements);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_boundary_faces() const;

  const Point& vertex(int i) const { return vertices_[i]; }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Triangle& element(int t) const { return elements_[t]; }
  const std::vector<Triangle>& elements() const { return elements_; }
  const Face& face(int f) const { return faces_[f]; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::array<int, 3>& element_faces(int t) const { return elem_faces_[t]; }

  double element_area(int t) const { return areas_[t]; }
  /// Longest edge of the triangle.
  double element_diameter(int t) const { return diameters_[t]; }
  const Point& centroid(int t) const { return centroids_[t]; }
  double h_max() const { return h_max_; }

  /// Element sharing face f with t, or -1 across the boundary.
  int neighbor(int t, int f) const;

  /// Diagnostics collected while normalizing the input (e.g. reoriented
  /// elements).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void build_faces();
  void check_hanging_nodes() const;

  std::vector<Point> vertices_;
  std::vector<Triangle> elements_;
  std::vector<Face> faces_;
  std::vector<std::array<int, 3>> elem_faces_;
  std::vector<double> areas_;
  std::vector<double> diameters_;
  std::vector<Point> centroids_;
  double h_max_ = 0.0;
  std::vector<std::string> warnings_;
};

/// Triangulation of (0,1)^2 with n x n squares, each cut by one diagonal whose
/// direction alternates in a checkerboard pattern: 2n^2 right triangles,
/// h = sqrt(2)/n.
Mesh build_structured(int n);

/// Red refinement: every triangle is split into four congruent children
/// through its edge midpoints.
Mesh refine_uniform(const Mesh& mesh);

/// Element t together with its face neighbours, sorted ascending.
std::vector<int> patch_of_element(const Mesh& mesh, int t);

/// Reads the whitespace-separated text format: "nv ne", nv lines "x y",
/// ne lines "i j k" (0-based). '#' starts a comment.
Mesh load_mesh(std::istream& in);

/// Writes the text format with 17 significant digits.
void write_mesh(std::ostream& out, const Mesh& mesh);

}  // namespace prdg
