#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sofsat/types.hpp"

namespace sofsat {

// Axis-aligned box {w : |w_i| <= b_i}.
//
// Vertices are listed in lexicographic sign order with the first coordinate
// varying slowest: for two coordinates (-,-), (-,+), (+,-), (+,+).
// Facets are listed per coordinate as +e_i/b_i followed by -e_i/b_i.
class BoxPolytope {
 public:
  BoxPolytope() = default;
  explicit BoxPolytope(Vector bounds);

  Index dim() const { return bounds_.size(); }
  const Vector& bounds() const { return bounds_; }

  std::vector<Vector> vertices() const;
  std::vector<Vector> facets() const;

 private:
  Vector bounds_;
};

// Polytope containing the origin in its interior, stored as a vertex list and
// facet vectors a_k with the set {w : a_k' w <= 1 for all k}.
// Boxes keep their bounds so samplers and grids can use them directly.
class Polytope {
 public:
  Polytope() : Polytope(BoxPolytope(Vector(0))) {}
  Polytope(const BoxPolytope& box);  // NOLINT(google-explicit-constructor)
  Polytope(Index dim, std::vector<Vector> vertices, std::vector<Vector> facets);

  Index dim() const { return dim_; }
  const std::vector<Vector>& vertices() const { return vertices_; }
  const std::vector<Vector>& facets() const { return facets_; }
  const std::optional<BoxPolytope>& box() const { return box_; }

  bool contains(const Vector& w, double tol = 1e-12) const;

  // Half-widths of the smallest origin-centered box containing every vertex.
  Vector bounding_half_widths() const;

  // Random point: uniform for boxes, random convex combination of vertices
  // otherwise.
  Vector sample(std::mt19937_64& rng) const;

 private:
  Index dim_ = 0;
  std::vector<Vector> vertices_;
  std::vector<Vector> facets_;
  std::optional<BoxPolytope> box_;
};

struct ParameterPoint {
  Vector x;
  Vector delta;
};

// Cartesian product of the vertex lists, states varying slowest.
std::vector<ParameterPoint> product_vertices(const Polytope& states,
                                             const Polytope& params);

}  // namespace sofsat
