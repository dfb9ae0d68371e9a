#include "sofsat/polytope.hpp"

#include <sstream>

namespace sofsat {

BoxPolytope::BoxPolytope(Vector bounds) : bounds_(std::move(bounds)) {
  for (Index i = 0; i < bounds_.size(); ++i) {
    if (!(bounds_[i] > 0.0) || !std::isfinite(bounds_[i])) {
      std::ostringstream msg;
      msg << "box polytope: bound " << i << " is " << bounds_[i]
          << ", must be positive and finite";
      throw InputError(msg.str());
    }
  }
}

std::vector<Vector> BoxPolytope::vertices() const {
  const Index d = dim();
  const size_t count = size_t{1} << d;
  std::vector<Vector> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    Vector v(d);
    for (Index i = 0; i < d; ++i) {
      const bool plus = (k >> (d - 1 - i)) & 1u;
      v[i] = plus ? bounds_[i] : -bounds_[i];
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Vector> BoxPolytope::facets() const {
  std::vector<Vector> out;
  out.reserve(2 * dim());
  for (Index i = 0; i < dim(); ++i) {
    Vector a = Vector::Zero(dim());
    a[i] = 1.0 / bounds_[i];
    out.push_back(a);
    out.push_back(-a);
  }
  return out;
}

Polytope::Polytope(const BoxPolytope& box)
    : dim_(box.dim()),
      vertices_(box.vertices()),
      facets_(box.facets()),
      box_(box) {}

Polytope::Polytope(Index dim, std::vector<Vector> vertices,
                   std::vector<Vector> facets)
    : dim_(dim), vertices_(std::move(vertices)), facets_(std::move(facets)) {
  if (vertices_.empty())
    throw InputError("polytope: vertex list is empty");
  for (size_t k = 0; k < vertices_.size(); ++k)
    if (vertices_[k].size() != dim_)
      throw InputError("polytope: vertex " + std::to_string(k) +
                       " has wrong dimension");
  for (size_t k = 0; k < facets_.size(); ++k)
    if (facets_[k].size() != dim_)
      throw InputError("polytope: facet " + std::to_string(k) +
                       " has wrong dimension");
  for (size_t k = 0; k < vertices_.size(); ++k)
    if (!contains(vertices_[k], 1e-9))
      throw InputError("polytope: vertex " + std::to_string(k) +
                       " violates a facet inequality");
}

bool Polytope::contains(const Vector& w, double tol) const {
  if (w.size() != dim_) return false;
  for (const auto& a : facets_)
    if (a.dot(w) > 1.0 + tol) return false;
  return true;
}

Vector Polytope::bounding_half_widths() const {
  if (box_) return box_->bounds();
  Vector h = Vector::Zero(dim_);
  for (const auto& v : vertices_) h = h.cwiseMax(v.cwiseAbs());
  return h;
}

Vector Polytope::sample(std::mt19937_64& rng) const {
  if (box_) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vector w(dim_);
    for (Index i = 0; i < dim_; ++i) w[i] = unit(rng) * box_->bounds()[i];
    return w;
  }
  std::exponential_distribution<double> expo(1.0);
  Vector w = Vector::Zero(dim_);
  double total = 0.0;
  for (const auto& v : vertices_) {
    const double weight = expo(rng);
    w += weight * v;
    total += weight;
  }
  return w / total;
}

std::vector<ParameterPoint> product_vertices(const Polytope& states,
                                             const Polytope& params) {
  std::vector<ParameterPoint> out;
  out.reserve(states.vertices().size() * params.vertices().size());
  for (const auto& x : states.vertices())
    for (const auto& d : params.vertices()) out.push_back({x, d});
  return out;
}

}  // namespace sofsat
