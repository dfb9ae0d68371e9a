#include "sofsat/dar_model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace sofsat {

namespace {

std::string shape_str(Index r, Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void expect_affine(const AffineMatrix& a, const char* name, Index rows,
                   Index cols, const Dims& d) {
  if (a.rows() != rows || a.cols() != cols)
    throw InputError(std::string("model: ") + name + " is " +
                     shape_str(a.rows(), a.cols()) + ", expected " +
                     shape_str(rows, cols));
  if (a.num_states() != d.n || a.num_params() != d.l)
    throw InputError(std::string("model: ") + name + " has " +
                     std::to_string(a.num_states()) + " state and " +
                     std::to_string(a.num_params()) +
                     " uncertainty coefficients, expected " +
                     std::to_string(d.n) + " and " + std::to_string(d.l));
}

void expect_matrix(const Matrix& a, const char* name, Index rows, Index cols) {
  if (a.rows() != rows || a.cols() != cols)
    throw InputError(std::string("model: ") + name + " is " +
                     shape_str(a.rows(), a.cols()) + ", expected " +
                     shape_str(rows, cols));
}

// 1-norm condition number; infinity when singular.
double condition_number(const Matrix& a, Matrix* inverse) {
  if (a.rows() == 0) {
    if (inverse) *inverse = a;
    return 1.0;
  }
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  Matrix inv = lu.inverse();
  const double cond = a.cwiseAbs().colwise().sum().maxCoeff() *
                      inv.cwiseAbs().colwise().sum().maxCoeff();
  if (inverse) *inverse = std::move(inv);
  return cond;
}

std::string point_str(const Vector& x, const Vector& delta) {
  std::ostringstream s;
  s << "x=(" << x.transpose() << ")";
  if (delta.size() > 0) s << " delta=(" << delta.transpose() << ")";
  return s.str();
}

}  // namespace

double Monomial::evaluate(const Vector& x) const {
  double v = coeff;
  for (size_t i = 0; i < powers.size(); ++i)
    if (powers[i] != 0) v *= std::pow(x[static_cast<Index>(i)], powers[i]);
  return v;
}

std::string Monomial::to_string() const {
  std::ostringstream s;
  s.precision(17);
  bool first = true;
  if (coeff != 1.0) {
    s << coeff;
    first = false;
  }
  for (size_t i = 0; i < powers.size(); ++i) {
    if (powers[i] == 0) continue;
    if (!first) s << '*';
    s << 'x' << (i + 1);
    if (powers[i] != 1) s << '^' << powers[i];
    first = false;
  }
  if (first) s << coeff;
  return s.str();
}

PiOracle PiOracle::from_monomials(std::vector<Monomial> entries) {
  PiOracle o([entries](const Vector& x, const Vector&) {
    Vector pi(static_cast<Index>(entries.size()));
    for (size_t k = 0; k < entries.size(); ++k)
      pi[static_cast<Index>(k)] = entries[k].evaluate(x);
    return pi;
  });
  o.monomials_ = std::move(entries);
  return o;
}

DarModel::DarModel(DarData data) : d_(std::move(data)) {
  const Dims& d = d_.dims;
  if (d.n <= 0) throw InputError("model: n must be positive");
  if (d.m <= 0) throw InputError("model: m must be positive");
  if (d.p <= 0) throw InputError("model: p must be positive");
  if (d.n_pi < 0 || d.l < 0 || d.n_pi_x < 0)
    throw InputError("model: dimensions must be nonnegative");
  if (d.n_pi_x > d.n_pi) throw InputError("model: n_pi_x exceeds n_pi");

  expect_affine(d_.A1, "A1", d.n, d.n, d);
  expect_affine(d_.A2, "A2", d.n, d.n_pi, d);
  expect_affine(d_.A3, "A3", d.n, d.m, d);
  expect_affine(d_.Ups1, "Ups1", d.n_pi, d.n, d);
  expect_affine(d_.Ups2, "Ups2", d.n_pi, d.n_pi, d);
  expect_affine(d_.Ups3, "Ups3", d.n_pi, d.m, d);
  expect_matrix(d_.C1, "C1", d.p, d.n);
  expect_matrix(d_.C2, "C2", d.p, d.n_pi);
  if (d.n_pi_x > 0) {
    expect_affine(d_.Sigma1, "Sigma1", d.n_pi_x, d.n, d);
    expect_affine(d_.Sigma2, "Sigma2", d.n_pi_x, d.n_pi_x, d);
  } else {
    d_.Sigma1 = AffineMatrix::zero(0, d.n, d.n, d.l);
    d_.Sigma2 = AffineMatrix::zero(0, 0, d.n, d.l);
  }

  if (d_.u_bar.size() != d.m)
    throw InputError("model: u_bar has " + std::to_string(d_.u_bar.size()) +
                     " entries, expected " + std::to_string(d.m));
  for (Index i = 0; i < d.m; ++i)
    if (!(d_.u_bar[i] > 0.0) || !std::isfinite(d_.u_bar[i]))
      throw InputError("model: u_bar[" + std::to_string(i) +
                       "] must be positive and finite");

  if (d_.X.dim() != d.n)
    throw InputError("model: state polytope has dimension " +
                     std::to_string(d_.X.dim()) + ", expected " +
                     std::to_string(d.n));
  if (d_.D.dim() != d.l)
    throw InputError("model: uncertainty polytope has dimension " +
                     std::to_string(d_.D.dim()) + ", expected " +
                     std::to_string(d.l));
  if (d_.X.facets().empty())
    throw InputError("model: state polytope needs facet vectors");

  if (!d_.C2.isZero(0.0) && !d_.Ups3.is_zero())
    throw InputError(
        "model: C2 != 0 together with Ups3 != 0 makes the output depend on "
        "sat(v) (implicit loop); not supported");
}

Vector saturate(const Vector& v, const Vector& u_bar) {
  return v.cwiseMax(-u_bar).cwiseMin(u_bar);
}

Vector deadzone(const Vector& v, const Vector& u_bar) {
  return saturate(v, u_bar) - v;
}

Vector recover_pi(const DarModel& model, const Vector& x, const Vector& delta,
                  const Vector& u_sat, double cond_cap) {
  if (model.dims().n_pi == 0) return Vector(0);
  const Matrix ups2 = model.Ups2().evaluate(x, delta);
  Matrix inv;
  const double cond = condition_number(ups2, &inv);
  if (!(cond <= cond_cap))
    throw WellPosednessError("Ups2 is ill-conditioned (cond " +
                                 std::to_string(cond) + ") at " +
                                 point_str(x, delta),
                             x, delta, cond);
  Vector rhs = model.Ups1().evaluate(x, delta) * x;
  if (model.pi_depends_on_input())
    rhs.noalias() += model.Ups3().evaluate(x, delta) * u_sat;
  return -inv * rhs;
}

LoopSignals closed_loop(const DarModel& model, const Matrix& K, const Vector& x,
                        const Vector& delta, double cond_cap) {
  const Dims& d = model.dims();
  if (x.size() != d.n) throw InputError("closed loop: state has wrong size");
  if (K.rows() != d.m || K.cols() != d.p)
    throw InputError("closed loop: gain must be " + shape_str(d.m, d.p));
  LoopSignals s;
  if (model.pi_depends_on_input()) {
    // C2 == 0 here, so y does not depend on pi.
    s.y = model.C1() * x;
    s.v = K * s.y;
    s.u = saturate(s.v, model.u_bar());
    s.pi = recover_pi(model, x, delta, s.u, cond_cap);
  } else {
    s.pi = recover_pi(model, x, delta, Vector::Zero(d.m), cond_cap);
    s.y = model.C1() * x + model.C2() * s.pi;
    s.v = K * s.y;
    s.u = saturate(s.v, model.u_bar());
  }
  s.saturated = (s.u.array() != s.v.array()).any();
  s.x_dot = model.A1().evaluate(x, delta) * x + model.A3().evaluate(x, delta) * s.u;
  if (d.n_pi > 0) s.x_dot.noalias() += model.A2().evaluate(x, delta) * s.pi;
  return s;
}

Vector closed_loop_derivative(const DarModel& model, const Matrix& K,
                              const Vector& x, const Vector& delta,
                              double cond_cap) {
  return closed_loop(model, K, x, delta, cond_cap).x_dot;
}

WellPosednessReport check_well_posedness(const DarModel& model,
                                         int grid_per_axis, double cond_cap) {
  const Dims& d = model.dims();
  WellPosednessReport rep;
  auto visit = [&](const Vector& x, const Vector& delta, const char* where) {
    if (!rep.pass) return;
    ++rep.points_checked;
    double cond = condition_number(model.Ups2().evaluate(x, delta), nullptr);
    const char* which = "Ups2";
    if (d.n_pi_x > 0) {
      const double c2 = condition_number(model.Sigma2().evaluate(x, delta), nullptr);
      if (!(c2 <= cond)) {
        cond = c2;
        which = "Sigma2";
      }
    }
    if (!(cond <= rep.worst_condition)) {
      rep.worst_condition = cond;
      rep.worst_x = x;
      rep.worst_delta = delta;
    }
    if (!(cond <= cond_cap)) {
      rep.pass = false;
      std::ostringstream msg;
      msg << which << " singular or ill-conditioned (cond " << cond << ") at "
          << where << " point " << point_str(x, delta);
      rep.message = msg.str();
    }
  };

  for (const auto& pt : product_vertices(model.X(), model.D()))
    visit(pt.x, pt.delta, "vertex");

  if (grid_per_axis >= 2 && rep.pass) {
    const Vector hx = model.X().bounding_half_widths();
    const Vector hd = model.D().bounding_half_widths();
    const Index dim = d.n + d.l;
    std::vector<int> idx(static_cast<size_t>(dim), 0);
    Vector x(d.n), delta(d.l);
    auto coord = [&](Index k, int i) {
      const double h = k < d.n ? hx[k] : hd[k - d.n];
      return -h + 2.0 * h * i / (grid_per_axis - 1);
    };
    while (rep.pass) {
      for (Index k = 0; k < dim; ++k) {
        const double c = coord(k, idx[static_cast<size_t>(k)]);
        if (k < d.n) x[k] = c; else delta[k - d.n] = c;
      }
      if (model.X().contains(x, 1e-12) && model.D().contains(delta, 1e-12))
        visit(x, delta, "grid");
      Index k = dim - 1;
      while (k >= 0 && ++idx[static_cast<size_t>(k)] == grid_per_axis) {
        idx[static_cast<size_t>(k)] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }
  if (rep.pass) {
    std::ostringstream msg;
    msg << "well-posed at " << rep.points_checked
        << " sampled points, worst condition number " << rep.worst_condition;
    rep.message = msg.str();
  }
  return rep;
}

double ResidualReport::max_residual() const {
  return std::max({max_constraint_residual, max_pi_mismatch, max_null_residual});
}

ResidualReport residual_check(const DarModel& model,
                              const std::vector<ResidualSample>& samples) {
  if (!model.pi_oracle())
    throw InputError("residual check: model has no pi oracle");
  const Dims& d = model.dims();
  ResidualReport rep;
  for (const auto& s : samples) {
    const Vector pi_o = (*model.pi_oracle())(s.x, s.u);
    if (pi_o.size() != d.n_pi)
      throw InputError("residual check: oracle returned " +
                       std::to_string(pi_o.size()) + " entries, expected " +
                       std::to_string(d.n_pi));
    const Vector r = model.Ups1().evaluate(s.x, s.delta) * s.x +
                     model.Ups2().evaluate(s.x, s.delta) * pi_o +
                     model.Ups3().evaluate(s.x, s.delta) * s.u;
    const Vector pi_r = recover_pi(model, s.x, s.delta, s.u);
    rep.max_constraint_residual = std::max(rep.max_constraint_residual, r.norm());
    rep.max_pi_mismatch = std::max(rep.max_pi_mismatch, (pi_o - pi_r).norm());
    if (d.n_pi_x > 0) {
      const Vector nr = model.Sigma1().evaluate(s.x, s.delta) * s.x +
                        model.Sigma2().evaluate(s.x, s.delta) * pi_r.head(d.n_pi_x);
      rep.max_null_residual = std::max(rep.max_null_residual, nr.norm());
    }
    ++rep.samples;
  }
  return rep;
}

std::vector<ResidualSample> random_residual_samples(const DarModel& model,
                                                    size_t count,
                                                    uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<ResidualSample> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    ResidualSample s;
    s.x = model.X().sample(rng);
    s.delta = model.D().sample(rng);
    s.u.resize(model.dims().m);
    for (Index i = 0; i < s.u.size(); ++i) s.u[i] = unit(rng) * model.u_bar()[i];
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sofsat
