#include "sofsat/verifier.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sofsat/synthesis.hpp"

namespace sofsat {

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::string format_point(const Vector& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

Matrix inverse_sqrt(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (P + P.transpose()));
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw InputError("ellipsoid matrix is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Vector unit_direction(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector u(n);
  do {
    for (Index i = 0; i < n; ++i) u[i] = g(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

// Points of D to pair with state samples: the vertices, or the empty vector.
std::vector<Vector> delta_vertices(const DarModel& model) {
  if (model.dims().l == 0) return {Vector(0)};
  return model.D().vertices();
}

Matrix diag_inverse(const Matrix& W) {
  return W.diagonal().cwiseInverse().asDiagonal();
}

}  // namespace

std::vector<Vector> ellipsoid_boundary_samples(const Matrix& P, size_t count,
                                               std::mt19937_64& rng) {
  const Matrix T = inverse_sqrt(P);
  std::vector<Vector> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(T * unit_direction(P.rows(), rng));
  return out;
}

std::vector<Vector> ellipsoid_interior_samples(const Matrix& P, size_t count,
                                               std::mt19937_64& rng) {
  const Matrix T = inverse_sqrt(P);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(P.rows());
  std::vector<Vector> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const double r = std::pow(uni(rng), inv_n);
    out.push_back(T * (r * unit_direction(P.rows(), rng)));
  }
  return out;
}

CheckResult check_sector_inclusion(const DarModel& model, const Certificate& cert,
                                   size_t n_samples, uint64_t seed) {
  const Dims& d = model.dims();
  CheckResult res;
  res.name = "sector-inclusion";
  res.worst_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const auto xs = ellipsoid_boundary_samples(cert.P, n_samples, rng);
  const auto deltas = delta_vertices(model);
  const Matrix Winv = diag_inverse(cert.W);
  const Vector u0 = Vector::Zero(d.m);
  for (const Vector& x : xs) {
    for (const Vector& delta : deltas) {
      Vector pi_x(0);
      try {
        pi_x = recover_pi(model, x, delta, u0).head(d.n_pi_x);
      } catch (const WellPosednessError& e) {
        res.samples++;
        res.worst_margin = -std::numeric_limits<double>::infinity();
        res.detail = std::string("ill-posed at x = ") + format_point(x) + ": " + e.what();
        res.pass = false;
        return res;
      }
      Vector s = Winv * (cert.gbar_at(x, delta) * x);
      if (d.n_pi_x > 0) s += Winv * (cert.gbar_pi_at(x, delta) * pi_x);
      for (Index i = 0; i < d.m; ++i) {
        const double margin = model.u_bar()[i] - std::abs(s[i]);
        if (margin < res.worst_margin) {
          res.worst_margin = margin;
          res.detail = "worst at x = " + format_point(x) + ", channel " + std::to_string(i);
        }
      }
      res.samples++;
    }
  }
  if (res.samples == 0) res.worst_margin = 0.0;
  res.pass = res.worst_margin >= -1e-8;
  return res;
}

CheckResult check_vdot(const DarModel& model, const Certificate& cert, const Matrix& K,
                       size_t n_samples, uint64_t seed) {
  const Dims& d = model.dims();
  CheckResult res;
  res.name = "vdot";
  res.worst_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const auto xs = ellipsoid_interior_samples(cert.P, n_samples, rng);
  const auto vertices = delta_vertices(model);
  const double floor = 1e-6 * ellipsoid_metrics(cert.P).max_radius;
  bool ok = true;
  for (size_t k = 0; k < xs.size(); ++k) {
    const Vector& x = xs[k];
    const double nx2 = x.squaredNorm();
    if (nx2 == 0.0) continue;
    Vector delta = (k % 2 == 0 || d.l == 0) ? vertices[(k / 2) % vertices.size()]
                                            : model.D().sample(rng);
    LoopSignals s;
    try {
      s = closed_loop(model, K, x, delta);
    } catch (const WellPosednessError& e) {
      res.samples++;
      res.worst_margin = -std::numeric_limits<double>::infinity();
      res.detail = std::string("ill-posed at x = ") + format_point(x) + ": " + e.what();
      res.pass = false;
      return res;
    }
    res.samples++;
    const double vdot = 2.0 * x.dot(cert.P * s.x_dot);
    const double t = x.dot(cert.N * x);
    const Vector phi = s.u - s.v;
    Vector theta = cert.W * (phi + s.v) - cert.gbar_at(x, delta) * x;
    if (d.n_pi_x > 0) theta -= cert.gbar_pi_at(x, delta) * s.pi.head(d.n_pi_x);
    const double b = -2.0 * phi.dot(theta);
    const double r = s.y.dot(cert.Q * s.y) + 2.0 * s.y.dot(cert.S * s.v) + s.v.dot(cert.R * s.v);
    const double size = std::abs(vdot) + std::abs(t) + std::abs(b) + std::abs(r);
    const double dissipation = (r - vdot - t - b) / nx2;
    if (dissipation < -1e-9 * std::max(1.0, size / nx2)) ok = false;
    if (dissipation < res.worst_margin) {
      res.worst_margin = dissipation;
      res.detail = "dissipation inequality tightest at x = " + format_point(x);
    }
    if (std::sqrt(nx2) >= floor) {
      const double decay = -vdot / nx2;
      if (!(decay > 0.0)) ok = false;
      if (decay < res.worst_margin) {
        res.worst_margin = decay;
        res.detail = "Vdot tightest at x = " + format_point(x);
      }
    }
  }
  if (res.samples == 0) res.worst_margin = 0.0;
  res.pass = ok;
  return res;
}

CheckResult check_supply_rate_sign(const Certificate& cert, const Matrix& K,
                                   size_t n_samples, uint64_t seed) {
  CheckResult res;
  res.name = "supply-rate-sign";
  res.worst_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const double tol = 1e-10 * supply_scale(cert.Q, cert.S, cert.R);
  const Index p = cert.Q.rows();
  for (size_t k = 0; k < n_samples && p > 0; ++k) {
    const Vector y = unit_direction(p, rng);
    const Vector v = K * y;
    const double r = y.dot(cert.Q * y) + 2.0 * y.dot(cert.S * v) + v.dot(cert.R * v);
    res.samples++;
    if (-r < res.worst_margin) {
      res.worst_margin = -r;
      res.detail = "worst at y = " + format_point(y);
    }
  }
  if (res.samples == 0) res.worst_margin = 0.0;
  res.pass = res.worst_margin >= -tol;
  return res;
}

CheckResult monte_carlo_roa(const DarModel& model, const Matrix& K, const Matrix& P,
                            size_t n_traj, double t_final, uint64_t seed, double step,
                            double convergence_radius) {
  CheckResult res;
  res.name = "monte-carlo";
  std::mt19937_64 rng(seed);
  const auto starts = ellipsoid_boundary_samples(P, n_traj, rng);
  std::vector<DeltaMode> modes;
  if (model.dims().l == 0)
    modes = {DeltaMode::kZero};
  else
    modes = {DeltaMode::kVertex, DeltaMode::kVertexCycling, DeltaMode::kRandom,
             DeltaMode::kSinusoidal};

  SimulationOptions so;
  so.t_final = t_final;
  so.step = step;
  so.record_every = std::numeric_limits<int>::max();
  double worst_norm = 0.0;
  size_t failures = 0;
  for (DeltaMode mode : modes) {
    for (size_t j = 0; j < starts.size(); ++j) {
      const DeltaSignal delta = make_delta_signal(mode, model.D(), seed + j);
      const Trajectory tr = simulate(model, K, starts[j], delta, so);
      res.samples++;
      double norm = tr.final_state().norm();
      if (tr.diverged || !tr.failure.empty()) norm = std::numeric_limits<double>::infinity();
      if (norm > convergence_radius) {
        if (failures++ == 0) {
          std::ostringstream os;
          os << "trajectory from " << format_point(starts[j]) << " under " << to_string(mode);
          if (tr.diverged)
            os << " diverged at t = " << tr.divergence_time;
          else if (!tr.failure.empty())
            os << " stopped: " << tr.failure;
          else
            os << " ended at |x| = " << norm;
          res.detail = os.str();
        }
      }
      worst_norm = std::max(worst_norm, norm);
    }
  }
  res.worst_margin = convergence_radius - worst_norm;
  res.pass = failures == 0;
  if (failures > 1) res.detail += " (" + std::to_string(failures) + " failures)";
  return res;
}

CheckResult check_vertex_sufficiency(const DarModel& model, const Certificate& cert,
                                     size_t n_samples, uint64_t seed) {
  const Dims& d = model.dims();
  CheckResult res;
  res.name = "vertex-sufficiency";
  res.worst_margin = std::numeric_limits<double>::infinity();
  const SynthesisVariables vars =
      SynthesisVariables::create(d, cert.Gbar.size() > 1, cert.lambda.has_value());
  const Vector y = certificate_vector(vars, cert);
  std::mt19937_64 rng(seed);
  for (size_t k = 0; k < n_samples; ++k) {
    ParameterPoint pt{model.X().sample(rng), d.l ? model.D().sample(rng) : Vector(0)};
    const Matrix diss = dissipativity_expression(model, pt, vars).evaluate(y);
    double margin = -Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (diss + diss.transpose()),
                                                          Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
    std::string where = "dissipativity";
    for (Index i = 0; i < d.m; ++i) {
      const Matrix sec = sector_expression(model, pt, vars, i).evaluate(y);
      const double m = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (sec + sec.transpose()),
                                                            Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .minCoeff();
      if (m < margin) {
        margin = m;
        where = "sector channel " + std::to_string(i);
      }
    }
    res.samples++;
    if (margin < res.worst_margin) {
      res.worst_margin = margin;
      res.detail = where + " tightest at x = " + format_point(pt.x);
    }
  }
  if (res.samples == 0) res.worst_margin = 0.0;
  res.pass = res.worst_margin >= 0.0;
  return res;
}

VerificationReport verify_certificate(const DarModel& model, const Certificate& cert,
                                      const Matrix& K, const VerifierOptions& opts) {
  const Dims& d = model.dims();
  if (cert.P.rows() != d.n || cert.S.rows() != d.p || cert.S.cols() != d.m ||
      cert.R.rows() != d.m || cert.W.rows() != d.m || K.rows() != d.m || K.cols() != d.p)
    throw InputError("verify: certificate dimensions do not match the model");
  VerificationReport rep;
  rep.seed = opts.seed;

  {
    CheckResult c;
    c.name = "gain-consistency";
    c.samples = 1;
    try {
      const Matrix k_cert = compute_gain(cert.S, cert.R);
      const double err = (K - k_cert).norm();
      c.worst_margin = -err;
      c.pass = err <= 1e-9 * std::max(1.0, k_cert.norm());
      if (!c.pass) c.detail = "applied gain differs from -R^-1 S' by " + std::to_string(err);
    } catch (const InputError& e) {
      c.worst_margin = -std::numeric_limits<double>::infinity();
      c.detail = e.what();
    }
    rep.checks.push_back(c);
  }
  {
    CheckResult c;
    c.name = "lmi-recheck";
    c.worst_margin = std::numeric_limits<double>::infinity();
    c.pass = true;
    for (const auto& m : recheck_certificate(model, cert, opts.assembly, opts.margin_tol)) {
      c.samples++;
      if (m.min_eigenvalue < c.worst_margin) {
        c.worst_margin = m.min_eigenvalue;
        c.detail = "tightest: " + m.label;
      }
      if (m.flagged) c.pass = false;
    }
    rep.checks.push_back(c);
  }
  {
    CheckResult c;
    c.name = "schur";
    c.samples = 1;
    try {
      const double scale = supply_scale(cert.Q, cert.S, cert.R);
      const SchurCheck s = schur_stability_check(cert.Q, cert.S, cert.R, opts.schur_tol * scale);
      c.worst_margin = -s.margin;
      c.pass = s.pass;
    } catch (const InputError& e) {
      c.worst_margin = -std::numeric_limits<double>::infinity();
      c.detail = e.what();
    }
    rep.checks.push_back(c);
  }
  {
    CheckResult c;
    c.name = "ellipsoid-inclusion";
    c.samples = model.X().facets().size();
    try {
      const double ratio = ellipsoid_facet_ratio(model, cert.P);
      c.worst_margin = 1.0 - ratio;
      c.pass = ratio <= 1.0 + 1e-8;
    } catch (const InputError& e) {
      c.worst_margin = -std::numeric_limits<double>::infinity();
      c.detail = e.what();
    }
    rep.checks.push_back(c);
  }
  const bool p_ok = rep.checks.back().worst_margin > -std::numeric_limits<double>::infinity();
  rep.checks.push_back(check_supply_rate_sign(cert, K, opts.supply_samples, opts.seed + 1));
  if (p_ok) {
    rep.checks.push_back(check_sector_inclusion(model, cert, opts.sector_samples, opts.seed + 2));
    rep.checks.push_back(check_vdot(model, cert, K, opts.vdot_samples, opts.seed + 3));
    rep.checks.push_back(
        check_vertex_sufficiency(model, cert, opts.interior_samples, opts.seed + 4));
    rep.checks.push_back(monte_carlo_roa(model, K, cert.P, opts.trajectories, opts.t_final,
                                         opts.seed + 5, opts.step, opts.convergence_radius));
  }
  rep.pass = p_ok;
  for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

}  // namespace sofsat
