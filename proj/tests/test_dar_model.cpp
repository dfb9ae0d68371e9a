#include <doctest.h>

#include <random>

#include "sofsat/dar_model.hpp"
#include "sofsat/simulate.hpp"
#include "support/example1.hpp"
#include "support/random_models.hpp"

using namespace sofsat;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix scalar(double k) { return Matrix::Constant(1, 1, k); }

// Example plant with Ups2 = diag(x1 + shift, 1).
DarModel singular_ups2_model(double shift) {
  DarData d = testing::example1_model().data();
  Matrix c = Matrix::Identity(2, 2);
  c(0, 0) = shift;
  Matrix x1 = Matrix::Zero(2, 2);
  x1(0, 0) = 1.0;
  d.Ups2 = AffineMatrix(c, {x1, Matrix::Zero(2, 2)}, {});
  d.pi_oracle.reset();
  return DarModel(std::move(d));
}

}  // namespace

TEST_CASE("saturate") {
  CHECK(saturate(vec({0.5}), vec({1.0}))[0] == 0.5);
  CHECK(saturate(vec({-3.0}), vec({1.5}))[0] == -1.5);
  CHECK(saturate(vec({2.0, -0.3}), vec({1.0, 1.0})) == vec({1.0, -0.3}));
}

TEST_CASE("deadzone") {
  CHECK(deadzone(vec({0.5}), vec({1.0}))[0] == 0.0);
  CHECK(deadzone(vec({2.0}), vec({1.5}))[0] == -0.5);
  CHECK(deadzone(vec({-3.0, 0.0}), vec({1.0, 1.0})) == vec({2.0, 0.0}));
}

TEST_CASE("saturation identities on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0), b(0.1, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const Index m = 1 + t % 4;
    Vector v(m), ub(m);
    for (Index i = 0; i < m; ++i) {
      v[i] = u(rng);
      ub[i] = b(rng);
    }
    const Vector s = saturate(v, ub);
    const Vector phi = deadzone(v, ub);
    CHECK((saturate(s, ub) - s).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((s - (v + phi)).cwiseAbs().maxCoeff() <= 1e-15);
    for (Index i = 0; i < m; ++i) CHECK((phi[i] == 0.0) == (s[i] == v[i]));
  }
}

TEST_CASE("recover_pi on the example plant") {
  const DarModel model = testing::example1_model();
  CHECK(recover_pi(model, vec({0.0, 0.0}), Vector(0), vec({0.7})).norm() == 0.0);
  const Vector pi = recover_pi(model, vec({0.5, 0.2}), Vector(0), vec({-1.2}));
  CHECK(pi[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(pi[1] == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("recover_pi reports a singular Ups2 with its location") {
  const DarModel model = singular_ups2_model(-0.9);
  try {
    recover_pi(model, vec({0.9, 0.9}), Vector(0), vec({0.0}));
    FAIL("expected a well-posedness error");
  } catch (const WellPosednessError& e) {
    CHECK(e.x == vec({0.9, 0.9}));
  }
  CHECK_THROWS_AS(closed_loop_derivative(model, scalar(0.5), vec({0.9, 0.0}), Vector(0)),
                  WellPosednessError);
}

TEST_CASE("closed loop at the origin is an equilibrium") {
  const DarModel model = testing::example1_model();
  CHECK(closed_loop_derivative(model, scalar(0.3785), Vector::Zero(2), Vector(0)).norm() == 0.0);
  for (size_t s = 0; s < testing::synthetic_shapes().size(); ++s) {
    const auto shape = testing::synthetic_shapes()[s];
    const DarModel m = testing::random_model(shape, 40 + s);
    const Matrix K = Matrix::Ones(shape.m, shape.p);
    CHECK(closed_loop_derivative(m, K, Vector::Zero(shape.n), Vector::Zero(shape.l)).norm() == 0.0);
  }
}

TEST_CASE("closed loop matches the polynomial vector field") {
  const DarModel model = testing::example1_model();
  const double k = 0.3785;
  {
    const Vector x = vec({0.5, 0.2});
    const double u = std::clamp(k * (x[0] - x[1]), -1.5, 1.5);
    const Vector f = closed_loop_derivative(model, scalar(k), x, Vector(0));
    CHECK((f - testing::example1_vector_field(x, u)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-0.9, 0.9), uk(-8.0, 8.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector x = vec({ux(rng), ux(rng)});
    const double kk = uk(rng);
    const double u = std::clamp(kk * (x[0] - x[1]), -1.5, 1.5);
    const Vector f = closed_loop_derivative(model, scalar(kk), x, Vector(0));
    worst = std::max(worst, (f - testing::example1_vector_field(x, u)).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("closed loop signals are consistent") {
  const DarModel model = testing::example1_model();
  const LoopSignals s = closed_loop(model, scalar(4.0), vec({0.8, -0.6}), Vector(0));
  CHECK(s.y[0] == doctest::Approx(1.4));
  CHECK(s.v[0] == doctest::Approx(5.6));
  CHECK(s.u[0] == 1.5);
  CHECK(s.saturated);
  CHECK(s.pi[0] == doctest::Approx(0.64));
  CHECK(s.pi[1] == doctest::Approx(0.36));
}

TEST_CASE("closed loop matches the reference pi on synthetic plants") {
  const auto shapes = testing::synthetic_shapes();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (size_t s = 0; s < shapes.size(); ++s) {
    const auto& sh = shapes[s];
    const DarModel model = testing::random_model(sh, 100 + s);
    std::mt19937_64 rng(s);
    const Matrix K = 2.0 * Matrix::Random(sh.m, sh.p);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Vector x = model.X().sample(rng);
      const Vector d = model.D().sample(rng);
      // Direct evaluation: with Ups3 != 0 these plants have C2 = 0.
      Vector y = model.C1() * x;
      if (!model.pi_depends_on_input())
        y += model.C2() * (*model.pi_oracle())(x, Vector::Zero(sh.m));
      const Vector usat = saturate(K * y, model.u_bar());
      const Vector pi = (*model.pi_oracle())(x, usat);
      const Vector f = model.A1().evaluate(x, d) * x + model.A2().evaluate(x, d) * pi +
                       model.A3().evaluate(x, d) * usat;
      const Vector g = closed_loop_derivative(model, K, x, d);
      worst = std::max(worst, (f - g).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("state-only block satisfies its null relation") {
  const auto shapes = testing::synthetic_shapes();
  for (size_t s = 0; s < shapes.size(); ++s) {
    const auto& sh = shapes[s];
    if (sh.n_quadratic == 0) continue;
    const DarModel model = testing::random_model(sh, 200 + s);
    std::mt19937_64 rng(s + 1);
    const Index npx = model.dims().n_pi_x;
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      const Vector x = model.X().sample(rng);
      const Vector d = model.D().sample(rng);
      Vector usat(sh.m);
      for (Index j = 0; j < sh.m; ++j)
        usat[j] = model.u_bar()[j] * (2.0 * std::uniform_real_distribution<double>(0, 1)(rng) - 1.0);
      const Vector pi = recover_pi(model, x, d, usat);
      const Vector r = model.Sigma1().evaluate(x, d) * x +
                       model.Sigma2().evaluate(x, d) * pi.head(npx);
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("output loop through pi and the input is rejected") {
  DarData d = testing::random_model({3, 1, 2, 1, 1, 1, true, false}, 5).data();
  REQUIRE_FALSE(d.Ups3.is_zero());
  d.C2 = Matrix::Ones(d.dims.p, d.dims.n_pi);
  CHECK_THROWS_AS(DarModel{d}, InputError);
}

TEST_CASE("model construction checks shapes and bounds") {
  DarData d = testing::example1_model().data();
  d.u_bar = vec({0.0});
  CHECK_THROWS_AS(DarModel{d}, InputError);
  d = testing::example1_model().data();
  d.C1 = Matrix::Ones(1, 3);
  CHECK_THROWS_AS(DarModel{d}, InputError);
  d = testing::example1_model().data();
  d.A2 = AffineMatrix::constant(Matrix::Zero(2, 3), 2, 0);
  CHECK_THROWS_AS(DarModel{d}, InputError);
  d = testing::example1_model().data();
  d.dims.n_pi_x = 3;
  CHECK_THROWS_AS(DarModel{d}, InputError);
}

TEST_CASE("residual check") {
  const DarModel model = testing::example1_model();
  const auto samples = random_residual_samples(model, 1000, 9);
  CHECK(samples.size() == 1000);
  const ResidualReport r = residual_check(model, samples);
  CHECK(r.samples == 1000);
  CHECK(r.max_residual() <= 1e-10);

  DarData perturbed = model.data();
  perturbed.A2 = AffineMatrix(perturbed.A2.const_term().array() + 1e-3,
                              perturbed.A2.x_coeffs(), perturbed.A2.delta_coeffs());
  CHECK(residual_check(DarModel(perturbed), samples).max_residual() <= 1e-10);

  const ResidualReport empty = residual_check(model, {});
  CHECK(empty.samples == 0);
  CHECK(empty.max_residual() == 0.0);

  DarData no_oracle = model.data();
  no_oracle.pi_oracle.reset();
  CHECK_THROWS_AS(residual_check(DarModel(no_oracle), samples), InputError);
}

TEST_CASE("residual check catches a transcription error in the algebraic rows") {
  DarData d = testing::example1_model().data();
  Matrix x2 = d.Ups1.x_coeff(1);
  x2(1, 1) = 1.001;
  d.Ups1 = AffineMatrix(d.Ups1.const_term(), {d.Ups1.x_coeff(0), x2}, {});
  const DarModel model(std::move(d));
  CHECK(residual_check(model, random_residual_samples(model, 200, 1)).max_residual() > 1e-6);
}

TEST_CASE("well-posedness scan") {
  const WellPosednessReport ok = check_well_posedness(testing::example1_model());
  CHECK(ok.pass);
  CHECK(ok.points_checked >= 25);
  CHECK(ok.worst_condition == doctest::Approx(1.0));

  const WellPosednessReport bad = check_well_posedness(singular_ups2_model(0.0));
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_x[0] == 0.0);
  // The vertices alone would not reveal it.
  const DarModel singular = singular_ups2_model(0.0);
  for (const auto& v : singular.X().vertices())
    CHECK_NOTHROW(recover_pi(singular, v, Vector(0), vec({0.0})));

  for (size_t s = 0; s < testing::synthetic_shapes().size(); ++s)
    CHECK(check_well_posedness(testing::random_model(testing::synthetic_shapes()[s], s)).pass);
}

TEST_CASE("simulation from the origin stays at the origin") {
  const DarModel model = testing::example1_model();
  SimulationOptions o;
  o.t_final = 2.0;
  const Trajectory tr = simulate(model, scalar(0.3785), Vector::Zero(2), zero_delta(0), o);
  CHECK_FALSE(tr.diverged);
  CHECK(tr.time.back() == 2.0);
  for (const auto& x : tr.state) CHECK(x.norm() == 0.0);
}

TEST_CASE("published gain stabilizes the example from (0.6, 0.6)") {
  const DarModel model = testing::example1_model();
  SimulationOptions o;
  o.t_final = 50.0;
  o.record_every = 1000;
  const Trajectory tr = simulate(model, scalar(0.3785), vec({0.6, 0.6}), zero_delta(0), o);
  CHECK_FALSE(tr.diverged);
  CHECK(tr.final_state().norm() < 1e-3);
  CHECK(tr.time.back() == 50.0);
}

TEST_CASE("wrong-sign gain diverges and is reported") {
  const DarModel model = testing::example1_model();
  SimulationOptions o;
  o.t_final = 50.0;
  o.divergence_cap = 1e3;
  const Trajectory tr = simulate(model, scalar(-0.3785), vec({0.6, 0.6}), zero_delta(0), o);
  CHECK(tr.diverged);
  CHECK(tr.divergence_time < 50.0);
}

TEST_CASE("rk4 matches an exact solution on a linear plant") {
  // xdot = -x + sat(v), v = 0  -> x(t) = x0 exp(-t)
  DarData d;
  d.dims = {1, 0, 0, 1, 1, 0};
  d.A1 = AffineMatrix::constant(-Matrix::Identity(1, 1), 1, 0);
  d.A2 = AffineMatrix::zero(1, 0, 1, 0);
  d.A3 = AffineMatrix::constant(Matrix::Identity(1, 1), 1, 0);
  d.Ups1 = AffineMatrix::zero(0, 1, 1, 0);
  d.Ups2 = AffineMatrix::zero(0, 0, 1, 0);
  d.Ups3 = AffineMatrix::zero(0, 1, 1, 0);
  d.C1 = Matrix::Identity(1, 1);
  d.C2 = Matrix::Zero(1, 0);
  d.u_bar = vec({1.0});
  d.X = BoxPolytope(vec({2.0}));
  d.D = BoxPolytope(Vector(0));
  const DarModel model(std::move(d));
  SimulationOptions o;
  o.t_final = 1.0;
  o.step = 1e-2;
  const Trajectory tr = simulate(model, scalar(0.0), vec({1.0}), zero_delta(0), o);
  CHECK(std::abs(tr.final_state()[0] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("uncertainty signals stay inside their polytope") {
  const Polytope D = BoxPolytope(vec({0.2, 0.5}));
  for (DeltaMode mode : {DeltaMode::kVertex, DeltaMode::kVertexCycling, DeltaMode::kRandom,
                         DeltaMode::kSinusoidal}) {
    const DeltaSignal s = make_delta_signal(mode, D, 3);
    for (double t = 0.0; t < 20.0; t += 0.37) CHECK(D.contains(s(t), 1e-12));
  }
  const DeltaSignal cyc = vertex_cycling_delta(D, 1.0);
  CHECK(cyc(0.5) == D.vertices()[0]);
  CHECK(cyc(1.5) == D.vertices()[1]);
  CHECK(make_delta_signal(DeltaMode::kVertexCycling, BoxPolytope(Vector(0)), 1)(3.0).size() == 0);
  CHECK(parse_delta_mode(to_string(DeltaMode::kSinusoidal)) == DeltaMode::kSinusoidal);
  CHECK_THROWS_AS(parse_delta_mode("sawtooth"), InputError);
}
