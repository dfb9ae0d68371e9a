#include <doctest.h>

#include <random>

#include "sofsat/lmi.hpp"
#include "sofsat/synthesis.hpp"
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

double max_eig(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose())).eigenvalues().maxCoeff();
}
double min_eig(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

Vector random_y(const SynthesisVariables& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector y(v.registry.num_variables());
  for (Index i = 0; i < y.size(); ++i) y[i] = u(rng);
  return y;
}

// Phi assembled entry by entry from numeric block values.
Matrix phi_oracle(const DarModel& model, const ParameterPoint& pt, const Certificate& c) {
  const Dims& d = model.dims();
  const Index n = d.n, np = d.n_pi, m = d.m;
  const Matrix A1 = model.A1().evaluate(pt.x, pt.delta);
  const Matrix A2 = model.A2().evaluate(pt.x, pt.delta);
  const Matrix A3 = model.A3().evaluate(pt.x, pt.delta);
  const Matrix& C1 = model.C1();
  const Matrix& C2 = model.C2();
  const Matrix G = c.gbar_at(pt.x, pt.delta);
  const Matrix Gpi = c.gbar_pi_at(pt.x, pt.delta);
  Matrix F = Matrix::Zero(n + np + 2 * m, n + np + 2 * m);
  auto put = [&](Index r, Index col, const Matrix& b) {
    F.block(r, col, b.rows(), b.cols()) = b;
    if (r != col) F.block(col, r, b.cols(), b.rows()) = b.transpose();
  };
  const Index xo = 0, po = n, vo = n + np, fo = n + np + m;
  put(xo, xo, c.P * A1 + A1.transpose() * c.P + c.N - C1.transpose() * c.Q * C1);
  put(po, xo, A2.transpose() * c.P - C2.transpose() * c.Q * C1);
  put(po, po, -C2.transpose() * c.Q * C2);
  put(vo, xo, A3.transpose() * c.P - c.S.transpose() * C1);
  put(vo, po, -c.S.transpose() * C2);
  put(vo, vo, -c.R);
  put(fo, xo, A3.transpose() * c.P + G);
  Matrix g42 = Matrix::Zero(m, np);
  g42.leftCols(d.n_pi_x) = Gpi;
  put(fo, po, g42);
  put(fo, vo, -c.W);
  put(fo, fo, -2.0 * c.W);
  return F;
}

Matrix gamma_oracle(const DarModel& model, const ParameterPoint& pt) {
  const Matrix U1 = model.Ups1().evaluate(pt.x, pt.delta);
  const Matrix U2 = model.Ups2().evaluate(pt.x, pt.delta);
  const Matrix U3 = model.Ups3().evaluate(pt.x, pt.delta);
  Matrix g(U1.rows(), U1.cols() + U2.cols() + 2 * U3.cols());
  g << U1, U2, U3, U3;
  return g;
}

Matrix sector_oracle(const DarModel& model, const ParameterPoint& pt, const Certificate& c,
                     Index i) {
  const Dims& d = model.dims();
  const Index n = d.n, npx = d.n_pi_x;
  const Matrix G = c.gbar_at(pt.x, pt.delta);
  const Matrix Gpi = c.gbar_pi_at(pt.x, pt.delta);
  const double ub = model.u_bar()[i];
  Matrix F = Matrix::Zero(n + npx + 1, n + npx + 1);
  F.topLeftCorner(n, n) = c.P;
  F.block(n + npx, 0, 1, n) = G.row(i);
  F.block(0, n + npx, n, 1) = G.row(i).transpose();
  if (npx) {
    const Matrix S1 = model.Sigma1().evaluate(pt.x, pt.delta);
    const Matrix S2 = model.Sigma2().evaluate(pt.x, pt.delta);
    F.block(n, 0, npx, n) = c.Z * S1;
    F.block(0, n, n, npx) = (c.Z * S1).transpose();
    F.block(n, n, npx, npx) = S2.transpose() * c.Z.transpose() + c.Z * S2;
    F.block(n + npx, n, 1, npx) = Gpi.row(i);
    F.block(n, n + npx, npx, 1) = Gpi.row(i).transpose();
  }
  F(n + npx, n + npx) = 2.0 * c.W(i, i) - 1.0 / (ub * ub);
  return F;
}

std::vector<DarModel> test_models() {
  std::vector<DarModel> out{testing::example1_model()};
  const auto shapes = testing::synthetic_shapes();
  for (size_t s = 0; s < shapes.size(); ++s) out.push_back(testing::random_model(shapes[s], 300 + s));
  return out;
}

}  // namespace

TEST_CASE("registry layout and value round trip") {
  DecisionRegistry r;
  const Index a = r.add("A", 3, 3, BlockStructure::kSymmetric);
  const Index b = r.add("B", 2, 3, BlockStructure::kFull);
  const Index c = r.add("C", 4, 4, BlockStructure::kDiagonal);
  CHECK(r.block(a).count == 6);
  CHECK(r.block(b).offset == 6);
  CHECK(r.block(b).count == 6);
  CHECK(r.block(c).count == 4);
  CHECK(r.num_variables() == 16);
  CHECK(r.find("B") == b);
  CHECK_FALSE(r.find("D").has_value());
  CHECK(r.locate(7) == std::pair<Index, Index>(b, 1));

  std::mt19937_64 rng(1);
  Vector y = Vector::Zero(16);
  Matrix sa = Matrix::Random(3, 3);
  sa = sa + sa.transpose().eval();
  const Matrix fb = Matrix::Random(2, 3);
  const Matrix dc = Matrix::Random(4, 4);
  r.set_value(a, sa, y);
  r.set_value(b, fb, y);
  r.set_value(c, dc, y);
  CHECK(r.value(a, y) == sa);
  CHECK(r.value(b, y) == fb);
  CHECK(r.value(c, y) == Matrix(dc.diagonal().asDiagonal()));

  // value = sum_k y_k basis_k
  for (Index id : {a, b, c}) {
    Matrix s = Matrix::Zero(r.block(id).rows, r.block(id).cols);
    for (Index k = 0; k < r.block(id).count; ++k) s += y[r.block(id).offset + k] * r.basis(id, k);
    CHECK(s == r.value(id, y));
  }
}

TEST_CASE("linear term algebra") {
  DecisionRegistry r;
  const Index a = r.add("A", 2, 2, BlockStructure::kFull);
  Vector y(4);
  y << 1.0, 2.0, 3.0, 4.0;  // column-major A = [[1,3],[2,4]]
  const LinearTerm t = LinearTerm::variable(r, a);
  Matrix A(2, 2);
  A << 1.0, 3.0, 2.0, 4.0;
  CHECK(t.evaluate(y) == A);
  CHECK(t.transpose().evaluate(y) == A.transpose());
  CHECK(t.block(1, 0, 1, 2).evaluate(y) == A.row(1));
  const Matrix M = vec({2.0, -1.0}).transpose();
  CHECK((M * t).evaluate(y) == M * A);
  CHECK((t * M.transpose()).evaluate(y) == A * M.transpose());
  const LinearTerm e = t.embed(3, 4, 1, 2);
  CHECK(e.evaluate(y).block(1, 2, 2, 2) == A);
  CHECK(e.evaluate(y).sum() == A.sum());
  CHECK(t.mirrored_lower().evaluate(y)(0, 1) == 2.0);
  CHECK((2.0 * t - t).evaluate(y) == A);
  CHECK(t.block(0, 0, 1, 1).scalar_times(Matrix::Identity(2, 2)).evaluate(y) ==
        Matrix::Identity(2, 2));
  CHECK_THROWS_AS(t + LinearTerm(3, 3), InputError);
}

TEST_CASE("phi vanishes on the zero decision vector") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  for (const auto& pt : product_vertices(model.X(), model.D())) {
    const Matrix phi = build_phi(model, pt, v).evaluate(Vector::Zero(v.registry.num_variables()));
    CHECK(phi.rows() == 6);
    CHECK(phi.isZero(0.0));
  }
}

TEST_CASE("phi with P = I at the (0.9, 0.9) vertex") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  Vector y = Vector::Zero(v.registry.num_variables());
  v.registry.set_value(v.P, Matrix::Identity(2, 2), y);
  const ParameterPoint pt{vec({0.9, 0.9}), Vector(0)};
  const Matrix phi = build_phi(model, pt, v).evaluate(y);
  Matrix expect(2, 2);
  expect << -2.0, 0.25, 0.25, 0.0;
  CHECK(phi.topLeftCorner(2, 2) == expect);
}

TEST_CASE("phi with W = I activates only the deadzone rows") {
  const DarModel model = testing::random_model(testing::synthetic_shapes()[4], 1);
  const Dims& d = model.dims();
  const auto v = SynthesisVariables::create(d, true, false);
  Vector y = Vector::Zero(v.registry.num_variables());
  v.registry.set_value(v.W, Matrix::Identity(d.m, d.m), y);
  const ParameterPoint pt = product_vertices(model.X(), model.D()).front();
  const Matrix phi = build_phi(model, pt, v).evaluate(y);
  const Index fo = d.n + d.n_pi + d.m, vo = d.n + d.n_pi;
  CHECK(phi.block(fo, vo, d.m, d.m) == -Matrix::Identity(d.m, d.m));
  CHECK(phi.block(fo, fo, d.m, d.m) == -2.0 * Matrix::Identity(d.m, d.m));
  Matrix rest = phi;
  rest.block(fo, vo, d.m, d.m).setZero();
  rest.block(vo, fo, d.m, d.m).setZero();
  rest.block(fo, fo, d.m, d.m).setZero();
  CHECK(rest.isZero(0.0));
}

TEST_CASE("phi, gamma and the sector blocks match direct construction") {
  std::mt19937_64 rng(99);
  for (const DarModel& model : test_models()) {
    for (bool affine : {true, false}) {
      const auto v = SynthesisVariables::create(model.dims(), affine, false);
      for (int trial = 0; trial < 3; ++trial) {
        const Vector y = random_y(v, rng);
        const Certificate c = extract_certificate(v, y);
        for (const auto& pt : product_vertices(model.X(), model.D())) {
          const Matrix phi = phi_oracle(model, pt, c);
          const Matrix gam = gamma_oracle(model, pt);
          CHECK((build_phi(model, pt, v).evaluate(y) - phi).cwiseAbs().maxCoeff() <= 1e-12);
          CHECK(build_gamma(model, pt) == gam);
          const Matrix diss = phi + c.Imult * gam + (c.Imult * gam).transpose();
          CHECK((dissipativity_expression(model, pt, v).evaluate(y) - diss)
                    .cwiseAbs()
                    .maxCoeff() <= 1e-12);
          for (Index i = 0; i < model.dims().m; ++i)
            CHECK((sector_expression(model, pt, v, i).evaluate(y) -
                   sector_oracle(model, pt, c, i))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("gamma") {
  const DarModel model = testing::example1_model();
  const Matrix g = build_gamma(model, {Vector::Zero(2), Vector(0)});
  Matrix expect = Matrix::Zero(2, 6);
  expect.block(0, 2, 2, 2) = -Matrix::Identity(2, 2);
  CHECK(g == expect);

  const DarModel mimo = testing::random_model(testing::synthetic_shapes()[2], 4);
  const Dims& d = mimo.dims();
  CHECK(build_gamma(mimo, product_vertices(mimo.X(), mimo.D()).front()).cols() ==
        d.n + d.n_pi + 4);
}

TEST_CASE("gamma annihilates consistent extended vectors") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (const DarModel& model : test_models()) {
    const Dims& d = model.dims();
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Vector x = model.X().sample(rng);
      const Vector delta = model.D().sample(rng);
      Vector v(d.m);
      for (Index j = 0; j < d.m; ++j) v[j] = nd(rng);
      const Vector phi = deadzone(v, model.u_bar());
      const Vector pi = recover_pi(model, x, delta, saturate(v, model.u_bar()));
      Vector z(d.n + d.n_pi + 2 * d.m);
      z << x, pi, v, phi;
      worst = std::max(worst, (build_gamma(model, {x, delta}) * z).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("dissipativity constraints: one per vertex of the right size") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  const auto cs = assemble_dissipativity(model, v, {});
  REQUIRE(cs.size() == 4);
  for (const auto& c : cs) {
    CHECK(c.expr.dim() == 6);
    CHECK(c.sense == ConstraintSense::kNegativeDefinite);
    CHECK(c.margin == doctest::Approx(1e-7));
  }

  const DarModel with_delta = testing::random_model({2, 1, 1, 1, 1, 0, false, false}, 3);
  const auto v2 = SynthesisVariables::create(with_delta.dims(), true, false);
  CHECK(assemble_dissipativity(with_delta, v2, {}).size() == 8);
}

TEST_CASE("dissipativity with a zero multiplier reduces to phi") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  std::mt19937_64 rng(8);
  Vector y = random_y(v, rng);
  v.registry.set_value(v.Imult, Matrix::Zero(6, 2), y);
  for (const auto& pt : product_vertices(model.X(), model.D()))
    CHECK(dissipativity_expression(model, pt, v).evaluate(y) == build_phi(model, pt, v).evaluate(y));
}

TEST_CASE("sector constraints") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  const auto cs = assemble_sector_inclusion(model, v);
  REQUIRE(cs.size() == 4);
  for (const auto& c : cs) CHECK(c.expr.dim() == 5);

  const DarModel reduced = testing::random_model({3, 2, 1, 0, 0, 2, false, false}, 2);
  REQUIRE(reduced.dims().n_pi_x == 0);
  const auto vr = SynthesisVariables::create(reduced.dims(), true, false);
  const auto cr = assemble_sector_inclusion(reduced, vr);
  CHECK(cr.size() == 8 * 2);
  for (const auto& c : cr) CHECK(c.expr.dim() == 4);

  // Only the constant corner moves with u_bar.
  const DarModel wide = testing::example1_model(15.0);
  const auto cw = assemble_sector_inclusion(wide, v);
  const Matrix diff = cw[0].expr.term().constant_part() - cs[0].expr.term().constant_part();
  Matrix expect = Matrix::Zero(5, 5);
  expect(4, 4) = 0.99 / (1.5 * 1.5);
  CHECK((diff - expect).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(cw[0].expr.term().coefficients().size() == cs[0].expr.term().coefficients().size());
}

TEST_CASE("polytope inclusion constraints") {
  const DarModel model = testing::example1_model(1.5, 1.0);
  const auto v = SynthesisVariables::create(model.dims(), true, false);
  const auto cs = assemble_polytope_inclusion(model, v);
  REQUIRE(cs.size() == 4);
  Vector y = Vector::Zero(v.registry.num_variables());
  v.registry.set_value(v.P, Matrix::Identity(2, 2), y);
  for (const auto& c : cs) {
    CHECK(c.expr.dim() == 3);
    CHECK(min_eig(c.canonical().evaluate(y)) >= -1e-15);
  }
  v.registry.set_value(v.P, 0.25 * Matrix::Identity(2, 2), y);
  // facet (1, 0): Schur complement 0.25 - 1 < 0
  CHECK(cs[0].expr.term().constant_part()(2, 0) == 1.0);
  CHECK(min_eig(cs[0].canonical().evaluate(y)) < 0.0);
}

TEST_CASE("supply rate block") {
  const Dims d{2, 2, 0, 1, 1, 0};
  const auto v = SynthesisVariables::create(d, true, true);
  Vector y = Vector::Zero(v.registry.num_variables());
  v.registry.set_value(v.Q, Matrix::Constant(1, 1, -3.0), y);
  v.registry.set_value(v.R, Matrix::Identity(1, 1), y);
  Matrix Ls(2, 1);
  Ls << 0.0, -1.0;
  const Matrix e = supply_rate_expression(v, Ls, false).evaluate(y);
  Matrix expect(2, 2);
  expect << -3.0, 0.0, 0.0, -1.0;
  CHECK(e == expect);

  CHECK(supply_multiplier(Matrix::Zero(1, 1), Matrix::Identity(1, 1)) == Ls);
  Matrix S0(2, 1), R0(1, 1);
  S0 << 1.0, -2.0;
  R0 << 4.0;
  const Matrix L = supply_multiplier(S0, R0);
  REQUIRE(L.rows() == 3);
  CHECK(L(0, 0) == -0.25);
  CHECK(L(1, 0) == 0.5);
  CHECK(L(2, 0) == -1.0);
  CHECK_THROWS_AS(supply_rate_expression(v, Matrix::Zero(3, 2), false), InputError);

  const LmiConstraint c = assemble_supply_rate(v, Ls, true, {});
  CHECK(c.sense == ConstraintSense::kNegativeDefinite);
  CHECK(c.label.find("relaxed") != std::string::npos);
}

TEST_CASE("relaxed supply rate is satisfiable with a large lambda") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = 1 + trial % 3, m = 1 + (trial / 3) % 3;
    const Dims d{1, 0, 0, m, p, 0};
    const auto v = SynthesisVariables::create(d, false, true);
    Vector y = Vector::Zero(v.registry.num_variables());
    Matrix Q(p, p), S(p, m), A(m, m);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) Q(i, j) = u(rng);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < m; ++j) S(i, j) = u(rng);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) A(i, j) = u(rng);
    const Matrix R = A * A.transpose() + 0.1 * Matrix::Identity(m, m);
    v.registry.set_value(v.Q, Q + Q.transpose(), y);
    v.registry.set_value(v.S, S, y);
    v.registry.set_value(v.R, R, y);
    v.registry.set_value(*v.lambda, Matrix::Constant(1, 1, 1e4), y);
    const Matrix Ls = supply_multiplier(Matrix::Random(p, m), Matrix::Identity(m, m));
    CHECK(max_eig(supply_rate_expression(v, Ls, true).evaluate(y)) < 0.0);
  }
}

TEST_CASE("schur stability check") {
  const Matrix I = Matrix::Identity(1, 1);
  SchurCheck a = schur_stability_check(-I, Matrix::Zero(1, 1), I, 0.0);
  CHECK(a.pass);
  CHECK(a.margin == -1.0);
  SchurCheck b = schur_stability_check(I, Matrix::Zero(1, 1), I, 0.0);
  CHECK_FALSE(b.pass);
  CHECK(b.margin == 1.0);
  SchurCheck c = schur_stability_check(I, 2.0 * I, 4.0 * I, 0.0);
  CHECK(c.pass);
  CHECK(c.margin == 0.0);
  CHECK_THROWS_AS(schur_stability_check(I, I, -I, 0.0), InputError);
  CHECK_THROWS_AS(schur_stability_check(I, I, Matrix::Zero(1, 1), 0.0), InputError);
  CHECK(supply_scale(-5.0 * I, 2.0 * I, 0.1 * I) == 5.0);
  CHECK(supply_scale(0.1 * I, 0.1 * I, 0.1 * I) == 1.0);
}

TEST_CASE("supply-rate block with the gain multiplier agrees with the Schur test") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0), shift(-1.0, 1.0);
  int disagreements = 0, stable = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = 1 + trial % 4, m = 1 + (trial / 4) % 4;
    Matrix S(p, m), A(m, m), B(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < m; ++j) S(i, j) = u(rng);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) A(i, j) = u(rng);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) B(i, j) = u(rng);
    const Matrix R = A * A.transpose() + 0.2 * Matrix::Identity(m, m);
    const Matrix SRS = S * R.llt().solve(S.transpose());
    const Matrix Q = SRS + B + B.transpose() + shift(rng) * 3.0 * Matrix::Identity(p, p);
    const bool oracle = max_eig(Q - SRS) < 0.0;
    stable += oracle;

    const auto v = SynthesisVariables::create(Dims{1, 0, 0, m, p, 0}, false, false);
    Vector y = Vector::Zero(v.registry.num_variables());
    v.registry.set_value(v.Q, Q, y);
    v.registry.set_value(v.S, S, y);
    v.registry.set_value(v.R, R, y);
    const Matrix block = supply_rate_expression(v, supply_multiplier(S, R), false).evaluate(y);
    disagreements += (max_eig(block) < 0.0) != oracle;
  }
  CHECK(disagreements == 0);
  CHECK(stable > 10);
  CHECK(stable < 90);
}

TEST_CASE("assembled constraints are exactly symmetric") {
  for (const DarModel& model : test_models()) {
    const auto v = SynthesisVariables::create(model.dims(), true, true);
    ProgramSpec spec;
    spec.Ls = supply_multiplier(Matrix::Ones(model.dims().p, model.dims().m),
                                Matrix::Identity(model.dims().m, model.dims().m));
    spec.relaxed = true;
    spec.objective = SynthesisObjective::kMinimizeLambda;
    const LmiProgram prog = build_synthesis_program(model, v, spec, {});
    for (const auto& c : prog.constraints) {
      const LinearTerm& t = c.expr.term();
      CHECK(t.constant_part() == t.constant_part().transpose());
      for (const auto& [k, f] : t.coefficients()) CHECK(f == f.transpose());
    }
  }
}

TEST_CASE("assembly is linear in the decision vector") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const DarModel& model : test_models()) {
    const auto v = SynthesisVariables::create(model.dims(), true, true);
    ProgramSpec spec;
    spec.Ls = supply_multiplier(Matrix::Ones(model.dims().p, model.dims().m),
                                2.0 * Matrix::Identity(model.dims().m, model.dims().m));
    spec.relaxed = true;
    spec.objective = SynthesisObjective::kMinimizeLambda;
    const LmiProgram prog = build_synthesis_program(model, v, spec, {});
    const Vector y1 = random_y(v, rng), y2 = random_y(v, rng);
    const double a = u(rng), b = u(rng);
    for (const auto& c : prog.constraints) {
      const Matrix c0 = c.expr.term().constant_part();
      const Matrix lhs = c.expr.evaluate(a * y1 + b * y2) - c0;
      const Matrix rhs = a * (c.expr.evaluate(y1) - c0) + b * (c.expr.evaluate(y2) - c0);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("program contents and objective") {
  const DarModel model = testing::example1_model();
  const auto v = SynthesisVariables::create(model.dims(), true, true);
  ProgramSpec spec;
  spec.Ls = supply_multiplier(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  spec.relaxed = true;
  spec.objective = SynthesisObjective::kMinimizeLambda;
  spec.lambda_floor = -1e-6;
  const LmiProgram prog = build_synthesis_program(model, v, spec, {});
  // 4 dissipativity, 4 sector, 4 polytope, supply rate, 4 definiteness, lambda floor
  CHECK(prog.constraints.size() == 18);
  CHECK(prog.objective.sum() == 1.0);
  CHECK(prog.objective[v.registry.block(*v.lambda).offset] == 1.0);

  const auto v2 = SynthesisVariables::create(model.dims(), true, false);
  ProgramSpec tr;
  tr.Ls = spec.Ls;
  const LmiProgram p2 = build_synthesis_program(model, v2, tr, {});
  CHECK(p2.constraints.size() == 17);
  Vector y = Vector::Zero(v2.registry.num_variables());
  Matrix P(2, 2);
  P << 3.0, 1.0, 1.0, 5.0;
  v2.registry.set_value(v2.P, P, y);
  CHECK(p2.objective.dot(y) == 8.0);

  ProgramSpec bad;
  bad.Ls = spec.Ls;
  bad.objective = SynthesisObjective::kMinimizeLambda;
  CHECK_THROWS_AS(build_synthesis_program(model, v2, bad, {}), InputError);
}

TEST_CASE("certificate vector round trip") {
  std::mt19937_64 rng(4);
  const DarModel model = testing::random_model(testing::synthetic_shapes()[2], 9);
  const auto v = SynthesisVariables::create(model.dims(), true, true);
  Vector y = random_y(v, rng);
  // Symmetric blocks only own their lower triangle, so a round trip is exact.
  const Certificate c = extract_certificate(v, y);
  CHECK(certificate_vector(v, c) == y);
  CHECK(c.W.isDiagonal(0.0));
  CHECK(c.P == c.P.transpose());
  CHECK(c.Gbar.size() == static_cast<size_t>(1 + model.dims().n + model.dims().l));
}

TEST_CASE("constraints proven at the vertices hold inside the polytope") {
  std::vector<DarModel> models{testing::example1_model(),
                               testing::random_model(testing::synthetic_shapes()[1], 1002),
                               testing::random_model(testing::synthetic_shapes()[4], 4001)};
  for (const DarModel& model : models) {
    const SynthesisResult r = algorithm1(model);
    REQUIRE(r.ok());
    const Certificate& c = r.cert;
    for (const auto& pt : product_vertices(model.X(), model.D())) {
      CHECK(max_eig(phi_oracle(model, pt, c) + c.Imult * gamma_oracle(model, pt) +
                    (c.Imult * gamma_oracle(model, pt)).transpose()) < 0.0);
    }
    std::mt19937_64 rng(77);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
      const ParameterPoint pt{model.X().sample(rng), model.D().sample(rng)};
      const Matrix g = gamma_oracle(model, pt);
      worst = std::min(worst, -max_eig(phi_oracle(model, pt, c) + c.Imult * g +
                                       (c.Imult * g).transpose()));
      for (Index k = 0; k < model.dims().m; ++k)
        worst = std::min(worst, min_eig(sector_oracle(model, pt, c, k)));
    }
    CHECK(worst >= 0.0);
  }
}
