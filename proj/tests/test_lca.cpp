#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>

#include "lcanet/error.hpp"
#include "lcanet/io.hpp"
#include "lcanet/lca.hpp"
#include "support/fixtures.hpp"

using namespace lcanet;
using namespace lcanet::testing;

namespace {

DenseMatrix fixture_a() {
  DenseMatrix a(5, 5);
  a << 1, -61.9, 0, 0, 0,  //
      0, 1, -3.816, 0, 0,  //
      0, 0, 1, 0, 0,       //
      0, 0, 0, 1, 0,       //
      0, 0, 0, -53.3, 1;
  return a;
}

DenseMatrix fixture_b() {
  DenseMatrix b(3, 5);
  b << 1.030e-3, 2.515e-3, 0, 2.48e-1, 2e-4,  //
      8.4e-4, 2.237e-1, 0, 2.17e-1, 5.4e-4,   //
      -3.45, 0, 0, 0, -2.22;
  return b;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Back-substitution for an upper-triangular system.
Vector back_substitute(const DenseMatrix& u, const Vector& y) {
  const Eigen::Index n = u.rows();
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = y(i);
    for (Eigen::Index j = i + 1; j < n; ++j) s -= u(i, j) * x(j);
    x(i) = s / u(i, i);
  }
  return x;
}

double rel_err(const Vector& got, const Vector& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

AssembledLca assemble_fixture() {
  const auto model = load_model(data_path("oil-to-motion.model.json"));
  const auto caps = enumerate_capabilities(model);
  return assemble_lca(model, caps, model.aspects);
}

}  // namespace

TEST_SUITE("lca") {

TEST_CASE("assembled oil-to-motion matrices") {
  const auto assembled = assemble_fixture();
  CHECK(assembled.problem.technology == fixture_a());
  CHECK(assembled.problem.environmental == fixture_b());
  CHECK(assembled.problem.technology(0, 1) == -61.9);
  CHECK(assembled.problem.environmental(0, 3) == 2.48e-1);
  CHECK(assembled.problem.environmental(2, 0) == -3.45);
  CHECK(assembled.problem.product_ids[2] == "distance@ev");
  CHECK(assembled.problem.aspect_ids == std::vector<std::string>{"co2", "nox", "crude_oil"});
}

TEST_CASE("flat CSV problem matches the assembled one") {
  const auto csv = parse_problem(data_path("oil-to-motion.problem.csv"));
  CHECK(csv.technology == fixture_a());
  CHECK(csv.environmental == fixture_b());
  CHECK(csv.demand == vec({0, 0, 500, 0, 0}));
}

TEST_CASE("EV and ICV scaling vectors") {
  const auto x_ev = solve_scaling(fixture_a(), vec({0, 0, 500, 0, 0})).scaling;
  // x3 = 500, x2 = 3.816 x3, x1 = 61.9 x2
  const double x3 = 500.0, x2 = 3.816 * x3, x1 = 61.9 * x2;
  CHECK(rel_err(x_ev, vec({x1, x2, x3, 0, 0})) <= 1e-12);
  CHECK(x_ev(1) == doctest::Approx(1908.0).epsilon(1e-12));
  CHECK(x_ev(0) == doctest::Approx(118105.2).epsilon(1e-12));

  const auto x_icv = solve_scaling(fixture_a(), vec({0, 0, 0, 500, 0})).scaling;
  CHECK(rel_err(x_icv, vec({0, 0, 0, 500, 53.3 * 500})) <= 1e-12);
}

TEST_CASE("published EV and ICV aspect vectors") {
  auto problem = assemble_fixture().problem;
  const Vector published_ev = vec({1.264e2, 5.260e2, 4.075e5});
  const Vector published_icv = vec({1.293e2, 1.228e2, 5.916e4});

  problem.demand = vec({0, 0, 500, 0, 0});
  const auto ev = solve_lca(problem);
  problem.demand = vec({0, 0, 0, 500, 0});
  const auto icv = solve_lca(problem);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(std::abs(std::abs(ev.aspects(i)) - published_ev(i)) <= 0.005 * published_ev(i));
    CHECK(std::abs(std::abs(icv.aspects(i)) - published_icv(i)) <= 0.005 * published_icv(i));
  }
  // Crude oil is consumed, so its signed entry is negative.
  CHECK(ev.aspects(2) < 0.0);
  CHECK(icv.aspects(2) < 0.0);
  CHECK(ev.reliable);
}

TEST_CASE("trivial problems") {
  SUBCASE("identity") {
    const Vector y = vec({3, -1, 2.5});
    CHECK(solve_scaling(DenseMatrix::Identity(3, 3), y).scaling == y);
  }
  SUBCASE("zero demand") {
    auto problem = assemble_fixture().problem;
    problem.demand = Vector::Zero(5);
    const auto r = solve_lca(problem);
    CHECK(r.scaling == Vector::Zero(5));
    CHECK(r.aspects == Vector::Zero(3));
  }
  SUBCASE("zero scaling") { CHECK(compute_aspects(fixture_b(), Vector::Zero(5)) == Vector::Zero(3)); }
  SUBCASE("single self-producing process") {
    ModelFile raw;
    raw.operands = {{"w", "W", "u"}};
    raw.resources = {{"r", "R", ResourceKind::transformation, {}}};
    raw.processes = {{"p", "P", ProcessKind::transformation, {}, {{"w", 1.0, ""}}, "w"}};
    raw.allocations = {{"p", "r", {}, {}}};
    const auto model = validate_model(raw);
    const auto a = assemble_lca(model, enumerate_capabilities(model), {});
    CHECK(a.problem.technology == DenseMatrix::Identity(1, 1));
    CHECK(a.problem.environmental.rows() == 0);
  }
}

TEST_CASE("compute_aspects matches a per-element loop") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = pick(rng, 1, 6), n = pick(rng, 1, 8);
    DenseMatrix b(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = coin(rng, 0.3) ? 0.0 : uniform(rng, -5, 5);
    const Vector x = random_vector(rng, n, -100, 100);
    Vector expected = Vector::Zero(b.rows());
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) expected(i) += b(i, j) * x(j);
    CHECK(compute_aspects(b, x) == expected);
  }
}

TEST_CASE("triangular systems match back-substitution") {
  Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = pick(rng, 1, 12);
    DenseMatrix u = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      u(i, i) = uniform(rng, 0.5, 2.0);
      for (Eigen::Index j = i + 1; j < u.cols(); ++j) u(i, j) = coin(rng, 0.5) ? -uniform(rng, 0.0, 3.0) : 0.0;
    }
    const Vector y = random_vector(rng, n, 0.0, 100.0);
    CHECK(rel_err(solve_scaling(u, y).scaling, back_substitute(u, y)) <= 1e-12);
  }
}

TEST_CASE("assembled chains are triangular in topological order") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = pick(rng, 2, 8);
    const auto raw = random_triangular_model(rng, n, 2);
    const auto model = validate_model(raw);
    const auto caps = enumerate_capabilities(model);
    const auto a = assemble_lca(model, caps, model.aspects).problem.technology;

    // Edge list producer -> consumer straight from the raw file.
    std::map<std::string, std::vector<std::string>> consumers;
    std::map<std::string, int> indegree;
    std::map<std::string, std::string> producer_of;
    for (const auto& p : raw.processes) {
      indegree[p.id];
      producer_of[p.primary_output] = p.id;
    }
    for (const auto& p : raw.processes)
      for (const auto& f : p.inputs)
        if (producer_of.count(f.operand)) {
          consumers[producer_of[f.operand]].push_back(p.id);
          ++indegree[p.id];
        }
    std::queue<std::string> ready;
    for (const auto& [id, d] : indegree)
      if (d == 0) ready.push(id);
    std::map<std::string, std::size_t> topo;
    while (!ready.empty()) {
      auto id = ready.front();
      ready.pop();
      topo[id] = topo.size();
      for (const auto& c : consumers[id])
        if (--indegree[c] == 0) ready.push(c);
    }
    REQUIRE(topo.size() == n);

    // Row c and column c of A both belong to capability c.
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        if (a(r, c) == 0.0) continue;
        const auto tr = topo[model.processes[caps[static_cast<std::size_t>(r)].process].id];
        const auto tc = topo[model.processes[caps[static_cast<std::size_t>(c)].process].id];
        CHECK(tr <= tc);
      }
  }
}

TEST_CASE("linearity, residual and round trip") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = validate_model(random_triangular_model(rng, pick(rng, 2, 9), pick(rng, 1, 3)));
    auto problem = assemble_lca(model, enumerate_capabilities(model), model.aspects).problem;
    const std::size_t n = static_cast<std::size_t>(problem.technology.rows());
    const Vector y1 = random_vector(rng, n, 0, 100), y2 = random_vector(rng, n, 0, 100);
    const double alpha = uniform(rng, -3, 3), beta = uniform(rng, -3, 3);

    problem.demand = y1;
    const auto r1 = solve_lca(problem);
    problem.demand = y2;
    const auto r2 = solve_lca(problem);
    problem.demand = alpha * y1 + beta * y2;
    const auto r12 = solve_lca(problem);
    const Vector combined = alpha * r1.scaling + beta * r2.scaling;
    CHECK(rel_err(r12.scaling, combined) <= 1e-9);

    for (const auto* r : {&r1, &r2, &r12})
      CHECK(r->residual <= 1e-9 * std::max(1.0, inf_norm(problem.demand.size() ? problem.demand : y1)));
    const Vector x0 = random_vector(rng, n, 0, 10);
    const Vector x = solve_scaling(problem.technology, problem.technology * x0).scaling;
    CHECK(rel_err(compute_aspects(problem.environmental, x), problem.environmental * x0) <= 1e-9);
  }
}

TEST_CASE("cyclic networks solve through general LU") {
  // Electricity needs a little steel, steel needs electricity.
  DenseMatrix a(2, 2);
  a << 1.0, -0.2, -0.5, 1.0;
  const Vector y = vec({10, 0});
  const auto s = solve_scaling(a, y);
  CHECK(rel_err(a * s.scaling, y) <= 1e-12);
  CHECK(s.scaling(0) == doctest::Approx(10.0 / 0.9));
}

TEST_CASE("singular and ill-conditioned technology matrices") {
  SUBCASE("singular") {
    DenseMatrix a(3, 3);
    a << 1, 2, 3, 2, 4, 6, 0, 0, 1;
    try {
      solve_scaling(a, vec({1, 1, 1}));
      FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
      CHECK(e.pivot_index() == 1);
      CHECK(e.exit_code() == 2);
    }
  }
  SUBCASE("ill-conditioned") {
    DenseMatrix a(2, 2);
    a << 1, 1, 1, 1 + 1e-14;
    CHECK_THROWS_AS(solve_scaling(a, vec({1, 1})), SingularMatrixError);
    SolverOptions lenient;
    lenient.allow_ill_conditioned = true;
    const auto s = solve_scaling(a, vec({1, 1}), lenient);
    CHECK_FALSE(s.warnings.empty());
    CHECK(s.condition_estimate > 1e12);
  }
  SUBCASE("exact condition number") {
    DenseMatrix a(2, 2);
    a << 2, 0, 0, 0.5;
    CHECK(LuDecomposition(a).condition_1norm() == doctest::Approx(4.0));
  }
}

TEST_CASE("problem validation") {
  LcaProblem p;
  p.technology = DenseMatrix::Identity(2, 3);
  CHECK_THROWS_AS(validate_problem(p), ValidationError);
  p.technology = -DenseMatrix::Identity(2, 2);
  CHECK_THROWS_AS(validate_problem(p), ValidationError);
}

}  // TEST_SUITE
