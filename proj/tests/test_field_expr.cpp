#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "sweep/field_expr.hpp"
#include "sweep/random.hpp"

using namespace sweep;

TEST_CASE("parses well-formed polynomials") {
  const FieldExpr e = parse_field("x1^2 + x2^2", 2);
  CHECK(e.dim() == 2);
  CHECK(e.uses_coords());
  CHECK_FALSE(e.uses_time());
}

TEST_CASE("syntax error carries the byte offset") {
  try {
    parse_field("x1 +", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("variable index beyond dim is rejected") {
  CHECK_THROWS_WITH_AS(parse_field("x3", 2),
                       doctest::Contains("variable index exceeds dim"),
                       ParseError);
}

TEST_CASE("unknown identifiers are rejected") {
  CHECK_THROWS_AS(parse_field("foo(x1)", 1), ParseError);
  CHECK_THROWS_AS(parse_field("y", 1), ParseError);
}

TEST_CASE("exponents must be constant") {
  CHECK_THROWS_AS(parse_field("x1^x1", 1), ParseError);
  CHECK_NOTHROW(parse_field("x1^(1+1)", 1));
  CHECK_NOTHROW(parse_field("x1^-2", 1));
}

TEST_CASE("jet of a polynomial") {
  const FieldExpr e = parse_field("x1^2 + x2^2", 2);
  const FieldJet j = e.jet(0.0, std::vector<double>{1.0, 2.0});
  CHECK(j.value == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(j.dt == 0.0);
  CHECK(j.dx[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(j.dx[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("jet of a linear time-space field") {
  const FieldExpr e = parse_field("x1 + t", 1);
  const FieldJet j = e.jet(3.0, std::vector<double>{-3.0});
  CHECK(j.value == doctest::Approx(0.0));
  CHECK(j.dt == doctest::Approx(1.0));
  CHECK(j.dx[0] == doctest::Approx(1.0));
}

TEST_CASE("jet of a distance-like field matches finite differences") {
  const FieldExpr e = parse_field("sqrt(x1^2 + x2^2) + t - 1", 2);
  const FieldJet j = e.jet(0.0, std::vector<double>{1.0, 0.0});
  CHECK(j.value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(j.dt == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(j.dx[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(j.dx[1]) < 1e-14);

  const auto fd = oracle::fd_jet(e, 0.0, {1.0, 0.0});
  CHECK(j.dt == doctest::Approx(fd.dt).epsilon(1e-8));
  CHECK(j.dx[0] == doctest::Approx(fd.dx[0]).epsilon(1e-8));
}

TEST_CASE("domain errors name the offending subexpression") {
  const FieldExpr e = parse_field("log(x1 - 2)", 1);
  try {
    e.jet(0.0, std::vector<double>{1.0});
    FAIL("expected a domain error");
  } catch (const EvalError& err) {
    CHECK(err.subexpr() == "log(x1 - 2)");
  }
  CHECK_THROWS_AS(parse_field("sqrt(x1)", 1).jet(0.0, std::vector<double>{-1.0}),
                  EvalError);
  CHECK_THROWS_AS(parse_field("1/x1", 1).jet(0.0, std::vector<double>{0.0}),
                  EvalError);
}

TEST_CASE("kinks flag instead of erroring and take the first argument") {
  const FieldExpr e = parse_field("abs(x1)", 1);
  const FieldJet j = e.jet(0.0, std::vector<double>{0.0});
  CHECK(j.nonsmooth);
  CHECK(j.dx[0] == doctest::Approx(1.0));  // one-sided, from the argument

  const FieldExpr m = parse_field("min(x1, 2*x1)", 1);
  const FieldJet jm = m.jet(0.0, std::vector<double>{0.0});
  CHECK(jm.nonsmooth);
  CHECK(jm.dx[0] == doctest::Approx(1.0));  // first argument's derivative
}

TEST_CASE("precedence: caret binds tightest and is right-associative") {
  const FieldExpr e = parse_field("-x1^2", 1);
  CHECK(e.value(0.0, std::vector<double>{3.0}) == doctest::Approx(-9.0));
  const FieldExpr f = parse_field("2*x1^2 + 1", 1);
  CHECK(f.value(0.0, std::vector<double>{2.0}) == doctest::Approx(9.0));
  const FieldExpr g = parse_field("x1^(3^2)", 1);  // explicit grouping
  const FieldExpr h = parse_field("x1^3^2", 1);
  CHECK(g.value(0.0, std::vector<double>{1.1}) ==
        doctest::Approx(h.value(0.0, std::vector<double>{1.1})));
}

// -------------------------------------------------------------------------
// Random expression fuzzing: derivatives against central differences, and
// print/parse round trips.
// -------------------------------------------------------------------------

namespace {

std::string random_expr(DeterministicRng& rng, int depth) {
  const auto coin = [&](int sides) {
    return static_cast<int>(rng.next_u64() % sides);
  };
  if (depth == 0 || coin(4) == 0) {
    switch (coin(4)) {
      case 0: return "t";
      case 1: return "x1";
      case 2: return "x2";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", rng.uniform(-2.0, 2.0));
        return std::string(buf);
      }
    }
  }
  const std::string a = random_expr(rng, depth - 1);
  const std::string b = random_expr(rng, depth - 1);
  switch (coin(7)) {
    case 0: return "(" + a + " + " + b + ")";
    case 1: return "(" + a + " - " + b + ")";
    case 2: return "(" + a + " * " + b + ")";
    case 3: return "sin(" + a + ")";
    case 4: return "cos(" + a + ")";
    case 5: return "(" + a + ")^2";
    default: return "exp(sin(" + a + "))";
  }
}

}  // namespace

TEST_CASE("random expressions: jets match central differences") {
  DeterministicRng rng(42);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string src = random_expr(rng, 3);
    const FieldExpr e = parse_field(src, 2);
    const double t = rng.uniform(-1.0, 1.0);
    std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const FieldJet j = e.jet(t, x);
    const auto fd = oracle::fd_jet(e, t, x);
    // relative error away from kinks (this grammar subset has none)
    const double scale =
        1.0 + std::abs(fd.dt) + std::abs(fd.dx[0]) + std::abs(fd.dx[1]);
    CHECK(std::abs(j.dt - fd.dt) / scale < 1e-6);
    CHECK(std::abs(j.dx[0] - fd.dx[0]) / scale < 1e-6);
    CHECK(std::abs(j.dx[1] - fd.dx[1]) / scale < 1e-6);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("printing round-trips to an identical ast") {
  DeterministicRng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string src = random_expr(rng, 3);
    const FieldExpr e = parse_field(src, 2);
    const FieldExpr round = parse_field(e.print(), 2);
    CHECK(e.same_ast(round));
    CHECK(round.print() == e.print());
  }
}
