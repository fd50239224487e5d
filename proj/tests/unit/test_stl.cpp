#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "safelearn/error.hpp"
#include "safelearn/formula.hpp"
#include "safelearn/robustness.hpp"
#include "support/oracles.hpp"

using namespace safelearn;
using namespace safelearn::stl;
using oracle::trace_xy;

TEST_SUITE("stl") {

TEST_CASE("parse builds the expected trees") {
  CHECK(parse_formula("G[0,5](x < 3.0)") == globally({0, 5}, predicate(Dim::X, Cmp::Lt, 3.0)));
  CHECK(parse_formula("F[2,4]((x > 1) & (y <= 2))") ==
        eventually({2, 4}, conjunction(predicate(Dim::X, Cmp::Gt, 1), predicate(Dim::Y, Cmp::Le, 2))));
  CHECK(parse_formula("((x > 2) U[0,2] (y > 0))") ==
        until(predicate(Dim::X, Cmp::Gt, 2), {0, 2}, predicate(Dim::Y, Cmp::Gt, 0)));
  CHECK(parse_formula("!(y >= 0)") == negation(predicate(Dim::Y, Cmp::Ge, 0)));
}

TEST_CASE("parse is whitespace-insensitive") {
  CHECK(parse_formula("  G [ 0 , 5 ] ( x<3 )  ") == parse_formula("G[0,5](x < 3)"));
  CHECK(parse_formula("((x>1)|(y>=-2.5))") == parse_formula("( (x > 1) | (y >= -2.5) )"));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_formula("G[5,2](x < 1)"), IntervalError);
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("(x < )"), ParseError);
  CHECK_THROWS_AS(parse_formula("(z < 1)"), ParseError);
  CHECK_THROWS_AS(parse_formula("G[0](x < 1)"), ParseError);
  CHECK_THROWS_AS(parse_formula("(x < 1) trailing"), ParseError);
  CHECK_THROWS_AS(parse_formula("((x < 1) & (y < 2)"), ParseError);
  CHECK_THROWS_AS(parse_formula("G[-1,2](x < 1)"), ParseError);

  try {
    parse_formula("((x < 1) ? (y < 2))");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 9);
  }
}

TEST_CASE("temporal constructors validate intervals") {
  auto p = predicate(Dim::X, Cmp::Lt, 1);
  CHECK_THROWS_AS(globally({3, 2}, p), IntervalError);
  CHECK_THROWS_AS(eventually({-1, 2}, p), IntervalError);
  CHECK_THROWS_AS(until(p, {4, 1}, p), IntervalError);
  CHECK_NOTHROW(globally({2, 2}, p));
}

TEST_CASE("format is canonical") {
  CHECK(format_formula(predicate(Dim::X, Cmp::Lt, 3)) == "(x < 3)");
  CHECK(format_formula(negation(predicate(Dim::Y, Cmp::Ge, 0))) == "!(y >= 0)");
  CHECK(format_formula(conjunction(predicate(Dim::X, Cmp::Lt, 3), predicate(Dim::Y, Cmp::Gt, 1))) ==
        "((x < 3) & (y > 1))");
  CHECK(format_formula(globally({0, 5}, predicate(Dim::X, Cmp::Le, 2.5))) == "G[0,5](x <= 2.5)");
  CHECK(format_formula(until(predicate(Dim::X, Cmp::Gt, 2), {0, 2}, predicate(Dim::Y, Cmp::Gt, 0))) ==
        "((x > 2) U[0,2] (y > 0))");
}

TEST_CASE("print/parse round trip on random formulas") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto f = oracle::random_formula(rng, 4);
    auto text = format_formula(f);
    auto back = parse_formula(text);
    CHECK(back == f);
    CHECK(format_formula(back) == text);
  }
  // Thresholds that need all 17 significant digits survive.
  auto f = predicate(Dim::Y, Cmp::Ge, 0.1 + 0.2);
  CHECK(parse_formula(format_formula(f)) == f);
}

TEST_CASE("horizon") {
  CHECK(horizon(predicate(Dim::X, Cmp::Lt, 3)) == 0);
  CHECK(horizon(parse_formula("G[0,5](x < 3)")) == 5);
  CHECK(horizon(parse_formula("F[2,4]G[0,3](y > 1)")) == 7);
  CHECK(horizon(parse_formula("(G[0,2](x < 1) U[1,3] F[0,4](y > 1))")) == 7);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    auto f = oracle::random_formula(rng, 4);
    CHECK(horizon(f) == oracle::naive_horizon(f));
  }
}

TEST_CASE("depth, node count and well-formedness") {
  auto f = parse_formula("F[2,4]((x > 1) & !(y <= 2))");
  CHECK(depth(f) == 4);
  CHECK(node_count(f) == 5);
  CHECK(is_well_formed(f, 4));
  CHECK_FALSE(is_well_formed(f, 3));
  CHECK(is_well_formed(f, 4, 4));
  CHECK_FALSE(is_well_formed(f, 4, 3));
}

TEST_CASE("robustness examples") {
  SUBCASE("predicate") {
    auto w = trace_xy({2.75}, {0});
    CHECK(robustness(parse_formula("(x > 0)"), w) == 2.75);
    CHECK(robustness(parse_formula("(x < 0)"), w) == -2.75);
    CHECK(robustness(parse_formula("(x >= 0)"), w) == robustness(parse_formula("(x > 0)"), w));
  }
  SUBCASE("globally") {
    auto w = trace_xy({0, 1, 2, 3}, {0, 0, 0, 0});
    auto f = parse_formula("G[0,3](x < 5)");
    CHECK(robustness(f, w) == 2.0);
    CHECK(satisfies(f, w));
  }
  SUBCASE("eventually") {
    auto w = trace_xy({0, 0, 0}, {1, 5, 2});
    CHECK(robustness(parse_formula("F[0,2](y >= 4)"), w) == 1.0);
  }
  SUBCASE("until") {
    auto w = trace_xy({3, 3, 3}, {-1, -1, 2});
    CHECK(robustness(parse_formula("((x > 2) U[0,2] (y > 0))"), w) == 1.0);
  }
  SUBCASE("evaluation at a later time index") {
    auto w = trace_xy({0, 1, 2, 3, 4}, {0, 0, 0, 0, 0});
    CHECK(robustness(parse_formula("G[0,2](x < 5)"), w, 2) == 1.0);
  }
}

TEST_CASE("satisfaction boundary is inclusive") {
  auto w = trace_xy({3}, {0});
  CHECK(robustness(parse_formula("(x > 3)"), w) == 0.0);
  CHECK(satisfies(parse_formula("(x > 3)"), w));
  CHECK_FALSE(satisfies(parse_formula("(x > 3.5)"), w));
}

TEST_CASE("short traces are rejected") {
  auto w = trace_xy({0, 1, 2}, {0, 0, 0});
  CHECK_THROWS_AS(robustness(parse_formula("G[0,3](x < 5)"), w), TraceLengthError);
  CHECK_THROWS_AS(robustness(parse_formula("G[0,1](x < 5)"), w, 2), TraceLengthError);
  CHECK_THROWS_AS(satisfies(parse_formula("F[1,5](x < 5)"), w), TraceLengthError);
  CHECK_NOTHROW(robustness(parse_formula("G[0,2](x < 5)"), w));
}

TEST_CASE("production evaluator matches the naive oracle") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    auto f = oracle::random_formula(rng, 3);
    int h = horizon(f);
    int length = h + 1 + static_cast<int>(rng() % 4);
    auto w = oracle::random_trace(rng, length);
    int t = static_cast<int>(rng() % static_cast<std::uint64_t>(length - h));
    double expected = oracle::naive_rho(f, w, t);
    double got = robustness(f, w, t);
    REQUIRE_MESSAGE(got == expected, format_formula(f) << " at t=" << t);
    ++checked;
  }
  CHECK(checked == 2000);
}

TEST_CASE("dualities hold exactly") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    auto a = oracle::random_formula(rng, 3);
    auto b = oracle::random_formula(rng, 3);
    Interval iv{static_cast<int>(rng() % 3), 3};
    int h = std::max(horizon(a), horizon(b)) + iv.hi;
    int length = h + 1 + static_cast<int>(rng() % 3);
    auto w = oracle::random_trace(rng, length);
    int t = static_cast<int>(rng() % static_cast<std::uint64_t>(length - h));

    CHECK(robustness(negation(a), w, t) == -robustness(a, w, t));
    CHECK(robustness(negation(conjunction(a, b)), w, t) ==
          robustness(disjunction(negation(a), negation(b)), w, t));
    CHECK(robustness(globally(iv, a), w, t) == -robustness(eventually(iv, negation(a)), w, t));
  }
}

TEST_CASE("upper-bound predicate robustness increases with the threshold") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto w = oracle::random_trace(rng, 1);
    double c = static_cast<double>(rng() % 100) / 10.0;
    CHECK(robustness(predicate(Dim::X, Cmp::Lt, c + 0.25), w) > robustness(predicate(Dim::X, Cmp::Lt, c), w));
  }
}

TEST_CASE("trace construction and JSON") {
  CHECK_THROWS_AS(Trace(std::vector<Sample>{}), std::invalid_argument);
  CHECK_THROWS_AS(Trace({{0, NAN}}), std::invalid_argument);
  CHECK_THROWS_AS(Trace({{INFINITY, 0}}), std::invalid_argument);

  auto w = trace_xy({0, 1.5, 2}, {3, 4, -1});
  auto j = trace_to_json(w);
  CHECK(j["length"] == 3);
  CHECK(j["samples"][1][0] == 1.5);
  auto back = trace_from_json(j);
  CHECK(std::equal(back.samples().begin(), back.samples().end(), w.samples().begin(), w.samples().end()));
  CHECK_THROWS(trace_from_json(nlohmann::json{{"length", 4}, {"samples", j["samples"]}}));
}

}  // TEST_SUITE
