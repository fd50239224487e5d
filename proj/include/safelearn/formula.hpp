#pragma once

// Formula trees over the two coordinate channels of a grid trace.
//
//   phi ::= pred | !phi | (phi & phi) | (phi | phi)
//         | G[a,b] phi | F[a,b] phi | (phi U[a,b] phi)
//   pred ::= (dim cmp number),  dim in {x, y}, cmp in {<, <=, >, >=}
//
// Every temporal operator carries a bounded integer interval, so the horizon
// of a formula is always finite.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace safelearn::stl {

enum class Dim : std::uint8_t { X, Y };
enum class Cmp : std::uint8_t { Lt, Le, Gt, Ge };
enum class Kind : std::uint8_t { Predicate, Not, And, Or, Globally, Eventually, Until };

struct Predicate {
  Dim dim = Dim::X;
  Cmp cmp = Cmp::Lt;
  double threshold = 0.0;

  bool operator==(const Predicate&) const = default;
};

/// Closed interval of time steps [lo, hi], 0 <= lo <= hi.
struct Interval {
  int lo = 0;
  int hi = 0;

  bool operator==(const Interval&) const = default;
};

struct Formula {
  Kind kind = Kind::Predicate;
  Predicate pred{};       // Predicate only
  Interval interval{};    // Globally, Eventually, Until only
  std::vector<Formula> children;

  bool operator==(const Formula& other) const;
};

// Constructors. Temporal ones throw IntervalError when lo > hi or lo < 0.
Formula predicate(Dim dim, Cmp cmp, double threshold);
Formula negation(Formula child);
Formula conjunction(Formula lhs, Formula rhs);
Formula disjunction(Formula lhs, Formula rhs);
Formula globally(Interval iv, Formula child);
Formula eventually(Interval iv, Formula child);
Formula until(Formula lhs, Interval iv, Formula rhs);

int arity(Kind kind) noexcept;
bool is_temporal(Kind kind) noexcept;

/// Number of future steps needed to evaluate at a time index.
int horizon(const Formula& f);

/// A lone predicate has depth 1.
int depth(const Formula& f);

int node_count(const Formula& f);

/// Checks node arity, interval ordering and the depth limit. When
/// `max_time` >= 0 interval bounds must also lie in [0, max_time].
bool is_well_formed(const Formula& f, int max_depth, int max_time = -1);

/// Canonical fully parenthesized form; parse_formula(format_formula(f)) == f.
std::string format_formula(const Formula& f);

/// Throws ParseError (with byte position) or IntervalError.
Formula parse_formula(std::string_view text);

std::string_view to_string(Cmp cmp) noexcept;
std::string_view to_string(Dim dim) noexcept;

}  // namespace safelearn::stl
