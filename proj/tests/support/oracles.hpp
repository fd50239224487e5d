#pragma once

// Independent reference implementations used to check the library. Kept
// deliberately naive: direct transcriptions with no sharing or caching.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "safelearn/formula.hpp"
#include "safelearn/trace.hpp"

namespace oracle {

using safelearn::Trace;
using safelearn::stl::Cmp;
using safelearn::stl::Dim;
using safelearn::stl::Formula;
using safelearn::stl::Kind;

inline double naive_rho(const Formula& f, const Trace& w, int t) {
  switch (f.kind) {
    case Kind::Predicate: {
      double v = f.pred.dim == Dim::X ? w[t].x : w[t].y;
      bool upper = f.pred.cmp == Cmp::Lt || f.pred.cmp == Cmp::Le;
      return upper ? f.pred.threshold - v : v - f.pred.threshold;
    }
    case Kind::Not:
      return -naive_rho(f.children[0], w, t);
    case Kind::And:
      return std::min(naive_rho(f.children[0], w, t), naive_rho(f.children[1], w, t));
    case Kind::Or:
      return std::max(naive_rho(f.children[0], w, t), naive_rho(f.children[1], w, t));
    case Kind::Globally: {
      double r = std::numeric_limits<double>::infinity();
      for (int s = t + f.interval.lo; s <= t + f.interval.hi; ++s) r = std::min(r, naive_rho(f.children[0], w, s));
      return r;
    }
    case Kind::Eventually: {
      double r = -std::numeric_limits<double>::infinity();
      for (int s = t + f.interval.lo; s <= t + f.interval.hi; ++s) r = std::max(r, naive_rho(f.children[0], w, s));
      return r;
    }
    case Kind::Until: {
      double r = -std::numeric_limits<double>::infinity();
      for (int s = t + f.interval.lo; s <= t + f.interval.hi; ++s) {
        double left = std::numeric_limits<double>::infinity();
        for (int u = t; u <= s; ++u) left = std::min(left, naive_rho(f.children[0], w, u));
        r = std::max(r, std::min(naive_rho(f.children[1], w, s), left));
      }
      return r;
    }
  }
  return 0.0;
}

inline int naive_horizon(const Formula& f) {
  switch (f.kind) {
    case Kind::Predicate:
      return 0;
    case Kind::Not:
      return naive_horizon(f.children[0]);
    case Kind::And:
    case Kind::Or:
      return std::max(naive_horizon(f.children[0]), naive_horizon(f.children[1]));
    case Kind::Globally:
    case Kind::Eventually:
      return f.interval.hi + naive_horizon(f.children[0]);
    case Kind::Until:
      return f.interval.hi + std::max(naive_horizon(f.children[0]), naive_horizon(f.children[1]));
  }
  return 0;
}

/// Random formula of depth <= max_depth, built without the library's
/// generators. Thresholds are drawn from a coarse grid so ties occur.
inline Formula random_formula(std::mt19937_64& rng, int max_depth, int max_bound = 4) {
  using namespace safelearn::stl;
  std::uniform_int_distribution<int> kind_d(0, max_depth <= 1 ? 0 : 6);
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> cmp_d(0, 3);
  std::uniform_int_distribution<int> thr_d(-4, 24);
  std::uniform_int_distribution<int> bound_d(0, max_bound);
  auto interval = [&] {
    int a = bound_d(rng);
    int b = bound_d(rng);
    return Interval{std::min(a, b), std::max(a, b)};
  };
  switch (kind_d(rng)) {
    case 0:
      return predicate(bit(rng) ? Dim::X : Dim::Y, static_cast<Cmp>(cmp_d(rng)), thr_d(rng) / 4.0);
    case 1:
      return negation(random_formula(rng, max_depth - 1, max_bound));
    case 2:
      return conjunction(random_formula(rng, max_depth - 1, max_bound),
                         random_formula(rng, max_depth - 1, max_bound));
    case 3:
      return disjunction(random_formula(rng, max_depth - 1, max_bound),
                         random_formula(rng, max_depth - 1, max_bound));
    case 4:
      return globally(interval(), random_formula(rng, max_depth - 1, max_bound));
    case 5:
      return eventually(interval(), random_formula(rng, max_depth - 1, max_bound));
    default: {
      auto lhs = random_formula(rng, max_depth - 1, max_bound);
      auto iv = interval();
      return until(std::move(lhs), iv, random_formula(rng, max_depth - 1, max_bound));
    }
  }
}

inline Trace random_trace(std::mt19937_64& rng, int length) {
  std::uniform_int_distribution<int> coord(0, 5);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::vector<safelearn::Sample> s;
  for (int i = 0; i < length; ++i) {
    // Mix integer cells (ties) with off-grid values.
    bool exact = rng() % 2 == 0;
    s.push_back({coord(rng) + (exact ? 0.0 : jitter(rng)), coord(rng) + (exact ? 0.0 : jitter(rng))});
  }
  return Trace(std::move(s));
}

inline Trace trace_xy(std::vector<double> xs, std::vector<double> ys) {
  std::vector<safelearn::Sample> s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.push_back({xs[i], ys[i]});
  return Trace(std::move(s));
}

/// Collects every predicate leaf in preorder.
inline void leaves(const Formula& f, std::vector<Formula>& out) {
  if (f.kind == Kind::Predicate) {
    out.push_back(f);
    return;
  }
  for (const auto& c : f.children) leaves(c, out);
}

}  // namespace oracle
