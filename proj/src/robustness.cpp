#include "safelearn/robustness.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "safelearn/error.hpp"

namespace safelearn::stl {

namespace {

// Bottom-up evaluation of robustness signals. Each node is evaluated once over
// the contiguous range of time indices its parent needs; values live in a
// per-thread arena addressed by offset so that growth never invalidates them.
class SignalEvaluator {
 public:
  explicit SignalEvaluator(const Trace& trace) : trace_(trace) { arena().clear(); }

  // Returns the arena offset of values for t in [begin, end].
  std::size_t eval(const Formula& f, int begin, int end) {
    const auto n = static_cast<std::size_t>(end - begin + 1);
    switch (f.kind) {
      case Kind::Predicate: {
        std::size_t out = alloc(n);
        auto& a = arena();
        for (int t = begin; t <= end; ++t) {
          const Sample& s = trace_[t];
          double v = f.pred.dim == Dim::X ? s.x : s.y;
          bool upper = f.pred.cmp == Cmp::Lt || f.pred.cmp == Cmp::Le;
          a[out + static_cast<std::size_t>(t - begin)] =
              upper ? f.pred.threshold - v : v - f.pred.threshold;
        }
        return out;
      }
      case Kind::Not: {
        std::size_t out = eval(f.children[0], begin, end);
        auto& a = arena();
        for (std::size_t i = 0; i < n; ++i) a[out + i] = -a[out + i];
        return out;
      }
      case Kind::And:
      case Kind::Or: {
        std::size_t lhs = eval(f.children[0], begin, end);
        std::size_t rhs = eval(f.children[1], begin, end);
        auto& a = arena();
        for (std::size_t i = 0; i < n; ++i) {
          a[lhs + i] = f.kind == Kind::And ? std::min(a[lhs + i], a[rhs + i])
                                           : std::max(a[lhs + i], a[rhs + i]);
        }
        return lhs;
      }
      case Kind::Globally:
      case Kind::Eventually: {
        const int lo = f.interval.lo;
        const int hi = f.interval.hi;
        std::size_t child = eval(f.children[0], begin + lo, end + hi);
        std::size_t out = alloc(n);
        auto& a = arena();
        for (std::size_t i = 0; i < n; ++i) {
          // child index i + k corresponds to time begin + lo + i + k
          double acc = a[child + i];
          for (int k = 1; k <= hi - lo; ++k) {
            double v = a[child + i + static_cast<std::size_t>(k)];
            acc = f.kind == Kind::Globally ? std::min(acc, v) : std::max(acc, v);
          }
          a[out + i] = acc;
        }
        return out;
      }
      case Kind::Until: {
        const int lo = f.interval.lo;
        const int hi = f.interval.hi;
        std::size_t left = eval(f.children[0], begin, end + hi);
        std::size_t right = eval(f.children[1], begin, end + hi);
        std::size_t out = alloc(n);
        auto& a = arena();
        for (std::size_t i = 0; i < n; ++i) {
          double best = 0.0;
          bool have = false;
          double left_min = a[left + i];
          for (int k = 0; k <= hi; ++k) {
            auto idx = i + static_cast<std::size_t>(k);
            left_min = std::min(left_min, a[left + idx]);
            if (k < lo) continue;
            double v = std::min(a[right + idx], left_min);
            best = have ? std::max(best, v) : v;
            have = true;
          }
          a[out + i] = best;
        }
        return out;
      }
    }
    return 0;
  }

  static std::vector<double>& arena() {
    thread_local std::vector<double> buf;
    return buf;
  }

 private:
  const Trace& trace_;

  static std::size_t alloc(std::size_t n) {
    auto& a = arena();
    std::size_t off = a.size();
    a.resize(off + n);
    return off;
  }
};

}  // namespace

double robustness_unchecked(const Formula& f, const Trace& trace) {
  SignalEvaluator ev(trace);
  std::size_t off = ev.eval(f, 0, 0);
  return SignalEvaluator::arena()[off];
}

double robustness(const Formula& f, const Trace& trace, int t) {
  const int h = horizon(f);
  if (t < 0 || t + h > trace.length() - 1) {
    throw TraceLengthError("formula with horizon " + std::to_string(h) +
                           " cannot be evaluated at t=" + std::to_string(t) +
                           " on a trace of length " + std::to_string(trace.length()));
  }
  SignalEvaluator ev(trace);
  std::size_t off = ev.eval(f, t, t);
  return SignalEvaluator::arena()[off];
}

bool satisfies(const Formula& f, const Trace& trace) { return robustness(f, trace, 0) >= 0.0; }

}  // namespace safelearn::stl
