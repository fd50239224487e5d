#pragma once

#include "safelearn/formula.hpp"
#include "safelearn/trace.hpp"

namespace safelearn::stl {

/// Quantitative robustness of `f` on `trace` at time index `t` under
/// discrete-time min/max semantics. Throws TraceLengthError unless
/// t + horizon(f) <= trace.length() - 1.
double robustness(const Formula& f, const Trace& trace, int t = 0);

/// robustness(f, trace, 0) >= 0. Zero counts as satisfied.
bool satisfies(const Formula& f, const Trace& trace);

/// Same as robustness(f, trace, 0) with a precomputed horizon and no
/// length check; the caller guarantees horizon(f) < trace.length().
double robustness_unchecked(const Formula& f, const Trace& trace);

}  // namespace safelearn::stl
