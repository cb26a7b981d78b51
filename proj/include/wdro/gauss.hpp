#pragma once

#include <cmath>
#include <numbers>

#include "wdro/types.hpp"

namespace wdro {

/// A value known to lie in [0, 1].
class Probability {
public:
    constexpr Probability() = default;
    explicit Probability(double value);

    constexpr double value() const noexcept { return value_; }
    constexpr operator double() const noexcept { return value_; }

private:
    double value_ = 0.0;
};

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684759;

/// Standard normal c.d.f. Absolute error below 1e-12 everywhere; exactly 0 / 1
/// for |t| > 40.
Probability std_normal_cdf(double t);

/// Upper tail 1 - Phi(t), accurate in relative terms for large positive t.
double std_normal_sf(double t);

/// Phi(hi) - Phi(lo) without cancellation when both ends sit in the same tail.
double std_normal_interval(double lo, double hi);

inline double std_normal_pdf(double t) {
    return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

}  // namespace wdro
