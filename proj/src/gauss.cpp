#include "wdro/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace wdro {

namespace {

constexpr double kSaturation = 40.0;
constexpr double kComplementaryBranch = 5.0;
constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490392848;

}  // namespace

Probability::Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) throw InputError("probability outside [0, 1]: " + std::to_string(value));
}

Probability std_normal_cdf(double t) {
    require(!std::isnan(t), "std_normal_cdf: NaN argument");
    if (t < -kSaturation) return Probability(0.0);
    if (t > kSaturation) return Probability(1.0);
    double p;
    if (t < -kComplementaryBranch) {
        p = 0.5 * std::erfc(-t * kInvSqrt2);
    } else if (t > kComplementaryBranch) {
        p = 1.0 - 0.5 * std::erfc(t * kInvSqrt2);
    } else {
        p = 0.5 * (1.0 + std::erf(t * kInvSqrt2));
    }
    return Probability(std::clamp(p, 0.0, 1.0));
}

double std_normal_sf(double t) {
    require(!std::isnan(t), "std_normal_sf: NaN argument");
    if (t > kSaturation) return 0.0;
    if (t < -kSaturation) return 1.0;
    return std::clamp(0.5 * std::erfc(t * kInvSqrt2), 0.0, 1.0);
}

double std_normal_interval(double lo, double hi) {
    if (hi == lo) return 0.0;
    if (hi < lo) return -std_normal_interval(hi, lo);
    // Both ends in the upper half: difference of upper tails keeps precision.
    if (lo >= 0.0) return std_normal_sf(lo) - std_normal_sf(hi);
    if (hi <= 0.0) return std_normal_sf(-hi) - std_normal_sf(-lo);
    return 1.0 - std_normal_sf(hi) - std_normal_sf(-lo);
}

}  // namespace wdro
