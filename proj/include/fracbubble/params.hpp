#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracbubble {

// Model parameters for the flat fractional problem. Valid range:
// gamma in (0,1) and n - 2*gamma > 0 (so n = 1 requires gamma < 1/2).
struct FracParams {
    int n = 2;                  // boundary dimension, 1..3 supported by the numerics
    double gamma = 0.25;        // fractional order
    double critical_exponent;   // p = (n + 2g) / (n - 2g)
    double trace_weight;        // 1 - 2g, the extension weight exponent
    bool near_half;             // |gamma - 1/2| < 1e-3: trace-splitting ops unavailable
};

inline FracParams make_params(int n, double gamma) {
    if (n < 1 || n > 3)
        throw std::invalid_argument("make_params: n must be 1, 2 or 3");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw std::invalid_argument("make_params: gamma must lie in (0,1)");
    if (!(n - 2.0 * gamma > 0.0))
        throw std::invalid_argument("make_params: require n - 2*gamma > 0");
    FracParams p;
    p.n = n;
    p.gamma = gamma;
    p.critical_exponent = (n + 2.0 * gamma) / (n - 2.0 * gamma);
    p.trace_weight = 1.0 - 2.0 * gamma;
    p.near_half = std::abs(gamma - 0.5) < 1e-3;
    return p;
}

// Point in the boundary R^n. Fixed-capacity to keep hot loops allocation-free.
using Vec = std::array<double, 3>;

inline Vec vec(double x0 = 0.0, double x1 = 0.0, double x2 = 0.0) {
    return Vec{x0, x1, x2};
}

inline double dot(const Vec& a, const Vec& b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline Vec sub(const Vec& a, const Vec& b) {
    return Vec{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec add(const Vec& a, const Vec& b) {
    return Vec{a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec scale(const Vec& a, double c) {
    return Vec{c * a[0], c * a[1], c * a[2]};
}

inline double norm2(const Vec& a, int n) { return dot(a, a, n); }

// One bubble: center a in R^n, concentration scale lambda > 0.
struct Bubble {
    Vec center = vec();
    double scale = 1.0;
};

inline Bubble make_bubble(const Vec& center, double scale) {
    if (!(scale > 0.0))
        throw std::invalid_argument("make_bubble: scale must be positive");
    return Bubble{center, scale};
}

}  // namespace fracbubble
