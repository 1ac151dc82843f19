#pragma once

#include <cmath>

namespace orbitsim {

/// Planar vector. Units depend on the dynamics regime (m or km).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 &operator+=(const Vec2 &o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2 &operator-=(const Vec2 &o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    constexpr Vec2 &operator*=(double s) {
        x *= s;
        y *= s;
        return *this;
    }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2 &a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator/(const Vec2 &a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }
inline bool is_finite(const Vec2 &a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Rotate by +90 degrees.
constexpr Vec2 left_perpendicular(const Vec2 &a) { return {-a.y, a.x}; }

/// Scale `v` down so that its norm does not exceed `max_norm`.
inline Vec2 clamp_norm(const Vec2 &v, double max_norm) {
    const double n = norm(v);
    if (n <= max_norm || n == 0.0) return v;
    return v * (max_norm / n);
}

} // namespace orbitsim
