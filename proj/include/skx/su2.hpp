#pragma once

// SU(2) arithmetic: products, adjoints, the trace-norm metric, the
// axis-angle ball mapping, and the balanced group commutator.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

#include "skx/error.hpp"

namespace skx {

using Complex = std::complex<double>;

/// 2x2 complex matrix [[a, b], [c, d]]. Gates in this library are kept in
/// SU(2); `project_to_su2` is the entry point for arbitrary unitaries.
struct Unitary {
    Complex a{1.0, 0.0};
    Complex b{0.0, 0.0};
    Complex c{0.0, 0.0};
    Complex d{1.0, 0.0};

    static constexpr Unitary identity() { return {}; }

    Complex trace() const { return a + d; }
    Complex det() const { return a * d - b * c; }

    friend bool operator==(const Unitary&, const Unitary&) = default;
};

inline Unitary operator-(const Unitary& u) { return {-u.a, -u.b, -u.c, -u.d}; }

inline Unitary multiply(const Unitary& x, const Unitary& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

inline Unitary operator*(const Unitary& x, const Unitary& y) { return multiply(x, y); }

inline Unitary adjoint(const Unitary& u) {
    return {std::conj(u.a), std::conj(u.c), std::conj(u.b), std::conj(u.d)};
}

/// Largest entrywise modulus of x - y.
inline double max_entry_error(const Unitary& x, const Unitary& y) {
    return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), std::abs(x.c - y.c),
                     std::abs(x.d - y.d)});
}

inline bool is_unitary(const Unitary& u, double tol = 1e-12) {
    return max_entry_error(u * adjoint(u), Unitary::identity()) <= tol;
}

inline bool is_special_unitary(const Unitary& u, double tol = 1e-12) {
    return is_unitary(u, tol) && std::abs(u.det() - 1.0) <= tol;
}

/// Trace norm Tr sqrt((x-y)^dagger (x-y)).
///
/// For a 2x2 matrix M with singular values s1, s2 we have
/// s1^2 + s2^2 = |M|_F^2 and s1 * s2 = |det M|, so the nuclear norm is
/// sqrt(|M|_F^2 + 2 |det M|). No square roots of matrices are formed.
inline double trace_distance(const Unitary& x, const Unitary& y) {
    const Complex m00 = x.a - y.a;
    const Complex m01 = x.b - y.b;
    const Complex m10 = x.c - y.c;
    const Complex m11 = x.d - y.d;
    const double frob = std::norm(m00) + std::norm(m01) + std::norm(m10) + std::norm(m11);
    const double det = std::abs(m00 * m11 - m01 * m10);
    return std::sqrt(frob + 2.0 * det);
}

/// min(|x - y|, |x + y|): identifies a gate with its negative.
inline double phase_insensitive_distance(const Unitary& x, const Unitary& y) {
    return std::min(trace_distance(x, y), trace_distance(x, -y));
}

enum class MetricMode : std::uint8_t { exact, phase_insensitive };

inline double distance(const Unitary& x, const Unitary& y, MetricMode mode) {
    return mode == MetricMode::exact ? trace_distance(x, y) : phase_insensitive_distance(x, y);
}

/// Point of R^3 representing U = exp(-i/2 v.sigma); |v| lies in [0, 2pi].
struct AxisVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    friend bool operator==(const AxisVector&, const AxisVector&) = default;
};

inline double euclidean_distance(const AxisVector& p, const AxisVector& q) {
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    const double dz = p.z - q.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Rotation angle in [0, 2pi] of an SU(2) element.
inline double rotation_angle(const Unitary& u) {
    const double cos_half = std::clamp(0.5 * u.trace().real(), -1.0, 1.0);
    return 2.0 * std::acos(cos_half);
}

inline AxisVector to_axis_vector(const Unitary& u) {
    // u = cos(t/2) I - i sin(t/2) n.sigma; w = sin(t/2) n.
    const double sx = -0.5 * (u.b.imag() + u.c.imag());
    const double sy = 0.5 * (u.c.real() - u.b.real());
    const double sz = 0.5 * (u.d.imag() - u.a.imag());
    const double cos_half = 0.5 * (u.a.real() + u.d.real());
    const double sin_half = std::sqrt(sx * sx + sy * sy + sz * sz);
    if (sin_half == 0.0) {
        if (cos_half >= 0.0) return {};
        return {0.0, 0.0, 2.0 * std::numbers::pi};
    }
    // atan2 form of 2 arccos(Re Tr / 2); accurate at both ends of [0, 2pi].
    const double angle = 2.0 * std::atan2(sin_half, cos_half);
    const double scale = angle / sin_half;
    return {scale * sx, scale * sy, scale * sz};
}

inline Unitary from_axis_vector(const AxisVector& v) {
    const double angle = v.norm();
    if (angle == 0.0) return Unitary::identity();
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle) / angle;
    const double nx = s * v.x;
    const double ny = s * v.y;
    const double nz = s * v.z;
    return {{c, -nz}, {-ny, -nx}, {ny, -nx}, {c, nz}};
}

/// Divides m by the square root of its determinant. The branch is chosen so
/// that the trace has nonnegative real part; a purely imaginary trace is
/// steered to nonnegative imaginary part.
inline Unitary project_to_su2(const Unitary& m, double tol = 1e-12) {
    if (!is_unitary(m, tol)) throw NotUnitary("matrix is not unitary within tolerance");
    const Complex root = std::sqrt(m.det());
    Unitary u{m.a / root, m.b / root, m.c / root, m.d / root};
    const Complex tr = u.trace();
    const bool flip = tr.real() < -tol || (std::abs(tr.real()) <= tol && tr.imag() < -tol);
    return flip ? -u : u;
}

namespace detail {

inline AxisVector scaled(const AxisVector& v, double s) { return {s * v.x, s * v.y, s * v.z}; }

inline AxisVector cross(const AxisVector& p, const AxisVector& q) {
    return {p.y * q.z - p.z * q.y, p.z * q.x - p.x * q.z, p.x * q.y - p.y * q.x};
}

inline double dot(const AxisVector& p, const AxisVector& q) {
    return p.x * q.x + p.y * q.y + p.z * q.z;
}

/// SU(2) element whose adjoint action rotates unit vector `from` onto `to`.
inline Unitary rotation_between(const AxisVector& from, const AxisVector& to) {
    const double cosine = std::clamp(dot(from, to), -1.0, 1.0);
    AxisVector axis = cross(from, to);
    double len = axis.norm();
    if (len < 1e-12) {
        if (cosine > 0.0) return Unitary::identity();
        // Antipodal: half turn about the component of x (or y) orthogonal to `from`.
        AxisVector ref = std::abs(from.x) < 0.9 ? AxisVector{1, 0, 0} : AxisVector{0, 1, 0};
        const double proj = dot(ref, from);
        axis = {ref.x - proj * from.x, ref.y - proj * from.y, ref.z - proj * from.z};
        return from_axis_vector(scaled(axis, std::numbers::pi / axis.norm()));
    }
    const double angle = std::atan2(len, cosine);
    return from_axis_vector(scaled(axis, angle / len));
}

}  // namespace detail

/// Balanced group commutator: returns (V, W) with V W V^dagger W^dagger = u,
/// where V and W rotate by the same angle.
inline std::pair<Unitary, Unitary> gc_decompose(const Unitary& u) {
    if (max_entry_error(u, -Unitary::identity()) <= 1e-12)
        throw DegenerateRotation("commutator decomposition of -I is undefined");
    const AxisVector target = to_axis_vector(u);
    const double theta = target.norm();
    if (theta == 0.0) return {Unitary::identity(), Unitary::identity()};

    // sin(theta/4) = sin^2(phi/2)
    const double phi = 2.0 * std::asin(std::sqrt(std::sin(0.25 * theta)));
    const Unitary v = from_axis_vector({phi, 0.0, 0.0});
    const Unitary w = from_axis_vector({0.0, phi, 0.0});
    const Unitary commutator = v * w * adjoint(v) * adjoint(w);
    const AxisVector axis = to_axis_vector(commutator);
    const double axis_len = axis.norm();

    const Unitary s = detail::rotation_between(detail::scaled(axis, 1.0 / axis_len),
                                               detail::scaled(target, 1.0 / theta));
    const Unitary s_dag = adjoint(s);
    return {s * v * s_dag, s * w * s_dag};
}

/// Haar-distributed SU(2) element; identical seeds give identical matrices.
inline Unitary random_unitary(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double q[4];
    double len = 0.0;
    do {
        for (double& x : q) x = normal(rng);
        len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    } while (len < 1e-12);
    const double w = q[0] / len;
    const double x = q[1] / len;
    const double y = q[2] / len;
    const double z = q[3] / len;
    return {{w, -z}, {-y, -x}, {y, -x}, {w, z}};
}

}  // namespace skx
