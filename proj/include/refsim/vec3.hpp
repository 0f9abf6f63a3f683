#pragma once

// 3D geometry primitives: vectors, unit vectors, planes, specular
// reflection, bisector normals and spherical angle conversions.

#include <cmath>
#include <stdexcept>
#include <string>

namespace refsim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Thrown when a geometric construction has no well-defined result
// (zero-length bisector, zero-length direction, ...).
struct DegenerateGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double norm2() const { return dot(*this); }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Direction with the invariant ||v|| == 1 (checked to 1e-12 on construction).
class UnitVec3 {
public:
    static constexpr double kUnitTol = 1e-12;

    // Requires v already unit length; throws std::invalid_argument otherwise.
    explicit UnitVec3(const Vec3& v) : v_(v) {
        if (std::abs(v.norm() - 1.0) > kUnitTol) {
            throw std::invalid_argument("UnitVec3: vector is not unit length (|n|="
                                        + std::to_string(v.norm()) + ")");
        }
    }

    // Normalizes v; throws DegenerateGeometryError when ||v|| is ~zero.
    static UnitVec3 normalize(const Vec3& v, double min_norm = 1e-12) {
        const double n = v.norm();
        if (!(n > min_norm)) {
            throw DegenerateGeometryError("cannot normalize near-zero vector");
        }
        return UnitVec3(v / n, private_tag{});
    }

    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    const Vec3& vec() const { return v_; }

    double dot(const UnitVec3& o) const { return v_.dot(o.v_); }
    double dot(const Vec3& o) const { return v_.dot(o); }
    UnitVec3 operator-() const { return UnitVec3(-v_, private_tag{}); }

private:
    struct private_tag {};
    UnitVec3(const Vec3& v, private_tag) : v_(v) {}
    Vec3 v_;
};

struct Plane {
    Vec3 point;
    UnitVec3 normal;

    double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

// Specular reflection of direction d about normal n: d - 2(d.n)n.
inline UnitVec3 reflect_direction(const UnitVec3& d, const UnitVec3& n) {
    const Vec3 r = d.vec() - 2.0 * d.dot(n) * n.vec();
    return UnitVec3::normalize(r);
}

// Surface normal that specularly relays the ap->tile ray through focal:
// the normalized half-sum of the unit vectors from tile toward focal and
// toward ap. Throws DegenerateGeometryError when focal and ap are antipodal
// through the tile (zero half-sum, no valid normal).
inline UnitVec3 bisector_normal(const Vec3& tile, const Vec3& focal, const Vec3& ap) {
    const UnitVec3 to_focal = UnitVec3::normalize(focal - tile);
    const UnitVec3 to_ap = UnitVec3::normalize(ap - tile);
    const Vec3 half_sum = 0.5 * (to_focal.vec() + to_ap.vec());
    if (half_sum.norm() < 1e-9) {
        throw DegenerateGeometryError("bisector_normal: focal and ap antipodal through tile");
    }
    return UnitVec3::normalize(half_sum);
}

struct SphericalAngles {
    double theta = 0.0;  // arccos(n.z), in [0, pi]
    double phi = 0.0;    // atan2(n.y, n.x), in (-pi, pi]
};

inline SphericalAngles normal_to_angles(const UnitVec3& n) {
    const double cz = std::clamp(n.z(), -1.0, 1.0);
    double phi = std::atan2(n.y(), n.x());
    if (phi <= -kPi) phi = kPi;  // keep phi in (-pi, pi]
    return {std::acos(cz), phi};
}

inline UnitVec3 angles_to_normal(double theta, double phi) {
    const double st = std::sin(theta);
    return UnitVec3::normalize(Vec3{st * std::cos(phi), st * std::sin(phi), std::cos(theta)});
}

// p mirrored across the plane; the midpoint of p and the image lies on the plane.
inline Vec3 mirror_point(const Vec3& p, const Plane& plane) {
    return p - 2.0 * plane.signed_distance(p) * plane.normal.vec();
}

// Right-handed orthonormal frame; used as the local coordinate system of the
// reflector panel (ez = base normal).
struct Frame {
    UnitVec3 ex;
    UnitVec3 ey;
    UnitVec3 ez;

    // Builds a frame around ez with ex horizontal (perpendicular to world z)
    // whenever ez is not vertical.
    static Frame around_z(const UnitVec3& ez) {
        const Vec3 up{0.0, 0.0, 1.0};
        Vec3 ex_raw = up.cross(ez.vec());
        if (ex_raw.norm() < 1e-9) ex_raw = Vec3{1.0, 0.0, 0.0};
        const UnitVec3 ex = UnitVec3::normalize(ex_raw);
        const UnitVec3 ey = UnitVec3::normalize(ez.vec().cross(ex.vec()));
        return Frame{ex, ey, ez};
    }

    Vec3 to_local(const Vec3& w) const { return {ex.dot(w), ey.dot(w), ez.dot(w)}; }
    Vec3 to_world(const Vec3& l) const {
        return ex.vec() * l.x + ey.vec() * l.y + ez.vec() * l.z;
    }
};

}  // namespace refsim
