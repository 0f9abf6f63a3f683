#pragma once

// Planar convex facets with point-containment and segment intersection
// predicates. All scene geometry (walls, obstacle facets, reflector tiles)
// reduces to these.

#include <optional>
#include <stdexcept>
#include <vector>

#include "refsim/material.hpp"
#include "refsim/vec3.hpp"

namespace refsim {

enum class SurfaceKind { wall, floor, ceiling, obstacle, tile };

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::wall: return "wall";
        case SurfaceKind::floor: return "floor";
        case SurfaceKind::ceiling: return "ceiling";
        case SurfaceKind::obstacle: return "obstacle";
        case SurfaceKind::tile: return "tile";
    }
    return "?";
}

class Surface {
public:
    static constexpr double kPlanarTol = 1e-9;

    // Validates planarity (1e-9 m), convexity and non-zero area.
    static Surface make(std::vector<Vec3> polygon, Material material, SurfaceKind kind) {
        if (polygon.size() < 3) throw std::invalid_argument("Surface: need >= 3 vertices");
        Surface s;
        s.polygon_ = std::move(polygon);
        s.material_ = std::move(material);
        s.kind_ = kind;

        // Newell normal: robust for nearly-degenerate orderings.
        Vec3 n{0, 0, 0};
        const std::size_t m = s.polygon_.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3& a = s.polygon_[i];
            const Vec3& b = s.polygon_[(i + 1) % m];
            n.x += (a.y - b.y) * (a.z + b.z);
            n.y += (a.z - b.z) * (a.x + b.x);
            n.z += (a.x - b.x) * (a.y + b.y);
        }
        if (n.norm() < 1e-12) throw std::invalid_argument("Surface: zero area polygon");
        s.plane_ = Plane{s.polygon_[0], UnitVec3::normalize(n)};

        for (const Vec3& v : s.polygon_) {
            if (std::abs(s.plane_.signed_distance(v)) > kPlanarTol) {
                throw std::invalid_argument("Surface: polygon not planar within 1e-9 m");
            }
        }

        // Convexity: every edge turn must agree with the Newell normal.
        s.edges_.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3& a = s.polygon_[i];
            const Vec3& b = s.polygon_[(i + 1) % m];
            const Vec3& c = s.polygon_[(i + 2) % m];
            if (s.plane_.normal.dot((b - a).cross(c - b)) < -1e-12) {
                throw std::invalid_argument("Surface: polygon not convex");
            }
            const Vec3 e = b - a;
            s.edges_.push_back(EdgeData{a, e, e.norm()});
        }
        return s;
    }

    const std::vector<Vec3>& polygon() const { return polygon_; }
    const Material& material() const { return material_; }
    SurfaceKind kind() const { return kind_; }
    const Plane& plane() const { return plane_; }
    const UnitVec3& normal() const { return plane_.normal; }

    Vec3 centroid() const {
        Vec3 c{0, 0, 0};
        for (const Vec3& v : polygon_) c += v;
        return c / static_cast<double>(polygon_.size());
    }

    // Containment of an on-plane point. Positive edge_eps lets points up to
    // edge_eps metres outside an edge count as inside; negative edge_eps
    // demands that clearance inside.
    bool contains(const Vec3& p, double edge_eps) const {
        for (const EdgeData& e : edges_) {
            // signed distance of p from the edge line, positive toward the interior
            const double s = plane_.normal.dot(e.dir.cross(p - e.origin)) / e.length;
            if (s < -edge_eps) return false;
        }
        return true;
    }

    // Segment a->b crossing this facet. Returns the parametric t in (0,1), or
    // nullopt if the segment misses, is parallel, or crosses outside the polygon.
    std::optional<double> segment_hit(const Vec3& a, const Vec3& b, double edge_eps) const {
        const Vec3 ab = b - a;
        const double denom = plane_.normal.dot(ab);
        if (std::abs(denom) < 1e-15) return std::nullopt;
        const double t = -plane_.signed_distance(a) / denom;
        if (!(t > 0.0 && t < 1.0)) return std::nullopt;
        if (!contains(a + t * ab, edge_eps)) return std::nullopt;
        return t;
    }

private:
    struct EdgeData {
        Vec3 origin;
        Vec3 dir;
        double length;
    };

    std::vector<Vec3> polygon_;
    Material material_;
    SurfaceKind kind_ = SurfaceKind::wall;
    Plane plane_{Vec3{0, 0, 0}, UnitVec3(Vec3{0, 0, 1})};
    std::vector<EdgeData> edges_;
};

inline Surface make_rect(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                         const Material& m, SurfaceKind kind) {
    return Surface::make({a, b, c, d}, m, kind);
}

}  // namespace refsim
