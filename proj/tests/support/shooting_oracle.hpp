#pragma once

// Test-only brute-force oracle for the image-method tracer. Candidate
// surface sequences are discovered by angular ray shooting with a capture
// sphere around the receiver; each candidate is then validated and measured
// independently by minimizing total path length over the bounce planes
// (Fermat's principle, plain gradient descent), never by mirror images.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "refsim/raytrace.hpp"
#include "refsim/scene.hpp"
#include "refsim/vec3.hpp"

namespace oracle {

using refsim::Surface;
using refsim::UnitVec3;
using refsim::Vec3;

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double denom = ab.norm2();
    const double t = denom > 0 ? std::clamp((p - a).dot(ab) / denom, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

// Near-uniform directions on the sphere (Fibonacci lattice).
inline std::vector<Vec3> fibonacci_directions(int n) {
    std::vector<Vec3> dirs;
    dirs.reserve(n);
    const double ga = refsim::kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = ga * i;
        dirs.push_back({r * std::cos(a), r * std::sin(a), z});
    }
    return dirs;
}

// Shoots rays, specularly bouncing up to max_bounces, recording the surface
// sequence whenever a segment passes within capture_radius of rx.
inline std::set<std::vector<int>> discover_sequences(const std::vector<Surface>& surfaces,
                                                     const Vec3& tx, const Vec3& rx,
                                                     int max_bounces, int n_rays,
                                                     double capture_radius) {
    std::set<std::vector<int>> found;
    const double far = 1e4;
    for (const Vec3& d0 : fibonacci_directions(n_rays)) {
        Vec3 origin = tx;
        UnitVec3 dir = UnitVec3::normalize(d0);
        std::vector<int> seq;
        for (int bounce = 0; bounce <= max_bounces; ++bounce) {
            const auto hit = refsim::first_hit(surfaces, origin, dir, 1e-9);
            const Vec3 seg_end = hit ? hit->point : origin + far * dir.vec();
            if (point_segment_distance(rx, origin, seg_end) < capture_radius) found.insert(seq);
            if (!hit || bounce == max_bounces) break;
            seq.push_back(hit->surface);
            dir = refsim::reflect_direction(dir, surfaces[hit->surface].normal());
            origin = hit->point;
        }
    }
    return found;
}

struct OraclePath {
    std::vector<int> sequence;  // empty = line of sight
    double length = 0.0;
    std::vector<Vec3> points;   // tx, bounces..., rx
};

// Shortest piecewise-straight chain tx -> plane(s1) -> ... -> rx, minimized
// with adaptive-step gradient descent over in-plane coordinates.
inline bool fermat_minimize(const std::vector<Surface>& surfaces, const std::vector<int>& seq,
                            const Vec3& tx, const Vec3& rx, std::vector<Vec3>& points_out,
                            double& length_out) {
    const int k = static_cast<int>(seq.size());
    std::vector<refsim::Frame> frames;
    std::vector<Vec3> anchors;
    for (int j = 0; j < k; ++j) {
        const Surface& s = surfaces[seq[j]];
        frames.push_back(refsim::Frame::around_z(s.normal()));
        anchors.push_back(s.centroid());
    }
    std::vector<double> p(2 * k, 0.0);  // in-plane offsets from the anchors

    auto positions = [&](const std::vector<double>& q) {
        std::vector<Vec3> pts(k + 2);
        pts[0] = tx;
        pts[k + 1] = rx;
        for (int j = 0; j < k; ++j) {
            pts[j + 1] = anchors[j] + q[2 * j] * frames[j].ex.vec() + q[2 * j + 1] * frames[j].ey.vec();
        }
        return pts;
    };
    auto total_length = [&](const std::vector<double>& q) {
        const auto pts = positions(q);
        double len = 0.0;
        for (int j = 0; j <= k; ++j) len += (pts[j + 1] - pts[j]).norm();
        return len;
    };
    auto gradient = [&](const std::vector<double>& q) {
        const auto pts = positions(q);
        std::vector<double> g(2 * k, 0.0);
        for (int j = 0; j < k; ++j) {
            const Vec3 prev = pts[j + 1] - pts[j];
            const Vec3 next = pts[j + 2] - pts[j + 1];
            const double lp = prev.norm();
            const double ln = next.norm();
            if (lp < 1e-12 || ln < 1e-12) return std::vector<double>();  // degenerate chain
            const Vec3 d = prev / lp - next / ln;
            g[2 * j] = d.dot(frames[j].ex.vec());
            g[2 * j + 1] = d.dot(frames[j].ey.vec());
        }
        return g;
    };

    double step = 1.0;
    double f = total_length(p);
    for (int it = 0; it < 5000; ++it) {
        const auto g = gradient(p);
        if (g.empty()) return false;
        double gnorm2 = 0.0;
        for (double v : g) gnorm2 += v * v;
        if (gnorm2 < 1e-24) break;
        std::vector<double> trial(p);
        for (int i = 0; i < 2 * k; ++i) trial[i] -= step * g[i];
        const double ft = total_length(trial);
        if (ft < f) {
            p = trial;
            f = ft;
            step *= 1.2;
        } else {
            step *= 0.5;
            if (step < 1e-14) break;
        }
    }
    points_out = positions(p);
    length_out = f;
    return true;
}

// Validated oracle paths for every discovered sequence: bounce points inside
// their polygons and all segments unoccluded.
inline std::vector<OraclePath> oracle_paths(const std::vector<Surface>& surfaces, const Vec3& tx,
                                            const Vec3& rx, int max_bounces, int n_rays,
                                            double capture_radius) {
    std::vector<OraclePath> out;
    for (const auto& seq : discover_sequences(surfaces, tx, rx, max_bounces, n_rays,
                                              capture_radius)) {
        if (seq.empty()) {
            if (!refsim::segment_blocked(surfaces, tx, rx)) {
                out.push_back({seq, (rx - tx).norm(), {tx, rx}});
            }
            continue;
        }
        std::vector<Vec3> pts;
        double len = 0.0;
        if (!fermat_minimize(surfaces, seq, tx, rx, pts, len)) continue;
        bool ok = true;
        for (std::size_t j = 0; j + 1 < pts.size() && ok; ++j) {
            if ((pts[j + 1] - pts[j]).norm() <= 1e-9) ok = false;
            if (ok && refsim::segment_blocked(surfaces, pts[j], pts[j + 1])) ok = false;
        }
        for (std::size_t j = 1; j + 1 < pts.size() && ok; ++j) {
            const Surface& s = surfaces[seq[j - 1]];
            if (std::abs(s.plane().signed_distance(pts[j])) > 1e-7) ok = false;
            if (ok && !s.contains(pts[j], refsim::kOcclusionEps)) ok = false;
        }
        if (ok) out.push_back({seq, len, pts});
    }
    return out;
}

}  // namespace oracle
