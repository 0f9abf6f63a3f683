#pragma once

// Deterministic image-method specular ray tracer. Paths are found by
// mirroring the transmitter through ordered surface sequences, backtracing
// the straight-line chain from the receiver, then validating polygon
// containment and occlusion for every segment.

#include <algorithm>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "refsim/scene.hpp"
#include "refsim/surface.hpp"
#include "refsim/vec3.hpp"

namespace refsim {

inline constexpr double kRssiFloorDbm = -200.0;
inline constexpr double kOcclusionEps = 1e-9;

struct PropagationPath {
    std::vector<Vec3> vertices;     // tx, bounce points..., rx
    std::vector<int> surfaces_hit;  // indices into Scene::surfaces, one per bounce
    double total_length = 0.0;
    std::complex<double> gamma_product{1.0, 0.0};

    int bounces() const { return static_cast<int>(surfaces_hit.size()); }
};

struct ChannelSummary {
    std::complex<double> coefficient_sum{0.0, 0.0};
    double rssi_dbm = kRssiFloorDbm;
    int path_count = 0;
};

namespace detail {

// True when some facet crosses the open interior of segment a->b. Crossings
// within kOcclusionEps of either endpoint never block, so bounce points on
// their own facets and grazing contacts at shared edges are tolerated.
inline bool segment_occluded(const std::vector<Surface>& surfaces, const Vec3& a, const Vec3& b) {
    const double len = (b - a).norm();
    if (len <= kOcclusionEps) return false;
    for (const Surface& s : surfaces) {
        const auto t = s.segment_hit(a, b, -kOcclusionEps);
        if (t && *t * len > kOcclusionEps && (1.0 - *t) * len > kOcclusionEps) return true;
    }
    return false;
}

struct PathKey {
    int bounces;
    std::vector<long long> q;  // quantized bounce coordinates

    bool operator<(const PathKey& o) const {
        if (bounces != o.bounces) return bounces < o.bounces;
        return q < o.q;
    }
};

inline PathKey quantize_path(const PropagationPath& p) {
    PathKey k;
    k.bounces = p.bounces();
    k.q.reserve(3 * (p.vertices.size() - 2));
    for (std::size_t i = 1; i + 1 < p.vertices.size(); ++i) {
        k.q.push_back(static_cast<long long>(std::llround(p.vertices[i].x * 1e7)));
        k.q.push_back(static_cast<long long>(std::llround(p.vertices[i].y * 1e7)));
        k.q.push_back(static_cast<long long>(std::llround(p.vertices[i].z * 1e7)));
    }
    return k;
}

}  // namespace detail

// Public occlusion predicate for scene checks and tests.
inline bool segment_blocked(const std::vector<Surface>& surfaces, const Vec3& a, const Vec3& b) {
    return detail::segment_occluded(surfaces, a, b);
}

// Enumerates the LOS path (when unoccluded) and all valid specular paths with
// at most max_bounces bounces. Bounce points within kOcclusionEps of a polygon
// edge count as inside, favouring path existence under servo motion.
inline std::vector<PropagationPath> trace_paths(const Scene& scene, const Vec3& tx,
                                                const Vec3& rx, int max_bounces) {
    if (max_bounces < 0 || max_bounces > 3) {
        throw std::invalid_argument("trace_paths: max_bounces must be in [0, 3]");
    }
    const auto& surfaces = scene.surfaces;
    const int n = static_cast<int>(surfaces.size());
    std::vector<PropagationPath> paths;
    std::map<detail::PathKey, bool> seen;

    auto push_path = [&](PropagationPath&& p) {
        auto key = detail::quantize_path(p);
        if (seen.emplace(std::move(key), true).second) paths.push_back(std::move(p));
    };

    if (!detail::segment_occluded(surfaces, tx, rx)) {
        PropagationPath p;
        p.vertices = {tx, rx};
        p.total_length = (rx - tx).norm();
        push_path(std::move(p));
    }

    // Validates the sequence seq (images precomputed) by backtracing from rx.
    auto try_sequence = [&](const std::vector<int>& seq, const std::vector<Vec3>& images) {
        const int k = static_cast<int>(seq.size());
        std::vector<Vec3> pts(k + 2);
        pts[0] = tx;
        pts[k + 1] = rx;
        for (int j = k; j >= 1; --j) {
            const Surface& s = surfaces[seq[j - 1]];
            const Vec3& img = images[j];
            const Vec3 dir = pts[j + 1] - img;
            const double denom = s.normal().dot(dir);
            if (std::abs(denom) < 1e-15) return;
            const double t = -s.plane().signed_distance(img) / denom;
            if (!(t > 0.0 && t < 1.0)) return;
            const Vec3 hit = img + t * dir;
            if (!s.contains(hit, kOcclusionEps)) return;
            pts[j] = hit;
        }
        PropagationPath p;
        p.vertices = pts;
        p.surfaces_hit = seq;
        for (int j = 0; j <= k; ++j) {
            const Vec3 a = pts[j];
            const Vec3 b = pts[j + 1];
            if ((b - a).norm() <= kOcclusionEps) return;  // degenerate segment
            if (detail::segment_occluded(surfaces, a, b)) return;
            p.total_length += (b - a).norm();
        }
        for (int j = 1; j <= k; ++j) {
            const Surface& s = surfaces[seq[j - 1]];
            const UnitVec3 d = UnitVec3::normalize(pts[j] - pts[j - 1]);
            const double cos_i = std::min(std::abs(d.dot(s.normal())), 1.0);
            if (cos_i <= 0.0) return;
            p.gamma_product *= reflection_coefficient(s.material(), scene.frequency_hz, cos_i);
        }
        push_path(std::move(p));
    };

    // Depth-first enumeration of surface sequences with incremental images.
    std::vector<int> seq;
    std::vector<Vec3> images{tx};
    auto dfs = [&](auto&& self, int depth) -> void {
        for (int i = 0; i < n; ++i) {
            if (!seq.empty() && seq.back() == i) continue;  // immediate repeat is impossible
            seq.push_back(i);
            images.push_back(mirror_point(images.back(), surfaces[i].plane()));
            try_sequence(seq, images);
            if (depth + 1 < max_bounces) self(self, depth + 1);
            images.pop_back();
            seq.pop_back();
        }
    };
    if (max_bounces > 0 && n > 0) dfs(dfs, 0);
    return paths;
}

// Geometric-optics coefficient: (lambda / 4 pi d) * prod(Gamma) * e^{-j 2 pi d / lambda}.
inline std::complex<double> path_coefficient(const PropagationPath& path, double wavelength_m) {
    if (!(wavelength_m > 0.0)) throw std::invalid_argument("path_coefficient: wavelength <= 0");
    if (!(path.total_length > 0.0)) throw std::invalid_argument("path_coefficient: zero-length path");
    const double amp = wavelength_m / (4.0 * kPi * path.total_length);
    const double phase = -2.0 * kPi * path.total_length / wavelength_m;
    return amp * path.gamma_product * std::complex<double>(std::cos(phase), std::sin(phase));
}

// Coherent sum over paths. Empty path sets and perfect cancellations land on
// the -200 dBm floor.
inline ChannelSummary received_power(double tx_power_dbm,
                                     const std::vector<PropagationPath>& paths,
                                     double wavelength_m) {
    ChannelSummary out;
    out.path_count = static_cast<int>(paths.size());
    for (const auto& p : paths) out.coefficient_sum += path_coefficient(p, wavelength_m);
    const double mag = std::abs(out.coefficient_sum);
    if (out.path_count == 0 || mag <= 0.0) {
        out.rssi_dbm = kRssiFloorDbm;
        return out;
    }
    out.rssi_dbm = std::max(tx_power_dbm + 20.0 * std::log10(mag), kRssiFloorDbm);
    return out;
}

inline double rssi_at(const Scene& scene, const Vec3& rx, int max_bounces = 2) {
    const auto paths = trace_paths(scene, scene.ap_position, rx, max_bounces);
    return received_power(scene.ap_power_dbm, paths, scene.wavelength_m()).rssi_dbm;
}

struct GridSpec {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    double step = 1.0;
    double z = 1.5;
};

struct Heatmap {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> cells;  // row-major, ys.size() rows by xs.size() cols

    double at(std::size_t iy, std::size_t ix) const { return cells[iy * xs.size() + ix]; }
};

// RSSI sampled on grid nodes (x0, x0+step, ... <= x1). Cells are independent,
// so rows are evaluated on a small thread pool; the result is deterministic.
inline Heatmap rssi_heatmap(const Scene& scene, const GridSpec& grid, int max_bounces = 2,
                            unsigned threads = 0) {
    if (!(grid.step > 0.0)) throw std::invalid_argument("rssi_heatmap: step must be > 0");
    if (!scene.bounds.contains({grid.x0, grid.y0, grid.z}, 1e-9)
        || !scene.bounds.contains({grid.x1, grid.y1, grid.z}, 1e-9)) {
        throw std::invalid_argument("rssi_heatmap: grid outside scene bounding box");
    }
    Heatmap hm;
    for (double x = grid.x0; x <= grid.x1 + 1e-12; x += grid.step) hm.xs.push_back(x);
    for (double y = grid.y0; y <= grid.y1 + 1e-12; y += grid.step) hm.ys.push_back(y);
    hm.cells.assign(hm.xs.size() * hm.ys.size(), kRssiFloorDbm);

    const std::size_t rows = hm.ys.size();
    unsigned nw = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    nw = std::min<unsigned>(nw, static_cast<unsigned>(rows));
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t iy = begin; iy < end; ++iy) {
            for (std::size_t ix = 0; ix < hm.xs.size(); ++ix) {
                hm.cells[iy * hm.xs.size() + ix] =
                    rssi_at(scene, {hm.xs[ix], hm.ys[iy], grid.z}, max_bounces);
            }
        }
    };
    if (nw <= 1) {
        worker(0, rows);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (rows + nw - 1) / nw;
        for (unsigned w = 0; w < nw; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(rows, b + chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& t : pool) t.join();
    }
    return hm;
}

// First surface hit by the ray origin + t*dir for t > t_min; used by the
// shooting oracle in tests and by scene sanity checks.
struct RayHit {
    int surface = -1;
    double t = 0.0;
    Vec3 point;
};

inline std::optional<RayHit> first_hit(const std::vector<Surface>& surfaces, const Vec3& origin,
                                       const UnitVec3& dir, double t_min = 1e-9) {
    std::optional<RayHit> best;
    for (int i = 0; i < static_cast<int>(surfaces.size()); ++i) {
        const Surface& s = surfaces[i];
        const double denom = s.normal().dot(dir.vec());
        if (std::abs(denom) < 1e-15) continue;
        const double t = -s.plane().signed_distance(origin) / denom;
        if (t <= t_min) continue;
        if (!s.contains(origin + t * dir.vec(), kOcclusionEps)) continue;
        if (!best || t < best->t) best = RayHit{i, t, origin + t * dir.vec()};
    }
    return best;
}

}  // namespace refsim
