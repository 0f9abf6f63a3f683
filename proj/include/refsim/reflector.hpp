#pragma once

// Hexagonal reflector array: pointy-top hex lattice layout, tile-to-agent
// assignment patterns, and the focal-point-to-orientation mapping under
// servo constraints.
//
// Tile orientation is stored as two signed gimbal angles in the panel frame
// (ez = base normal): theta tilts the normal toward the in-plane vertical
// axis, phi pans it toward the in-plane horizontal axis. Both axes clamp
// independently, matching a two-axis servo with +-30 degree travel.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "refsim/scene.hpp"
#include "refsim/surface.hpp"
#include "refsim/vec3.hpp"

namespace refsim {

struct TileState {
    int row = 0;
    int col = 0;
    Vec3 position;
    double theta = 0.0;  // elevation, rad
    double phi = 0.0;    // azimuth, rad
};

struct GimbalAngles {
    double theta = 0.0;
    double phi = 0.0;
};

// Panel-frame normal for gimbal angles: (cos t sin p, sin t, cos t cos p).
inline Vec3 gimbal_to_local(double theta, double phi) {
    return {std::cos(theta) * std::sin(phi), std::sin(theta), std::cos(theta) * std::cos(phi)};
}

inline GimbalAngles local_to_gimbal(const Vec3& n_local) {
    return {std::asin(std::clamp(n_local.y, -1.0, 1.0)), std::atan2(n_local.x, n_local.z)};
}

class ReflectorArray {
public:
    int rows = 0;
    int cols = 0;
    double pitch = 0.0;
    Vec3 center;
    Frame frame = Frame::around_z(UnitVec3(Vec3{0, 0, 1}));  // ez = base normal
    std::vector<TileState> tiles;                            // row-major

    int tile_count() const { return rows * cols; }
    const TileState& tile(int r, int c) const { return tiles[r * cols + c]; }
    TileState& tile(int r, int c) { return tiles[r * cols + c]; }

    double hex_circumradius() const { return pitch / std::sqrt(3.0); }

    UnitVec3 tile_normal_world(const TileState& t) const {
        return UnitVec3::normalize(frame.to_world(gimbal_to_local(t.theta, t.phi)));
    }

    // In-plane tile axes after the gimbal rotation (local coordinates).
    static Vec3 tile_axis_x_local(double theta, double phi) {
        return {std::cos(phi), 0.0, -std::sin(phi)};
    }
    static Vec3 tile_axis_y_local(double theta, double phi) {
        return {-std::sin(theta) * std::sin(phi), std::cos(theta), -std::sin(theta) * std::cos(phi)};
    }

    // Hexagon facets (PEC) for the current orientations.
    std::vector<Surface> make_surfaces() const {
        std::vector<Surface> out;
        out.reserve(tiles.size());
        const double R = hex_circumradius();
        const Material pec = materials::metal();
        for (const TileState& t : tiles) {
            const Vec3 ax = frame.to_world(tile_axis_x_local(t.theta, t.phi));
            const Vec3 ay = frame.to_world(tile_axis_y_local(t.theta, t.phi));
            std::vector<Vec3> poly;
            poly.reserve(6);
            for (int k = 0; k < 6; ++k) {
                const double ang = kPi / 2.0 + k * kPi / 3.0;  // pointy-top
                poly.push_back(t.position + R * std::cos(ang) * ax + R * std::sin(ang) * ay);
            }
            out.push_back(Surface::make(std::move(poly), pec, SurfaceKind::tile));
        }
        return out;
    }
};

// Pointy-top hex packing: column spacing = pitch, row spacing = pitch*sqrt(3)/2,
// odd rows offset by +pitch/2. The lattice is centred on `center` and all
// tiles start flat (theta = phi = 0).
inline ReflectorArray hex_layout(int rows, int cols, double pitch, const Vec3& center,
                                 const UnitVec3& base_normal) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("hex_layout: rows/cols must be >= 1");
    if (!(pitch > 0.0)) throw std::invalid_argument("hex_layout: pitch must be > 0");
    ReflectorArray a;
    a.rows = rows;
    a.cols = cols;
    a.pitch = pitch;
    a.center = center;
    a.frame = Frame::around_z(base_normal);

    const double row_spacing = pitch * std::sqrt(3.0) / 2.0;
    double mean_u = 0.0, mean_v = 0.0;
    std::vector<std::pair<double, double>> uv;
    uv.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double u = c * pitch + (r % 2 == 1 ? pitch / 2.0 : 0.0);
            const double v = r * row_spacing;
            uv.emplace_back(u, v);
            mean_u += u;
            mean_v += v;
        }
    }
    mean_u /= uv.size();
    mean_v /= uv.size();

    a.tiles.reserve(uv.size());
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c, ++i) {
            TileState t;
            t.row = r;
            t.col = c;
            t.position = center + a.frame.to_world({uv[i].first - mean_u, uv[i].second - mean_v, 0.0});
            a.tiles.push_back(t);
        }
    }
    return a;
}

// Total surjective map from tiles to agents 1..L.
struct Assignment {
    int rows = 0;
    int cols = 0;
    int agents = 0;
    std::vector<int> agent_of;  // row-major, 1-based agent ids

    int operator()(int row, int col) const { return agent_of[row * cols + col]; }

    std::vector<int> tiles_of(int agent) const {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(agent_of.size()); ++i) {
            if (agent_of[i] == agent) idx.push_back(i);
        }
        return idx;
    }
};

// Column c (1-based) -> agent ((c-1) mod L) + 1.
inline Assignment assign_columns(int rows, int cols, int agents) {
    if (agents < 1 || cols < agents) {
        throw std::invalid_argument("assign_columns: need 1 <= agents <= cols");
    }
    Assignment a{rows, cols, agents, {}};
    a.agent_of.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) a.agent_of[r * cols + c] = (c % agents) + 1;
    }
    return a;
}

// Row 0 carries raw groups 1..cols; each following row is the previous row
// cyclically left-shifted by `shift`. Raw groups fold onto agents with the
// column rule. shift = 0 reproduces assign_columns.
inline Assignment assign_shifted(int rows, int cols, int agents, int shift = 4) {
    if (agents < 1 || cols < agents) {
        throw std::invalid_argument("assign_shifted: need 1 <= agents <= cols");
    }
    Assignment a{rows, cols, agents, {}};
    a.agent_of.resize(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int group = (c + r * shift) % cols;  // 0-based raw group
            a.agent_of[r * cols + c] = (group % agents) + 1;
        }
    }
    return a;
}

struct FocalConstraints {
    std::vector<Box3> boxes;  // one allowed region per agent
    double delta_max = 2.0;   // max |displacement| per axis per step
    double theta_min = -kPi / 6.0;
    double theta_max = kPi / 6.0;
    double phi_min = -kPi / 6.0;
    double phi_max = kPi / 6.0;

    const Box3& box(int agent_1based) const { return boxes[agent_1based - 1]; }
};

// Componentwise clamp of a focal point into its allowed box; idempotent.
inline Vec3 clamp_focal(const Vec3& f, const Box3& box) { return box.clamp(f); }

enum class ControlMode { per_tile, column_azimuth };

// Orients every tile toward its agent's focal point via the bisector normal,
// converts to gimbal angles in the panel frame and clamps to servo limits.
// column_azimuth shares one azimuth per column: the mean of the column's
// unclamped per-tile azimuths.
inline void apply_focal_points(ReflectorArray& array, const std::vector<Vec3>& focals,
                               const Assignment& assignment, const Vec3& ap,
                               const FocalConstraints& constraints, ControlMode mode) {
    if (static_cast<int>(focals.size()) < assignment.agents) {
        throw std::invalid_argument("apply_focal_points: one focal per agent required");
    }
    std::vector<double> col_phi_sum(array.cols, 0.0);
    for (TileState& t : array.tiles) {
        const int agent = assignment(t.row, t.col);
        const Vec3 f = clamp_focal(focals[agent - 1], constraints.box(agent));
        const UnitVec3 n_world = bisector_normal(t.position, f, ap);
        const auto [theta, phi] = local_to_gimbal(array.frame.to_local(n_world.vec()));
        t.theta = std::clamp(theta, constraints.theta_min, constraints.theta_max);
        if (mode == ControlMode::per_tile) {
            t.phi = std::clamp(phi, constraints.phi_min, constraints.phi_max);
        } else {
            t.phi = phi;  // raw, aggregated below
            col_phi_sum[t.col] += phi;
        }
    }
    if (mode == ControlMode::column_azimuth) {
        for (TileState& t : array.tiles) {
            t.phi = std::clamp(col_phi_sum[t.col] / array.rows, constraints.phi_min,
                               constraints.phi_max);
        }
    }
}

// Control-space reduction factor: 2 Nr Nc / (3 L).
inline double complexity_reduction(int rows, int cols, int agents) {
    if (rows < 1 || cols < 1 || agents < 1) {
        throw std::invalid_argument("complexity_reduction: arguments must be positive");
    }
    return 2.0 * rows * cols / (3.0 * agents);
}

// Mean position of an agent's tiles; the fixed per-agent coordinate exposed
// in observations.
inline Vec3 segment_centroid(const ReflectorArray& array, const Assignment& assignment,
                             int agent) {
    Vec3 sum{0, 0, 0};
    int count = 0;
    for (const TileState& t : array.tiles) {
        if (assignment(t.row, t.col) == agent) {
            sum += t.position;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("segment_centroid: agent has no tiles");
    return sum / count;
}

}  // namespace refsim
