#pragma once

// Scene description and the L-shaped hallway builder. Anchors taken from the
// experiment layout: east wall at x = 11.2 m hosting the reflector mount at
// y = -5.7 m, corridor A (users) running along x with its north wall at
// y = -4.2 m, corridor B (access point) running along y. Both corridor ends
// are open.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "refsim/config.hpp"
#include "refsim/rng.hpp"
#include "refsim/surface.hpp"
#include "refsim/vec3.hpp"

namespace refsim {

struct Box3 {
    Vec3 min;
    Vec3 max;

    bool contains(const Vec3& p, double eps = 0.0) const {
        return p.x >= min.x - eps && p.x <= max.x + eps && p.y >= min.y - eps
               && p.y <= max.y + eps && p.z >= min.z - eps && p.z <= max.z + eps;
    }

    Vec3 clamp(const Vec3& p) const {
        return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
                std::clamp(p.z, min.z, max.z)};
    }

    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }

    Box3 inflated(double dx, double dy, double dz) const {
        return {{min.x - dx, min.y - dy, min.z - dz}, {max.x + dx, max.y + dy, max.z + dz}};
    }

    Vec3 sample(Rng& rng) const {
        return {rng.uniform(min.x, max.x), rng.uniform(min.y, max.y),
                rng.uniform(min.z, max.z)};
    }
};

struct SceneConfig {
    double hall_width_m = 3.0;
    double ceiling_m = 3.0;
    double ue_height_m = 1.5;
    double frequency_ghz = 60.0;
    double tx_power_dbm = 5.0;
    int reflector_rows = 7;
    int reflector_cols = 9;
    double reflector_pitch_m = 0.15;
    double reflector_standoff_m = 0.35;
    double reflector_center_z_m = 1.8;
    double obstacle_semi_a_m = 0.6;
    double obstacle_semi_b_m = 0.4;
    double obstacle_height_m = 1.8;
    int obstacle_facets = 16;

    static SceneConfig from_config(const KeyValueConfig& kv) {
        SceneConfig c;
        c.hall_width_m = kv.get_double("hall_width_m", c.hall_width_m);
        c.ceiling_m = kv.get_double("ceiling_m", c.ceiling_m);
        c.ue_height_m = kv.get_double("ue_height_m", c.ue_height_m);
        c.frequency_ghz = kv.get_double("frequency_ghz", c.frequency_ghz);
        c.tx_power_dbm = kv.get_double("tx_power_dbm", c.tx_power_dbm);
        c.reflector_rows = kv.get_int("reflector_rows", c.reflector_rows);
        c.reflector_cols = kv.get_int("reflector_cols", c.reflector_cols);
        c.reflector_pitch_m = kv.get_double("reflector_pitch_m", c.reflector_pitch_m);
        c.reflector_standoff_m = kv.get_double("reflector_standoff_m", c.reflector_standoff_m);
        c.reflector_center_z_m = kv.get_double("reflector_center_z_m", c.reflector_center_z_m);
        c.obstacle_semi_a_m = kv.get_double("obstacle_semi_a_m", c.obstacle_semi_a_m);
        c.obstacle_semi_b_m = kv.get_double("obstacle_semi_b_m", c.obstacle_semi_b_m);
        c.obstacle_height_m = kv.get_double("obstacle_height_m", c.obstacle_height_m);
        c.obstacle_facets = kv.get_int("obstacle_facets", c.obstacle_facets);
        return c;
    }
};

// Fixed layout anchors (metres).
namespace hallway {
inline constexpr double kEastWallX = 11.2;
inline constexpr double kNorthWallAY = -4.2;
inline constexpr double kCorridorALength = 20.0;
inline constexpr double kCorridorBLength = 15.0;
inline constexpr Vec3 kApPosition{9.5, -1.5, 2.5};
inline constexpr Vec3 kObstacleCenter{3.0, -5.5, 0.0};
inline constexpr double kReflectorWallY = -5.7;
inline constexpr Vec3 kUeRegionMin{-6.0, -6.2, 0.0};
inline constexpr Vec3 kUeRegionMax{2.0, -4.25, 0.0};
}  // namespace hallway

struct Scene {
    std::vector<Surface> surfaces;     // static geometry first, then tile facets
    std::size_t static_surface_count = 0;
    Vec3 ap_position;
    double ap_power_dbm = 5.0;
    double frequency_hz = 60e9;
    Box3 user_region;
    std::vector<Vec3> users;
    Box3 bounds;  // hallway bounding box, used for observation normalization

    double wavelength_m() const { return kSpeedOfLight / frequency_hz; }

    void set_tile_surfaces(std::vector<Surface> tiles) {
        surfaces.resize(static_surface_count);
        for (auto& t : tiles) surfaces.push_back(std::move(t));
    }

    void clear_tile_surfaces() { surfaces.resize(static_surface_count); }
};

inline Surface vertical_quad_x(double x, double y0, double y1, double z0, double z1,
                               const Material& m, SurfaceKind kind) {
    return make_rect({x, y0, z0}, {x, y1, z0}, {x, y1, z1}, {x, y0, z1}, m, kind);
}

inline Surface vertical_quad_y(double y, double x0, double x1, double z0, double z1,
                               const Material& m, SurfaceKind kind) {
    return make_rect({x0, y, z0}, {x1, y, z0}, {x1, y, z1}, {x0, y, z1}, m, kind);
}

inline Surface horizontal_quad(double z, double x0, double x1, double y0, double y1,
                               const Material& m, SurfaceKind kind) {
    return make_rect({x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}, m, kind);
}

// Builds the L-shaped hallway: plasterboard walls, concrete floor, board
// ceiling, wooden elliptical obstacle prism, open corridor ends.
inline Scene build_l_hallway(const SceneConfig& cfg) {
    using namespace hallway;
    const double w = cfg.hall_width_m;
    const double H = cfg.ceiling_m;
    if (!(w > 0.0 && H > 0.0 && cfg.ue_height_m > 0.0)) {
        throw std::invalid_argument("build_l_hallway: dimensions must be positive");
    }

    const double south_y = kNorthWallAY - w;             // corridor A south wall
    const double west_x = kEastWallX - kCorridorALength; // corridor A open end
    const double bwest_x = kEastWallX - w;               // corridor B west wall
    const double north_y = south_y + kCorridorBLength;   // corridor B open end

    // L-topology consistency: AP inside corridor B, UE region and obstacle
    // inside corridor A, everything below the ceiling.
    if (!(bwest_x < kApPosition.x && kApPosition.x < kEastWallX)
        || !(south_y < kApPosition.y && kApPosition.y < north_y) || !(kApPosition.z < H)) {
        throw std::invalid_argument("build_l_hallway: AP outside hallway volume");
    }
    if (!(south_y < kUeRegionMin.y) || !(kUeRegionMax.y < kNorthWallAY)
        || !(west_x < kUeRegionMin.x) || !(cfg.ue_height_m < H)) {
        throw std::invalid_argument("build_l_hallway: UE region outside corridor A");
    }
    if (!(south_y < kObstacleCenter.y - cfg.obstacle_semi_b_m)
        || !(kObstacleCenter.y + cfg.obstacle_semi_b_m < kNorthWallAY)
        || !(cfg.obstacle_height_m < H)) {
        throw std::invalid_argument("build_l_hallway: obstacle does not fit corridor A");
    }

    const Material wall_mat = materials::plasterboard();
    const Material floor_mat = materials::concrete();
    const Material ceil_mat = materials::ceiling_board();
    const Material wood_mat = materials::wood();

    Scene s;
    // Walls (open ends at x = west_x and y = north_y get no surface).
    s.surfaces.push_back(vertical_quad_y(south_y, west_x, kEastWallX, 0, H, wall_mat, SurfaceKind::wall));
    s.surfaces.push_back(vertical_quad_y(kNorthWallAY, west_x, bwest_x, 0, H, wall_mat, SurfaceKind::wall));
    s.surfaces.push_back(vertical_quad_x(kEastWallX, south_y, north_y, 0, H, wall_mat, SurfaceKind::wall));
    s.surfaces.push_back(vertical_quad_x(bwest_x, kNorthWallAY, north_y, 0, H, wall_mat, SurfaceKind::wall));
    // Floor and ceiling, split into the two convex legs of the L.
    s.surfaces.push_back(horizontal_quad(0, west_x, kEastWallX, south_y, kNorthWallAY, floor_mat, SurfaceKind::floor));
    s.surfaces.push_back(horizontal_quad(0, bwest_x, kEastWallX, kNorthWallAY, north_y, floor_mat, SurfaceKind::floor));
    s.surfaces.push_back(horizontal_quad(H, west_x, kEastWallX, south_y, kNorthWallAY, ceil_mat, SurfaceKind::ceiling));
    s.surfaces.push_back(horizontal_quad(H, bwest_x, kEastWallX, kNorthWallAY, north_y, ceil_mat, SurfaceKind::ceiling));

    // Obstacle: elliptical prism approximated by a convex faceted cylinder.
    const int nf = cfg.obstacle_facets;
    std::vector<Vec3> ring(nf);
    for (int k = 0; k < nf; ++k) {
        const double ang = 2.0 * kPi * k / nf;
        ring[k] = {kObstacleCenter.x + cfg.obstacle_semi_a_m * std::cos(ang),
                   kObstacleCenter.y + cfg.obstacle_semi_b_m * std::sin(ang), 0.0};
    }
    for (int k = 0; k < nf; ++k) {
        const Vec3& a = ring[k];
        const Vec3& b = ring[(k + 1) % nf];
        s.surfaces.push_back(make_rect(a, b, {b.x, b.y, cfg.obstacle_height_m},
                                       {a.x, a.y, cfg.obstacle_height_m}, wood_mat,
                                       SurfaceKind::obstacle));
    }
    std::vector<Vec3> top(ring);
    for (Vec3& v : top) v.z = cfg.obstacle_height_m;
    s.surfaces.push_back(Surface::make(top, wood_mat, SurfaceKind::obstacle));

    s.static_surface_count = s.surfaces.size();
    s.ap_position = kApPosition;
    s.ap_power_dbm = cfg.tx_power_dbm;
    s.frequency_hz = cfg.frequency_ghz * 1e9;
    s.user_region = Box3{{kUeRegionMin.x, kUeRegionMin.y, cfg.ue_height_m},
                         {kUeRegionMax.x, kUeRegionMax.y, cfg.ue_height_m}};
    s.bounds = Box3{{west_x, south_y, 0.0}, {kEastWallX, north_y, H}};
    return s;
}

struct MountPose {
    Vec3 center;
    UnitVec3 base_normal;
};

// Panel mounted just off the east wall at the corner, aimed at the bisector
// between the AP and the centre of the UE region so the servo range is spent
// symmetrically around the useful steering directions.
inline MountPose default_reflector_mount(const SceneConfig& cfg) {
    const Vec3 center{hallway::kEastWallX - cfg.reflector_standoff_m, hallway::kReflectorWallY,
                      cfg.reflector_center_z_m};
    const Vec3 aim{(hallway::kUeRegionMin.x + hallway::kUeRegionMax.x) / 2.0,
                   (hallway::kUeRegionMin.y + hallway::kUeRegionMax.y) / 2.0, cfg.ue_height_m};
    return {center, bisector_normal(center, aim, hallway::kApPosition)};
}

}  // namespace refsim
