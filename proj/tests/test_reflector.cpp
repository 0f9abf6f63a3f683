#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "refsim/reflector.hpp"
#include "refsim/rng.hpp"

using namespace refsim;

namespace {

const UnitVec3 kUp(Vec3{0, 0, 1});

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

FocalConstraints wide_constraints(int agents, double angle_limit = kPi) {
    FocalConstraints c;
    c.boxes.assign(agents, Box3{{-100, -100, -100}, {100, 100, 100}});
    c.delta_max = 2.0;
    c.theta_min = -angle_limit;
    c.theta_max = angle_limit;
    c.phi_min = -angle_limit;
    c.phi_max = angle_limit;
    return c;
}

}  // namespace

TEST(HexLayout, SingleTileAtCenter) {
    const ReflectorArray a = hex_layout(1, 1, 0.1, {1, 2, 3}, kUp);
    ASSERT_EQ(a.tile_count(), 1);
    EXPECT_NEAR((a.tiles[0].position - Vec3{1, 2, 3}).norm(), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(a.tiles[0].theta, 0.0);
    EXPECT_DOUBLE_EQ(a.tiles[0].phi, 0.0);
}

TEST(HexLayout, LatticeOffsets) {
    const ReflectorArray a = hex_layout(2, 2, 0.1, {0, 0, 0}, kUp);
    const Vec3 d01 = a.tile(0, 1).position - a.tile(0, 0).position;
    const Vec3 d10 = a.tile(1, 0).position - a.tile(0, 0).position;
    EXPECT_NEAR(d01.x, 0.1, 1e-12);
    EXPECT_NEAR(d01.y, 0.0, 1e-12);
    EXPECT_NEAR(d10.x, 0.05, 1e-12);
    EXPECT_NEAR(d10.y, 0.1 * std::sqrt(3.0) / 2.0, 1e-6);
    EXPECT_NEAR(d10.y, 0.0866, 1e-4);
}

TEST(HexLayout, SevenByNineHas63Tiles) {
    const ReflectorArray a = hex_layout(7, 9, 0.1, {0, 0, 0}, kUp);
    EXPECT_EQ(a.tile_count(), 63);
    EXPECT_EQ(a.tiles.size(), 63u);
    // centred: tile centroid coincides with the array center
    Vec3 c{0, 0, 0};
    for (const auto& t : a.tiles) c += t.position;
    EXPECT_NEAR((c / 63.0).norm(), 0.0, 1e-12);
}

TEST(HexLayout, InvalidArgumentsThrow) {
    EXPECT_THROW(hex_layout(0, 3, 0.1, {0, 0, 0}, kUp), std::invalid_argument);
    EXPECT_THROW(hex_layout(3, 3, 0.0, {0, 0, 0}, kUp), std::invalid_argument);
}

TEST(HexLayout, FacetsArePlanarHexagonsWithGimbalNormal) {
    ReflectorArray a = hex_layout(3, 3, 0.15, {0, 0, 0}, UnitVec3::normalize({-0.8, 0.55, 0.13}));
    Rng rng(11);
    for (auto& t : a.tiles) {
        t.theta = rng.uniform(-0.5, 0.5);
        t.phi = rng.uniform(-0.5, 0.5);
    }
    const auto facets = a.make_surfaces();
    ASSERT_EQ(facets.size(), 9u);
    for (std::size_t i = 0; i < facets.size(); ++i) {
        ASSERT_EQ(facets[i].polygon().size(), 6u);
        EXPECT_TRUE(facets[i].material().pec);
        const Vec3 n = a.tile_normal_world(a.tiles[i]).vec();
        EXPECT_NEAR(std::abs(facets[i].normal().dot(n)), 1.0, 1e-12);
        EXPECT_NEAR((facets[i].centroid() - a.tiles[i].position).norm(), 0.0, 1e-9);
    }
}

TEST(AssignColumns, PaperPattern9Cols3Agents) {
    const Assignment a = assign_columns(7, 9, 3);
    std::set<int> agent1_cols;
    for (int c = 0; c < 9; ++c) {
        EXPECT_EQ(a(0, c), a(6, c));  // column-constant
        if (a(0, c) == 1) agent1_cols.insert(c + 1);  // 1-based columns
    }
    EXPECT_EQ(agent1_cols, (std::set<int>{1, 4, 7}));
}

TEST(AssignColumns, SingleAgentTakesAll) {
    const Assignment a = assign_columns(4, 5, 1);
    for (int v : a.agent_of) EXPECT_EQ(v, 1);
}

TEST(AssignColumns, ExactPartitionWithBalancedColumns) {
    const Assignment a = assign_columns(7, 9, 3);
    std::vector<int> counts(4, 0);
    for (int v : a.agent_of) {
        ASSERT_GE(v, 1);
        ASSERT_LE(v, 3);
        ++counts[v];
    }
    EXPECT_EQ(counts[1], 21);
    EXPECT_EQ(counts[2], 21);
    EXPECT_EQ(counts[3], 21);
    EXPECT_THROW(assign_columns(7, 2, 3), std::invalid_argument);
}

TEST(AssignShifted, RowZeroRawGroupsAndLeftShiftByFour) {
    const Assignment a = assign_shifted(7, 9, 9, 4);
    for (int c = 0; c < 9; ++c) EXPECT_EQ(a(0, c), c + 1);
    EXPECT_EQ(a(1, 0), 5);  // row 1 starts at raw group 5
    EXPECT_EQ(a(1, 4), 9);
    EXPECT_EQ(a(1, 5), 1);
}

TEST(AssignShifted, ZeroShiftEqualsColumnPattern) {
    const Assignment shifted = assign_shifted(7, 9, 3, 0);
    const Assignment columns = assign_columns(7, 9, 3);
    EXPECT_EQ(shifted.agent_of, columns.agent_of);
}

// Exhaustive pairwise check of the dispersion the shift provides: with 9 raw
// groups on a 7x9 grid the minimum same-group Manhattan distance is 3
// (rows two apart realign within one column), and no two tiles closer than
// distance 3 ever share a group.
TEST(AssignShifted, SameGroupManhattanSeparation) {
    const Assignment a = assign_shifted(7, 9, 9, 4);
    int min_dist = 1000;
    for (int r1 = 0; r1 < 7; ++r1) {
        for (int c1 = 0; c1 < 9; ++c1) {
            for (int r2 = r1; r2 < 7; ++r2) {
                for (int c2 = 0; c2 < 9; ++c2) {
                    if (r1 == r2 && c2 <= c1) continue;
                    if (a(r1, c1) != a(r2, c2)) continue;
                    min_dist = std::min(min_dist, std::abs(r1 - r2) + std::abs(c1 - c2));
                }
            }
        }
    }
    EXPECT_EQ(min_dist, 3);
}

TEST(AssignShifted, PartitionSurjective) {
    const Assignment a = assign_shifted(7, 9, 3, 4);
    std::vector<int> counts(4, 0);
    for (int v : a.agent_of) ++counts[v];
    EXPECT_EQ(counts[1] + counts[2] + counts[3], 63);
    EXPECT_GT(counts[1], 0);
    EXPECT_GT(counts[2], 0);
    EXPECT_GT(counts[3], 0);
    EXPECT_THROW(assign_shifted(7, 2, 3, 4), std::invalid_argument);
}

// With unconstrained limits the per-tile mode achieves exact specular
// focusing: reflecting the AP ray off every tile passes through the focal.
TEST(ApplyFocalPoints, ExactFocusingWithUnconstrainedLimits) {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        ReflectorArray a =
            hex_layout(5, 5, 0.15, {0, 0, 0}, UnitVec3::normalize({0.1, -0.2, 1.0}));
        const Assignment assign = assign_columns(5, 5, 3);
        const Vec3 ap{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 8)};
        std::vector<Vec3> focals;
        for (int l = 0; l < 3; ++l) {
            focals.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(2, 9)});
        }
        apply_focal_points(a, focals, assign, ap, wide_constraints(3), ControlMode::per_tile);
        double worst = 0.0;
        for (const TileState& t : a.tiles) {
            const UnitVec3 n = a.tile_normal_world(t);
            const UnitVec3 incoming = UnitVec3::normalize(t.position - ap);
            const UnitVec3 reflected = reflect_direction(incoming, n);
            const Vec3 to_focal = focals[assign(t.row, t.col) - 1] - t.position;
            worst = std::max(worst, angle_between(reflected.vec(), to_focal));
        }
        EXPECT_LT(worst, 1e-9);
    }
}

TEST(ApplyFocalPoints, ElevationClampsToServoLimit) {
    ReflectorArray a = hex_layout(1, 1, 0.15, {0, 0, 0}, kUp);
    const Assignment assign = assign_columns(1, 1, 1);
    const Vec3 ap{0, 0, 10};
    // focal nearly in the panel plane, toward -y: unclamped elevation ~ -0.76 rad
    const std::vector<Vec3> focals{{0.0, -20.0, 0.5}};
    FocalConstraints wide = wide_constraints(1);
    apply_focal_points(a, focals, assign, ap, wide, ControlMode::per_tile);
    const double unclamped = a.tiles[0].theta;
    ASSERT_LT(unclamped, -kPi / 6.0);

    FocalConstraints servo = wide_constraints(1, kPi / 6.0);
    apply_focal_points(a, focals, assign, ap, servo, ControlMode::per_tile);
    EXPECT_DOUBLE_EQ(a.tiles[0].theta, -kPi / 6.0);
}

TEST(ApplyFocalPoints, AnglesAlwaysWithinLimits) {
    Rng rng(123);
    ReflectorArray a = hex_layout(4, 6, 0.15, {0, 0, 0}, UnitVec3::normalize({-1, 0.6, 0.1}));
    const Assignment assign = assign_columns(4, 6, 3);
    FocalConstraints servo = wide_constraints(3, kPi / 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 ap{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(1, 10)};
        std::vector<Vec3> focals;
        for (int l = 0; l < 3; ++l) {
            focals.push_back(
                {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)});
        }
        for (ControlMode mode : {ControlMode::per_tile, ControlMode::column_azimuth}) {
            apply_focal_points(a, focals, assign, ap, servo, mode);
            for (const TileState& t : a.tiles) {
                EXPECT_GE(t.theta, servo.theta_min);
                EXPECT_LE(t.theta, servo.theta_max);
                EXPECT_GE(t.phi, servo.phi_min);
                EXPECT_LE(t.phi, servo.phi_max);
            }
        }
    }
}

// Degenerate column (one tile): all per-tile azimuths trivially equal, so
// column aggregation must reproduce per-tile control exactly.
TEST(ApplyFocalPoints, ColumnModeDegenerateColumnEqualsPerTile) {
    const Assignment assign = assign_columns(1, 1, 1);
    const Vec3 ap{1.5, -5, 10};
    const std::vector<Vec3> focals{{-2, 5, 8}};
    ReflectorArray per_tile = hex_layout(1, 1, 0.15, {0, 0, 0}, kUp);
    ReflectorArray column = per_tile;
    apply_focal_points(per_tile, focals, assign, ap, wide_constraints(1), ControlMode::per_tile);
    apply_focal_points(column, focals, assign, ap, wide_constraints(1),
                       ControlMode::column_azimuth);
    EXPECT_DOUBLE_EQ(column.tile(0, 0).theta, per_tile.tile(0, 0).theta);
    EXPECT_DOUBLE_EQ(column.tile(0, 0).phi, per_tile.tile(0, 0).phi);
    EXPECT_NE(per_tile.tile(0, 0).phi, 0.0);  // the case is not vacuous
}

// Column mode stores the mean of the column's unclamped per-tile azimuths.
TEST(ApplyFocalPoints, ColumnModeStoresMeanOfUnclampedAzimuths) {
    const Assignment assign = assign_columns(3, 1, 1);
    const Vec3 ap{2, -6, 9};
    const std::vector<Vec3> focals{{-3, 7, 6}};
    ReflectorArray per_tile = hex_layout(3, 1, 0.15, {0, 0, 0}, kUp);
    ReflectorArray column = per_tile;
    apply_focal_points(per_tile, focals, assign, ap, wide_constraints(1), ControlMode::per_tile);
    apply_focal_points(column, focals, assign, ap, wide_constraints(1),
                       ControlMode::column_azimuth);
    double mean_phi = 0.0;
    for (int r = 0; r < 3; ++r) mean_phi += per_tile.tile(r, 0).phi;  // wide limits: unclamped
    mean_phi /= 3.0;
    for (int r = 0; r < 3; ++r) {
        EXPECT_NEAR(column.tile(r, 0).phi, mean_phi, 1e-12);
        EXPECT_DOUBLE_EQ(column.tile(r, 0).theta, per_tile.tile(r, 0).theta);
    }
}

TEST(ApplyFocalPoints, ColumnModeSharesOneAzimuthPerColumn) {
    ReflectorArray a = hex_layout(5, 4, 0.15, {0, 0, 0}, UnitVec3::normalize({-0.8, 0.55, 0.13}));
    const Assignment assign = assign_columns(5, 4, 2);
    const Vec3 ap{3, -4, 2};
    const std::vector<Vec3> focals{{-8, 1, 1}, {-7, -2, 2}};
    apply_focal_points(a, focals, assign, ap, wide_constraints(2), ControlMode::column_azimuth);
    for (int c = 0; c < 4; ++c) {
        for (int r = 1; r < 5; ++r) EXPECT_DOUBLE_EQ(a.tile(r, c).phi, a.tile(0, c).phi);
    }
}

TEST(ApplyFocalPoints, DegenerateBisectorPropagates) {
    ReflectorArray a = hex_layout(1, 1, 0.15, {0, 0, 0}, kUp);
    const Assignment assign = assign_columns(1, 1, 1);
    FocalConstraints c = wide_constraints(1);
    // clamped focal coincides with the tile position
    EXPECT_THROW(
        apply_focal_points(a, {Vec3{0, 0, 0}}, assign, {0, 0, 10}, c, ControlMode::per_tile),
        DegenerateGeometryError);
}

TEST(ClampFocal, InsideAndOutside) {
    const Box3 box{{-10, -10, 0}, {10, 10, 3}};
    const Vec3 inside{1, 2, 1.5};
    EXPECT_NEAR((clamp_focal(inside, box) - inside).norm(), 0.0, 0.0);
    const Vec3 out{100, 0, 1};
    EXPECT_DOUBLE_EQ(clamp_focal(out, box).x, 10.0);
    EXPECT_DOUBLE_EQ(clamp_focal(out, box).y, 0.0);
}

TEST(ClampFocal, IdempotentAndNonExpansive) {
    Rng rng(3);
    const Box3 box{{-3, -2, 0.5}, {4, 1, 2.5}};
    for (int i = 0; i < 500; ++i) {
        const Vec3 f{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
        const Vec3 g{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)};
        const Vec3 cf = clamp_focal(f, box);
        EXPECT_NEAR((clamp_focal(cf, box) - cf).norm(), 0.0, 0.0);
        const Vec3 cg = clamp_focal(g, box);
        const auto linf = [](const Vec3& v) {
            return std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)});
        };
        EXPECT_LE(linf(cf - cg), linf(f - g) + 1e-15);
    }
}

TEST(ComplexityReduction, PaperAndClosedFormValues) {
    EXPECT_DOUBLE_EQ(complexity_reduction(8, 9, 3), 16.0);   // 72 tiles, 3 agents
    EXPECT_DOUBLE_EQ(complexity_reduction(1, 1, 1), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(complexity_reduction(7, 9, 3), 14.0);
    EXPECT_THROW(complexity_reduction(0, 9, 3), std::invalid_argument);
}

TEST(SegmentCentroid, ColumnAgentsHaveDistinctCentroids) {
    const ReflectorArray a = hex_layout(5, 6, 0.15, {2, -5, 1.8}, kUp);
    const Assignment assign = assign_columns(5, 6, 3);
    const Vec3 c1 = segment_centroid(a, assign, 1);
    const Vec3 c2 = segment_centroid(a, assign, 2);
    const Vec3 c3 = segment_centroid(a, assign, 3);
    EXPECT_GT((c1 - c2).norm(), 1e-6);
    EXPECT_GT((c2 - c3).norm(), 1e-6);
    // centroid of all agents together equals the array centroid
    const Vec3 mean = (c1 + c2 + c3) / 3.0;
    EXPECT_NEAR((mean - Vec3{2, -5, 1.8}).norm(), 0.0, 1e-9);
}

TEST(GimbalAngles, RoundTripAndFlatTile) {
    EXPECT_NEAR((gimbal_to_local(0, 0) - Vec3{0, 0, 1}).norm(), 0.0, 0.0);
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const double theta = rng.uniform(-1.4, 1.4);
        const double phi = rng.uniform(-3.0, 3.0);
        const auto [t2, p2] = local_to_gimbal(gimbal_to_local(theta, phi));
        EXPECT_NEAR(t2, theta, 1e-12);
        EXPECT_NEAR(p2, phi, 1e-12);
    }
}
