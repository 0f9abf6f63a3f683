#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "refsim/config.hpp"
#include "refsim/material.hpp"
#include "refsim/raytrace.hpp"
#include "refsim/scene.hpp"

using namespace refsim;

TEST(MaterialProperties, ConcreteAt60GHz) {
    const auto [eta, sigma] = material_properties(materials::concrete(), 60.0);
    EXPECT_DOUBLE_EQ(eta, 5.24);
    EXPECT_NEAR(sigma, 0.0462 * std::pow(60.0, 0.7822), 1e-12);
    EXPECT_NEAR(sigma, 1.1364, 1e-3);
}

TEST(MaterialProperties, FrequencyIndependentWhenExponentsZero) {
    const Material m{"m", 3.5, 0.0, 0.2, 0.0, false};
    for (double f : {1.0, 10.0, 60.0, 100.0}) {
        const auto [eta, sigma] = material_properties(m, f);
        EXPECT_DOUBLE_EQ(eta, 3.5);
        EXPECT_DOUBLE_EQ(sigma, 0.2);
    }
}

TEST(MaterialProperties, VacuumLike) {
    const auto [eta, sigma] = material_properties(materials::vacuum(), 60.0);
    EXPECT_DOUBLE_EQ(eta, 1.0);
    EXPECT_DOUBLE_EQ(sigma, 0.0);
}

TEST(MaterialProperties, NonPositiveFrequencyThrows) {
    EXPECT_THROW(material_properties(materials::concrete(), 0.0), std::invalid_argument);
    EXPECT_THROW(material_properties(materials::concrete(), -1.0), std::invalid_argument);
}

TEST(ComplexPermittivity, ZeroConductivityIsPurelyReal) {
    const auto eta = complex_permittivity(2.5, 0.0, 60e9);
    EXPECT_DOUBLE_EQ(eta.real(), 2.5);
    EXPECT_DOUBLE_EQ(eta.imag(), 0.0);
}

TEST(ComplexPermittivity, Vacuum) {
    const auto eta = complex_permittivity(1.0, 0.0, 1e9);
    EXPECT_EQ(eta, std::complex<double>(1.0, 0.0));
}

TEST(ComplexPermittivity, ConcreteAt60GHz) {
    const auto eta = complex_permittivity(5.24, 1.137, 60e9);
    EXPECT_DOUBLE_EQ(eta.real(), 5.24);
    EXPECT_NEAR(eta.imag(), -0.3406, 2e-4);
    EXPECT_LE(eta.imag(), 0.0);
}

TEST(ComplexPermittivity, NonPositiveFrequencyThrows) {
    EXPECT_THROW(complex_permittivity(2.0, 0.1, 0.0), std::invalid_argument);
}

TEST(FresnelReflection, PerfectConductorLimit) {
    for (double c : {1.0, 0.7, 0.2, 0.01}) {
        const auto g = reflection_coefficient(materials::metal(), 60e9, c);
        EXPECT_DOUBLE_EQ(g.real(), -1.0);
        EXPECT_DOUBLE_EQ(g.imag(), 0.0);
    }
}

TEST(FresnelReflection, NormalIncidenceEtaFour) {
    const auto g = fresnel_reflection({4.0, 0.0}, 1.0);
    EXPECT_NEAR(g.real(), -1.0 / 3.0, 1e-12);
    EXPECT_NEAR(g.imag(), 0.0, 1e-12);
}

TEST(FresnelReflection, MagnitudeBoundedForPassiveMaterials) {
    for (const Material& m : {materials::concrete(), materials::plasterboard(),
                              materials::wood(), materials::ceiling_board()}) {
        for (int i = 1; i <= 100; ++i) {
            const double c = i / 100.0;
            const auto g = reflection_coefficient(m, 60e9, c);
            EXPECT_LE(std::abs(g), 1.0 + 1e-12) << m.name << " cos=" << c;
        }
    }
}

TEST(FresnelReflection, GrazingIncidenceThrows) {
    EXPECT_THROW(fresnel_reflection({4.0, 0.0}, 0.0), std::invalid_argument);
    EXPECT_THROW(fresnel_reflection({4.0, 0.0}, -0.5), std::invalid_argument);
}

TEST(LHallway, ApAndPowerMatchLayout) {
    const Scene s = build_l_hallway(SceneConfig{});
    EXPECT_DOUBLE_EQ(s.ap_position.x, 9.5);
    EXPECT_DOUBLE_EQ(s.ap_position.y, -1.5);
    EXPECT_DOUBLE_EQ(s.ap_position.z, 2.5);
    EXPECT_DOUBLE_EQ(s.ap_power_dbm, 5.0);
    EXPECT_DOUBLE_EQ(s.frequency_hz, 60e9);
}

TEST(LHallway, UeRegionBox) {
    const Scene s = build_l_hallway(SceneConfig{});
    EXPECT_DOUBLE_EQ(s.user_region.min.x, -6.0);
    EXPECT_DOUBLE_EQ(s.user_region.min.y, -6.2);
    EXPECT_DOUBLE_EQ(s.user_region.max.x, 2.0);
    EXPECT_DOUBLE_EQ(s.user_region.max.y, -4.25);
    EXPECT_DOUBLE_EQ(s.user_region.min.z, 1.5);
    EXPECT_DOUBLE_EQ(s.user_region.max.z, 1.5);
}

TEST(LHallway, ObstacleCentroidAndHeight) {
    const Scene s = build_l_hallway(SceneConfig{});
    Vec3 centroid{0, 0, 0};
    int side_facets = 0;
    double top_z = 0.0;
    for (const Surface& f : s.surfaces) {
        if (f.kind() != SurfaceKind::obstacle) continue;
        if (f.polygon().size() == 4) {
            centroid += Vec3{f.centroid().x, f.centroid().y, 0.0};
            ++side_facets;
        } else {
            top_z = f.centroid().z;
        }
    }
    ASSERT_EQ(side_facets, 16);
    centroid = centroid / side_facets;
    EXPECT_NEAR(centroid.x, 3.0, 1e-9);
    EXPECT_NEAR(centroid.y, -5.5, 1e-9);
    EXPECT_DOUBLE_EQ(top_z, 1.8);
}

TEST(LHallway, AllSurfacesPlanarConvexFiniteMaterials) {
    const Scene s = build_l_hallway(SceneConfig{});
    EXPECT_EQ(s.surfaces.size(), 8u + 16u + 1u);
    for (const Surface& f : s.surfaces) {
        for (const Vec3& v : f.polygon()) {
            EXPECT_LE(std::abs(f.plane().signed_distance(v)), 1e-9);
        }
        const auto [eta, sigma] = material_properties(f.material(), 60.0);
        EXPECT_TRUE(std::isfinite(eta));
        EXPECT_TRUE(std::isfinite(sigma));
        EXPECT_GT(eta, 0.0);
    }
}

// Direct AP -> UE-region sight lines are broken by the corner geometry, and
// the obstacle shadows part of the region from the reflector mount.
TEST(LHallway, NlosConstruction) {
    const Scene s = build_l_hallway(SceneConfig{});
    EXPECT_TRUE(segment_blocked(s.surfaces, s.ap_position, s.user_region.center()));

    const MountPose mount = default_reflector_mount(SceneConfig{});
    EXPECT_TRUE(segment_blocked(s.surfaces, mount.center, {1.4, -5.45, 1.5}));
    EXPECT_FALSE(segment_blocked(s.surfaces, mount.center, {-4.0, -4.4, 1.5}));
    EXPECT_FALSE(segment_blocked(s.surfaces, s.ap_position, mount.center));
}

TEST(LHallway, InconsistentTopologyThrows) {
    SceneConfig cfg;
    cfg.hall_width_m = 1.0;  // AP would sit outside corridor B
    EXPECT_THROW(build_l_hallway(cfg), std::invalid_argument);
    SceneConfig low;
    low.ceiling_m = 2.0;  // below the AP height
    EXPECT_THROW(build_l_hallway(low), std::invalid_argument);
    SceneConfig neg;
    neg.hall_width_m = -3.0;
    EXPECT_THROW(build_l_hallway(neg), std::invalid_argument);
}

TEST(LHallway, MountAimsBetweenApAndRegion) {
    const SceneConfig cfg;
    const MountPose mount = default_reflector_mount(cfg);
    const Scene s = build_l_hallway(cfg);
    const Vec3 aim{-2.0, (-6.2 - 4.25) / 2.0, cfg.ue_height_m};
    const UnitVec3 incoming = UnitVec3::normalize(mount.center - s.ap_position);
    const UnitVec3 reflected = reflect_direction(incoming, mount.base_normal);
    const Vec3 to_aim = aim - mount.center;
    const double ang = std::atan2(reflected.vec().cross(to_aim).norm(), reflected.dot(to_aim));
    EXPECT_LT(ang, 1e-9);
    EXPECT_TRUE(s.bounds.contains(mount.center));
}

TEST(KeyValueConfigParse, RoundTripAndComments) {
    const auto kv = KeyValueConfig::from_string(
        "# scene\nhall_width_m = 3.5\nceiling_m=3.2\nreflector_rows = 7 # trailing\n\n");
    EXPECT_DOUBLE_EQ(kv.get_double("hall_width_m", 0), 3.5);
    EXPECT_DOUBLE_EQ(kv.get_double("ceiling_m", 0), 3.2);
    EXPECT_EQ(kv.get_int("reflector_rows", 0), 7);
    EXPECT_EQ(kv.get_int("missing", 42), 42);
    const SceneConfig sc = SceneConfig::from_config(kv);
    EXPECT_DOUBLE_EQ(sc.hall_width_m, 3.5);
    EXPECT_EQ(sc.reflector_rows, 7);
    EXPECT_THROW(KeyValueConfig::from_string("not a pair\n"), std::invalid_argument);
}

TEST(SurfaceValidation, RejectsBadPolygons) {
    const Material m = materials::vacuum();
    EXPECT_THROW(Surface::make({{0, 0, 0}, {1, 0, 0}}, m, SurfaceKind::wall),
                 std::invalid_argument);
    // non-planar quad
    EXPECT_THROW(
        Surface::make({{0, 0, 0}, {1, 0, 0}, {1, 1, 0.5}, {0, 1, 0}}, m, SurfaceKind::wall),
        std::invalid_argument);
    // non-convex (dart)
    EXPECT_THROW(
        Surface::make({{0, 0, 0}, {2, 0, 0}, {0.2, 0.2, 0}, {0, 2, 0}}, m, SurfaceKind::wall),
        std::invalid_argument);
    // zero area
    EXPECT_THROW(Surface::make({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, m, SurfaceKind::wall),
                 std::invalid_argument);
}

TEST(SurfaceContains, EdgeEpsilonSemantics) {
    const Surface sq = make_rect({0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                 materials::vacuum(), SurfaceKind::floor);
    EXPECT_TRUE(sq.contains({0.5, 0.5, 0}, 0.0));
    EXPECT_TRUE(sq.contains({1.0 + 0.5e-9, 0.5, 0}, 1e-9));   // just outside, tolerated
    EXPECT_FALSE(sq.contains({1.0 + 2e-9, 0.5, 0}, 1e-9));    // clearly outside
    EXPECT_FALSE(sq.contains({1.0 - 0.5e-9, 0.5, 0}, -1e-9)); // not clearly inside
    EXPECT_TRUE(sq.contains({1.0 - 2e-9, 0.5, 0}, -1e-9));
}
