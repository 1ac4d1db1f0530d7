#include "spineviz/errors.hpp"
#include "spineviz/glyphs.hpp"
#include "spineviz/simkernel.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace spineviz;

namespace {

Mesh disc_mesh() { return make_elliptic_cylinder("C3C4", Vec3(0, 50, 0), 9, 7, 4, 24); }

double angle_deg(const Vec3& a, const Vec3& b) {
    return radians_to_degrees(std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)));
}

}  // namespace

TEST_CASE("axis-aligned force") {
    const GlyphConfig cfg;
    const auto g = build_glyph("C3C4", disc_mesh(), Vec3(0, -30, 0), Quat::Identity(), 0.0, cfg);
    CHECK(g.visible);
    CHECK(g.has_force);
    CHECK((g.direction - Vec3(0, -1, 0)).norm() < 1e-12);
    CHECK((g.plane.normal - Vec3(0, -1, 0)).norm() < 1e-12);
    CHECK((g.barycenter - Vec3(0, 50, 0)).norm() < 1e-12);
    // the arrow ends a quarter length short of the barycenter
    CHECK((g.tip - g.barycenter).norm() == doctest::Approx(cfg.gap_ratio * cfg.length));
    CHECK((g.tip - g.tail).norm() == doctest::Approx(cfg.length));
    CHECK(g.plane.center == g.tip);
    CHECK(g.plane.radius == doctest::Approx(cfg.plane_ratio * cfg.length));
    CHECK(g.isolines.levels.size() == 5);
}

TEST_CASE("45 degree frontal shear") {
    const auto g = build_glyph("C3C4", disc_mesh(), Vec3(10, -10, 0), Quat::Identity(), 0.0, GlyphConfig{});
    CHECK(angle_deg(g.plane.normal, Vec3(0, -1, 0)) == doctest::Approx(45.0).epsilon(1e-12));
}

TEST_CASE("zero force hides the glyph") {
    const auto g = build_glyph("C3C4", disc_mesh(), Vec3::Zero(), Quat::Identity(), 0.0, GlyphConfig{});
    CHECK_FALSE(g.visible);
    CHECK_FALSE(g.has_force);
    CHECK(g.isolines.empty());
    CHECK_FALSE(g.shear_angle);
}

TEST_CASE("small spacing hides arrows") {
    GlyphConfig cfg;
    cfg.spacing = 0.1;
    const auto g = build_glyph("C3C4", disc_mesh(), Vec3(0, -30, 0), Quat::Identity(), 0.0, cfg);
    CHECK_FALSE(g.visible);
    CHECK(g.has_force);
}

TEST_CASE("glyphs live in the disc frame") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n;
    for (int i = 0; i < 200; ++i) {
        const Quat phi = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
        const Vec3 f(n(rng) * 50, n(rng) * 50, n(rng) * 50);
        const auto g = build_glyph("C3C4", disc_mesh(), f, phi, 0.0, GlyphConfig{});
        const Vec3 local = phi.conjugate() * f;
        CHECK((g.local_force - local).norm() < 1e-9 * f.norm());
        CHECK((g.direction - local.normalized()).norm() < 1e-9);
        CHECK(std::abs(g.plane.u.dot(g.plane.normal)) < 1e-9);
        CHECK(std::abs(g.plane.v.dot(g.plane.normal)) < 1e-9);
        CHECK(std::abs(g.plane.u.dot(g.plane.v)) < 1e-9);
        CHECK((g.tip - g.tail).norm() == doctest::Approx(12.0).epsilon(1e-12));
    }
}

TEST_CASE("shear angle") {
    const Vec3 axis(0, 1, 0);
    CHECK(*shear_angle(Vec3(0, -5, 0), axis) == doctest::Approx(0.0));
    CHECK(*shear_angle(Vec3(3, 0, 0), axis) == doctest::Approx(90.0));
    CHECK_FALSE(shear_angle(Vec3::Zero(), axis));
    CHECK_THROWS_AS(shear_angle(Vec3(1, 0, 0), Vec3(0, 2, 0)), ParameterError);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int i = 0; i < 500; ++i) {
        const Vec3 f(n(rng), n(rng), n(rng));
        const Vec3 a = Vec3(n(rng), n(rng), n(rng)).normalized();
        const double oracle = std::acos(std::clamp(f.normalized().dot(-a), -1.0, 1.0)) * 180.0 / kPi;
        CHECK(std::abs(*shear_angle(f, a) - oracle) < 1e-9);
    }
}

TEST_CASE("trajectory surface") {
    const auto sample = [](double t, double deg) {
        const double r = degrees_to_radians(deg);
        const Vec3 d(std::sin(r), -std::cos(r), 0.0);
        return TrajectorySample{t, d, d * 3.0};
    };
    SUBCASE("constant direction is degenerate") {
        std::vector<TrajectorySample> s;
        for (int k = 0; k < 50; ++k) s.push_back(sample(0.01 * k, 0.0));
        const auto strip = trajectory_surface(s, 12.0, 0.49, 0.5);
        CHECK(strip.swept_angle == doctest::Approx(0.0));
        for (const auto& q : strip.quads) CHECK((q[1] - q[2]).norm() < 1e-12);
    }
    SUBCASE("alternating direction sweeps 49 x 10 degrees") {
        std::vector<TrajectorySample> s;
        for (int k = 0; k < 50; ++k) s.push_back(sample(0.01 * k, k % 2 == 0 ? 0.0 : 10.0));
        const auto strip = trajectory_surface(s, 12.0, 0.49, 0.5);
        CHECK(strip.swept_angle == doctest::Approx(490.0).epsilon(1e-9));
        CHECK(strip.quads.size() == 49);
        CHECK(strip.opacity.back()[2] == doctest::Approx(1.0));
        CHECK(strip.opacity.front()[0] < strip.opacity.back()[0]);
    }
    SUBCASE("window clipped to available ticks") {
        std::vector<TrajectorySample> s;
        for (int k = 0; k < 10; ++k) s.push_back(sample(0.01 * k, 5.0 * k));
        const auto strip = trajectory_surface(s, 12.0, 0.09, 0.5);
        CHECK(strip.quads.size() == 9);
        CHECK(strip.swept_angle == doctest::Approx(45.0));
        CHECK(trajectory_surface({s[0]}, 12.0, 0.0, 0.5).empty());
        CHECK(trajectory_surface(s, 12.0, 0.09, 0.025).quads.size() == 2);
    }
}

TEST_CASE("bundled dataset glyphs") {
    const auto ds = testing::load("lateral_bend");
    GlyphConfig cfg;
    cfg.spacing = 0.6;
    cfg.length = glyph_length(ds);
    CHECK(cfg.length > 0.0);
    const auto glyphs = build_glyphs(ds, 1.5, cfg);
    REQUIRE(glyphs.size() == 8);
    for (const auto& g : glyphs) {
        CHECK(g.visible);
        CHECK((g.tip - g.tail).norm() == doctest::Approx(cfg.length));
        REQUIRE(g.shear_angle.has_value());
        const auto* ref = ds.registry.find(g.disc);
        const Vec3 axis = disc_axis(*ds.mesh(ref->cranial), *ds.mesh(ref->caudal));
        CHECK(*g.shear_angle == doctest::Approx(angle_deg(g.local_force, -axis)));
        CHECK_FALSE(g.trajectory.empty());
    }
    for (const auto& g : build_glyphs(ds, 0.0, cfg)) CHECK_FALSE(g.has_force);

    // disc frame halfway between its vertebrae
    const auto* ref = ds.registry.find("C4C5");
    const auto& k = *ds.kinematics;
    const Quat a = k.pose(150, *k.body_index("C4")).rotation;
    const Quat b = k.pose(150, *k.body_index("C5")).rotation;
    const Quat mid = disc_rotation(ds, *ref, 150);
    CHECK(mid.angularDistance(a) == doctest::Approx(mid.angularDistance(b)).epsilon(1e-9));
    CHECK(disc_expansion(ds, *ref, 1.0).y() == doctest::Approx(-(3 + 0.5) * 20.0));  // C4 is index 3
}

TEST_CASE("disc axis from endplates") {
    const Mesh upper = make_elliptic_cylinder("C3", Vec3(0, 20, 0), 9, 7, 14, 24);
    const Mesh lower = make_elliptic_cylinder("C4", Vec3(0, 0, 0), 9, 7, 14, 24);
    CHECK((disc_axis(upper, lower) - Vec3(0, 1, 0)).norm() < 1e-12);
}
