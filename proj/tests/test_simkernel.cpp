#include "spineviz/errors.hpp"
#include "spineviz/simkernel.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstring>

using namespace spineviz;

namespace {

SpineModel single_body() {
    SpineModel m;
    m.span = "C1..C1";
    BodySpec b;
    b.id = "C1";
    b.mass = 2.0;
    b.rest_position = Vec3(0, 100, 0);
    m.bodies.push_back(b);
    m.anchor_caudal = false;
    return m;
}

}  // namespace

TEST_CASE("degeneration factor") {
    CHECK(degeneration_factor(1) == 1.0);
    CHECK(100.0 * degeneration_factor(3) == doctest::Approx(100.0 / 1.7));
    CHECK_THROWS_AS(degeneration_factor(0), ParameterError);
    CHECK_THROWS_AS(degeneration_factor(6), ParameterError);

    const SpineModel m = default_model();
    const SpineModel d = apply_degeneration(m, {{"C3C4", 3}});
    for (std::size_t j = 0; j < m.joints.size(); ++j) {
        const bool target = disc_id(m.joints[j].cranial, m.joints[j].caudal) == "C3C4";
        CHECK(d.joints[j].stiffness.x() == doctest::Approx(m.joints[j].stiffness.x() * (target ? 1 / 1.7 : 1.0)));
    }
    CHECK(apply_degeneration(m, {{"C3C4", 1}}).joints[2].stiffness == m.joints[2].stiffness);
    CHECK_THROWS_AS(apply_degeneration(m, {{"C1C2", 2}}), ParameterError);
}

TEST_CASE("rest state is a fixed point without loads") {
    const SpineModel m = default_model();
    const SimState s0 = rest_state(m);
    const SimState s1 = step(m, s0, 1e-3);
    CHECK(s1.bodies == s0.bodies);
}

TEST_CASE("free fall step") {
    const SpineModel m = single_body();
    SimState s = rest_state(m);
    s.bodies[0].velocity = Vec3(1, 2, 3);
    const Vec3 g(0, -9810, 0);
    const double dt = 1e-3;
    const SimState s1 = step(m, s, dt, g);
    const Vec3 v = Vec3(1, 2, 3) + g * dt;
    CHECK((s1.bodies[0].velocity - v).norm() < 1e-12);
    CHECK((s1.bodies[0].position - (Vec3(0, 100, 0) + v * dt)).norm() < 1e-12);
}

TEST_CASE("model validation") {
    SpineModel m = default_model();
    CHECK_NOTHROW(m.validate());
    m.bodies[3].mass = 0.0;
    CHECK_THROWS_AS(m.validate(), ParameterError);
    m = default_model();
    m.joints[1].caudal = "Th3";
    CHECK_THROWS_AS(m.validate(), ParameterError);
}

TEST_CASE("chain equilibrium under gravity") {
    const SpineModel m = default_model();
    const auto ds = run(m, static_gravity_scenario());
    const ValueMatrix& fm = *ds.matrix(Attribute::ForceMagnitude);
    const std::size_t last = fm.rows() - 1;
    double above = 0.0;
    for (const auto& joint : m.joints) {
        above += m.bodies[m.body_index(joint.cranial)].mass;
        if (!joint.disc) continue;
        const double oracle = above * 9.81;
        const double got = fm.at(last, *fm.column_index(disc_id(joint.cranial, joint.caudal)));
        CAPTURE(joint.cranial);
        CHECK(std::abs(got - oracle) <= 0.02 * oracle);
    }
    CHECK(fm.at(last, *fm.column_index("C2C3")) == doctest::Approx(44.145).epsilon(0.02));
}

TEST_CASE("energy settles") {
    const SpineModel m = default_model();
    const Scenario sc = static_gravity_scenario();
    SimState s = rest_state(m);
    double peak = 0.0;
    for (int i = 0; i < 3000; ++i) {
        s = step(m, s, sc.dt, sc.gravity);
        peak = std::max(peak, kinetic_energy(m, s));
    }
    CHECK(peak > 0.0);
    CHECK(kinetic_energy(m, s) < 1e-6 * peak);
}

TEST_CASE("large steps diverge") {
    Scenario sc = static_gravity_scenario();
    sc.dt = 0.1;
    sc.tick = 0.1;
    try {
        run(default_model(), sc);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK_FALSE(e.body().empty());
        CHECK(e.time() > 0.0);
    }
}

TEST_CASE("facets are unilateral") {
    const auto ds = run(default_model(), lateral_bend_scenario());
    const ValueMatrix& fm = *ds.matrix(Attribute::ForceMagnitude);
    for (double v : fm.raw()) CHECK(v >= 0.0);
    // right facets open during a bend toward the left
    const auto col = *fm.column_index("C4C5_facetR");
    CHECK(fm.at(150, col) == 0.0);
    CHECK(fm.at(150, *fm.column_index("C4C5_facetL")) > 0.0);
}

TEST_CASE("run output shape and determinism") {
    const SpineModel m = default_model();
    const Scenario sc = lateral_bend_scenario();
    const auto a = run(m, sc);
    const auto b = run(m, sc);
    CHECK(a.times().size() == 301);
    CHECK(structure_census(a.registry) == StructureCensus{10, 8, 9});
    CHECK(validate_dataset(a).empty());
    REQUIRE(a.kinematics.has_value());
    CHECK(a.kinematics->bodies().size() == 10);
    CHECK(a.meshes.size() == 18);
    for (const auto& [attr, mat] : a.matrices) {
        const auto& other = b.matrix(attr)->raw();
        REQUIRE(other.size() == mat.raw().size());
        CHECK(std::memcmp(other.data(), mat.raw().data(), other.size() * sizeof(double)) == 0);
    }
    RunOptions no_mesh;
    no_mesh.with_meshes = false;
    CHECK(run(m, sc, no_mesh).meshes.empty());
}

TEST_CASE("model and scenario json round trip") {
    const SpineModel m = default_model();
    const SpineModel back = model_from_json(model_to_json(m));
    CHECK(model_to_json(back) == model_to_json(m));
    CHECK(back.bodies.size() == 10);

    Scenario sc = lateral_bend_scenario();
    sc.degeneration["C5C6"] = 4;
    const Scenario sback = scenario_from_json(scenario_to_json(sc));
    CHECK(scenario_to_json(sback) == scenario_to_json(sc));
    CHECK(sback.external_force_at(1.5) == Vec3(75, 0, 0));
    CHECK(sback.external_force_at(0.5).x() == doctest::Approx(37.5));

    CHECK_THROWS_AS(model_from_json("{"), FormatError);
    CHECK_THROWS_AS(scenario_from_json(R"({"degeneration": {"C2C3": 9}})"), ParameterError);
}

TEST_CASE("bundled model file equals the built-in model") {
    const auto text = testing::read_text(testing::data_dir().parent_path() / "models" / "c1_th3.json");
    CHECK(model_to_json(model_from_json(text)) == model_to_json(default_model()));
}
