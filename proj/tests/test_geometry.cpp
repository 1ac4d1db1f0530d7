#include "spineviz/errors.hpp"
#include "spineviz/geometry.hpp"
#include "spineviz/simkernel.hpp"

#include "support.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace spineviz;

namespace {

Mesh box(const Vec3& lo, const Vec3& hi) {
    Mesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
    }
    // outward-facing quads split into triangles
    const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    for (const auto& q : quads) {
        m.triangles.push_back({q[0], q[1], q[2]});
        m.triangles.push_back({q[0], q[2], q[3]});
    }
    return m;
}

Mesh bundled(const std::string& id) {
    return parse_obj_subset(testing::read_text(testing::data_dir() / "static_gravity" / "meshes" / (id + ".obj")), id);
}

}  // namespace

TEST_CASE("to_local_force") {
    CHECK(to_local_force(Vec3(3, -1, 2), Quat::Identity()) == Vec3(3, -1, 2));
    const Vec3 r = to_local_force(Vec3(1, 0, 0), Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ())));
    CHECK(r.x() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.y() == doctest::Approx(-1.0));
    CHECK(r.z() == doctest::Approx(0.0).epsilon(1e-15));

    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    for (int i = 0; i < 1000; ++i) {
        const Quat q = Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
        const Vec3 f(n(rng) * 100, n(rng) * 100, n(rng) * 100);
        CHECK((q * to_local_force(f, q) - f).norm() <= 1e-9 * f.norm());
    }
    const auto lf = make_local_force(Vec3(0, 5, 0), Quat::Identity());
    CHECK(lf.local == Vec3(0, 5, 0));
}

TEST_CASE("to_local_force rejects non-rotations") {
    Mat3 scaled = Mat3::Identity() * 1.1;
    CHECK_THROWS_AS(to_local_force(Vec3(1, 0, 0), scaled), FrameError);
    Mat3 reflect = Mat3::Identity();
    reflect(0, 0) = -1.0;
    CHECK_THROWS_AS(to_local_force(Vec3(1, 0, 0), reflect), FrameError);
}

TEST_CASE("barycenter") {
    const Mesh cube = box(Vec3::Zero(), Vec3::Ones());
    CHECK((barycenter(cube) - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);

    Mesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 3, 0)};
    tri.triangles = {{0, 1, 2}};
    CHECK((barycenter(tri) - Vec3(1, 1, 0)).norm() < 1e-15);

    // independent oracle: average of distinct positions
    const Mesh c4 = bundled("C4");
    std::set<std::array<double, 3>> unique;
    for (const auto& v : c4.vertices) unique.insert({v.x(), v.y(), v.z()});
    Vec3 sum = Vec3::Zero();
    for (const auto& p : unique) sum += Vec3(p[0], p[1], p[2]);
    CHECK((barycenter(c4) - sum / static_cast<double>(unique.size())).norm() < 1e-9);

    CHECK_THROWS_AS(barycenter(Mesh{}), GeometryError);
}

TEST_CASE("silhouette") {
    SUBCASE("folded pair") {
        Mesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
        m.triangles = {{0, 1, 2}, {1, 2, 3}};  // normals +z and -z
        const auto edges = silhouette(m, Vec3(0, 0, 1));
        CHECK(std::find(edges.begin(), edges.end(), Edge{1, 2}) != edges.end());
    }
    SUBCASE("edge-on faces count as back-facing") {
        Mesh m;
        m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
        m.triangles = {{0, 1, 2}};
        CHECK(silhouette(m, Vec3(1, 0, 0)).empty());
        CHECK(silhouette(m, Vec3(0, 0, 1)).size() == 3);
    }
    SUBCASE("closed convex meshes give closed loops") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> n;
        const Mesh cyl = make_elliptic_cylinder("D", Vec3(1, 2, 3), 9, 7, 6, 24);
        for (const Mesh* m : {&cyl}) {
            for (int i = 0; i < 50; ++i) {
                const Vec3 v = Vec3(n(rng), n(rng), n(rng)).normalized();
                const auto edges = silhouette(*m, v);
                REQUIRE_FALSE(edges.empty());
                std::map<int, int> degree;
                for (const auto& e : edges) {
                    ++degree[e.a];
                    ++degree[e.b];
                }
                for (const auto& [vertex, d] : degree) CHECK(d % 2 == 0);
                CHECK(std::is_sorted(edges.begin(), edges.end()));
            }
        }
    }
}

TEST_CASE("isolines: box") {
    const Mesh b = box(Vec3(0, 0, 0), Vec3(4, 8, 2));
    const auto set = isolines(b, Vec3::Zero(), Vec3::UnitY(), 3);
    REQUIRE(set.levels.size() == 3);
    CHECK(set.levels[0] == doctest::Approx(2.0));
    CHECK(set.levels[1] == doctest::Approx(4.0));
    CHECK(set.levels[2] == doctest::Approx(6.0));
    for (std::size_t l = 0; l < 3; ++l) {
        REQUIRE(set.polylines[l].size() == 1);
        const auto& loop = set.polylines[l][0];
        CHECK((loop.front() - loop.back()).norm() < 1e-12);
        double xmin = 1e9, xmax = -1e9, zmin = 1e9, zmax = -1e9;
        for (const auto& p : loop) {
            CHECK(p.y() == doctest::Approx(set.levels[l]));
            xmin = std::min(xmin, p.x());
            xmax = std::max(xmax, p.x());
            zmin = std::min(zmin, p.z());
            zmax = std::max(zmax, p.z());
        }
        CHECK(xmin == doctest::Approx(0.0));
        CHECK(xmax == doctest::Approx(4.0));
        CHECK(zmin == doctest::Approx(0.0));
        CHECK(zmax == doctest::Approx(2.0));
    }
}

TEST_CASE("isolines: flat mesh") {
    Mesh flat;
    flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 1)};
    flat.triangles = {{0, 2, 1}, {1, 2, 3}};
    CHECK(isolines(flat, Vec3::Zero(), Vec3::UnitY(), 5).empty());
    const Mesh thin = make_elliptic_cylinder("D", Vec3::Zero(), 9, 7, 1e-7, 16);
    CHECK_NOTHROW(isolines(thin, Vec3::Zero(), Vec3::UnitY(), 5));
}

TEST_CASE("isolines: bundled disc matches per-triangle oracle") {
    const Mesh disc = bundled("C3C4");
    const Vec3 o = barycenter(disc);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    for (int i = 0; i < 10; ++i) {
        const Vec3 d = Vec3(n(rng), n(rng), n(rng)).normalized();
        const auto set = isolines(disc, o, d, 5);
        for (std::size_t l = 0; l < set.levels.size(); ++l) {
            std::size_t oracle = 0;
            for (const auto& tri : disc.triangles) {
                int crossings = 0;
                for (int e = 0; e < 3; ++e) {
                    const double sa = (disc.vertices[tri[e]] - o).dot(d) - set.levels[l];
                    const double sb = (disc.vertices[tri[(e + 1) % 3]] - o).dot(d) - set.levels[l];
                    crossings += (sa < 0) != (sb < 0) ? 1 : 0;
                }
                oracle += crossings == 2 ? 1 : 0;
            }
            std::size_t edges = 0;
            for (const auto& line : set.polylines[l]) {
                edges += line.size() - 1;
                for (const auto& p : line) CHECK(std::abs((p - o).dot(d) - set.levels[l]) < 1e-6);
            }
            CHECK(edges == oracle);
        }
    }
}

TEST_CASE("projected outline") {
    const Mesh b = box(Vec3(-1, -2, -3), Vec3(1, 2, 3));
    const auto hull = projected_outline(b);
    REQUIRE(hull.size() == 4);
    double area = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& p = hull[i];
        const auto& q = hull[(i + 1) % hull.size()];
        area += p.x * q.y - q.x * p.y;
    }
    CHECK(area / 2.0 == doctest::Approx(8.0));  // counter-clockwise
}
