#include "spineviz/colormap.hpp"
#include "spineviz/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdio>

using namespace spineviz;

namespace {

std::vector<Rgb> reference_table() {
    std::vector<Rgb> out;
    std::istringstream in(testing::read_text(testing::fixture("viridis_reference.csv")));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        Rgb c;
        if (std::sscanf(line.c_str(), "%*d,%lf,%lf,%lf", &c.r, &c.g, &c.b) == 3) out.push_back(c);
    }
    return out;
}

}  // namespace

TEST_CASE("viridis matches the reference table") {
    const auto table = reference_table();
    REQUIRE(table.size() == 256);
    for (int i = 0; i < 256; ++i) {
        const Rgb c = viridis(i / 255.0);
        CHECK(std::abs(c.r - table[i].r) <= 1.0 / 255.0);
        CHECK(std::abs(c.g - table[i].g) <= 1.0 / 255.0);
        CHECK(std::abs(c.b - table[i].b) <= 1.0 / 255.0);
        CHECK(viridis_entry(i) == table[i]);
    }
    CHECK(viridis(0.0).r == doctest::Approx(0.267).epsilon(1e-3));
    CHECK(viridis(1.0).g == doctest::Approx(0.906).epsilon(1e-3));
    CHECK(viridis(-0.5) == viridis(0.0));
    CHECK(viridis(7.0) == viridis(1.0));
}

TEST_CASE("viridis interpolates linearly between entries") {
    const double u = 10.5 / 255.0;
    const Rgb a = viridis_entry(10);
    const Rgb b = viridis_entry(11);
    const Rgb c = viridis(u);
    CHECK(c.r == doctest::Approx(0.5 * (a.r + b.r)));
    CHECK(c.b == doctest::Approx(0.5 * (a.b + b.b)));
}

TEST_CASE("discretize") {
    const ValueRange r{0.0, 4.0};
    CHECK(discretize(1.9, r, 4) == 1);
    CHECK(discretize(2.0, r, 4) == 2);
    CHECK(discretize(0.0, r, 4) == 0);
    CHECK(discretize(4.0, r, 4) == 3);
    CHECK(discretize(9.0, r, 4) == 3);
    CHECK(discretize(-1.0, r, 4) == 0);
    CHECK_THROWS_AS(discretize(1.0, r, 1), ParameterError);
    CHECK_THROWS_AS(discretize(1.0, ValueRange{2.0, 2.0}, 4), ParameterError);
}

TEST_CASE("value_color") {
    const ValueRange r{0.0, 4.0};
    CHECK(value_color(1.9, r, 4) == viridis(1.0 / 3.0));
    CHECK(value_color(3.99, r, 4) == viridis(1.0));
    CHECK(value_color(1.0, r, 0) == viridis(0.25));
    CHECK(to_hex(Rgb{1.0, 0.0, 0.5}) == "#ff0080");
}

TEST_CASE("nice_range") {
    CHECK(nice_range(2.6, 4) == ValueRange{0.0, 4.0});
    CHECK(nice_range(1.92, 4) == ValueRange{0.0, 2.0});
    CHECK(nice_range(45.0, 4) == ValueRange{0.0, 80.0});
    CHECK(nice_range(0.0, 4).hi > 0.0);
}
