#include <catch_amalgamated.hpp>

#include <plgcir/geometry.hpp>

#include "test_support.hpp"

using namespace plgcir;
using Catch::Approx;

namespace {
const Polygon unit_square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
}

TEST_CASE("signed area and orientation", "[geometry]") {
    CHECK(signed_area(unit_square) == 1.0);
    CHECK(signed_area(test::reversed(unit_square)) == -1.0);
    CHECK(signed_area(Polygon{{0, 0}, {1, 0}, {0, 1}}) == 0.5);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Polygon p;
        for (int k = 0; k < 3 + trial % 7; ++k) p.emplace_back(u(rng), u(rng));
        CHECK(signed_area(test::reversed(p)) == Approx(-signed_area(p)).margin(1e-12));
    }
}

TEST_CASE("point in polygon", "[geometry]") {
    CHECK(point_in_polygon({0.5, 0.5}, unit_square) == Location::inside);
    CHECK(point_in_polygon({2, 2}, unit_square) == Location::outside);
    CHECK(point_in_polygon({0.5, 0.0}, unit_square) == Location::boundary);
    CHECK(point_in_polygon({1.0, 1.0}, unit_square) == Location::boundary);

    const auto polys = test::connectivity17_polygons();
    CHECK(point_in_polygon({16, 15}, polys[16]) == Location::inside);
}

TEST_CASE("point in circular domain", "[geometry]") {
    CircularDomain c{{{0.5, 0.0}, {0.0, 0.0}}, {0.1, 1.0}, true};
    CHECK(point_in_circular({0, 0}, c));
    CHECK_FALSE(point_in_circular({0.5, 0}, c));
    CHECK_FALSE(point_in_circular({2, 0}, c));

    CircularDomain u{{{0.0, 0.0}}, {1.0}, false};
    CHECK(point_in_circular({5, 5}, u));
    CHECK_FALSE(point_in_circular({0.2, 0}, u));
}

TEST_CASE("validate the example domains", "[geometry]") {
    SECTION("hexagon, bounded") {
        const auto d = validate_domain(test::hexagon_polygons(), cplx(0, 0), 5);
        CHECK(d.size() == 1);
        CHECK(d.bounded);
        CHECK(d.warnings.empty());
        CHECK(d.beta_point() == cplx(1, 0));
    }
    SECTION("seventeen components") {
        const auto d = validate_domain(test::connectivity17_polygons(), cplx(16, 15));
        CHECK(d.size() == 17);
        CHECK(d.warnings.empty());
        CHECK(signed_area(d.polygons.back()) > 0);
        for (std::size_t j = 0; j + 1 < d.size(); ++j) CHECK(signed_area(d.polygons[j]) < 0);
    }
    SECTION("twenty-four diamonds, unbounded") {
        const auto d = validate_domain(test::diamonds24_polygons(), std::nullopt);
        CHECK(d.size() == 24);
        CHECK_FALSE(d.bounded);
        CHECK(d.warnings.empty());
        CHECK(d.contains({0, 0}));
        CHECK_FALSE(d.contains({-1.75, -0.5}));
    }
}

TEST_CASE("validation errors carry distinct codes", "[geometry]") {
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io;  // sentinel: no error thrown
    };
    CHECK(code_of([] { validate_domain({{{0, 0}, {1, 0}, {0, 1}, {1, 1}}}, cplx(0.5, 0.2)); }) ==
          ErrorCode::self_intersection);
    CHECK(code_of([] { validate_domain({unit_square}, cplx(3, 3)); }) == ErrorCode::alpha_outside);
    CHECK(code_of([] { validate_domain({unit_square}, cplx(0.5, 0.5), 4); }) == ErrorCode::beta_invalid);
    CHECK(code_of([] { validate_domain({{{0, 0}, {1, 0}}}, cplx(0.5, 0.5)); }) == ErrorCode::too_few_vertices);
    // a spike that doubles back on itself
    CHECK(code_of([] { validate_domain({{{0, 0}, {2, 0}, {1, 0}, {1, 1}}}, cplx(0.5, 0.2)); }) != ErrorCode::io);
    // hole sticking out of the outer square
    CHECK(code_of([] {
              validate_domain({test::reversed({{0.5, 0.5}, {1.5, 0.5}, {1.5, 0.7}, {0.5, 0.7}}), unit_square},
                              cplx(0.2, 0.2));
          }) == ErrorCode::polygon_overlap);
    // disjoint holes nested inside each other
    CHECK(code_of([] {
              validate_domain({test::reversed({{1, 1}, {2, 1}, {2, 2}, {1, 2}}),
                               test::reversed({{0.5, 0.5}, {3, 0.5}, {3, 3}, {0.5, 3}})},
                              std::nullopt);
          }) == ErrorCode::polygon_overlap);
}

TEST_CASE("reorientation is reported and validation is idempotent", "[geometry]") {
    // outer given clockwise, hole given counterclockwise
    const Polygon outer = test::reversed(test::regular_polygon(8, 0, 2.0));
    const Polygon hole = test::regular_polygon(5, 0, 0.5);
    const auto d = validate_domain({hole, outer}, cplx(1.2, 0), 0);
    CHECK(d.warnings.size() == 2);
    CHECK(signed_area(d.polygons[1]) > 0);
    CHECK(signed_area(d.polygons[0]) < 0);
    CHECK(d.beta_point() == outer[0]);

    const auto again = validate_domain(d);
    CHECK(again.polygons == d.polygons);
    CHECK(again.warnings == d.warnings);
    CHECK(again.beta == d.beta);
}

TEST_CASE("circular domain validity", "[geometry]") {
    CHECK(circles_valid({{{0, 0}, {0.5, 0}}, {0.1, 0.3}, false}));
    CHECK(circles_valid({{{0.5, 0}, {0, 0}}, {0.1, 1.0}, true}));
    CHECK_FALSE(circles_valid({{{0.95, 0}, {0, 0}}, {0.1, 1.0}, true}));
    CHECK_FALSE(circles_valid({{{0, 0}, {0.15, 0}}, {0.1, 0.1}, false}));
}
