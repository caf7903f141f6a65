#include <catch_amalgamated.hpp>

#include <plgcir/discretize.hpp>

#include "test_support.hpp"

using namespace plgcir;
using Catch::Approx;

namespace {

// Independent long-double evaluation of the grading formula.
long double grading_ld(long double s, int p) {
    const long double pi_l = 3.141592653589793238462643383279502884L;
    auto v = [&](long double x) {
        return (1.0L / p - 0.5L) * std::pow((pi_l - x) / pi_l, 3) + (1.0L / p) * ((x - pi_l) / pi_l) + 0.5L;
    };
    const long double a = std::pow(v(s), p), b = std::pow(v(2 * pi_l - s), p);
    return 2 * pi_l * a / (a + b);
}

cplx winding(const BoundaryComponent& c, cplx z) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c.weight() * c.dz[k] / (c.z[k] - z);
    return s / cplx(0.0, two_pi);
}

const Polygon unit_square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

} // namespace

TEST_CASE("kress grading values", "[discretize]") {
    for (int p : {2, 3, 4, 6}) {
        CHECK(kress_grading(pi, p).w == Approx(pi).epsilon(1e-15));
        const auto g0 = kress_grading(0.0, p);
        CHECK(g0.w == 0.0);
        CHECK(g0.dw == 0.0);
        CHECK(kress_grading(two_pi, p).w == Approx(two_pi).epsilon(1e-15));
    }
    const long double ref = grading_ld(pi / 2, 3);
    CHECK(std::abs(kress_grading(pi / 2, 3).w - static_cast<double>(ref)) < 1e-14);

    // derivatives against long-double central differences
    for (double s : {0.3, 1.1, pi / 2, 2.9, 4.4, 6.0}) {
        const long double h = 1e-5L;
        const long double d1 = (grading_ld(s + h, 3) - grading_ld(s - h, 3)) / (2 * h);
        const long double d2 = (grading_ld(s + h, 3) - 2 * grading_ld(s, 3) + grading_ld(s - h, 3)) / (h * h);
        const auto g = kress_grading(s, 3);
        CHECK(g.dw == Approx(static_cast<double>(d1)).epsilon(1e-8));
        CHECK(g.d2w == Approx(static_cast<double>(d2)).margin(1e-4));
    }
}

TEST_CASE("kress grading is strictly increasing", "[discretize]") {
    for (int p : {2, 3, 5}) {
        double prev = -1.0;
        for (int k = 1; k < 1000; ++k) {
            const double w = kress_grading(two_pi * k / 1000.0, p).w;
            CHECK(w > prev);
            prev = w;
        }
    }
}

TEST_CASE("polygon discretization layout", "[discretize]") {
    const auto d = validate_domain({unit_square}, cplx(0.5, 0.5));
    const auto disc = discretize_polygon(d, 4);
    REQUIRE(disc.components.size() == 1);
    const auto& c = disc.components[0];
    CHECK(c.size() == 16);
    CHECK(c.corners.size() == 4);
    for (std::size_t r = 0; r < c.size(); ++r) {
        CHECK(std::abs(c.dz[r]) > 0.0);
        for (double t : c.corners) CHECK(std::abs(c.node(r) - t) > 1e-3);
        for (cplx v : unit_square) CHECK(c.z[r] != v);
    }
    CHECK(c.weight() * c.size() == Approx(two_pi));

    const auto hex = discretize_polygon(validate_domain(test::hexagon_polygons(), cplx(0, 0)), 512);
    CHECK(hex.components[0].size() == 6 * 512);
    CHECK(hex.total() == 3072);

    CHECK_THROWS_AS(discretize_polygon(d, 5), Error);
    CHECK_THROWS_AS(discretize_polygon(d, 2), Error);
}

TEST_CASE("quadrature identities on the graded boundary", "[discretize]") {
    const auto d = validate_domain(test::hexagon_polygons(), cplx(0, 0));
    const auto disc = discretize_polygon(d, 64);
    const auto& c = disc.components[0];

    double length = 0.0;
    cplx closure = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        length += c.weight() * std::abs(c.dz[k]);
        closure += c.weight() * c.dz[k];
    }
    double perimeter = 0.0;
    for (std::size_t k = 0; k < 6; ++k) perimeter += std::abs(d.polygons[0][(k + 1) % 6] - d.polygons[0][k]);
    CHECK(std::abs(length - perimeter) / perimeter < 1e-3);
    CHECK(std::abs(closure) < 1e-13);

    // winding number at points at least 0.1 * diameter from the curve
    const double diam = d.diameter();
    for (cplx z : {cplx(0, 0), cplx(-0.5, 0.7), cplx(0.6, -0.5)}) {
        REQUIRE(d.boundary_distance(z) >= 0.1 * diam);
        CHECK(std::abs(winding(c, z) - 1.0) < 1e-6);
    }
    for (cplx z : {cplx(3, 3), cplx(1.25, 0.5)}) CHECK(std::abs(winding(c, z)) < 1e-6);
}

TEST_CASE("refinement reduces the winding-number error", "[discretize]") {
    const auto d = validate_domain({unit_square}, cplx(0.5, 0.5));
    const cplx z(0.5, 0.08);
    double prev = 1.0;
    for (int n : {4, 8, 16, 32}) {
        const auto disc = discretize_polygon(d, n);
        const double err = std::abs(winding(disc.components[0], z) - 1.0);
        CHECK(err < prev);
        prev = err;
    }
}
