#include <catch_amalgamated.hpp>

#include <plgcir/grids.hpp>
#include <plgcir/koebe.hpp>

#include "test_support.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sstream>

using namespace plgcir;

namespace {

// square frame [-2,2]^2 with a unit square hole
PolygonalDomain frame() {
    return validate_domain({{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}, {{2, 2}, {-2, 2}, {-2, -2}, {2, -2}}}, cplx(1.5, 0.0));
}

const ConformalMap& hexagon_map() {
    static const ConformalMap f = [] {
        const auto domain = validate_domain(test::hexagon_polygons(), cplx(0.0), 5);
        const auto disc = discretize_polygon(domain, 32);
        auto kr = koebe_iterate(disc, domain, {});
        normalize(kr, disc, domain, Normalization::eq2);
        return build_map(kr, domain, disc);
    }();
    return f;
}

const ConformalMap& diamonds_map() {
    static const ConformalMap f = [] {
        const auto domain = validate_domain({test::regular_polygon(4, cplx(-1.0, 0.0), 0.5),
                                             test::regular_polygon(4, cplx(1.0, 0.0), 0.5)},
                                            std::nullopt);
        const auto disc = discretize_polygon(domain, 32);
        auto kr = koebe_iterate(disc, domain, {});
        normalize(kr, disc, domain, Normalization::eq3);
        return build_map(kr, domain, disc);
    }();
    return f;
}

std::vector<cplx> flat(const PolylineSet& s) {
    std::vector<cplx> out;
    for (const auto& l : s.lines) out.insert(out.end(), l.points.begin(), l.points.end());
    return out;
}

std::size_t count_family(const PolylineSet& s, Family f) {
    std::size_t n = 0;
    for (const auto& l : s.lines) n += l.family == f;
    return n;
}

} // namespace

TEST_CASE("rectangular grid around a hole", "[grids]") {
    const auto d = frame();
    const auto g = rect_grid(d, 3, 3);
    CHECK(g.side == Side::domain);
    CHECK(g.boundary.size() == 2);
    // levels -1, 0, 1 in each direction: the middle line crosses the hole and
    // the outer two run along its edges, which are boundary; all split in two
    CHECK(count_family(g, Family::horizontal) == 6);
    CHECK(count_family(g, Family::vertical) == 6);
    const double diam = d.diameter();
    for (const auto& l : g.lines) {
        CHECK(l.points.size() >= 8);
        for (cplx z : l.points) REQUIRE(d.contains(z));
        // ends sit just inside the boundary
        for (cplx z : {l.points.front(), l.points.back()}) {
            CHECK(d.boundary_distance(z) > 0.5e-3 * diam);
            CHECK(d.boundary_distance(z) < 1.5e-3 * diam);
        }
    }
}

TEST_CASE("rectangular grid of an unbounded domain", "[grids]") {
    const auto& f = diamonds_map();
    const auto g = rect_grid(f.domain, 4, 5);
    CHECK(count_family(g, Family::vertical) >= 5);
    for (cplx z : flat(g)) REQUIRE(f.domain.contains(z));
    CHECK_THROWS_AS(rect_grid(f.domain, 0, 5), Error);
}

TEST_CASE("polar grids stay in the circular domain", "[grids]") {
    SECTION("bounded") {
        const auto& f = hexagon_map();
        const auto g = polar_grid(f.circles(), 4, 6);
        CHECK(g.side == Side::codomain);
        CHECK(count_family(g, Family::circle) == 4);
        CHECK(count_family(g, Family::ray) == 6);
        for (const auto& l : g.lines)
            for (cplx w : l.points) REQUIRE(std::abs(w) < 1.0);
        // circle k has radius (k + 1) / 5
        for (const auto& l : g.lines)
            if (l.family == Family::circle)
                for (cplx w : l.points) CHECK(std::abs(std::abs(w) - (l.index + 1) / 5.0) < 1e-14);
    }
    SECTION("unbounded, with holes") {
        const auto& f = diamonds_map();
        const auto c = f.circles();
        const auto g = polar_grid(c, 6, 8);
        for (cplx w : flat(g)) REQUIRE(point_in_circular(w, c));
        CHECK(polar_radius(c) > std::abs(c.centers[0]) + c.radii[0]);
    }
}

TEST_CASE("grid images round trip", "[grids]") {
    for (const ConformalMap* f : {&hexagon_map(), &diamonds_map()}) {
        const double diam = f->domain.diameter();
        const auto src = rect_grid(f->domain, 6, 7);
        const auto img = map_polylines(*f, src, Direction::forward);
        CHECK(img.side == Side::codomain);
        REQUIRE(img.dropped == 0);
        const auto circ = f->circles();
        for (cplx w : flat(img)) REQUIRE(point_in_circular(w, circ));
        const auto back = map_polylines(*f, img, Direction::inverse);
        REQUIRE(back.dropped == 0);
        CHECK(test::max_abs_diff(flat(back), flat(src)) < 1e-6 * diam);

        const auto psrc = polar_grid(circ, 5, 8);
        const auto pimg = map_polylines(*f, psrc, Direction::inverse);
        REQUIRE(pimg.dropped == 0);
        for (cplx z : flat(pimg)) REQUIRE(f->domain.contains(z));
        const auto pback = map_polylines(*f, pimg, Direction::forward);
        CHECK(test::max_abs_diff(flat(pback), flat(psrc)) < 1e-6 * diam);
        CHECK(pimg.boundary.size() == f->size());
    }
}

TEST_CASE("mapping a grid the wrong way is rejected", "[grids]") {
    const auto& f = hexagon_map();
    const auto src = rect_grid(f.domain, 2, 2);
    try {
        (void)map_polylines(f, src, Direction::inverse);
        FAIL("expected bad_argument");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bad_argument);
    }
}

TEST_CASE("svg and jsonl output", "[grids]") {
    const auto& f = hexagon_map();
    const auto src = rect_grid(f.domain, 3, 4);
    const auto img = map_polylines(f, src, Direction::forward);
    const std::string svg = to_svg({src, img});
    CHECK(svg == to_svg({src, img}));

    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    REQUIRE_NOTHROW(boost::property_tree::read_xml(in, tree));
    std::size_t polylines = 0, paths = 0, groups = 0;
    for (const auto& g : tree.get_child("svg")) {
        if (g.first != "g") continue;
        ++groups;
        for (const auto& e : g.second) {
            polylines += e.first == "polyline";
            paths += e.first == "path";
        }
    }
    CHECK(groups == 2);
    CHECK(polylines == src.lines.size() + img.lines.size());
    CHECK(paths == 2);

    std::istringstream lines(to_jsonl({src}));
    std::string line;
    std::size_t count = 0, points = 0;
    while (std::getline(lines, line)) {
        const json j = json::parse(line);
        CHECK(j["side"] == "domain");
        CHECK((j["family"] == "horizontal" || j["family"] == "vertical"));
        points += j["points"].size();
        ++count;
    }
    CHECK(count == src.lines.size());
    CHECK(points == flat(src).size());
}

TEST_CASE("one line each way through a unit square", "[grids]") {
    const auto d = validate_domain({{{1, 0}, {1, 1}, {0, 1}, {0, 0}}}, cplx(0.5, 0.5));
    const auto g = rect_grid(d, 1, 1);
    REQUIRE(g.lines.size() == 2);
    CHECK(count_family(g, Family::horizontal) == 1);
    CHECK(count_family(g, Family::vertical) == 1);
    for (const auto& l : g.lines)
        for (cplx z : l.points)
            CHECK(std::abs((l.family == Family::horizontal ? z.imag() : z.real()) - 0.5) < 1e-15);
}

TEST_CASE("polar grid of the unit disk, with and without a hole", "[grids]") {
    CircularDomain disk{{0.0}, {1.0}, true};
    const auto g = polar_grid(disk, 2, 4);
    CHECK(count_family(g, Family::circle) == 2);
    CHECK(count_family(g, Family::ray) == 4);

    CircularDomain holed{{0.5, 0.0}, {0.2, 1.0}, true};
    const auto h = polar_grid(holed, 2, 4);
    std::size_t pieces = 0;
    for (const auto& l : h.lines) pieces += l.family == Family::ray && l.index == 0;
    CHECK(pieces == 2);  // the positive real axis passes through the hole
    for (cplx w : flat(h)) REQUIRE(point_in_circular(w, holed));
}

TEST_CASE("a nearly round polygon maps circles to near circles", "[grids]") {
    const auto domain = validate_domain({test::regular_polygon(64, 0.0, 1.0)}, cplx(0.0));
    const auto disc = discretize_polygon(domain, 32);
    auto kr = koebe_iterate(disc, domain, {});
    normalize(kr, disc, domain, Normalization::eq1);
    const auto f = build_map(kr, domain, disc);
    const auto img = map_polylines(f, polar_grid(f.circles(), 5, 1), Direction::inverse);
    REQUIRE(img.dropped == 0);
    for (const auto& l : img.lines) {
        if (l.family != Family::circle) continue;
        double lo = 1e300, hi = 0.0;
        for (cplx z : l.points) {
            lo = std::min(lo, std::abs(z));
            hi = std::max(hi, std::abs(z));
        }
        CHECK(hi - lo < 1e-3);
    }
}

TEST_CASE("grid crossings stay orthogonal", "[grids]") {
    const auto& f = hexagon_map();
    const auto g = rect_grid(f.domain, 5, 5);
    // crossings: the vertical line positions against the horizontal ones
    std::vector<double> xs, ys;
    for (const auto& l : g.lines)
        (l.family == Family::vertical ? xs : ys).push_back(l.family == Family::vertical ? l.points[0].real()
                                                                                        : l.points[0].imag());
    std::vector<cplx> z;
    for (double x : xs)
        for (double y : ys)
            if (f.domain.contains({x, y}) && f.domain.boundary_distance({x, y}) > 0.1) z.emplace_back(x, y);
    REQUIRE(z.size() >= 10);
    const double h = 1e-5;
    for (std::size_t k = 0; k < 10; ++k) {
        const std::vector<cplx> p{z[k] + h, z[k] - h, z[k] + cplx(0, h), z[k] - cplx(0, h)};
        const auto w = eval_forward(f, p);
        const cplx tx = w[0] - w[1], ty = w[2] - w[3];
        CHECK(std::abs(std::abs(std::arg(ty / tx)) - pi / 2) < 1e-2);
    }
}

TEST_CASE("an empty set still gives a valid svg", "[grids]") {
    const auto& f = hexagon_map();
    PolylineSet empty;
    empty.boundary = rect_grid(f.domain, 1, 1).boundary;
    std::istringstream in(to_svg({empty}));
    boost::property_tree::ptree tree;
    REQUIRE_NOTHROW(boost::property_tree::read_xml(in, tree));
    std::size_t paths = 0, polylines = 0;
    for (const auto& e : tree.get_child("svg.g")) {
        paths += e.first == "path";
        polylines += e.first == "polyline";
    }
    CHECK(paths == empty.boundary.size());
    CHECK(polylines == 0);
}

TEST_CASE("jsonl coordinates parse back exactly", "[grids]") {
    const auto& f = hexagon_map();
    const auto img = map_polylines(f, rect_grid(f.domain, 3, 3), Direction::forward);
    std::istringstream lines(to_jsonl({img}));
    std::string line;
    for (const auto& l : img.lines) {
        REQUIRE(std::getline(lines, line));
        const json j = json::parse(line);
        CHECK(j["side"] == "codomain");
        CHECK(j["index"] == l.index);
        REQUIRE(j["points"].size() == l.points.size());
        for (std::size_t k = 0; k < l.points.size(); ++k) {
            CHECK(j["points"][k][0].get<double>() == l.points[k].real());
            CHECK(j["points"][k][1].get<double>() == l.points[k].imag());
        }
    }
}
