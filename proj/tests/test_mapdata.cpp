#include <catch_amalgamated.hpp>

#include <plgcir/koebe.hpp>
#include <plgcir/mapdata.hpp>

#include "test_support.hpp"

#include <cstdio>
#include <filesystem>
#include <random>

using namespace plgcir;

namespace {

ConformalMap make_map(std::vector<Polygon> polys, std::optional<cplx> alpha, int n, Normalization norm,
                      std::optional<std::size_t> beta = {}) {
    const auto domain = validate_domain(std::move(polys), alpha, beta);
    const auto disc = discretize_polygon(domain, n);
    auto kr = koebe_iterate(disc, domain, {});
    normalize(kr, disc, domain, norm);
    return build_map(kr, domain, disc);
}

const ConformalMap& square_map() {
    static const ConformalMap f =
        make_map({{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}}, cplx(0.0), 64, Normalization::eq1);
    return f;
}

const ConformalMap& square_exterior_map() {
    static const ConformalMap f = make_map({{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}}, std::nullopt, 64, Normalization::eq3);
    return f;
}

const ConformalMap& hexagon_map() {
    static const ConformalMap f = make_map(test::hexagon_polygons(), cplx(0.0), 64, Normalization::eq2, 5);
    return f;
}

std::vector<cplx> ring(std::size_t count, double radius) {
    std::vector<cplx> z(count);
    for (std::size_t k = 0; k < count; ++k) z[k] = std::polar(radius, two_pi * k / count);
    return z;
}

std::vector<cplx> random_points_in(const PolygonalDomain& d, std::size_t count, double lo, double hi,
                                   std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<cplx> out;
    while (out.size() < count) {
        const cplx z(u(gen), u(gen));
        if (d.contains(z) && d.boundary_distance(z) > 0.05) out.push_back(z);
    }
    return out;
}

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST_CASE("the square map respects the square's symmetries", "[mapdata]") {
    const auto& f = square_map();
    const auto z = random_points_in(f.domain, 40, -1.0, 1.0, 7);
    std::vector<cplx> rot(z.size()), conj(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        rot[k] = cplx(0.0, 1.0) * z[k];
        conj[k] = std::conj(z[k]);
    }
    const auto w = eval_forward(f, z), wr = eval_forward(f, rot), wc = eval_forward(f, conj);
    for (std::size_t k = 0; k < z.size(); ++k) {
        CHECK(std::abs(wr[k] - cplx(0.0, 1.0) * w[k]) < 1e-9);
        CHECK(std::abs(wc[k] - std::conj(w[k])) < 1e-9);
        CHECK(std::abs(w[k]) < 1.0);
    }
    const std::vector<cplx> a{0.0};
    CHECK(std::abs(eval_forward(f, a)[0]) < 1e-9);
    const cplx d = deriv_forward(f, a)[0];
    CHECK(d.real() > 0.0);
    CHECK(std::abs(d.imag()) < 1e-9);
    // corners land a quarter turn apart on the unit circle
    for (cplx v : f.imgver[0]) CHECK(std::abs(std::pow(v, 4) + 1.0) < 1e-8);
}

TEST_CASE("forward and inverse maps round trip", "[mapdata]") {
    const auto& f = hexagon_map();
    const auto z = ring(200, 0.6);
    const auto back = eval_inverse(f, eval_forward(f, z));
    CHECK(test::max_abs_diff(back, z) < 1e-7);
    const auto w = ring(200, 0.9);
    const auto fw = eval_forward(f, eval_inverse(f, w));
    CHECK(test::max_abs_diff(fw, w) < 1e-7);

    const auto& g = square_exterior_map();
    const auto zz = ring(100, 2.0);
    CHECK(test::max_abs_diff(eval_inverse(g, eval_forward(g, zz)), zz) < 1e-8);
}

TEST_CASE("derivatives agree with central differences", "[mapdata]") {
    for (const ConformalMap* f : {&square_map(), &hexagon_map()}) {
        const auto z = random_points_in(f->domain, 20, -1.0, 1.5, 11);
        const double h = 1e-4;
        std::vector<cplx> zp, zm;
        for (cplx q : z) {
            zp.push_back(q + h);
            zm.push_back(q - h);
        }
        const auto fp = eval_forward(*f, zp), fm = eval_forward(*f, zm), df = deriv_forward(*f, z);
        for (std::size_t k = 0; k < z.size(); ++k) {
            const cplx fd = (fp[k] - fm[k]) / (2.0 * h);
            CHECK(std::abs(fd - df[k]) / std::abs(df[k]) < 1e-5);
        }
        const auto w = eval_forward(*f, z);
        const auto di = deriv_inverse(*f, w);
        for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(di[k] * df[k] - 1.0) < 1e-6);
    }
}

TEST_CASE("the exterior map is the identity at infinity", "[mapdata]") {
    const auto& f = square_exterior_map();
    const double diam = f.domain.diameter();
    const auto z = ring(64, 10.0 * diam);
    const auto w = eval_forward(f, z);
    for (std::size_t k = 0; k < z.size(); ++k) CHECK(std::abs(w[k] - z[k]) <= 1e-3 * diam);
    // f(z) - z decays like c/z with no constant term
    const auto far = ring(8, 1e4);
    const auto wf = eval_forward(f, far);
    for (std::size_t k = 0; k < far.size(); ++k) CHECK(std::abs(wf[k] - far[k]) < 1e-6);
}

TEST_CASE("points outside or near the boundary are flagged", "[mapdata]") {
    const auto& f = hexagon_map();
    const std::vector<cplx> z{{0.0, 0.0}, {1.2, 0.5}, {-1.0, 0.0}, {std::nan(""), 0.0}, {-0.9999, 0.3}};
    const Evaluation ev = evaluate(f, z, Direction::forward, {0.0, true});
    CHECK(is_finite(ev.value[0]));
    CHECK(ev.outside == std::vector<std::size_t>{1, 2, 3});
    for (std::size_t q : ev.outside) {
        CHECK(std::isnan(ev.value[q].real()));
        CHECK(std::isnan(ev.deriv[q].real()));
    }
    CHECK(ev.near == std::vector<std::size_t>{4});
    CHECK(std::abs(ev.value[4]) < 1.0);

    const std::vector<cplx> w{{0.5, 0.0}, {1.5, 0.0}};
    const Evaluation iv = evaluate(f, w, Direction::inverse, {});
    CHECK(iv.outside == std::vector<std::size_t>{1});
    CHECK(f.domain.contains(iv.value[0]));
}

TEST_CASE("map files round trip exactly", "[mapdata]") {
    const auto& f = hexagon_map();
    const std::string path = temp_path("plgcir_test_map.json");
    save_map(f, path);
    const ConformalMap g = load_map(path);
    CHECK(map_to_string(g) == map_to_string(f));
    CHECK(g.et == f.et);
    CHECK(g.zetp == f.zetp);
    CHECK(g.rad == f.rad);
    const auto z = ring(50, 0.5);
    CHECK(eval_forward(g, z) == eval_forward(f, z));
    std::remove(path.c_str());
}

TEST_CASE("malformed map files are rejected", "[mapdata]") {
    const json good = map_to_json(square_map());
    auto code = [](const json& j) {
        try {
            (void)map_from_json(j);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::io;  // sentinel
    };
    json j = good;
    j["version"] = 99;
    CHECK(code(j) == ErrorCode::version_mismatch);
    j = good;
    j.erase("zet");
    CHECK(code(j) == ErrorCode::schema);
    j = good;
    j["et"][0].erase(0);
    CHECK(code(j) == ErrorCode::schema);
    j = good;
    j["rad"][0] = -1.0;
    CHECK(code(j) == ErrorCode::schema);
    j = good;
    j["normalization"] = "eq9";
    CHECK(code(j) == ErrorCode::schema);
    CHECK_NOTHROW(map_from_json(good));

    try {
        (void)load_map(temp_path("plgcir_no_such_file.json"));
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::io);
    }
}

// Exterior of a rhombus with half-diagonals p (x) and q > p (y). Schwarz-
// Christoffel gives z = cap (w + (a - b)/w + ...) with vertex exponents
// a = 1 - theta/pi, b = theta/pi (theta the angle at the long-axis tips) and
// side = cap * B((a + 1)/2, (b + 1)/2), so f(z) = z + c/z + ... with
// c = (a - b) cap^2 for the vertical long axis.
TEST_CASE("exterior of a rhombus against Schwarz-Christoffel", "[mapdata]") {
    const double p = 0.2, q = 0.4;
    const auto f = make_map({{{0, -q}, {-p, 0}, {0, q}, {p, 0}}}, std::nullopt, 64, Normalization::eq3);
    const double theta = 2.0 * std::atan(p / q), a = 1.0 - theta / pi, b = theta / pi;
    const double beta = std::tgamma((a + 1) / 2) * std::tgamma((b + 1) / 2) / std::tgamma(1.5);
    const double cap = std::hypot(p, q) / beta;
    const double c = (a - b) * cap * cap;
    CHECK(std::abs(f.rad[0] - cap) < 1e-9);
    CHECK(std::abs(f.cent[0]) < 1e-9);
    // mean of (f(z) - z) z over a large circle picks out c
    const auto z = ring(64, 40.0);
    const auto w = eval_forward(f, z);
    cplx est = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) est += (w[k] - z[k]) * z[k] / 64.0;
    CHECK(std::abs(est - c) < 1e-8);
}
