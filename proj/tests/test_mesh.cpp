#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "eigendesign/error.hpp"
#include "eigendesign/mesh.hpp"

using namespace eigendesign;
using std::numbers::pi;

namespace {

double measure_sum(const Mesh& m) {
    double s = 0.0;
    for (double a : m.element_measure) s += a;
    return s;
}

// Every boundary edge is owned by one element and Ω lies to its left.
void check_boundary_orientation(const Mesh& m) {
    REQUIRE(m.boundary_edges.size() == m.boundary_edge_element.size());
    for (std::size_t f = 0; f < m.boundary_edges.size(); ++f) {
        const auto& be = m.boundary_edges[f];
        const Point c = m.centroid(m.boundary_edge_element[f]);
        const Point& a = m.vertices[be[0]];
        const Point& b = m.vertices[be[1]];
        const double side = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        CHECK(side > 0.0);
    }
}

}  // namespace

TEST_CASE("interval mesh") {
    const auto g = generate_mesh(Shape::interval(1.0), 0.01);
    const Mesh& m = g.mesh;
    CHECK(m.dim == 1);
    CHECK(m.element_count() == 100);
    CHECK(m.domain_measure == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.boundary_vertices == std::vector<int>{0, 100});
    CHECK(m.vertices.back()[0] == 1.0);
    CHECK(m.max_element_diameter() <= 1.5 * 0.01);
    CHECK(g.geometry.curvature_at_vertex.empty());
    CHECK(m.distance_to_boundary({0.3, 0.0}) == doctest::Approx(0.3));
}

TEST_CASE("rectangle mesh") {
    const auto g = generate_mesh(Shape::rectangle(2.0, 1.0), 0.1);
    const Mesh& m = g.mesh;
    CHECK(m.element_count() == 2 * 20 * 10);
    CHECK(std::abs(measure_sum(m) - 2.0) < 1e-12 * 2.0);
    CHECK(m.domain_measure == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.max_element_diameter() <= 1.5 * 0.1);
    CHECK(m.boundary_edges.size() == 60);
    check_boundary_orientation(m);
    CHECK(g.geometry.corners.size() == 4);
    for (int c : g.geometry.corners) CHECK(g.geometry.curvature_at_vertex.count(c) == 0);
    for (const auto& [v, k] : g.geometry.curvature_at_vertex) CHECK(k == 0.0);
    CHECK(g.geometry.max_curvature == 0.0);
}

TEST_CASE("disk mesh") {
    for (double h : {0.2, 0.1, 0.05}) {
        const auto g = generate_mesh(Shape::disk(1.0), h);
        const Mesh& m = g.mesh;
        CHECK(m.max_element_diameter() <= 1.5 * h);
        CHECK(std::abs(measure_sum(m) - m.domain_measure) < 1e-12 * m.domain_measure);
        check_boundary_orientation(m);
        for (int v : m.boundary_vertices) {
            CHECK(std::hypot(m.vertices[v][0], m.vertices[v][1]) == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(g.geometry.curvature_at_vertex.at(v) == doctest::Approx(1.0));
        }
        CHECK(g.geometry.max_curvature == doctest::Approx(1.0));
        CHECK(g.geometry.corners.empty());
    }
}

TEST_CASE("disk area converges to pi monotonically at second order") {
    double prev_err = 0.0;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        const double err = pi - generate_mesh(Shape::disk(1.0), h).mesh.domain_measure;
        CHECK(err > 0.0);
        CHECK(err < 1.5 * h * h);
        if (prev_err > 0.0) {
            CHECK(err < prev_err);
            CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.05));
        }
        prev_err = err;
    }
}

TEST_CASE("ellipse curvature") {
    const auto g = generate_mesh(Shape::ellipse(2.0, 1.0), 0.05);
    const Mesh& m = g.mesh;
    CHECK(m.max_element_diameter() <= 1.5 * 0.05);
    CHECK(g.geometry.max_curvature == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(g.geometry.max_curvature_location[0]) - 2.0) < 1e-12);
    CHECK(std::abs(g.geometry.max_curvature_location[1]) < 1e-12);
    // Finite-difference curvature of the parametrization t -> (2cos t, sin t).
    for (const auto& [v, k] : g.geometry.curvature_at_vertex) {
        const double t = std::atan2(m.vertices[v][1], m.vertices[v][0] / 2.0);
        const double d = 1e-4;
        auto p = [](double s) { return Point{2.0 * std::cos(s), std::sin(s)}; };
        const Point a = p(t - d), b = p(t), c = p(t + d);
        const double dx = (c[0] - a[0]) / (2 * d), dy = (c[1] - a[1]) / (2 * d);
        const double ddx = (c[0] - 2 * b[0] + a[0]) / (d * d), ddy = (c[1] - 2 * b[1] + a[1]) / (d * d);
        const double fd = (dx * ddy - dy * ddx) / std::pow(dx * dx + dy * dy, 1.5);
        CHECK(k == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("discrete boundary geometry estimate") {
    const auto disk = generate_mesh(Shape::disk(2.0), 0.05);
    const BoundaryGeometry est = estimate_boundary_geometry(disk.mesh);
    CHECK(est.corners.empty());
    for (const auto& [v, k] : est.curvature_at_vertex) CHECK(k == doctest::Approx(0.5).epsilon(1e-3));
    const auto rect = generate_mesh(Shape::rectangle(1.0, 1.0), 0.1);
    const BoundaryGeometry r = estimate_boundary_geometry(rect.mesh);
    CHECK(std::set<int>(r.corners.begin(), r.corners.end()) ==
          std::set<int>(rect.geometry.corners.begin(), rect.geometry.corners.end()));
}

TEST_CASE("generate rejects bad parameters") {
    CHECK_THROWS_AS(generate_mesh(Shape::disk(-1.0), 0.1), InvalidArgument);
    CHECK_THROWS_AS(generate_mesh(Shape::rectangle(1.0, 0.0), 0.1), InvalidArgument);
    CHECK_THROWS_AS(generate_mesh(Shape::interval(1.0), 0.3), InvalidArgument);
    CHECK_THROWS_AS(generate_mesh(Shape::interval(1.0), 0.0), InvalidArgument);
}

TEST_CASE("import a single triangle") {
    const Mesh m = import_mesh("# unit right triangle\nmesh 2 3 1\nv 0 0\nv 1 0\nv 0 1  # apex\ne 0 1 2\n");
    CHECK(m.element_count() == 1);
    CHECK(m.element_measure[0] == doctest::Approx(0.5));
    CHECK(m.boundary_edges.size() == 3);
    CHECK(m.boundary_vertices.size() == 3);
}

TEST_CASE("export/import round trip") {
    for (const Shape& s : {Shape::rectangle(1.0, 1.0), Shape::disk(1.0), Shape::ellipse(2.0, 1.0), Shape::interval(0.7)}) {
        const Mesh m = generate_mesh(s, s.kind == Shape::Kind::interval ? 0.05 : 0.2).mesh;
        const std::string text = export_mesh(m);
        const Mesh r = import_mesh(text);
        CHECK(r.vertices == m.vertices);
        CHECK(r.elements == m.elements);
        CHECK(r.element_measure == m.element_measure);
        CHECK(r.boundary_edges == m.boundary_edges);
        CHECK(r.fingerprint() == m.fingerprint());
        CHECK(export_mesh(r) == text);
    }
}

TEST_CASE("import normalizes orientation") {
    const Mesh ref = import_mesh("mesh 2 4 2\nv 0 0\nv 1 0\nv 1 1\nv 0 1\ne 0 1 2\ne 0 2 3\n");
    const Mesh flipped = import_mesh("mesh 2 4 2\nv 0 0\nv 1 0\nv 1 1\nv 0 1\ne 0 2 1\ne 0 2 3\n");
    CHECK(flipped.element_measure == ref.element_measure);
    CHECK(flipped.elements == ref.elements);
    const Mesh seg = import_mesh("mesh 1 3 2\nv 0\nv 0.5\nv 1\ne 1 0\ne 1 2\n");
    CHECK(seg.elements[0] == std::array<int, 3>{0, 1, -1});
    CHECK(seg.domain_measure == doctest::Approx(1.0));
}

TEST_CASE("import errors carry line numbers") {
    auto line_of = [](const std::string& text) {
        try {
            import_mesh(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("mesh 2 3 1\nv 0 0\nv 1 x\nv 0 1\ne 0 1 2\n") == 3);
    CHECK(line_of("# c\nmesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1 5\n") == 6);
    CHECK(line_of("mesh 2 3 1\nv 0 0\nv 1 0\nv 2 0\ne 0 1 2\n") == 5);  // zero area
    CHECK(line_of("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\n") == 4);           // missing element
    CHECK(line_of("hello\n") == 1);
    CHECK(line_of("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\nq 1\n") == 5);
    // Hanging node: vertex 4 sits on the edge 1-2 of the left triangle.
    CHECK(line_of("mesh 2 5 3\nv 0 0\nv 1 0\nv 1 1\nv 2 0\nv 1 0.5\ne 0 1 2\ne 1 3 4\ne 4 3 2\n") > 0);
    // Edge used three times.
    CHECK(line_of("mesh 2 5 3\nv 0 0\nv 1 0\nv 0 1\nv 0 -1\nv 1 1\ne 0 1 2\ne 1 0 3\ne 0 1 4\n") > 0);
    // Overlapping 1D segments.
    CHECK(line_of("mesh 1 3 2\nv 0\nv 1\nv 0.5\ne 0 1\ne 2 1\n") > 0);
}
