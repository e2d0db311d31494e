#include "eigendesign/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "eigendesign/error.hpp"

namespace eigendesign {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double dist(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double segment_distance(const Point& p, const Point& a, const Point& b) {
    const double dx = b[0] - a[0];
    const double dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

[[noreturn]] void fail(const std::vector<int>& lines, int element, const std::string& msg) {
    if (!lines.empty()) throw ParseError(lines[element], msg);
    throw Error("mesh: " + msg);
}

// Uniform bucket grid for proximity queries on vertices.
class VertexGrid {
public:
    VertexGrid(const std::vector<Point>& pts, double cell) : pts_(pts), cell_(cell) {
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) buckets_[key(cell_of(pts[i]))].push_back(i);
    }

    template <class F>
    void visit(const Point& lo, const Point& hi, F&& f) const {
        const auto a = cell_of(lo);
        const auto b = cell_of(hi);
        for (long long i = a.first; i <= b.first; ++i)
            for (long long j = a.second; j <= b.second; ++j) {
                auto it = buckets_.find(key({i, j}));
                if (it == buckets_.end()) continue;
                for (int v : it->second) f(v);
            }
    }

private:
    std::pair<long long, long long> cell_of(const Point& p) const {
        return {static_cast<long long>(std::floor(p[0] / cell_)), static_cast<long long>(std::floor(p[1] / cell_))};
    }
    static std::uint64_t key(std::pair<long long, long long> c) {
        return static_cast<std::uint64_t>(c.first) * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(c.second);
    }

    const std::vector<Point>& pts_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

void finalize_1d(Mesh& m, const std::vector<int>& lines) {
    const int ne = m.element_count();
    std::vector<int> uses(m.vertices.size(), 0);
    m.element_measure.assign(ne, 0.0);
    for (int e = 0; e < ne; ++e) {
        auto& el = m.elements[e];
        el[2] = -1;
        if (m.vertices[el[0]][0] > m.vertices[el[1]][0]) std::swap(el[0], el[1]);
        const double len = m.vertices[el[1]][0] - m.vertices[el[0]][0];
        if (!(len > 0.0)) fail(lines, e, "zero-length element");
        m.element_measure[e] = len;
        ++uses[el[0]];
        ++uses[el[1]];
    }
    std::vector<int> order(ne);
    for (int e = 0; e < ne; ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return m.vertices[m.elements[a][0]][0] < m.vertices[m.elements[b][0]][0];
    });
    for (int k = 0; k + 1 < ne; ++k) {
        if (m.elements[order[k]][1] != m.elements[order[k + 1]][0])
            fail(lines, order[k + 1], "non-conforming mesh: segment does not share a vertex with its left neighbor");
    }
    for (std::size_t v = 0; v < uses.size(); ++v)
        if (uses[v] == 0) throw InvalidArgument("mesh: vertex " + std::to_string(v) + " is not referenced");
    const int first = order.front();
    const int last = order.back();
    m.boundary_edges = {{m.elements[first][0], -1}, {m.elements[last][1], -1}};
    m.boundary_edge_element = {first, last};
    m.boundary_vertices = {m.elements[first][0], m.elements[last][1]};
    std::sort(m.boundary_vertices.begin(), m.boundary_vertices.end());
}

void finalize_2d(Mesh& m, const std::vector<int>& lines) {
    const int ne = m.element_count();
    const int nv = m.vertex_count();
    m.element_measure.assign(ne, 0.0);
    double scale = 0.0;
    for (const auto& p : m.vertices) scale = std::max({scale, std::abs(p[0]), std::abs(p[1])});
    const double area_floor = 1e-14 * std::max(scale * scale, 1e-300);

    std::vector<int> uses(nv, 0);
    for (int e = 0; e < ne; ++e) {
        auto& el = m.elements[e];
        if (el[0] == el[1] || el[1] == el[2] || el[0] == el[2]) fail(lines, e, "zero-area element (repeated vertex)");
        double a = 0.5 * cross(m.vertices[el[0]], m.vertices[el[1]], m.vertices[el[2]]);
        if (a < 0) {
            std::swap(el[1], el[2]);
            a = -a;
        }
        if (!(a > area_floor)) fail(lines, e, "zero-area element");
        m.element_measure[e] = a;
        for (int v : el) ++uses[v];
    }
    for (int v = 0; v < nv; ++v)
        if (uses[v] == 0) throw InvalidArgument("mesh: vertex " + std::to_string(v) + " is not referenced");

    // Each undirected edge: first owner, direction, count.
    struct EdgeUse {
        int element;
        int from;
        int to;
        int count;
    };
    std::unordered_map<std::uint64_t, EdgeUse> edges;
    edges.reserve(3 * static_cast<std::size_t>(ne));
    for (int e = 0; e < ne; ++e) {
        const auto& el = m.elements[e];
        for (int k = 0; k < 3; ++k) {
            const int a = el[k];
            const int b = el[(k + 1) % 3];
            auto [it, inserted] = edges.try_emplace(edge_key(a, b), EdgeUse{e, a, b, 1});
            if (inserted) continue;
            EdgeUse& use = it->second;
            if (++use.count > 2) fail(lines, e, "non-conforming mesh: edge shared by more than two elements");
            if (use.from == a) fail(lines, e, "non-conforming mesh: overlapping elements share an edge with the same orientation");
        }
    }

    m.boundary_edges.clear();
    m.boundary_edge_element.clear();
    std::vector<char> on_boundary(nv, 0);
    for (int e = 0; e < ne; ++e) {
        const auto& el = m.elements[e];
        for (int k = 0; k < 3; ++k) {
            const int a = el[k];
            const int b = el[(k + 1) % 3];
            if (edges.at(edge_key(a, b)).count != 1) continue;
            m.boundary_edges.push_back({a, b});
            m.boundary_edge_element.push_back(e);
            on_boundary[a] = on_boundary[b] = 1;
        }
    }

    // Hanging nodes and duplicate vertices show up as vertices lying on a
    // boundary facet (or on top of another vertex).
    double mean_edge = 0.0;
    for (const auto& be : m.boundary_edges) mean_edge += dist(m.vertices[be[0]], m.vertices[be[1]]);
    mean_edge /= std::max<std::size_t>(1, m.boundary_edges.size());
    VertexGrid grid(m.vertices, std::max(mean_edge, 1e-300));
    const double tol = 1e-10 * std::max(scale, 1e-300);
    for (std::size_t f = 0; f < m.boundary_edges.size(); ++f) {
        const Point& a = m.vertices[m.boundary_edges[f][0]];
        const Point& b = m.vertices[m.boundary_edges[f][1]];
        const Point lo{std::min(a[0], b[0]) - tol, std::min(a[1], b[1]) - tol};
        const Point hi{std::max(a[0], b[0]) + tol, std::max(a[1], b[1]) + tol};
        grid.visit(lo, hi, [&](int v) {
            if (v == m.boundary_edges[f][0] || v == m.boundary_edges[f][1]) return;
            if (segment_distance(m.vertices[v], a, b) <= tol)
                fail(lines, m.boundary_edge_element[f],
                     "non-conforming mesh: vertex " + std::to_string(v) + " lies on an unshared edge");
        });
    }

    for (int v = 0; v < nv; ++v)
        if (on_boundary[v]) m.boundary_vertices.push_back(v);
}

void check_connected(const Mesh& m) {
    const auto nbrs = element_neighbors(m);
    std::vector<char> seen(m.elements.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const int e = stack.back();
        stack.pop_back();
        for (int f : nbrs[e])
            if (!seen[f]) {
                seen[f] = 1;
                ++count;
                stack.push_back(f);
            }
    }
    if (count != m.elements.size()) throw InvalidArgument("mesh: domain is not connected");
}

void finalize(Mesh& m, const std::vector<int>& lines = {}) {
    if (m.dim != 1 && m.dim != 2) throw InvalidArgument("mesh: dim must be 1 or 2");
    if (m.elements.empty()) throw InvalidArgument("mesh: no elements");
    m.boundary_vertices.clear();
    if (m.dim == 1)
        finalize_1d(m, lines);
    else
        finalize_2d(m, lines);
    check_connected(m);
    m.domain_measure = 0.0;
    for (double a : m.element_measure) m.domain_measure += a;
}

Mesh interval_mesh(double length, double h) {
    const int n = static_cast<int>(std::ceil(length / h - 1e-9));
    Mesh m;
    m.dim = 1;
    for (int i = 0; i <= n; ++i) m.vertices.push_back({i == n ? length : length * i / n, 0.0});
    for (int i = 0; i < n; ++i) m.elements.push_back({i, i + 1, -1});
    return m;
}

Mesh rectangle_mesh(double a, double b, double h) {
    const int nx = static_cast<int>(std::ceil(a / h - 1e-9));
    const int ny = static_cast<int>(std::ceil(b / h - 1e-9));
    Mesh m;
    m.dim = 2;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.vertices.push_back({i == nx ? a : a * i / nx, j == ny ? b : b * j / ny});
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
            // Alternating diagonals keep the grid statistically isotropic.
            if ((i + j) % 2 == 0) {
                m.elements.push_back({v00, v10, v11});
                m.elements.push_back({v00, v11, v01});
            } else {
                m.elements.push_back({v00, v10, v01});
                m.elements.push_back({v10, v11, v01});
            }
        }
    return m;
}

// Polar rings: ring i carries 6i vertices at radius i·R/n, neighbouring rings
// are stitched by merging their angle sequences. The stitching diagonals reach
// √3·dr, so dr = h/1.2 keeps every element diameter below 1.5h.
Mesh disk_mesh(double radius, double h) {
    const int n = static_cast<int>(std::ceil(1.2 * radius / h - 1e-9));
    Mesh m;
    m.dim = 2;
    m.vertices.push_back({0.0, 0.0});
    std::vector<int> ring_start{0};
    for (int i = 1; i <= n; ++i) {
        ring_start.push_back(m.vertex_count());
        const int count = 6 * i;
        const double r = (i == n) ? radius : radius * i / n;
        for (int j = 0; j < count; ++j) {
            const double t = kTwoPi * j / count;
            m.vertices.push_back({r * std::cos(t), r * std::sin(t)});
        }
    }
    for (int j = 0; j < 6; ++j) m.elements.push_back({0, 1 + j, 1 + (j + 1) % 6});
    for (int i = 2; i <= n; ++i) {
        const int inner = 6 * (i - 1);
        const int outer = 6 * i;
        const int s_in = ring_start[i - 1];
        const int s_out = ring_start[i];
        int p = 0;
        int q = 0;
        while (p < inner || q < outer) {
            const double next_in = static_cast<double>(p + 1) / inner;
            const double next_out = static_cast<double>(q + 1) / outer;
            if (q < outer && (p >= inner || next_out <= next_in)) {
                m.elements.push_back({s_in + p % inner, s_out + q, s_out + (q + 1) % outer});
                ++q;
            } else {
                m.elements.push_back({s_in + p % inner, s_out + q % outer, s_in + (p + 1) % inner});
                ++p;
            }
        }
    }
    return m;
}

// Lawson flips until every interior edge is locally Delaunay (opposite angles
// sum to at most π), so the P1 stiffness has no positive off-diagonals there.
void delaunay_flip(Mesh& m) {
    auto orient = [&](std::array<int, 3>& el) {
        if (cross(m.vertices[el[0]], m.vertices[el[1]], m.vertices[el[2]]) < 0) std::swap(el[1], el[2]);
    };
    for (auto& el : m.elements) orient(el);
    auto angle_at = [&](int apex, int a, int b) {
        const Point& p = m.vertices[apex];
        const double ux = m.vertices[a][0] - p[0], uy = m.vertices[a][1] - p[1];
        const double vx = m.vertices[b][0] - p[0], vy = m.vertices[b][1] - p[1];
        return std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        std::unordered_map<std::uint64_t, std::pair<int, int>> owner;  // edge -> (element, local index)
        int flips = 0;
        std::vector<char> touched(m.elements.size(), 0);
        for (int e = 0; e < m.element_count(); ++e) {
            for (int k = 0; k < 3; ++k) {
                const auto& el = m.elements[e];
                const int a = el[k], b = el[(k + 1) % 3];
                auto [it, inserted] = owner.try_emplace(edge_key(a, b), e, k);
                if (inserted) continue;
                const int f = it->second.first;
                if (touched[e] || touched[f]) continue;
                const int c = el[(k + 2) % 3];
                const auto& ef = m.elements[f];
                const int kf = it->second.second;
                const int d = ef[(kf + 2) % 3];
                if (angle_at(c, a, b) + angle_at(d, a, b) <= std::numbers::pi + 1e-12) continue;
                // Replace edge a-b by c-d; both new triangles are convex-quad halves.
                std::array<int, 3> t1{c, a, d}, t2{d, b, c};
                if (std::abs(cross(m.vertices[c], m.vertices[a], m.vertices[d])) < 1e-300 ||
                    std::abs(cross(m.vertices[d], m.vertices[b], m.vertices[c])) < 1e-300)
                    continue;
                orient(t1);
                orient(t2);
                m.elements[e] = t1;
                m.elements[f] = t2;
                touched[e] = touched[f] = 1;
                ++flips;
            }
        }
        if (flips == 0) return;
    }
}

// A boundary edge whose opposite angle is obtuse gives a positive stiffness
// entry. Such edges are split at the parametric midpoint on the ellipse
// x = a cos t, y = b sin t, and the interior is re-flipped.
void split_obtuse_boundary(Mesh& m, double a, double b) {
    for (int round = 0; round < 20; ++round) {
        std::unordered_map<std::uint64_t, int> uses;
        for (const auto& el : m.elements)
            for (int k = 0; k < 3; ++k) ++uses[edge_key(el[k], el[(k + 1) % 3])];
        const int ne = m.element_count();
        int splits = 0;
        for (int e = 0; e < ne; ++e) {
            for (int k = 0; k < 3; ++k) {
                const auto el = m.elements[e];
                const int p = el[k], q = el[(k + 1) % 3], c = el[(k + 2) % 3];
                if (uses[edge_key(p, q)] != 1) continue;
                const Point& vp = m.vertices[p];
                const Point& vq = m.vertices[q];
                const Point& vc = m.vertices[c];
                const double dot = (vp[0] - vc[0]) * (vq[0] - vc[0]) + (vp[1] - vc[1]) * (vq[1] - vc[1]);
                if (dot >= 0.0) continue;
                const double tp = std::atan2(vp[1] / b, vp[0] / a);
                double tq = std::atan2(vq[1] / b, vq[0] / a);
                if (tq < tp - std::numbers::pi) tq += 2 * std::numbers::pi;
                if (tq > tp + std::numbers::pi) tq -= 2 * std::numbers::pi;
                const double t = 0.5 * (tp + tq);
                const int v = m.vertex_count();
                m.vertices.push_back({a * std::cos(t), b * std::sin(t)});
                m.elements[e] = {p, v, c};
                m.elements.push_back({v, q, c});
                ++splits;
                break;
            }
        }
        if (splits == 0) return;
        delaunay_flip(m);
    }
}

}  // namespace

std::uint64_t Mesh::fingerprint() const {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    auto mix = [&hash](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= bytes[i];
            hash *= 0x100000001b3ull;
        }
    };
    mix(&dim, sizeof dim);
    for (const auto& p : vertices) mix(p.data(), sizeof(double) * 2);
    for (const auto& e : elements) mix(e.data(), sizeof(int) * 3);
    return hash;
}

Point Mesh::centroid(int element) const {
    const auto& el = elements[element];
    Point c{0.0, 0.0};
    const int k = nodes_per_element();
    for (int i = 0; i < k; ++i) {
        c[0] += vertices[el[i]][0] / k;
        c[1] += vertices[el[i]][1] / k;
    }
    return c;
}

double Mesh::diameter() const {
    Point lo = vertices.front(), hi = vertices.front();
    for (const auto& p : vertices)
        for (int k = 0; k < 2; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    return dist(lo, hi);
}

double Mesh::max_element_diameter() const {
    double d = 0.0;
    for (const auto& el : elements) {
        d = std::max(d, dist(vertices[el[0]], vertices[el[1]]));
        if (dim == 2) d = std::max({d, dist(vertices[el[1]], vertices[el[2]]), dist(vertices[el[2]], vertices[el[0]])});
    }
    return d;
}

double Mesh::boundary_edge_length(int facet) const {
    if (dim == 1) return 1.0;
    const auto& be = boundary_edges[facet];
    return dist(vertices[be[0]], vertices[be[1]]);
}

double Mesh::distance_to_boundary(const Point& p) const {
    double d = std::numeric_limits<double>::infinity();
    if (dim == 1) {
        for (int v : boundary_vertices) d = std::min(d, std::abs(p[0] - vertices[v][0]));
        return d;
    }
    for (const auto& be : boundary_edges) d = std::min(d, segment_distance(p, vertices[be[0]], vertices[be[1]]));
    return d;
}

bool Mesh::is_boundary_vertex(int v) const {
    return std::binary_search(boundary_vertices.begin(), boundary_vertices.end(), v);
}

double Shape::measure() const {
    switch (kind) {
        case Kind::interval: return a;
        case Kind::rectangle: return a * b;
        case Kind::disk: return std::numbers::pi * a * a;
        case Kind::ellipse: return std::numbers::pi * a * b;
    }
    return 0.0;
}

double Shape::min_dimension() const { return kind == Kind::interval || kind == Kind::disk ? a : std::min(a, b); }

void Shape::validate() const {
    const bool two = kind == Kind::rectangle || kind == Kind::ellipse;
    if (!(a > 0.0) || !std::isfinite(a) || (two && (!(b > 0.0) || !std::isfinite(b))))
        throw InvalidArgument("mesh: degenerate shape parameters for " + name());
}

std::string Shape::name() const {
    switch (kind) {
        case Kind::interval: return "interval";
        case Kind::rectangle: return "rectangle";
        case Kind::disk: return "disk";
        case Kind::ellipse: return "ellipse";
    }
    return "?";
}

GeneratedMesh generate_mesh(const Shape& shape, double h) {
    shape.validate();
    if (!(h > 0.0) || !(h < shape.min_dimension() / 4))
        throw InvalidArgument("mesh: h must satisfy 0 < h < min dimension / 4");
    GeneratedMesh out;
    Mesh& m = out.mesh;
    BoundaryGeometry& g = out.geometry;
    switch (shape.kind) {
        case Shape::Kind::interval:
            m = interval_mesh(shape.a, h);
            break;
        case Shape::Kind::rectangle:
            m = rectangle_mesh(shape.a, shape.b, h);
            break;
        case Shape::Kind::disk:
            m = disk_mesh(shape.a, h);
            delaunay_flip(m);
            split_obtuse_boundary(m, shape.a, shape.a);
            break;
        case Shape::Kind::ellipse: {
            const double big = std::max(shape.a, shape.b);
            m = disk_mesh(1.0, h / big);
            for (auto& p : m.vertices) {
                p[0] *= shape.a;
                p[1] *= shape.b;
            }
            delaunay_flip(m);
            split_obtuse_boundary(m, shape.a, shape.b);
            break;
        }
    }
    finalize(m);

    if (shape.dim() == 1) return out;
    for (int v : m.boundary_vertices) {
        const Point& p = m.vertices[v];
        double k = 0.0;
        if (shape.kind == Shape::Kind::rectangle) {
            const bool xs = p[0] == 0.0 || p[0] == shape.a;
            const bool ys = p[1] == 0.0 || p[1] == shape.b;
            if (xs && ys) {
                g.corners.push_back(v);
                continue;
            }
        } else if (shape.kind == Shape::Kind::disk) {
            k = 1.0 / shape.a;
        } else {
            const double t = std::atan2(p[1] / shape.b, p[0] / shape.a);
            const double s = std::sin(t), c = std::cos(t);
            k = shape.a * shape.b / std::pow(shape.a * shape.a * s * s + shape.b * shape.b * c * c, 1.5);
        }
        g.curvature_at_vertex[v] = k;
        if (g.max_curvature_vertex < 0 || k > g.max_curvature) {
            g.max_curvature = k;
            g.max_curvature_vertex = v;
            g.max_curvature_location = p;
        }
    }
    return out;
}

Mesh import_mesh(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_header = false;
    int nv = 0, ne = 0;
    Mesh m;
    std::vector<int> element_lines;

    auto parse_double = [&](const std::string& tok) {
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
            throw ParseError(lineno, "bad number '" + tok + "'");
        return v;
    };
    auto parse_int = [&](const std::string& tok) {
        int v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw ParseError(lineno, "bad integer '" + tok + "'");
        return v;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        if (!have_header) {
            if (tok[0] != "mesh" || tok.size() != 4) throw ParseError(lineno, "expected 'mesh <dim> <nv> <ne>'");
            m.dim = parse_int(tok[1]);
            nv = parse_int(tok[2]);
            ne = parse_int(tok[3]);
            if (m.dim != 1 && m.dim != 2) throw ParseError(lineno, "dim must be 1 or 2");
            if (nv <= 0 || ne <= 0) throw ParseError(lineno, "counts must be positive");
            have_header = true;
            continue;
        }
        if (tok[0] == "v") {
            if (!m.elements.empty()) throw ParseError(lineno, "vertex after elements");
            if (m.vertex_count() == nv) throw ParseError(lineno, "more vertices than declared");
            if (static_cast<int>(tok.size()) != 1 + m.dim) throw ParseError(lineno, "vertex needs " + std::to_string(m.dim) + " coordinates");
            m.vertices.push_back({parse_double(tok[1]), m.dim == 2 ? parse_double(tok[2]) : 0.0});
        } else if (tok[0] == "e") {
            if (m.vertex_count() != nv) throw ParseError(lineno, "element before all vertices were given");
            if (m.element_count() == ne) throw ParseError(lineno, "more elements than declared");
            if (static_cast<int>(tok.size()) != 2 + m.dim) throw ParseError(lineno, "element needs " + std::to_string(m.dim + 1) + " indices");
            std::array<int, 3> el{-1, -1, -1};
            for (int k = 0; k <= m.dim; ++k) {
                el[k] = parse_int(tok[1 + k]);
                if (el[k] < 0 || el[k] >= nv) throw ParseError(lineno, "vertex index out of range");
            }
            if (m.dim == 1 && el[0] == el[1]) throw ParseError(lineno, "zero-length element");
            m.elements.push_back(el);
            element_lines.push_back(lineno);
        } else {
            throw ParseError(lineno, "unknown record '" + tok[0] + "'");
        }
    }
    if (!have_header) throw ParseError(lineno, "missing header");
    if (m.vertex_count() != nv || m.element_count() != ne)
        throw ParseError(lineno, "expected " + std::to_string(nv) + " vertices and " + std::to_string(ne) + " elements");
    finalize(m, element_lines);
    return m;
}

std::string export_mesh(const Mesh& m) {
    std::string out = "mesh " + std::to_string(m.dim) + " " + std::to_string(m.vertex_count()) + " " +
                      std::to_string(m.element_count()) + "\n";
    char buf[96];
    for (const auto& p : m.vertices) {
        if (m.dim == 1)
            std::snprintf(buf, sizeof buf, "v %.17g\n", p[0]);
        else
            std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p[0], p[1]);
        out += buf;
    }
    for (const auto& e : m.elements) {
        if (m.dim == 1)
            std::snprintf(buf, sizeof buf, "e %d %d\n", e[0], e[1]);
        else
            std::snprintf(buf, sizeof buf, "e %d %d %d\n", e[0], e[1], e[2]);
        out += buf;
    }
    return out;
}

BoundaryGeometry estimate_boundary_geometry(const Mesh& m) {
    BoundaryGeometry g;
    if (m.dim == 1) return g;
    std::unordered_map<int, int> next, prev;
    for (const auto& be : m.boundary_edges) {
        next[be[0]] = be[1];
        prev[be[1]] = be[0];
    }
    const double corner_angle = std::numbers::pi / 6;
    for (int v : m.boundary_vertices) {
        const Point& a = m.vertices[prev.at(v)];
        const Point& p = m.vertices[v];
        const Point& b = m.vertices[next.at(v)];
        const double c = cross(a, p, b);
        const double dot = (p[0] - a[0]) * (b[0] - p[0]) + (p[1] - a[1]) * (b[1] - p[1]);
        if (std::abs(std::atan2(c, dot)) > corner_angle) {
            g.corners.push_back(v);
            continue;
        }
        const double k = 2.0 * c / (dist(a, p) * dist(p, b) * dist(a, b));
        g.curvature_at_vertex[v] = k;
        if (g.max_curvature_vertex < 0 || k > g.max_curvature) {
            g.max_curvature = k;
            g.max_curvature_vertex = v;
            g.max_curvature_location = p;
        }
    }
    return g;
}

std::vector<std::vector<int>> element_neighbors(const Mesh& m) {
    std::vector<std::vector<int>> out(m.elements.size());
    std::unordered_map<std::uint64_t, int> first_owner;
    for (int e = 0; e < m.element_count(); ++e) {
        const auto& el = m.elements[e];
        const int facets = m.dim == 1 ? 2 : 3;
        for (int k = 0; k < facets; ++k) {
            const std::uint64_t key = m.dim == 1 ? static_cast<std::uint64_t>(el[k])
                                                 : edge_key(el[k], el[(k + 1) % 3]);
            auto [it, inserted] = first_owner.try_emplace(key, e);
            if (!inserted) {
                out[e].push_back(it->second);
                out[it->second].push_back(e);
            }
        }
    }
    return out;
}

}  // namespace eigendesign
