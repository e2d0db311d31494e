#pragma once

// Segment (1D) and triangle (2D) meshes of the design domain Ω.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eigendesign {

using Point = std::array<double, 2>;  // y = 0 for 1D meshes

struct Mesh {
    int dim = 1;
    std::vector<Point> vertices;
    // Vertex indices; the third entry is -1 for segments. Triangles are
    // counterclockwise, segments are ordered left to right.
    std::vector<std::array<int, 3>> elements;
    std::vector<double> element_measure;
    std::vector<int> boundary_vertices;  // sorted
    // Boundary facets oriented with Ω on the left. In 1D a facet is a single
    // vertex stored as {v, -1}.
    std::vector<std::array<int, 2>> boundary_edges;
    std::vector<int> boundary_edge_element;  // element owning each facet
    double domain_measure = 0.0;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    int nodes_per_element() const { return dim + 1; }

    /// Stable 64-bit hash of (dim, vertices, elements); used to tie designs to meshes.
    std::uint64_t fingerprint() const;

    Point centroid(int element) const;
    double diameter() const;  // of the vertex bounding box
    double max_element_diameter() const;
    /// Facet length (2D) or 1 (1D point facet).
    double boundary_edge_length(int facet) const;
    /// Euclidean distance from p to the discrete boundary.
    double distance_to_boundary(const Point& p) const;
    bool is_boundary_vertex(int v) const;
};

struct Shape {
    enum class Kind { interval, rectangle, disk, ellipse };
    Kind kind = Kind::interval;
    double a = 1.0;  // length, width, radius or x semi-axis
    double b = 1.0;  // height or y semi-axis (unused for interval, disk)

    static Shape interval(double length) { return {Kind::interval, length, 0.0}; }
    static Shape rectangle(double width, double height) { return {Kind::rectangle, width, height}; }
    static Shape disk(double radius) { return {Kind::disk, radius, radius}; }
    static Shape ellipse(double semi_x, double semi_y) { return {Kind::ellipse, semi_x, semi_y}; }

    int dim() const { return kind == Kind::interval ? 1 : 2; }
    double measure() const;  // analytic |Ω|
    double min_dimension() const;
    void validate() const;
    std::string name() const;
};

struct BoundaryGeometry {
    std::map<int, double> curvature_at_vertex;  // positive on convex parts
    std::vector<int> corners;                   // vertices without a curvature value
    double max_curvature = 0.0;                 // Ĥ
    int max_curvature_vertex = -1;
    Point max_curvature_location{0.0, 0.0};
};

struct GeneratedMesh {
    Mesh mesh;
    BoundaryGeometry geometry;
};

/// Structured meshes with boundary vertices exactly on the analytic boundary.
/// Requires 0 < h < min dimension / 4; max element diameter is at most 1.5 h.
GeneratedMesh generate_mesh(const Shape& shape, double h);

/// Reads the line format `mesh <dim> <nv> <ne>`, `v x [y]`, `e i j [k]` with
/// '#' comments. Orientation is normalized; measures and boundary are rebuilt.
Mesh import_mesh(const std::string& text);

/// Inverse of import_mesh, 17 significant digits.
std::string export_mesh(const Mesh& mesh);

/// Curvature estimated from consecutive boundary vertices (circumscribed circle).
/// Vertices turning by more than 30 degrees are treated as corners.
BoundaryGeometry estimate_boundary_geometry(const Mesh& mesh);

/// Element pairs sharing a facet (edge in 2D, vertex in 1D), per element.
std::vector<std::vector<int>> element_neighbors(const Mesh& mesh);

}  // namespace eigendesign
