#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace bcstab {

using Point2 = Eigen::Vector2d;

/// Conforming triangulation of a polygonal approximation of the unit disk.
///
/// Boundary vertices are stored in counterclockwise order starting at (1, 0); boundary edge k
/// joins boundary vertex k to boundary vertex k+1 (cyclically). Instances are immutable once
/// built and are shared through std::shared_ptr<const Mesh>.
class Mesh {
public:
    Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<int> boundary_vertices);

    [[nodiscard]] int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }
    [[nodiscard]] int num_boundary() const noexcept { return static_cast<int>(boundary_vertices_.size()); }

    [[nodiscard]] const std::vector<Point2>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
    /// Vertex ids of the boundary cycle, counterclockwise.
    [[nodiscard]] const std::vector<int>& boundary_vertices() const noexcept { return boundary_vertices_; }
    [[nodiscard]] const std::vector<std::array<int, 2>>& boundary_edges() const noexcept { return boundary_edges_; }
    [[nodiscard]] const std::vector<Point2>& edge_normals() const noexcept { return edge_normals_; }
    /// Angle in [0, 2pi) of each boundary vertex, indexed like boundary_vertices().
    [[nodiscard]] const std::vector<double>& arc_parameter() const noexcept { return arc_parameter_; }
    /// Boundary index of a vertex, or -1 for interior vertices.
    [[nodiscard]] int boundary_index(int vertex) const { return boundary_index_[vertex]; }

    [[nodiscard]] double triangle_area(int t) const;
    [[nodiscard]] double area() const;
    [[nodiscard]] double perimeter() const;
    [[nodiscard]] double edge_length(int boundary_edge) const;
    [[nodiscard]] double max_edge_length() const;
    [[nodiscard]] int num_edges() const;

    /// FNV-1a hash of coordinates and connectivity, used to tag point files.
    [[nodiscard]] std::uint64_t hash() const;
    [[nodiscard]] std::string hash_hex() const;

    /// Throws std::runtime_error naming the first violated mesh invariant.
    void validate() const;

    /// Plain-text dump: counts line, then "v x y", "t a b c" and "b i j" records (0-based).
    void write_dump(std::ostream& os) const;

private:
    std::vector<Point2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<int> boundary_vertices_;
    std::vector<std::array<int, 2>> boundary_edges_;
    std::vector<Point2> edge_normals_;
    std::vector<double> arc_parameter_;
    std::vector<int> boundary_index_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Ring-structured triangulation of the unit disk with n_boundary * 2^refinement boundary edges.
///
/// The base mesh places concentric rings of vertices and stitches neighbouring rings; each
/// refinement step splits every triangle into four and projects new boundary midpoints onto
/// the circle. For even n_boundary the mesh is mirror-symmetric about the x1 axis.
[[nodiscard]] MeshPtr make_disk_mesh(int n_boundary, int refinement = 0);

struct BoundaryQuadPoint {
    Point2 point;
    double weight;
    int edge;
};

/// Two-point Gauss rule on every boundary edge.
[[nodiscard]] std::vector<BoundaryQuadPoint> boundary_quadrature(const Mesh& mesh);

}  // namespace bcstab
