#include "bcstab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace bcstab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double signed_area(const Point2& a, const Point2& b, const Point2& c)
{
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double angle_of(const Point2& p)
{
    double a = std::atan2(p.y(), p.x());
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a -= kTwoPi;
    return a;
}

std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct Ring {
    std::vector<int> ids;
    std::vector<double> angles;
};

class TriangleSink {
public:
    explicit TriangleSink(const std::vector<Point2>& v) : v_(v) {}

    void add(int a, int b, int c)
    {
        if (signed_area(v_[a], v_[b], v_[c]) < 0.0) std::swap(b, c);
        tris.push_back({a, b, c});
    }

    std::vector<std::array<int, 3>> tris;

private:
    const std::vector<Point2>& v_;
};

// Stitches the annulus between two rings over the index windows [0, inner_end] x [0, outer_end]
// (indices taken cyclically), always advancing along the ring whose next vertex has the
// smaller angle.
void stitch(const Ring& inner, const Ring& outer, int inner_end, int outer_end, TriangleSink& sink)
{
    const int p = static_cast<int>(inner.ids.size());
    const int q = static_cast<int>(outer.ids.size());
    auto ang = [](const Ring& r, int i) {
        const int n = static_cast<int>(r.ids.size());
        return r.angles[i % n] + kTwoPi * (i / n);
    };
    int i = 0;
    int j = 0;
    while (i < inner_end || j < outer_end) {
        const bool advance_inner =
            j == outer_end || (i < inner_end && ang(inner, i + 1) < ang(outer, j + 1));
        if (advance_inner) {
            sink.add(inner.ids[i % p], inner.ids[(i + 1) % p], outer.ids[j % q]);
            ++i;
        } else {
            sink.add(inner.ids[i % p], outer.ids[(j + 1) % q], outer.ids[j % q]);
            ++j;
        }
    }
}

MeshPtr base_disk_mesh(int n)
{
    const int rings = std::max(1, static_cast<int>(std::lround(n / kTwoPi)));
    const bool even = n % 2 == 0;

    std::vector<Point2> verts;
    verts.emplace_back(0.0, 0.0);

    std::vector<Ring> ring_list;
    for (int k = 1; k <= rings; ++k) {
        int count = n;
        if (k < rings) {
            count = static_cast<int>(std::lround(static_cast<double>(n) * k / rings));
            if (even && count % 2 != 0) ++count;
            count = std::max(count, 6);
        }
        const double radius = static_cast<double>(k) / rings;
        Ring ring;
        for (int j = 0; j < count; ++j) {
            const double a = kTwoPi * j / count;
            ring.ids.push_back(static_cast<int>(verts.size()));
            ring.angles.push_back(a);
            if (k == rings) verts.emplace_back(std::cos(a), std::sin(a));
            else verts.emplace_back(radius * std::cos(a), radius * std::sin(a));
        }
        ring_list.push_back(std::move(ring));
    }

    TriangleSink sink(verts);
    const Ring& first = ring_list.front();
    for (std::size_t j = 0; j < first.ids.size(); ++j) {
        sink.add(0, first.ids[j], first.ids[(j + 1) % first.ids.size()]);
    }

    for (std::size_t k = 0; k + 1 < ring_list.size(); ++k) {
        const Ring& inner = ring_list[k];
        const Ring& outer = ring_list[k + 1];
        const int p = static_cast<int>(inner.ids.size());
        const int q = static_cast<int>(outer.ids.size());
        if (even) {
            // Stitch the upper half, then mirror it across the x1 axis.
            const std::size_t before = sink.tris.size();
            stitch(inner, outer, p / 2, q / 2, sink);
            const std::size_t after = sink.tris.size();
            auto mirror = [&](int id) {
                // Ring vertices at angle a and 2pi - a are paired by index j <-> count - j.
                for (const Ring* r : {&inner, &outer}) {
                    const int cnt = static_cast<int>(r->ids.size());
                    const int j = id - r->ids.front();
                    if (j >= 0 && j < cnt && r->ids[j] == id) return r->ids[(cnt - j) % cnt];
                }
                throw std::logic_error("mirror: vertex not on ring");
            };
            for (std::size_t t = before; t < after; ++t) {
                const auto tri = sink.tris[t];
                sink.add(mirror(tri[0]), mirror(tri[1]), mirror(tri[2]));
            }
        } else {
            stitch(inner, outer, p, q, sink);
        }
    }

    std::vector<int> boundary = ring_list.back().ids;
    return std::make_shared<const Mesh>(std::move(verts), std::move(sink.tris), std::move(boundary));
}

MeshPtr refine(const Mesh& coarse)
{
    std::vector<Point2> verts = coarse.vertices();
    std::map<std::uint64_t, int> midpoint;

    std::map<std::uint64_t, bool> is_boundary;
    for (const auto& e : coarse.boundary_edges()) is_boundary[edge_key(e[0], e[1])] = true;

    auto mid = [&](int a, int b) {
        const auto key = edge_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Point2 m = 0.5 * (verts[a] + verts[b]);
        if (is_boundary.count(key) != 0) m /= m.norm();
        const int id = static_cast<int>(verts.size());
        verts.push_back(m);
        midpoint.emplace(key, id);
        return id;
    };

    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * coarse.triangles().size());
    for (const auto& t : coarse.triangles()) {
        const int ab = mid(t[0], t[1]);
        const int bc = mid(t[1], t[2]);
        const int ca = mid(t[2], t[0]);
        tris.push_back({t[0], ab, ca});
        tris.push_back({ab, t[1], bc});
        tris.push_back({ca, bc, t[2]});
        tris.push_back({ab, bc, ca});
    }

    std::vector<int> boundary;
    boundary.reserve(2 * coarse.boundary_vertices().size());
    for (const auto& e : coarse.boundary_edges()) {
        boundary.push_back(e[0]);
        boundary.push_back(midpoint.at(edge_key(e[0], e[1])));
    }
    return std::make_shared<const Mesh>(std::move(verts), std::move(tris), std::move(boundary));
}

}  // namespace

Mesh::Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<int> boundary_vertices)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_vertices_(std::move(boundary_vertices))
{
    const int nb = num_boundary();
    if (nb < 3) throw std::invalid_argument("Mesh: boundary needs at least 3 vertices");
    boundary_index_.assign(vertices_.size(), -1);
    boundary_edges_.reserve(nb);
    edge_normals_.reserve(nb);
    arc_parameter_.reserve(nb);
    for (int k = 0; k < nb; ++k) {
        const int a = boundary_vertices_[k];
        const int b = boundary_vertices_[(k + 1) % nb];
        boundary_index_.at(a) = k;
        boundary_edges_.push_back({a, b});
        const Point2 d = vertices_[b] - vertices_[a];
        edge_normals_.emplace_back(Point2(d.y(), -d.x()).normalized());
        arc_parameter_.push_back(angle_of(vertices_[a]));
    }
}

double Mesh::triangle_area(int t) const
{
    const auto& tri = triangles_[t];
    return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Mesh::area() const
{
    double a = 0.0;
    for (int t = 0; t < num_triangles(); ++t) a += triangle_area(t);
    return a;
}

double Mesh::edge_length(int k) const
{
    const auto& e = boundary_edges_[k];
    return (vertices_[e[1]] - vertices_[e[0]]).norm();
}

double Mesh::perimeter() const
{
    double p = 0.0;
    for (int k = 0; k < num_boundary(); ++k) p += edge_length(k);
    return p;
}

double Mesh::max_edge_length() const
{
    double h = 0.0;
    for (const auto& t : triangles_) {
        for (int i = 0; i < 3; ++i) h = std::max(h, (vertices_[t[i]] - vertices_[t[(i + 1) % 3]]).norm());
    }
    return h;
}

int Mesh::num_edges() const
{
    std::vector<std::uint64_t> keys;
    keys.reserve(3 * triangles_.size());
    for (const auto& t : triangles_) {
        for (int i = 0; i < 3; ++i) keys.push_back(edge_key(t[i], t[(i + 1) % 3]));
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<int>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

std::uint64_t Mesh::hash() const
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& v : vertices_) {
        const double xy[2] = {v.x(), v.y()};
        mix(xy, sizeof xy);
    }
    for (const auto& t : triangles_) mix(t.data(), sizeof(int) * 3);
    mix(boundary_vertices_.data(), sizeof(int) * boundary_vertices_.size());
    return h;
}

std::string Mesh::hash_hex() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

void Mesh::validate() const
{
    const int nv = num_vertices();
    for (int t = 0; t < num_triangles(); ++t) {
        for (int v : triangles_[t]) {
            if (v < 0 || v >= nv) throw std::runtime_error("mesh: triangle references invalid vertex");
        }
        if (!(triangle_area(t) > 0.0)) {
            throw std::runtime_error("mesh: triangle " + std::to_string(t) + " has non-positive area");
        }
    }

    // Every edge borders one or two triangles; one-sided edges are exactly the boundary cycle.
    std::map<std::uint64_t, int> uses;
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : triangles_) {
        for (int i = 0; i < 3; ++i) {
            const int a = t[i];
            const int b = t[(i + 1) % 3];
            ++uses[edge_key(a, b)];
            if (++directed[{a, b}] > 1) throw std::runtime_error("mesh: inconsistent orientation");
        }
    }
    int one_sided = 0;
    for (const auto& [key, count] : uses) {
        if (count > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
        if (count == 1) ++one_sided;
    }
    if (one_sided != num_boundary()) throw std::runtime_error("mesh: boundary is not a single cycle");
    for (const auto& e : boundary_edges_) {
        // Counterclockwise boundary edges appear with the same direction in their triangle.
        if (directed.count({e[0], e[1]}) == 0 || uses[edge_key(e[0], e[1])] != 1) {
            throw std::runtime_error("mesh: boundary cycle does not match one-sided edges");
        }
    }
    std::vector<int> seen(nv, 0);
    for (int v : boundary_vertices_) {
        if (seen[v]++) throw std::runtime_error("mesh: boundary cycle revisits a vertex");
        if (std::abs(vertices_[v].norm() - 1.0) > 1e-12) {
            throw std::runtime_error("mesh: boundary vertex off the unit circle");
        }
    }

    const int euler = nv - num_edges() + num_triangles();
    if (euler != 1) throw std::runtime_error("mesh: Euler characteristic " + std::to_string(euler) + " != 1");

    // With consistent orientation, equal areas rule out overlapping triangles.
    double polygon = 0.0;
    const int nb = num_boundary();
    for (int k = 0; k < nb; ++k) {
        const Point2& a = vertices_[boundary_vertices_[k]];
        const Point2& b = vertices_[boundary_vertices_[(k + 1) % nb]];
        polygon += 0.5 * (a.x() * b.y() - b.x() * a.y());
    }
    if (std::abs(polygon - area()) > 1e-12 * std::max(1.0, polygon)) {
        throw std::runtime_error("mesh: triangles do not tile the boundary polygon");
    }
}

void Mesh::write_dump(std::ostream& os) const
{
    char buf[96];
    os << num_vertices() << ' ' << num_triangles() << ' ' << num_boundary() << '\n';
    for (const auto& v : vertices_) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v.x(), v.y());
        os << buf;
    }
    for (const auto& t : triangles_) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : boundary_edges_) os << "b " << e[0] << ' ' << e[1] << '\n';
}

MeshPtr make_disk_mesh(int n_boundary, int refinement)
{
    if (n_boundary < 8) throw std::invalid_argument("make_disk_mesh: n_boundary must be >= 8");
    if (refinement < 0) throw std::invalid_argument("make_disk_mesh: refinement must be >= 0");
    MeshPtr mesh = base_disk_mesh(n_boundary);
    for (int r = 0; r < refinement; ++r) mesh = refine(*mesh);
    return mesh;
}

std::vector<BoundaryQuadPoint> boundary_quadrature(const Mesh& mesh)
{
    const double offset = 0.5 / std::sqrt(3.0);
    std::vector<BoundaryQuadPoint> out;
    out.reserve(2 * mesh.num_boundary());
    const auto& v = mesh.vertices();
    for (int k = 0; k < mesh.num_boundary(); ++k) {
        const auto& e = mesh.boundary_edges()[k];
        const double half = 0.5 * mesh.edge_length(k);
        for (double xi : {0.5 - offset, 0.5 + offset}) {
            out.push_back({(1.0 - xi) * v[e[0]] + xi * v[e[1]], half, k});
        }
    }
    return out;
}

}  // namespace bcstab
