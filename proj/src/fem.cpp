#include "bcstab/fem.hpp"

#include "bcstab/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bcstab {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_finite(const Vector& v, const char* what)
{
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite nodal value");
}

struct ElementGeometry {
    double area;
    // Gradients of the three barycentric basis functions (rows).
    Eigen::Matrix<double, 3, 2> grad;
};

ElementGeometry element(const Mesh& mesh, int t)
{
    const auto& tri = mesh.triangles()[t];
    const Point2& p0 = mesh.vertices()[tri[0]];
    const Point2& p1 = mesh.vertices()[tri[1]];
    const Point2& p2 = mesh.vertices()[tri[2]];
    ElementGeometry g;
    g.area = mesh.triangle_area(t);
    const double inv = 1.0 / (2.0 * g.area);
    g.grad.row(0) << (p1.y() - p2.y()) * inv, (p2.x() - p1.x()) * inv;
    g.grad.row(1) << (p2.y() - p0.y()) * inv, (p0.x() - p2.x()) * inv;
    g.grad.row(2) << (p0.y() - p1.y()) * inv, (p1.x() - p0.x()) * inv;
    return g;
}

// Inserts a symmetric element matrix so that (i, j) and (j, i) receive bitwise-equal sums.
void scatter_symmetric(const std::array<int, 3>& tri, const Eigen::Matrix3d& ke, std::vector<Triplet>& out)
{
    for (int i = 0; i < 3; ++i) {
        out.emplace_back(tri[i], tri[i], ke(i, i));
        for (int j = i + 1; j < 3; ++j) {
            out.emplace_back(tri[i], tri[j], ke(i, j));
            out.emplace_back(tri[j], tri[i], ke(i, j));
        }
    }
}

constexpr unsigned kSpatialVars = (1u << static_cast<unsigned>(Var::X1)) | (1u << static_cast<unsigned>(Var::X2));

}  // namespace

FeFunction::FeFunction(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values))
{
    if (!mesh_) throw std::invalid_argument("FeFunction: null mesh");
    if (values_.size() != mesh_->num_vertices()) {
        throw std::invalid_argument("FeFunction: expected " + std::to_string(mesh_->num_vertices()) +
                                    " values, got " + std::to_string(values_.size()));
    }
    check_finite(values_, "FeFunction");
}

FeFunction FeFunction::zeros(MeshPtr mesh)
{
    const int n = mesh->num_vertices();
    return {std::move(mesh), Vector::Zero(n)};
}

FeFunction FeFunction::constant(MeshPtr mesh, double c)
{
    const int n = mesh->num_vertices();
    return {std::move(mesh), Vector::Constant(n, c)};
}

BoundaryFunction::BoundaryFunction(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values))
{
    if (!mesh_) throw std::invalid_argument("BoundaryFunction: null mesh");
    if (values_.size() != mesh_->num_boundary()) {
        throw std::invalid_argument("BoundaryFunction: expected " + std::to_string(mesh_->num_boundary()) +
                                    " values, got " + std::to_string(values_.size()));
    }
    check_finite(values_, "BoundaryFunction");
}

BoundaryFunction BoundaryFunction::zeros(MeshPtr mesh)
{
    const int n = mesh->num_boundary();
    return {std::move(mesh), Vector::Zero(n)};
}

BoundaryFunction BoundaryFunction::constant(MeshPtr mesh, double c)
{
    const int n = mesh->num_boundary();
    return {std::move(mesh), Vector::Constant(n, c)};
}

BoundaryFunction BoundaryFunction::from_expr(MeshPtr mesh, const Expr& e)
{
    const int nb = mesh->num_boundary();
    Vector v(nb);
    for (int k = 0; k < nb; ++k) {
        const Point2& p = mesh->vertices()[mesh->boundary_vertices()[k]];
        v[k] = e.eval(Env().x(p.x(), p.y()).s(mesh->arc_parameter()[k]));
    }
    return {std::move(mesh), std::move(v)};
}

BoundaryFunction trace(const FeFunction& f)
{
    const Mesh& m = f.mesh();
    Vector v(m.num_boundary());
    for (int k = 0; k < m.num_boundary(); ++k) v[k] = f[m.boundary_vertices()[k]];
    return {f.mesh_ptr(), std::move(v)};
}

DomainQuadrature domain_quadrature(const Mesh& mesh)
{
    DomainQuadrature q;
    q.points.reserve(3 * mesh.num_triangles());
    q.weights.reserve(3 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const double w = mesh.triangle_area(t) / 3.0;
        for (const auto& bary : DomainQuadrature::kBary) {
            Point2 p = Point2::Zero();
            for (int i = 0; i < 3; ++i) p += bary[i] * mesh.vertices()[tri[i]];
            q.points.push_back(p);
            q.weights.push_back(w);
        }
    }
    return q;
}

Vector at_quadrature(const Mesh& mesh, const Vector& nodal)
{
    Vector out(3 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        for (int q = 0; q < 3; ++q) {
            double v = 0.0;
            for (int i = 0; i < 3; ++i) v += DomainQuadrature::kBary[q][i] * nodal[tri[i]];
            out[3 * t + q] = v;
        }
    }
    return out;
}

Vector load_vector(const Mesh& mesh, const DomainQuadrature& quad, const Vector& qvalues)
{
    Vector b = Vector::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        for (int q = 0; q < 3; ++q) {
            const double wf = quad.weights[3 * t + q] * qvalues[3 * t + q];
            for (int i = 0; i < 3; ++i) b[tri[i]] += wf * DomainQuadrature::kBary[q][i];
        }
    }
    return b;
}

SparseMatrix mass_matrix(const Mesh& mesh, const DomainQuadrature& quad, const Vector& qcoeff)
{
    std::vector<Triplet> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        Eigen::Matrix3d me = Eigen::Matrix3d::Zero();
        for (int q = 0; q < 3; ++q) {
            const double wc = quad.weights[3 * t + q] * qcoeff[3 * t + q];
            const auto& phi = DomainQuadrature::kBary[q];
            for (int i = 0; i < 3; ++i) {
                for (int j = i; j < 3; ++j) me(i, j) += wc * phi[i] * phi[j];
            }
        }
        scatter_symmetric(mesh.triangles()[t], me, trips);
    }
    SparseMatrix M(mesh.num_vertices(), mesh.num_vertices());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

SparseMatrix boundary_mass_matrix(const Mesh& mesh)
{
    const int nb = mesh.num_boundary();
    std::vector<Triplet> trips;
    trips.reserve(4 * nb);
    const auto quad = boundary_quadrature(mesh);
    for (const auto& qp : quad) {
        const int k = qp.edge;
        const int a = k;
        const int b = (k + 1) % nb;
        const auto& e = mesh.boundary_edges()[k];
        const Point2& p0 = mesh.vertices()[e[0]];
        const double xi = (qp.point - p0).norm() / mesh.edge_length(k);
        const double phi[2] = {1.0 - xi, xi};
        const int idx[2] = {a, b};
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) trips.emplace_back(idx[i], idx[j], qp.weight * phi[i] * phi[j]);
        }
    }
    SparseMatrix M(nb, nb);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

Vector lumped_boundary_weights(const Mesh& mesh)
{
    const int nb = mesh.num_boundary();
    Vector w = Vector::Zero(nb);
    for (int k = 0; k < nb; ++k) {
        const double half = 0.5 * mesh.edge_length(k);
        w[k] += half;
        w[(k + 1) % nb] += half;
    }
    return w;
}

Vector scatter_boundary(const Mesh& mesh, const Vector& boundary_values)
{
    Vector out = Vector::Zero(mesh.num_vertices());
    for (int k = 0; k < mesh.num_boundary(); ++k) out[mesh.boundary_vertices()[k]] = boundary_values[k];
    return out;
}

EllipticForm assemble(const OperatorCoefficients& c, MeshPtr mesh, std::uint64_t seed)
{
    for (const Expr* e : {&c.a11, &c.a12, &c.a22, &c.a0}) {
        if ((e->free_variables() & ~kSpatialVars) != 0) {
            throw AdmissionError("C0", "operator coefficient '" + e->to_string() + "' may depend on x1, x2 only");
        }
    }
    if (!(c.c0 > 0.0)) throw AdmissionError("C0", "declared ellipticity constant C0 must be positive");

    EllipticForm form;
    form.mesh = mesh;
    form.quad = domain_quadrature(*mesh);
    const int nq = form.quad.size();

    Vector a11(nq), a12(nq), a22(nq), a0(nq);
    bool a0_positive_somewhere = false;
    for (int q = 0; q < nq; ++q) {
        const Point2& p = form.quad.points[q];
        const Env env = Env().x(p.x(), p.y());
        a11[q] = c.a11.eval(env);
        a12[q] = c.a12.eval(env);
        a22[q] = c.a22.eval(env);
        a0[q] = c.a0.eval(env);
        if (a0[q] < 0.0) {
            throw AdmissionError("C0", "a0 is negative at (" + std::to_string(p.x()) + ", " +
                                           std::to_string(p.y()) + ")");
        }
        a0_positive_somewhere |= a0[q] > 0.0;
    }
    if (!a0_positive_somewhere) throw AdmissionError("C0", "a0 vanishes identically");

    // Sampled ellipticity: the smallest eigenvalue of (a_ij) bounds sum a_ij xi_i xi_j over unit xi.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, nq - 1);
    for (int s = 0; s < 100; ++s) {
        const int q = pick(rng);
        const double mean = 0.5 * (a11[q] + a22[q]);
        const double dev = std::hypot(0.5 * (a11[q] - a22[q]), a12[q]);
        const double lmin = mean - dev;
        if (lmin < c.c0 * (1.0 - 1e-12)) {
            throw AdmissionError("C0", "ellipticity bound fails: smallest eigenvalue " + std::to_string(lmin) +
                                           " < C0 = " + std::to_string(c.c0));
        }
    }

    std::vector<Triplet> trips;
    trips.reserve(9 * mesh->num_triangles());
    for (int t = 0; t < mesh->num_triangles(); ++t) {
        const ElementGeometry g = element(*mesh, t);
        Eigen::Matrix3d ke = Eigen::Matrix3d::Zero();
        for (int q = 0; q < 3; ++q) {
            const int iq = 3 * t + q;
            const double w = form.quad.weights[iq];
            Eigen::Matrix2d A;
            A << a11[iq], a12[iq], a12[iq], a22[iq];
            const auto& phi = DomainQuadrature::kBary[q];
            for (int i = 0; i < 3; ++i) {
                for (int j = i; j < 3; ++j) {
                    ke(i, j) += w * (g.grad.row(i) * A * g.grad.row(j).transpose() + a0[iq] * phi[i] * phi[j]);
                }
            }
        }
        scatter_symmetric(mesh->triangles()[t], ke, trips);
    }
    form.K.resize(mesh->num_vertices(), mesh->num_vertices());
    form.K.setFromTriplets(trips.begin(), trips.end());

    form.mass_domain = mass_matrix(*mesh, form.quad, Vector::Ones(nq));
    form.mass_boundary = boundary_mass_matrix(*mesh);
    form.boundary_weights = lumped_boundary_weights(*mesh);
    return form;
}

struct SpdSolver::Impl {
    SparseMatrix K;
    Eigen::SimplicialLLT<SparseMatrix> llt;
};

SpdSolver::SpdSolver(const SparseMatrix& K) : impl_(std::make_unique<Impl>())
{
    if (K.rows() != K.cols()) throw LinearSolveError("solve_spd: matrix is not square");
    impl_->K = K;
    impl_->llt.compute(impl_->K);
    if (impl_->llt.info() != Eigen::Success) {
        throw LinearSolveError("solve_spd: Cholesky factorisation failed (matrix not SPD)");
    }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const Vector& b) const
{
    if (b.size() != impl_->K.rows()) throw LinearSolveError("solve_spd: right-hand side has wrong size");
    const double target = 1e-10 * (1.0 + b.norm());
    Vector x = impl_->llt.solve(b);
    Vector r = b - impl_->K * x;
    for (int refine = 0; refine < 3 && r.norm() > target; ++refine) {
        x += impl_->llt.solve(r);
        r = b - impl_->K * x;
    }
    if (!x.allFinite() || r.norm() > target) {
        throw LinearSolveError("solve_spd: residual " + std::to_string(r.norm()) + " above tolerance");
    }
    return x;
}

Vector solve_spd(const SparseMatrix& K, const Vector& b) { return SpdSolver(K).solve(b); }

double norm(const FeFunction& f, NormKind kind, double r)
{
    const Mesh& mesh = f.mesh();
    switch (kind) {
    case NormKind::Linf: return f.values().size() == 0 ? 0.0 : f.values().cwiseAbs().maxCoeff();
    case NormKind::L2Gamma: return norm(trace(f), kind, r);
    case NormKind::L2Omega:
    case NormKind::W1r: {
        const Vector vq = at_quadrature(mesh, f.values());
        double sum = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const double w = mesh.triangle_area(t) / 3.0;
            for (int q = 0; q < 3; ++q) {
                const double v = std::abs(vq[3 * t + q]);
                sum += w * (kind == NormKind::L2Omega ? v * v : std::pow(v, r));
            }
            if (kind == NormKind::W1r) {
                const ElementGeometry g = element(mesh, t);
                const auto& tri = mesh.triangles()[t];
                Eigen::RowVector2d grad = Eigen::RowVector2d::Zero();
                for (int i = 0; i < 3; ++i) grad += f[tri[i]] * g.grad.row(i);
                sum += g.area * std::pow(grad.norm(), r);
            }
        }
        return kind == NormKind::L2Omega ? std::sqrt(sum) : std::pow(sum, 1.0 / r);
    }
    }
    throw std::invalid_argument("norm: unknown kind");
}

double norm(const BoundaryFunction& f, NormKind kind, double /*r*/)
{
    const Mesh& mesh = f.mesh();
    switch (kind) {
    case NormKind::Linf: return f.values().size() == 0 ? 0.0 : f.values().cwiseAbs().maxCoeff();
    case NormKind::L2Gamma: {
        const int nb = mesh.num_boundary();
        double sum = 0.0;
        for (int k = 0; k < nb; ++k) {
            const double a = f[k];
            const double b = f[(k + 1) % nb];
            sum += mesh.edge_length(k) / 3.0 * (a * a + a * b + b * b);
        }
        return std::sqrt(sum);
    }
    default: break;
    }
    throw std::invalid_argument("norm: L2Omega and W1r are not defined for boundary functions");
}

double l2_distance(const FeFunction& f, const std::function<double(const Point2&)>& exact)
{
    // Six-point degree-4 rule.
    static constexpr double a = 0.445948490915965;
    static constexpr double b = 0.091576213509771;
    static constexpr double wa = 0.223381589678011;
    static constexpr double wb = 0.109951743655322;
    static constexpr double rule[6][4] = {
        {a, a, 1 - 2 * a, wa}, {a, 1 - 2 * a, a, wa}, {1 - 2 * a, a, a, wa},
        {b, b, 1 - 2 * b, wb}, {b, 1 - 2 * b, b, wb}, {1 - 2 * b, b, b, wb},
    };
    const Mesh& mesh = f.mesh();
    double sum = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles()[t];
        const double area = mesh.triangle_area(t);
        for (const auto& q : rule) {
            Point2 p = Point2::Zero();
            double fh = 0.0;
            for (int i = 0; i < 3; ++i) {
                p += q[i] * mesh.vertices()[tri[i]];
                fh += q[i] * f[tri[i]];
            }
            const double d = fh - exact(p);
            sum += q[3] * area * d * d;
        }
    }
    return std::sqrt(sum);
}

}  // namespace bcstab
