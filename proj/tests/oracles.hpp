#pragma once

// Reference computations used by the tests. Nothing here calls into the library's assembly,
// solvers or optimality code; meshes are only read through their vertex and triangle lists.

#include "bcstab/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Gaussian elimination with partial pivoting on a dense copy.
inline Eigen::VectorXd gauss_solve(Eigen::MatrixXd A, Eigen::VectorXd b)
{
    const int n = static_cast<int>(A.rows());
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(A(i, k)) > std::abs(A(p, k))) p = i;
        }
        if (A(p, k) == 0.0) throw std::runtime_error("singular matrix");
        A.row(k).swap(A.row(p));
        std::swap(b[k], b[p]);
        for (int i = k + 1; i < n; ++i) {
            const double f = A(i, k) / A(k, k);
            for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    Eigen::VectorXd x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

/// Column-by-column gauss_solve of A X = B.
inline Eigen::MatrixXd gauss_solve_many(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    Eigen::MatrixXd X(A.rows(), B.cols());
    for (int j = 0; j < B.cols(); ++j) X.col(j) = gauss_solve(A, B.col(j));
    return X;
}

/// Radial solution of y'' + y'/r = k2 y - f on (0, 1), y'(0) = 0, y'(1) = flux, by RK4 shooting.
/// Linear in the unknown y(0), so two shots suffice. Returns a callable profile y(r).
class RadialOde {
public:
    RadialOde(double k2, double f, double flux, int steps = 20000) : k2_(k2), f_(f), steps_(steps)
    {
        const double da = shoot(1.0).second;
        const double db = shoot(0.0).second;
        // y'(1) is affine in y(0): d(a) = db + (da - db) a.
        const double a = (flux - db) / (da - db);
        shoot(a, true);
    }

    [[nodiscard]] double operator()(double r) const
    {
        r = std::clamp(r, 0.0, 1.0);
        const double h = 1.0 / steps_;
        const int i = std::min(static_cast<int>(r / h), steps_ - 1);
        const double t = (r - i * h) / h;
        // Cubic Hermite between the stored nodes.
        const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
        const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }
    [[nodiscard]] double derivative_at_one() const { return d_.back(); }

private:
    std::pair<double, double> shoot(double y0, bool store = false)
    {
        const double h = 1.0 / steps_;
        // Series start: y = y0 + c r^2 with 4 c = k2 y0 - f.
        const double c = (k2_ * y0 - f_) / 4.0;
        const double r0 = 1e-6;
        double y = y0 + c * r0 * r0;
        double d = 2 * c * r0;
        if (store) {
            y_.assign(steps_ + 1, 0.0);
            d_.assign(steps_ + 1, 0.0);
            y_[0] = y0;
            d_[0] = 0.0;
        }
        auto rhs = [&](double r, double yy, double dd) { return k2_ * yy - f_ - dd / r; };
        double r = r0;
        for (int i = 1; i <= steps_; ++i) {
            const double target = i * h;
            const double hh = target - r;
            const double k1y = d, k1d = rhs(r, y, d);
            const double k2y = d + 0.5 * hh * k1d, k2d = rhs(r + 0.5 * hh, y + 0.5 * hh * k1y, d + 0.5 * hh * k1d);
            const double k3y = d + 0.5 * hh * k2d, k3d = rhs(r + 0.5 * hh, y + 0.5 * hh * k2y, d + 0.5 * hh * k2d);
            const double k4y = d + hh * k3d, k4d = rhs(r + hh, y + hh * k3y, d + hh * k3d);
            y += hh / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
            d += hh / 6 * (k1d + 2 * k2d + 2 * k3d + k4d);
            r = target;
            if (store) {
                y_[i] = y;
                d_[i] = d;
            }
        }
        return {y, d};
    }

    double k2_, f_;
    int steps_;
    std::vector<double> y_, d_;
};

/// Dense P1 forms on a mesh from closed-form element matrices (no quadrature).
struct DenseForms {
    Eigen::MatrixXd stiffness;  // Laplacian
    Eigen::MatrixXd mass;       // consistent P1 mass
    Eigen::VectorXd weights;    // half of each adjacent boundary edge, per boundary vertex
};

inline DenseForms dense_forms(const bcstab::Mesh& mesh)
{
    const int n = mesh.num_vertices();
    DenseForms f;
    f.stiffness = Eigen::MatrixXd::Zero(n, n);
    f.mass = Eigen::MatrixXd::Zero(n, n);
    for (const auto& tri : mesh.triangles()) {
        Eigen::Vector2d p[3];
        for (int i = 0; i < 3; ++i) p[i] = mesh.vertices()[tri[i]];
        const Eigen::Vector2d e0 = p[2] - p[1], e1 = p[0] - p[2], e2 = p[1] - p[0];
        const double area = 0.5 * std::abs(e2.x() * (-e1.y()) - e2.y() * (-e1.x()));
        const Eigen::Vector2d e[3] = {e0, e1, e2};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                f.stiffness(tri[i], tri[j]) += e[i].dot(e[j]) / (4 * area);
                f.mass(tri[i], tri[j]) += area / 12.0 * (i == j ? 2.0 : 1.0);
            }
        }
    }
    const int nb = mesh.num_boundary();
    f.weights = Eigen::VectorXd::Zero(nb);
    for (int k = 0; k < nb; ++k) {
        const int a = mesh.boundary_vertices()[k];
        const int b = mesh.boundary_vertices()[(k + 1) % nb];
        const double len = (mesh.vertices()[a] - mesh.vertices()[b]).norm();
        f.weights[k] += 0.5 * len;
        f.weights[(k + 1) % nb] += 0.5 * len;
    }
    return f;
}

/// Accelerated gradient with adaptive restart for a smooth convex function.
inline Eigen::VectorXd minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                Eigen::VectorXd x, double lipschitz, int iterations)
{
    Eigen::VectorXd z = x;
    double t = 1.0;
    double fx = f(x);
    const double step = 1.0 / lipschitz;
    for (int k = 0; k < iterations; ++k) {
        const Eigen::VectorXd xn = z - step * grad(z);
        const double fn = f(xn);
        if (fn > fx) {
            // Restart momentum.
            t = 1.0;
            z = x;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = xn + ((t - 1.0) / tn) * (xn - x);
        x = xn;
        fx = fn;
        t = tn;
    }
    return x;
}

}  // namespace oracle
