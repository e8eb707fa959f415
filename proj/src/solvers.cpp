#include "regcore/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "regcore/errors.hpp"

namespace regcore {

namespace {

void require_pairs(const LandmarkSet& mov, const LandmarkSet& fix)
{
    if (mov.size() != fix.size()) {
        throw InvalidArgument("landmark sets differ in length: " + std::to_string(mov.size()) + " vs " +
                              std::to_string(fix.size()));
    }
}

// Rows [x_i, y_i, 1].
Eigen::MatrixX3d homogeneous(const LandmarkSet& pts)
{
    Eigen::MatrixX3d h(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        h(r, 0) = pts[i].x;
        h(r, 1) = pts[i].y;
        h(r, 2) = 1.0;
    }
    return h;
}

// Condition number of H^T H from the singular values of H.
double gram_condition(const Eigen::MatrixX3d& h)
{
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixX3d>(h).singularValues();
    if (!(sv(2) > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    const double ratio = sv(0) / sv(2);
    return ratio * ratio;
}

} // namespace

RigidTransform solve_rigid(const LandmarkSet& mov, const LandmarkSet& fix)
{
    require_pairs(mov, fix);
    const Point2 cm = mov.centroid();
    const Point2 cf = fix.centroid();

    Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
    double spread = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < mov.size(); ++i) {
        scale = std::max({scale, std::abs(mov[i].x), std::abs(mov[i].y)});
        const Eigen::Vector2d m(mov[i].x - cm.x, mov[i].y - cm.y);
        const Eigen::Vector2d f(fix[i].x - cf.x, fix[i].y - cf.y);
        sigma += m * f.transpose();
        spread = std::max(spread, m.cwiseAbs().maxCoeff());
    }
    // Centering leaves round-off residue even for identical points.
    if (spread <= 1e-14 * scale) {
        throw DegenerateConfiguration("rigid fit: all moving landmarks coincide, rotation is indeterminate");
    }

    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix2d& u = svd.matrixU();
    const Eigen::Matrix2d& v = svd.matrixV();
    Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
    d(1, 1) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix2d r = v * d * u.transpose();

    const Eigen::Vector2d t = Eigen::Vector2d(cf.x, cf.y) - r * Eigen::Vector2d(cm.x, cm.y);
    return {r, t};
}

AffineTransform solve_affine(const LandmarkSet& mov, const LandmarkSet& fix)
{
    require_pairs(mov, fix);
    const Eigen::MatrixX3d h = homogeneous(mov);
    const double cond = gram_condition(h);
    if (!(cond <= gram_condition_limit)) {
        throw DegenerateConfiguration("affine fit: moving landmarks are collinear or coincident (Gram condition " +
                                      std::to_string(cond) + ")");
    }
    const Eigen::MatrixX2d y = fix.as_matrix();
    const Eigen::Matrix<double, 3, 2> b = h.householderQr().solve(y);
    return AffineTransform(b.transpose());
}

Eigen::MatrixXd tps_kernel_matrix(const LandmarkSet& points, KernelVariant variant)
{
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        k(i, i) = tps_kernel(0.0, variant);
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double v = tps_kernel(squared_distance(points[i], points[j]), variant);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

TpsTransform solve_tps(const LandmarkSet& mov, const LandmarkSet& fix, double lambda, KernelVariant variant)
{
    require_pairs(mov, fix);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("TPS lambda must be finite and non-negative (NegativeLambda)");
    }

    const auto m = static_cast<Eigen::Index>(mov.size());
    const Eigen::MatrixX3d h = homogeneous(mov);
    if (!(gram_condition(h) <= gram_condition_limit)) {
        throw SingularSystem("TPS: control points are collinear");
    }
    // Duplicate control points make two rows of the bordered matrix equal.
    const Eigen::MatrixX2d c = mov.as_matrix();
    const double extent = std::max(1.0, c.cwiseAbs().maxCoeff());
    const double min_separation2 = 1e-24 * extent * extent;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            if (squared_distance(mov[i], mov[j]) <= min_separation2) {
                throw SingularSystem("TPS: duplicate control points " + std::to_string(i) + " and " +
                                     std::to_string(j));
            }
        }
    }

    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(m + 3, m + 3);
    lhs.topLeftCorner(m, m) = tps_kernel_matrix(mov, variant);
    lhs.topLeftCorner(m, m).diagonal().array() += lambda;
    lhs.topRightCorner(m, 3) = h;
    lhs.bottomLeftCorner(3, m) = h.transpose();

    Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(m + 3, 2);
    rhs.topRows(m) = fix.as_matrix();

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::MatrixX2d sol = lu.solve(rhs);
    const double rel_residual = (lhs * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (!sol.allFinite() || rel_residual > 1e-6) {
        throw SingularSystem("TPS: bordered system is singular (relative residual " + std::to_string(rel_residual) +
                             ")");
    }

    const Eigen::MatrixX2d w = sol.topRows(m);
    const AffineTransform::Matrix b = sol.bottomRows(3).transpose();
    return {b, w, mov, lambda, variant};
}

double tps_bending_energy(const TpsTransform& t)
{
    const Eigen::MatrixXd k = tps_kernel_matrix(t.control_points(), t.kernel());
    const Eigen::MatrixX2d& w = t.weights();
    return (w.transpose() * k * w).trace();
}

TransformModel solve(ModelKind kind, const LandmarkSet& mov, const LandmarkSet& fix, double lambda,
                     KernelVariant variant)
{
    switch (kind) {
    case ModelKind::Rigid:
        return solve_rigid(mov, fix);
    case ModelKind::Affine:
        return solve_affine(mov, fix);
    case ModelKind::Tps:
        return solve_tps(mov, fix, lambda, variant);
    }
    throw InvalidArgument("unknown model kind");
}

} // namespace regcore
