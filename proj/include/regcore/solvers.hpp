#pragma once

#include "regcore/geom.hpp"

namespace regcore {

// Condition-number ceiling for the homogeneous Gram matrix H^T H. Above it the
// moving landmarks are treated as collinear.
inline constexpr double gram_condition_limit = 1e12;

/// Least-squares proper rotation and translation mapping `mov` onto `fix`.
///
/// Orthogonal Procrustes: both sets are centered, the 2x2 cross-correlation
/// Sigma = sum mov_i fix_i^T is decomposed as U S V^T and the rotation is
/// V diag(1, det(V U^T)) U^T. The sign correction keeps det(R) = +1 even when
/// the unconstrained optimum would be a reflection.
///
/// Throws DegenerateConfiguration when every moving landmark coincides.
RigidTransform solve_rigid(const LandmarkSet& mov, const LandmarkSet& fix);

/// Least-squares affine map from `mov` to `fix`, solved by Householder QR on
/// the homogeneous design matrix. Throws DegenerateConfiguration when the
/// moving landmarks are collinear or coincident.
AffineTransform solve_affine(const LandmarkSet& mov, const LandmarkSet& fix);

/// Thin-plate spline with kernel regularization K + lambda*I.
///
/// Solves the bordered system [[K + lambda I, H], [H^T, 0]] [W; B] = [fix; 0]
/// with a partially pivoted LU. At lambda = 0 the result interpolates the
/// pairs exactly; as lambda grows it tends to the least-squares affine map.
///
/// Throws InvalidArgument for negative lambda and SingularSystem for duplicate
/// or collinear control points.
TpsTransform solve_tps(const LandmarkSet& mov, const LandmarkSet& fix, double lambda,
                       KernelVariant variant = KernelVariant::StandardRLogR);

/// trace(W^T K W) with K rebuilt from the control points (no lambda term).
/// For the standard kernel the bending-energy integral equals 8*pi times this.
double tps_bending_energy(const TpsTransform& t);

/// Kernel matrix K_ij = kernel(|p_i - p_j|^2).
Eigen::MatrixXd tps_kernel_matrix(const LandmarkSet& points, KernelVariant variant);

/// Fits the requested model kind; `lambda` and `variant` only matter for TPS.
TransformModel solve(ModelKind kind, const LandmarkSet& mov, const LandmarkSet& fix, double lambda = 0.0,
                     KernelVariant variant = KernelVariant::StandardRLogR);

} // namespace regcore
