#pragma once

#include <vector>

#include <Eigen/Core>

#include "momrec/basis.hpp"
#include "momrec/rng.hpp"
#include "momrec/volume.hpp"

namespace momrec {

/// Per-degree Gram matrices C_l = A_l A_l^T (S_l x S_l, symmetric PSD,
/// rank <= min(S_l, 2l+1)). These are exactly what the second moment of
/// the projection images determines; the per-degree right-orthogonal
/// factor is not.
using ClMatrices = std::vector<Eigen::MatrixXd>;

ClMatrices compute_cl(const BesselCoefficients& coeffs);

/// Haar-uniform matrix in O(n) (QR of a Gaussian matrix with the sign
/// correction that makes the distribution exactly invariant).
Eigen::MatrixXd haar_orthogonal(int n, Rng& rng);

/// B_l = A_l O_l with independent Haar O_l in O(2l+1) per degree; the
/// Gram matrices are untouched while the volume is damaged.
ScrambledFactors scramble(const BesselCoefficients& coeffs, Rng& rng);

/// Moment-constraint projection: per degree, the closest D_l with
/// D_l D_l^T = C_l to the expansion A_l of the input volume, solved in
/// closed form as an orthogonal Procrustes problem (SVD of F_l^T A_l for
/// a fixed factor F_l of C_l).
class MomentProjector {
public:
    MomentProjector(ClMatrices cl, const BasisPlan& plan);

    /// Factor F_l (S_l x (2l+1)) with F_l F_l^T = C_l: Cholesky when C_l
    /// is square full-size and strictly PD, otherwise the clamped
    /// eigendecomposition square root.
    const Eigen::MatrixXd& factor(int l) const { return factors_[l]; }

    BesselCoefficients project_coeffs(const BesselCoefficients& coeffs) const;
    VolumeGrid project(const VolumeGrid& volume, const BasisPlan& plan) const;

private:
    ClMatrices cl_;
    std::vector<Eigen::MatrixXd> factors_;
};

/// One-shot form of the projection.
VolumeGrid project_moment(const VolumeGrid& volume, const ClMatrices& cl, const BasisPlan& plan);

} // namespace momrec
