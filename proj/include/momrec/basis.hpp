#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "momrec/volume.hpp"

namespace momrec {

/// First `count` positive zeros of the spherical Bessel function j_ell,
/// each accurate to 1e-12 (sign-change scan plus bisection).
std::vector<double> bessel_zeros(int ell, int count);

/// Per-degree radial truncation under the Nyquist criterion
/// R_{ell,s+1} <= 2 pi c R: S_ell is the largest s satisfying it.
/// Degrees with S_ell < 2*ell+1 are dropped, so the returned list may be
/// shorter than L_request+1; its length minus one is the effective L.
std::vector<int> truncation(double c, double R_support, int L_request);

/// Real expansion coefficients: one S_ell x (2 ell + 1) matrix per degree,
/// columns ordered m = -ell .. ell.
///
/// Convention: volumes are expanded in Fourier space as
///   F(k u) = sum a_{l m s} * i^l * j_{l s}(k) * S_{l m}(u)
/// with real spherical harmonics S_{l m} (Condon-Shortley phase) and the
/// normalized radial functions of the plan. The i^l phase makes every
/// a_{l m s} real for real volumes, so the per-degree ambiguity group is
/// exactly O(2 ell + 1).
struct BesselCoefficients {
    std::vector<Eigen::MatrixXd> mats;
    double voxel_size = 1.0; // carried through expand/synthesize

    int degrees() const { return static_cast<int>(mats.size()); } // L + 1

    double norm() const;
    BesselCoefficients& operator+=(const BesselCoefficients& other);
    BesselCoefficients& operator*=(double s);
};

/// Orthogonally scrambled coefficient factors share the storage layout of
/// plain coefficients.
using ScrambledFactors = BesselCoefficients;

/// Real spherical harmonics S_{l m} at a unit vector, all degrees up to L,
/// written to out[l*l + l + m]. Exposed for tests.
void real_sph_harm(int L, const Eigen::Vector3d& unit, Eigen::VectorXd& out);

/// Precomputed forward/inverse maps between an M^3 voxel grid and the
/// spherical Bessel expansion of its Fourier transform, restricted to grid
/// frequencies with |k| <= c (cycles per voxel).
///
/// The forward map is a linear least-squares fit of the in-ball Fourier
/// samples (mild ridge, 1e-10 relative to the mean normal-matrix
/// diagonal); the inverse map evaluates the expansion on the same points
/// and inverse-FFTs. Plans are immutable and cheap to copy.
class BasisPlan {
public:
    /// R_support defaults to M/2 voxels.
    static BasisPlan build(int M, double c, int L_request);
    static BasisPlan build(int M, double c, int L_request, double R_support);

    int grid_size() const;
    double bandlimit() const;
    double support_radius() const;
    int max_degree() const; // effective L after truncation
    const std::vector<int>& radial_counts() const;
    const std::vector<std::vector<double>>& radial_zeros() const;
    std::size_t point_count() const; // in-ball Fourier grid points

    BesselCoefficients expand(const VolumeGrid& volume) const;

    /// The reality defect max|Im| / max|Re| of the inverse FFT is written
    /// to *imag_residual when provided; it is < 1e-6 for valid inputs.
    VolumeGrid synthesize(const BesselCoefficients& coeffs, double* imag_residual = nullptr) const;

    BesselCoefficients zero_coefficients() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

inline BesselCoefficients expand(const VolumeGrid& volume, const BasisPlan& plan) {
    return plan.expand(volume);
}
inline VolumeGrid synthesize(const BesselCoefficients& coeffs, const BasisPlan& plan,
                             double* imag_residual = nullptr) {
    return plan.synthesize(coeffs, imag_residual);
}

} // namespace momrec
