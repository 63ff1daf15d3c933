#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "momrec/rng.hpp"

namespace momrec {

/// Proper rotation in 3-D. The constructor rejects matrices that are not
/// orthogonal with determinant +1 (tolerance 1e-12).
class Rotation {
public:
    explicit Rotation(const Eigen::Matrix3d& m);

    static Rotation identity() { return Rotation(Eigen::Matrix3d::Identity()); }
    static Rotation about_z(double angle);
    static Rotation about_x(double angle);

    const Eigen::Matrix3d& matrix() const { return m_; }

private:
    Eigen::Matrix3d m_;
};

/// Haar-uniform rotation, sampled through a uniform unit quaternion
/// (four iid Gaussians, normalized). Exactly invariant in distribution
/// under left and right multiplication.
Rotation random_rotation(Rng& rng);

/// Coordinate projection of a rotated point: first two components of R*p.
Eigen::Vector2d project(const Rotation& rotation, const Eigen::Vector3d& point);

/// Weighted point masses, positions sorted by descending norm at
/// construction. Weights must be strictly positive. Norm ties are legal
/// here (so adversarial inputs remain expressible); check_genericity is
/// the gate that rejects them.
struct AtomSet {
    std::vector<Eigen::Vector3d> positions;
    std::vector<double> weights;

    AtomSet() = default;
    AtomSet(std::vector<Eigen::Vector3d> pos, std::vector<double> w);

    int count() const { return static_cast<int>(positions.size()); }

    /// p atoms uniform in the ball of radius r, weights uniform in [w_lo, w_hi].
    static AtomSet random(int p, Rng& rng, double radius = 1.0, double w_lo = 0.5, double w_hi = 2.0);
};

AtomSet rotated(const AtomSet& atoms, const Eigen::Matrix3d& transform);

struct GenericityReport {
    bool a1_ok = false;       // every pair of positions has sine-of-angle > tol
    bool a2_ok = false;       // all pairwise norm gaps exceed tol
    double min_sin_angle = 0; // over all pairs
    double min_norm_gap = 0;  // over all pairs
};

GenericityReport check_genericity(const AtomSet& atoms, double tol = 1e-6);

struct AlignResult {
    Eigen::Matrix3d transform = Eigen::Matrix3d::Identity(); // in O(3), reflection allowed
    double rmsd = 0.0;
    bool degenerate = false; // cross-covariance numerically rank-deficient
};

/// Orthogonal transform minimizing sum_i |O*source_i - target_i|^2 in
/// closed form (SVD of the cross-covariance). No translation term: the
/// recovery problem has no translational ambiguity.
AlignResult align(const std::vector<Eigen::Vector3d>& source,
                  const std::vector<Eigen::Vector3d>& target);

/// Best O(3) alignment of two atom sets (positions only).
AlignResult align(const AtomSet& source, const AtomSet& target);

/// Plain-text atom table: one row per atom "x y z w", '#' comments,
/// 17 significant digits for exact decimal round trips.
void write_atoms(const std::string& path, const AtomSet& atoms);
AtomSet read_atoms(const std::string& path);

} // namespace momrec
