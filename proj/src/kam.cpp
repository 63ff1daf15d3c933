#include "momrec/kam.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "momrec/errors.hpp"

namespace momrec {

ClMatrices compute_cl(const BesselCoefficients& coeffs) {
    ClMatrices out;
    out.reserve(coeffs.mats.size());
    for (const auto& a : coeffs.mats)
        out.push_back(a * a.transpose());
    return out;
}

Eigen::MatrixXd haar_orthogonal(int n, Rng& rng) {
    if (n < 1) fail(ErrorKind::config, "haar_orthogonal: n must be >= 1");
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    // normalize the factorization so Q is Haar rather than biased by the
    // sign convention of the QR routine
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

ScrambledFactors scramble(const BesselCoefficients& coeffs, Rng& rng) {
    ScrambledFactors out = coeffs;
    for (std::size_t l = 0; l < coeffs.mats.size(); ++l) {
        const int w = static_cast<int>(coeffs.mats[l].cols());
        if (coeffs.mats[l].rows() < w)
            fail(ErrorKind::config, "scramble: S_l >= 2l+1 required for every retained degree");
        out.mats[l] = coeffs.mats[l] * haar_orthogonal(w, rng);
    }
    return out;
}

MomentProjector::MomentProjector(ClMatrices cl, const BasisPlan& plan) : cl_(std::move(cl)) {
    const auto& s_counts = plan.radial_counts();
    if (cl_.size() != s_counts.size())
        fail(ErrorKind::config, "MomentProjector: C_l degree count does not match plan");
    factors_.reserve(cl_.size());
    for (std::size_t l = 0; l < cl_.size(); ++l) {
        const int sl = s_counts[l];
        const int w = 2 * static_cast<int>(l) + 1;
        if (cl_[l].rows() != sl || cl_[l].cols() != sl)
            fail(ErrorKind::config, "MomentProjector: C_l shape mismatch at degree " + std::to_string(l));

        if (sl == w) {
            Eigen::LLT<Eigen::MatrixXd> llt(cl_[l]);
            if (llt.info() == Eigen::Success) {
                factors_.push_back(Eigen::MatrixXd(llt.matrixL()));
                continue;
            }
        }
        // semidefinite or rectangular case: top-(2l+1) eigenpairs, clamped
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cl_[l]);
        if (eig.info() != Eigen::Success)
            fail(ErrorKind::degenerate, "MomentProjector: eigendecomposition failed at degree " +
                                            std::to_string(l));
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(sl, w);
        for (int r = 0; r < w && r < sl; ++r) {
            const int idx = sl - 1 - r; // eigenvalues ascend
            const double lam = std::max(eig.eigenvalues()(idx), 0.0);
            f.col(r) = std::sqrt(lam) * eig.eigenvectors().col(idx);
        }
        factors_.push_back(std::move(f));
    }
}

BesselCoefficients MomentProjector::project_coeffs(const BesselCoefficients& coeffs) const {
    if (coeffs.mats.size() != factors_.size())
        fail(ErrorKind::config, "MomentProjector: coefficient degree count mismatch");
    BesselCoefficients out = coeffs;
    for (std::size_t l = 0; l < factors_.size(); ++l) {
        const Eigen::MatrixXd g = factors_[l].transpose() * coeffs.mats[l]; // (2l+1) x (2l+1)
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
        // minimizer is non-unique when g is singular; any SVD works
        out.mats[l] = factors_[l] * (svd.matrixU() * svd.matrixV().transpose());
    }
    return out;
}

VolumeGrid MomentProjector::project(const VolumeGrid& volume, const BasisPlan& plan) const {
    return plan.synthesize(project_coeffs(plan.expand(volume)));
}

VolumeGrid project_moment(const VolumeGrid& volume, const ClMatrices& cl, const BasisPlan& plan) {
    return MomentProjector(cl, plan).project(volume, plan);
}

} // namespace momrec
