#include "momrec/basis.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <fftw3.h>

#include "momrec/errors.hpp"

namespace momrec {

namespace {

inline double sph_bessel(int ell, double x) {
    return std::sph_bessel(static_cast<unsigned>(ell), x);
}

} // namespace

std::vector<double> bessel_zeros(int ell, int count) {
    if (ell < 0) fail(ErrorKind::config, "bessel_zeros: ell must be non-negative");
    if (count < 1) fail(ErrorKind::config, "bessel_zeros: count must be >= 1");

    std::vector<double> zeros;
    zeros.reserve(count);
    // All zeros exceed ell + 1/2 and consecutive zeros are separated by
    // more than pi/4, so a quarter-pi scan cannot skip one.
    const double step = 0.25 * M_PI;
    double x0 = std::max(0.5, ell + 0.5);
    double f0 = sph_bessel(ell, x0);
    while (static_cast<int>(zeros.size()) < count) {
        const double x1 = x0 + step;
        const double f1 = sph_bessel(ell, x1);
        if ((f0 < 0.0) != (f1 < 0.0)) {
            double a = x0, b = x1, fa = f0;
            while (b - a > 1e-14 * b) {
                const double mid = 0.5 * (a + b);
                const double fm = sph_bessel(ell, mid);
                if ((fa < 0.0) != (fm < 0.0)) {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            zeros.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    return zeros;
}

std::vector<int> truncation(double c, double R_support, int L_request) {
    if (!(c > 0.0)) fail(ErrorKind::config, "truncation: bandlimit must be positive");
    if (!(R_support > 0.0)) fail(ErrorKind::config, "truncation: support radius must be positive");
    if (L_request < 0) fail(ErrorKind::config, "truncation: L_request must be non-negative");

    // slack covers root-polishing error when a zero sits exactly on the
    // threshold (e.g. j_0 zeros at s*pi against a threshold of 2 pi c R)
    const double threshold = 2.0 * M_PI * c * R_support * (1.0 + 1e-12);
    std::vector<int> s_counts;
    for (int ell = 0; ell <= L_request; ++ell) {
        // count zeros <= threshold; S_ell is the largest s with
        // R_{ell,s+1} <= threshold, i.e. one less than that count
        int n_zeros = 0;
        const double step = 0.25 * M_PI;
        double x0 = std::max(0.5, ell + 0.5);
        double f0 = sph_bessel(ell, x0);
        while (x0 < threshold + step) {
            const double x1 = x0 + step;
            const double f1 = sph_bessel(ell, x1);
            if ((f0 < 0.0) != (f1 < 0.0)) {
                double a = x0, b = x1, fa = f0;
                while (b - a > 1e-13 * b) {
                    const double mid = 0.5 * (a + b);
                    const double fm = sph_bessel(ell, mid);
                    if ((fa < 0.0) != (fm < 0.0)) b = mid;
                    else { a = mid; fa = fm; }
                }
                if (0.5 * (a + b) <= threshold) ++n_zeros;
            }
            x0 = x1;
            f0 = f1;
        }
        const int s_ell = n_zeros - 1;
        if (s_ell < 2 * ell + 1) break; // degree unusable; higher ones are worse
        s_counts.push_back(s_ell);
    }
    return s_counts;
}

double BesselCoefficients::norm() const {
    double acc = 0.0;
    for (const auto& m : mats) acc += m.squaredNorm();
    return std::sqrt(acc);
}

BesselCoefficients& BesselCoefficients::operator+=(const BesselCoefficients& other) {
    if (other.mats.size() != mats.size())
        fail(ErrorKind::config, "BesselCoefficients: degree mismatch");
    for (std::size_t l = 0; l < mats.size(); ++l) mats[l] += other.mats[l];
    return *this;
}

BesselCoefficients& BesselCoefficients::operator*=(double s) {
    for (auto& m : mats) m *= s;
    return *this;
}

void real_sph_harm(int L, const Eigen::Vector3d& unit, Eigen::VectorXd& out) {
    out.resize((L + 1) * (L + 1));
    const double z = unit.z();
    const double st = std::hypot(unit.x(), unit.y()); // sin(theta) >= 0
    double cphi = 1.0, sphi = 0.0;
    if (st > 1e-300) {
        cphi = unit.x() / st;
        sphi = unit.y() / st;
    }

    // q(l, m) = N_{l m} P_l^m(cos theta) with Condon-Shortley phase,
    // N_{l m} = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), by stable recurrences.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(L + 1, L + 1);
    q(0, 0) = 1.0 / std::sqrt(4.0 * M_PI);
    for (int m = 1; m <= L; ++m)
        q(m, m) = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * q(m - 1, m - 1);
    for (int m = 0; m < L; ++m)
        q(m + 1, m) = std::sqrt(2.0 * m + 3.0) * z * q(m, m);
    for (int m = 0; m <= L; ++m) {
        for (int l = m + 2; l <= L; ++l) {
            const double a = std::sqrt(((2.0 * l + 1.0) * (2.0 * l - 1.0)) /
                                       (static_cast<double>(l - m) * (l + m)));
            const double b = std::sqrt(((2.0 * l + 1.0) * (l - 1.0 - m) * (l - 1.0 + m)) /
                                       ((2.0 * l - 3.0) * (l - m) * (l + m)));
            q(l, m) = a * z * q(l - 1, m) - b * q(l - 2, m);
        }
    }

    // azimuthal factors cos(m phi), sin(m phi) by angle addition
    std::vector<double> cm(L + 1), sm(L + 1);
    cm[0] = 1.0;
    sm[0] = 0.0;
    for (int m = 1; m <= L; ++m) {
        cm[m] = cm[m - 1] * cphi - sm[m - 1] * sphi;
        sm[m] = sm[m - 1] * cphi + cm[m - 1] * sphi;
    }

    const double sqrt2 = std::sqrt(2.0);
    for (int l = 0; l <= L; ++l) {
        const int base = l * l + l;
        out(base) = q(l, 0);
        for (int m = 1; m <= l; ++m) {
            out(base + m) = sqrt2 * q(l, m) * cm[m];
            out(base - m) = sqrt2 * q(l, m) * sm[m];
        }
    }
}

// ---------------------------------------------------------------------------

struct BasisPlan::Impl {
    int M = 0;
    double c = 0.0;
    double R_support = 0.0;
    std::vector<int> s_counts;
    std::vector<std::vector<double>> zeros;

    // in-ball Fourier grid points
    std::vector<std::size_t> flat_index;
    std::vector<double> phase; // (-1)^(f1+f2+f3), centering at index M/2

    // per-point factors: rad(q, rcol(l,s)) = i^l-sign * j_{l s}(k_q),
    // ang(q, l*l+l+m) = S_{l m}(u_q)
    Eigen::MatrixXd rad;
    Eigen::MatrixXd ang;
    std::vector<int> rad_offset; // per degree into rad columns

    // coefficient packing per parity block: degree l contributes a
    // contiguous run of S_l*(2l+1) columns (m-major, s-fast)
    std::vector<int> even_degrees, odd_degrees;
    std::vector<int> block_offset; // per degree, into its parity block
    int n_even = 0, n_odd = 0;

    Eigen::LLT<Eigen::MatrixXd> llt_even, llt_odd;

    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    ~Impl() {
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }

    int L() const { return static_cast<int>(s_counts.size()) - 1; }

    void gather_block(bool even, const Eigen::VectorXd& f, Eigen::VectorXd& rhs) const;
    void scatter_block(bool even, const BesselCoefficients& coeffs, Eigen::VectorXd& values) const;

    // Dense design-matrix rows for a chunk of points restricted to one
    // parity block; used only while assembling the normal matrices.
    void fill_block_rows(bool even, std::size_t lo, std::size_t hi, Eigen::MatrixXd& rows) const {
        const auto& degs = even ? even_degrees : odd_degrees;
        rows.setZero();
        for (std::size_t q = lo; q < hi; ++q) {
            const auto r = static_cast<Eigen::Index>(q - lo);
            for (int l : degs) {
                const int sl = s_counts[l];
                const int off = block_offset[l];
                for (int mi = 0; mi < 2 * l + 1; ++mi) {
                    const double a = ang(static_cast<Eigen::Index>(q), l * l + mi);
                    if (a == 0.0) continue;
                    for (int s = 0; s < sl; ++s)
                        rows(r, off + mi * sl + s) =
                            a * rad(static_cast<Eigen::Index>(q), rad_offset[l] + s);
                }
            }
        }
    }
};

void BasisPlan::Impl::gather_block(bool even, const Eigen::VectorXd& f, Eigen::VectorXd& rhs) const {
    const auto& degs = even ? even_degrees : odd_degrees;
    rhs.setZero(even ? n_even : n_odd);
    for (int l : degs) {
        const int sl = s_counts[l];
        const int w = 2 * l + 1;
        // G_l = Rad_l^T * (f .* Ang_l): (S_l x N) * (N x (2l+1))
        Eigen::MatrixXd weighted = ang.middleCols(l * l, w);
        weighted.array().colwise() *= f.array();
        Eigen::Map<Eigen::MatrixXd>(rhs.data() + block_offset[l], sl, w).noalias() =
            rad.middleCols(rad_offset[l], sl).transpose() * weighted;
    }
}

void BasisPlan::Impl::scatter_block(bool even, const BesselCoefficients& coeffs,
                                    Eigen::VectorXd& values) const {
    const auto& degs = even ? even_degrees : odd_degrees;
    values.setZero(static_cast<Eigen::Index>(flat_index.size()));
    for (int l : degs) {
        const int w = 2 * l + 1;
        // T_l = Rad_l * A_l, then row-wise dot against Ang_l
        const Eigen::MatrixXd t = rad.middleCols(rad_offset[l], s_counts[l]) * coeffs.mats[l];
        values.noalias() += t.cwiseProduct(ang.middleCols(l * l, w)).rowwise().sum();
    }
}

BasisPlan BasisPlan::build(int M, double c, int L_request) {
    return build(M, c, L_request, M / 2.0);
}

BasisPlan BasisPlan::build(int M, double c, int L_request, double R_support) {
    if (M < 8) fail(ErrorKind::config, "BasisPlan: M >= 8 required");
    if (!(c > 0.0) || c > 0.5 + 1e-12)
        fail(ErrorKind::config, "BasisPlan: bandlimit must lie in (0, 0.5] cycles per voxel");

    auto im = std::make_shared<Impl>();
    im->M = M;
    im->c = c;
    im->R_support = R_support;
    im->s_counts = truncation(c, R_support, L_request);
    if (im->s_counts.empty())
        fail(ErrorKind::config, "BasisPlan: no usable degree under the truncation criterion");
    const int L = im->L();

    int rad_cols = 0;
    for (int l = 0; l <= L; ++l) {
        im->zeros.push_back(bessel_zeros(l, im->s_counts[l]));
        im->rad_offset.push_back(rad_cols);
        rad_cols += im->s_counts[l];
    }
    im->block_offset.assign(L + 1, 0);
    for (int l = 0; l <= L; ++l) {
        const int cols = im->s_counts[l] * (2 * l + 1);
        if (l % 2 == 0) {
            im->even_degrees.push_back(l);
            im->block_offset[l] = im->n_even;
            im->n_even += cols;
        } else {
            im->odd_degrees.push_back(l);
            im->block_offset[l] = im->n_odd;
            im->n_odd += cols;
        }
    }

    // enumerate grid frequencies with |k| <= c (k = f / M cycles per voxel)
    const int half = M / 2;
    const double r2max = c * c * M * M * (1.0 + 1e-14);
    for (int f1 = -half; f1 < half; ++f1)
        for (int f2 = -half; f2 < half; ++f2)
            for (int f3 = -half; f3 < half; ++f3) {
                const double r2 = double(f1) * f1 + double(f2) * f2 + double(f3) * f3;
                if (r2 > r2max) continue;
                const std::size_t flat =
                    (static_cast<std::size_t>((f1 + M) % M) * M + (f2 + M) % M) * M + (f3 + M) % M;
                im->flat_index.push_back(flat);
                im->phase.push_back(((f1 + f2 + f3) % 2 == 0) ? 1.0 : -1.0);
            }
    const std::size_t n_pts = im->flat_index.size();

    // per-point radial and angular factors
    im->rad.resize(static_cast<Eigen::Index>(n_pts), rad_cols);
    im->ang.resize(static_cast<Eigen::Index>(n_pts), (L + 1) * (L + 1));
    std::vector<double> norm_const(rad_cols);
    for (int l = 0; l <= L; ++l) {
        const double parity_sign = (l / 2) % 2 == 0 ? 1.0 : -1.0; // real part of i^l (even) or i^l/i (odd)
        for (int s = 0; s < im->s_counts[l]; ++s) {
            const double z = im->zeros[l][s];
            norm_const[im->rad_offset[l] + s] =
                parity_sign / (c * std::sqrt(M_PI) * std::abs(sph_bessel(l + 1, z)));
        }
    }
    {
        std::size_t q = 0;
        Eigen::VectorXd sh;
        for (int f1 = -half; f1 < half; ++f1)
            for (int f2 = -half; f2 < half; ++f2)
                for (int f3 = -half; f3 < half; ++f3) {
                    const double r2 = double(f1) * f1 + double(f2) * f2 + double(f3) * f3;
                    if (r2 > r2max) continue;
                    const double k = std::sqrt(r2) / M;
                    Eigen::Vector3d u(0.0, 0.0, 1.0);
                    if (r2 > 0.0) u = Eigen::Vector3d(f1, f2, f3) / std::sqrt(r2);
                    real_sph_harm(L, u, sh);
                    im->ang.row(static_cast<Eigen::Index>(q)) = sh.transpose();
                    for (int l = 0; l <= L; ++l)
                        for (int s = 0; s < im->s_counts[l]; ++s) {
                            const int col = im->rad_offset[l] + s;
                            im->rad(static_cast<Eigen::Index>(q), col) =
                                norm_const[col] * sph_bessel(l, im->zeros[l][s] * k / c);
                        }
                    ++q;
                }
    }

    // normal matrices per parity block, assembled in point chunks
    for (bool even : {true, false}) {
        const int n = even ? im->n_even : im->n_odd;
        if (n == 0) continue;
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
        const std::size_t chunk = 4096;
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(std::min(chunk, n_pts)), n);
        for (std::size_t lo = 0; lo < n_pts; lo += chunk) {
            const std::size_t hi = std::min(lo + chunk, n_pts);
            if (static_cast<std::size_t>(rows.rows()) != hi - lo)
                rows.resize(static_cast<Eigen::Index>(hi - lo), n);
            im->fill_block_rows(even, lo, hi, rows);
            normal.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose(), 1.0);
        }
        normal = normal.selfadjointView<Eigen::Lower>();
        const double ridge = 1e-10 * normal.trace() / n;
        normal.diagonal().array() += ridge;
        auto& llt = even ? im->llt_even : im->llt_odd;
        llt.compute(normal);
        if (llt.info() != Eigen::Success)
            fail(ErrorKind::degenerate, "BasisPlan: normal matrix factorization failed");
    }

    // FFTW plans reusable on caller buffers of any alignment
    {
        std::vector<std::complex<double>> tmp(static_cast<std::size_t>(M) * M * M);
        auto* ptr = reinterpret_cast<fftw_complex*>(tmp.data());
        im->fwd = fftw_plan_dft_3d(M, M, M, ptr, ptr, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        im->bwd = fftw_plan_dft_3d(M, M, M, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!im->fwd || !im->bwd) fail(ErrorKind::degenerate, "BasisPlan: FFTW plan creation failed");
    }

    BasisPlan plan;
    plan.impl_ = std::move(im);
    return plan;
}

int BasisPlan::grid_size() const { return impl_->M; }
double BasisPlan::bandlimit() const { return impl_->c; }
double BasisPlan::support_radius() const { return impl_->R_support; }
int BasisPlan::max_degree() const { return impl_->L(); }
const std::vector<int>& BasisPlan::radial_counts() const { return impl_->s_counts; }
const std::vector<std::vector<double>>& BasisPlan::radial_zeros() const { return impl_->zeros; }
std::size_t BasisPlan::point_count() const { return impl_->flat_index.size(); }

BesselCoefficients BasisPlan::zero_coefficients() const {
    BesselCoefficients out;
    for (int l = 0; l <= impl_->L(); ++l)
        out.mats.push_back(Eigen::MatrixXd::Zero(impl_->s_counts[l], 2 * l + 1));
    return out;
}

BesselCoefficients BasisPlan::expand(const VolumeGrid& volume) const {
    const Impl& im = *impl_;
    if (volume.M != im.M)
        fail(ErrorKind::config, "expand: volume size does not match plan");

    std::vector<std::complex<double>> buf(volume.size());
    for (std::size_t i = 0; i < volume.size(); ++i) buf[i] = volume.data[i];
    auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(im.fwd, ptr, ptr);

    const auto n_pts = static_cast<Eigen::Index>(im.flat_index.size());
    Eigen::VectorXd re(n_pts), imag(n_pts);
    for (Eigen::Index q = 0; q < n_pts; ++q) {
        const std::complex<double> v = im.phase[q] * buf[im.flat_index[q]];
        re(q) = v.real();
        imag(q) = v.imag();
    }

    BesselCoefficients out = zero_coefficients();
    out.voxel_size = volume.voxel_size;
    Eigen::VectorXd rhs;
    for (bool even : {true, false}) {
        if ((even ? im.n_even : im.n_odd) == 0) continue;
        im.gather_block(even, even ? re : imag, rhs);
        const Eigen::VectorXd sol = (even ? im.llt_even : im.llt_odd).solve(rhs);
        for (int l : even ? im.even_degrees : im.odd_degrees)
            out.mats[l] = Eigen::Map<const Eigen::MatrixXd>(sol.data() + im.block_offset[l],
                                                            im.s_counts[l], 2 * l + 1);
    }
    return out;
}

VolumeGrid BasisPlan::synthesize(const BesselCoefficients& coeffs, double* imag_residual) const {
    const Impl& im = *impl_;
    if (coeffs.degrees() != im.L() + 1)
        fail(ErrorKind::config, "synthesize: coefficient degree count does not match plan");
    for (int l = 0; l <= im.L(); ++l)
        if (coeffs.mats[l].rows() != im.s_counts[l] || coeffs.mats[l].cols() != 2 * l + 1)
            fail(ErrorKind::config, "synthesize: coefficient matrix shape mismatch at degree " +
                                        std::to_string(l));

    Eigen::VectorXd re, imag;
    im.scatter_block(true, coeffs, re);
    im.scatter_block(false, coeffs, imag);

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(im.M) * im.M * im.M,
                                          std::complex<double>(0.0, 0.0));
    const auto n_pts = static_cast<Eigen::Index>(im.flat_index.size());
    for (Eigen::Index q = 0; q < n_pts; ++q)
        buf[im.flat_index[q]] = im.phase[q] * std::complex<double>(re(q), imag(q));

    auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(im.bwd, ptr, ptr);

    VolumeGrid vol(im.M, coeffs.voxel_size);
    const double scale = 1.0 / static_cast<double>(vol.size());
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < vol.size(); ++i) {
        const std::complex<double> v = scale * buf[i];
        vol.data[i] = v.real();
        max_re = std::max(max_re, std::abs(v.real()));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    if (imag_residual)
        *imag_residual = max_re > 0.0 ? max_im / max_re : max_im;
    return vol;
}

} // namespace momrec
