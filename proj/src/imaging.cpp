#include "momrec/imaging.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "momrec/errors.hpp"
#include "momrec/parallel.hpp"
#include "shepp_logan_table.hpp"

namespace momrec {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;

// Integral of exp(-(t-c)^2 / (2 kappa^2)) over [lo, hi].
inline double gauss_segment(double lo, double hi, double c, double kappa) {
    const double s = kSqrt1_2 / kappa;
    return kappa * std::sqrt(M_PI / 2.0) * (std::erf((hi - c) * s) - std::erf((lo - c) * s));
}

} // namespace

ProjectionImage render_clean_image(const AtomSet& atoms, const Rotation& rotation, int m,
                                   double kappa) {
    if (m < 1) fail(ErrorKind::config, "render_image: m >= 1 required");
    if (!(kappa > 0.0)) fail(ErrorKind::config, "render_image: kappa must be positive");

    ProjectionImage img;
    img.m = m;
    img.kappa = kappa;
    img.sigma = 0.0;
    const int side = img.side();
    const double tau = img.tau();
    img.pixels = Eigen::MatrixXd::Zero(side, side);

    const int half = side / 2;
    std::vector<double> ex(side), ey(side);
    for (int i = 0; i < atoms.count(); ++i) {
        const Eigen::Vector2d c = project(rotation, atoms.positions[i]);
        for (int r = 0; r < side; ++r) {
            const double lo = (r - half) * tau;
            ex[r] = gauss_segment(lo, lo + tau, c.x(), kappa);
            ey[r] = gauss_segment(lo, lo + tau, c.y(), kappa);
        }
        const double w = atoms.weights[i];
        for (int r = 0; r < side; ++r) {
            if (ex[r] == 0.0) continue;
            for (int col = 0; col < side; ++col)
                img.pixels(r, col) += w * ex[r] * ey[col];
        }
    }
    return img;
}

ProjectionImage render_image(const AtomSet& atoms, const Rotation& rotation, int m,
                             double kappa, double sigma, Rng& rng) {
    if (sigma < 0.0) fail(ErrorKind::config, "render_image: sigma must be non-negative");
    ProjectionImage img = render_clean_image(atoms, rotation, m, kappa);
    img.sigma = sigma;
    if (sigma > 0.0) {
        const int side = img.side();
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
                img.pixels(r, c) += sigma * normal(rng);
    }
    return img;
}

MomentAccumulator::MomentAccumulator(int m) : m_(m) {
    if (m < 1) fail(ErrorKind::config, "MomentAccumulator: m >= 1 required");
    const long d = 1L << (2 * m);
    sum_ = Eigen::MatrixXd::Zero(d, d);
}

void MomentAccumulator::add(const ProjectionImage& image) {
    if (image.m != m_) fail(ErrorKind::config, "MomentAccumulator: image resolution mismatch");
    const Eigen::Map<const Eigen::VectorXd> v(image.pixels.data(), image.pixels.size());
    sum_.selfadjointView<Eigen::Lower>().rankUpdate(v, 1.0);
    ++n_;
}

MomentTensor MomentAccumulator::finalize(double sigma) const {
    if (n_ == 0) fail(ErrorKind::config, "MomentAccumulator: empty batch");
    MomentTensor t;
    t.m = m_;
    t.values = sum_.selfadjointView<Eigen::Lower>();
    t.values /= static_cast<double>(n_);
    t.values.diagonal().array() -= sigma * sigma;
    return t;
}

MomentTensor empirical_second_moment(const std::vector<ProjectionImage>& images, double sigma) {
    if (images.empty()) fail(ErrorKind::config, "empirical_second_moment: empty batch");
    MomentAccumulator acc(images.front().m);
    for (const auto& img : images) acc.add(img);
    return acc.finalize(sigma);
}

PopulationMoment population_second_moment_pixelated(const AtomSet& atoms, int m, double kappa,
                                                    long n_mc, Rng& rng, int threads) {
    if (n_mc < 1) fail(ErrorKind::config, "population_second_moment_pixelated: n_mc >= 1");
    const long d = 1L << (2 * m);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(d, d);

    // Per-task rotations are derived from the master rng up front so the
    // batch is reproducible; rendering is parallel, reduction is ordered.
    const long batch = 64;
    std::vector<Rotation> rots;
    std::vector<ProjectionImage> slot(batch, ProjectionImage{});
    long done = 0;
    while (done < n_mc) {
        const long nb = std::min(batch, n_mc - done);
        rots.clear();
        for (long k = 0; k < nb; ++k) rots.push_back(random_rotation(rng));
        parallel_for(static_cast<std::size_t>(nb), threads, [&](std::size_t k) {
            slot[k] = render_clean_image(atoms, rots[k], m, kappa);
        });
        for (long k = 0; k < nb; ++k) {
            const Eigen::Map<const Eigen::VectorXd> v(slot[k].pixels.data(), slot[k].pixels.size());
            sum.selfadjointView<Eigen::Lower>().rankUpdate(v, 1.0);
            const Eigen::VectorXd v2 = v.cwiseProduct(v);
            sumsq.selfadjointView<Eigen::Lower>().rankUpdate(v2, 1.0);
        }
        done += nb;
    }

    PopulationMoment out;
    out.tensor.m = m;
    out.tensor.values = sum.selfadjointView<Eigen::Lower>();
    out.tensor.values /= static_cast<double>(n_mc);
    if (n_mc > 1) {
        Eigen::MatrixXd second = sumsq.selfadjointView<Eigen::Lower>();
        second /= static_cast<double>(n_mc);
        const Eigen::MatrixXd var =
            (second - out.tensor.values.cwiseProduct(out.tensor.values)).cwiseMax(0.0);
        const Eigen::MatrixXd se = (var / static_cast<double>(n_mc)).cwiseSqrt();
        out.se_mean = se.mean();
        out.se_max = se.maxCoeff();
    }
    return out;
}

namespace {

struct Ellipsoid {
    double intensity;
    Eigen::Vector3d semi_axes;
    Eigen::Vector3d center;
    Eigen::Matrix3d rot; // world -> ellipsoid frame

    bool contains(const Eigen::Vector3d& p) const {
        const Eigen::Vector3d q = (rot * (p - center)).cwiseQuotient(semi_axes);
        return q.squaredNorm() <= 1.0;
    }
};

// z-x-z Euler rotation used by the conventional phantom table.
Eigen::Matrix3d euler_zxz(double phi_deg, double theta_deg, double psi_deg) {
    const double d2r = M_PI / 180.0;
    const double cphi = std::cos(phi_deg * d2r), sphi = std::sin(phi_deg * d2r);
    const double cth = std::cos(theta_deg * d2r), sth = std::sin(theta_deg * d2r);
    const double cpsi = std::cos(psi_deg * d2r), spsi = std::sin(psi_deg * d2r);
    Eigen::Matrix3d m;
    m << cpsi * cphi - cth * sphi * spsi, cpsi * sphi + cth * cphi * spsi, spsi * sth,
        -spsi * cphi - cth * sphi * cpsi, -spsi * sphi + cth * cphi * cpsi, cpsi * sth,
        sth * sphi, -sth * cphi, cth;
    return m;
}

std::vector<Ellipsoid> parse_shepp_logan_table() {
    std::istringstream in(detail::kSheppLoganTable);
    std::vector<Ellipsoid> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        double a0, a, b, c, x0, y0, z0, phi, theta, psi;
        if (!(row >> a0 >> a >> b >> c >> x0 >> y0 >> z0 >> phi >> theta >> psi))
            fail(ErrorKind::io, "shepp_logan_phantom: malformed parameter row: " + line);
        Ellipsoid e;
        e.intensity = a0;
        e.semi_axes = Eigen::Vector3d(a, b, c);
        e.center = Eigen::Vector3d(x0, y0, z0);
        e.rot = euler_zxz(phi, theta, psi);
        out.push_back(e);
    }
    if (out.size() != 10)
        fail(ErrorKind::io, "shepp_logan_phantom: expected 10 ellipsoids, got " + std::to_string(out.size()));
    return out;
}

} // namespace

VolumeGrid shepp_logan_phantom(int M) {
    if (M < 8) fail(ErrorKind::config, "shepp_logan_phantom: M >= 8 required");
    static const std::vector<Ellipsoid> table = parse_shepp_logan_table();

    VolumeGrid vol(M, 1.0);
    for (int x = 0; x < M; ++x) {
        for (int y = 0; y < M; ++y) {
            for (int z = 0; z < M; ++z) {
                const Eigen::Vector3d p(vol.coord(x), vol.coord(y), vol.coord(z));
                double v = 0.0;
                for (const auto& e : table)
                    if (e.contains(p)) v += e.intensity;
                vol.at(x, y, z) = v;
            }
        }
    }
    return vol;
}

VolumeGrid gaussian_blob_phantom(int M, const std::vector<GaussianBlob>& blobs) {
    if (M < 8) fail(ErrorKind::config, "gaussian_blob_phantom: M >= 8 required");
    for (const auto& b : blobs)
        if (!(b.stddev > 0.0)) fail(ErrorKind::config, "gaussian_blob_phantom: stddev must be positive");

    VolumeGrid vol(M, 1.0);
    for (int x = 0; x < M; ++x) {
        for (int y = 0; y < M; ++y) {
            for (int z = 0; z < M; ++z) {
                const Eigen::Vector3d p(vol.coord(x), vol.coord(y), vol.coord(z));
                double v = 0.0;
                for (const auto& b : blobs)
                    v += b.amplitude * std::exp(-(p - b.center).squaredNorm() / (2.0 * b.stddev * b.stddev));
                vol.at(x, y, z) = v;
            }
        }
    }
    return vol;
}

std::vector<GaussianBlob> random_blobs(int count, Rng& rng) {
    std::vector<GaussianBlob> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Eigen::Vector3d c;
        do {
            c = Eigen::Vector3d(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        } while (c.squaredNorm() > 1.0);
        GaussianBlob b;
        b.center = 0.35 * c;
        b.stddev = uniform(rng, 0.20, 0.30);
        b.amplitude = uniform(rng, 0.5, 1.5);
        out.push_back(b);
    }
    return out;
}

} // namespace momrec
