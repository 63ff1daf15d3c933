#include "momrec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "momrec/errors.hpp"

namespace momrec {

Rotation::Rotation(const Eigen::Matrix3d& m) : m_(m) {
    const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-12)
        fail(ErrorKind::config, "Rotation: matrix is not orthogonal (residual " + std::to_string(ortho) + ")");
    if (std::abs(m.determinant() - 1.0) > 1e-12)
        fail(ErrorKind::config, "Rotation: determinant is not +1");
}

Rotation Rotation::about_z(double angle) {
    Eigen::Matrix3d m;
    m << std::cos(angle), -std::sin(angle), 0.0,
         std::sin(angle),  std::cos(angle), 0.0,
         0.0, 0.0, 1.0;
    return Rotation(m);
}

Rotation Rotation::about_x(double angle) {
    Eigen::Matrix3d m;
    m << 1.0, 0.0, 0.0,
         0.0, std::cos(angle), -std::sin(angle),
         0.0, std::sin(angle),  std::cos(angle);
    return Rotation(m);
}

Rotation random_rotation(Rng& rng) {
    // Unit quaternion from four iid Gaussians; resample the (measure-zero)
    // near-null draws.
    double q0, q1, q2, q3, n2;
    do {
        q0 = normal(rng);
        q1 = normal(rng);
        q2 = normal(rng);
        q3 = normal(rng);
        n2 = q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3;
    } while (n2 < 1e-12);
    const double s = 1.0 / std::sqrt(n2);
    q0 *= s; q1 *= s; q2 *= s; q3 *= s;

    Eigen::Matrix3d m;
    m << 1 - 2 * (q2 * q2 + q3 * q3), 2 * (q1 * q2 - q0 * q3),     2 * (q1 * q3 + q0 * q2),
         2 * (q1 * q2 + q0 * q3),     1 - 2 * (q1 * q1 + q3 * q3), 2 * (q2 * q3 - q0 * q1),
         2 * (q1 * q3 - q0 * q2),     2 * (q2 * q3 + q0 * q1),     1 - 2 * (q1 * q1 + q2 * q2);
    return Rotation(m);
}

Eigen::Vector2d project(const Rotation& rotation, const Eigen::Vector3d& point) {
    return (rotation.matrix() * point).head<2>();
}

AtomSet::AtomSet(std::vector<Eigen::Vector3d> pos, std::vector<double> w)
    : positions(std::move(pos)), weights(std::move(w)) {
    if (positions.size() != weights.size())
        fail(ErrorKind::config, "AtomSet: positions and weights differ in length");
    for (double wi : weights)
        if (!(wi > 0.0))
            fail(ErrorKind::config, "AtomSet: weights must be strictly positive");

    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return positions[a].squaredNorm() > positions[b].squaredNorm();
    });
    std::vector<Eigen::Vector3d> p2(positions.size());
    std::vector<double> w2(weights.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        p2[k] = positions[order[k]];
        w2[k] = weights[order[k]];
    }
    positions = std::move(p2);
    weights = std::move(w2);
}

AtomSet AtomSet::random(int p, Rng& rng, double radius, double w_lo, double w_hi) {
    if (p < 0) fail(ErrorKind::config, "AtomSet::random: p must be non-negative");
    std::vector<Eigen::Vector3d> pos;
    std::vector<double> w;
    pos.reserve(p);
    w.reserve(p);
    for (int i = 0; i < p; ++i) {
        Eigen::Vector3d v;
        do {
            v = Eigen::Vector3d(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        } while (v.squaredNorm() > 1.0);
        pos.push_back(radius * v);
        w.push_back(uniform(rng, w_lo, w_hi));
    }
    return AtomSet(std::move(pos), std::move(w));
}

AtomSet rotated(const AtomSet& atoms, const Eigen::Matrix3d& transform) {
    std::vector<Eigen::Vector3d> pos;
    pos.reserve(atoms.positions.size());
    for (const auto& a : atoms.positions) pos.push_back(transform * a);
    return AtomSet(std::move(pos), atoms.weights);
}

GenericityReport check_genericity(const AtomSet& atoms, double tol) {
    if (atoms.count() < 1)
        fail(ErrorKind::config, "check_genericity: need at least one atom");
    GenericityReport rep;
    rep.min_sin_angle = 1.0;
    rep.min_norm_gap = std::numeric_limits<double>::infinity();
    const int p = atoms.count();
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            const Eigen::Vector3d& a = atoms.positions[i];
            const Eigen::Vector3d& b = atoms.positions[j];
            const double na = a.norm(), nb = b.norm();
            // sine of the angle between the pair; 0 when either is null
            double s = 0.0;
            if (na > 0.0 && nb > 0.0) s = a.cross(b).norm() / (na * nb);
            rep.min_sin_angle = std::min(rep.min_sin_angle, s);
            rep.min_norm_gap = std::min(rep.min_norm_gap, std::abs(na - nb));
        }
    }
    if (p == 1) {
        rep.min_sin_angle = 1.0;
        rep.min_norm_gap = std::numeric_limits<double>::infinity();
    }
    rep.a1_ok = rep.min_sin_angle > tol;
    rep.a2_ok = rep.min_norm_gap > tol;
    return rep;
}

AlignResult align(const std::vector<Eigen::Vector3d>& source,
                  const std::vector<Eigen::Vector3d>& target) {
    if (source.size() != target.size())
        fail(ErrorKind::config, "align: point lists differ in length");
    if (source.size() < 3)
        fail(ErrorKind::config, "align: need at least 3 points");

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t k = 0; k < source.size(); ++k)
        h += target[k] * source[k].transpose();

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    AlignResult res;
    res.transform = svd.matrixU() * svd.matrixV().transpose();
    const auto& sv = svd.singularValues();
    res.degenerate = sv(2) <= 1e-12 * std::max(sv(0), 1e-300);

    double ss = 0.0;
    for (std::size_t k = 0; k < source.size(); ++k)
        ss += (res.transform * source[k] - target[k]).squaredNorm();
    res.rmsd = std::sqrt(ss / static_cast<double>(source.size()));
    return res;
}

AlignResult align(const AtomSet& source, const AtomSet& target) {
    return align(source.positions, target.positions);
}

void write_atoms(const std::string& path, const AtomSet& atoms) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "write_atoms: cannot open " + path);
    out << "# atom table: x y z w\n";
    char buf[160];
    for (int i = 0; i < atoms.count(); ++i) {
        const auto& a = atoms.positions[i];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g\n", a.x(), a.y(), a.z(), atoms.weights[i]);
        out << buf;
    }
    if (!out) fail(ErrorKind::io, "write_atoms: write failed for " + path);
}

AtomSet read_atoms(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "read_atoms: cannot open " + path);
    std::vector<Eigen::Vector3d> pos;
    std::vector<double> w;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        double x, y, z, wi;
        if (!(ss >> x >> y >> z >> wi))
            fail(ErrorKind::io, "read_atoms: malformed row at " + path + ":" + std::to_string(lineno));
        pos.emplace_back(x, y, z);
        w.push_back(wi);
    }
    return AtomSet(std::move(pos), std::move(w));
}

} // namespace momrec
