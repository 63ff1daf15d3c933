#include "momrec/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "momrec/errors.hpp"

namespace momrec {

PairTriple::PairTriple(double u, double v, double c) : norm_sq_i(u), norm_sq_j(v), inner(c) {
    if (u < 0.0 || v < 0.0)
        fail(ErrorKind::config, "PairTriple: squared norms must be non-negative");
    // Cauchy-Schwarz with slack for interpolation roundoff.
    if (c * c > u * v * (1.0 + 1e-9) + 1e-12)
        fail(ErrorKind::inconsistency, "PairTriple: inner product violates Cauchy-Schwarz");
}

double quartic_eval(const PairTriple& t, const Eigen::Vector4d& p) {
    const double x1 = p(0), y1 = p(1), x2 = p(2), y2 = p(3);
    const double u = t.norm_sq_i, v = t.norm_sq_j, c = t.inner;
    return (u * v - c * c)
         - v * (x1 * x1 + y1 * y1)
         - u * (x2 * x2 + y2 * y2)
         + 2.0 * c * (x1 * x2 + y1 * y2)
         + x1 * x1 * y2 * y2 + y1 * y1 * x2 * x2 - 2.0 * x1 * y1 * x2 * y2;
}

namespace {

void require_pair(const AtomSet& atoms, int i, int j, const char* where) {
    const int p = atoms.count();
    if (i < 0 || j < 0 || i >= p || j >= p)
        fail(ErrorKind::config, std::string(where) + ": atom index out of range");
    if (i == j)
        fail(ErrorKind::config, std::string(where) + ": i == j is not a valid pair");
}

} // namespace

PairTriple triple_of(const AtomSet& atoms, int i, int j) {
    require_pair(atoms, i, j, "triple_of");
    const auto& a = atoms.positions[i];
    const auto& b = atoms.positions[j];
    return PairTriple(a.squaredNorm(), b.squaredNorm(), a.dot(b));
}

PairSamples sample_pair_manifold(const AtomSet& atoms, int i, int j, int count, Rng& rng) {
    require_pair(atoms, i, j, "sample_pair_manifold");
    if (count < 4)
        fail(ErrorKind::config, "sample_pair_manifold: need at least 4 samples");
    PairSamples out;
    out.i = i;
    out.j = j;
    out.points.reserve(count);
    for (int k = 0; k < count; ++k) {
        const Rotation r = random_rotation(rng);
        const Eigen::Vector2d p1 = project(r, atoms.positions[i]);
        const Eigen::Vector2d p2 = project(r, atoms.positions[j]);
        out.points.emplace_back(p1.x(), p1.y(), p2.x(), p2.y());
    }
    return out;
}

double pair_measure(const AtomSet& atoms, int i, int j) {
    require_pair(atoms, i, j, "pair_measure");
    return atoms.weights[i] * atoms.weights[j];
}

double montecarlo_pair_measure(const AtomSet& atoms, int i, int j, long n, double band, Rng& rng) {
    require_pair(atoms, i, j, "montecarlo_pair_measure");
    if (n < 1) fail(ErrorKind::config, "montecarlo_pair_measure: n must be >= 1");
    if (!(band > 0.0)) fail(ErrorKind::config, "montecarlo_pair_measure: band must be positive");

    const PairTriple target = triple_of(atoms, i, j);
    const double ri2 = target.norm_sq_i + 1e-12;
    const double rj2 = target.norm_sq_j + 1e-12;
    const int p = atoms.count();

    double acc = 0.0;
    for (long k = 0; k < n; ++k) {
        const Rotation r = random_rotation(rng);
        // project every atom once per rotation
        std::vector<Eigen::Vector2d> proj(p);
        for (int a = 0; a < p; ++a) proj[a] = project(r, atoms.positions[a]);
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                const Eigen::Vector4d pt(proj[a].x(), proj[a].y(), proj[b].x(), proj[b].y());
                if (pt(0) * pt(0) + pt(1) * pt(1) > ri2) continue;
                if (pt(2) * pt(2) + pt(3) * pt(3) > rj2) continue;
                if (std::abs(quartic_eval(target, pt)) <= band)
                    acc += atoms.weights[a] * atoms.weights[b];
            }
        }
    }
    return acc / static_cast<double>(n);
}

void write_pair_samples(const std::string& path, const std::vector<PairSamples>& samples) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "write_pair_samples: cannot open " + path);
    out << "# pair manifold samples: i j x1 y1 x2 y2\n";
    char buf[200];
    for (const auto& ps : samples) {
        for (const auto& p : ps.points) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g\n",
                          ps.i, ps.j, p(0), p(1), p(2), p(3));
            out << buf;
        }
    }
    if (!out) fail(ErrorKind::io, "write_pair_samples: write failed for " + path);
}

} // namespace momrec
