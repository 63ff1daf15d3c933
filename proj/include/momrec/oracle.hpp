#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "momrec/geometry.hpp"
#include "momrec/rng.hpp"

namespace momrec {

/// The three scalars that determine a pair manifold: squared norms of the
/// two atoms and their inner product.
struct PairTriple {
    double norm_sq_i = 0.0;
    double norm_sq_j = 0.0;
    double inner = 0.0;

    PairTriple() = default;
    PairTriple(double u, double v, double c);
};

/// Simultaneous-projection samples ((x1,y1),(x2,y2)) of one atom pair over
/// random rotations. All lie on the pair's quartic manifold.
struct PairSamples {
    int i = 0;
    int j = 0;
    std::vector<Eigen::Vector4d> points; // (x1, y1, x2, y2)
};

/// The defining quartic of a pair manifold, in expanded form:
///   (uv - c^2) - v(x1^2+y1^2) - u(x2^2+y2^2) + 2c(x1 x2 + y1 y2)
///   + x1^2 y2^2 + y1^2 x2^2 - 2 x1 y1 x2 y2,
/// with u, v the squared norms and c the inner product. Vanishes exactly on
/// the manifold.
double quartic_eval(const PairTriple& triple, const Eigen::Vector4d& point);

PairTriple triple_of(const AtomSet& atoms, int i, int j);

/// Simultaneous projection of atoms i and j under `count` independent
/// Haar rotations. Rejects i == j.
PairSamples sample_pair_manifold(const AtomSet& atoms, int i, int j, int count, Rng& rng);

/// Exact manifold mass: w_i * w_j. Rejects i == j (the diagonal carries no
/// pair information).
double pair_measure(const AtomSet& atoms, int i, int j);

/// Monte-Carlo estimate of the mass that the full second-moment measure
/// places near the (i,j) manifold: pushforward samples from every ordered
/// atom pair are counted when |q_ij| <= band and both disc inequalities
/// hold, weighted by their pair's w_i' * w_j'. Converges to w_i * w_j as
/// n grows and band shrinks.
double montecarlo_pair_measure(const AtomSet& atoms, int i, int j, long n, double band, Rng& rng);

/// Oracle access for the point-mass recovery algorithm: generic samples on
/// each pair manifold and the measure of each manifold. Simulated from a
/// hidden ground-truth atom set; calls are counted so complexity claims
/// can be tested on call counts rather than wall time.
class MomentOracle {
public:
    explicit MomentOracle(AtomSet hidden) : hidden_(std::move(hidden)) {}

    int atom_count() const { return hidden_.count(); }

    PairSamples sample(int i, int j, int count, Rng& rng) const {
        ++sample_calls_;
        return sample_pair_manifold(hidden_, i, j, count, rng);
    }

    double measure(int i, int j) const {
        ++measure_calls_;
        return pair_measure(hidden_, i, j);
    }

    long sample_calls() const { return sample_calls_; }
    long measure_calls() const { return measure_calls_; }

    /// Ground truth, for validation reports only.
    const AtomSet& truth() const { return hidden_; }

private:
    AtomSet hidden_;
    mutable long sample_calls_ = 0;
    mutable long measure_calls_ = 0;
};

/// Plain-text rows "i j x1 y1 x2 y2".
void write_pair_samples(const std::string& path, const std::vector<PairSamples>& samples);

} // namespace momrec
