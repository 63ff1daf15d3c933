#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "momrec/oracle.hpp"

namespace momrec {

struct InterpolationResult {
    PairTriple triple;
    double sigma4_over_sigma5 = 0.0; // rank-4 margin of the sample matrix
    double max_residual = 0.0;       // max |quartic| over the input samples
};

/// Recovers a pair's (norm_sq_i, norm_sq_j, inner) from >= 4 manifold
/// samples. Builds the |samples| x 5 matrix with rows
///   [1, x1^2+y1^2, x2^2+y2^2, x1 x2 + y1 y2, x1^2 y2^2 + y1^2 x2^2 - 2 x1 y1 x2 y2],
/// whose kernel is spanned by (uv - c^2, -v, -u, 2c, 1); the kernel vector
/// is read off after normalizing its last entry to 1. Degenerate sample
/// sets (numerical rank != 4) are rejected.
InterpolationResult interpolate_triple(const PairSamples& samples);

/// A pair triple tagged with the oracle's (arbitrary) pair labels.
struct KeyedTriple {
    int i = 0;
    int j = 0;
    PairTriple triple;
};

struct GramAssembly {
    Eigen::MatrixXd gram;              // p x p, atoms indexed by descending norm
    std::vector<double> norms_sq;      // descending, one per atom
    std::vector<int> index_of_label;   // oracle atom label -> gram index
};

/// Assembles the Gram matrix from the triples of all unordered pairs.
/// Atom identities are NOT taken from the labels: the multiset of squared
/// norms is clustered by value (each atom's norm shows up in p-1 triples),
/// sorted descending, and inner products are placed by matching each
/// triple's two norms. Inconsistent norms or norm collisions are errors.
GramAssembly assemble_gram(const std::vector<KeyedTriple>& triples, double rel_tol = 1e-6);

/// Rank-3 factor of a symmetric Gram matrix: top-3 eigenpairs with
/// negative eigenvalues clamped to zero; returns sqrt(D) * Q^T (3 x p).
/// The orthogonal factor is fixed to the identity; downstream comparisons
/// must align.
Eigen::Matrix3Xd factor_gram(const Eigen::MatrixXd& gram);

/// Off-diagonal entries of w w^T; the diagonal is unknown until completed.
struct WeightProducts {
    Eigen::MatrixXd offdiag; // p x p, diagonal entries ignored
};

/// Completes the diagonal of w w^T through
///   (w w^T)_ii = (w w^T)_ij' (w w^T)_ji / (w w^T)_jj'
/// averaged over all valid (j, j') choices, then returns the square root
/// of the diagonal. Requires p >= 3.
std::vector<double> recover_weights(const WeightProducts& products);

struct PairDiagnostic {
    int label_i = 0, label_j = 0; // oracle labels
    int atom_i = 0, atom_j = 0;   // recovered indices
    double sigma4_over_sigma5 = 0.0;
    double max_residual = 0.0;
};

struct RecoveryReport {
    std::vector<PairDiagnostic> pairs;
    double gram_factor_residual = 0.0; // ||A^T A - G||_F
    long oracle_sample_calls = 0;
    long oracle_measure_calls = 0;
    // filled when ground truth is available
    bool has_truth = false;
    double align_rmsd = 0.0;
    double weight_max_rel_error = 0.0;

    std::string to_json() const;
};

struct RecoveryResult {
    AtomSet atoms;
    RecoveryReport report;
};

/// Full recovery from oracle access: samples every unordered pair,
/// interpolates the triples, assembles and factors the Gram matrix, and
/// completes the weight products. The result equals the hidden atoms up
/// to one global orthogonal transform.
RecoveryResult recover(const MomentOracle& oracle, Rng& rng, int samples_per_pair = 20);

} // namespace momrec
