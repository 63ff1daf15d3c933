#include "momrec/point_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "momrec/errors.hpp"

namespace momrec {

InterpolationResult interpolate_triple(const PairSamples& samples) {
    const int n = static_cast<int>(samples.points.size());
    if (n < 4)
        fail(ErrorKind::config, "interpolate_triple: need at least 4 samples");

    Eigen::MatrixXd m(n, 5);
    for (int k = 0; k < n; ++k) {
        const double x1 = samples.points[k](0), y1 = samples.points[k](1);
        const double x2 = samples.points[k](2), y2 = samples.points[k](3);
        m(k, 0) = 1.0;
        m(k, 1) = x1 * x1 + y1 * y1;
        m(k, 2) = x2 * x2 + y2 * y2;
        m(k, 3) = x1 * x2 + y1 * y2;
        m(k, 4) = x1 * x1 * y2 * y2 + y1 * y1 * x2 * x2 - 2.0 * x1 * y1 * x2 * y2;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double scale = std::max(sv(0), std::numeric_limits<double>::min());

    // rank must be exactly 4: four significant values, one negligible
    const double rank_tol = 1e-10;
    int rank = 0;
    for (int k = 0; k < 5; ++k)
        if (sv(k) > rank_tol * scale) ++rank;
    if (rank != 4)
        fail(ErrorKind::degenerate,
             "interpolate_triple: sample matrix has numerical rank " + std::to_string(rank) +
                 ", expected 4 (degenerate samples or linearly dependent atoms)");

    Eigen::VectorXd kernel = svd.matrixV().col(4);
    if (std::abs(kernel(4)) < 1e-12)
        fail(ErrorKind::degenerate, "interpolate_triple: kernel vector has vanishing quartic coefficient");
    kernel /= kernel(4);

    InterpolationResult res;
    res.triple = PairTriple(-kernel(2), -kernel(1), kernel(3) / 2.0);
    res.sigma4_over_sigma5 = sv(4) > 0.0 ? sv(3) / sv(4) : std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const auto& p : samples.points)
        worst = std::max(worst, std::abs(quartic_eval(res.triple, p)));
    res.max_residual = worst;
    return res;
}

namespace {

// Clusters the 2*|triples| squared norms into p groups of size p-1 each.
// Returns the descending group means and, per triple, the group index of
// each of its two norms.
struct NormClusters {
    std::vector<double> means; // descending
    std::vector<std::pair<int, int>> assignment;
};

NormClusters cluster_norms(const std::vector<KeyedTriple>& triples, double rel_tol) {
    const std::size_t n_pairs = triples.size();
    // p from p(p-1)/2 = n_pairs
    const int p = static_cast<int>(std::lround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(n_pairs))) / 2.0));
    if (p < 2 || static_cast<std::size_t>(p) * (p - 1) / 2 != n_pairs)
        fail(ErrorKind::config, "assemble_gram: triple count is not p(p-1)/2 for any p");

    struct Entry {
        double value;
        int triple_idx;
        int slot; // 0 = norm_sq_i, 1 = norm_sq_j
    };
    std::vector<Entry> entries;
    entries.reserve(2 * n_pairs);
    for (std::size_t t = 0; t < n_pairs; ++t) {
        entries.push_back({triples[t].triple.norm_sq_i, static_cast<int>(t), 0});
        entries.push_back({triples[t].triple.norm_sq_j, static_cast<int>(t), 1});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value > b.value; });

    const double scale = std::max(entries.front().value, 1e-300);
    const double tol = rel_tol * scale;

    NormClusters out;
    out.assignment.assign(n_pairs, {-1, -1});
    std::size_t k = 0;
    while (k < entries.size()) {
        // one cluster = one atom's squared norm, appearing p-1 times
        std::size_t end = k + 1;
        while (end < entries.size() && entries[k].value - entries[end].value <= tol) ++end;
        const std::size_t size = end - k;
        if (size != static_cast<std::size_t>(p - 1)) {
            if (size > static_cast<std::size_t>(p - 1))
                fail(ErrorKind::degenerate,
                     "assemble_gram: squared-norm collision within tolerance (descending-norm "
                     "indexing requires distinct norms)");
            fail(ErrorKind::inconsistency,
                 "assemble_gram: squared norms disagree across triples for the same atom");
        }
        double mean = 0.0;
        for (std::size_t q = k; q < end; ++q) mean += entries[q].value;
        mean /= static_cast<double>(size);
        const int group = static_cast<int>(out.means.size());
        out.means.push_back(mean);
        for (std::size_t q = k; q < end; ++q) {
            auto& slot_pair = out.assignment[entries[q].triple_idx];
            (entries[q].slot == 0 ? slot_pair.first : slot_pair.second) = group;
        }
        k = end;
    }
    if (static_cast<int>(out.means.size()) != p)
        fail(ErrorKind::inconsistency, "assemble_gram: norm clustering did not produce p groups");
    return out;
}

} // namespace

GramAssembly assemble_gram(const std::vector<KeyedTriple>& triples, double rel_tol) {
    const NormClusters clusters = cluster_norms(triples, rel_tol);
    const int p = static_cast<int>(clusters.means.size());

    GramAssembly out;
    out.norms_sq = clusters.means;
    out.gram = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) out.gram(i, i) = clusters.means[i];

    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(p, p);
    int max_label = -1;
    for (const auto& t : triples) max_label = std::max({max_label, t.i, t.j});
    out.index_of_label.assign(max_label + 1, -1);

    for (std::size_t t = 0; t < triples.size(); ++t) {
        const auto [gi, gj] = clusters.assignment[t];
        if (gi == gj)
            fail(ErrorKind::degenerate, "assemble_gram: a triple matched one atom twice (norm collision)");
        if (seen(gi, gj))
            fail(ErrorKind::inconsistency, "assemble_gram: two triples map to the same atom pair");
        seen(gi, gj) = seen(gj, gi) = 1;
        out.gram(gi, gj) = out.gram(gj, gi) = triples[t].triple.inner;

        auto bind = [&](int label, int group) {
            int& slot = out.index_of_label[label];
            if (slot == -1) slot = group;
            else if (slot != group)
                fail(ErrorKind::inconsistency,
                     "assemble_gram: oracle label maps to two different atoms across triples");
        };
        bind(triples[t].i, gi);
        bind(triples[t].j, gj);
    }
    return out;
}

Eigen::Matrix3Xd factor_gram(const Eigen::MatrixXd& gram) {
    if (gram.rows() != gram.cols())
        fail(ErrorKind::config, "factor_gram: matrix is not square");
    const Eigen::MatrixXd sym = 0.5 * (gram + gram.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        fail(ErrorKind::degenerate, "factor_gram: eigendecomposition failed");

    const int p = static_cast<int>(gram.rows());
    Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Zero(3, p);
    // eigenvalues ascend; take the top three, clamped at zero
    for (int r = 0; r < 3 && r < p; ++r) {
        const int idx = p - 1 - r;
        const double lam = std::max(eig.eigenvalues()(idx), 0.0);
        a.row(r) = std::sqrt(lam) * eig.eigenvectors().col(idx).transpose();
    }
    return a;
}

std::vector<double> recover_weights(const WeightProducts& products) {
    const int p = static_cast<int>(products.offdiag.rows());
    if (products.offdiag.cols() != p)
        fail(ErrorKind::config, "recover_weights: matrix is not square");
    if (p < 3)
        fail(ErrorKind::config, "recover_weights: p >= 3 required");

    const auto& ww = products.offdiag;
    std::vector<double> w(p, 0.0);
    for (int i = 0; i < p; ++i) {
        double acc = 0.0;
        int count = 0;
        for (int j = 0; j < p; ++j) {
            if (j == i) continue;
            for (int jp = 0; jp < p; ++jp) {
                if (jp == i || jp == j) continue;
                const double denom = ww(j, jp);
                if (denom == 0.0)
                    fail(ErrorKind::inconsistency, "recover_weights: zero off-diagonal product");
                acc += ww(i, jp) * ww(j, i) / denom;
                ++count;
            }
        }
        const double diag = acc / static_cast<double>(count);
        if (!(diag > 0.0))
            fail(ErrorKind::inconsistency, "recover_weights: completed diagonal entry is not positive");
        w[i] = std::sqrt(diag);
    }
    return w;
}

RecoveryResult recover(const MomentOracle& oracle, Rng& rng, int samples_per_pair) {
    const int p = oracle.atom_count();
    if (p < 3)
        fail(ErrorKind::config, "recover: p >= 3 required");

    // O1: sample and interpolate every unordered pair
    std::vector<KeyedTriple> triples;
    std::vector<InterpolationResult> interp;
    triples.reserve(p * (p - 1) / 2);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            const PairSamples s = oracle.sample(i, j, samples_per_pair, rng);
            InterpolationResult r = interpolate_triple(s);
            triples.push_back({i, j, r.triple});
            interp.push_back(r);
        }
    }

    GramAssembly assembly = assemble_gram(triples);
    const Eigen::Matrix3Xd a = factor_gram(assembly.gram);

    // O2: off-diagonal weight products, re-indexed to the recovered order
    WeightProducts products;
    products.offdiag = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            const double m = oracle.measure(i, j);
            const int gi = assembly.index_of_label[i];
            const int gj = assembly.index_of_label[j];
            products.offdiag(gi, gj) = products.offdiag(gj, gi) = m;
        }
    }
    const std::vector<double> w = recover_weights(products);

    std::vector<Eigen::Vector3d> pos(p);
    for (int i = 0; i < p; ++i) pos[i] = a.col(i);

    RecoveryResult out{AtomSet(std::move(pos), w), {}};
    out.report.gram_factor_residual = (a.transpose() * a - assembly.gram).norm();
    out.report.oracle_sample_calls = oracle.sample_calls();
    out.report.oracle_measure_calls = oracle.measure_calls();
    {
        std::size_t t = 0;
        for (int i = 0; i < p; ++i) {
            for (int j = i + 1; j < p; ++j, ++t) {
                PairDiagnostic d;
                d.label_i = i;
                d.label_j = j;
                d.atom_i = assembly.index_of_label[i];
                d.atom_j = assembly.index_of_label[j];
                d.sigma4_over_sigma5 = interp[t].sigma4_over_sigma5;
                d.max_residual = interp[t].max_residual;
                out.report.pairs.push_back(d);
            }
        }
    }

    // validation against the simulated ground truth
    const AtomSet& truth = oracle.truth();
    if (truth.count() == p) {
        const AlignResult al = align(out.atoms, truth);
        out.report.has_truth = true;
        out.report.align_rmsd = al.rmsd;
        double worst = 0.0;
        for (int i = 0; i < p; ++i)
            worst = std::max(worst, std::abs(out.atoms.weights[i] - truth.weights[i]) / truth.weights[i]);
        out.report.weight_max_rel_error = worst;
    }
    return out;
}

std::string RecoveryReport::to_json() const {
    nlohmann::json j;
    j["gram_factor_residual"] = gram_factor_residual;
    j["oracle_sample_calls"] = oracle_sample_calls;
    j["oracle_measure_calls"] = oracle_measure_calls;
    nlohmann::json pj = nlohmann::json::array();
    for (const auto& d : pairs) {
        pj.push_back({{"label_i", d.label_i},
                      {"label_j", d.label_j},
                      {"atom_i", d.atom_i},
                      {"atom_j", d.atom_j},
                      {"sigma4_over_sigma5", d.sigma4_over_sigma5},
                      {"max_residual", d.max_residual}});
    }
    j["pairs"] = pj;
    if (has_truth) {
        j["align_rmsd"] = align_rmsd;
        j["weight_max_rel_error"] = weight_max_rel_error;
    }
    return j.dump(2);
}

} // namespace momrec
