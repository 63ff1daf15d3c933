#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "momrec/errors.hpp"
#include "momrec/point_recovery.hpp"

using namespace momrec;

TEST_CASE("interpolate_triple recovers known pairs") {
    Rng rng = make_rng(61);
    {
        const AtomSet atoms({{1, 0, 0}, {0, 1, 0}}, {1, 1});
        const auto res = interpolate_triple(sample_pair_manifold(atoms, 0, 1, 20, rng));
        CHECK(res.triple.norm_sq_i == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(res.triple.norm_sq_j == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(res.triple.inner == doctest::Approx(0.0).epsilon(1e-9));
    }
    {
        const AtomSet atoms({{2, 0, 0}, {1, 1, 0}}, {1, 1});
        const auto res = interpolate_triple(sample_pair_manifold(atoms, 0, 1, 20, rng));
        CHECK(res.triple.norm_sq_i == doctest::Approx(4.0).epsilon(1e-9));
        CHECK(res.triple.norm_sq_j == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(res.triple.inner == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("kernel vector for the unit orthogonal pair is (1,-1,-1,0,1)") {
    // For norms 1,1 and inner product 0 the normalized kernel of the
    // interpolation matrix is (u v - c^2, -v, -u, 2c, 1) = (1,-1,-1,0,1);
    // the recovered triple is exactly that vector read back.
    Rng rng = make_rng(67);
    const AtomSet atoms({{1, 0, 0}, {0, 1, 0}}, {1, 1});
    const auto res = interpolate_triple(sample_pair_manifold(atoms, 0, 1, 40, rng));
    const double u = res.triple.norm_sq_i, v = res.triple.norm_sq_j, c = res.triple.inner;
    CHECK(u * v - c * c == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(-v == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(-u == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(2 * c == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("interpolation matrix has rank exactly 4 for generic pairs") {
    Rng rng = make_rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        const AtomSet atoms = AtomSet::random(2, rng);
        if (!check_genericity(atoms).a1_ok) continue;
        const auto res = interpolate_triple(sample_pair_manifold(atoms, 0, 1, 20, rng));
        CHECK(res.sigma4_over_sigma5 > 1e8);
        CHECK(res.max_residual < 1e-10);
    }
}

TEST_CASE("degenerate samples are rejected") {
    Rng rng = make_rng(73);
    // linearly dependent atoms: the manifold degenerates and the sample
    // matrix loses rank
    const AtomSet collinear({{1, 0, 0}, {2, 0, 0}}, {1, 1});
    CHECK_THROWS_AS(interpolate_triple(sample_pair_manifold(collinear, 0, 1, 20, rng)), Error);

    // duplicated points cannot span a rank-4 row space
    PairSamples dup;
    dup.i = 0;
    dup.j = 1;
    dup.points.assign(6, Eigen::Vector4d(0.3, 0.1, -0.2, 0.5));
    CHECK_THROWS_AS(interpolate_triple(dup), Error);
}

TEST_CASE("assemble_gram places triples by norm matching") {
    {
        // p = 2: one triple (4, 1, 1)
        std::vector<KeyedTriple> triples = {{0, 1, PairTriple(4.0, 1.0, 1.0)}};
        const auto asm2 = assemble_gram(triples);
        Eigen::MatrixXd expected(2, 2);
        expected << 4, 1, 1, 1;
        CHECK((asm2.gram - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
    {
        // p = 3 orthogonal atoms with norms 3, 2, 1
        std::vector<KeyedTriple> triples = {{0, 1, PairTriple(9.0, 4.0, 0.0)},
                                            {0, 2, PairTriple(9.0, 1.0, 0.0)},
                                            {1, 2, PairTriple(4.0, 1.0, 0.0)}};
        const auto asm3 = assemble_gram(triples);
        CHECK((asm3.gram - Eigen::Vector3d(9, 4, 1).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <
              1e-14);
    }
}

TEST_CASE("assemble_gram reproduces the ground-truth Gram matrix") {
    Rng rng = make_rng(79);
    const AtomSet atoms = AtomSet::random(10, rng);
    REQUIRE(check_genericity(atoms).a2_ok);

    std::vector<KeyedTriple> triples;
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j)
            triples.push_back({i, j, triple_of(atoms, i, j)});

    const auto assembly = assemble_gram(triples);
    Eigen::MatrixXd truth(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            truth(i, j) = atoms.positions[i].dot(atoms.positions[j]);
    CHECK((assembly.gram - truth).cwiseAbs().maxCoeff() < 1e-8);
    // atoms already sorted by descending norm, so labels map to themselves
    for (int i = 0; i < 10; ++i) CHECK(assembly.index_of_label[i] == i);
}

TEST_CASE("assemble_gram rejects inconsistent and colliding norms") {
    // same atom implied with two disagreeing squared norms
    std::vector<KeyedTriple> bad = {{0, 1, PairTriple(9.0, 4.0, 0.0)},
                                    {0, 2, PairTriple(8.9, 1.0, 0.0)},
                                    {1, 2, PairTriple(4.0, 1.0, 0.0)}};
    CHECK_THROWS_AS(assemble_gram(bad), Error);

    // two atoms with equal norms cannot be separated
    std::vector<KeyedTriple> tied = {{0, 1, PairTriple(4.0, 4.0, 0.1)},
                                     {0, 2, PairTriple(4.0, 1.0, 0.0)},
                                     {1, 2, PairTriple(4.0, 1.0, 0.0)}};
    CHECK_THROWS_AS(assemble_gram(tied), Error);
}

TEST_CASE("factor_gram splits simple Gram matrices") {
    {
        const Eigen::Matrix3Xd a = factor_gram(Eigen::MatrixXd::Identity(3, 3));
        CHECK((a.transpose() * a - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    }
    {
        const Eigen::Matrix3Xd a = factor_gram(Eigen::Vector3d(9, 4, 1).asDiagonal());
        CHECK(a.col(0).norm() == doctest::Approx(3.0));
        CHECK(a.col(1).norm() == doctest::Approx(2.0));
        CHECK(a.col(2).norm() == doctest::Approx(1.0));
        CHECK(std::abs(a.col(0).dot(a.col(1))) < 1e-12);
        CHECK(std::abs(a.col(0).dot(a.col(2))) < 1e-12);
        CHECK(std::abs(a.col(1).dot(a.col(2))) < 1e-12);
    }
}

TEST_CASE("factor_gram clamps small negative eigenvalues") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
    g.diagonal() << 4.0, 1.0, 1e-14, -1e-12;
    const Eigen::Matrix3Xd a = factor_gram(g);
    CHECK((a.transpose() * a - g).norm() < 1e-10);
}

TEST_CASE("recover_weights completes the rank-1 diagonal") {
    {
        Eigen::MatrixXd ww(3, 3);
        const Eigen::Vector3d w(1, 2, 3);
        ww = w * w.transpose();
        ww.diagonal().setZero(); // unknown
        const auto rec = recover_weights({ww});
        CHECK(rec[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rec[1] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(rec[2] == doctest::Approx(3.0).epsilon(1e-12));
    }
    {
        Rng rng = make_rng(83);
        Eigen::VectorXd w(10);
        for (int i = 0; i < 10; ++i) w(i) = uniform(rng, 0.5, 2.0);
        Eigen::MatrixXd ww = w * w.transpose();
        ww.diagonal().setZero();
        const auto rec = recover_weights({ww});
        for (int i = 0; i < 10; ++i)
            CHECK(std::abs(rec[i] - w(i)) / w(i) < 1e-12);
    }
    Eigen::MatrixXd tiny = Eigen::MatrixXd::Ones(2, 2);
    try {
        recover_weights({tiny});
        FAIL("expected an error for p < 3");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("p >= 3") != std::string::npos);
    }
}

TEST_CASE("recover returns the hidden atoms up to a global orthogonal map") {
    {
        Rng rng = make_rng(89);
        const AtomSet truth({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}}, {1, 2, 3});
        const MomentOracle oracle(truth);
        const auto res = recover(oracle, rng);
        CHECK(res.report.has_truth);
        CHECK(res.report.align_rmsd <= 1e-8);
        CHECK(res.report.weight_max_rel_error <= 1e-8);
    }
    {
        Rng rng = make_rng(97);
        Rng atom_rng = make_rng(98);
        const AtomSet truth = AtomSet::random(10, atom_rng);
        REQUIRE(check_genericity(truth).a1_ok);
        REQUIRE(check_genericity(truth).a2_ok);
        const MomentOracle oracle(truth);
        const auto res = recover(oracle, rng);
        CHECK(res.report.align_rmsd <= 1e-6);
        CHECK(res.report.weight_max_rel_error <= 1e-8);
        CHECK(res.report.to_json().find("sigma4_over_sigma5") != std::string::npos);
    }
}

TEST_CASE("recovery of reflected atoms matches up to alignment") {
    Rng atom_rng = make_rng(101);
    const AtomSet truth = AtomSet::random(5, atom_rng);
    const AtomSet mirrored = rotated(truth, -Eigen::Matrix3d::Identity());

    Rng r1 = make_rng(102), r2 = make_rng(102);
    const auto res1 = recover(MomentOracle(truth), r1);
    const auto res2 = recover(MomentOracle(mirrored), r2);
    const auto al = align(res1.atoms, res2.atoms);
    CHECK(al.rmsd <= 1e-6);
    for (int i = 0; i < 5; ++i)
        CHECK(res1.atoms.weights[i] == doctest::Approx(res2.atoms.weights[i]).epsilon(1e-8));
}

TEST_CASE("recovery result is seed-invariant up to alignment") {
    Rng atom_rng = make_rng(103);
    const AtomSet truth = AtomSet::random(6, atom_rng);
    Rng r1 = make_rng(1), r2 = make_rng(2);
    const auto res1 = recover(MomentOracle(truth), r1);
    const auto res2 = recover(MomentOracle(truth), r2);
    CHECK(align(res1.atoms, res2.atoms).rmsd <= 1e-6);
}

TEST_CASE("oracle call count scales quadratically in p") {
    Rng atom_rng = make_rng(107);
    Rng rng = make_rng(108);
    const AtomSet small = AtomSet::random(5, atom_rng);
    const AtomSet large = AtomSet::random(10, atom_rng);
    const MomentOracle o1(small), o2(large);
    recover(o1, rng);
    recover(o2, rng);
    // p(p-1)/2 sample calls and as many measure calls
    CHECK(o1.sample_calls() == 10);
    CHECK(o2.sample_calls() == 45);
    CHECK(o1.measure_calls() == 10);
    CHECK(o2.measure_calls() == 45);
}

TEST_CASE("recover rejects p < 3") {
    Rng rng = make_rng(109);
    const AtomSet two({{1, 0, 0}, {0, 0.5, 0}}, {1, 1});
    try {
        recover(MomentOracle(two), rng);
        FAIL("expected an error for p < 3");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("p >= 3") != std::string::npos);
    }
}
