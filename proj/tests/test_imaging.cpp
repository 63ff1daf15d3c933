#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "momrec/errors.hpp"
#include "momrec/imaging.hpp"

using namespace momrec;

namespace {

AtomSet single_origin_atom() {
    return AtomSet({{0.0, 0.0, 0.0}}, {1.0});
}

} // namespace

TEST_CASE("clean image of a centered atom is four-fold symmetric and mass-correct") {
    const double kappa = 0.1;
    const auto img = render_clean_image(single_origin_atom(), Rotation::identity(), 6, kappa);
    const int side = img.side();

    // 90-degree rotation permutes pixel indices exactly for a centered kernel
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            CHECK(img.pixels(r, c) == doctest::Approx(img.pixels(c, side - 1 - r)).epsilon(1e-12));

    // pixel integrals are exact, so the sum telescopes to the kernel mass
    // 2 pi kappa^2 (the tail outside [-1,1]^2 is ~exp(-50))
    CHECK(img.pixels.sum() == doctest::Approx(2.0 * M_PI * kappa * kappa).epsilon(1e-9));
}

TEST_CASE("rendering is deterministic and linear in the weights") {
    Rng r1 = make_rng(7), r2 = make_rng(7), r3 = make_rng(8);
    const AtomSet atoms({{0.3, -0.2, 0.5}, {-0.4, 0.1, 0.2}}, {1.0, 2.0});
    const Rotation rot = random_rotation(r3);

    const auto a = render_image(atoms, rot, 5, 0.05, 0.0, r1);
    const auto b = render_image(atoms, rot, 5, 0.05, 0.0, r2);
    CHECK(a.pixels == b.pixels);

    AtomSet doubled = atoms;
    doubled.weights = {2.0, 4.0};
    const auto c = render_clean_image(doubled, rot, 5, 0.05);
    CHECK((c.pixels - 2.0 * a.pixels).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rendering is equivariant under composed rotations") {
    Rng rng = make_rng(9);
    const AtomSet atoms({{0.3, -0.2, 0.5}, {-0.4, 0.1, 0.2}, {0.1, 0.6, -0.3}}, {1.0, 0.5, 2.0});
    for (int trial = 0; trial < 5; ++trial) {
        const Rotation r = random_rotation(rng);
        const Rotation q = random_rotation(rng);
        const Rotation rq(r.matrix() * q.matrix());
        const auto direct = render_clean_image(atoms, rq, 5, 0.08);
        const auto staged = render_clean_image(rotated(atoms, q.matrix()), r, 5, 0.08);
        CHECK((direct.pixels - staged.pixels).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("single noiseless image gives its own outer product") {
    Rng rng = make_rng(11);
    const AtomSet atoms({{0.2, 0.4, -0.1}}, {1.5});
    const auto img = render_image(atoms, random_rotation(rng), 4, 0.1, 0.0, rng);
    const auto tensor = empirical_second_moment({img}, 0.0);

    const Eigen::Map<const Eigen::VectorXd> v(img.pixels.data(), img.pixels.size());
    const Eigen::MatrixXd expected = v * v.transpose();
    CHECK((tensor.values - expected).cwiseAbs().maxCoeff() < 1e-14);
    // symmetry under swapping the two pixel pairs
    CHECK((tensor.values - tensor.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise debias drives pure-noise tensors to zero") {
    Rng rng = make_rng(13);
    const AtomSet empty; // no atoms: images are pure noise
    const double sigma = 1.0;
    const int n = 3000;
    MomentAccumulator acc(4);
    for (int k = 0; k < n; ++k)
        acc.add(render_image(empty, Rotation::identity(), 4, 0.1, sigma, rng));
    const auto tensor = acc.finalize(sigma);
    CHECK(tensor.values.cwiseAbs().maxCoeff() <= 5.0 * sigma * sigma / std::sqrt(double(n)));
}

TEST_CASE("empirical and population estimators of the moment agree") {
    const AtomSet atoms({{0.45, 0.1, -0.3}}, {1.0});
    const int m = 4;
    const double kappa = 0.12;

    Rng r1 = make_rng(17);
    const int n = 4000;
    MomentAccumulator acc(m);
    for (int k = 0; k < n; ++k)
        acc.add(render_clean_image(atoms, random_rotation(r1), m, kappa));
    const auto empirical = acc.finalize(0.0);

    Rng r2 = make_rng(18);
    const auto population = population_second_moment_pixelated(atoms, m, kappa, n, r2);

    // two independent Monte-Carlo estimates of the same tensor
    const double tol = 8.0 * population.se_max;
    CHECK((empirical.values - population.tensor.values).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("population estimate is independent of the worker count") {
    const AtomSet atoms({{0.3, 0.2, -0.4}, {-0.1, 0.5, 0.2}}, {1.0, 2.0});
    Rng r1 = make_rng(20), r4 = make_rng(20);
    const auto single = population_second_moment_pixelated(atoms, 4, 0.1, 200, r1, 1);
    const auto quad = population_second_moment_pixelated(atoms, 4, 0.1, 200, r4, 4);
    // rotations are drawn up front and the reduction order is fixed, so
    // the result is bitwise identical for any thread count
    CHECK(single.tensor.values == quad.tensor.values);
}

TEST_CASE("population moment of a centered atom is the clean outer product") {
    // projection of the origin is rotation-invariant
    Rng rng = make_rng(19);
    const auto pop = population_second_moment_pixelated(single_origin_atom(), 4, 0.1, 50, rng);
    const auto img = render_clean_image(single_origin_atom(), Rotation::identity(), 4, 0.1);
    const Eigen::Map<const Eigen::VectorXd> v(img.pixels.data(), img.pixels.size());
    CHECK((pop.tensor.values - v * v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(pop.se_max < 1e-10); // cancellation noise only
}

TEST_CASE("moment error decays roughly like n^(-1/2)") {
    const AtomSet atoms({{0.45, 0.1, -0.3}}, {1.0});
    const int m = 3;
    const double kappa = 0.15;
    Rng ref_rng = make_rng(23);
    const auto reference = population_second_moment_pixelated(atoms, m, kappa, 60000, ref_rng);

    double errs[2];
    const int ns[2] = {200, 20000};
    for (int idx = 0; idx < 2; ++idx) {
        Rng rng = make_rng(29 + idx);
        MomentAccumulator acc(m);
        for (int k = 0; k < ns[idx]; ++k)
            acc.add(render_clean_image(atoms, random_rotation(rng), m, kappa));
        errs[idx] = (acc.finalize(0.0).values - reference.tensor.values).norm();
    }
    // factor 100 in n should give about a factor 10 in error
    const double slope = std::log(errs[1] / errs[0]) / std::log(double(ns[1]) / ns[0]);
    CHECK(slope > -0.75);
    CHECK(slope < -0.3);
}

TEST_CASE("shepp-logan phantom matches direct table evaluation at the center") {
    const auto vol = shepp_logan_phantom(64);
    // the origin lies inside the two outer ellipsoids only: 1.0 - 0.8
    CHECK(vol.at(32, 32, 32) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(vol.voxel_size == 1.0);
}

TEST_CASE("shepp-logan phantom vanishes outside the outer ellipsoid") {
    const auto vol = shepp_logan_phantom(32);
    int outside_nonzero = 0;
    for (int x = 0; x < 32; ++x)
        for (int y = 0; y < 32; ++y)
            for (int z = 0; z < 32; ++z) {
                const Eigen::Vector3d p(vol.coord(x), vol.coord(y), vol.coord(z));
                const double q = std::pow(p.x() / 0.69, 2) + std::pow(p.y() / 0.92, 2) +
                                 std::pow(p.z() / 0.81, 2);
                if (q > 1.0 && vol.at(x, y, z) != 0.0) ++outside_nonzero;
            }
    CHECK(outside_nonzero == 0);
}

TEST_CASE("phantom rasterizations are consistent across resolutions") {
    const auto fine = shepp_logan_phantom(64);
    const auto coarse = shepp_logan_phantom(32);
    double sum_abs_diff = 0.0;
    for (int x = 0; x < 32; ++x)
        for (int y = 0; y < 32; ++y)
            for (int z = 0; z < 32; ++z) {
                double box = 0.0;
                for (int dx = 0; dx < 2; ++dx)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dz = 0; dz < 2; ++dz)
                            box += fine.at(2 * x + dx, 2 * y + dy, 2 * z + dz);
                sum_abs_diff += std::abs(box / 8.0 - coarse.at(x, y, z));
            }
    // differences live on ellipsoid boundary shells, whose voxel fraction
    // scales like 1/M
    CHECK(sum_abs_diff / (32.0 * 32.0 * 32.0) < 0.04);
}

TEST_CASE("blob phantom peaks at the blob center and scales with amplitude") {
    const GaussianBlob blob{{0.0, 0.0, 0.0}, 0.12, 1.0};
    const auto vol = gaussian_blob_phantom(32, {blob});
    Eigen::Index argmax = 0;
    vol.as_vector().maxCoeff(&argmax);
    CHECK(argmax == static_cast<Eigen::Index>(vol.index(16, 16, 16)));

    GaussianBlob twice = blob;
    twice.amplitude = 2.0;
    const auto vol2 = gaussian_blob_phantom(32, {twice});
    CHECK((vol2.as_vector() - 2.0 * vol.as_vector()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("blob phantom integral matches the Gaussian mass") {
    const int M = 32;
    const double stddev = 0.15; // 2.4 voxels
    const std::vector<GaussianBlob> blobs = {{{0.1, -0.05, 0.2}, stddev, 1.3},
                                             {{-0.2, 0.15, -0.1}, stddev, 0.7}};
    const auto vol = gaussian_blob_phantom(M, blobs);
    const double voxel_volume = std::pow(2.0 / M, 3);
    double expected = 0.0;
    for (const auto& b : blobs)
        expected += b.amplitude * std::pow(2.0 * M_PI * b.stddev * b.stddev, 1.5);
    CHECK(vol.as_vector().sum() * voxel_volume == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("parameter validation") {
    Rng rng = make_rng(31);
    CHECK_THROWS_AS(render_image(single_origin_atom(), Rotation::identity(), 0, 0.1, 0.0, rng), Error);
    CHECK_THROWS_AS(render_image(single_origin_atom(), Rotation::identity(), 4, 0.0, 0.0, rng), Error);
    CHECK_THROWS_AS(empirical_second_moment({}, 0.0), Error);
    CHECK_THROWS_AS(shepp_logan_phantom(4), Error);
}
