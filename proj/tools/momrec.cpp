// momrec: moment-based 3-D reconstruction toolkit.
//
// Subcommands:
//   pointmass  recover a point-mass structure from simulated second-moment
//              oracle access
//   kam        scramble a volume's per-degree coefficient factors and
//              reconstruct it with the sparsity-constrained RRR iteration
//   moments    render pixelated projection images and accumulate debiased
//              empirical second moments
//
// All commands are deterministic under a fixed --seed and write their
// outputs plus a manifest.json into the --out directory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "momrec/basis.hpp"
#include "momrec/errors.hpp"
#include "momrec/geometry.hpp"
#include "momrec/imaging.hpp"
#include "momrec/io.hpp"
#include "momrec/kam.hpp"
#include "momrec/metrics.hpp"
#include "momrec/oracle.hpp"
#include "momrec/point_recovery.hpp"
#include "momrec/rrr.hpp"
#include "momrec/sparsity.hpp"

#ifndef MOMREC_GIT_REVISION
#define MOMREC_GIT_REVISION "unknown"
#endif

namespace {

using nlohmann::json;

int default_threads() {
    if (const char* env = std::getenv("MOMREC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const json& results) {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["results"] = results;
    j["git_revision"] = MOMREC_GIT_REVISION;
    std::ofstream f(out_dir + "/manifest.json");
    f << j.dump(2) << "\n";
}

[[noreturn]] void exit_with_error(const momrec::Error& e) {
    json rec;
    rec["error"] = momrec::error_kind_name(e.kind());
    rec["message"] = e.what();
    std::cerr << rec.dump() << "\n";
    std::exit(e.kind() == momrec::ErrorKind::config ? 2 : 3);
}

struct PointmassArgs {
    int p = 10;
    std::uint64_t seed = 0;
    int samples_per_pair = 20;
    std::string atoms_file;
    std::string out_dir = "pointmass_out";
    double genericity_tol = 1e-6;
};

int run_pointmass(const PointmassArgs& args) {
    using namespace momrec;
    std::filesystem::create_directories(args.out_dir);

    AtomSet truth;
    if (!args.atoms_file.empty()) {
        truth = read_atoms(args.atoms_file);
    } else {
        if (args.p < 3) fail(ErrorKind::config, "pointmass: p >= 3 required");
        Rng rng = make_rng(args.seed);
        truth = AtomSet::random(args.p, rng);
    }
    if (truth.count() < 3) fail(ErrorKind::config, "pointmass: p >= 3 required");

    const GenericityReport gen = check_genericity(truth, args.genericity_tol);
    if (!gen.a1_ok)
        fail(ErrorKind::degenerate,
             "pointmass: input atoms violate A1 (a pair is linearly dependent; min sine of angle " +
                 std::to_string(gen.min_sin_angle) + ")");
    if (!gen.a2_ok)
        fail(ErrorKind::degenerate,
             "pointmass: input atoms violate A2 (norms collide; min gap " +
                 std::to_string(gen.min_norm_gap) + ")");

    const MomentOracle oracle(truth);
    Rng rng = make_rng(args.seed + 1);
    const RecoveryResult res = recover(oracle, rng, args.samples_per_pair);

    write_atoms(args.out_dir + "/truth_atoms.txt", truth);
    write_atoms(args.out_dir + "/recovered_atoms.txt", res.atoms);
    {
        std::ofstream rep(args.out_dir + "/report.json");
        rep << res.report.to_json() << "\n";
    }

    json config{{"p", truth.count()},
                {"seed", args.seed},
                {"samples_per_pair", args.samples_per_pair},
                {"atoms_file", args.atoms_file},
                {"genericity_tol", args.genericity_tol}};
    json results{{"align_rmsd", res.report.align_rmsd},
                 {"weight_max_rel_error", res.report.weight_max_rel_error},
                 {"oracle_sample_calls", res.report.oracle_sample_calls},
                 {"oracle_measure_calls", res.report.oracle_measure_calls}};
    write_manifest(args.out_dir, "pointmass", config, results);

    std::cout << "pointmass: p=" << truth.count() << " rmsd=" << res.report.align_rmsd
              << " weight_rel_err=" << res.report.weight_max_rel_error << "\n";
    return 0;
}

struct KamArgs {
    std::string phantom = "blobs"; // blobs | shepp-logan
    std::string volume_file;
    int M = 32;
    int L = 6;
    double c = 0.5;
    int blobs = 8;
    long K = -1; // default: ceil(0.05 * M^3)
    int N = 500;
    double beta = 0.5;
    double fsc_cutoff = 0.5;
    std::uint64_t seed = 0;
    bool unscrambled = false;
    std::string out_dir = "kam_out";
};

int run_kam(const KamArgs& args) {
    using namespace momrec;
    if (!(args.beta > 0.0 && args.beta < 2.0))
        fail(ErrorKind::config, "kam: beta must lie in (0,2)");
    if (args.N < 1) fail(ErrorKind::config, "kam: N must be >= 1");
    std::filesystem::create_directories(args.out_dir);

    VolumeGrid truth;
    if (!args.volume_file.empty()) {
        truth = read_volume(args.volume_file);
    } else if (args.phantom == "blobs") {
        Rng rng = make_rng(args.seed);
        truth = gaussian_blob_phantom(args.M, random_blobs(args.blobs, rng));
    } else if (args.phantom == "shepp-logan") {
        truth = shepp_logan_phantom(args.M);
    } else {
        fail(ErrorKind::config, "kam: unknown phantom '" + args.phantom + "'");
    }

    // unit-normalize so gaps and tolerances are scale-free; the manifest
    // records the factor
    const double input_norm = truth.norm2();
    if (!(input_norm > 0.0)) fail(ErrorKind::config, "kam: input volume is identically zero");
    truth.as_vector() /= input_norm;

    const long total = static_cast<long>(truth.size());
    const long K = args.K >= 0 ? args.K : (total * 5 + 99) / 100;
    if (K > total) fail(ErrorKind::config, "kam: K exceeds M^3");

    const BasisPlan plan = BasisPlan::build(truth.M, args.c, args.L);
    const BesselCoefficients coeffs = plan.expand(truth);
    const VolumeGrid truncated = plan.synthesize(coeffs);
    const ClMatrices cl = compute_cl(coeffs);

    Rng rng = make_rng(args.seed + 1);
    const ScrambledFactors factors = args.unscrambled ? coeffs : scramble(coeffs, rng);

    RRROptions opt;
    opt.K = K;
    opt.N = args.N;
    opt.beta = args.beta;
    opt.reference = &truncated;
    opt.fsc_cutoff = args.fsc_cutoff;
    const RRRResult res = rrr_run(factors, cl, plan, opt);

    write_volume(args.out_dir + "/truth.f64", truth);
    write_volume(args.out_dir + "/reference_truncated.f64", truncated);
    write_volume(args.out_dir + "/final.f64", res.final_sparse);
    write_volume(args.out_dir + "/best_fsc.f64", res.best_by_fsc);
    write_volume(args.out_dir + "/best_gap.f64", res.best_by_gap);
    write_trace_csv(args.out_dir + "/trace.csv", res.trace);
    write_fsc_csv(args.out_dir + "/fsc_final.csv", fsc(res.final_sparse, truncated), truth.M);
    write_fsc_csv(args.out_dir + "/fsc_best.csv", fsc(res.best_by_fsc, truncated), truth.M);
    write_coefficients(args.out_dir + "/cl_factors.f64", factors,
                       args.unscrambled ? "unscrambled" : "scrambled");
    write_cl(args.out_dir + "/cl.f64", cl);

    json config{{"phantom", args.phantom},
                {"volume_file", args.volume_file},
                {"M", truth.M},
                {"L_request", args.L},
                {"L_effective", plan.max_degree()},
                {"c", args.c},
                {"blobs", args.blobs},
                {"K", K},
                {"N", args.N},
                {"beta", args.beta},
                {"fsc_cutoff", args.fsc_cutoff},
                {"seed", args.seed},
                {"unscrambled", args.unscrambled},
                {"input_norm", input_norm}};
    json results{{"iterations_run", res.iterations_run},
                 {"initial_gap", res.trace.front().gap},
                 {"final_gap", res.trace.back().gap},
                 {"best_gap", res.best_gap},
                 {"best_gap_iteration", res.best_gap_iter},
                 {"init_resolution", res.init_resolution},
                 {"best_resolution", res.best_resolution},
                 {"best_fsc_iteration", res.best_fsc_iter},
                 {"final_resolution", res.trace.back().fsc_resolution}};
    write_manifest(args.out_dir, "kam", config, results);

    std::cout << "kam: L_eff=" << plan.max_degree() << " K=" << K
              << " init_res=" << res.init_resolution << " best_res=" << res.best_resolution
              << " final_gap=" << res.trace.back().gap << "\n";
    return 0;
}

struct MomentsArgs {
    int p = 1;
    std::uint64_t seed = 0;
    std::string atoms_file;
    bool noise_only = false;
    int m = 5;
    double kappa = -1.0; // default 2 * tau
    double sigma = 1.0;
    long n = 1000;
    long compare_population = 0; // rotations for the population estimate
    std::vector<long> error_vs_n;
    int threads = default_threads();
    std::string out_dir = "moments_out";
};

int run_moments(const MomentsArgs& args) {
    using namespace momrec;
    if (args.m < 1) fail(ErrorKind::config, "moments: m >= 1 required");
    if (args.n < 1) fail(ErrorKind::config, "moments: n >= 1 required");
    std::filesystem::create_directories(args.out_dir);

    AtomSet atoms;
    if (args.noise_only) {
        // keep the empty set: images are pure noise
    } else if (!args.atoms_file.empty()) {
        atoms = read_atoms(args.atoms_file);
    } else {
        Rng rng = make_rng(args.seed);
        atoms = AtomSet::random(args.p, rng);
    }

    const double tau = 1.0 / static_cast<double>(1 << (args.m - 1));
    const double kappa = args.kappa > 0.0 ? args.kappa : 2.0 * tau;

    Rng rng = make_rng(args.seed + 1);
    MomentAccumulator acc(args.m);
    for (long k = 0; k < args.n; ++k) {
        const Rotation rot = random_rotation(rng);
        acc.add(render_image(atoms, rot, args.m, kappa, args.sigma, rng));
    }
    const MomentTensor tensor = acc.finalize(args.sigma);
    write_tensor(args.out_dir + "/second_moment.f64", tensor, kappa, args.sigma, args.seed);
    if (!args.noise_only) write_atoms(args.out_dir + "/atoms.txt", atoms);

    json results{{"n", args.n}, {"max_abs_entry", tensor.values.cwiseAbs().maxCoeff()}};

    std::optional<PopulationMoment> population;
    if (args.compare_population > 0) {
        Rng prng = make_rng(args.seed + 2);
        population = population_second_moment_pixelated(atoms, args.m, kappa,
                                                        args.compare_population, prng, args.threads);
        write_tensor(args.out_dir + "/population_moment.f64", population->tensor, kappa, 0.0,
                     args.seed);
        results["population_se_mean"] = population->se_mean;
        results["population_error_fro"] = (tensor.values - population->tensor.values).norm();
    }

    if (!args.error_vs_n.empty()) {
        if (!population)
            fail(ErrorKind::config, "moments: --error-vs-n requires --compare-population");
        std::ofstream csv(args.out_dir + "/error_vs_n.csv");
        csv << "n,frobenius_error,max_error\n";
        for (long n_sub : args.error_vs_n) {
            if (n_sub < 1) fail(ErrorKind::config, "moments: error-vs-n entries must be >= 1");
            Rng sub_rng = make_rng(args.seed + 3 + static_cast<std::uint64_t>(n_sub));
            MomentAccumulator sub(args.m);
            for (long k = 0; k < n_sub; ++k) {
                const Rotation rot = random_rotation(sub_rng);
                sub.add(render_image(atoms, rot, args.m, kappa, args.sigma, sub_rng));
            }
            const MomentTensor t = sub.finalize(args.sigma);
            const Eigen::MatrixXd diff = t.values - population->tensor.values;
            csv << n_sub << "," << diff.norm() << "," << diff.cwiseAbs().maxCoeff() << "\n";
        }
    }

    json config{{"p", atoms.count()},
                {"seed", args.seed},
                {"atoms_file", args.atoms_file},
                {"noise_only", args.noise_only},
                {"m", args.m},
                {"kappa", kappa},
                {"sigma", args.sigma},
                {"n", args.n},
                {"compare_population", args.compare_population},
                {"threads", args.threads}};
    write_manifest(args.out_dir, "moments", config, results);

    std::cout << "moments: n=" << args.n << " m=" << args.m
              << " max_entry=" << tensor.values.cwiseAbs().maxCoeff() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"moment-based 3-D reconstruction toolkit"};
    app.require_subcommand(1);
    // key=value file with one [subcommand] section per command; flags win
    app.set_config("--config", "", "plain-text configuration file ([subcommand] sections)");

    PointmassArgs pm;
    auto* pm_cmd = app.add_subcommand("pointmass", "point-mass recovery from oracle access");
    pm_cmd->add_option("--p", pm.p, "number of random atoms (>= 3)");
    pm_cmd->add_option("--seed", pm.seed, "rng seed");
    pm_cmd->add_option("--samples-per-pair", pm.samples_per_pair, "manifold samples per pair")
        ->check(CLI::Range(4, 1000000));
    pm_cmd->add_option("--atoms", pm.atoms_file, "atom table to recover instead of random atoms");
    pm_cmd->add_option("--out", pm.out_dir, "output directory");
    pm_cmd->add_option("--genericity-tol", pm.genericity_tol, "A1/A2 tolerance");

    KamArgs km;
    auto* km_cmd = app.add_subcommand("kam", "orthogonal-retrieval reconstruction via RRR");
    km_cmd->add_option("--phantom", km.phantom, "blobs | shepp-logan")
        ->check(CLI::IsMember({"blobs", "shepp-logan"}));
    km_cmd->add_option("--volume", km.volume_file, "input volume (raw f64 + sidecar)");
    km_cmd->add_option("--M", km.M, "grid size for generated phantoms");
    km_cmd->add_option("--L", km.L, "requested maximum spherical-harmonic degree");
    km_cmd->add_option("--c", km.c, "bandlimit in cycles per voxel");
    km_cmd->add_option("--blobs", km.blobs, "blob count for the blobs phantom");
    km_cmd->add_option("--K", km.K, "sparsity level (default 5% of M^3)");
    km_cmd->add_option("--N", km.N, "iteration count");
    km_cmd->add_option("--beta", km.beta, "RRR relaxation parameter in (0,2)");
    km_cmd->add_option("--fsc-cutoff", km.fsc_cutoff, "FSC resolution cutoff");
    km_cmd->add_option("--seed", km.seed, "rng seed");
    km_cmd->add_flag("--unscrambled", km.unscrambled, "skip the orthogonal scramble (smoke test)");
    km_cmd->add_option("--out", km.out_dir, "output directory");

    MomentsArgs mo;
    auto* mo_cmd = app.add_subcommand("moments", "empirical projection-image second moments");
    mo_cmd->add_option("--p", mo.p, "number of random atoms");
    mo_cmd->add_option("--seed", mo.seed, "rng seed");
    mo_cmd->add_option("--atoms", mo.atoms_file, "atom table to image");
    mo_cmd->add_flag("--noise-only", mo.noise_only, "render pure-noise images (no atoms)");
    mo_cmd->add_option("--m", mo.m, "resolution exponent (2^m x 2^m pixels)");
    mo_cmd->add_option("--kappa", mo.kappa, "blur std-dev (default 2 * pixel size)");
    mo_cmd->add_option("--sigma", mo.sigma, "noise std-dev");
    mo_cmd->add_option("--n", mo.n, "number of images");
    mo_cmd->add_option("--compare-population", mo.compare_population,
                       "also estimate the population moment with this many rotations");
    mo_cmd->add_option("--error-vs-n", mo.error_vs_n, "emit error_vs_n.csv for these image counts")
        ->delimiter(',');
    mo_cmd->add_option("--threads", mo.threads, "worker threads (default MOMREC_THREADS or 1)");
    mo_cmd->add_option("--out", mo.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        nlohmann::json rec{{"error", "config"}, {"message", e.what()}};
        std::cerr << rec.dump() << "\n";
        return 2;
    }

    try {
        if (pm_cmd->parsed()) return run_pointmass(pm);
        if (km_cmd->parsed()) return run_kam(km);
        if (mo_cmd->parsed()) return run_moments(mo);
    } catch (const momrec::Error& e) {
        exit_with_error(e);
    } catch (const std::exception& e) {
        nlohmann::json rec{{"error", "internal"}, {"message", e.what()}};
        std::cerr << rec.dump() << "\n";
        return 3;
    }
    return 0;
}
