#include "momrec/rrr.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "momrec/errors.hpp"
#include "momrec/metrics.hpp"
#include "momrec/sparsity.hpp"

namespace momrec {

RRRState rrr_initialize(const ScrambledFactors& scrambled, const BasisPlan& plan, double beta,
                        long K) {
    if (!(beta > 0.0 && beta < 2.0))
        fail(ErrorKind::config, "rrr_initialize: beta must lie in (0,2)");
    const long total = static_cast<long>(plan.grid_size()) * plan.grid_size() * plan.grid_size();
    if (K < 0 || K > total)
        fail(ErrorKind::config, "rrr_initialize: K must lie in [0, M^3]");
    RRRState st;
    st.iterate = plan.synthesize(scrambled);
    st.n = 0;
    st.beta = beta;
    st.K = K;
    return st;
}

namespace {

// The second moment determines the volume only up to a global sign (both
// +Phi and -Phi have the same per-degree Gram matrices and the same
// wavelet sparsity), so comparisons against a reference align the sign
// first.
double sign_aligned_resolution(const VolumeGrid& vol, const VolumeGrid& reference, double cutoff) {
    VolumeGrid aligned = vol;
    if (vol.as_vector().dot(reference.as_vector()) < 0.0) aligned.as_vector() *= -1.0;
    return resolution(fsc(aligned, reference), cutoff, vol.M).angstrom;
}

} // namespace

void rrr_step(RRRState& state, const MomentProjector& projector, const BasisPlan& plan,
              const VolumeGrid* reference, double fsc_cutoff) {
    const auto t0 = std::chrono::steady_clock::now();

    const VolumeGrid moment = projector.project(state.iterate, plan); // Phi^(n+1/3)

    VolumeGrid reflected = moment;
    reflected.as_vector() = 2.0 * moment.as_vector() - state.iterate.as_vector();
    const VolumeGrid sparse = project_sparsity(reflected, state.K); // Phi^(n+2/3)

    TraceRecord rec;
    rec.n = state.n;
    rec.gap = (sparse.as_vector() - moment.as_vector()).norm();

    state.iterate.as_vector() += state.beta * (sparse.as_vector() - moment.as_vector());
    state.last_sparse = sparse;
    state.n += 1;

    if (reference) {
        rec.has_fsc = true;
        rec.fsc_resolution = sign_aligned_resolution(sparse, *reference, fsc_cutoff);
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    state.trace.push_back(rec);
}

void rrr_step(RRRState& state, const ClMatrices& cl, const BasisPlan& plan) {
    rrr_step(state, MomentProjector(cl, plan), plan);
}

RRRResult rrr_run(const ScrambledFactors& scrambled, const ClMatrices& cl, const BasisPlan& plan,
                  const RRROptions& options) {
    if (options.N < 1) fail(ErrorKind::config, "rrr_run: N must be >= 1");

    const MomentProjector projector(cl, plan);
    RRRState st = rrr_initialize(scrambled, plan, options.beta, options.K);

    RRRResult out;
    out.has_reference = options.reference != nullptr;
    if (options.reference)
        out.init_resolution = sign_aligned_resolution(st.iterate, *options.reference, options.fsc_cutoff);

    int quiet_streak = 0;
    for (int n = 0; n < options.N; ++n) {
        rrr_step(st, projector, plan, options.reference, options.fsc_cutoff);
        const TraceRecord& rec = st.trace.back();

        if (n == 0 || rec.gap < out.best_gap) {
            out.best_gap = rec.gap;
            out.best_gap_iter = n;
            out.best_by_gap = st.last_sparse;
        }
        if (options.reference && (n == 0 || rec.fsc_resolution < out.best_resolution)) {
            out.best_resolution = rec.fsc_resolution;
            out.best_fsc_iter = n;
            out.best_by_fsc = st.last_sparse;
        }

        const double update_norm = st.beta * rec.gap;
        if (options.stop_update_tol > 0.0 && update_norm < options.stop_update_tol) {
            if (++quiet_streak >= options.stop_patience) {
                out.iterations_run = n + 1;
                break;
            }
        } else {
            quiet_streak = 0;
        }
        out.iterations_run = n + 1;
    }

    out.final_sparse = st.last_sparse;
    out.trace = std::move(st.trace);
    return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "write_trace_csv: cannot open " + path);
    out << "n,gap,fsc_resolution,wall_ms\n";
    char buf[128];
    for (const auto& r : trace) {
        if (r.has_fsc)
            std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.3f\n", r.n, r.gap, r.fsc_resolution,
                          r.wall_ms);
        else
            std::snprintf(buf, sizeof(buf), "%d,%.10g,,%.3f\n", r.n, r.gap, r.wall_ms);
        out << buf;
    }
}

} // namespace momrec
