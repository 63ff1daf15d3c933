#pragma once

#include <string>
#include <vector>

#include "momrec/basis.hpp"
#include "momrec/kam.hpp"
#include "momrec/volume.hpp"

namespace momrec {

struct TraceRecord {
    int n = 0;
    double gap = 0.0; // ||Phi^(n+2/3) - Phi^(n+1/3)||_2
    bool has_fsc = false;
    double fsc_resolution = 0.0; // Angstrom, of Phi^(n+2/3) vs the reference
    double wall_ms = 0.0;
};

/// Iterate plus run bookkeeping for the relaxed-reflect-reflect scheme
///   Phi^(n+1/3) = rho1(Phi^(n))
///   Phi^(n+2/3) = rho2(2 Phi^(n+1/3) - Phi^(n), K)
///   Phi^(n+1)   = Phi^(n) + beta (Phi^(n+2/3) - Phi^(n+1/3)).
struct RRRState {
    VolumeGrid iterate;              // Phi^(n)
    VolumeGrid last_sparse;          // Phi^(n+2/3) of the latest step
    int n = 0;
    double beta = 0.5;
    long K = 0;
    std::vector<TraceRecord> trace;
};

/// Phi^(0) = synthesize(B): satisfies the moment constraint by
/// construction.
RRRState rrr_initialize(const ScrambledFactors& scrambled, const BasisPlan& plan, double beta,
                        long K);

/// One iteration; appends a trace record. The projector must have been
/// built from the same C_l the run targets.
void rrr_step(RRRState& state, const MomentProjector& projector, const BasisPlan& plan,
              const VolumeGrid* reference = nullptr, double fsc_cutoff = 0.5);

/// Convenience overload constructing the projector on the fly.
void rrr_step(RRRState& state, const ClMatrices& cl, const BasisPlan& plan);

struct RRROptions {
    long K = 0;
    int N = 100;
    double beta = 0.5;
    // early exit after `stop_patience` consecutive updates below
    // `stop_update_tol` (0 disables)
    double stop_update_tol = 1e-10;
    int stop_patience = 10;
    const VolumeGrid* reference = nullptr; // enables FSC tracking
    double fsc_cutoff = 0.5;
};

struct RRRResult {
    VolumeGrid final_sparse;  // the last rho2 output — the returned iterate
    VolumeGrid best_by_gap;   // rho2 output at the smallest constraint gap
    double best_gap = 0.0;
    int best_gap_iter = 0;
    bool has_reference = false;
    VolumeGrid best_by_fsc;   // rho2 output at the best FSC resolution
    double best_resolution = 0.0;
    int best_fsc_iter = 0;
    double init_resolution = 0.0; // FSC resolution of Phi^(0) vs reference
    std::vector<TraceRecord> trace;
    int iterations_run = 0;
};

RRRResult rrr_run(const ScrambledFactors& scrambled, const ClMatrices& cl, const BasisPlan& plan,
                  const RRROptions& options);

/// CSV rows "n,gap,fsc_resolution,wall_ms" (resolution column empty when
/// no reference was supplied).
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace);

} // namespace momrec
