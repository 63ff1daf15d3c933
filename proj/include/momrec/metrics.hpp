#pragma once

#include <string>
#include <vector>

#include "momrec/volume.hpp"

namespace momrec {

/// Fourier shell correlation per integer radial frequency shell (shell
/// assignment by rounding |frequency index|). Shells run from 0 to M/2.
struct FSCCurve {
    std::vector<int> shells;
    std::vector<double> values;
    std::vector<bool> empty_shell; // value forced to 0: a shell had zero power
    double voxel_size = 1.0;
};

/// Normalized per-shell cross-correlation of the Fourier transforms of two
/// equally sized volumes. The summation is conjugation-symmetric, so the
/// result is real; the imaginary residual is checked against 1e-9.
FSCCurve fsc(const VolumeGrid& vol1, const VolumeGrid& vol2);

struct ResolutionResult {
    double angstrom = 0.0;
    bool crossed = false; // false: curve never dropped below the cutoff
    double k_star = 0.0;  // interpolated crossing shell
};

/// First crossing of the curve below `cutoff` (linear interpolation
/// between shells, searched from shell 1), converted to Angstrom as
/// voxel_size * M / k*. Returns the Nyquist-limited value
/// 2 * voxel_size with crossed = false when the curve never drops.
ResolutionResult resolution(const FSCCurve& curve, double cutoff, int M);

/// CSV rows "k,frequency_inv_angstrom,fsc" (both frequency columns since
/// conventions differ between consumers).
void write_fsc_csv(const std::string& path, const FSCCurve& curve, int M);

} // namespace momrec
