#pragma once

#include <vector>

#include "momrec/volume.hpp"

namespace momrec {

/// Coefficients of the orthonormal multilevel 3-D Haar transform, taken to
/// the maximum level (log2 M). The flat layout is the usual in-place
/// multilevel arrangement on the M^3 grid — the single scaling coefficient
/// sits at flat address 0 and each detail subband occupies its block — so
/// a coefficient's flat address doubles as its (level, index) address.
struct WaveletVector {
    int M = 0;
    double voxel_size = 1.0;
    std::vector<double> coeffs; // length M^3

    std::size_t size() const { return coeffs.size(); }
};

/// Orthonormal forward transform (Parseval: coefficient norm equals volume
/// norm). Rejects grids whose side is not a power of two.
WaveletVector wavelet_forward(const VolumeGrid& volume);

/// Exact inverse of wavelet_forward; linear time in M^3.
VolumeGrid wavelet_inverse(const WaveletVector& wv);

/// Keeps the K largest-magnitude coefficients and zeroes the rest. Ties at
/// the K-th magnitude break toward the lower flat address, so the kept set
/// is deterministic.
WaveletVector keep_largest(const WaveletVector& wv, long K);

/// Hard-thresholding projection onto K-sparse wavelet vectors:
/// wavelet_inverse(keep_largest(wavelet_forward(volume), K)).
VolumeGrid project_sparsity(const VolumeGrid& volume, long K);

} // namespace momrec
