#pragma once

#include <cstdint>
#include <string>

#include "momrec/basis.hpp"
#include "momrec/imaging.hpp"
#include "momrec/volume.hpp"

namespace momrec {

/// Volumes are stored as raw little-endian float64 at `path` with a JSON
/// sidecar at `path`.json holding {"M": ..., "voxel_size_angstrom": ...}.
/// Round trips are bit exact.
void write_volume(const std::string& path, const VolumeGrid& volume);
VolumeGrid read_volume(const std::string& path);

/// Coefficient blocks (degree order, column-major within each degree) with
/// sidecar {"kind", "L", "S_list", "voxel_size_angstrom",
/// "convention": "real-SH-il"}.
void write_coefficients(const std::string& path, const BesselCoefficients& coeffs,
                        const std::string& kind = "coefficients");
BesselCoefficients read_coefficients(const std::string& path);

/// Per-degree Gram matrices in the same container format (S_l x S_l
/// blocks, kind "cl").
void write_cl(const std::string& path, const std::vector<Eigen::MatrixXd>& cl);
std::vector<Eigen::MatrixXd> read_cl(const std::string& path);

/// Second-moment tensors with sidecar {"shape", "m", "kappa", "sigma",
/// "seed"}.
void write_tensor(const std::string& path, const MomentTensor& tensor, double kappa, double sigma,
                  std::uint64_t seed);
MomentTensor read_tensor(const std::string& path);

} // namespace momrec
