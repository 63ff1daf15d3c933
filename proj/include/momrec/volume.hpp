#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "momrec/errors.hpp"

namespace momrec {

/// M x M x M real scalar field with a physical voxel size in Angstrom.
///
/// Storage is row-major with z fastest: flat = (x*M + y)*M + z, matching
/// FFTW's layout for fftw_plan_dft_3d(M, M, M, ...). The grid is treated
/// as periodic with the spatial origin at index M/2 on each axis.
struct VolumeGrid {
    int M = 0;
    double voxel_size = 1.0; // Angstrom
    std::vector<double> data;

    VolumeGrid() = default;
    VolumeGrid(int m, double voxel) : M(m), voxel_size(voxel), data(static_cast<std::size_t>(m) * m * m, 0.0) {
        if (m <= 0) fail(ErrorKind::config, "VolumeGrid: grid size must be positive");
    }

    static VolumeGrid zeros(int m, double voxel = 1.0) { return VolumeGrid(m, voxel); }

    std::size_t size() const { return data.size(); }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(x) * M + y) * M + z;
    }

    double& at(int x, int y, int z) { return data[index(x, y, z)]; }
    double at(int x, int y, int z) const { return data[index(x, y, z)]; }

    Eigen::Map<const Eigen::VectorXd> as_vector() const {
        return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
    }
    Eigen::Map<Eigen::VectorXd> as_vector() {
        return Eigen::Map<Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
    }

    double norm2() const { return as_vector().norm(); }

    /// Spatial coordinate of a voxel center in the [-1,1) box convention:
    /// position = (index - M/2) * (2/M), so voxel M/2 sits exactly at 0.
    double coord(int idx) const { return (idx - M / 2) * (2.0 / M); }
};

inline void require_same_shape(const VolumeGrid& a, const VolumeGrid& b, const char* where) {
    if (a.M != b.M)
        fail(ErrorKind::config, std::string(where) + ": grid sizes differ");
}

} // namespace momrec
