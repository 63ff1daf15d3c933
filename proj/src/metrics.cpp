#include "momrec/metrics.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <vector>

#include <fftw3.h>

#include "momrec/errors.hpp"

namespace momrec {

namespace {

std::vector<std::complex<double>> fft3(const VolumeGrid& vol) {
    std::vector<std::complex<double>> buf(vol.size());
    for (std::size_t i = 0; i < vol.size(); ++i) buf[i] = vol.data[i];
    auto* ptr = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan = fftw_plan_dft_3d(vol.M, vol.M, vol.M, ptr, ptr, FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) fail(ErrorKind::degenerate, "fsc: FFTW plan creation failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return buf;
}

} // namespace

FSCCurve fsc(const VolumeGrid& vol1, const VolumeGrid& vol2) {
    require_same_shape(vol1, vol2, "fsc");
    if (vol1.voxel_size != vol2.voxel_size)
        fail(ErrorKind::config, "fsc: voxel sizes differ");

    const int M = vol1.M;
    const auto f1 = fft3(vol1);
    const auto f2 = fft3(vol2);

    const int n_shells = M / 2 + 1;
    std::vector<std::complex<double>> cross(n_shells, 0.0);
    std::vector<double> p1(n_shells, 0.0), p2(n_shells, 0.0);

    const int half = M / 2;
    std::size_t flat = 0;
    for (int x = 0; x < M; ++x) {
        const int fx = x < half ? x : x - M;
        for (int y = 0; y < M; ++y) {
            const int fy = y < half ? y : y - M;
            for (int z = 0; z < M; ++z, ++flat) {
                const int fz = z < half ? z : z - M;
                const double r = std::sqrt(double(fx) * fx + double(fy) * fy + double(fz) * fz);
                const int shell = static_cast<int>(std::lround(r));
                if (shell >= n_shells) continue;
                cross[shell] += f1[flat] * std::conj(f2[flat]);
                p1[shell] += std::norm(f1[flat]);
                p2[shell] += std::norm(f2[flat]);
            }
        }
    }

    FSCCurve curve;
    curve.voxel_size = vol1.voxel_size;
    for (int k = 0; k < n_shells; ++k) {
        curve.shells.push_back(k);
        const double denom = std::sqrt(p1[k] * p2[k]);
        if (denom <= 0.0) {
            curve.values.push_back(0.0);
            curve.empty_shell.push_back(true);
            continue;
        }
        const std::complex<double> v = cross[k] / denom;
        if (std::abs(v.imag()) > 1e-9)
            fail(ErrorKind::inconsistency, "fsc: imaginary residual above tolerance at shell " +
                                               std::to_string(k));
        curve.values.push_back(v.real());
        curve.empty_shell.push_back(false);
    }
    return curve;
}

ResolutionResult resolution(const FSCCurve& curve, double cutoff, int M) {
    if (curve.values.empty()) fail(ErrorKind::config, "resolution: empty curve");
    if (!(cutoff > 0.0 && cutoff < 1.0))
        fail(ErrorKind::config, "resolution: cutoff must lie in (0,1)");

    ResolutionResult res;
    // shell 0 is unreliable for zero-mean data; search from shell 1
    for (std::size_t k = 1; k < curve.values.size(); ++k) {
        if (curve.values[k] < cutoff) {
            const double prev = curve.values[k - 1];
            double k_star;
            if (prev < cutoff) {
                k_star = static_cast<double>(k - 1);
                if (k_star == 0.0) k_star = static_cast<double>(k); // avoid division by zero below
            } else {
                k_star = (k - 1) + (prev - cutoff) / (prev - curve.values[k]);
            }
            res.crossed = true;
            res.k_star = k_star;
            res.angstrom = curve.voxel_size * M / k_star;
            return res;
        }
    }
    res.crossed = false;
    res.k_star = static_cast<double>(M) / 2.0;
    res.angstrom = 2.0 * curve.voxel_size;
    return res;
}

void write_fsc_csv(const std::string& path, const FSCCurve& curve, int M) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "write_fsc_csv: cannot open " + path);
    out << "k,frequency_inv_angstrom,fsc\n";
    char buf[96];
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double freq = curve.shells[i] / (curve.voxel_size * M);
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", curve.shells[i], freq, curve.values[i]);
        out << buf;
    }
}

} // namespace momrec
