#include "momrec/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "momrec/errors.hpp"

namespace momrec {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

// One Haar split of length `n` along the given axis of the leading
// n x n x n subcube: pairs -> (sum, difference) / sqrt(2), averages in the
// low half, details in the high half.
void haar_axis_forward(std::vector<double>& d, int M, int n, int axis) {
    const int h = n / 2;
    std::vector<double> tmp(n);
    const std::size_t stride[3] = {static_cast<std::size_t>(M) * M, static_cast<std::size_t>(M), 1};
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t base = stride[a1] * i + stride[a2] * j;
            for (int t = 0; t < h; ++t) {
                const double x = d[base + stride[axis] * (2 * t)];
                const double y = d[base + stride[axis] * (2 * t + 1)];
                tmp[t] = (x + y) * kInvSqrt2;
                tmp[h + t] = (x - y) * kInvSqrt2;
            }
            for (int t = 0; t < n; ++t) d[base + stride[axis] * t] = tmp[t];
        }
    }
}

void haar_axis_inverse(std::vector<double>& d, int M, int n, int axis) {
    const int h = n / 2;
    std::vector<double> tmp(n);
    const std::size_t stride[3] = {static_cast<std::size_t>(M) * M, static_cast<std::size_t>(M), 1};
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t base = stride[a1] * i + stride[a2] * j;
            for (int t = 0; t < h; ++t) {
                const double s = d[base + stride[axis] * t];
                const double w = d[base + stride[axis] * (h + t)];
                tmp[2 * t] = (s + w) * kInvSqrt2;
                tmp[2 * t + 1] = (s - w) * kInvSqrt2;
            }
            for (int t = 0; t < n; ++t) d[base + stride[axis] * t] = tmp[t];
        }
    }
}

} // namespace

WaveletVector wavelet_forward(const VolumeGrid& volume) {
    if (!power_of_two(volume.M))
        fail(ErrorKind::config, "wavelet_forward: grid size must be a power of two");
    WaveletVector wv;
    wv.M = volume.M;
    wv.voxel_size = volume.voxel_size;
    wv.coeffs = volume.data;
    for (int n = volume.M; n >= 2; n /= 2)
        for (int axis = 0; axis < 3; ++axis)
            haar_axis_forward(wv.coeffs, volume.M, n, axis);
    return wv;
}

VolumeGrid wavelet_inverse(const WaveletVector& wv) {
    if (!power_of_two(wv.M))
        fail(ErrorKind::config, "wavelet_inverse: grid size must be a power of two");
    if (wv.coeffs.size() != static_cast<std::size_t>(wv.M) * wv.M * wv.M)
        fail(ErrorKind::config, "wavelet_inverse: coefficient length does not match M^3");
    VolumeGrid vol(wv.M, wv.voxel_size);
    vol.data = wv.coeffs;
    for (int n = 2; n <= wv.M; n *= 2)
        for (int axis = 2; axis >= 0; --axis)
            haar_axis_inverse(vol.data, wv.M, n, axis);
    return vol;
}

WaveletVector keep_largest(const WaveletVector& wv, long K) {
    const long total = static_cast<long>(wv.coeffs.size());
    if (K < 0 || K > total)
        fail(ErrorKind::config, "keep_largest: K must lie in [0, M^3]");
    WaveletVector out = wv;
    if (K == total) return out;
    if (K == 0) {
        std::fill(out.coeffs.begin(), out.coeffs.end(), 0.0);
        return out;
    }

    std::vector<std::size_t> order(out.coeffs.size());
    std::iota(order.begin(), order.end(), 0);
    const auto larger = [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(out.coeffs[a]);
        const double mb = std::abs(out.coeffs[b]);
        if (ma != mb) return ma > mb;
        return a < b; // deterministic tie-break by address
    };
    std::nth_element(order.begin(), order.begin() + (K - 1), order.end(), larger);
    std::vector<char> keep(out.coeffs.size(), 0);
    for (long i = 0; i < K; ++i) keep[order[i]] = 1;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i)
        if (!keep[i]) out.coeffs[i] = 0.0;
    return out;
}

VolumeGrid project_sparsity(const VolumeGrid& volume, long K) {
    const long total = static_cast<long>(volume.size());
    if (K < 0 || K > total)
        fail(ErrorKind::config, "project_sparsity: K must lie in [0, M^3]");
    if (K == total) return volume;
    return wavelet_inverse(keep_largest(wavelet_forward(volume), K));
}

} // namespace momrec
