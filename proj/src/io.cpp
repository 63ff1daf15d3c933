#include "momrec/io.hpp"

#include <bit>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "momrec/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw float64 containers assume a little-endian host");

namespace momrec {

namespace {

void write_raw(const std::string& path, const double* data, std::size_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) fail(ErrorKind::io, "write failed for " + path);
}

std::vector<double> read_raw(const std::string& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) fail(ErrorKind::io, "cannot open " + path);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    const std::size_t expected_bytes = expected_count * sizeof(double);
    if (bytes != expected_bytes)
        fail(ErrorKind::io, path + ": expected " + std::to_string(expected_bytes) + " bytes, found " +
                                std::to_string(bytes));
    in.seekg(0);
    std::vector<double> data(expected_count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected_bytes));
    if (!in) fail(ErrorKind::io, "read failed for " + path);
    return data;
}

nlohmann::json read_sidecar(const std::string& path) {
    std::ifstream in(path + ".json");
    if (!in) fail(ErrorKind::io, "missing sidecar " + path + ".json");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::io, "malformed sidecar " + path + ".json: " + e.what());
    }
    return j;
}

void write_sidecar(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path + ".json");
    if (!out) fail(ErrorKind::io, "cannot open sidecar " + path + ".json");
    out << j.dump(2) << "\n";
}

} // namespace

void write_volume(const std::string& path, const VolumeGrid& volume) {
    write_raw(path, volume.data.data(), volume.size());
    write_sidecar(path, {{"M", volume.M}, {"voxel_size_angstrom", volume.voxel_size}});
}

VolumeGrid read_volume(const std::string& path) {
    const nlohmann::json j = read_sidecar(path);
    if (!j.contains("M") || !j.contains("voxel_size_angstrom"))
        fail(ErrorKind::io, "sidecar " + path + ".json lacks M / voxel_size_angstrom");
    const int m = j["M"].get<int>();
    if (m <= 0) fail(ErrorKind::io, "sidecar " + path + ".json: invalid M");
    VolumeGrid vol(m, j["voxel_size_angstrom"].get<double>());
    vol.data = read_raw(path, vol.size());
    return vol;
}

void write_coefficients(const std::string& path, const BesselCoefficients& coeffs,
                        const std::string& kind) {
    std::vector<int> s_list;
    std::size_t total = 0;
    for (const auto& m : coeffs.mats) {
        s_list.push_back(static_cast<int>(m.rows()));
        total += static_cast<std::size_t>(m.size());
    }
    std::vector<double> flat;
    flat.reserve(total);
    for (const auto& m : coeffs.mats)
        flat.insert(flat.end(), m.data(), m.data() + m.size());
    write_raw(path, flat.data(), flat.size());
    write_sidecar(path, {{"kind", kind},
                         {"L", coeffs.degrees() - 1},
                         {"S_list", s_list},
                         {"voxel_size_angstrom", coeffs.voxel_size},
                         {"convention", "real-SH-il"}});
}

BesselCoefficients read_coefficients(const std::string& path) {
    const nlohmann::json j = read_sidecar(path);
    if (!j.contains("L") || !j.contains("S_list"))
        fail(ErrorKind::io, "sidecar " + path + ".json lacks L / S_list");
    if (j.value("convention", "") != std::string("real-SH-il"))
        fail(ErrorKind::io, "sidecar " + path + ".json: unsupported coefficient convention");
    const int L = j["L"].get<int>();
    const auto s_list = j["S_list"].get<std::vector<int>>();
    if (static_cast<int>(s_list.size()) != L + 1)
        fail(ErrorKind::io, "sidecar " + path + ".json: S_list length does not match L");

    std::size_t total = 0;
    for (int l = 0; l <= L; ++l) total += static_cast<std::size_t>(s_list[l]) * (2 * l + 1);
    const std::vector<double> flat = read_raw(path, total);

    BesselCoefficients out;
    out.voxel_size = j.value("voxel_size_angstrom", 1.0);
    std::size_t off = 0;
    for (int l = 0; l <= L; ++l) {
        const int rows = s_list[l], cols = 2 * l + 1;
        Eigen::MatrixXd m(rows, cols);
        std::copy(flat.begin() + off, flat.begin() + off + m.size(), m.data());
        off += static_cast<std::size_t>(m.size());
        out.mats.push_back(std::move(m));
    }
    return out;
}

void write_cl(const std::string& path, const std::vector<Eigen::MatrixXd>& cl) {
    std::vector<int> s_list;
    std::vector<double> flat;
    for (const auto& m : cl) {
        s_list.push_back(static_cast<int>(m.rows()));
        flat.insert(flat.end(), m.data(), m.data() + m.size());
    }
    write_raw(path, flat.data(), flat.size());
    write_sidecar(path, {{"kind", "cl"},
                         {"L", static_cast<int>(cl.size()) - 1},
                         {"S_list", s_list},
                         {"convention", "real-SH-il"}});
}

std::vector<Eigen::MatrixXd> read_cl(const std::string& path) {
    const nlohmann::json j = read_sidecar(path);
    if (j.value("kind", "") != std::string("cl"))
        fail(ErrorKind::io, "sidecar " + path + ".json: kind is not 'cl'");
    const auto s_list = j["S_list"].get<std::vector<int>>();
    std::size_t total = 0;
    for (int s : s_list) total += static_cast<std::size_t>(s) * s;
    const std::vector<double> flat = read_raw(path, total);

    std::vector<Eigen::MatrixXd> out;
    std::size_t off = 0;
    for (int s : s_list) {
        Eigen::MatrixXd m(s, s);
        std::copy(flat.begin() + off, flat.begin() + off + m.size(), m.data());
        off += static_cast<std::size_t>(m.size());
        out.push_back(std::move(m));
    }
    return out;
}

void write_tensor(const std::string& path, const MomentTensor& tensor, double kappa, double sigma,
                  std::uint64_t seed) {
    write_raw(path, tensor.values.data(), static_cast<std::size_t>(tensor.values.size()));
    const long d = 1L << (2 * tensor.m);
    write_sidecar(path, {{"shape", {d, d}},
                         {"m", tensor.m},
                         {"kappa", kappa},
                         {"sigma", sigma},
                         {"seed", seed}});
}

MomentTensor read_tensor(const std::string& path) {
    const nlohmann::json j = read_sidecar(path);
    if (!j.contains("m")) fail(ErrorKind::io, "sidecar " + path + ".json lacks m");
    MomentTensor t;
    t.m = j["m"].get<int>();
    const long d = 1L << (2 * t.m);
    const std::vector<double> flat = read_raw(path, static_cast<std::size_t>(d) * d);
    t.values = Eigen::Map<const Eigen::MatrixXd>(flat.data(), d, d);
    return t;
}

} // namespace momrec
