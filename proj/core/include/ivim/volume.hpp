#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ivim {

/// Minimal multi-channel volume: a text header plus raw little-endian
/// float32 payload, channel index fastest. On-disk layout:
///
///   ivimvol 1
///   dims <nx> <ny> <nz> <nc>
///   kind <signal|params|uncertainty|quality|grid|mask>
///   names <name per channel>
///   units <free text>            (optional)
///   bvalues <one per channel>    (optional, signal volumes)
///   meta <key>=<value>           (repeatable)
///   checksum <crc32 hex of all preceding header bytes>
///   end
///   <nx*ny*nz*nc little-endian float32>
struct Volume {
    int nx = 0, ny = 0, nz = 0, nc = 0;
    std::string kind;
    std::vector<std::string> channel_names;
    std::vector<double> b_values; // empty unless kind == "signal"
    std::string units;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<float> data; // size nx*ny*nz*nc, c fastest

    static Volume make(int nx, int ny, int nz, int nc, std::string kind);

    std::size_t voxels() const { return std::size_t(nx) * ny * nz; }
    std::size_t size() const { return voxels() * nc; }

    std::size_t index(int x, int y, int z, int c) const {
        return ((std::size_t(z) * ny + y) * nx + x) * nc + c;
    }
    float& at(int x, int y, int z, int c) { return data[index(x, y, z, c)]; }
    float at(int x, int y, int z, int c) const { return data[index(x, y, z, c)]; }

    const std::string* find_meta(const std::string& key) const;
};

void write_volume(const std::filesystem::path& path, const Volume& volume);

/// Throws DataError on bad magic, checksum mismatch, or truncated payload.
Volume read_volume(const std::filesystem::path& path);

/// CSV interop: one row per voxel, columns x,y,z then one per channel.
void volume_to_csv(const Volume& volume, const std::filesystem::path& csv_path);
Volume csv_to_volume(const std::filesystem::path& csv_path, std::string kind);

/// CRC-32 (IEEE 802.3), used by the volume and model file formats.
std::uint32_t crc32(const void* bytes, std::size_t n, std::uint32_t seed = 0);

} // namespace ivim
