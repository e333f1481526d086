#include "ivim/volume.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ivim/errors.hpp"

namespace ivim {

std::uint32_t crc32(const void* bytes, std::size_t n, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

Volume Volume::make(int nx, int ny, int nz, int nc, std::string kind) {
    if (nx < 1 || ny < 1 || nz < 1 || nc < 1) {
        throw DataError("volume: dimensions must be positive");
    }
    Volume v;
    v.nx = nx;
    v.ny = ny;
    v.nz = nz;
    v.nc = nc;
    v.kind = std::move(kind);
    v.data.assign(std::size_t(nx) * ny * nz * nc, 0.0f);
    return v;
}

const std::string* Volume::find_meta(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_volume(const std::filesystem::path& path, const Volume& volume) {
    if (volume.data.size() != volume.size()) {
        throw DataError("write_volume: payload size does not match dimensions");
    }
    std::ostringstream header;
    header << "ivimvol 1\n";
    header << "dims " << volume.nx << ' ' << volume.ny << ' ' << volume.nz << ' ' << volume.nc
           << '\n';
    header << "kind " << volume.kind << '\n';
    if (!volume.channel_names.empty()) {
        header << "names";
        for (const auto& n : volume.channel_names) header << ' ' << n;
        header << '\n';
    }
    if (!volume.units.empty()) header << "units " << volume.units << '\n';
    if (!volume.b_values.empty()) {
        header << "bvalues";
        for (double b : volume.b_values) header << ' ' << format_double(b);
        header << '\n';
    }
    for (const auto& [k, v] : volume.meta) header << "meta " << k << '=' << v << '\n';

    const std::string head = header.str();
    char checksum_line[32];
    std::snprintf(checksum_line, sizeof(checksum_line), "checksum %08x\n",
                  crc32(head.data(), head.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("write_volume: cannot open " + path.string());
    f << head << checksum_line << "end\n";
    f.write(reinterpret_cast<const char*>(volume.data.data()),
            static_cast<std::streamsize>(volume.data.size() * sizeof(float)));
    if (!f) throw DataError("write_volume: write failed for " + path.string());
}

Volume read_volume(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("read_volume: cannot open " + path.string());

    Volume v;
    std::string header_so_far;
    std::string line;
    bool saw_magic = false, saw_checksum = false, saw_end = false;
    while (std::getline(f, line)) {
        if (!saw_magic) {
            if (line != "ivimvol 1") {
                throw DataError("read_volume: not an ivimvol file: " + path.string());
            }
            saw_magic = true;
            header_so_far += line + '\n';
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "end") {
            saw_end = true;
            break;
        }
        if (key == "checksum") {
            std::string hex;
            ls >> hex;
            std::uint32_t stored = 0;
            auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), stored, 16);
            if (ec != std::errc() || ptr != hex.data() + hex.size()) {
                throw DataError("read_volume: malformed checksum line");
            }
            if (crc32(header_so_far.data(), header_so_far.size()) != stored) {
                throw DataError("read_volume: header checksum mismatch in " + path.string());
            }
            saw_checksum = true;
            continue;
        }
        header_so_far += line + '\n';
        if (key == "dims") {
            if (!(ls >> v.nx >> v.ny >> v.nz >> v.nc)) {
                throw DataError("read_volume: malformed dims line");
            }
        } else if (key == "kind") {
            ls >> v.kind;
        } else if (key == "names") {
            std::string n;
            while (ls >> n) v.channel_names.push_back(n);
        } else if (key == "units") {
            std::string rest;
            std::getline(ls, rest);
            v.units = rest.empty() ? rest : rest.substr(1);
        } else if (key == "bvalues") {
            double b;
            while (ls >> b) v.b_values.push_back(b);
        } else if (key == "meta") {
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty()) rest = rest.substr(1);
            const auto eq = rest.find('=');
            if (eq == std::string::npos) throw DataError("read_volume: malformed meta line");
            v.meta.emplace_back(rest.substr(0, eq), rest.substr(eq + 1));
        } else {
            throw DataError("read_volume: unknown header key '" + key + "'");
        }
    }
    if (!saw_end || !saw_checksum) {
        throw DataError("read_volume: incomplete header in " + path.string());
    }
    if (v.nx < 1 || v.ny < 1 || v.nz < 1 || v.nc < 1) {
        throw DataError("read_volume: invalid dims");
    }
    v.data.resize(v.size());
    f.read(reinterpret_cast<char*>(v.data.data()),
           static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (f.gcount() != static_cast<std::streamsize>(v.data.size() * sizeof(float))) {
        throw DataError("read_volume: payload truncated in " + path.string());
    }
    char extra;
    if (f.read(&extra, 1)) {
        throw DataError("read_volume: trailing bytes after payload in " + path.string());
    }
    return v;
}

void volume_to_csv(const Volume& volume, const std::filesystem::path& csv_path) {
    std::ofstream f(csv_path, std::ios::trunc);
    if (!f) throw DataError("volume_to_csv: cannot open " + csv_path.string());
    f << "x,y,z";
    for (int c = 0; c < volume.nc; ++c) {
        f << ',' << (c < static_cast<int>(volume.channel_names.size()) ? volume.channel_names[c]
                                                                       : "c" + std::to_string(c));
    }
    f << '\n';
    for (int z = 0; z < volume.nz; ++z) {
        for (int y = 0; y < volume.ny; ++y) {
            for (int x = 0; x < volume.nx; ++x) {
                f << x << ',' << y << ',' << z;
                for (int c = 0; c < volume.nc; ++c) {
                    f << ',' << format_double(volume.at(x, y, z, c));
                }
                f << '\n';
            }
        }
    }
}

Volume csv_to_volume(const std::filesystem::path& csv_path, std::string kind) {
    std::ifstream f(csv_path);
    if (!f) throw DataError("csv_to_volume: cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(f, line)) throw DataError("csv_to_volume: empty file");

    std::vector<std::string> names;
    {
        std::istringstream ls(line);
        std::string cell;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= 3) names.push_back(cell);
            ++col;
        }
        if (col < 4) throw DataError("csv_to_volume: need x,y,z plus at least one channel");
    }
    struct Row {
        int x, y, z;
        std::vector<float> vals;
    };
    std::vector<Row> rows;
    int max_x = -1, max_y = -1, max_z = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        Row r;
        for (int col = 0; std::getline(ls, cell, ','); ++col) {
            if (col == 0) r.x = std::stoi(cell);
            else if (col == 1) r.y = std::stoi(cell);
            else if (col == 2) r.z = std::stoi(cell);
            else r.vals.push_back(std::stof(cell));
        }
        if (r.vals.size() != names.size()) {
            throw DataError("csv_to_volume: row has wrong number of channels");
        }
        max_x = std::max(max_x, r.x);
        max_y = std::max(max_y, r.y);
        max_z = std::max(max_z, r.z);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError("csv_to_volume: no data rows");
    Volume v = Volume::make(max_x + 1, max_y + 1, max_z + 1, static_cast<int>(names.size()),
                            std::move(kind));
    v.channel_names = names;
    if (rows.size() != v.voxels()) {
        throw DataError("csv_to_volume: row count does not fill the volume");
    }
    for (const auto& r : rows) {
        for (int c = 0; c < v.nc; ++c) v.at(r.x, r.y, r.z, c) = r.vals[c];
    }
    return v;
}

} // namespace ivim
