#ifndef DIMP_IO_HPP
#define DIMP_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dimp/common.hpp"
#include "dimp/geometry.hpp"
#include "dimp/motion.hpp"

namespace dimp::io {

// "DPC1": magic, little-endian u32 L, u32 N, then L*N*3 float32 coordinates
// in frame-major, point-major, xyz order.
void write_dpc1(const std::string& path, const geom::DynamicPointCloud& seq);
geom::DynamicPointCloud read_dpc1(const std::string& path);

// "MOT1": magic, u32 N, u32 L-1, float32 entries in point-major,
// frame-major, xyz order, then one float32 RMS of the entries.
void write_mot1(const std::string& path, const motion::MotionField& field);
motion::MotionField read_mot1(const std::string& path, float* rms_out = nullptr);

// Whole-file helpers. Writes go through a temp file and rename.
void atomic_write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

std::string iso_timestamp();

// Fixed shortest-round-trip formatting for CSV cells.
std::string format_double(double v);

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_hashes; // path, hash
    std::vector<std::string> outputs;
    std::string started_at;
    std::string finished_at;
    int exit_status = 0;

    void write(const std::string& path) const; // atomic
};

} // namespace dimp::io

#endif
