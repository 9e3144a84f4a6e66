#include "dimp/io.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace dimp::io {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("io: truncated file (u32)");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    const std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

} // namespace

void write_dpc1(const std::string& path, const geom::DynamicPointCloud& seq) {
    seq.validate();
    std::ostringstream os(std::ios::binary);
    os.write("DPC1", 4);
    write_u32(os, static_cast<std::uint32_t>(seq.num_frames()));
    write_u32(os, static_cast<std::uint32_t>(seq.points_per_frame()));
    for (const auto& frame : seq.frames) {
        for (Eigen::Index i = 0; i < frame.rows(); ++i) {
            for (int c = 0; c < 3; ++c) write_f32(os, static_cast<float>(frame(i, c)));
        }
    }
    atomic_write_file(path, os.str());
}

geom::DynamicPointCloud read_dpc1(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_dpc1: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "DPC1", 4) != 0) {
        throw std::runtime_error("read_dpc1: bad magic in " + path);
    }
    const auto l = read_u32(is);
    const auto n = read_u32(is);
    geom::DynamicPointCloud seq;
    seq.frames.resize(l);
    for (auto& frame : seq.frames) {
        frame.resize(n, 3);
        for (std::uint32_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) frame(i, c) = read_f32(is);
        }
    }
    if (!is) throw std::runtime_error("read_dpc1: truncated file " + path);
    return seq;
}

void write_mot1(const std::string& path, const motion::MotionField& field) {
    std::ostringstream os(std::ios::binary);
    os.write("MOT1", 4);
    write_u32(os, static_cast<std::uint32_t>(field.n_points));
    write_u32(os, static_cast<std::uint32_t>(field.n_transitions));
    for (Eigen::Index r = 0; r < field.m0.rows(); ++r) {
        for (int c = 0; c < 3; ++c) write_f32(os, static_cast<float>(field.m0(r, c)));
    }
    const double rms = std::sqrt(field.m0.squaredNorm() /
                                 std::max<double>(1.0, static_cast<double>(field.m0.size())));
    write_f32(os, static_cast<float>(rms));
    atomic_write_file(path, os.str());
}

motion::MotionField read_mot1(const std::string& path, float* rms_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_mot1: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::strncmp(magic, "MOT1", 4) != 0) {
        throw std::runtime_error("read_mot1: bad magic in " + path);
    }
    motion::MotionField field;
    field.n_points = static_cast<int>(read_u32(is));
    field.n_transitions = static_cast<int>(read_u32(is));
    field.m0.resize(static_cast<Eigen::Index>(field.n_points) * field.n_transitions, 3);
    for (Eigen::Index r = 0; r < field.m0.rows(); ++r) {
        for (int c = 0; c < 3; ++c) field.m0(r, c) = read_f32(is);
    }
    const float rms = read_f32(is);
    if (!is) throw std::runtime_error("read_mot1: truncated file " + path);
    if (rms_out) *rms_out = rms;
    return field;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
        os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!os) throw std::runtime_error("atomic_write_file: short write " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_file: cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::string hash_file(const std::string& path) { return fnv1a_hex(read_file(path)); }

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void RunManifest::write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& [p, h] : input_hashes) inputs.push_back({{"path", p}, {"hash", h}});
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["exit_status"] = exit_status;
    atomic_write_file(path, j.dump(2) + "\n");
}

} // namespace dimp::io
