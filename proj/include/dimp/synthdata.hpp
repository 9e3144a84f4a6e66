#ifndef DIMP_SYNTHDATA_HPP
#define DIMP_SYNTHDATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dimp/common.hpp"
#include "dimp/geometry.hpp"
#include "dimp/motion.hpp"

namespace dimp::synth {

// Motion law of one class: per-point sinusoidal offsets along a
// class-specific direction field, optional constant drift, Gaussian jitter.
//   x_i(t) = x_i(0) + phase * A * sin(2*pi*f*t + psi_i) * d_i + t*drift + eta_{i,t}
struct MotionClassParams {
    bool phase_random = false; // phase drawn uniformly from {+1,-1} per sequence
    double fixed_phase = 1.0;
    double amplitude = 0.0;
    double frequency = 0.25; // cycles per frame
    double noise_std = 0.0;
    Vec3 drift = Vec3::Zero(); // per-frame constant displacement
    std::uint64_t direction_seed = 0; // direction field d_i
    std::uint64_t template_seed = 0;  // shape template
    std::string name;
};

struct GeneratorParams {
    int L = 8;
    int N = 256;
    double box_lo = 0.0; // axis-aligned bounding box [box_lo, box_hi]^3
    double box_hi = 1.0;
    std::vector<MotionClassParams> classes;
    std::uint64_t seed = 0;

    int n_classes() const { return static_cast<int>(classes.size()); }
    void validate() const;
};

// Four classes: a shared-mean pair (random-phase oscillation vs. matched
// variance jitter, identical templates) and a distinct-mean control pair
// (opposite drifts, identical templates).
GeneratorParams default_generator_params(std::uint64_t seed);

struct GeneratedSequence {
    geom::DynamicPointCloud seq;
    motion::MotionField field; // oracle point-identity correspondence
    int label = 0;
};

// Deterministic for a fixed (params, class_id, seq_seed).
GeneratedSequence gen_sequence(int class_id, const GeneratorParams& params,
                               std::uint64_t seq_seed);

struct ManifestItem {
    std::string path;        // DPC1 file, relative to the manifest
    std::string motion_path; // MOT1 file
    int label = 0;
    std::string split; // "train" / "test"
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    int version = 1;
    std::vector<std::string> classes;
    std::vector<ManifestItem> items;
    double motion_rms = 0.0; // dataset-level displacement RMS over the train split
    GeneratorParams params;
    std::string base_dir; // directory holding the item files (set on load)

    std::vector<const ManifestItem*> split_items(const std::string& split) const;
    std::string resolve(const std::string& rel) const;
};

// Writes DPC1/MOT1 files plus manifest.json under out_dir. Classes are
// assigned round-robin; the tail floor(count * f) items of each non-train
// fraction form the later splits, the remainder is train.
DatasetManifest gen_dataset(const GeneratorParams& params, int count,
                            const std::vector<double>& split_fractions,
                            std::uint64_t seed, const std::string& out_dir);

DatasetManifest load_manifest(const std::string& manifest_path);

} // namespace dimp::synth

#endif
