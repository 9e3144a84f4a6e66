#ifndef DIMP_MOTION_HPP
#define DIMP_MOTION_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "dimp/common.hpp"
#include "dimp/diffusion.hpp"
#include "dimp/geometry.hpp"

namespace dimp::motion {

// Per-point inter-frame displacements. m0 stacks rows point-major then
// frame-major: row i*(L-1)+t holds frames[t+1][corr_t(i)] - frames[t][i].
struct MotionField {
    Mat m0; // (N*(L-1)) x 3
    std::vector<std::vector<int>> correspondence; // (L-1) maps of size N
    int n_points = 0;
    int n_transitions = 0; // L-1

    Eigen::Index rows() const { return m0.rows(); }
};

// corr(i) = argmin_j ||frame_b[j] - frame_a[i]||^2, ties by lowest j.
std::vector<int> knn_correspondence(const Points& frame_a, const Points& frame_b);

// Nearest-neighbor correspondence applied to each consecutive frame pair.
// Computed offline; never receives gradients.
MotionField displacement_field(const geom::DynamicPointCloud& seq);

// Identity correspondence variant for generators that track point identity.
MotionField displacement_field_oracle(const geom::DynamicPointCloud& seq);

// Mean pairwise l2 distance between flattened samples, divided by the
// square root of the flattened dimension.
double sample_diversity(const std::vector<Mat>& samples);

// Denoising error profile: corrupt m0 at each grid step, run the predictor,
// invert to x0, report the mean squared error per coordinate.
using EpsPredictor = std::function<Mat(const Mat& m_t, int t, int item)>;
std::vector<std::pair<int, double>> timestep_error_profile(
    const std::vector<Mat>& dataset_m0, const diff::DiffusionSchedule& sched,
    const std::vector<int>& t_grid, const EpsPredictor& predict,
    std::uint64_t rng_seed);

// Decile grid over [1, T].
std::vector<int> decile_grid(int T);

} // namespace dimp::motion

#endif
