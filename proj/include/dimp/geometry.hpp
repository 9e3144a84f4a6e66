#ifndef DIMP_GEOMETRY_HPP
#define DIMP_GEOMETRY_HPP

#include <cstdint>
#include <vector>

#include "dimp/common.hpp"

namespace dimp::geom {

// An L-frame sequence of N 3D points. Frames all share the same point count.
struct DynamicPointCloud {
    std::vector<Points> frames;

    int num_frames() const { return static_cast<int>(frames.size()); }
    int points_per_frame() const {
        return frames.empty() ? 0 : static_cast<int>(frames[0].rows());
    }
    // Throws if frames are ragged or contain non-finite coordinates.
    void validate() const;

    DynamicPointCloud translated(const Vec3& v) const;
};

struct TubeParams {
    int K = 16;          // tube count
    double radius = 0.1; // spatial neighborhood radius
    int l = 3;           // temporal extent (odd)
    int n_pts = 32;      // points gathered per covered frame per tube
    int keypoint_frame = 0;
};

// K spatio-temporal tubes with centers, fixed-size membership and the
// visible/masked partition.
struct TubeSet {
    Points keypoints;  // K x 3 raw centers
    Points centered;   // K x 3 mean-centered centers
    // membership[i][f][j]: point index in frame frame_window[f] for tube i.
    std::vector<std::vector<std::vector<int>>> membership;
    std::vector<std::vector<std::vector<bool>>> padded; // true where membership repeats the keypoint
    std::vector<int> frame_window; // covered frame indices (shared keypoint frame)
    std::vector<int> visible_idx;  // sorted ascending
    std::vector<int> masked_idx;   // sorted ascending
    TubeParams params;

    int num_tubes() const { return static_cast<int>(keypoints.rows()); }
    int frames_per_tube() const { return static_cast<int>(frame_window.size()); }

    // Member coordinates of tube i relative to its raw keypoint, stacked
    // frame-major then point-major: (frames_per_tube * n_pts) x 3.
    Points relative_points(const DynamicPointCloud& seq, int tube) const;
};

// Greedy farthest point sampling. First pick is `start`; every subsequent
// pick maximizes the minimum squared distance to the selected set, ties
// broken by lowest index.
std::vector<int> farthest_point_sample(const Points& points, int k, int start);

// Indices with squared distance < r^2 to `center`, sorted by distance then
// index, truncated to max_n.
std::vector<int> radius_neighbors(const Points& points, const Vec3& center,
                                  double r, int max_n);

// Tokenize a sequence into tubes. Keypoints come from FPS on the keypoint
// frame with the start index drawn from rng_seed; frames within temporal
// distance < l/2 of the keypoint frame contribute up to n_pts radius
// neighbors each, padded with the keypoint coordinate when short.
TubeSet build_tubes(const DynamicPointCloud& seq, const TubeParams& params,
                    std::uint64_t rng_seed);

// Fill the visible/masked partition with K_v = floor(K*(1-rho)).
void mask_split(TubeSet& tubes, double rho, std::uint64_t rng_seed);

// Subtract the column mean.
Points center_normalize(const Points& centers);

// Symmetric Chamfer distance: mean-of-min squared distances, both directions.
double chamfer(const Points& a, const Points& b);

} // namespace dimp::geom

#endif
