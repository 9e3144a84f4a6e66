#include "dimp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dimp/rng.hpp"

namespace dimp::geom {

void DynamicPointCloud::validate() const {
    check_arg(!frames.empty(), "DynamicPointCloud: no frames");
    const auto n = frames[0].rows();
    check_arg(n > 0, "DynamicPointCloud: empty frame");
    for (const auto& f : frames) {
        check_arg(f.rows() == n, "DynamicPointCloud: ragged frame sizes");
        check_arg(f.allFinite(), "DynamicPointCloud: non-finite coordinate");
    }
}

DynamicPointCloud DynamicPointCloud::translated(const Vec3& v) const {
    DynamicPointCloud out = *this;
    for (auto& f : out.frames) f.rowwise() += v.transpose();
    return out;
}

std::vector<int> farthest_point_sample(const Points& points, int k, int start) {
    const int m = static_cast<int>(points.rows());
    check_arg(m > 0, "farthest_point_sample: empty input");
    check_arg(k >= 1 && k <= m, "farthest_point_sample: k out of range");
    check_arg(start >= 0 && start < m, "farthest_point_sample: bad start index");

    std::vector<int> selected;
    selected.reserve(k);
    selected.push_back(start);

    // min squared distance from each point to the selected set
    Eigen::VectorXd min_d2 =
        (points.rowwise() - points.row(start)).rowwise().squaredNorm();

    for (int step = 1; step < k; ++step) {
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < m; ++i) {
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        selected.push_back(best);
        Eigen::VectorXd d2 =
            (points.rowwise() - points.row(best)).rowwise().squaredNorm();
        min_d2 = min_d2.cwiseMin(d2);
    }
    return selected;
}

std::vector<int> radius_neighbors(const Points& points, const Vec3& center,
                                  double r, int max_n) {
    check_arg(r > 0.0, "radius_neighbors: r must be positive");
    check_arg(max_n >= 1, "radius_neighbors: max_n must be >= 1");
    const double r2 = r * r;
    const int m = static_cast<int>(points.rows());

    std::vector<std::pair<double, int>> hits;
    for (int i = 0; i < m; ++i) {
        const double d2 = (points.row(i).transpose() - center).squaredNorm();
        if (d2 < r2) hits.emplace_back(d2, i);
    }
    std::sort(hits.begin(), hits.end());
    if (static_cast<int>(hits.size()) > max_n) hits.resize(max_n);

    std::vector<int> idx;
    idx.reserve(hits.size());
    for (const auto& [d2, i] : hits) idx.push_back(i);
    return idx;
}

TubeSet build_tubes(const DynamicPointCloud& seq, const TubeParams& params,
                    std::uint64_t rng_seed) {
    seq.validate();
    const int n = seq.points_per_frame();
    const int num_frames = seq.num_frames();
    check_arg(params.K >= 1 && params.K <= n, "build_tubes: K out of range");
    check_arg(params.l >= 1 && params.l % 2 == 1, "build_tubes: l must be odd");
    check_arg(params.n_pts >= 1, "build_tubes: n_pts must be >= 1");
    check_arg(params.keypoint_frame >= 0 && params.keypoint_frame < num_frames,
              "build_tubes: keypoint_frame out of range");

    TubeSet tubes;
    tubes.params = params;

    Rng rng(rng_seed);
    const int start = rng.index(n);
    const Points& kf = seq.frames[params.keypoint_frame];
    const std::vector<int> key_idx = farthest_point_sample(kf, params.K, start);

    tubes.keypoints.resize(params.K, 3);
    for (int i = 0; i < params.K; ++i) tubes.keypoints.row(i) = kf.row(key_idx[i]);
    tubes.centered = center_normalize(tubes.keypoints);

    // Frames with temporal distance < l/2 of the keypoint frame.
    const double half = params.l / 2.0;
    for (int f = 0; f < num_frames; ++f) {
        if (std::abs(f - params.keypoint_frame) < half) tubes.frame_window.push_back(f);
    }

    tubes.membership.resize(params.K);
    tubes.padded.resize(params.K);
    for (int i = 0; i < params.K; ++i) {
        const Vec3 center = tubes.keypoints.row(i).transpose();
        tubes.membership[i].resize(tubes.frame_window.size());
        tubes.padded[i].resize(tubes.frame_window.size());
        for (size_t w = 0; w < tubes.frame_window.size(); ++w) {
            const int f = tubes.frame_window[w];
            std::vector<int> nb =
                radius_neighbors(seq.frames[f], center, params.radius, params.n_pts);
            std::vector<bool> pad(params.n_pts, false);
            // Pad short tubes by repeating the keypoint coordinate. The padded
            // entries keep index -1 so consumers can recognize the repeat.
            while (static_cast<int>(nb.size()) < params.n_pts) {
                nb.push_back(-1);
                pad[nb.size() - 1] = true;
            }
            tubes.membership[i][w] = std::move(nb);
            tubes.padded[i][w] = std::move(pad);
        }
    }
    return tubes;
}

void mask_split(TubeSet& tubes, double rho, std::uint64_t rng_seed) {
    check_arg(rho > 0.0 && rho < 1.0, "mask_split: rho must be in (0,1)");
    const int k = tubes.num_tubes();
    const int k_v = static_cast<int>(std::floor(k * (1.0 - rho)));
    const int k_m = k - k_v;
    check_arg(k_v >= 1 && k_m >= 1,
              "mask_split: degenerate partition (K_v or K_m is zero)");

    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    Rng rng(rng_seed);
    rng.shuffle(perm);

    tubes.visible_idx.assign(perm.begin(), perm.begin() + k_v);
    tubes.masked_idx.assign(perm.begin() + k_v, perm.end());
    std::sort(tubes.visible_idx.begin(), tubes.visible_idx.end());
    std::sort(tubes.masked_idx.begin(), tubes.masked_idx.end());
}

Points center_normalize(const Points& centers) {
    check_arg(centers.rows() >= 1, "center_normalize: empty input");
    Points out = centers;
    out.rowwise() -= centers.colwise().mean();
    return out;
}

double chamfer(const Points& a, const Points& b) {
    check_arg(a.rows() > 0 && b.rows() > 0, "chamfer: empty point set");
    double sum_ab = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        sum_ab += (b.rowwise() - a.row(i)).rowwise().squaredNorm().minCoeff();
    }
    double sum_ba = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        sum_ba += (a.rowwise() - b.row(j)).rowwise().squaredNorm().minCoeff();
    }
    return sum_ab / static_cast<double>(a.rows()) +
           sum_ba / static_cast<double>(b.rows());
}

Points TubeSet::relative_points(const DynamicPointCloud& seq, int tube) const {
    const int f_per = frames_per_tube();
    const int n = params.n_pts;
    Points out(f_per * n, 3);
    const Eigen::RowVector3d center = keypoints.row(tube);
    for (int w = 0; w < f_per; ++w) {
        const int f = frame_window[w];
        for (int j = 0; j < n; ++j) {
            const int idx = membership[tube][w][j];
            if (idx < 0) {
                out.row(w * n + j).setZero(); // keypoint repeat, zero offset
            } else {
                out.row(w * n + j) = seq.frames[f].row(idx) - center;
            }
        }
    }
    return out;
}

} // namespace dimp::geom
