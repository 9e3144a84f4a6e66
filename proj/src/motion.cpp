#include "dimp/motion.hpp"

#include <cmath>

#include "dimp/rng.hpp"

namespace dimp::motion {

std::vector<int> knn_correspondence(const Points& frame_a, const Points& frame_b) {
    check_arg(frame_a.rows() == frame_b.rows(), "knn_correspondence: frame size mismatch");
    const int n = static_cast<int>(frame_a.rows());
    std::vector<int> corr(n);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_j = 0;
        for (int j = 0; j < n; ++j) {
            const double d2 = (frame_b.row(j) - frame_a.row(i)).squaredNorm();
            if (d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        corr[i] = best_j;
    }
    return corr;
}

namespace {

MotionField assemble(const geom::DynamicPointCloud& seq,
                     std::vector<std::vector<int>> corr) {
    const int n = seq.points_per_frame();
    const int trans = seq.num_frames() - 1;
    MotionField mf;
    mf.n_points = n;
    mf.n_transitions = trans;
    mf.correspondence = std::move(corr);
    mf.m0.resize(static_cast<Eigen::Index>(n) * trans, 3);
    for (int i = 0; i < n; ++i) {
        for (int t = 0; t < trans; ++t) {
            const int j = mf.correspondence[t][i];
            mf.m0.row(static_cast<Eigen::Index>(i) * trans + t) =
                seq.frames[t + 1].row(j) - seq.frames[t].row(i);
        }
    }
    return mf;
}

} // namespace

MotionField displacement_field(const geom::DynamicPointCloud& seq) {
    seq.validate();
    check_arg(seq.num_frames() >= 2, "displacement_field: need at least 2 frames");
    std::vector<std::vector<int>> corr;
    for (int t = 0; t + 1 < seq.num_frames(); ++t) {
        corr.push_back(knn_correspondence(seq.frames[t], seq.frames[t + 1]));
    }
    return assemble(seq, std::move(corr));
}

MotionField displacement_field_oracle(const geom::DynamicPointCloud& seq) {
    seq.validate();
    check_arg(seq.num_frames() >= 2, "displacement_field: need at least 2 frames");
    std::vector<int> ident(seq.points_per_frame());
    for (int i = 0; i < seq.points_per_frame(); ++i) ident[i] = i;
    std::vector<std::vector<int>> corr(seq.num_frames() - 1, ident);
    return assemble(seq, std::move(corr));
}

double sample_diversity(const std::vector<Mat>& samples) {
    check_arg(samples.size() >= 2, "sample_diversity: need at least 2 samples");
    const double dim = static_cast<double>(samples[0].size());
    double sum = 0.0;
    int pairs = 0;
    for (size_t a = 0; a < samples.size(); ++a) {
        for (size_t b = a + 1; b < samples.size(); ++b) {
            check_arg(samples[b].rows() == samples[0].rows() &&
                          samples[b].cols() == samples[0].cols(),
                      "sample_diversity: sample shape mismatch");
            sum += (samples[a] - samples[b]).norm();
            ++pairs;
        }
    }
    return sum / pairs / std::sqrt(dim);
}

std::vector<std::pair<int, double>> timestep_error_profile(
    const std::vector<Mat>& dataset_m0, const diff::DiffusionSchedule& sched,
    const std::vector<int>& t_grid, const EpsPredictor& predict,
    std::uint64_t rng_seed) {
    check_arg(!dataset_m0.empty(), "timestep_error_profile: empty dataset");
    std::vector<std::pair<int, double>> profile;
    for (const int t : t_grid) {
        double err_sum = 0.0;
        double count = 0.0;
        for (size_t item = 0; item < dataset_m0.size(); ++item) {
            Rng rng(mix_seed(rng_seed, mix_seed(static_cast<std::uint64_t>(t), item)));
            const Mat& m0 = dataset_m0[item];
            const Mat eps = rng.normal_mat(m0.rows(), m0.cols());
            const Mat m_t = diff::forward_sample(m0, t, eps, sched);
            const Mat eps_hat = predict(m_t, t, static_cast<int>(item));
            const Mat m0_hat = diff::x0_from_eps(m_t, eps_hat, t, sched);
            err_sum += (m0_hat - m0).squaredNorm();
            count += static_cast<double>(m0.size());
        }
        profile.emplace_back(t, err_sum / count);
    }
    return profile;
}

std::vector<int> decile_grid(int T) {
    check_arg(T >= 10, "decile_grid: T must be >= 10");
    std::vector<int> grid;
    for (int i = 1; i <= 10; ++i) {
        grid.push_back(std::max(1, (i * T) / 10));
    }
    return grid;
}

} // namespace dimp::motion
