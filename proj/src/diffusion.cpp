#include "dimp/diffusion.hpp"

#include <cmath>
#include <string>

namespace dimp::diff {

double DiffusionSchedule::beta_at(int t) const {
    check_arg(t >= 1 && t <= T, "DiffusionSchedule: t out of range");
    return beta[t - 1];
}

double DiffusionSchedule::alpha_bar_at(int t) const {
    check_arg(t >= 0 && t <= T, "DiffusionSchedule: t out of range");
    return t == 0 ? 1.0 : alpha_bar[t - 1];
}

void DiffusionSchedule::validate() const {
    check_arg(T >= 2, "DiffusionSchedule: T must be >= 2");
    check_arg(static_cast<int>(beta.size()) == T &&
                  static_cast<int>(alpha_bar.size()) == T,
              "DiffusionSchedule: table length mismatch");
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double b = beta[t - 1];
        const double a = alpha_bar[t - 1];
        check_arg(b > 0.0 && b <= clamp, "DiffusionSchedule: beta out of (0, clamp]");
        check_arg(a < prev, "DiffusionSchedule: alpha_bar not strictly decreasing");
        check_arg(a == prev * (1.0 - b), "DiffusionSchedule: cumprod identity broken");
        prev = a;
    }
    check_arg(alpha_bar.front() < 1.0, "DiffusionSchedule: alpha_bar_1 must be < 1");
    check_arg(alpha_bar.back() > 0.0, "DiffusionSchedule: alpha_bar_T must be > 0");
}

DiffusionSchedule make_cosine_schedule(int T, double s, double clamp) {
    check_arg(T >= 2, "make_cosine_schedule: T must be >= 2");
    DiffusionSchedule sched;
    sched.T = T;
    sched.s = s;
    sched.clamp = clamp;

    auto f = [&](double t) {
        const double x = ((t / T) + s) / (1.0 + s) * (M_PI / 2.0);
        return sq(std::cos(x));
    };
    const double f0 = f(0.0);

    sched.beta.resize(T);
    sched.alpha_bar.resize(T);
    double prev_raw = 1.0;
    double abar = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double raw = f(static_cast<double>(t)) / f0;
        double b = 1.0 - raw / prev_raw;
        if (b > clamp) b = clamp;
        prev_raw = raw;
        abar *= (1.0 - b);
        sched.beta[t - 1] = b;
        sched.alpha_bar[t - 1] = abar;
    }
    sched.validate();
    return sched;
}

Mat forward_with_alpha_bar(const Mat& x0, double alpha_bar, const Mat& eps) {
    check_arg(x0.rows() == eps.rows() && x0.cols() == eps.cols(),
              "forward_sample: shape mismatch between x0 and eps");
    return std::sqrt(alpha_bar) * x0 + std::sqrt(1.0 - alpha_bar) * eps;
}

Mat forward_sample(const Mat& x0, int t, const Mat& eps, const DiffusionSchedule& sched) {
    check_arg(t >= 1 && t <= sched.T, "forward_sample: t out of range");
    return forward_with_alpha_bar(x0, sched.alpha_bar_at(t), eps);
}

double snr(const DiffusionSchedule& sched, int t) {
    const double a = sched.alpha_bar_at(t);
    check_arg(t >= 1, "snr: t out of range");
    if (a >= 1.0) throw NumericError("snr: alpha_bar is 1, SNR infinite");
    return a / (1.0 - a);
}

std::vector<std::pair<int, int>> stratified_intervals(int T, int h) {
    check_arg(h >= 1 && h <= T, "stratified_intervals: need 1 <= h <= T");
    const int d = T / h;
    std::vector<std::pair<int, int>> q(h);
    for (int i = 0; i < h; ++i) {
        const int lo = d * i + 1;
        const int hi = (i == h - 1) ? T : d * (i + 1);
        q[i] = {lo, hi};
    }
    return q;
}

StratifiedDraw stratified_timesteps(int T, int h, Eigen::Index rows,
                                    Eigen::Index cols, std::uint64_t rng_seed) {
    StratifiedDraw draw;
    draw.h = h;
    draw.intervals = stratified_intervals(T, h);
    Rng rng(rng_seed);
    draw.timesteps.resize(h);
    draw.noises.resize(h);
    for (int i = 0; i < h; ++i) {
        draw.timesteps[i] = static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(draw.intervals[i].first),
            static_cast<std::uint64_t>(draw.intervals[i].second)));
        draw.noises[i] = rng.normal_mat(rows, cols);
    }
    return draw;
}

Mat x0_from_eps(const Mat& x_t, const Mat& eps_hat, int t, const DiffusionSchedule& sched) {
    check_arg(x_t.rows() == eps_hat.rows() && x_t.cols() == eps_hat.cols(),
              "x0_from_eps: shape mismatch");
    const double a = sched.alpha_bar_at(t);
    check_arg(t >= 1, "x0_from_eps: t out of range");
    return (x_t - std::sqrt(1.0 - a) * eps_hat) / std::sqrt(a);
}

Mat ancestral_sample(const NoiseFn& noise_fn, const Mat& cond, Eigen::Index rows,
                     Eigen::Index cols, const DiffusionSchedule& sched,
                     std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    Mat x = rng.normal_mat(rows, cols);
    for (int t = sched.T; t >= 1; --t) {
        const Mat eps_hat = noise_fn(x, t, cond);
        if (!eps_hat.allFinite()) {
            throw NumericError("ancestral_sample: non-finite noise prediction at t=" +
                               std::to_string(t));
        }
        const double beta = sched.beta_at(t);
        const double abar = sched.alpha_bar_at(t);
        const double abar_prev = sched.alpha_bar_at(t - 1);
        Mat mean = (x - (beta / std::sqrt(1.0 - abar)) * eps_hat) / std::sqrt(1.0 - beta);
        if (t > 1) {
            const double sigma = std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar));
            mean += sigma * rng.normal_mat(rows, cols);
        }
        x = std::move(mean);
    }
    return x;
}

} // namespace dimp::diff
