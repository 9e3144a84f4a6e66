#ifndef DIMP_DIFFUSION_HPP
#define DIMP_DIFFUSION_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dimp/common.hpp"
#include "dimp/rng.hpp"

namespace dimp::diff {

// DDPM variance schedule. Timesteps are 1-based to match the stratified
// interval arithmetic; alpha_bar(0) is defined as 1 for the t = 1 posterior.
struct DiffusionSchedule {
    int T = 0;
    double s = 0.008;      // cosine offset
    double clamp = 0.999;  // beta ceiling
    std::vector<double> beta;      // beta[t-1] = beta_t
    std::vector<double> alpha_bar; // alpha_bar[t-1] = prod_{u<=t}(1-beta_u)

    double beta_at(int t) const;
    double alpha_bar_at(int t) const; // alpha_bar_at(0) == 1
    void validate() const;
};

// Cosine schedule: alpha_bar_t = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1+s)) * pi/2),
// beta clamped to <= `clamp` and alpha_bar rebuilt from the clamped betas.
DiffusionSchedule make_cosine_schedule(int T, double s = 0.008, double clamp = 0.999);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps for a given abar coefficient.
Mat forward_with_alpha_bar(const Mat& x0, double alpha_bar, const Mat& eps);

// Forward corruption at schedule step t.
Mat forward_sample(const Mat& x0, int t, const Mat& eps, const DiffusionSchedule& sched);

// Signal-to-noise ratio alpha_bar_t / (1 - alpha_bar_t).
double snr(const DiffusionSchedule& sched, int t);

// One timestep drawn uniformly from each of h near-equal intervals of [1, T],
// with a matching independent standard-normal noise tensor per interval.
struct StratifiedDraw {
    int h = 0;
    std::vector<std::pair<int, int>> intervals; // inclusive [lo, hi]
    std::vector<int> timesteps;
    std::vector<Mat> noises;
};

// Interval layout only: d = floor(T/h); Q_i = [d*i+1, d*(i+1)] for i < h-1,
// the last interval absorbs the remainder up to T.
std::vector<std::pair<int, int>> stratified_intervals(int T, int h);

StratifiedDraw stratified_timesteps(int T, int h, Eigen::Index rows,
                                    Eigen::Index cols, std::uint64_t rng_seed);

// x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
Mat x0_from_eps(const Mat& x_t, const Mat& eps_hat, int t, const DiffusionSchedule& sched);

// Ancestral DDPM reverse sampling from pure noise, with the small-variance
// posterior sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t) and z = 0 at t = 1.
using NoiseFn = std::function<Mat(const Mat& x_t, int t, const Mat& cond)>;
Mat ancestral_sample(const NoiseFn& noise_fn, const Mat& cond, Eigen::Index rows,
                     Eigen::Index cols, const DiffusionSchedule& sched,
                     std::uint64_t rng_seed);

} // namespace dimp::diff

#endif
