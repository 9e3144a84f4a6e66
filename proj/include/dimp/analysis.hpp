#ifndef DIMP_ANALYSIS_HPP
#define DIMP_ANALYSIS_HPP

#include <cstdint>
#include <utility>

#include "dimp/common.hpp"
#include "dimp/diffusion.hpp"

namespace dimp::analysis {

// Joint distribution of a discrete label A (rows) and a discretized motion
// statistic M (columns).
struct DiscreteJoint {
    Mat p;
    void validate() const; // nonnegative, sums to 1 within 1e-12
};

// I(A;M) in bits, with 0 log 0 := 0.
double discrete_mutual_information(const DiscreteJoint& joint);

double entropy_bits(const Vec& dist);

// Canonical mean-obstruction construction: A uniform over {a1, a2};
// M | a1 uniform on {-1,+1}, M | a2 = 0. Both class means are zero, so the
// class-mean statistic is constant. Returns (I(A; Mbar), I(A; M)) in bits.
std::pair<double, double> verify_prop_info_loss();

// Weakened Fano bound max(0, (H(A|summary) - 1) / log2(n_classes)).
double fano_lower_bound(double h_cond_bits, int n_classes);

struct AttnConcentration {
    double alpha_max = 0.0;
    double bound = 0.0; // (n-1) * exp(-gap)
    double gap = 0.0;   // top logit minus second logit
    bool holds = false; // 1 - alpha_max <= bound
};

AttnConcentration attention_concentration(const Vec& logits);

struct PosteriorCollapse {
    double bayes_estimate = 0.0;  // posterior mean averaged over draws
    double prior_mean = 0.0;
    double deviation = 0.0;       // |bayes_estimate - prior_mean|
};

// Scalar Gaussian prior N(mu, sigma^2) under the forward marginal at step t;
// the posterior mean is available in closed form by conjugacy.
PosteriorCollapse posterior_collapse_check(double mu_prior, double sigma_prior,
                                           const diff::DiffusionSchedule& sched,
                                           int t, int n_draws, std::uint64_t seed);

double gaussian_posterior_mean(double m_t, double mu_prior, double sigma_prior,
                               double alpha_bar);

// Worst relative error of ||eps - eps_hat||^2 = SNR(t) ||x0 - x0_hat||^2
// over random tensors and timesteps.
double snr_weight_check(const diff::DiffusionSchedule& sched, int trials,
                        std::uint64_t seed);

} // namespace dimp::analysis

#endif
