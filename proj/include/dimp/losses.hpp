#ifndef DIMP_LOSSES_HPP
#define DIMP_LOSSES_HPP

#include <functional>
#include <utility>
#include <vector>

#include "dimp/autodiff.hpp"
#include "dimp/common.hpp"
#include "dimp/diffusion.hpp"
#include "dimp/model.hpp"

namespace dimp::loss {

// One training step's loss values, with the decomposition identity
// l_total = l_geo + gamma_cen * l_cen + lambda_mot * l_mot.
struct LossReport {
    double l_cen = 0.0;
    double l_geo = 0.0;
    double l_mot = 0.0;
    double l_total = 0.0;
    std::vector<double> per_interval_mot;
    int t_c = 0;
    std::vector<int> t_motion;

    void check_decomposition(double gamma_cen, double lambda_mot) const;
};

// Mean over tubes of the squared Euclidean distance between predicted and
// target centers (K_m x 3 each).
ad::Value loss_center(const ad::Value& pred, const Mat& target);

// Per-tube, per-frame Chamfer between predicted and target point sets,
// averaged frames-inner, tubes-outer. Coordinates are tube-relative.
ad::Value loss_geo(const ad::Value& pred_flat, const Mat& target_flat,
                   int tubes, int frames, int n_pts);

// Noise predictor signature for the motion objective; must return a tensor
// shaped like m_t.
using MotionHead = std::function<ad::Value(const Mat& m_t, int t)>;

// Stratified DDPM objective: corrupt m0 at each drawn timestep, score the
// noise prediction, average the h interval terms.
std::pair<ad::Value, std::vector<ad::Value>> loss_motion_terms(
    const Mat& m0, const diff::StratifiedDraw& draw,
    const diff::DiffusionSchedule& sched, const MotionHead& head);

// Spec-level wrapper using the model's reset-gate noise head.
std::pair<ad::Value, std::vector<ad::Value>> loss_motion(
    const Mat& m0, const ad::Value& zdec, const diff::StratifiedDraw& draw,
    model::Ctx& ctx, const diff::DiffusionSchedule& sched);

// l_geo + gamma_cen * l_cen + lambda_mot * l_mot.
ad::Value total_loss(const ad::Value& l_geo, const ad::Value& l_cen,
                     const ad::Value& l_mot, double gamma_cen, double lambda_mot);
double total_loss(double l_geo, double l_cen, double l_mot, double gamma_cen,
                  double lambda_mot);

} // namespace dimp::loss

#endif
