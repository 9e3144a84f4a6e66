#include "dimp/losses.hpp"

#include <cmath>

namespace dimp::loss {

void LossReport::check_decomposition(double gamma_cen, double lambda_mot) const {
    const double expect = l_geo + gamma_cen * l_cen + lambda_mot * l_mot;
    const double scale = std::max({1.0, std::abs(expect), std::abs(l_total)});
    if (std::abs(expect - l_total) > 1e-12 * scale) {
        throw NumericError("LossReport: decomposition identity violated");
    }
    if (!per_interval_mot.empty()) {
        double mean = 0.0;
        for (double v : per_interval_mot) mean += v;
        mean /= static_cast<double>(per_interval_mot.size());
        if (std::abs(mean - l_mot) > 1e-12 * std::max(1.0, std::abs(l_mot))) {
            throw NumericError("LossReport: l_mot is not the interval mean");
        }
    }
}

ad::Value loss_center(const ad::Value& pred, const Mat& target) {
    check_arg(pred->val.rows() == target.rows() && pred->val.cols() == 3 &&
                  target.cols() == 3,
              "loss_center: shape mismatch");
    check_arg(target.rows() >= 1, "loss_center: empty input");
    ad::Value diff = ad::sub(pred, ad::constant(target));
    return ad::scale(ad::sum_sq(diff), 1.0 / static_cast<double>(target.rows()));
}

ad::Value loss_geo(const ad::Value& pred_flat, const Mat& target_flat,
                   int tubes, int frames, int n_pts) {
    return ad::chamfer_tube_loss(pred_flat, target_flat, tubes, frames, n_pts);
}

std::pair<ad::Value, std::vector<ad::Value>> loss_motion_terms(
    const Mat& m0, const diff::StratifiedDraw& draw,
    const diff::DiffusionSchedule& sched, const MotionHead& head) {
    check_arg(draw.h >= 1, "loss_motion: empty stratified draw");
    const double count = static_cast<double>(m0.size());

    std::vector<ad::Value> terms;
    ad::Value total;
    for (int i = 0; i < draw.h; ++i) {
        const int t = draw.timesteps[i];
        const Mat& eps = draw.noises[i];
        check_arg(eps.rows() == m0.rows() && eps.cols() == m0.cols(),
                  "loss_motion: noise shape mismatch");
        const Mat m_t = diff::forward_sample(m0, t, eps, sched);
        ad::Value eps_hat = head(m_t, t);
        check_arg(eps_hat->val.rows() == m0.rows() && eps_hat->val.cols() == m0.cols(),
                  "loss_motion: head output shape mismatch");
        ad::Value term = ad::scale(ad::sum_sq(ad::sub(eps_hat, ad::constant(eps))),
                                   1.0 / count);
        terms.push_back(term);
        total = i == 0 ? term : ad::add(total, term);
    }
    return {ad::scale(total, 1.0 / draw.h), terms};
}

std::pair<ad::Value, std::vector<ad::Value>> loss_motion(
    const Mat& m0, const ad::Value& zdec, const diff::StratifiedDraw& draw,
    model::Ctx& ctx, const diff::DiffusionSchedule& sched) {
    return loss_motion_terms(m0, draw, sched, [&](const Mat& m_t, int t) {
        return model::motion_noise_head(ctx, m_t, t, zdec);
    });
}

ad::Value total_loss(const ad::Value& l_geo, const ad::Value& l_cen,
                     const ad::Value& l_mot, double gamma_cen, double lambda_mot) {
    check_arg(gamma_cen >= 0.0 && lambda_mot >= 0.0,
              "total_loss: weights must be nonnegative");
    return ad::add(l_geo, ad::add(ad::scale(l_cen, gamma_cen),
                                  ad::scale(l_mot, lambda_mot)));
}

double total_loss(double l_geo, double l_cen, double l_mot, double gamma_cen,
                  double lambda_mot) {
    check_arg(gamma_cen >= 0.0 && lambda_mot >= 0.0,
              "total_loss: weights must be nonnegative");
    return l_geo + gamma_cen * l_cen + lambda_mot * l_mot;
}

} // namespace dimp::loss
