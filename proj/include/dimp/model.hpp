#ifndef DIMP_MODEL_HPP
#define DIMP_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dimp/autodiff.hpp"
#include "dimp/common.hpp"
#include "dimp/diffusion.hpp"
#include "dimp/geometry.hpp"
#include "dimp/rng.hpp"

namespace dimp::model {

enum class CenterConditioning { masked_diffusion, ground_truth, all_diffusion };

std::string to_string(CenterConditioning c);
CenterConditioning center_conditioning_from_string(const std::string& s);

struct ModelConfig {
    int d = 64;
    int n_heads = 4;
    int n_enc_blocks = 2;
    int n_dec_blocks = 2;
    int T = 200;
    int h = 4;
    double rho = 0.6;
    double gamma_cen = 0.1;
    double lambda_mot = 1.0;
    CenterConditioning center_conditioning = CenterConditioning::masked_diffusion;
    double visible_noise_level = 0.0;
    bool stop_grad_geo = true;
    bool stop_grad_mot = true;
    // Token geometry
    int K = 16;
    double radius = 0.1;
    int l = 3;
    int n_pts = 16;
    int keypoint_frame = 0;
    int L = 8;
    int N = 256;

    int tube_frames() const; // covered frames per tube for this (L, l, keypoint_frame)
    geom::TubeParams tube_params() const {
        return {K, radius, l, n_pts, keypoint_frame};
    }
    void validate() const;
};

// One named parameter array plus its AdamW moment accumulators.
struct ParamArray {
    Mat value;
    Mat m;
    Mat v;
};

struct ModelState {
    std::map<std::string, ParamArray> params;

    Mat& value(const std::string& name);
    const Mat& value(const std::string& name) const;
    bool has(const std::string& name) const { return params.count(name) > 0; }
    void add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
};

// Create and initialize every parameter of the model. Linear maps are
// fan-in-scaled uniform; the final layers of the center predictor, the
// reconstruction head and the motion output are zero-initialized.
ModelState init_model_state(const ModelConfig& cfg, std::uint64_t seed);

// Per-forward-pass binding of parameters to graph leaves. Leaf values are
// snapshots of the state; gradients collect per-context so independent
// samples can run on separate threads.
struct Ctx {
    const ModelState* state = nullptr;
    const ModelConfig* cfg = nullptr;
    std::map<std::string, ad::Value> leaves;
    std::vector<Mat>* softmax_log = nullptr; // optional attention-row capture

    Ctx(const ModelState& s, const ModelConfig& c) : state(&s), cfg(&c) {}
    ad::Value p(const std::string& name);
};

// Inputs of one tokenized, masked, noise-injected sample.
struct TokenBatch {
    Mat vis_points;        // (K_v*F*n) x 3 clean tube-relative coords
    Mat mask_points_clean; // (K_m*F*n) x 3 reconstruction targets
    Mat mask_points_noisy; // (K_m*F*n) x 3 content input at t_c
    Mat vis_centers;       // K_v x 3 (clean unless visible noise configured)
    Mat mask_centers_noisy; // K_m x 3
    Mat mask_centers_clean; // K_m x 3 (training targets only)
    std::vector<int> frame_idx_vis;  // keypoint frame per visible tube
    std::vector<int> frame_idx_mask;
    int t_c = 0;
    Mat eps_center; // K_m x 3
    Mat eps_points; // (K_m*F*n) x 3
    int K_v = 0, K_m = 0, F = 0, n_pts = 0;
};

// Draw t_c and the two independent stage-1 noises, then assemble the token
// inputs under cfg.center_conditioning / cfg.visible_noise_level.
TokenBatch make_token_batch(const geom::DynamicPointCloud& seq,
                            const geom::TubeSet& tubes,
                            const diff::DiffusionSchedule& sched,
                            const ModelConfig& cfg, Rng& rng);

// Sinusoidal timestep basis (pre-MLP), 1 x d.
Mat sinusoid_embed(int t, int d);

// --- parameterized forward ops -------------------------------------------

// Shared per-point MLP, per-frame max-pool, learned temporal aggregation.
// rel_points is (n_tubes*F*n_pts) x 3; returns n_tubes x d.
ad::Value embed_tubes(Ctx& ctx, const Mat& rel_points, int n_tubes);

// Single linear projection of flattened noisy coordinates; n_tubes x d.
ad::Value embed_masked_points(Ctx& ctx, const Mat& noisy_points, int n_tubes);

// MLP over [c_x, c_y, c_z, t_f]; separate parameters for encoder/decoder.
ad::Value pos_embed(Ctx& ctx, const ad::Value& centers,
                    const std::vector<int>& frame_idx, bool decoder_side);

// One dual-stream block: visible self-attention, masked cross-attention to
// the visible input, pre-norm residuals. The visible output never reads Zm.
std::pair<ad::Value, ad::Value> vismask_block(Ctx& ctx, const ad::Value& zv,
                                              const ad::Value& zm, int block);

// Full encoder: token formation plus n_enc_blocks stacked VisMask blocks.
std::pair<ad::Value, ad::Value> encode(Ctx& ctx, const TokenBatch& batch);

ad::Value predict_centers(Ctx& ctx, const ad::Value& zm); // K_m x 3

ad::Value timestep_embed(Ctx& ctx, int t); // 1 x d

// Decoder: [tau(t_c); Zv + phi_dec(C0v); e_m + phi_dec(centers)] through
// n_dec_blocks self-attention blocks; returns K x d, visible rows first.
// `pred_centers` must already carry the caller's stop-gradient choice.
ad::Value decode(Ctx& ctx, const ad::Value& zv, const ad::Value& mask_content,
                 const TokenBatch& batch, const ad::Value& pred_centers);

// Linear head from token width to F*n_pts*3 tube-relative coordinates.
ad::Value reconstruct(Ctx& ctx, const ad::Value& zdec_masked);

// Reset-gate conditioned noise head over displacement rows (R x 3).
ad::Value motion_noise_head(Ctx& ctx, const Mat& m_t, int t, const ad::Value& zdec);

// Parameter name prefixes, used for gradient routing audits.
bool is_center_predictor_param(const std::string& name); // g_m
bool is_motion_head_param(const std::string& name);      // h_m
bool is_encoder_param(const std::string& name);          // f_e + embeddings
bool is_decoder_param(const std::string& name);          // f_d + recon

} // namespace dimp::model

#endif
