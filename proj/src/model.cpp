#include "dimp/model.hpp"

#include <cmath>

namespace dimp::model {

using ad::Value;

std::string to_string(CenterConditioning c) {
    switch (c) {
        case CenterConditioning::masked_diffusion: return "masked_diffusion";
        case CenterConditioning::ground_truth: return "ground_truth";
        case CenterConditioning::all_diffusion: return "all_diffusion";
    }
    return "masked_diffusion";
}

CenterConditioning center_conditioning_from_string(const std::string& s) {
    if (s == "masked_diffusion") return CenterConditioning::masked_diffusion;
    if (s == "ground_truth") return CenterConditioning::ground_truth;
    if (s == "all_diffusion") return CenterConditioning::all_diffusion;
    throw std::invalid_argument("unknown center_conditioning: " + s);
}

int ModelConfig::tube_frames() const {
    int count = 0;
    for (int f = 0; f < L; ++f) {
        if (std::abs(f - keypoint_frame) < l / 2.0) ++count;
    }
    return count;
}

void ModelConfig::validate() const {
    check_arg(d > 0 && n_heads > 0 && d % n_heads == 0,
              "ModelConfig: d must be positive and divisible by n_heads");
    check_arg(n_enc_blocks > 0 && n_dec_blocks > 0, "ModelConfig: block counts positive");
    check_arg(T >= 2 && h >= 1 && h <= T, "ModelConfig: bad diffusion steps/intervals");
    check_arg(rho > 0.0 && rho < 1.0, "ModelConfig: rho in (0,1)");
    check_arg(gamma_cen >= 0.0 && lambda_mot >= 0.0, "ModelConfig: weights nonnegative");
    check_arg(visible_noise_level >= 0.0 && visible_noise_level <= 1.0,
              "ModelConfig: visible_noise_level in [0,1]");
    check_arg(K > 0 && n_pts > 0 && l > 0 && l % 2 == 1, "ModelConfig: bad tube params");
    check_arg(L > 0 && N > 0 && K <= N, "ModelConfig: bad sequence dims");
    check_arg(keypoint_frame >= 0 && keypoint_frame < L, "ModelConfig: keypoint frame");
}

Mat& ModelState::value(const std::string& name) {
    auto it = params.find(name);
    check_arg(it != params.end(), "ModelState: unknown parameter " + name);
    return it->second.value;
}

const Mat& ModelState::value(const std::string& name) const {
    auto it = params.find(name);
    check_arg(it != params.end(), "ModelState: unknown parameter " + name);
    return it->second.value;
}

void ModelState::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    check_arg(!has(name), "ModelState: duplicate parameter " + name);
    ParamArray p;
    p.value = Mat::Zero(rows, cols);
    p.m = Mat::Zero(rows, cols);
    p.v = Mat::Zero(rows, cols);
    params.emplace(name, std::move(p));
}

namespace {

void init_uniform(Mat& w, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            w(i, j) = (2.0 * rng.uniform() - 1.0) * bound;
}

// weight fan_in x fan_out, zero bias; optionally zero weight too
void add_linear(ModelState& st, const std::string& prefix, Eigen::Index in,
                Eigen::Index out, Rng& rng, bool zero_weight = false) {
    st.add(prefix + ".w", in, out);
    st.add(prefix + ".b", 1, out);
    if (!zero_weight) init_uniform(st.value(prefix + ".w"), rng);
}

void add_layernorm(ModelState& st, const std::string& prefix, Eigen::Index d) {
    st.add(prefix + ".g", 1, d);
    st.add(prefix + ".o", 1, d);
    st.value(prefix + ".g").setOnes();
}

void add_attention(ModelState& st, const std::string& prefix, Eigen::Index d, Rng& rng) {
    for (const char* part : {".wq", ".wk", ".wv", ".wo"}) {
        st.add(prefix + part, d, d);
        init_uniform(st.value(prefix + part), rng);
    }
    for (const char* part : {".bq", ".bk", ".bv", ".bo"}) st.add(prefix + part, 1, d);
}

void add_mlp(ModelState& st, const std::string& prefix, Eigen::Index d, Rng& rng) {
    add_linear(st, prefix + ".l1", d, 4 * d, rng);
    add_linear(st, prefix + ".l2", 4 * d, d, rng);
}

Value linear(Ctx& ctx, const Value& x, const std::string& prefix) {
    return ad::add_rowvec(ad::matmul(x, ctx.p(prefix + ".w")), ctx.p(prefix + ".b"));
}

Value layernorm(Ctx& ctx, const Value& x, const std::string& prefix) {
    return ad::layernorm_rows(x, ctx.p(prefix + ".g"), ctx.p(prefix + ".o"));
}

Value mlp(Ctx& ctx, const Value& x, const std::string& prefix) {
    return linear(ctx, ad::gelu(linear(ctx, x, prefix + ".l1")), prefix + ".l2");
}

// Multi-head scaled dot-product attention; q_in attends over kv_in.
Value attention(Ctx& ctx, const Value& q_in, const Value& kv_in,
                const std::string& prefix) {
    const int d = ctx.cfg->d;
    const int heads = ctx.cfg->n_heads;
    const int dh = d / heads;
    Value q = ad::add_rowvec(ad::matmul(q_in, ctx.p(prefix + ".wq")), ctx.p(prefix + ".bq"));
    Value k = ad::add_rowvec(ad::matmul(kv_in, ctx.p(prefix + ".wk")), ctx.p(prefix + ".bk"));
    Value v = ad::add_rowvec(ad::matmul(kv_in, ctx.p(prefix + ".wv")), ctx.p(prefix + ".bv"));

    Value out;
    for (int h = 0; h < heads; ++h) {
        Value qh = ad::slice_cols(q, h * dh, dh);
        Value kh = ad::slice_cols(k, h * dh, dh);
        Value vh = ad::slice_cols(v, h * dh, dh);
        Value scores = ad::scale(ad::matmul(qh, ad::transpose(kh)),
                                 1.0 / std::sqrt(static_cast<double>(dh)));
        Value attn = ad::softmax_rows(scores);
        if (ctx.softmax_log) ctx.softmax_log->push_back(attn->val);
        Value oh = ad::matmul(attn, vh);
        out = h == 0 ? oh : ad::concat_cols(out, oh);
    }
    return ad::add_rowvec(ad::matmul(out, ctx.p(prefix + ".wo")), ctx.p(prefix + ".bo"));
}

} // namespace

ModelState init_model_state(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelState st;
    Rng rng(seed);
    const int d = cfg.d;
    const int f = cfg.tube_frames();
    const int flat = f * cfg.n_pts * 3;

    // tube embedder: point MLP + temporal aggregation over pooled frames
    add_linear(st, "tube.p1", 3, d, rng);
    add_linear(st, "tube.p2", d, d, rng);
    add_linear(st, "tube.t1", f * d, d, rng);
    add_linear(st, "tube.t2", d, d, rng);

    add_linear(st, "embm", flat, d, rng); // masked content projector

    for (const char* side : {"pose", "posd"}) { // phi_enc / phi_dec
        add_linear(st, std::string(side) + ".l1", 4, d, rng);
        add_linear(st, std::string(side) + ".l2", d, d, rng);
    }

    add_linear(st, "tau.l1", d, d, rng); // timestep embedder MLP
    add_linear(st, "tau.l2", d, d, rng);

    for (int b = 0; b < cfg.n_enc_blocks; ++b) {
        const std::string p = "enc." + std::to_string(b);
        add_attention(st, p + ".sa", d, rng);
        add_attention(st, p + ".ca", d, rng);
        add_layernorm(st, p + ".ln1v", d);
        add_layernorm(st, p + ".ln2v", d);
        add_layernorm(st, p + ".ln1m", d);
        add_layernorm(st, p + ".lnkv", d);
        add_layernorm(st, p + ".ln2m", d);
        add_mlp(st, p + ".mlpv", d, rng);
        add_mlp(st, p + ".mlpm", d, rng);
    }

    add_linear(st, "gm.l1", d, d, rng);          // center predictor
    add_linear(st, "gm.l2", d, 3, rng, true);    // zero-init output

    for (int b = 0; b < cfg.n_dec_blocks; ++b) {
        const std::string p = "dec." + std::to_string(b);
        add_attention(st, p + ".sa", d, rng);
        add_layernorm(st, p + ".ln1", d);
        add_layernorm(st, p + ".ln2", d);
        add_mlp(st, p + ".mlp", d, rng);
    }

    add_linear(st, "recon", d, flat, rng, true); // zero-init reconstruction head

    // motion noise head: displacement/timestep feature path, reset gate,
    // condition path, output
    st.add("mot.a1.wm", 3, d);
    init_uniform(st.value("mot.a1.wm"), rng);
    st.add("mot.a1.wt", d, d);
    init_uniform(st.value("mot.a1.wt"), rng);
    st.add("mot.a1.b", 1, d);
    add_linear(st, "mot.a2", d, d, rng);
    add_linear(st, "mot.g1", d, d, rng);
    add_linear(st, "mot.g2", d, d, rng);
    add_linear(st, "mot.c1", d, d, rng);
    add_linear(st, "mot.c2", d, d, rng);
    add_linear(st, "mot.o1", d, d, rng);
    add_linear(st, "mot.o2", d, 3, rng, true);   // zero-init output

    return st;
}

ad::Value Ctx::p(const std::string& name) {
    auto it = leaves.find(name);
    if (it != leaves.end()) return it->second;
    Value v = ad::leaf(state->value(name), true);
    leaves.emplace(name, v);
    return v;
}

Mat sinusoid_embed(int t, int d) {
    Mat pe(1, d);
    for (int i = 0; i < d / 2; ++i) {
        const double omega = std::pow(10000.0, -2.0 * i / d);
        pe(0, 2 * i) = std::sin(t * omega);
        pe(0, 2 * i + 1) = std::cos(t * omega);
    }
    if (d % 2 == 1) pe(0, d - 1) = std::sin(t * std::pow(10000.0, -1.0));
    return pe;
}

TokenBatch make_token_batch(const geom::DynamicPointCloud& seq,
                            const geom::TubeSet& tubes,
                            const diff::DiffusionSchedule& sched,
                            const ModelConfig& cfg, Rng& rng) {
    check_arg(!tubes.visible_idx.empty() && !tubes.masked_idx.empty(),
              "make_token_batch: tubes must carry a mask partition");
    TokenBatch b;
    b.K_v = static_cast<int>(tubes.visible_idx.size());
    b.K_m = static_cast<int>(tubes.masked_idx.size());
    b.F = tubes.frames_per_tube();
    b.n_pts = tubes.params.n_pts;
    const int per_tube = b.F * b.n_pts;

    b.t_c = static_cast<int>(rng.uniform_int(1, static_cast<std::uint64_t>(sched.T)));

    b.vis_points.resize(static_cast<Eigen::Index>(b.K_v) * per_tube, 3);
    b.vis_centers.resize(b.K_v, 3);
    for (int i = 0; i < b.K_v; ++i) {
        const int tube = tubes.visible_idx[i];
        b.vis_points.middleRows(static_cast<Eigen::Index>(i) * per_tube, per_tube) =
            tubes.relative_points(seq, tube);
        b.vis_centers.row(i) = tubes.centered.row(tube);
        b.frame_idx_vis.push_back(cfg.keypoint_frame);
    }

    b.mask_points_clean.resize(static_cast<Eigen::Index>(b.K_m) * per_tube, 3);
    b.mask_centers_clean.resize(b.K_m, 3);
    for (int i = 0; i < b.K_m; ++i) {
        const int tube = tubes.masked_idx[i];
        b.mask_points_clean.middleRows(static_cast<Eigen::Index>(i) * per_tube, per_tube) =
            tubes.relative_points(seq, tube);
        b.mask_centers_clean.row(i) = tubes.centered.row(tube);
        b.frame_idx_mask.push_back(cfg.keypoint_frame);
    }

    // Two independent noises at the shared timestep t_c: one for the masked
    // centers, one for the masked point coordinates.
    b.eps_center = rng.normal_mat(b.K_m, 3);
    b.eps_points = rng.normal_mat(b.mask_points_clean.rows(), 3);
    b.mask_centers_noisy = diff::forward_sample(b.mask_centers_clean, b.t_c, b.eps_center, sched);
    b.mask_points_noisy = diff::forward_sample(b.mask_points_clean, b.t_c, b.eps_points, sched);

    // Visible centers stay clean by default. The all_diffusion strategy
    // noises them at t_c; visible_noise_level scales the effective step.
    int t_v = 0;
    if (cfg.center_conditioning == CenterConditioning::all_diffusion) {
        t_v = b.t_c;
    } else if (cfg.visible_noise_level > 0.0) {
        t_v = static_cast<int>(std::ceil(cfg.visible_noise_level * b.t_c));
    }
    if (t_v > 0) {
        const Mat eps_vis = rng.normal_mat(b.K_v, 3);
        b.vis_centers = diff::forward_sample(b.vis_centers, t_v, eps_vis, sched);
    }
    return b;
}

Value embed_tubes(Ctx& ctx, const Mat& rel_points, int n_tubes) {
    const int f = ctx.cfg->tube_frames();
    const int n = ctx.cfg->n_pts;
    check_arg(rel_points.rows() == static_cast<Eigen::Index>(n_tubes) * f * n &&
                  rel_points.cols() == 3,
              "embed_tubes: input shape mismatch");
    Value x = ad::constant(rel_points);
    x = ad::gelu(linear(ctx, x, "tube.p1"));
    x = linear(ctx, x, "tube.p2");
    x = ad::segment_max_rows(x, n);   // per-frame pool -> (n_tubes*F) x d
    x = ad::fold_rows(x, f);          // n_tubes x (F*d)
    x = ad::gelu(linear(ctx, x, "tube.t1"));
    return linear(ctx, x, "tube.t2");
}

Value embed_masked_points(Ctx& ctx, const Mat& noisy_points, int n_tubes) {
    const int per_tube = ctx.cfg->tube_frames() * ctx.cfg->n_pts;
    check_arg(noisy_points.rows() == static_cast<Eigen::Index>(n_tubes) * per_tube &&
                  noisy_points.cols() == 3,
              "embed_masked_points: input shape mismatch");
    Value x = ad::fold_rows(ad::constant(noisy_points), per_tube); // n_tubes x flat
    return linear(ctx, x, "embm");
}

Value pos_embed(Ctx& ctx, const Value& centers, const std::vector<int>& frame_idx,
                bool decoder_side) {
    check_arg(centers->val.cols() == 3, "pos_embed: centers must be K x 3");
    check_arg(static_cast<Eigen::Index>(frame_idx.size()) == centers->val.rows(),
              "pos_embed: frame index count mismatch");
    Mat fcol(centers->val.rows(), 1);
    for (Eigen::Index i = 0; i < fcol.rows(); ++i) fcol(i, 0) = frame_idx[i];
    Value x = ad::concat_cols(centers, ad::constant(fcol));
    const std::string side = decoder_side ? "posd" : "pose";
    x = ad::gelu(linear(ctx, x, side + ".l1"));
    return linear(ctx, x, side + ".l2");
}

std::pair<Value, Value> vismask_block(Ctx& ctx, const Value& zv, const Value& zm,
                                      int block) {
    const std::string p = "enc." + std::to_string(block);
    // Visible stream: self-attention and MLP, pre-norm residual. No Zm input.
    Value nv = layernorm(ctx, zv, p + ".ln1v");
    Value v = ad::add(zv, attention(ctx, nv, nv, p + ".sa"));
    v = ad::add(v, mlp(ctx, layernorm(ctx, v, p + ".ln2v"), p + ".mlpv"));

    if (zm->val.rows() == 0) return {v, zm};

    // Masked stream: cross-attention querying the visible input.
    Value m = ad::add(zm, attention(ctx, layernorm(ctx, zm, p + ".ln1m"),
                                    layernorm(ctx, zv, p + ".lnkv"), p + ".ca"));
    m = ad::add(m, mlp(ctx, layernorm(ctx, m, p + ".ln2m"), p + ".mlpm"));
    return {v, m};
}

std::pair<Value, Value> encode(Ctx& ctx, const TokenBatch& batch) {
    check_arg(batch.K_v >= 1, "encode: K_v must be >= 1");
    Value zv = ad::add(embed_tubes(ctx, batch.vis_points, batch.K_v),
                       pos_embed(ctx, ad::constant(batch.vis_centers),
                                 batch.frame_idx_vis, false));
    Value zm;
    if (batch.K_m > 0) {
        zm = ad::add(embed_masked_points(ctx, batch.mask_points_noisy, batch.K_m),
                     pos_embed(ctx, ad::constant(batch.mask_centers_noisy),
                               batch.frame_idx_mask, false));
    } else {
        zm = ad::constant(Mat::Zero(0, ctx.cfg->d));
    }
    for (int b = 0; b < ctx.cfg->n_enc_blocks; ++b) {
        auto [v, m] = vismask_block(ctx, zv, zm, b);
        zv = v;
        zm = m;
    }
    return {zv, zm};
}

Value predict_centers(Ctx& ctx, const Value& zm) {
    return linear(ctx, ad::gelu(linear(ctx, zm, "gm.l1")), "gm.l2");
}

Value timestep_embed(Ctx& ctx, int t) {
    Value pe = ad::constant(sinusoid_embed(t, ctx.cfg->d));
    return linear(ctx, ad::gelu(linear(ctx, pe, "tau.l1")), "tau.l2");
}

Value decode(Ctx& ctx, const Value& zv, const Value& mask_content,
             const TokenBatch& batch, const Value& pred_centers) {
    check_arg(pred_centers->val.rows() == batch.K_m && pred_centers->val.cols() == 3,
              "decode: pred_centers must be K_m x 3");
    Value vis_tok = ad::add(zv, pos_embed(ctx, ad::constant(batch.vis_centers),
                                          batch.frame_idx_vis, true));
    Value mask_tok = ad::add(mask_content,
                             pos_embed(ctx, pred_centers, batch.frame_idx_mask, true));
    Value x = ad::concat_rows({timestep_embed(ctx, batch.t_c), vis_tok, mask_tok});

    for (int b = 0; b < ctx.cfg->n_dec_blocks; ++b) {
        const std::string p = "dec." + std::to_string(b);
        Value q = layernorm(ctx, x, p + ".ln1");
        x = ad::add(x, attention(ctx, q, q, p + ".sa"));
        x = ad::add(x, mlp(ctx, layernorm(ctx, x, p + ".ln2"), p + ".mlp"));
    }
    // Drop the timestep token.
    return ad::slice_rows(x, 1, batch.K_v + batch.K_m);
}

Value reconstruct(Ctx& ctx, const Value& zdec_masked) {
    return linear(ctx, zdec_masked, "recon");
}

Value motion_noise_head(Ctx& ctx, const Mat& m_t, int t, const Value& zdec) {
    check_arg(m_t.cols() == 3, "motion_noise_head: displacement rows must be R x 3");
    const Eigen::Index rows = m_t.rows();

    Value cond = ad::mean_rows(zdec); // 1 x d global condition
    Value tau_t = timestep_embed(ctx, t);

    // Per-displacement feature u = MLP_a([m, tau(t)]), with the first layer
    // split into a displacement block and a broadcast timestep block.
    Value h1 = ad::matmul(ad::constant(m_t), ctx.p("mot.a1.wm"));
    Value tau_proj = ad::add_rowvec(ad::matmul(tau_t, ctx.p("mot.a1.wt")),
                                    ctx.p("mot.a1.b"));
    h1 = ad::gelu(ad::add_rowvec(h1, tau_proj));
    Value u = linear(ctx, h1, "mot.a2");

    Value gate = ad::sigmoid(linear(ctx, ad::gelu(linear(ctx, cond, "mot.g1")), "mot.g2"));
    Value cfeat = linear(ctx, ad::gelu(linear(ctx, cond, "mot.c1")), "mot.c2");

    // fused = g .* u + (1 - g) .* cfeat, gate and cfeat broadcast over rows
    Value one_minus_g = ad::add_scalar(ad::scale(gate, -1.0), 1.0);
    Value fused = ad::add(ad::mul_rowvec(u, gate),
                          ad::broadcast_row(ad::mul(cfeat, one_minus_g), rows));

    Value h2 = ad::gelu(linear(ctx, fused, "mot.o1"));
    return linear(ctx, h2, "mot.o2");
}

bool is_center_predictor_param(const std::string& name) {
    return name.rfind("gm.", 0) == 0;
}
bool is_motion_head_param(const std::string& name) {
    return name.rfind("mot.", 0) == 0;
}
bool is_encoder_param(const std::string& name) {
    return name.rfind("enc.", 0) == 0 || name.rfind("tube.", 0) == 0 ||
           name.rfind("embm", 0) == 0 || name.rfind("pose.", 0) == 0;
}
bool is_decoder_param(const std::string& name) {
    return name.rfind("dec.", 0) == 0 || name.rfind("posd.", 0) == 0 ||
           name.rfind("recon", 0) == 0;
}

} // namespace dimp::model
