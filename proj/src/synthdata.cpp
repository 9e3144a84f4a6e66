#include "dimp/synthdata.hpp"

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "dimp/io.hpp"
#include "dimp/rng.hpp"

namespace dimp::synth {

void GeneratorParams::validate() const {
    check_arg(L >= 2 && N >= 1, "GeneratorParams: need L >= 2, N >= 1");
    check_arg(box_hi > box_lo, "GeneratorParams: empty bounding box");
    check_arg(!classes.empty(), "GeneratorParams: no classes");
}

std::vector<const ManifestItem*> DatasetManifest::split_items(const std::string& split) const {
    std::vector<const ManifestItem*> out;
    for (const auto& it : items) {
        if (it.split == split) out.push_back(&it);
    }
    return out;
}

std::string DatasetManifest::resolve(const std::string& rel) const {
    if (base_dir.empty()) return rel;
    return (std::filesystem::path(base_dir) / rel).string();
}

GeneratorParams default_generator_params(std::uint64_t seed) {
    GeneratorParams p;
    p.seed = seed;
    const double amp = 0.06;

    // Shared-mean pair, one template for both classes. Class 0 oscillates
    // with a random sign over a period-8 cycle; class 1 is pure jitter with
    // noise_std chosen so the marginal position variance per coordinate
    // matches the oscillation (A^2 * E[sin^2] * E[d_c^2] = A^2/6). The
    // displacement variances still differ because consecutive sinusoid
    // samples are correlated while jitter frames are independent.
    MotionClassParams osc;
    osc.name = "osc_shared";
    osc.phase_random = true;
    osc.amplitude = amp;
    osc.frequency = 0.125;
    osc.noise_std = 0.002;
    osc.direction_seed = 11;
    osc.template_seed = 1;
    p.classes.push_back(osc);

    MotionClassParams jit;
    jit.name = "jitter_matched";
    jit.amplitude = 0.0;
    jit.noise_std = amp / std::sqrt(6.0);
    jit.direction_seed = 11;
    jit.template_seed = 1;
    p.classes.push_back(jit);

    // Distinct-mean control pair: opposite constant drifts, template 2.
    MotionClassParams drift_a;
    drift_a.name = "drift_pos";
    drift_a.drift = Vec3(0.012, 0.004, 0.0);
    drift_a.noise_std = 0.004;
    drift_a.direction_seed = 13;
    drift_a.template_seed = 2;
    p.classes.push_back(drift_a);

    MotionClassParams drift_b;
    drift_b.name = "drift_neg";
    drift_b.drift = Vec3(-0.012, 0.0, 0.004);
    drift_b.noise_std = 0.004;
    drift_b.direction_seed = 13;
    drift_b.template_seed = 2;
    p.classes.push_back(drift_b);
    return p;
}

namespace {

// Blob template: a few Gaussian lobes inside the box with a safety margin so
// the configured motions stay inside.
Points make_template(int n, double lo, double hi, std::uint64_t template_seed) {
    Rng rng(mix_seed(0x7e3a11ce5ULL, template_seed));
    const double span = hi - lo;
    const double margin = 0.18 * span;
    const int lobes = 3;
    Points lobe_centers(lobes, 3);
    for (int k = 0; k < lobes; ++k) {
        for (int c = 0; c < 3; ++c) {
            lobe_centers(k, c) = lo + margin + (span - 2 * margin) * rng.uniform();
        }
    }
    Points pts(n, 3);
    for (int i = 0; i < n; ++i) {
        const int k = rng.index(lobes);
        for (int c = 0; c < 3; ++c) {
            double x = lobe_centers(k, c) + 0.06 * span * rng.normal();
            x = std::min(hi - margin / 2, std::max(lo + margin / 2, x));
            pts(i, c) = x;
        }
    }
    return pts;
}

Points make_directions(int n, std::uint64_t direction_seed) {
    Rng rng(mix_seed(0xd19ec7104ULL, direction_seed));
    Vec3 base(rng.normal(), rng.normal(), rng.normal());
    base.normalize();
    Points dirs(n, 3);
    for (int i = 0; i < n; ++i) {
        Vec3 d = base + 0.5 * Vec3(rng.normal(), rng.normal(), rng.normal());
        d.normalize();
        dirs.row(i) = d.transpose();
    }
    return dirs;
}

} // namespace

GeneratedSequence gen_sequence(int class_id, const GeneratorParams& params,
                               std::uint64_t seq_seed) {
    params.validate();
    check_arg(class_id >= 0 && class_id < params.n_classes(),
              "gen_sequence: class_id out of range");
    const MotionClassParams& mc = params.classes[class_id];

    const Points tmpl = make_template(params.N, params.box_lo, params.box_hi,
                                      mc.template_seed);
    const Points dirs = make_directions(params.N, mc.direction_seed);

    Rng rng(mix_seed(params.seed, seq_seed));
    const double phase =
        mc.phase_random ? (rng.uniform() < 0.5 ? 1.0 : -1.0) : mc.fixed_phase;

    // Per-point sinusoid phases, fixed for the sequence.
    std::vector<double> psi(params.N);
    for (int i = 0; i < params.N; ++i) psi[i] = 2.0 * M_PI * rng.uniform();

    GeneratedSequence out;
    out.label = class_id;
    out.seq.frames.resize(params.L);
    for (int t = 0; t < params.L; ++t) {
        Points frame(params.N, 3);
        for (int i = 0; i < params.N; ++i) {
            const double osc =
                phase * mc.amplitude * std::sin(2.0 * M_PI * mc.frequency * t + psi[i]);
            Eigen::RowVector3d x = tmpl.row(i) + osc * dirs.row(i) +
                                   static_cast<double>(t) * mc.drift.transpose();
            for (int c = 0; c < 3; ++c) {
                x(c) += mc.noise_std * rng.normal();
                x(c) = std::min(params.box_hi, std::max(params.box_lo, x(c)));
            }
            frame.row(i) = x;
        }
        out.seq.frames[t] = std::move(frame);
    }
    out.field = motion::displacement_field_oracle(out.seq);
    return out;
}

DatasetManifest gen_dataset(const GeneratorParams& params, int count,
                            const std::vector<double>& split_fractions,
                            std::uint64_t seed, const std::string& out_dir) {
    params.validate();
    check_arg(count >= 1, "gen_dataset: count must be >= 1");
    double frac_sum = 0.0;
    for (double f : split_fractions) frac_sum += f;
    check_arg(split_fractions.size() == 2 && std::abs(frac_sum - 1.0) < 1e-9,
              "gen_dataset: split_fractions must be two values summing to 1");

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Non-train splits take floor(count * fraction) from the tail of the
    // round-robin class order; train keeps the remainder.
    const int n_test = static_cast<int>(std::floor(count * split_fractions[1]));
    const int n_train = count - n_test;

    DatasetManifest manifest;
    manifest.params = params;
    manifest.params.seed = seed;
    for (const auto& c : params.classes) manifest.classes.push_back(c.name);

    double sq_sum = 0.0;
    double sq_count = 0.0;
    for (int i = 0; i < count; ++i) {
        const int label = i % params.n_classes();
        GeneratorParams seeded = params;
        seeded.seed = seed;
        const std::uint64_t item_seed = static_cast<std::uint64_t>(i);
        GeneratedSequence g = gen_sequence(label, seeded, item_seed);

        char name[64];
        std::snprintf(name, sizeof(name), "seq_%05d", i);
        const std::string dpc_rel = std::string(name) + ".dpc1";
        const std::string mot_rel = std::string(name) + ".mot1";
        io::write_dpc1((fs::path(out_dir) / dpc_rel).string(), g.seq);
        io::write_mot1((fs::path(out_dir) / mot_rel).string(), g.field);

        nlohmann::json sidecar;
        sidecar["class_label"] = label;
        sidecar["seed"] = item_seed;
        sidecar["generator_params"] = {
            {"L", params.L}, {"N", params.N}, {"class", params.classes[label].name}};
        io::atomic_write_file((fs::path(out_dir) / (std::string(name) + ".json")).string(),
                              sidecar.dump(2) + "\n");

        ManifestItem item;
        item.path = dpc_rel;
        item.motion_path = mot_rel;
        item.label = label;
        item.split = i < n_train ? "train" : "test";
        item.seed = item_seed;
        manifest.items.push_back(item);

        if (item.split == "train") {
            sq_sum += g.field.m0.squaredNorm();
            sq_count += static_cast<double>(g.field.m0.size());
        }
    }
    manifest.motion_rms = std::sqrt(sq_sum / std::max(1.0, sq_count));

    nlohmann::json j;
    j["version"] = manifest.version;
    j["classes"] = manifest.classes;
    j["motion_rms"] = manifest.motion_rms;
    j["seed"] = seed;
    j["generator"] = {{"L", params.L},
                      {"N", params.N},
                      {"n_classes", params.n_classes()},
                      {"box_lo", params.box_lo},
                      {"box_hi", params.box_hi}};
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : manifest.items) {
        items.push_back({{"path", it.path},
                         {"motion_path", it.motion_path},
                         {"label", it.label},
                         {"split", it.split},
                         {"seed", it.seed}});
    }
    j["items"] = items;
    io::atomic_write_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
    manifest.base_dir = out_dir;
    return manifest;
}

DatasetManifest load_manifest(const std::string& manifest_path) {
    const nlohmann::json j = nlohmann::json::parse(io::read_file(manifest_path));
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.motion_rms = j.at("motion_rms").get<double>();
    for (const auto& it : j.at("items")) {
        ManifestItem item;
        item.path = it.at("path").get<std::string>();
        item.motion_path = it.at("motion_path").get<std::string>();
        item.label = it.at("label").get<int>();
        item.split = it.at("split").get<std::string>();
        item.seed = it.at("seed").get<std::uint64_t>();
        m.items.push_back(item);
    }
    m.base_dir = std::filesystem::path(manifest_path).parent_path().string();
    return m;
}

} // namespace dimp::synth
