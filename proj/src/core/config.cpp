#include "core/config.hpp"

#include <fstream>
#include <set>

#include "core/dataset.hpp"

namespace sdap {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        raise(ErrorCode::config, "config section '" + section + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key))
            raise(ErrorCode::config, "unknown key '" + key + "' in config section '" + section + "'");
}

void apply_overrides(json& config, const std::vector<std::string>& overrides) {
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            raise(ErrorCode::config, "override must look like key=value, got '" + kv + "'");
        const std::string path = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;  // bare strings are fine
        }
        json* node = &config;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot - pos);
            if (key.empty()) raise(ErrorCode::config, "bad override path '" + path + "'");
            if (dot == std::string::npos) {
                (*node)[key] = value;
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::config, "invalid JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::io, "cannot write " + path);
    out << j.dump(2) << "\n";
}

json bsn_config_to_json(const BsnConfig& cfg) {
    return json{{"in_channels", cfg.in_channels},
                {"base_channels", cfg.base_channels},
                {"blocks_per_branch", cfg.blocks_per_branch},
                {"branch_dilations", {cfg.branch_dilations[0], cfg.branch_dilations[1]}},
                {"seed", cfg.seed},
                {"masked", cfg.masked}};
}

BsnConfig bsn_config_from_json(const json& j, const std::string& section) {
    check_keys(j, section,
               {"in_channels", "base_channels", "blocks_per_branch", "branch_dilations", "seed",
                "masked"});
    BsnConfig cfg;
    cfg.in_channels = j.value("in_channels", cfg.in_channels);
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
    cfg.blocks_per_branch = j.value("blocks_per_branch", cfg.blocks_per_branch);
    if (j.contains("branch_dilations")) {
        const auto& d = j.at("branch_dilations");
        if (!d.is_array() || d.size() != 2)
            raise(ErrorCode::config, "branch_dilations must be a pair");
        cfg.branch_dilations = {d[0].get<int>(), d[1].get<int>()};
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.masked = j.value("masked", cfg.masked);
    cfg.validate();
    return cfg;
}

json loss_spec_to_json(const LossSpec& spec) {
    return json{{"variant", to_string(spec.variant)},
                {"stride", spec.stride},
                {"sigma_eps", spec.sigma_eps},
                {"sampler", to_string(spec.sampler)}};
}

LossSpec loss_spec_from_json(const json& j, const std::string& section) {
    check_keys(j, section, {"variant", "stride", "sigma_eps", "sampler"});
    LossSpec spec;
    if (j.contains("variant")) spec.variant = loss_variant_from_string(j.at("variant").get<std::string>());
    spec.stride = j.value("stride", spec.stride);
    spec.sigma_eps = j.value("sigma_eps", spec.sigma_eps);
    if (j.contains("sampler")) spec.sampler = sampler_from_string(j.at("sampler").get<std::string>());
    spec.validate();
    return spec;
}

json noise_spec_to_json(const NoiseSpec& spec) {
    return json{{"kind", spec.kind == NoiseKind::awgn ? "awgn" : "correlated"},
                {"sigma", spec.sigma},
                {"seed_mode", spec.seed_mode == SeedMode::fixed ? "fixed" : "per_epoch_random"},
                {"correlation_scale", spec.correlation_scale}};
}

NoiseSpec noise_spec_from_json(const json& j, const std::string& section) {
    check_keys(j, section, {"kind", "sigma", "seed_mode", "correlation_scale"});
    NoiseSpec spec;
    if (j.contains("kind")) {
        const std::string k = j.at("kind").get<std::string>();
        if (k == "awgn")
            spec.kind = NoiseKind::awgn;
        else if (k == "correlated")
            spec.kind = NoiseKind::correlated;
        else
            raise(ErrorCode::config, "unknown noise kind '" + k + "'");
    }
    spec.sigma = j.value("sigma", spec.sigma);
    if (j.contains("seed_mode")) {
        const std::string m = j.at("seed_mode").get<std::string>();
        if (m == "fixed")
            spec.seed_mode = SeedMode::fixed;
        else if (m == "per_epoch_random")
            spec.seed_mode = SeedMode::per_epoch_random;
        else
            raise(ErrorCode::config, "unknown seed_mode '" + m + "'");
    }
    spec.correlation_scale = j.value("correlation_scale", spec.correlation_scale);
    spec.validate();
    return spec;
}

namespace {

PhaseConfig phase_from_json(const json& j, const std::string& section, PhaseConfig base) {
    check_keys(j, section, {"lr", "batch", "patch", "epochs", "patches_per_epoch"});
    base.lr = j.value("lr", base.lr);
    base.batch = j.value("batch", base.batch);
    base.patch = j.value("patch", base.patch);
    base.epochs = j.value("epochs", base.epochs);
    base.patches_per_epoch = j.value("patches_per_epoch", base.patches_per_epoch);
    return base;
}

json phase_to_json(const PhaseConfig& p) {
    return json{{"lr", p.lr},
                {"batch", p.batch},
                {"patch", p.patch},
                {"epochs", p.epochs},
                {"patches_per_epoch", p.patches_per_epoch}};
}

void check_phase(const PhaseConfig& p, const std::string& name, const LossSpec& loss) {
    if (p.lr <= 0) raise(ErrorCode::config, name + ".lr must be > 0");
    if (p.batch < 1 || p.patch < 1 || p.epochs < 0 || p.patches_per_epoch < 1)
        raise(ErrorCode::config, name + ": counts must be positive");
    if (p.epochs > 0 && p.patch % loss.stride != 0)
        raise(ErrorCode::config, name + ".patch " + std::to_string(p.patch) +
                                     " not divisible by loss stride " + std::to_string(loss.stride));
}

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    loss.validate();
    check_phase(phase1, "phase1", loss);
    check_phase(phase2, "phase2", loss);
    if (validate_every < 0 || checkpoint_every < 0)
        raise(ErrorCode::config, "cadence values must be >= 0");
    if (eval_stride < 1) raise(ErrorCode::config, "eval_stride must be >= 1");
    if (eval_pipeline != "pd" && eval_pipeline != "pd_enhance")
        raise(ErrorCode::config, "eval_pipeline must be pd or pd_enhance");
}

TrainConfig train_config_defaults() { return TrainConfig{}; }

void apply_preset(json& file_json) {
    if (!file_json.contains("preset")) return;
    const std::string preset = file_json.at("preset").get<std::string>();
    file_json.erase("preset");
    json overlay;
    if (preset == "tiny") {
        overlay = json{
            {"model", {{"base_channels", 32}, {"blocks_per_branch", 2}}},
            {"phase1", {{"lr", 3e-4}, {"batch", 4}, {"patch", 40}, {"epochs", 10}, {"patches_per_epoch", 400}}},
            {"phase2", {{"lr", 3e-5}, {"batch", 4}, {"patch", 40}, {"epochs", 2}, {"patches_per_epoch", 400}}},
        };
    } else if (preset == "paper") {
        overlay = json::object();
    } else {
        raise(ErrorCode::config, "unknown preset '" + preset + "'");
    }
    // preset first, then the file's own keys on top
    json merged = overlay;
    merged.merge_patch(file_json);
    file_json = merged;
}

TrainConfig train_config_from_json(json j) {
    apply_preset(j);
    check_keys(j, "train",
               {"mode", "dataset", "val_noisy_dir", "val_clean_dir", "master_seed", "deterministic",
                "model", "loss", "phase1", "phase2", "carry_optimizer", "synthetic_noise",
                "validate_every", "checkpoint_every", "eval_stride", "eval_pipeline"});
    TrainConfig cfg;
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "standard")
            cfg.mode = TrainMode::standard;
        else if (m == "self_on_test")
            cfg.mode = TrainMode::self_on_test;
        else
            raise(ErrorCode::config, "unknown mode '" + m + "'");
    }
    cfg.dataset = j.value("dataset", cfg.dataset);
    cfg.val_noisy_dir = j.value("val_noisy_dir", cfg.val_noisy_dir);
    cfg.val_clean_dir = j.value("val_clean_dir", cfg.val_clean_dir);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.deterministic = j.value("deterministic", cfg.deterministic);
    if (j.contains("model")) cfg.model = bsn_config_from_json(j.at("model"));
    if (j.contains("loss")) cfg.loss = loss_spec_from_json(j.at("loss"));
    if (j.contains("phase1")) cfg.phase1 = phase_from_json(j.at("phase1"), "phase1", cfg.phase1);
    if (j.contains("phase2")) cfg.phase2 = phase_from_json(j.at("phase2"), "phase2", cfg.phase2);
    cfg.carry_optimizer = j.value("carry_optimizer", cfg.carry_optimizer);
    if (j.contains("synthetic_noise") && !j.at("synthetic_noise").is_null()) {
        json sn = j.at("synthetic_noise");
        SyntheticNoiseConfig snc;
        if (sn.contains("seed")) {
            snc.seed = sn.at("seed").get<std::uint64_t>();
            sn.erase("seed");
        }
        snc.spec = noise_spec_from_json(sn, "synthetic_noise");
        cfg.synthetic_noise = snc;
    }
    cfg.validate_every = j.value("validate_every", cfg.validate_every);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.eval_stride = j.value("eval_stride", cfg.eval_stride);
    cfg.eval_pipeline = j.value("eval_pipeline", cfg.eval_pipeline);
    cfg.validate();
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    json j{{"mode", cfg.mode == TrainMode::standard ? "standard" : "self_on_test"},
           {"dataset", cfg.dataset},
           {"val_noisy_dir", cfg.val_noisy_dir},
           {"val_clean_dir", cfg.val_clean_dir},
           {"master_seed", cfg.master_seed},
           {"deterministic", cfg.deterministic},
           {"model", bsn_config_to_json(cfg.model)},
           {"loss", loss_spec_to_json(cfg.loss)},
           {"phase1", phase_to_json(cfg.phase1)},
           {"phase2", phase_to_json(cfg.phase2)},
           {"carry_optimizer", cfg.carry_optimizer},
           {"validate_every", cfg.validate_every},
           {"checkpoint_every", cfg.checkpoint_every},
           {"eval_stride", cfg.eval_stride},
           {"eval_pipeline", cfg.eval_pipeline}};
    if (cfg.synthetic_noise) {
        j["synthetic_noise"] = noise_spec_to_json(cfg.synthetic_noise->spec);
        j["synthetic_noise"]["seed"] = cfg.synthetic_noise->seed;
    } else {
        j["synthetic_noise"] = nullptr;
    }
    return j;
}

ImageSetSpec image_set_from_json(const json& j, const std::string& section) {
    check_keys(j, section, {"dir", "count", "height", "width", "channels", "seed"});
    ImageSetSpec s;
    s.dir = j.value("dir", s.dir);
    s.count = j.value("count", s.count);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.channels = j.value("channels", s.channels);
    s.seed = j.value("seed", s.seed);
    if (s.dir.empty() && (s.count < 1 || s.height < 8 || s.width < 8))
        raise(ErrorCode::config, section + ": synthetic set needs count >= 1 and size >= 8");
    if (s.channels != 1 && s.channels != 3)
        raise(ErrorCode::config, section + ": channels must be 1 or 3");
    return s;
}

json image_set_to_json(const ImageSetSpec& s) {
    return json{{"dir", s.dir},   {"count", s.count},       {"height", s.height},
                {"width", s.width}, {"channels", s.channels}, {"seed", s.seed}};
}

SeedExperimentConfig seed_experiment_from_json(json j) {
    check_keys(j, "seed_experiment",
               {"train_set", "test_set", "sigma", "noise_seed", "train"});
    SeedExperimentConfig cfg;
    if (j.contains("train_set")) cfg.train_set = image_set_from_json(j.at("train_set"), "train_set");
    if (j.contains("test_set")) cfg.test_set = image_set_from_json(j.at("test_set"), "test_set");
    cfg.sigma = j.value("sigma", cfg.sigma);
    cfg.noise_seed = j.value("noise_seed", cfg.noise_seed);
    if (j.contains("train")) cfg.train_overrides = j.at("train");
    if (cfg.sigma < 0) raise(ErrorCode::config, "sigma must be >= 0");
    return cfg;
}

json seed_experiment_to_json(const SeedExperimentConfig& cfg) {
    return json{{"train_set", image_set_to_json(cfg.train_set)},
                {"test_set", image_set_to_json(cfg.test_set)},
                {"sigma", cfg.sigma},
                {"noise_seed", cfg.noise_seed},
                {"train", cfg.train_overrides}};
}

SweepConfig sweep_config_from_json(json j) {
    check_keys(j, "sweep",
               {"train_set", "test_set", "noise", "noise_seed", "variants", "sigmas", "train"});
    SweepConfig cfg;
    if (j.contains("train_set")) cfg.train_set = image_set_from_json(j.at("train_set"), "train_set");
    if (j.contains("test_set")) cfg.test_set = image_set_from_json(j.at("test_set"), "test_set");
    if (j.contains("noise")) cfg.noise = noise_spec_from_json(j.at("noise"), "noise");
    cfg.noise_seed = j.value("noise_seed", cfg.noise_seed);
    if (j.contains("variants")) {
        cfg.variants.clear();
        for (const auto& v : j.at("variants"))
            cfg.variants.push_back(loss_variant_from_string(v.get<std::string>()));
        if (cfg.variants.empty()) raise(ErrorCode::config, "variants must be non-empty");
    }
    if (j.contains("sigmas")) {
        cfg.sigmas = j.at("sigmas").get<std::vector<double>>();
        if (cfg.sigmas.empty()) raise(ErrorCode::config, "sigmas must be non-empty");
    }
    if (j.contains("train")) cfg.train_overrides = j.at("train");
    return cfg;
}

json sweep_config_to_json(const SweepConfig& cfg) {
    json variants = json::array();
    for (LossVariant v : cfg.variants) variants.push_back(to_string(v));
    return json{{"train_set", image_set_to_json(cfg.train_set)},
                {"test_set", image_set_to_json(cfg.test_set)},
                {"noise", noise_spec_to_json(cfg.noise)},
                {"noise_seed", cfg.noise_seed},
                {"variants", variants},
                {"sigmas", cfg.sigmas},
                {"train", cfg.train_overrides}};
}

AblationConfig ablation_config_from_json(json j) {
    check_keys(j, "ablation", {"train_set", "test_set", "noise", "noise_seed", "train"});
    AblationConfig cfg;
    if (j.contains("train_set")) cfg.train_set = image_set_from_json(j.at("train_set"), "train_set");
    if (j.contains("test_set")) cfg.test_set = image_set_from_json(j.at("test_set"), "test_set");
    if (j.contains("noise")) cfg.noise = noise_spec_from_json(j.at("noise"), "noise");
    cfg.noise_seed = j.value("noise_seed", cfg.noise_seed);
    if (j.contains("train")) cfg.train_overrides = j.at("train");
    return cfg;
}

json ablation_config_to_json(const AblationConfig& cfg) {
    return json{{"train_set", image_set_to_json(cfg.train_set)},
                {"test_set", image_set_to_json(cfg.test_set)},
                {"noise", noise_spec_to_json(cfg.noise)},
                {"noise_seed", cfg.noise_seed},
                {"train", cfg.train_overrides}};
}

std::vector<ImageGrid> materialize_image_set(const ImageSetSpec& spec) {
    std::vector<ImageGrid> images;
    if (!spec.dir.empty()) {
        for (const auto& name : list_image_files(spec.dir)) images.push_back(load_image(name));
        if (images.empty()) raise(ErrorCode::io, "no images found in " + spec.dir);
        return images;
    }
    for (int i = 0; i < spec.count; ++i) {
        Rng rng(derive_seed(spec.seed, {0x73796e74ULL, static_cast<std::uint64_t>(i)}));
        images.push_back(make_synthetic_clean(spec.height, spec.width, spec.channels, rng));
    }
    return images;
}

}  // namespace sdap
