#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/image.hpp"
#include "core/losses.hpp"
#include "core/net.hpp"

namespace sdap {

using json = nlohmann::json;

// Rejects unknown keys so config typos fail loudly, naming the offender.
void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed);

// "a.b.c=value" overrides; values parse as JSON when possible, else as string
void apply_overrides(json& config, const std::vector<std::string>& overrides);

json bsn_config_to_json(const BsnConfig& cfg);
BsnConfig bsn_config_from_json(const json& j, const std::string& section = "model");

json loss_spec_to_json(const LossSpec& spec);
LossSpec loss_spec_from_json(const json& j, const std::string& section = "loss");

json noise_spec_to_json(const NoiseSpec& spec);
NoiseSpec noise_spec_from_json(const json& j, const std::string& section = "noise");

struct PhaseConfig {
    double lr = 1e-4;
    int batch = 16;
    int patch = 160;
    int epochs = 15;
    int patches_per_epoch = 25600;
};

enum class TrainMode { standard, self_on_test };

struct SyntheticNoiseConfig {
    NoiseSpec spec;
    std::uint64_t seed = 1234;
};

struct TrainConfig {
    TrainMode mode = TrainMode::standard;
    std::string dataset;        // directory of training images
    std::string val_noisy_dir;  // optional validation pair
    std::string val_clean_dir;
    std::uint64_t master_seed = 1;
    bool deterministic = true;
    BsnConfig model;
    LossSpec loss;
    PhaseConfig phase1{1e-4, 16, 160, 15, 25600};
    PhaseConfig phase2{1e-5, 8, 250, 10, 25600};
    bool carry_optimizer = true;  // keep Adam moments across the phase boundary
    std::optional<SyntheticNoiseConfig> synthetic_noise;  // dataset is clean; noise added per epoch
    int validate_every = 1;
    int checkpoint_every = 1;
    int eval_stride = 2;  // inference stride for validation
    std::string eval_pipeline = "pd";

    void validate() const;
};

// Defaults follow the full-scale training schedule; the "tiny" preset rewrites
// model and phases for desk-scale runs before the file's own keys apply.
TrainConfig train_config_defaults();
void apply_preset(json& file_json);
TrainConfig train_config_from_json(json file_json);
json train_config_to_json(const TrainConfig& cfg);

// clean-image source for experiment harnesses: a directory, or synthesized
struct ImageSetSpec {
    std::string dir;
    int count = 10;
    int height = 96;
    int width = 96;
    int channels = 1;
    std::uint64_t seed = 100;
};

ImageSetSpec image_set_from_json(const json& j, const std::string& section);
json image_set_to_json(const ImageSetSpec& s);
std::vector<ImageGrid> materialize_image_set(const ImageSetSpec& spec);

struct SeedExperimentConfig {
    ImageSetSpec train_set{.count = 10, .seed = 100};
    ImageSetSpec test_set{.count = 5, .seed = 900};
    double sigma = 25.0;
    std::uint64_t noise_seed = 77;
    json train_overrides = json::object();  // merged onto the tiny-preset base
};

SeedExperimentConfig seed_experiment_from_json(json j);
json seed_experiment_to_json(const SeedExperimentConfig& cfg);

struct SweepConfig {
    ImageSetSpec train_set{.count = 10, .seed = 100};
    ImageSetSpec test_set{.count = 5, .seed = 900};
    NoiseSpec noise{NoiseKind::correlated, 25.0, SeedMode::fixed, 2};
    std::uint64_t noise_seed = 77;
    std::vector<LossVariant> variants{LossVariant::pbsn1, LossVariant::pbsn2, LossVariant::pbsn3};
    std::vector<double> sigmas{0, 5, 10, 15, 20, 25};
    json train_overrides = json::object();
};

SweepConfig sweep_config_from_json(json j);
json sweep_config_to_json(const SweepConfig& cfg);

struct AblationConfig {
    ImageSetSpec train_set{.count = 10, .seed = 100};
    ImageSetSpec test_set{.count = 5, .seed = 900};
    NoiseSpec noise{NoiseKind::correlated, 25.0, SeedMode::fixed, 2};
    std::uint64_t noise_seed = 77;
    json train_overrides = json::object();
};

AblationConfig ablation_config_from_json(json j);
json ablation_config_to_json(const AblationConfig& cfg);

json load_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace sdap
