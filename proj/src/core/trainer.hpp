#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/image.hpp"
#include "core/net.hpp"

namespace sdap {

struct TrainData {
    std::vector<ImageGrid> images;  // training set (clean when synthetic noise is enabled)
    std::vector<ImageGrid> val_noisy;
    std::vector<ImageGrid> val_clean;
};

TrainData load_train_data(const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    int phase = 1;
    double mean_loss = 0.0;
    double lr = 0.0;
    double psnr = -1.0;  // negative when no validation ran
    double ssim = -1.0;
    double wall_s = 0.0;
};

struct TrainResult {
    std::unique_ptr<BsnNet<float>> model;
    std::vector<EpochRecord> history;
    std::string final_checkpoint;
    std::string log_path;
};

// Two-phase loop. Deterministic given (config, master_seed): every patch,
// plan and perturbation stream is derived statelessly from
// (master_seed, epoch, step, slot), so a resumed run replays exactly.
TrainResult train(const TrainConfig& cfg, const TrainData& data, const std::string& out_dir,
                  const std::string& resume_from = "");

// evaluates model over (noisy, clean) pairs with the pd pipeline at `stride`
struct EvalSummary {
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};
EvalSummary evaluate_pairs(const BsnNet<float>& net, const std::vector<ImageGrid>& noisy,
                           const std::vector<ImageGrid>& clean, int stride,
                           const std::string& pipeline = "pd");

// ---- experiment harnesses ----

struct SeedExperimentResult {
    double psnr_fixed = 0.0, ssim_fixed = 0.0;
    double psnr_random = 0.0, ssim_random = 0.0;
    std::string csv_path;
};

// Trains two arms identical except NoiseSpec::seed_mode (fixed vs
// per_epoch_random), loss = bsn, and scores both on a held-out synthetic set.
SeedExperimentResult run_seed_experiment(const SeedExperimentConfig& cfg,
                                         const std::string& out_dir);

struct SweepCell {
    LossVariant variant;
    double sigma_eps = 0.0;
    SamplerKind sampler;
    double psnr = 0.0, ssim = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // |variants| x |sigmas| x {pd, rsg}
    std::string csv_path;
};

SweepResult run_perturbation_sweep(const SweepConfig& cfg, const std::string& out_dir);

struct AblationCell {
    SamplerKind sampler;
    LossVariant variant;  // apbsn or csdbsn
    double psnr = 0.0, ssim = 0.0;
};

struct AblationResult {
    std::vector<AblationCell> cells;  // {pd, rsg} x {apbsn, csdbsn}
    std::string csv_path;

    const AblationCell& cell(SamplerKind s, LossVariant v) const;
};

AblationResult run_ablation(const AblationConfig& cfg, const std::string& out_dir);

// tiny-preset training config used as the base of every experiment harness
TrainConfig experiment_base_config(const json& overrides, int in_channels);

}  // namespace sdap
