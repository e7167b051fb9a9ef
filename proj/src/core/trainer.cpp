#include "core/trainer.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "core/dataset.hpp"
#include "core/inference.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/optim.hpp"
#include "core/tensor.hpp"

namespace sdap {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTagPatch = 0x70617463ULL;
constexpr std::uint64_t kTagLoss = 0x6c6f7373ULL;
constexpr std::uint64_t kTagTestNoise = 0x74657374ULL;
constexpr std::uint64_t kTagArm = 0x61726d00ULL;

std::string zero_pad(int v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

TrainData load_train_data(const TrainConfig& cfg) {
    if (cfg.dataset.empty()) raise(ErrorCode::config, "train config needs a dataset directory");
    TrainData data;
    data.images = load_image_dir(cfg.dataset).images;
    if (!cfg.val_noisy_dir.empty()) {
        data.val_noisy = load_image_dir(cfg.val_noisy_dir).images;
        if (cfg.val_clean_dir.empty())
            raise(ErrorCode::config, "val_noisy_dir requires val_clean_dir");
        data.val_clean = load_image_dir(cfg.val_clean_dir).images;
        if (data.val_noisy.size() != data.val_clean.size())
            raise(ErrorCode::config, "validation sets differ in size");
    }
    return data;
}

EvalSummary evaluate_pairs(const BsnNet<float>& net, const std::vector<ImageGrid>& noisy,
                           const std::vector<ImageGrid>& clean, int stride,
                           const std::string& pipeline) {
    if (noisy.size() != clean.size() || noisy.empty())
        raise(ErrorCode::invalid_argument, "evaluate_pairs needs matching non-empty sets");
    EvalSummary sum;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        const ImageGrid out = pipeline == "pd_enhance" ? denoise_enhance(net, noisy[i], stride)
                                                       : denoise_pd(net, noisy[i], stride);
        sum.mean_psnr += psnr(out, clean[i]);
        sum.mean_ssim += ssim(out, clean[i]);
    }
    sum.mean_psnr /= static_cast<double>(noisy.size());
    sum.mean_ssim /= static_cast<double>(noisy.size());
    return sum;
}

TrainResult train(const TrainConfig& cfg, const TrainData& data, const std::string& out_dir,
                  const std::string& resume_from) {
    cfg.validate();
    if (data.images.empty()) raise(ErrorCode::config, "empty dataset");
    const int channels = data.images[0].channels;
    if (channels != cfg.model.in_channels)
        raise(ErrorCode::config, "dataset has " + std::to_string(channels) +
                                     " channels but model expects " +
                                     std::to_string(cfg.model.in_channels));
    const int max_patch = std::max(cfg.phase1.epochs > 0 ? cfg.phase1.patch : 1,
                                   cfg.phase2.epochs > 0 ? cfg.phase2.patch : 1);
    for (const ImageGrid& img : data.images)
        if (img.height < max_patch || img.width < max_patch)
            raise(ErrorCode::config, "image " + img.shape_str() + " smaller than patch " +
                                         std::to_string(max_patch));
    {
        // sub-samples fed to the network must clear its minimum input size
        BsnNet<float> probe(cfg.model);
        const int min_sub = probe.min_input_size();
        if (cfg.phase1.epochs > 0 && cfg.phase1.patch / cfg.loss.stride < min_sub)
            raise(ErrorCode::config, "phase1 patch / stride below model minimum input " +
                                         std::to_string(min_sub));
        if (cfg.phase2.epochs > 0 && cfg.phase2.patch / cfg.loss.stride < min_sub)
            raise(ErrorCode::config, "phase2 patch / stride below model minimum input " +
                                         std::to_string(min_sub));
    }

    fs::create_directories(out_dir);
    write_json_file(train_config_to_json(cfg), (fs::path(out_dir) / "config.resolved.json").string());

    TrainResult result;
    result.model = std::make_unique<BsnNet<float>>(cfg.model);
    BsnNet<float>& net = *result.model;
    Adam<float> adam(cfg.phase1.lr);
    adam.attach(net);
    int start_epoch = 0;

    if (!resume_from.empty()) {
        Checkpoint ckpt = load_checkpoint(resume_from);
        if (bsn_config_to_json(ckpt.net->config()) != bsn_config_to_json(cfg.model))
            raise(ErrorCode::config, "resume checkpoint model config differs from train config");
        net.convs() = ckpt.net->convs();
        if (ckpt.has_optimizer)
            adam.restore(std::move(ckpt.optim_m), std::move(ckpt.optim_v), ckpt.optim_steps);
        if (ckpt.metadata.count("epochs_done"))
            start_epoch = std::stoi(ckpt.metadata.at("epochs_done"));
    }

    const int total_epochs = cfg.phase1.epochs + cfg.phase2.epochs;
    result.log_path = (fs::path(out_dir) / "train_log.jsonl").string();
    std::ofstream log(result.log_path, start_epoch > 0 ? std::ios::app : std::ios::trunc);
    if (!log) raise(ErrorCode::io, "cannot write training log: " + result.log_path);

    BsnGrads<float> grads;
    grads.init_like(net);
    std::vector<ImageGrid> noisy_cache;

    auto save_ckpt = [&](const std::string& name, int epochs_done) {
        const std::string path = (fs::path(out_dir) / name).string();
        save_checkpoint(path, net,
                        {{"epochs_done", std::to_string(epochs_done)},
                         {"loss_variant", to_string(cfg.loss.variant)},
                         {"master_seed", std::to_string(cfg.master_seed)}},
                        &adam);
        return path;
    };

    for (int epoch = start_epoch; epoch < total_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const bool in_phase1 = epoch < cfg.phase1.epochs;
        const PhaseConfig& phase = in_phase1 ? cfg.phase1 : cfg.phase2;
        if (!in_phase1 && epoch == cfg.phase1.epochs && !cfg.carry_optimizer) adam.attach(net);
        adam.set_lr(phase.lr);

        const std::vector<ImageGrid>* pool = &data.images;
        if (cfg.synthetic_noise) {
            noisy_cache.clear();
            noisy_cache.reserve(data.images.size());
            for (std::size_t i = 0; i < data.images.size(); ++i)
                noisy_cache.push_back(add_noise(data.images[i], cfg.synthetic_noise->spec, epoch,
                                                static_cast<int>(i), cfg.synthetic_noise->seed));
            pool = &noisy_cache;
        }

        const int steps = std::max(1, phase.patches_per_epoch / phase.batch);
        double loss_sum = 0.0;
        for (int step = 0; step < steps; ++step) {
            Tensor<float> batch(phase.batch, channels, phase.patch, phase.patch);
            for (int slot = 0; slot < phase.batch; ++slot) {
                Rng prng(derive_seed(cfg.master_seed,
                                     {kTagPatch, static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(step),
                                      static_cast<std::uint64_t>(slot)}));
                const auto idx = prng.below(pool->size());
                const ImageGrid patch = sample_patch((*pool)[idx], phase.patch, prng);
                const Tensor<float> t = image_to_tensor<float>(patch);
                std::copy(t.v.begin(), t.v.end(), batch.plane(slot, 0));
            }
            Rng lrng(derive_seed(cfg.master_seed, {kTagLoss, static_cast<std::uint64_t>(epoch),
                                                   static_cast<std::uint64_t>(step)}));
            grads.zero();
            loss_sum += loss_and_grad(net, batch, cfg.loss, lrng, grads);
            adam.step(net, grads);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = in_phase1 ? 1 : 2;
        rec.mean_loss = loss_sum / steps;
        rec.lr = phase.lr;
        const bool validate = !data.val_noisy.empty() && cfg.validate_every > 0 &&
                              ((epoch + 1) % cfg.validate_every == 0 || epoch + 1 == total_epochs);
        if (validate) {
            const EvalSummary ev =
                evaluate_pairs(net, data.val_noisy, data.val_clean, cfg.eval_stride, cfg.eval_pipeline);
            rec.psnr = ev.mean_psnr;
            rec.ssim = ev.mean_ssim;
        }
        rec.wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(rec);

        json line{{"epoch", rec.epoch},   {"phase", rec.phase}, {"loss", rec.mean_loss},
                  {"lr", rec.lr},         {"wall_s", rec.wall_s}};
        if (rec.psnr >= 0) {
            line["psnr"] = rec.psnr;
            line["ssim"] = rec.ssim;
        }
        log << line.dump() << "\n" << std::flush;

        if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
            save_ckpt("ckpt_epoch_" + zero_pad(epoch + 1, 3) + ".ckpt", epoch + 1);
    }

    result.final_checkpoint = save_ckpt("model_final.ckpt", total_epochs);
    return result;
}

TrainConfig experiment_base_config(const json& overrides, int in_channels) {
    json j{{"preset", "tiny"}};
    j.merge_patch(overrides);
    if (!j.contains("dataset")) j["dataset"] = "(in-memory)";
    TrainConfig cfg = train_config_from_json(j);
    cfg.model.in_channels = in_channels;
    cfg.validate();
    return cfg;
}

namespace {

std::vector<ImageGrid> add_noise_set(const std::vector<ImageGrid>& clean, const NoiseSpec& spec,
                                     std::uint64_t seed) {
    std::vector<ImageGrid> noisy;
    noisy.reserve(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i)
        noisy.push_back(add_noise(clean[i], spec, 0, static_cast<int>(i), seed));
    return noisy;
}

void write_summary(const std::string& out_dir, const std::string& text) {
    std::ofstream out(fs::path(out_dir) / "summary.txt");
    out << text;
}

}  // namespace

SeedExperimentResult run_seed_experiment(const SeedExperimentConfig& cfg,
                                         const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json_file(seed_experiment_to_json(cfg), (fs::path(out_dir) / "config.resolved.json").string());

    const std::vector<ImageGrid> clean_train = materialize_image_set(cfg.train_set);
    const std::vector<ImageGrid> clean_test = materialize_image_set(cfg.test_set);
    const int channels = clean_train[0].channels;

    TrainConfig base = experiment_base_config(cfg.train_overrides, channels);
    base.loss.variant = LossVariant::bsn;
    base.loss.stride = 1;
    base.eval_stride = 1;

    NoiseSpec tnoise;
    tnoise.kind = NoiseKind::awgn;
    tnoise.sigma = cfg.sigma;
    tnoise.seed_mode = SeedMode::fixed;
    const std::vector<ImageGrid> test_noisy =
        add_noise_set(clean_test, tnoise, derive_seed(cfg.noise_seed, {kTagTestNoise}));

    SeedExperimentResult result;
    for (int arm = 0; arm < 2; ++arm) {
        TrainConfig arm_cfg = base;
        SyntheticNoiseConfig sn;
        sn.spec.kind = NoiseKind::awgn;
        sn.spec.sigma = cfg.sigma;
        sn.spec.seed_mode = arm == 0 ? SeedMode::fixed : SeedMode::per_epoch_random;
        sn.seed = cfg.noise_seed;
        arm_cfg.synthetic_noise = sn;

        TrainData data;
        data.images = clean_train;
        const std::string arm_name = arm == 0 ? "fixed" : "random";
        TrainResult tr = train(arm_cfg, data, (fs::path(out_dir) / arm_name).string());
        const EvalSummary ev = evaluate_pairs(*tr.model, test_noisy, clean_test, 1);
        if (arm == 0) {
            result.psnr_fixed = ev.mean_psnr;
            result.ssim_fixed = ev.mean_ssim;
        } else {
            result.psnr_random = ev.mean_psnr;
            result.ssim_random = ev.mean_ssim;
        }
    }

    result.csv_path = (fs::path(out_dir) / "report.csv").string();
    {
        std::ofstream csv(result.csv_path);
        csv << "seed_mode,psnr_db,ssim\n";
        csv << "fixed," << result.psnr_fixed << "," << result.ssim_fixed << "\n";
        csv << "per_epoch_random," << result.psnr_random << "," << result.ssim_random << "\n";
    }
    write_summary(out_dir,
                  "seed experiment (sigma " + std::to_string(cfg.sigma) + ")\n" +
                      "  fixed seed:  " + std::to_string(result.psnr_fixed) + " dB / " +
                      std::to_string(result.ssim_fixed) + "\n" + "  random seed: " +
                      std::to_string(result.psnr_random) + " dB / " +
                      std::to_string(result.ssim_random) + "\n");
    return result;
}

SweepResult run_perturbation_sweep(const SweepConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json_file(sweep_config_to_json(cfg), (fs::path(out_dir) / "config.resolved.json").string());

    const std::vector<ImageGrid> clean_train = materialize_image_set(cfg.train_set);
    const std::vector<ImageGrid> clean_test = materialize_image_set(cfg.test_set);
    const int channels = clean_train[0].channels;

    TrainData data;
    data.images = add_noise_set(clean_train, cfg.noise, cfg.noise_seed);
    const std::vector<ImageGrid> test_noisy =
        add_noise_set(clean_test, cfg.noise, derive_seed(cfg.noise_seed, {kTagTestNoise}));

    SweepResult result;
    for (LossVariant variant : cfg.variants) {
        for (double sigma : cfg.sigmas) {
            for (SamplerKind sampler : {SamplerKind::pd, SamplerKind::rsg}) {
                TrainConfig cell_cfg = experiment_base_config(cfg.train_overrides, channels);
                cell_cfg.loss.variant = variant;
                cell_cfg.loss.sigma_eps = sigma;
                cell_cfg.loss.sampler = sampler;
                const std::string cell_name = std::string(to_string(variant)) + "_s" +
                                              std::to_string(static_cast<int>(sigma)) + "_" +
                                              to_string(sampler);
                TrainResult tr = train(cell_cfg, data, (fs::path(out_dir) / cell_name).string());
                const EvalSummary ev =
                    evaluate_pairs(*tr.model, test_noisy, clean_test, cell_cfg.eval_stride);
                result.cells.push_back({variant, sigma, sampler, ev.mean_psnr, ev.mean_ssim});
            }
        }
    }

    result.csv_path = (fs::path(out_dir) / "report.csv").string();
    std::ofstream csv(result.csv_path);
    csv << "variant,sigma_eps,sampler,psnr_db,ssim\n";
    for (const SweepCell& c : result.cells)
        csv << to_string(c.variant) << "," << c.sigma_eps << "," << to_string(c.sampler) << ","
            << c.psnr << "," << c.ssim << "\n";
    return result;
}

const AblationCell& AblationResult::cell(SamplerKind s, LossVariant v) const {
    for (const AblationCell& c : cells)
        if (c.sampler == s && c.variant == v) return c;
    raise(ErrorCode::runtime, "ablation cell missing");
}

AblationResult run_ablation(const AblationConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_json_file(ablation_config_to_json(cfg), (fs::path(out_dir) / "config.resolved.json").string());

    const std::vector<ImageGrid> clean_train = materialize_image_set(cfg.train_set);
    const std::vector<ImageGrid> clean_test = materialize_image_set(cfg.test_set);
    const int channels = clean_train[0].channels;

    TrainData data;
    data.images = add_noise_set(clean_train, cfg.noise, cfg.noise_seed);
    const std::vector<ImageGrid> test_noisy =
        add_noise_set(clean_test, cfg.noise, derive_seed(cfg.noise_seed, {kTagTestNoise}));

    AblationResult result;
    for (SamplerKind sampler : {SamplerKind::pd, SamplerKind::rsg}) {
        for (LossVariant variant : {LossVariant::apbsn, LossVariant::csdbsn}) {
            TrainConfig cell_cfg = experiment_base_config(cfg.train_overrides, channels);
            cell_cfg.loss.variant = variant;
            cell_cfg.loss.sampler = sampler;
            const std::string cell_name =
                std::string(to_string(sampler)) + "_" + to_string(variant);
            TrainResult tr = train(cell_cfg, data, (fs::path(out_dir) / cell_name).string());
            const EvalSummary ev =
                evaluate_pairs(*tr.model, test_noisy, clean_test, cell_cfg.eval_stride);
            result.cells.push_back({sampler, variant, ev.mean_psnr, ev.mean_ssim});
        }
    }

    result.csv_path = (fs::path(out_dir) / "report.csv").string();
    std::ofstream csv(result.csv_path);
    csv << "sampler,loss,psnr_db,ssim\n";
    for (const AblationCell& c : result.cells)
        csv << to_string(c.sampler) << "," << to_string(c.variant) << "," << c.psnr << ","
            << c.ssim << "\n";

    std::string sum = "ablation (2x2)\n";
    for (const AblationCell& c : result.cells)
        sum += std::string("  ") + to_string(c.sampler) + " + " + to_string(c.variant) + ": " +
               std::to_string(c.psnr) + " dB / " + std::to_string(c.ssim) + "\n";
    write_summary(out_dir, sum);
    return result;
}

}  // namespace sdap
