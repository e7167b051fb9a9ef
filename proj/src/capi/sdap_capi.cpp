#include "sdap.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/image.hpp"
#include "core/inference.hpp"
#include "core/metrics.hpp"
#include "core/net.hpp"
#include "core/sampling.hpp"
#include "core/trainer.hpp"

struct sdap_image {
    sdap::ImageGrid grid;
};

struct sdap_model {
    std::unique_ptr<sdap::BsnNet<float>> net;
};

namespace {

thread_local std::string g_last_error;

sdap_status status_of(sdap::ErrorCode code) {
    switch (code) {
        case sdap::ErrorCode::invalid_argument: return SDAP_ERR_INVALID_ARGUMENT;
        case sdap::ErrorCode::io: return SDAP_ERR_IO;
        case sdap::ErrorCode::shape: return SDAP_ERR_SHAPE;
        case sdap::ErrorCode::config: return SDAP_ERR_CONFIG;
        case sdap::ErrorCode::runtime: return SDAP_ERR_RUNTIME;
    }
    return SDAP_ERR_RUNTIME;
}

template <typename Fn>
sdap_status guarded(Fn&& fn) {
    try {
        fn();
        return SDAP_OK;
    } catch (const sdap::Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const sdap::json::exception& e) {
        g_last_error = std::string("bad JSON: ") + e.what();
        return SDAP_ERR_CONFIG;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDAP_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return SDAP_ERR_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool cond, const char* msg) {
    if (!cond) sdap::raise(sdap::ErrorCode::invalid_argument, msg);
}

}  // namespace

extern "C" {

const char* sdap_version(void) { return "0.1.0"; }

const char* sdap_last_error(void) { return g_last_error.c_str(); }

void sdap_string_free(char* s) { std::free(s); }

sdap_status sdap_image_load(const char* path, sdap_image** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new sdap_image{sdap::load_image(path)};
    });
}

sdap_status sdap_image_save(const sdap_image* img, const char* path) {
    return guarded([&] {
        require(img && path, "null argument");
        sdap::save_image(img->grid, path);
    });
}

sdap_status sdap_image_create(int32_t height, int32_t width, int32_t channels,
                              const float* hwc_data, sdap_image** out) {
    return guarded([&] {
        require(out, "null argument");
        sdap::ImageGrid grid(height, width, channels);
        if (hwc_data)
            std::copy(hwc_data, hwc_data + grid.values.size(), grid.values.begin());
        *out = new sdap_image{std::move(grid)};
    });
}

void sdap_image_free(sdap_image* img) { delete img; }

int32_t sdap_image_height(const sdap_image* img) { return img ? img->grid.height : 0; }
int32_t sdap_image_width(const sdap_image* img) { return img ? img->grid.width : 0; }
int32_t sdap_image_channels(const sdap_image* img) { return img ? img->grid.channels : 0; }

sdap_status sdap_image_read(const sdap_image* img, float* dst, size_t capacity) {
    return guarded([&] {
        require(img && dst, "null argument");
        require(capacity >= img->grid.values.size(), "buffer too small");
        std::copy(img->grid.values.begin(), img->grid.values.end(), dst);
    });
}

sdap_status sdap_image_add_noise(const sdap_image* clean, const char* noise_json, int32_t epoch,
                                 int32_t image_index, uint64_t seed, sdap_image** out) {
    return guarded([&] {
        require(clean && noise_json && out, "null argument");
        const sdap::NoiseSpec spec =
            sdap::noise_spec_from_json(sdap::json::parse(noise_json), "noise");
        *out = new sdap_image{sdap::add_noise(clean->grid, spec, epoch, image_index, seed)};
    });
}

sdap_status sdap_model_create(const char* config_json, sdap_model** out) {
    return guarded([&] {
        require(config_json && out, "null argument");
        const sdap::BsnConfig cfg =
            sdap::bsn_config_from_json(sdap::json::parse(config_json), "model");
        *out = new sdap_model{std::make_unique<sdap::BsnNet<float>>(cfg)};
    });
}

sdap_status sdap_model_load(const char* path, sdap_model** out) {
    return guarded([&] {
        require(path && out, "null argument");
        sdap::Checkpoint ckpt = sdap::load_checkpoint(path);
        *out = new sdap_model{std::move(ckpt.net)};
    });
}

sdap_status sdap_model_save(const sdap_model* model, const char* path) {
    return guarded([&] {
        require(model && path, "null argument");
        sdap::save_checkpoint(path, *model->net, {});
    });
}

void sdap_model_free(sdap_model* model) { delete model; }

sdap_status sdap_model_describe(const sdap_model* model, char** json_out) {
    return guarded([&] {
        require(model && json_out, "null argument");
        sdap::json j{{"config", sdap::bsn_config_to_json(model->net->config())},
                     {"parameters", model->net->param_count()},
                     {"receptive_radius", model->net->receptive_radius()},
                     {"min_input_size", model->net->min_input_size()}};
        *json_out = dup_string(j.dump());
    });
}

sdap_status sdap_denoise_image(const sdap_model* model, const sdap_image* input,
                               const char* pipeline, int32_t stride, int32_t passes,
                               uint64_t seed, sdap_image** out) {
    return guarded([&] {
        require(model && input && pipeline && out, "null argument");
        sdap::InferenceSpec spec;
        spec.pipeline = sdap::pipeline_from_string(pipeline);
        spec.stride_test = stride;
        spec.n = passes;
        *out = new sdap_image{sdap::run_pipeline(*model->net, input->grid, spec, seed)};
    });
}

sdap_status sdap_blind_spot_audit(const sdap_model* model, int32_t trials, uint64_t seed,
                                  double* max_deviation_out, char** detail_out) {
    return guarded([&] {
        require(model && max_deviation_out, "null argument");
        const sdap::AuditReport report = sdap::blind_spot_audit(*model->net, trials, seed);
        *max_deviation_out = report.max_deviation;
        if (detail_out) *detail_out = dup_string(report.detail);
    });
}

sdap_status sdap_psnr(const sdap_image* a, const sdap_image* b, double* out) {
    return guarded([&] {
        require(a && b && out, "null argument");
        *out = sdap::psnr(a->grid, b->grid);
    });
}

sdap_status sdap_ssim(const sdap_image* a, const sdap_image* b, double* out) {
    return guarded([&] {
        require(a && b && out, "null argument");
        *out = sdap::ssim(a->grid, b->grid);
    });
}

sdap_status sdap_eval_dirs(const char* test_dir, const char* reference_dir, const char* csv_path,
                           char** summary_json_out) {
    return guarded([&] {
        require(test_dir && reference_dir && csv_path, "null argument");
        const sdap::LoadedDir test = sdap::load_image_dir(test_dir);
        const sdap::LoadedDir ref = sdap::load_image_dir(reference_dir);
        sdap::QualityReport report;
        for (std::size_t i = 0; i < test.names.size(); ++i) {
            for (std::size_t k = 0; k < ref.names.size(); ++k) {
                if (test.names[i] != ref.names[k]) continue;
                report.add(test.names[i], sdap::psnr(test.images[i], ref.images[k]),
                           sdap::ssim(test.images[i], ref.images[k]));
                break;
            }
        }
        if (report.rows.empty())
            sdap::raise(sdap::ErrorCode::invalid_argument,
                        "no file names shared between the two directories");
        report.finalize();
        sdap::write_csv(report, csv_path);
        if (summary_json_out) {
            sdap::json j{{"count", report.rows.size()},
                         {"mean_psnr", report.mean_psnr_db},
                         {"mean_ssim", report.mean_ssim}};
            *summary_json_out = dup_string(j.dump());
        }
    });
}

sdap_status sdap_sample_split(const sdap_image* img, int32_t stride, int32_t use_rsg,
                              uint64_t seed, sdap_image*** subs_out, int32_t* count_out) {
    return guarded([&] {
        require(img && subs_out && count_out, "null argument");
        auto [padded, crop] = sdap::pad_to_multiple(img->grid, stride);
        (void)crop;
        sdap::SamplingPlan plan;
        if (use_rsg) {
            sdap::Rng rng(seed);
            plan = sdap::make_rsg_plan(stride, padded.height, padded.width, rng);
        } else {
            plan = sdap::identity_plan(stride, padded.height, padded.width);
        }
        const sdap::SubsampleStack stack = sdap::rsg_split(padded, plan);
        const int32_t count = static_cast<int32_t>(stack.subs.size());
        sdap_image** arr = new sdap_image*[count];
        for (int32_t k = 0; k < count; ++k) arr[k] = new sdap_image{stack.subs[k]};
        *subs_out = arr;
        *count_out = count;
    });
}

void sdap_image_array_free(sdap_image** subs, int32_t count) {
    if (!subs) return;
    for (int32_t i = 0; i < count; ++i) delete subs[i];
    delete[] subs;
}

sdap_status sdap_sample_roundtrip(const sdap_image* img, int32_t stride, int32_t use_rsg,
                                  uint64_t seed, double* max_abs_diff_out) {
    return guarded([&] {
        require(img && max_abs_diff_out, "null argument");
        auto [padded, crop] = sdap::pad_to_multiple(img->grid, stride);
        sdap::SamplingPlan plan;
        if (use_rsg) {
            sdap::Rng rng(seed);
            plan = sdap::make_rsg_plan(stride, padded.height, padded.width, rng);
        } else {
            plan = sdap::identity_plan(stride, padded.height, padded.width);
        }
        const sdap::ImageGrid merged =
            sdap::crop_to(sdap::rsg_merge(sdap::rsg_split(padded, plan)), crop);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < merged.values.size(); ++i)
            max_diff = std::max(max_diff, std::abs(static_cast<double>(merged.values[i]) -
                                                   img->grid.values[i]));
        *max_abs_diff_out = max_diff;
    });
}

sdap_status sdap_train_run(const char* config_json, const char* out_dir,
                           char** summary_json_out) {
    return guarded([&] {
        require(config_json && out_dir, "null argument");
        const sdap::TrainConfig cfg = sdap::train_config_from_json(sdap::json::parse(config_json));
        const sdap::TrainData data = sdap::load_train_data(cfg);
        const sdap::TrainResult result = sdap::train(cfg, data, out_dir);
        if (summary_json_out) {
            sdap::json j{{"final_checkpoint", result.final_checkpoint},
                         {"log", result.log_path},
                         {"epochs", result.history.size()}};
            if (!result.history.empty()) {
                j["final_loss"] = result.history.back().mean_loss;
                if (result.history.back().psnr >= 0) {
                    j["final_psnr"] = result.history.back().psnr;
                    j["final_ssim"] = result.history.back().ssim;
                }
            }
            *summary_json_out = dup_string(j.dump());
        }
    });
}

sdap_status sdap_seed_experiment_run(const char* config_json, const char* out_dir,
                                     char** summary_json_out) {
    return guarded([&] {
        require(config_json && out_dir, "null argument");
        const sdap::SeedExperimentConfig cfg =
            sdap::seed_experiment_from_json(sdap::json::parse(config_json));
        const sdap::SeedExperimentResult result = sdap::run_seed_experiment(cfg, out_dir);
        if (summary_json_out) {
            sdap::json j{{"psnr_fixed", result.psnr_fixed},
                         {"ssim_fixed", result.ssim_fixed},
                         {"psnr_random", result.psnr_random},
                         {"ssim_random", result.ssim_random},
                         {"csv", result.csv_path}};
            *summary_json_out = dup_string(j.dump());
        }
    });
}

sdap_status sdap_sweep_run(const char* config_json, const char* out_dir,
                           char** summary_json_out) {
    return guarded([&] {
        require(config_json && out_dir, "null argument");
        const sdap::SweepConfig cfg = sdap::sweep_config_from_json(sdap::json::parse(config_json));
        const sdap::SweepResult result = sdap::run_perturbation_sweep(cfg, out_dir);
        if (summary_json_out) {
            sdap::json cells = sdap::json::array();
            for (const auto& c : result.cells)
                cells.push_back({{"variant", sdap::to_string(c.variant)},
                                 {"sigma_eps", c.sigma_eps},
                                 {"sampler", sdap::to_string(c.sampler)},
                                 {"psnr", c.psnr},
                                 {"ssim", c.ssim}});
            sdap::json j{{"cells", cells}, {"csv", result.csv_path}};
            *summary_json_out = dup_string(j.dump());
        }
    });
}

sdap_status sdap_ablation_run(const char* config_json, const char* out_dir,
                              char** summary_json_out) {
    return guarded([&] {
        require(config_json && out_dir, "null argument");
        const sdap::AblationConfig cfg =
            sdap::ablation_config_from_json(sdap::json::parse(config_json));
        const sdap::AblationResult result = sdap::run_ablation(cfg, out_dir);
        if (summary_json_out) {
            sdap::json cells = sdap::json::array();
            for (const auto& c : result.cells)
                cells.push_back({{"sampler", sdap::to_string(c.sampler)},
                                 {"loss", sdap::to_string(c.variant)},
                                 {"psnr", c.psnr},
                                 {"ssim", c.ssim}});
            sdap::json j{{"cells", cells}, {"csv", result.csv_path}};
            *summary_json_out = dup_string(j.dump());
        }
    });
}

}  // extern "C"
