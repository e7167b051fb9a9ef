// Command-line front end. Everything goes through the C API in sdap.h; this
// translation unit never touches the core library directly.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sdap.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(sdap_status st) {
    switch (st) {
        case SDAP_OK: return 0;
        case SDAP_ERR_CONFIG:
        case SDAP_ERR_INVALID_ARGUMENT: return 2;
        default: return 1;
    }
}

int fail(sdap_status st) {
    std::cerr << "error: " << sdap_last_error() << "\n";
    return exit_code_for(st);
}

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { sdap_string_free(ptr); }
    std::string str() const { return ptr ? ptr : ""; }
};

json parse_value(const std::string& raw) {
    try {
        return json::parse(raw);
    } catch (const json::parse_error&) {
        return raw;
    }
}

// defaults < config file < --set overrides (dotted paths)
json build_config(const std::string& config_path, const std::vector<std::string>& sets) {
    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file: " << config_path << "\n";
            std::exit(2);
        }
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            std::cerr << "error: invalid JSON in " << config_path << ": " << e.what() << "\n";
            std::exit(2);
        }
    }
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            std::exit(2);
        }
        const std::string path = kv.substr(0, eq);
        json* node = &cfg;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                (*node)[key] = parse_value(kv.substr(eq + 1));
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
    return cfg;
}

void write_snapshot(const std::string& out_dir, const json& resolved) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "config.resolved.json");
    out << resolved.dump(2) << "\n";
}

std::vector<std::string> collect_inputs(const std::string& input) {
    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            for (auto& c : ext) c = static_cast<char>(std::tolower(c));
            if (ext == ".png" || ext == ".pgm" || ext == ".ppm") files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(input);
    }
    return files;
}

int run_config_command(sdap_status (*run)(const char*, const char*, char**),
                       const std::string& config_path, const std::vector<std::string>& sets,
                       std::optional<std::uint64_t> seed, const std::string& out_dir,
                       const char* seed_hint) {
    json cfg = build_config(config_path, sets);
    if (seed && seed_hint) {
        // dotted path, e.g. "master_seed" or "train.master_seed"
        std::string path(seed_hint);
        json* node = &cfg;
        std::size_t pos = 0;
        for (;;) {
            const auto dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot - pos);
            if (dot == std::string::npos) {
                (*node)[key] = *seed;
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
    OwnedString summary;
    const sdap_status st = run(cfg.dump().c_str(), out_dir.c_str(), &summary.ptr);
    if (st != SDAP_OK) return fail(st);
    std::cout << summary.str() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdap - self-supervised image denoising (random sub-samples generation)"};
    app.require_subcommand(1);

    std::string config_path, out_dir, input, checkpoint, pipeline = "pd";
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool deterministic = true;
    int stride = 2, passes = 1, trials = 100;
    bool use_rsg = false;
    std::string test_dir, ref_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--set", sets, "override config keys, e.g. --set loss.stride=2");
        cmd->add_option("--seed", seed, "master random seed for this run");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_flag("--deterministic,!--no-deterministic", deterministic,
                      "single-worker deterministic execution (always on; recorded in snapshots)");
    };

    CLI::App* c_train = app.add_subcommand("train", "train a model on an image folder");
    add_common(c_train);

    CLI::App* c_denoise = app.add_subcommand("denoise", "denoise an image or folder");
    add_common(c_denoise);
    c_denoise->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    c_denoise->add_option("--input", input, "input image or directory")->required();
    c_denoise->add_option("--pipeline", pipeline, "pd | pd_enhance | nrsg | nrsg_enhance");
    c_denoise->add_option("--stride", stride, "test-time stride factor (default 2)");
    c_denoise->add_option("--passes", passes, "RSG passes for nrsg pipelines (default 1)");

    CLI::App* c_eval = app.add_subcommand("eval", "PSNR/SSIM of one folder against another");
    add_common(c_eval);
    c_eval->add_option("--test", test_dir, "images to score")->required();
    c_eval->add_option("--ref", ref_dir, "reference images (matched by file name)")->required();

    CLI::App* c_ablate = app.add_subcommand("ablate", "2x2 sampler/loss ablation");
    add_common(c_ablate);
    CLI::App* c_seedexp = app.add_subcommand("seed-exp", "fixed vs per-epoch noise seed comparison");
    add_common(c_seedexp);
    CLI::App* c_sweep = app.add_subcommand("sweep", "perturbation sigma sweep");
    add_common(c_sweep);

    CLI::App* c_check = app.add_subcommand("check-bsn", "verify the blind-spot property");
    add_common(c_check);
    c_check->add_option("--checkpoint", checkpoint, "model checkpoint (default: fresh tiny model)");
    c_check->add_option("--trials", trials, "number of perturbation trials (default 100)");

    CLI::App* c_sample = app.add_subcommand("sample-debug", "dump sub-samples and check the round trip");
    add_common(c_sample);
    c_sample->add_option("--input", input, "input image")->required();
    c_sample->add_option("--stride", stride, "stride factor")->required();
    c_sample->add_flag("--rsg", use_rsg, "random plan instead of the fixed PD pattern");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::uint64_t seed_val = seed.value_or(1);

    if (c_train->parsed()) {
        if (out_dir.empty()) out_dir = "runs/train";
        std::vector<std::string> all_sets = sets;
        if (seed) all_sets.push_back("master_seed=" + std::to_string(*seed));
        all_sets.push_back(std::string("deterministic=") + (deterministic ? "true" : "false"));
        return run_config_command(sdap_train_run, config_path, all_sets, std::nullopt, out_dir,
                                  nullptr);
    }

    if (c_denoise->parsed()) {
        if (out_dir.empty()) out_dir = "denoised";
        sdap_model* model = nullptr;
        sdap_status st = sdap_model_load(checkpoint.c_str(), &model);
        if (st != SDAP_OK) return fail(st);
        fs::create_directories(out_dir);
        write_snapshot(out_dir, json{{"command", "denoise"},
                                     {"checkpoint", checkpoint},
                                     {"input", input},
                                     {"pipeline", pipeline},
                                     {"stride", stride},
                                     {"passes", passes},
                                     {"seed", seed_val},
                                     {"deterministic", deterministic}});
        for (const std::string& file : collect_inputs(input)) {
            sdap_image* img = nullptr;
            st = sdap_image_load(file.c_str(), &img);
            if (st != SDAP_OK) {
                sdap_model_free(model);
                return fail(st);
            }
            sdap_image* out = nullptr;
            st = sdap_denoise_image(model, img, pipeline.c_str(), stride, passes, seed_val, &out);
            sdap_image_free(img);
            if (st != SDAP_OK) {
                sdap_model_free(model);
                return fail(st);
            }
            const std::string out_path = (fs::path(out_dir) / fs::path(file).filename()).string();
            st = sdap_image_save(out, out_path.c_str());
            sdap_image_free(out);
            if (st != SDAP_OK) {
                sdap_model_free(model);
                return fail(st);
            }
            std::cout << out_path << "\n";
        }
        sdap_model_free(model);
        return 0;
    }

    if (c_eval->parsed()) {
        if (out_dir.empty()) out_dir = "eval";
        fs::create_directories(out_dir);
        const std::string csv = (fs::path(out_dir) / "report.csv").string();
        write_snapshot(out_dir, json{{"command", "eval"},
                                     {"test", test_dir},
                                     {"ref", ref_dir},
                                     {"csv", csv},
                                     {"seed", seed_val},
                                     {"deterministic", deterministic}});
        OwnedString summary;
        const sdap_status st =
            sdap_eval_dirs(test_dir.c_str(), ref_dir.c_str(), csv.c_str(), &summary.ptr);
        if (st != SDAP_OK) return fail(st);
        std::cout << summary.str() << "\n";
        return 0;
    }

    if (c_ablate->parsed()) {
        if (out_dir.empty()) out_dir = "runs/ablation";
        std::vector<std::string> all_sets = sets;
        if (seed) {
            all_sets.push_back("noise_seed=" + std::to_string(*seed));
            all_sets.push_back("train.master_seed=" + std::to_string(*seed));
        }
        return run_config_command(sdap_ablation_run, config_path, all_sets, std::nullopt, out_dir,
                                  nullptr);
    }
    if (c_seedexp->parsed()) {
        if (out_dir.empty()) out_dir = "runs/seed_experiment";
        std::vector<std::string> all_sets = sets;
        if (seed) {
            all_sets.push_back("noise_seed=" + std::to_string(*seed));
            all_sets.push_back("train.master_seed=" + std::to_string(*seed));
        }
        return run_config_command(sdap_seed_experiment_run, config_path, all_sets, std::nullopt,
                                  out_dir, nullptr);
    }
    if (c_sweep->parsed()) {
        if (out_dir.empty()) out_dir = "runs/sweep";
        std::vector<std::string> all_sets = sets;
        if (seed) {
            all_sets.push_back("noise_seed=" + std::to_string(*seed));
            all_sets.push_back("train.master_seed=" + std::to_string(*seed));
        }
        return run_config_command(sdap_sweep_run, config_path, all_sets, std::nullopt, out_dir,
                                  nullptr);
    }

    if (c_check->parsed()) {
        sdap_model* model = nullptr;
        sdap_status st;
        if (!checkpoint.empty()) {
            st = sdap_model_load(checkpoint.c_str(), &model);
        } else {
            json cfg = build_config(config_path, sets);
            if (!cfg.contains("base_channels")) cfg["base_channels"] = 32;
            if (!cfg.contains("blocks_per_branch")) cfg["blocks_per_branch"] = 2;
            if (!cfg.contains("in_channels")) cfg["in_channels"] = 3;
            st = sdap_model_create(cfg.dump().c_str(), &model);
        }
        if (st != SDAP_OK) return fail(st);
        if (!out_dir.empty())
            write_snapshot(out_dir, json{{"command", "check-bsn"},
                                         {"checkpoint", checkpoint},
                                         {"trials", trials},
                                         {"seed", seed_val}});
        double max_dev = 0.0;
        OwnedString detail;
        st = sdap_blind_spot_audit(model, trials, seed_val, &max_dev, &detail.ptr);
        sdap_model_free(model);
        if (st != SDAP_OK) return fail(st);
        if (max_dev == 0.0) {
            std::cout << "blind-spot audit: PASS (max deviation 0)\n";
            return 0;
        }
        std::cout << "blind-spot audit: FAIL (" << detail.str() << ")\n";
        return 1;
    }

    if (c_sample->parsed()) {
        if (out_dir.empty()) out_dir = "samples";
        sdap_image* img = nullptr;
        sdap_status st = sdap_image_load(input.c_str(), &img);
        if (st != SDAP_OK) return fail(st);
        fs::create_directories(out_dir);
        write_snapshot(out_dir, json{{"command", "sample-debug"},
                                     {"input", input},
                                     {"stride", stride},
                                     {"rsg", use_rsg},
                                     {"seed", seed_val}});
        sdap_image** subs = nullptr;
        int32_t count = 0;
        st = sdap_sample_split(img, stride, use_rsg ? 1 : 0, seed_val, &subs, &count);
        if (st != SDAP_OK) {
            sdap_image_free(img);
            return fail(st);
        }
        for (int32_t k = 0; k < count; ++k) {
            const std::string path =
                (fs::path(out_dir) / ("sub_" + std::to_string(k) + ".png")).string();
            st = sdap_image_save(subs[k], path.c_str());
            if (st != SDAP_OK) break;
            std::cout << path << "\n";
        }
        sdap_image_array_free(subs, count);
        if (st != SDAP_OK) {
            sdap_image_free(img);
            return fail(st);
        }
        double max_diff = -1.0;
        st = sdap_sample_roundtrip(img, stride, use_rsg ? 1 : 0, seed_val, &max_diff);
        sdap_image_free(img);
        if (st != SDAP_OK) return fail(st);
        std::cout << "round-trip max |difference| = " << max_diff
                  << (max_diff == 0.0 ? " (exact)" : " (MISMATCH)") << "\n";
        return max_diff == 0.0 ? 0 : 1;
    }

    return 2;
}
