#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ciatr/config.hpp"
#include "ciatr/core.hpp"
#include "ciatr/experiment.hpp"
#include "ciatr/io.hpp"
#include "ciatr/training.hpp"

namespace fs = std::filesystem;
using namespace ciatr;

namespace {

// Stable exit-code contract: 0 ok, 2 config, 3 I/O, 4 numeric, 5 shape.
enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4, kShapeError = 5 };

int run_gen_data(const std::string& config_path) {
    const RunConfig cfg = parse_config_file(config_path);
    const Dataset ds = gen_dataset(cfg.data, SeedStream{cfg.train.seed, 0});
    write_dataset(cfg.data_dir, ds, cfg.data);
    std::cout << "wrote " << ds.train.size() << " train + " << ds.test.size()
              << " test images to " << cfg.data_dir.string() << "\n";
    return kOk;
}

int run_train(const std::string& config_path, const std::string& ablate) {
    RunConfig cfg = parse_config_file(config_path);
    if (!ablate.empty()) {
        apply_variant(cfg.train, ablate);
    }
    // nothing is written unless the dataset is readable
    const std::vector<LabeledImage> dtr = load_split(cfg.data_dir, "train");
    const std::vector<LabeledImage> dte = load_split(cfg.data_dir, "test");

    const TrainResult result = train(dtr, cfg.train, cfg.augment);
    const EvalReport report = evaluate(result.params, dte);

    fs::create_directories(cfg.out_dir);
    save_checkpoint(cfg.out_dir / "checkpoint.bin", result.params);
    std::ofstream(cfg.out_dir / "metrics.jsonl", std::ios::binary)
        << metrics_jsonl(result.history);
    std::ofstream(cfg.out_dir / "eval.json", std::ios::binary) << eval_report_json(report);
    std::ofstream(cfg.out_dir / "confusion.csv", std::ios::binary) << confusion_csv(report);

    const EpochStats& last = result.history.back();
    std::cout << "final epoch " << last.epoch << ": L_ce=" << last.loss.l_ce
              << " L_d=" << last.loss.l_d << " total=" << last.loss.total
              << " train_acc=" << last.train_acc << "\n"
              << "test accuracy: " << report.overall << "\n";
    return kOk;
}

int run_eval(const std::string& checkpoint, const std::string& data_dir) {
    const ModelParams params = load_checkpoint(checkpoint);
    const std::vector<LabeledImage> dte = load_split(data_dir, "test");
    const EvalReport report = evaluate(params, dte);
    std::cout << eval_report_json(report);
    return kOk;
}

Grid spectrum_view(const ComplexGrid& spec) {
    Grid mag(spec.rows(), spec.cols());
    for (Eigen::Index i = 0; i < spec.rows(); ++i) {
        for (Eigen::Index j = 0; j < spec.cols(); ++j) {
            mag(i, j) = std::log1p(std::abs(spec(i, j)));
        }
    }
    return normalize_minmax(mag);
}

int run_augment_preview(const std::string& config_path, const std::string& image_path,
                        int count) {
    const RunConfig cfg = parse_config_file(config_path);
    const Grid image = read_pgm(image_path);
    fs::create_directories(cfg.out_dir);
    const SeedStream root{cfg.train.seed, 0x70726576ull};  // "prev"
    for (int k = 0; k < count; ++k) {
        const AugmentStages stages =
            augment_stages(image, derive_sample_seed(root, 0, k), cfg.augment);
        const std::string base = "draw" + std::to_string(k);
        write_pgm(cfg.out_dir / (base + "_0_original.pgm"), stages.original);
        write_pgm(cfg.out_dir / (base + "_1_spectrum.pgm"), spectrum_view(stages.spectrum));
        write_pgm(cfg.out_dir / (base + "_2_spectrum_masked.pgm"),
                  spectrum_view(stages.masked_spectrum));
        write_pgm(cfg.out_dir / (base + "_3_ifft.pgm"),
                  normalize_minmax(stages.intermediate));
        write_pgm(cfg.out_dir / (base + "_4_final.pgm"), stages.final);
    }
    std::cout << "wrote " << 5 * count << " preview files to " << cfg.out_dir.string()
              << "\n";
    return kOk;
}

int run_experiment_cmd(const std::string& config_path) {
    const RunConfig cfg = parse_config_file(config_path);
    const ExperimentResult result = run_experiment(cfg);
    long fresh = 0;
    for (const CellResult& cell : result.cells) {
        if (!cell.skipped) ++fresh;
    }
    std::cout << "completed " << result.cells.size() << " cells (" << fresh
              << " trained, " << result.cells.size() - fresh << " resumed); summary at "
              << (cfg.out_dir / "summary.csv").string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"causal-interventional recognition lab: confounded synthetic radar data,\n"
                 "spatial-frequency hybrid augmentation, and hybrid-similarity training"};
    app.require_subcommand(1);

    std::string config_path;
    std::string ablate;
    std::string checkpoint;
    std::string data_dir;
    std::string image_path;
    int count = 1;

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
    gen->add_option("--config", config_path, "config file")->required();

    CLI::App* tr = app.add_subcommand("train", "train a model and evaluate it");
    tr->add_option("--config", config_path, "config file")->required();
    tr->add_option("--ablate", ablate, "variant override: ce-only, aug, aug-ld");

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    ev->add_option("--data-dir", data_dir, "dataset directory")->required();

    CLI::App* prev = app.add_subcommand("augment-preview", "dump augmentation stages as PGM");
    prev->add_option("--config", config_path, "config file")->required();
    prev->add_option("--image", image_path, "input PGM")->required();
    prev->add_option("--count", count, "number of augmentation draws")
        ->check(CLI::PositiveNumber);

    CLI::App* exp = app.add_subcommand("experiment", "run the seeds x n x variants grid");
    exp->add_option("--config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (gen->parsed()) return run_gen_data(config_path);
        if (tr->parsed()) return run_train(config_path, ablate);
        if (ev->parsed()) return run_eval(checkpoint, data_dir);
        if (prev->parsed()) return run_augment_preview(config_path, image_path, count);
        if (exp->parsed()) return run_experiment_cmd(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return kShapeError;
    }
    return kConfigError;
}
