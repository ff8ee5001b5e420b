#include "ciatr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "ciatr/io.hpp"
#include "ciatr/training.hpp"

namespace ciatr {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

/// First n manifest entries of each class, preserving manifest order.
std::vector<LabeledImage> take_per_class(const std::vector<LabeledImage>& items, int n,
                                         int num_classes) {
    std::vector<int> taken(num_classes, 0);
    std::vector<LabeledImage> out;
    for (const LabeledImage& item : items) {
        if (item.label < num_classes && taken[item.label] < n) {
            ++taken[item.label];
            out.push_back(item);
        }
    }
    return out;
}

}  // namespace

int experiment_threads() {
    const char* env = std::getenv("CIATR_THREADS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n > 1 ? n : 1;
}

fs::path cell_dir(const fs::path& out_dir, const std::string& variant, int n,
                  std::uint64_t seed) {
    std::ostringstream name;
    name << variant << "_n" << n << "_seed" << seed;
    return out_dir / "cells" / name.str();
}

ExperimentResult run_experiment(const RunConfig& cfg) {
    const fs::path out_dir = cfg.out_dir;
    fs::create_directories(out_dir / "cells");

    const int n_max =
        *std::max_element(cfg.experiment_n_values.begin(), cfg.experiment_n_values.end());

    // Datasets first (sequential): one per seed, reused by every cell.
    std::map<std::uint64_t, fs::path> dataset_dirs;
    for (std::uint64_t seed : cfg.experiment_seeds) {
        const fs::path dir = out_dir / "datasets" / ("seed" + std::to_string(seed));
        dataset_dirs[seed] = dir;
        if (fs::exists(dir / "manifest.jsonl")) continue;
        ConfoundConfig dcfg = cfg.data;
        dcfg.n_per_class = n_max;
        write_dataset(dir, gen_dataset(dcfg, SeedStream{seed, 0}), dcfg);
    }

    // grid in deterministic order: variants x n x seeds
    struct Cell {
        std::string variant;
        int n;
        std::uint64_t seed;
    };
    std::vector<Cell> grid;
    for (const std::string& variant : cfg.experiment_variants) {
        for (int n : cfg.experiment_n_values) {
            for (std::uint64_t seed : cfg.experiment_seeds) {
                grid.push_back({variant, n, seed});
            }
        }
    }

    std::vector<CellResult> results(grid.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run_cells = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= grid.size()) return;
            const Cell& cell = grid[k];
            const fs::path dir = cell_dir(out_dir, cell.variant, cell.n, cell.seed);
            CellResult& res = results[k];
            res.variant = cell.variant;
            res.n = cell.n;
            res.seed = cell.seed;
            if (fs::exists(dir / "done")) {
                res.accuracy = read_eval_accuracy(dir / "eval.json");
                res.skipped = true;
                continue;
            }
            fs::create_directories(dir);

            const fs::path data_dir = dataset_dirs.at(cell.seed);
            const std::vector<LabeledImage> pool = load_split(data_dir, "train");
            const std::vector<LabeledImage> dtr =
                take_per_class(pool, cell.n, cfg.data.num_classes);
            const std::vector<LabeledImage> dte = load_split(data_dir, "test");

            TrainConfig tcfg = cfg.train;
            tcfg.seed = cell.seed;
            apply_variant(tcfg, cell.variant);

            const TrainResult trained = train(dtr, tcfg, cfg.augment);
            const EvalReport report = evaluate(trained.params, dte);

            save_checkpoint(dir / "checkpoint.bin", trained.params);
            std::ofstream(dir / "metrics.jsonl", std::ios::binary)
                << metrics_jsonl(trained.history);
            std::ofstream(dir / "eval.json", std::ios::binary) << eval_report_json(report);
            std::ofstream(dir / "done", std::ios::binary) << "ok\n";
            res.accuracy = report.overall;
        }
    };
    auto worker = [&]() {
        try {
            run_cells();
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next.store(grid.size());  // drain the queue so peers stop
        }
    };

    const int threads = std::min<int>(experiment_threads(), static_cast<int>(grid.size()));
    if (threads > 1) {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    } else {
        worker();
    }
    if (first_error) std::rethrow_exception(first_error);

    // per-cell summary
    std::ostringstream summary;
    summary << "variant,n,seed,accuracy\n";
    for (const CellResult& r : results) {
        summary << r.variant << "," << r.n << "," << r.seed << ","
                << format_double(r.accuracy) << "\n";
    }
    std::ofstream(out_dir / "summary.csv", std::ios::binary) << summary.str();

    // mean/std per (variant, n) over seeds
    std::ostringstream agg;
    agg << "variant,n,mean_accuracy,std_accuracy,num_seeds\n";
    for (const std::string& variant : cfg.experiment_variants) {
        for (int n : cfg.experiment_n_values) {
            double sum = 0.0;
            long count = 0;
            for (const CellResult& r : results) {
                if (r.variant == variant && r.n == n) {
                    sum += r.accuracy;
                    ++count;
                }
            }
            const double mean = sum / static_cast<double>(count);
            double sq = 0.0;
            for (const CellResult& r : results) {
                if (r.variant == variant && r.n == n) {
                    sq += (r.accuracy - mean) * (r.accuracy - mean);
                }
            }
            agg << variant << "," << n << "," << format_double(mean) << ","
                << format_double(std::sqrt(sq / static_cast<double>(count))) << "," << count
                << "\n";
        }
    }
    std::ofstream(out_dir / "aggregates.csv", std::ios::binary) << agg.str();

    ExperimentResult out;
    out.cells = std::move(results);
    return out;
}

}  // namespace ciatr
