#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/model.hpp"
#include "ciatr/synthdata.hpp"
#include "ciatr/training.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

/// 8-bit binary PGM: "P5\n<w> <h>\n255\n" + row-major bytes, one byte per
/// pixel with q = round(255 * v) for v in [0,1].
void write_pgm(const std::filesystem::path& path, const Grid& normalized);
Grid read_pgm(const std::filesystem::path& path);  // values in [0,1]

/// Checkpoint layout (little-endian):
///   bytes 0..7   magic "CIATRCP1"
///   7 x u32      version=1, input_h, input_w, num_classes, conv1_out,
///                conv2_out, kernel
///   f64 payload  conv1_w (row-major), conv1_b, conv2_w (row-major), conv2_b,
///                lin_w (row-major), lin_b
/// Round trips are bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// On-disk dataset layout: <root>/<split>/<class_id>/<index>.pgm plus
/// <root>/manifest.jsonl with one record per image:
/// {path, label, azimuth_deg, background_level, speckle_scale, bucket}.
void write_dataset(const std::filesystem::path& root, const Dataset& ds,
                   const ConfoundConfig& cfg);

/// Loads one split back; images arrive min-max normalized to [0,1] through
/// the PGM quantization.
std::vector<LabeledImage> load_split(const std::filesystem::path& root,
                                     const std::string& split);

std::string metrics_jsonl(const std::vector<EpochStats>& history);
std::string eval_report_json(const EvalReport& report);
std::string confusion_csv(const EvalReport& report);

/// Parses the overall accuracy back out of an eval_report_json file.
double read_eval_accuracy(const std::filesystem::path& path);

}  // namespace ciatr
