#pragma once

#include <vector>

#include "ciatr/configs.hpp"
#include "ciatr/model.hpp"
#include "ciatr/similarity.hpp"
#include "ciatr/synthdata.hpp"
#include "ciatr/types.hpp"

namespace ciatr {

struct LossReport {
    double l_ce = 0.0;
    double l_d = 0.0;
    double total = 0.0;  // l_ce + lambda_d * l_d, exactly
    long num_active_triplets = 0;
};

struct EpochStats {
    int epoch = 0;
    LossReport loss;
    double train_acc = 0.0;
};

struct EvalReport {
    double overall = 0.0;
    std::vector<double> per_class;
    Eigen::MatrixXi confusion;  // rows = true label, cols = prediction
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
};

struct TripletResult {
    double value = 0.0;
    long num_active = 0;
};

/// One fresh hybrid-augmented copy: RST(ifft(RFM(fft(x)))), re-normalized to
/// [0,1]; label and recorded condition carry over.
LabeledImage augment_sample(const LabeledImage& x, SeedStream rng,
                            const AugmentConfig& cfg);

/// The same pipeline with every stage kept, for inspection dumps.
struct AugmentStages {
    Grid original;
    ComplexGrid spectrum;         // fft2(original)
    ComplexGrid masked_spectrum;  // after the random frequency mask
    Grid intermediate;            // real(ifft2(masked_spectrum))
    Grid final;                   // normalized RST output
};
AugmentStages augment_stages(const Grid& image, SeedStream rng, const AugmentConfig& cfg);

/// Interleaves each original with one augmented copy (|out| = 2|in|), seeds
/// derived per (epoch, sample); with cfg.fixed the epoch-0 copies are reused.
/// Disabled augmentation returns the originals unchanged.
std::vector<LabeledImage> build_augmented_set(const std::vector<LabeledImage>& dtr,
                                              int epoch, SeedStream root,
                                              const AugmentConfig& cfg);

/// Mean cross-entropy of softmax(logits) at the true labels, computed with
/// max-subtraction. Optionally emits per-sample d loss / d logits.
double loss_ce(const std::vector<Vec>& logits, const std::vector<int>& labels,
               std::vector<Vec>* d_logits = nullptr);

/// Batch-all triplet loss on the hybrid measurement: mean over active
/// (nonzero) ordered triplets of max(0, margin - hm(a,p) + hm(a,n)).
/// Returns 0 with num_active = 0 when no valid or no active triplet exists.
/// Optionally accumulates d loss / d features per bundle.
TripletResult loss_d(const std::vector<FeatureBundle>& bundles,
                     const std::vector<int>& labels, double margin,
                     std::vector<BundleGrad>* grads = nullptr);

/// Full interventional loop: per epoch rebuild the augmented set, shuffle,
/// and optimize L_ce + lambda_d * L_d with momentum SGD. Deterministic given
/// cfg.seed. Throws NumericError (with epoch/batch diagnostics) on a
/// non-finite loss.
TrainResult train(const std::vector<LabeledImage>& dtr, const TrainConfig& cfg,
                  const AugmentConfig& acfg);

/// Argmax-of-logits classification; ties break toward the lower class index.
EvalReport evaluate(const ModelParams& params, const std::vector<LabeledImage>& test);

}  // namespace ciatr
