#pragma once

#include <limits>
#include <string>
#include <vector>

#include "remnet/manifest.hpp"
#include "remnet/model.hpp"
#include "remnet/quality.hpp"

namespace remnet {

struct TrainConfig {
    int batch_size = 64;
    float lr_init = 1e-3f;
    float lr_decay = 0.5f;
    int plateau_patience = 2;  // epochs without improvement before decaying
    float lr_floor = 1e-7f;    // stop once lr falls below this
    int max_epochs = 50;
    float min_delta = 0.0f;    // required improvement margin
    std::uint64_t seed = 0;

    void validate() const;
};

// Validation-plateau learning-rate schedule. An observation that does not
// improve on the best seen loss (by more than min_delta) extends the plateau
// streak; when the streak reaches `patience` the rate is multiplied by
// `factor` and the streak resets. `observe` returns false once the rate has
// fallen below the floor.
struct PlateauScheduler {
    double lr;
    double factor;
    int patience;
    double floor;
    double min_delta;
    double best = std::numeric_limits<double>::infinity();
    int streak = 0;
    int halvings = 0;
    bool improved_last = false;

    explicit PlateauScheduler(const TrainConfig& cfg)
        : lr(cfg.lr_init), factor(cfg.lr_decay), patience(cfg.plateau_patience),
          floor(cfg.lr_floor), min_delta(cfg.min_delta) {}

    bool observe(double val_loss);
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Cluster corpus with class labels, ready for per-epoch patch sampling.
struct LabeledClusters {
    std::vector<ClusterRecord> clusters;
    int n_class = 0;
};

// Reads every manifest image and extracts its top-quality clusters.
LabeledClusters load_cluster_corpus(const Manifest& m, int clusters_per_image, int stride,
                                    int n_class);

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::string checkpoint_path;
};

// Per epoch: one fresh random patch per training cluster, globally shuffled,
// cross-entropy minimized with Adam; validation on a deterministic center
// crop per cluster in inference mode; the best-validation model is saved to
// <out_dir>/best.ckpt. A non-finite loss aborts with a state dump in
// out_dir. Identical (model seed, config seed, data) reproduce identical
// histories.
TrainResult train_model(Model& model, const LabeledClusters& train, const LabeledClusters& val,
                        const TrainConfig& cfg, const std::string& out_dir);

// One "epoch,lr,train_loss,val_loss" row per epoch.
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace remnet
