#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "remnet/manifest.hpp"
#include "remnet/model.hpp"
#include "remnet/quality.hpp"

namespace remnet {

// Maps a batch of 64×64×3 patches to per-class probability rows [B,n_class].
using PatchPredictor = std::function<Tensor(const Tensor&)>;

// Inference-mode wrapper over a trained model (held by reference; the model
// must outlive the predictor).
PatchPredictor model_predictor(Model& model);

struct ClusterPrediction {
    int label = -1;
    std::vector<double> mean_probs;  // average over the 16 tiled patches
};

// Tiles the cluster into its 16 non-overlapping patches, averages the
// predicted probability vectors, and takes the argmax (ties: lowest index).
ClusterPrediction predict_cluster(const PatchPredictor& predict, const Tensor& cluster,
                                  int patch = 64);

struct PredictionRecord {
    int image_index = -1;
    int true_label = -1;
    int final_label = -1;
    std::vector<int> cluster_labels;
    std::vector<int> vote_tally;                          // per class
    std::vector<std::vector<double>> cluster_mean_probs;  // per used cluster
};

// Majority vote over the given clusters' labels; a tied vote is broken by the
// larger probability mass summed over the tied classes' cluster means, then
// by lowest class index. Rejects an empty cluster list.
PredictionRecord predict_image_clusters(const PatchPredictor& predict,
                                        const std::vector<ClusterRecord>& clusters, int n_class,
                                        int patch = 64);

struct EvalOptions {
    int n_votes = 20;            // clusters per image entering the vote
    int stride = 64;             // cluster-candidate grid stride
    bool worst_quality = false;  // vote over the lowest-quality clusters instead
};

// Votes over the top-quality (or, in worst_quality mode, bottom-quality)
// n_votes clusters of one image.
PredictionRecord predict_image(const PatchPredictor& predict, const ImageU8& img, int n_class,
                               const EvalOptions& opt = {});

// Percentage of records whose final label matches the true label.
double accuracy(const std::vector<PredictionRecord>& records);

// 0.7·unaltered + 0.3·manipulated, both in [0,100].
double weighted_score(double unaltered_accuracy, double manipulated_accuracy);

// counts[true][predicted]
std::vector<std::vector<long>> confusion_matrix(const std::vector<PredictionRecord>& records,
                                                int n_class);

struct EvalResult {
    double accuracy_pct = 0.0;
    std::vector<std::vector<long>> confusion;
    std::vector<PredictionRecord> records;
};

EvalResult evaluate_manifest(const PatchPredictor& predict, const Manifest& m, int n_class,
                             const EvalOptions& opt = {});

// Accuracy as a function of the vote size: one (n_votes, accuracy) pair per
// requested value, reusing each image's extracted clusters across sizes.
std::vector<std::pair<int, double>> voting_sweep(const PatchPredictor& predict, const Manifest& m,
                                                 int n_class, const std::vector<int>& vote_sizes,
                                                 bool worst_quality = false);

// One row per image: index, true and final labels, the vote tally.
void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRecord>& records);

}  // namespace remnet
