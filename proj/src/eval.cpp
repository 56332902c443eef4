#include "remnet/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include "remnet/image.hpp"

namespace remnet {

PatchPredictor model_predictor(Model& model) {
    Model* m = &model;
    return [m](const Tensor& patches) {
        Tensor probs = m->forward_probs(patches);
        m->release_graphs();
        return probs;
    };
}

ClusterPrediction predict_cluster(const PatchPredictor& predict, const Tensor& cluster,
                                  int patch) {
    std::vector<Tensor> tiles = non_overlapping_patches(cluster, patch);
    const int n = static_cast<int>(tiles.size());
    Tensor batch({n, patch, patch, 3});
    for (int i = 0; i < n; ++i) {
        std::copy(tiles[static_cast<std::size_t>(i)].data.begin(),
                  tiles[static_cast<std::size_t>(i)].data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(i) * patch * patch * 3);
    }
    Tensor probs = predict(batch);
    if (probs.shape.size() != 2 || probs.shape[0] != n) {
        throw ShapeError("patch predictor returned shape " + shape_str(probs.shape) +
                         ", expected [" + std::to_string(n) + ",n_class]");
    }
    const int n_class = probs.shape[1];
    ClusterPrediction out;
    out.mean_probs.assign(static_cast<std::size_t>(n_class), 0.0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < n_class; ++c)
            out.mean_probs[static_cast<std::size_t>(c)] +=
                static_cast<double>(probs.data[static_cast<std::size_t>(i * n_class + c)]);
    for (double& v : out.mean_probs) v /= static_cast<double>(n);
    out.label = 0;
    for (int c = 1; c < n_class; ++c)
        if (out.mean_probs[static_cast<std::size_t>(c)] >
            out.mean_probs[static_cast<std::size_t>(out.label)])
            out.label = c;
    return out;
}

PredictionRecord predict_image_clusters(const PatchPredictor& predict,
                                        const std::vector<ClusterRecord>& clusters, int n_class,
                                        int patch) {
    if (clusters.empty()) throw ValueError("cannot predict an image with zero clusters");
    if (n_class < 2) throw ValueError("n_class must be >= 2");
    PredictionRecord rec;
    rec.vote_tally.assign(static_cast<std::size_t>(n_class), 0);
    for (const ClusterRecord& c : clusters) {
        ClusterPrediction cp = predict_cluster(predict, c.to_float(), patch);
        if (static_cast<int>(cp.mean_probs.size()) != n_class)
            throw ShapeError("predictor produced " + std::to_string(cp.mean_probs.size()) +
                             " classes, expected " + std::to_string(n_class));
        rec.cluster_labels.push_back(cp.label);
        rec.cluster_mean_probs.push_back(std::move(cp.mean_probs));
        rec.vote_tally[static_cast<std::size_t>(cp.label)] += 1;
    }
    const int top = *std::max_element(rec.vote_tally.begin(), rec.vote_tally.end());
    std::vector<int> tied;
    for (int c = 0; c < n_class; ++c)
        if (rec.vote_tally[static_cast<std::size_t>(c)] == top) tied.push_back(c);
    if (tied.size() == 1) {
        rec.final_label = tied[0];
    } else {
        double best_mass = -std::numeric_limits<double>::infinity();
        rec.final_label = tied[0];
        for (int c : tied) {
            double mass = 0.0;
            for (const std::vector<double>& mp : rec.cluster_mean_probs)
                mass += mp[static_cast<std::size_t>(c)];
            if (mass > best_mass) {
                best_mass = mass;
                rec.final_label = c;
            }
        }
    }
    return rec;
}

PredictionRecord predict_image(const PatchPredictor& predict, const ImageU8& img, int n_class,
                               const EvalOptions& opt) {
    if (opt.n_votes < 1) throw ValueError("n_votes must be >= 1");
    std::vector<ClusterRecord> clusters;
    if (opt.worst_quality) {
        // Extract every candidate window, then keep the lowest-quality ones.
        clusters = extract_top_clusters(img, std::numeric_limits<int>::max() / 2, opt.stride);
        if (static_cast<int>(clusters.size()) > opt.n_votes) {
            clusters.erase(clusters.begin(),
                           clusters.end() - static_cast<std::ptrdiff_t>(opt.n_votes));
        }
    } else {
        clusters = extract_top_clusters(img, opt.n_votes, opt.stride);
    }
    return predict_image_clusters(predict, clusters, n_class);
}

double accuracy(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ValueError("accuracy of an empty record set is undefined");
    long correct = 0;
    for (const PredictionRecord& r : records) {
        if (r.true_label < 0) throw ValueError("record is missing its true label");
        if (r.final_label == r.true_label) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

double weighted_score(double unaltered_accuracy, double manipulated_accuracy) {
    if (unaltered_accuracy < 0.0 || unaltered_accuracy > 100.0 || manipulated_accuracy < 0.0 ||
        manipulated_accuracy > 100.0) {
        throw ValueError("accuracies must lie in [0,100]");
    }
    return 0.7 * unaltered_accuracy + 0.3 * manipulated_accuracy;
}

std::vector<std::vector<long>> confusion_matrix(const std::vector<PredictionRecord>& records,
                                                int n_class) {
    if (n_class < 2) throw ValueError("n_class must be >= 2");
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(n_class),
                                          std::vector<long>(static_cast<std::size_t>(n_class), 0));
    for (const PredictionRecord& r : records) {
        if (r.true_label < 0 || r.true_label >= n_class || r.final_label < 0 ||
            r.final_label >= n_class) {
            throw ValueError("confusion_matrix: label out of range");
        }
        counts[static_cast<std::size_t>(r.true_label)][static_cast<std::size_t>(r.final_label)]++;
    }
    return counts;
}

EvalResult evaluate_manifest(const PatchPredictor& predict, const Manifest& m, int n_class,
                             const EvalOptions& opt) {
    if (m.records.empty()) throw ValueError("manifest has no images to evaluate");
    EvalResult out;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const ImageRecord& ir = m.records[i];
        ImageU8 img = read_ppm(ir.path);
        PredictionRecord rec = predict_image(predict, img, n_class, opt);
        rec.image_index = static_cast<int>(i);
        rec.true_label = ir.model_label;
        out.records.push_back(std::move(rec));
    }
    out.accuracy_pct = accuracy(out.records);
    out.confusion = confusion_matrix(out.records, n_class);
    return out;
}

std::vector<std::pair<int, double>> voting_sweep(const PatchPredictor& predict, const Manifest& m,
                                                 int n_class, const std::vector<int>& vote_sizes,
                                                 bool worst_quality) {
    if (vote_sizes.empty()) throw ValueError("voting_sweep needs at least one vote size");
    for (int n : vote_sizes)
        if (n < 1) throw ValueError("vote sizes must be >= 1");
    if (m.records.empty()) throw ValueError("manifest has no images to evaluate");

    // Extract each image's full candidate list once; reuse across vote sizes.
    std::vector<std::vector<ClusterRecord>> per_image;
    for (const ImageRecord& ir : m.records) {
        ImageU8 img = read_ppm(ir.path);
        per_image.push_back(extract_top_clusters(img, std::numeric_limits<int>::max() / 2));
    }

    std::vector<std::pair<int, double>> out;
    for (int n : vote_sizes) {
        std::vector<PredictionRecord> records;
        for (std::size_t i = 0; i < m.records.size(); ++i) {
            std::vector<ClusterRecord> subset = per_image[i];
            if (worst_quality) {
                if (static_cast<int>(subset.size()) > n)
                    subset.erase(subset.begin(), subset.end() - static_cast<std::ptrdiff_t>(n));
            } else if (static_cast<int>(subset.size()) > n) {
                subset.resize(static_cast<std::size_t>(n));
            }
            PredictionRecord rec = predict_image_clusters(predict, subset, n_class);
            rec.image_index = static_cast<int>(i);
            rec.true_label = m.records[i].model_label;
            records.push_back(std::move(rec));
        }
        out.emplace_back(n, accuracy(records));
    }
    return out;
}

void write_predictions_csv(const std::string& path,
                           const std::vector<PredictionRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open predictions file for writing: " + path);
    f << "image_index,true_label,final_label,vote_tally\n";
    for (const PredictionRecord& r : records) {
        f << r.image_index << ',' << r.true_label << ',' << r.final_label << ',';
        for (std::size_t c = 0; c < r.vote_tally.size(); ++c) {
            if (c) f << '|';
            f << r.vote_tally[c];
        }
        f << '\n';
    }
    if (!f) throw IoError("failed writing predictions file: " + path);
}

}  // namespace remnet
