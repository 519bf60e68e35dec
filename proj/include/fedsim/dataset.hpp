#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/label.hpp"
#include "fedsim/tensor.hpp"

namespace fedsim::data {

/// Samples plus labels. `labels` carries the current training labels and is
/// what attacks mutate; `true_class` is the immutable ground truth used for
/// class grouping, evaluation and the attack-success metric.
struct Dataset {
    Tensor samples;                                      // (n, sample-shape...)
    std::vector<SoftLabel> labels;                       // training labels (initially hard)
    std::vector<int> true_class;                         // ground-truth class ids
    int num_classes = 0;
    std::vector<std::vector<std::size_t>> class_index;   // true class -> sample indices

    std::size_t size() const { return true_class.size(); }
    Tensor sample(std::size_t i) const { return samples.slice_row(i); }
    std::vector<int> sample_shape() const {
        return {samples.shape.begin() + 1, samples.shape.end()};
    }

    /// class_index partitions [0, n) consistently with true_class; labels
    /// are valid probability vectors of the right width.
    void validate() const;
};

Dataset make_dataset(Tensor samples, std::vector<int> class_ids, int num_classes);

/// Restrict to the given sample indices (copies rows).
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Inter-class center geometry for the synthetic generator. Colocation
/// entries pull one class's center toward an anchor class's center, which
/// induces a controllable similarity structure.
struct BlobGeometry {
    double radius = 3.0;
    struct Colocate {
        int cls = 0;
        int anchor = 0;
        double closeness = 0.0;  // 0 = untouched, 1 = exactly on the anchor
    };
    std::vector<Colocate> colocate;
};

/// Class centers are a deterministic function of (num_classes, dim, geometry,
/// seed) so that train/test splits generated from the same seed share them.
std::vector<std::vector<double>> blob_centers(int num_classes, int dim, const BlobGeometry& geo,
                                              std::uint64_t seed);

/// Gaussian cluster per class: per_class points at center + spread * N(0, I).
Dataset synth_blobs(int num_classes, int per_class, int dim, double spread, std::uint64_t seed,
                    const BlobGeometry& geo = {});

struct TrainTest {
    Dataset train;
    Dataset test;
};

/// Train and test splits drawn from the same class centers and RNG streams.
TrainTest synth_blobs_split(int num_classes, int per_class_train, int per_class_test, int dim,
                            double spread, std::uint64_t seed, const BlobGeometry& geo = {});

/// IDX-format loader (big-endian, magic 0x00000803 images / 0x00000801
/// labels). Pixels are scaled to [0,1] by /255; output shape is (n,1,H,W).
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Deterministic per-class subsample; keeps at most per_class samples of
/// each class (useful for desk-scale runs on real data).
Dataset subsample_per_class(const Dataset& ds, int per_class, std::uint64_t seed);

}  // namespace fedsim::data
