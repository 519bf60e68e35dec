#include "fedsim/dataset.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim::data {

void Dataset::validate() const {
    const std::size_t n = size();
    if (samples.shape.empty() || static_cast<std::size_t>(samples.shape[0]) != n) {
        throw std::logic_error("Dataset: sample count does not match label count");
    }
    if (labels.size() != n) throw std::logic_error("Dataset: labels/true_class size mismatch");
    std::vector<char> seen(n, 0);
    std::size_t covered = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (std::size_t idx : class_index[static_cast<std::size_t>(c)]) {
            if (idx >= n || seen[idx]) throw std::logic_error("Dataset: class_index is not a partition");
            if (true_class[idx] != c) throw std::logic_error("Dataset: class_index inconsistent with true_class");
            seen[idx] = 1;
            ++covered;
        }
    }
    if (covered != n) throw std::logic_error("Dataset: class_index does not cover all samples");
    for (const auto& l : labels) {
        if (l.num_classes() != num_classes) throw std::logic_error("Dataset: label width mismatch");
        l.validate();
    }
}

Dataset make_dataset(Tensor samples, std::vector<int> class_ids, int num_classes) {
    if (num_classes < 2) throw std::invalid_argument("make_dataset: need at least 2 classes");
    const std::size_t n = class_ids.size();
    if (samples.shape.empty() || static_cast<std::size_t>(samples.shape[0]) != n) {
        throw std::invalid_argument("make_dataset: samples/labels count mismatch");
    }
    Dataset ds;
    ds.samples = std::move(samples);
    ds.num_classes = num_classes;
    ds.true_class = std::move(class_ids);
    ds.labels.reserve(n);
    ds.class_index.assign(static_cast<std::size_t>(num_classes), {});
    for (std::size_t i = 0; i < n; ++i) {
        const int c = ds.true_class[i];
        if (c < 0 || c >= num_classes) {
            throw std::invalid_argument("make_dataset: class id " + std::to_string(c) +
                                        " out of range at sample " + std::to_string(i));
        }
        ds.labels.push_back(SoftLabel::hard(c, num_classes));
        ds.class_index[static_cast<std::size_t>(c)].push_back(i);
    }
    return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    const std::size_t rs = ds.samples.row_size();
    std::vector<int> shape = ds.samples.shape;
    shape[0] = static_cast<int>(indices.size());
    Tensor samples = Tensor::zeros(shape);
    std::vector<int> classes(indices.size());
    std::vector<SoftLabel> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size()) throw std::out_of_range("subset: index out of range");
        std::memcpy(samples.row(i), ds.samples.row(src), rs * sizeof(double));
        classes[i] = ds.true_class[src];
        labels[i] = ds.labels[src];
    }
    Dataset out = make_dataset(std::move(samples), std::move(classes), ds.num_classes);
    out.labels = std::move(labels);  // preserve any poisoned labels
    return out;
}

std::vector<std::vector<double>> blob_centers(int num_classes, int dim, const BlobGeometry& geo,
                                              std::uint64_t seed) {
    if (num_classes < 1 || dim < 1) throw std::invalid_argument("blob_centers: counts must be positive");
    Rng rng(mix_seed(seed, 0x63656e74657273ULL));
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes));
    for (auto& c : centers) {
        c.resize(static_cast<std::size_t>(dim));
        double norm = 0.0;
        for (auto& v : c) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;
        for (auto& v : c) v *= geo.radius / norm;
    }
    for (const auto& co : geo.colocate) {
        if (co.cls < 0 || co.cls >= num_classes || co.anchor < 0 || co.anchor >= num_classes) {
            throw std::invalid_argument("blob_centers: colocate class out of range");
        }
        auto& c = centers[static_cast<std::size_t>(co.cls)];
        const auto& a = centers[static_cast<std::size_t>(co.anchor)];
        for (int d = 0; d < dim; ++d) {
            // two-product lerp is exact at closeness 0 and 1
            c[static_cast<std::size_t>(d)] = (1.0 - co.closeness) * c[static_cast<std::size_t>(d)] +
                                             co.closeness * a[static_cast<std::size_t>(d)];
        }
    }
    return centers;
}

namespace {

Dataset blobs_from_centers(const std::vector<std::vector<double>>& centers, int per_class, int dim,
                           double spread, std::uint64_t seed, int skip_per_class) {
    const int num_classes = static_cast<int>(centers.size());
    const std::size_t n = static_cast<std::size_t>(num_classes) * per_class;
    Tensor samples = Tensor::zeros({static_cast<int>(n), dim});
    std::vector<int> classes(n);
    std::size_t row = 0;
    for (int c = 0; c < num_classes; ++c) {
        Rng rng(mix_seed(seed, 0x626c6f62ULL, static_cast<std::uint64_t>(c)));
        // burn the draws belonging to an earlier split from the same stream
        for (int j = 0; j < skip_per_class * dim; ++j) rng.normal();
        for (int j = 0; j < per_class; ++j, ++row) {
            double* x = samples.row(row);
            for (int d = 0; d < dim; ++d) {
                x[d] = centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] +
                       spread * rng.normal();
            }
            classes[row] = c;
        }
    }
    return make_dataset(std::move(samples), std::move(classes), num_classes);
}

}  // namespace

Dataset synth_blobs(int num_classes, int per_class, int dim, double spread, std::uint64_t seed,
                    const BlobGeometry& geo) {
    if (num_classes < 2 || per_class < 1 || dim < 1) {
        throw std::invalid_argument("synth_blobs: counts must be positive (and >= 2 classes)");
    }
    const auto centers = blob_centers(num_classes, dim, geo, seed);
    return blobs_from_centers(centers, per_class, dim, spread, seed, 0);
}

TrainTest synth_blobs_split(int num_classes, int per_class_train, int per_class_test, int dim,
                            double spread, std::uint64_t seed, const BlobGeometry& geo) {
    if (num_classes < 2 || per_class_train < 1 || per_class_test < 1 || dim < 1) {
        throw std::invalid_argument("synth_blobs_split: counts must be positive (and >= 2 classes)");
    }
    const auto centers = blob_centers(num_classes, dim, geo, seed);
    TrainTest tt;
    tt.train = blobs_from_centers(centers, per_class_train, dim, spread, seed, 0);
    tt.test = blobs_from_centers(centers, per_class_test, dim, spread, seed, per_class_train);
    return tt;
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, const char* what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw std::runtime_error(path + ": truncated while reading " + std::string(what));
    }
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open images file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open labels file: " + labels_path);

    const std::uint32_t img_magic = read_be_u32(img, images_path, "magic");
    if (img_magic != 0x00000803u) {
        throw std::runtime_error(images_path + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", img_magic);
            return std::string(buf);
        }() + ", expected 0x00000803");
    }
    const std::uint32_t n_images = read_be_u32(img, images_path, "count");
    const std::uint32_t rows = read_be_u32(img, images_path, "rows");
    const std::uint32_t cols = read_be_u32(img, images_path, "cols");

    const std::uint32_t lab_magic = read_be_u32(lab, labels_path, "magic");
    if (lab_magic != 0x00000801u) {
        throw std::runtime_error(labels_path + ": bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", lab_magic);
            return std::string(buf);
        }() + ", expected 0x00000801");
    }
    const std::uint32_t n_labels = read_be_u32(lab, labels_path, "count");
    if (n_images != n_labels) {
        throw std::runtime_error("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                                 std::to_string(n_labels) + " labels");
    }

    const std::size_t pixels = static_cast<std::size_t>(n_images) * rows * cols;
    std::vector<unsigned char> raw(pixels);
    if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels))) {
        throw std::runtime_error(images_path + ": truncated pixel data");
    }
    std::vector<unsigned char> raw_labels(n_labels);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n_labels))) {
        throw std::runtime_error(labels_path + ": truncated label data");
    }

    Tensor samples = Tensor::zeros({static_cast<int>(n_images), 1, static_cast<int>(rows),
                                    static_cast<int>(cols)});
    for (std::size_t i = 0; i < pixels; ++i) samples.data[i] = static_cast<double>(raw[i]) / 255.0;

    std::vector<int> classes(raw_labels.begin(), raw_labels.end());
    int num_classes = 0;
    for (int c : classes) num_classes = std::max(num_classes, c + 1);
    num_classes = std::max(num_classes, 2);
    return make_dataset(std::move(samples), std::move(classes), num_classes);
}

Dataset subsample_per_class(const Dataset& ds, int per_class, std::uint64_t seed) {
    if (per_class < 1) throw std::invalid_argument("subsample_per_class: per_class must be positive");
    std::vector<std::size_t> keep;
    for (int c = 0; c < ds.num_classes; ++c) {
        const auto& members = ds.class_index[static_cast<std::size_t>(c)];
        Rng rng(mix_seed(seed, 0x737562ULL, static_cast<std::uint64_t>(c)));
        auto picks = rng.sample_without_replacement(members.size(),
                                                    std::min<std::size_t>(members.size(),
                                                                          static_cast<std::size_t>(per_class)));
        for (std::size_t p : picks) keep.push_back(members[p]);
    }
    std::sort(keep.begin(), keep.end());
    return subset(ds, keep);
}

}  // namespace fedsim::data
