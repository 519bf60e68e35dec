#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace fedsim {

/// One contiguous parameter block (e.g. a dense layer's weight matrix).
/// Non-trainable blocks (batch-norm running statistics) still live in the
/// flat vector so they travel with client/server exchanges, but gradients
/// for them are always zero.
struct ParamSegment {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool trainable = true;
};

struct ParamLayout {
    std::vector<ParamSegment> segments;
    std::size_t total = 0;

    /// Offsets must be contiguous, non-overlapping and cover [0, total).
    void validate() const;
    bool operator==(const ParamLayout& other) const;
};

/// Flattened view of all model parameters; the unit of client<->server
/// exchange and of all aggregation arithmetic. The layout is shared with
/// the architecture that produced it (may be null for free-standing
/// vectors in aggregation math).
struct ParamVector {
    std::vector<double> values;
    std::shared_ptr<const ParamLayout> layout;

    ParamVector() = default;
    explicit ParamVector(std::vector<double> v, std::shared_ptr<const ParamLayout> l = nullptr)
        : values(std::move(v)), layout(std::move(l)) {}

    static ParamVector zeros_like(const ParamVector& other) {
        ParamVector p;
        p.values.assign(other.values.size(), 0.0);
        p.layout = other.layout;
        return p;
    }

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Throws when two vectors cannot participate in the same arithmetic
/// (different lengths, or both carry layouts that disagree).
void require_compatible(const ParamVector& a, const ParamVector& b, const std::string& context);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);
ParamVector scale(const ParamVector& a, double c);
void axpy(ParamVector& y, double alpha, const ParamVector& x);  // y += alpha * x
double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& a);
double max_abs_diff(const ParamVector& a, const ParamVector& b);

/// Cosine similarity; returns 0 when either vector has norm below `floor`.
double cosine_similarity(const ParamVector& a, const ParamVector& b, double floor = 1e-12);

}  // namespace fedsim
