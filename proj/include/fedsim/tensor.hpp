#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedsim {

/// Dense row-major tensor of doubles. The first dimension is the batch
/// dimension wherever batches are involved.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int> shape);

    std::size_t size() const { return data.size(); }
    int dim(std::size_t i) const;
    std::size_t rank() const { return shape.size(); }

    /// Number of elements per batch entry (product of shape[1:]).
    std::size_t row_size() const;

    double* row(std::size_t i) { return data.data() + i * row_size(); }
    const double* row(std::size_t i) const { return data.data() + i * row_size(); }

    /// Copy of batch entry i as a batch-of-1 tensor.
    Tensor slice_row(std::size_t i) const;

    /// Throws if product(shape) != data.size() or any entry is non-finite.
    void validate(const std::string& context) const;
};

std::size_t shape_product(const std::vector<int>& shape);
bool same_shape(const std::vector<int>& a, const std::vector<int>& b);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace fedsim
