#include "fedsim/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fedsim {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t p = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor shape has negative dimension");
        p *= static_cast<std::size_t>(d);
    }
    return p;
}

bool same_shape(const std::vector<int>& a, const std::vector<int>& b) {
    return a == b;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_product(shape) != data.size()) {
        throw std::invalid_argument("Tensor: shape " + shape_to_string(shape) +
                                    " does not match data length " + std::to_string(data.size()));
    }
}

Tensor Tensor::zeros(std::vector<int> shape) {
    const std::size_t n = shape_product(shape);
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

int Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) {
        throw std::out_of_range("Tensor::dim: axis " + std::to_string(i) + " out of rank " +
                                std::to_string(shape.size()));
    }
    return shape[i];
}

std::size_t Tensor::row_size() const {
    if (shape.empty()) return 0;
    std::size_t p = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) p *= static_cast<std::size_t>(shape[i]);
    return p;
}

Tensor Tensor::slice_row(std::size_t i) const {
    if (shape.empty() || i >= static_cast<std::size_t>(shape[0])) {
        throw std::out_of_range("Tensor::slice_row: row " + std::to_string(i) + " out of range");
    }
    std::vector<int> s = shape;
    s[0] = 1;
    const std::size_t rs = row_size();
    return Tensor(std::move(s), std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(i * rs),
                                                    data.begin() + static_cast<std::ptrdiff_t>((i + 1) * rs)));
}

void Tensor::validate(const std::string& context) const {
    if (shape_product(shape) != data.size()) {
        throw std::logic_error(context + ": tensor shape/data mismatch");
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(context + ": tensor contains non-finite value");
        }
    }
}

}  // namespace fedsim
