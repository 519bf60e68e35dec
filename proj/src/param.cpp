#include "fedsim/param.hpp"

#include <cmath>
#include <stdexcept>

namespace fedsim {

void ParamLayout::validate() const {
    std::size_t expected = 0;
    for (const auto& seg : segments) {
        if (seg.offset != expected) {
            throw std::logic_error("ParamLayout: segment '" + seg.name + "' at offset " +
                                   std::to_string(seg.offset) + ", expected " + std::to_string(expected));
        }
        expected += seg.size;
    }
    if (expected != total) {
        throw std::logic_error("ParamLayout: segments cover " + std::to_string(expected) +
                               " of " + std::to_string(total) + " values");
    }
}

bool ParamLayout::operator==(const ParamLayout& other) const {
    if (total != other.total || segments.size() != other.segments.size()) return false;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& a = segments[i];
        const auto& b = other.segments[i];
        if (a.name != b.name || a.offset != b.offset || a.size != b.size || a.trainable != b.trainable) {
            return false;
        }
    }
    return true;
}

void require_compatible(const ParamVector& a, const ParamVector& b, const std::string& context) {
    if (a.values.size() != b.values.size()) {
        throw std::invalid_argument(context + ": param vectors of length " +
                                    std::to_string(a.values.size()) + " vs " +
                                    std::to_string(b.values.size()));
    }
    if (a.layout && b.layout && a.layout != b.layout && !(*a.layout == *b.layout)) {
        throw std::invalid_argument(context + ": param vectors have mismatched layouts");
    }
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "add");
    ParamVector out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "sub");
    ParamVector out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    return out;
}

ParamVector scale(const ParamVector& a, double c) {
    ParamVector out = a;
    for (auto& v : out.values) v *= c;
    return out;
}

void axpy(ParamVector& y, double alpha, const ParamVector& x) {
    require_compatible(y, x, "axpy");
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += alpha * x.values[i];
}

double dot(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

double l2_norm(const ParamVector& a) {
    return std::sqrt(dot(a, a));
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
    require_compatible(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    }
    return m;
}

double cosine_similarity(const ParamVector& a, const ParamVector& b, double floor) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na < floor || nb < floor) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace fedsim
