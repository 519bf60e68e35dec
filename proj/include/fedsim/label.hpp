#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsim {

/// Probability vector over classes. Hard one-hot labels and crafted soft
/// labels share this representation.
struct SoftLabel {
    std::vector<double> probs;

    SoftLabel() = default;
    explicit SoftLabel(std::vector<double> p) : probs(std::move(p)) {}

    static SoftLabel hard(int cls, int num_classes) {
        if (cls < 0 || cls >= num_classes) {
            throw std::invalid_argument("SoftLabel::hard: class " + std::to_string(cls) +
                                        " out of range for " + std::to_string(num_classes) + " classes");
        }
        SoftLabel l;
        l.probs.assign(static_cast<std::size_t>(num_classes), 0.0);
        l.probs[static_cast<std::size_t>(cls)] = 1.0;
        return l;
    }

    int num_classes() const { return static_cast<int>(probs.size()); }

    int argmax() const {
        return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }

    bool is_hard() const {
        int ones = 0;
        for (double p : probs) {
            if (p == 1.0) ++ones;
            else if (p != 0.0) return false;
        }
        return ones == 1;
    }

    /// Entries in [0,1], sum within 1e-9 of 1.
    void validate() const {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::runtime_error("SoftLabel: entry " + std::to_string(p) + " outside [0, 1]");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::runtime_error("SoftLabel: entries sum to " + std::to_string(sum) + ", expected 1");
        }
    }

    bool operator==(const SoftLabel& other) const { return probs == other.probs; }
};

}  // namespace fedsim
