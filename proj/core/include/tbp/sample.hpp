#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tbp {

// One supervised sequence: `steps` feature vectors of width `dim`, flattened
// row-major, with a scalar regression target.
struct SequenceSample {
    std::size_t steps = 0;
    std::size_t dim = 0;
    std::vector<double> inputs;  // steps * dim
    double target = 0.0;

    std::span<const double> step(std::size_t t) const {
        return {inputs.data() + t * dim, dim};
    }
};

}  // namespace tbp
