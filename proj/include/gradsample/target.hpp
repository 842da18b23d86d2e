#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gradsample {

// A supervision target: either a class label or a dense regression vector.
struct Target {
    bool is_class = false;
    std::size_t label = 0;
    std::vector<double> values;

    static Target cls(std::size_t label) {
        Target t;
        t.is_class = true;
        t.label = label;
        return t;
    }

    static Target reg(std::span<const double> values) {
        Target t;
        t.values.assign(values.begin(), values.end());
        return t;
    }
};

} // namespace gradsample
