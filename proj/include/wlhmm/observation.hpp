#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wlhmm {

/// Zero-based observation symbols drawn from an alphabet of size m.
struct ObservationSequence {
    std::vector<int> obs;
    int m = 0;

    std::size_t size() const { return obs.size(); }
    bool empty() const { return obs.empty(); }
    int operator[](std::size_t i) const { return obs[i]; }

    void check() const
    {
        if (m < 1)
            throw std::invalid_argument("observation alphabet must be nonempty");
        for (int s : obs)
            if (s < 0 || s >= m)
                throw std::out_of_range("observation symbol outside alphabet");
    }
};

}  // namespace wlhmm
