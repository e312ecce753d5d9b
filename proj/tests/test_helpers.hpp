#pragma once

// Shared fixtures: grids are expensive to build (Bessel evaluations), so the
// test binaries cache them per (n_r, n_phi, r_max, p_max).

#include <map>
#include <memory>
#include <tuple>

#include "rotaprop/polar_grid.hpp"

namespace testutil {

inline const rotaprop::PolarGrid& grid(int n_r, int n_phi, double r_max, double p_max) {
    using Key = std::tuple<int, int, double, double>;
    static std::map<Key, std::unique_ptr<rotaprop::PolarGrid>> cache;
    Key key{n_r, n_phi, r_max, p_max};
    auto it = cache.find(key);
    if (it == cache.end()) {
        auto g = std::make_unique<rotaprop::PolarGrid>(
            rotaprop::make_grid(n_r, n_phi, r_max, p_max));
        it = cache.emplace(key, std::move(g)).first;
    }
    return *it->second;
}

// the workhorse grids
inline const rotaprop::PolarGrid& grid_small() { return grid(64, 16, 9.0, 9.0); }
inline const rotaprop::PolarGrid& grid_sweep() { return grid(72, 32, 10.0, 10.0); }
inline const rotaprop::PolarGrid& grid_fine() { return grid(128, 128, 12.0, 12.0); }

}  // namespace testutil
