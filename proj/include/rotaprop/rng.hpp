#pragma once

// Reproducible random test states. The construction is pinned so any
// implementation can regenerate the states from the seed alone:
//
//  * generator: std::mt19937_64 seeded directly with the 64-bit seed;
//  * uniforms:  u = (next() >> 11) * 2^-53 in [0,1);
//  * normals:   Box-Muller on consecutive uniforms,
//               n1 = sqrt(-2 ln(1-u1)) cos(2 pi u2),
//               n2 = sqrt(-2 ln(1-u1)) sin(2 pi u2);
//  * state:     psi_m(r) = c_m r^{|m|} e^{-r^2/(2 sigma^2)}, m = -m_max..m_max
//               in ascending order, c_m = (n1 + i n2) / sqrt(2) drawn in the
//               same order, then normalized to unit L2 norm.
//
// The r^{|m|} factor keeps every mode profile analytic at the origin and the
// Gaussian envelope keeps the state band-limited on sane grids.

#include <cmath>
#include <cstdint>
#include <random>

#include "rotaprop/field.hpp"

namespace rotaprop {

class StateRng {
  public:
    explicit StateRng(std::uint64_t seed) : gen_(seed), have_spare_(false) {}

    double uniform() {
        return double(gen_() >> 11) * (1.0 / 9007199254740992.0);  // 2^-53
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(1.0 - u1));
        spare_ = rad * std::sin(2.0 * pi_v * u2);
        have_spare_ = true;
        return rad * std::cos(2.0 * pi_v * u2);
    }

    Complex complex_normal() {
        const double re = normal(), im = normal();
        return Complex(re, im) / std::sqrt(2.0);
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_;
    double spare_ = 0.0;
};

// Gaussian radial profile times a random band-limited angular polynomial.
inline Field random_band_limited(const PolarGrid& g, int m_max, double sigma,
                                 StateRng& rng) {
    if (m_max < 0 || m_max > g.max_mode)
        throw std::invalid_argument("random_band_limited: bad m_max");
    Field f(g, Repr::Modes);
    for (int m = -m_max; m <= m_max; ++m) {
        const Complex c = rng.complex_normal();
        for (int i = 0; i < g.n_r; ++i) {
            const double r = g.r_nodes[i];
            f.data(i, g.mode_col(m)) =
                c * std::pow(r, std::abs(m)) * std::exp(-r * r / (2.0 * sigma * sigma));
        }
    }
    const double n = norm(f);
    if (n > 0.0) f.data /= n;
    return f;
}

// Unit-norm Gaussian concentrated in the single J-eigenspace of eigenvalue ell.
inline Field mode_gaussian(const PolarGrid& g, int ell, double sigma) {
    Field f = field_single_mode(g, ell, [&](double r) {
        return Complex(std::pow(r, std::abs(ell)) *
                           std::exp(-r * r / (2.0 * sigma * sigma)),
                       0.0);
    });
    f.data /= norm(f);
    return f;
}

}  // namespace rotaprop
