#pragma once

// Local relative-boundedness checks for square-supported L^2 potentials:
// the closed-form symbol integral, empirical Kato constants for the linear
// and angular-momentum generators (uniformly over the square center), and
// the checkerboard decomposition with its squared partition of unity.
//
// Everything here lives on a Cartesian grid in local coordinates y = x - xbar
// around the square center; the center enters only through pbar = omega
// xbar^perp (linear generator) and through the absolute coordinates in J.
// The kinetic energy is fixed to |p|^2/2.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rotaprop/cartesian.hpp"
#include "rotaprop/quadrature.hpp"
#include "rotaprop/rng.hpp"

namespace rotaprop {

// ---- smooth cutoffs -----------------------------------------------------------

// C^inf step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

// Radial flat-top bump: 1 for |y| <= r0 (a neighborhood of the unit square),
// 0 for |y| >= r1. C^inf everywhere (all derivatives of the step vanish at
// both ends of the transition). The transition is kept wide: compactly
// supported C^inf bumps have root-exponential Fourier tails, and the product
// aliasing in the spectral operator checks is set by that tail.
inline double chi_bump(double y1, double y2, double r0 = 0.75, double r1 = 1.8) {
    const double r = std::hypot(y1, y2);
    return smooth_step((r1 - r) / (r1 - r0));
}

// 1D plateau bump h(t): 1 on [-c, c], 0 outside [-(c+w), c+w].
inline double plateau_1d(double t, double c = 0.6, double w = 0.6) {
    return smooth_step((c + w - std::abs(t)) / w);
}

// 1D factor of the squared partition of unity: g(t) = h(t)/sqrt(sum_k h(t-2k)^2).
// The denominator is 2-periodic, so sum_{k in 2Z} g(t-2k)^2 = 1 identically;
// chi(x) = g(x1) g(x2) then satisfies the squared decomposition of unity over
// (2Z)^2 shifts. supp g = supp h = [-1.2, 1.2], which exceeds the side-2
// square slightly: the overlap with the neighboring shifts is what makes a
// smooth exact partition possible.
inline double partition_1d(double t) {
    const double h0 = plateau_1d(t);
    if (h0 == 0.0) return 0.0;
    double s = 0.0;
    for (int k = -1; k <= 1; ++k) {
        const double h = plateau_1d(t - 2.0 * k);
        s += h * h;
    }
    return h0 / std::sqrt(s);
}

// ---- symbol integral ------------------------------------------------------------

// Closed form of int dp / ({a[(p-pbar)^2 - |pbar|^2/2]}^2 + 1/a^2) derived by
// polar coordinates around pbar and u = a^2[(p-pbar)^2 - lambda]:
//   pi (pi/2 + arctan(a^2 |pbar|^2 / 2)) <= pi^2.
// The a-dependence enters only through a^2 lambda, so values at (a, pbar) and
// (1, a pbar) coincide; at pbar = 0 the value is pi^2/2 for every a.
inline double symbol_closed_form(double a, double pbar_norm) {
    return pi_v * (0.5 * pi_v + std::atan(a * a * pbar_norm * pbar_norm / 2.0));
}

namespace detail {

template <class F>
double adaptive_panel(const F& f, double lo, double hi, double tol, int depth) {
    // Gauss-Legendre 15 vs 7 as the error estimate; the rounding floor keeps
    // the recursion from splitting forever once the panel is resolved
    static const QuadRule q15 = gauss_legendre(15);
    static const QuadRule q7 = gauss_legendre(7);
    auto eval = [&](const QuadRule& q) {
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double s = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            s += half * q.weights[i] * f(mid + half * q.nodes[i]);
        return s;
    };
    const double a15 = eval(q15), a7 = eval(q7);
    if (std::abs(a15 - a7) < std::max(tol, 1e-14 * std::abs(a15)) || depth > 24)
        return a15;
    const double mid = 0.5 * (lo + hi);
    return adaptive_panel(f, lo, mid, 0.5 * tol, depth + 1) +
           adaptive_panel(f, mid, hi, 0.5 * tol, depth + 1);
}

}  // namespace detail

// 2D quadrature of the symbol integral: polar around pbar (the angular
// integral is exact), adaptive radial panels, analytic tail bound.
inline double symbol_integral(double a, double pbar_norm) {
    if (!(a > 0.0)) throw std::invalid_argument("symbol_integral: a must be > 0");
    const double lam = 0.5 * pbar_norm * pbar_norm;
    auto f = [&](double rho) {
        const double s = rho * rho - lam;
        return 2.0 * pi_v * rho / (a * a * s * s + 1.0 / (a * a));
    };
    // grow the domain until the tail bound int_R^inf 2 pi rho / (a^2 (rho^2-lam)^2)
    // is negligible
    double R = std::max(4.0, 4.0 * std::sqrt(lam) + 4.0 / a);
    double val = 0.0;
    for (int rep = 0; rep < 60; ++rep) {
        val = detail::adaptive_panel(f, 0.0, R, 1e-12, 0);
        const double tail = pi_v / (a * a * (R * R - lam));
        if (tail < 1e-11 * std::max(val, 1.0)) break;
        R *= 2.0;
    }
    return val;
}

// ---- square potentials and empirical Kato constants ------------------------------

struct SquarePotential {
    Eigen::Vector2i center;                          // xbar in Z^2
    std::function<double(double, double)> local;     // V(y) in local coordinates,
                                                     // supported in the unit square
    double l2_norm = 0.0;                            // ||V||_2 on the square

    // V(y) = |y|^{-1/2} on the unit square: in L^2 but unbounded.
    // ||V||_2^2 = int_square |y|^{-1} dy = 4 ln(1 + sqrt(2)).
    static SquarePotential inverse_sqrt(Eigen::Vector2i xbar) {
        SquarePotential s;
        s.center = xbar;
        s.local = [](double y1, double y2) {
            if (std::abs(y1) > 0.5 || std::abs(y2) > 0.5) return 0.0;
            return std::pow(y1 * y1 + y2 * y2, -0.25);
        };
        s.l2_norm = std::sqrt(4.0 * std::log(1.0 + std::sqrt(2.0)));
        return s;
    }

    static SquarePotential bounded_box(Eigen::Vector2i xbar, double height) {
        SquarePotential s;
        s.center = xbar;
        s.local = [height](double y1, double y2) {
            return (std::abs(y1) <= 0.5 && std::abs(y2) <= 0.5) ? height : 0.0;
        };
        s.l2_norm = height;
        return s;
    }
};

// Documented random smooth test states in local coordinates: Gaussian
// envelope (width in [0.35, 0.6]) times a random complex quadratic times a
// random plane wave with |k| <= 3. The width cap keeps the box-edge amplitude
// at rounding level so spectral derivatives see no periodic wraparound.
inline std::vector<CartesianGrid::Cfield> kato_test_states(const CartesianGrid& grid,
                                                           int count,
                                                           std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("kato_test_states: empty test set");
    StateRng rng(seed);
    std::vector<CartesianGrid::Cfield> out;
    out.reserve(count);
    const int n = grid.n();
    for (int s = 0; s < count; ++s) {
        const double sigma = 0.35 + 0.25 * rng.uniform();
        Complex c[6];
        for (auto& cc : c) cc = rng.complex_normal();
        const double k1 = 3.0 * (2.0 * rng.uniform() - 1.0);
        const double k2 = 3.0 * (2.0 * rng.uniform() - 1.0);
        CartesianGrid::Cfield psi(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double y1 = grid.x(i), y2 = grid.x(j);
                const Complex poly = c[0] + c[1] * y1 + c[2] * y2 + c[3] * y1 * y2 +
                                     c[4] * y1 * y1 + c[5] * y2 * y2;
                const double ph = k1 * y1 + k2 * y2;
                psi(i, j) = poly * std::exp(-(y1 * y1 + y2 * y2) / (2 * sigma * sigma)) *
                            Complex(std::cos(ph), std::sin(ph));
            }
        // support must not escape the box (spectral derivatives assume it)
        double edge = 0.0, peak = 0.0;
        for (int i = 0; i < n; ++i) {
            edge = std::max({edge, std::abs(psi(i, 0)), std::abs(psi(i, n - 1)),
                             std::abs(psi(0, i)), std::abs(psi(n - 1, i))});
            peak = std::max(peak, psi.row(i).cwiseAbs().maxCoeff());
        }
        if (edge > 1e-6 * peak)
            throw std::invalid_argument("kato_test_states: state escapes the box");
        out.push_back(std::move(psi));
    }
    return out;
}

struct KatoSampleResult {
    double b_emp = 0.0;       // max over the test set of [ ||V chi psi|| - a ||G chi psi|| ]_+ / ||chi psi||
    double worst_ratio = 0.0; // max of ||V chi psi|| / (a ||G chi psi|| + ||chi psi||)
    double b_proof = 0.0;     // the Fourier-route constant (||V||_2 rho)^2 / (4 pi^2 a)
};

namespace detail {

inline CartesianGrid::Cfield sample_V(const CartesianGrid& grid,
                                      const SquarePotential& sq) {
    const int n = grid.n();
    CartesianGrid::Cfield V(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V(i, j) = sq.local(grid.x(i), grid.x(j));
    return V;
}

inline CartesianGrid::Cfield sample_chi(const CartesianGrid& grid) {
    const int n = grid.n();
    CartesianGrid::Cfield chi(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) chi(i, j) = chi_bump(grid.x(i), grid.x(j));
    return chi;
}

}  // namespace detail

// || V chi psi || <= a || (H0 - omega xbar^perp . p) chi psi || + b || chi psi ||:
// the empirical b over the test set. The generator acts in local coordinates
// as the Fourier multiplier |k|^2/2 - pbar . k with pbar = omega xbar^perp.
inline KatoSampleResult kato_bound_sample(const SquarePotential& sq, double a,
                                          double omega,
                                          const std::vector<CartesianGrid::Cfield>& states,
                                          const CartesianGrid& grid) {
    if (!(a > 0.0)) throw std::invalid_argument("kato_bound_sample: a must be > 0");
    if (states.empty()) throw std::invalid_argument("kato_bound_sample: empty test set");
    const double pb1 = -omega * sq.center[1];
    const double pb2 = omega * sq.center[0];

    CartesianGrid::Cfield V = detail::sample_V(grid, sq);
    CartesianGrid::Cfield chi = detail::sample_chi(grid);

    KatoSampleResult res;
    const double pbn = std::hypot(pb1, pb2);
    const double rho2 = symbol_closed_form(a, pbn);
    res.b_proof = sq.l2_norm * sq.l2_norm * rho2 / (4.0 * pi_v * pi_v * a);
    for (const auto& psi : states) {
        CartesianGrid::Cfield cp = chi.cwiseProduct(psi);
        CartesianGrid::Cfield Hcp = grid.apply_symbol(cp, [&](double kx, double ky) {
            return Complex(0.5 * (kx * kx + ky * ky) - (pb1 * kx + pb2 * ky), 0.0);
        });
        const double vterm = grid.nrm(V.cwiseProduct(cp));
        const double hterm = grid.nrm(Hcp);
        const double cterm = grid.nrm(cp);
        if (cterm == 0.0) continue;
        res.b_emp = std::max(res.b_emp, std::max(0.0, vterm - a * hterm) / cterm);
        res.worst_ratio = std::max(res.worst_ratio, vterm / (a * hterm + cterm));
    }
    return res;
}

// Same with H0 - omega J; J = x1 p2 - x2 p1 in absolute coordinates
// x = xbar + y.
inline KatoSampleResult kato_bound_J_sample(const SquarePotential& sq, double a,
                                            double omega,
                                            const std::vector<CartesianGrid::Cfield>& states,
                                            const CartesianGrid& grid) {
    if (!(a > 0.0)) throw std::invalid_argument("kato_bound_J_sample: a must be > 0");
    if (states.empty())
        throw std::invalid_argument("kato_bound_J_sample: empty test set");
    CartesianGrid::Cfield V = detail::sample_V(grid, sq);
    CartesianGrid::Cfield chi = detail::sample_chi(grid);
    const int n = grid.n();

    KatoSampleResult res;
    const double pbn = omega * std::hypot(double(sq.center[0]), double(sq.center[1]));
    res.b_proof =
        sq.l2_norm * sq.l2_norm * symbol_closed_form(a, pbn) / (4.0 * pi_v * pi_v * a);
    for (const auto& psi : states) {
        CartesianGrid::Cfield cp = chi.cwiseProduct(psi);
        CartesianGrid::Cfield p1 = grid.apply_symbol(
            cp, [](double kx, double) { return Complex(kx, 0.0); });
        CartesianGrid::Cfield p2 = grid.apply_symbol(
            cp, [](double, double ky) { return Complex(ky, 0.0); });
        CartesianGrid::Cfield H0cp = grid.apply_symbol(cp, [](double kx, double ky) {
            return Complex(0.5 * (kx * kx + ky * ky), 0.0);
        });
        CartesianGrid::Cfield G(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double x1 = sq.center[0] + grid.x(i);
                const double x2 = sq.center[1] + grid.x(j);
                G(i, j) = H0cp(i, j) - omega * (x1 * p2(i, j) - x2 * p1(i, j));
            }
        const double vterm = grid.nrm(V.cwiseProduct(cp));
        const double hterm = grid.nrm(G);
        const double cterm = grid.nrm(cp);
        if (cterm == 0.0) continue;
        res.b_emp = std::max(res.b_emp, std::max(0.0, vterm - a * hterm) / cterm);
        res.worst_ratio = std::max(res.worst_ratio, vterm / (a * hterm + cterm));
    }
    return res;
}

// (J - xbar^perp . p) chi = -i (y^perp . grad chi) + chi y^perp . p as
// operators on smooth states; returns the worst relative mismatch of the two
// sides over the supplied states (spectral derivatives on both).
inline double J_identity_residual(const Eigen::Vector2i& xbar,
                                  const std::vector<CartesianGrid::Cfield>& states,
                                  const CartesianGrid& grid) {
    CartesianGrid::Cfield chi = detail::sample_chi(grid);
    const int n = grid.n();
    CartesianGrid::Cfield dchi1 = grid.dx(chi), dchi2 = grid.dy(chi);
    double worst = 0.0;
    for (const auto& psi : states) {
        CartesianGrid::Cfield cp = chi.cwiseProduct(psi);
        CartesianGrid::Cfield p1cp = grid.apply_symbol(
            cp, [](double kx, double) { return Complex(kx, 0.0); });
        CartesianGrid::Cfield p2cp = grid.apply_symbol(
            cp, [](double, double ky) { return Complex(ky, 0.0); });
        CartesianGrid::Cfield p1psi = grid.apply_symbol(
            psi, [](double kx, double) { return Complex(kx, 0.0); });
        CartesianGrid::Cfield p2psi = grid.apply_symbol(
            psi, [](double, double ky) { return Complex(ky, 0.0); });

        CartesianGrid::Cfield lhs(n, n), rhs(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double y1 = grid.x(i), y2 = grid.x(j);
                const double x1 = xbar[0] + y1, x2 = xbar[1] + y2;
                // J(chi psi) - xbar^perp.p (chi psi); xbar^perp = (-x2bar, x1bar)
                lhs(i, j) = (x1 * p2cp(i, j) - x2 * p1cp(i, j)) -
                            (-double(xbar[1]) * p1cp(i, j) +
                             double(xbar[0]) * p2cp(i, j));
                // -i (y^perp . grad chi) psi + chi (y^perp . p psi)
                const Complex grad_term =
                    Complex(0.0, -1.0) *
                    (-y2 * dchi1(i, j) + y1 * dchi2(i, j)) * psi(i, j);
                rhs(i, j) = grad_term +
                            chi(i, j) * (-y2 * p1psi(i, j) + y1 * p2psi(i, j));
            }
        const double scale = grid.nrm(lhs) + grid.nrm(rhs);
        if (scale == 0.0) continue;
        CartesianGrid::Cfield diff = lhs - rhs;
        worst = std::max(worst, grid.nrm(diff) / scale);
    }
    return worst;
}

// ---- checkerboard decomposition ---------------------------------------------------

struct Checkerboard {
    // component index by parity of the supporting square center:
    // 0: (even, even), 1: (odd, odd), 2: (even, odd), 3: (odd, even)
    std::array<Eigen::MatrixXd, 4> parts;
    Eigen::MatrixXd total;
    int nx = 0, ny = 0;        // box spans nx x ny unit squares
    int samples_per_unit = 0;  // samples per unit length
    double x0 = 0.0, y0 = 0.0; // box corner (integer+half offsets align squares)
};

// Split V sampled on a box aligned with unit squares (corner at half-integer
// coordinates so squares centered at integer points tile it exactly).
inline Checkerboard checkerboard(const std::function<double(double, double)>& V,
                                 int nx, int ny, int samples_per_unit) {
    if (nx < 1 || ny < 1 || samples_per_unit < 2)
        throw std::invalid_argument("checkerboard: bad box");
    Checkerboard cb;
    cb.nx = nx;
    cb.ny = ny;
    cb.samples_per_unit = samples_per_unit;
    cb.x0 = -0.5;
    cb.y0 = -0.5;
    const int N1 = nx * samples_per_unit, N2 = ny * samples_per_unit;
    const double h = 1.0 / samples_per_unit;
    cb.total.setZero(N1, N2);
    for (auto& p : cb.parts) p.setZero(N1, N2);
    for (int i = 0; i < N1; ++i)
        for (int j = 0; j < N2; ++j) {
            const double x = cb.x0 + (i + 0.5) * h;
            const double y = cb.y0 + (j + 0.5) * h;
            const double v = V(x, y);
            cb.total(i, j) = v;
            const long cx = std::lround(x), cy = std::lround(y);
            const int par = (cx % 2 == 0 ? 0 : 1) * 1 + (cy % 2 == 0 ? 0 : 2);
            // map (even,even)->0, (odd,even)->3, (even,odd)->2, (odd,odd)->1
            int idx;
            switch (par) {
                case 0: idx = 0; break;
                case 1: idx = 3; break;
                case 2: idx = 2; break;
                default: idx = 1; break;
            }
            cb.parts[idx](i, j) = v;
        }
    return cb;
}

// Max |sum_{xbar in (2Z)^2} chi(.-xbar)^2 - 1| over the box interior with
// chi(x) = g(x1) g(x2); the shift sum factorizes per axis.
inline double partition_residual(int nx, int ny, int samples_per_unit) {
    auto axis_sum = [](double t) {
        const double c0 = 2.0 * std::floor(t / 2.0 + 0.5);
        double s = 0.0;
        for (int k = -2; k <= 2; ++k) {
            const double gk = partition_1d(t - c0 - 2.0 * k);
            s += gk * gk;
        }
        return s;
    };
    double worst = 0.0;
    const double h = 1.0 / samples_per_unit;
    for (int i = 0; i < nx * samples_per_unit; ++i) {
        const double x = -0.5 + (i + 0.5) * h;
        for (int j = 0; j < ny * samples_per_unit; ++j) {
            const double y = -0.5 + (j + 0.5) * h;
            worst = std::max(worst, std::abs(axis_sum(x) * axis_sum(y) - 1.0));
        }
    }
    return worst;
}

}  // namespace rotaprop
