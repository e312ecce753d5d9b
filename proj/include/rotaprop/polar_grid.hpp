#pragma once

// Shared polar discretization. One Gauss-Legendre radial grid on (0, r_max]
// for every angular mode, a uniform angular grid, and a Gauss-Legendre
// momentum-radial grid on (0, p_max]. Per-order dense Hankel matrices with
// the quadrature weights baked in realize the radial part of the 2D Fourier
// transform; the angular DFT pair is exact to rounding.
//
// Conventions fixed here and used everywhere:
//  * position samples psi(r_i, phi_k), angular modes psi_m(r_i) with
//    psi(r,phi) = sum_m psi_m(r) e^{i m phi}, m = -M..M, M = n_phi/2 - 1
//    (the angular Nyquist mode is not retained);
//  * momentum modes chi_m(p_a) with the (-i)^|m| phase convention,
//    chi_m = (-i)^|m| H_|m|[psi_m], psi_m = (+i)^|m| H_|m|[chi_m],
//    where H_m is the order-m Hankel transform;
//  * quadrature weights carry the full area measure (r dr dphi), so
//    ||psi||^2 = sum_{i,k} (w_i/n_phi) |psi(r_i,phi_k)|^2
//              = sum_{i,m} w_i |psi_m(r_i)|^2 = sum_{a,m} wp_a |chi_m(p_a)|^2.
//
// Stability note: the weight-normalized Hankel matrices are contractions
// (largest singular value <= 1 + O(1e-13)) once n_r exceeds roughly
// 2*r_max*p_max/pi. Below that the discrete pair amplifies unresolved
// content and long split-step evolutions blow up. make_grid records the
// measured gain; experiment drivers check it before propagating.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rotaprop/quadrature.hpp"

namespace rotaprop {

using Complex = std::complex<double>;

inline constexpr double pi_v = 3.14159265358979323846;

// i^k and (-i)^k for integer k >= 0
inline Complex ipow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}
inline Complex mipow(int k) { return std::conj(ipow(k)); }

struct HankelPlan {
    // forward[m]: chi(p_a) = sum_i J_m(p_a r_i) r_i wgl_i f(r_i)   (without the i-phase)
    // backward[m]: f(r_i) = sum_a J_m(p_a r_i) p_a wgl_a chi(p_a)
    std::vector<Eigen::MatrixXd> forward;
    std::vector<Eigen::MatrixXd> backward;
    double gain = 0.0;  // max over orders of the largest singular value of the
                        // weight-normalized transform; <= 1 + eps on stable grids
};

class PolarGrid {
  public:
    int n_r = 0;
    int n_phi = 0;
    int max_mode = 0;  // M = n_phi/2 - 1
    double r_max = 0.0;
    double p_max = 0.0;

    Eigen::VectorXd r_nodes, r_weights;  // w_i = 2 pi r_i wgl_i (area measure)
    Eigen::VectorXd p_nodes, p_weights;
    Eigen::VectorXd phi_nodes;  // phi_k = 2 pi k / n_phi

    Eigen::MatrixXcd ang_fwd;  // (n_phi x n_modes): modes = position * ang_fwd
    Eigen::MatrixXcd ang_bwd;  // (n_modes x n_phi): position = modes * ang_bwd

    HankelPlan hankel;

    int n_modes() const { return 2 * max_mode + 1; }
    int mode_col(int m) const { return m + max_mode; }
    int col_mode(int c) const { return c - max_mode; }

    double disc_area() const { return r_weights.sum(); }
    double transform_gain() const { return hankel.gain; }
};

inline PolarGrid make_grid(int n_r, int n_phi, double r_max, double p_max) {
    if (n_phi % 2 != 0) throw std::invalid_argument("make_grid: n_phi must be even");
    if (n_phi < 4) throw std::invalid_argument("make_grid: n_phi must be >= 4");
    if (n_r < 8) throw std::invalid_argument("make_grid: n_r must be >= 8");
    if (!(r_max > 0.0) || !(p_max > 0.0))
        throw std::invalid_argument("make_grid: extents must be positive");

    PolarGrid g;
    g.n_r = n_r;
    g.n_phi = n_phi;
    g.max_mode = n_phi / 2 - 1;
    g.r_max = r_max;
    g.p_max = p_max;

    QuadRule rr = gauss_legendre(n_r, 0.0, r_max);
    QuadRule pp = gauss_legendre(n_r, 0.0, p_max);
    g.r_nodes = Eigen::Map<const Eigen::VectorXd>(rr.nodes.data(), n_r);
    g.p_nodes = Eigen::Map<const Eigen::VectorXd>(pp.nodes.data(), n_r);
    Eigen::VectorXd rgl = Eigen::Map<const Eigen::VectorXd>(rr.weights.data(), n_r);
    Eigen::VectorXd pgl = Eigen::Map<const Eigen::VectorXd>(pp.weights.data(), n_r);
    g.r_weights = 2.0 * pi_v * g.r_nodes.cwiseProduct(rgl);
    g.p_weights = 2.0 * pi_v * g.p_nodes.cwiseProduct(pgl);

    g.phi_nodes.resize(n_phi);
    for (int k = 0; k < n_phi; ++k) g.phi_nodes[k] = 2.0 * pi_v * k / n_phi;

    const int nm = g.n_modes();
    g.ang_fwd.resize(n_phi, nm);
    g.ang_bwd.resize(nm, n_phi);
    for (int c = 0; c < nm; ++c) {
        const int m = c - g.max_mode;
        for (int k = 0; k < n_phi; ++k) {
            const double mp = m * g.phi_nodes[k];
            g.ang_fwd(k, c) = Complex(std::cos(mp), -std::sin(mp)) / double(n_phi);
            g.ang_bwd(c, k) = Complex(std::cos(mp), std::sin(mp));
        }
    }

    g.hankel.forward.resize(g.max_mode + 1);
    g.hankel.backward.resize(g.max_mode + 1);
    double gain = 0.0;
    Eigen::VectorXd sr = g.r_nodes.cwiseProduct(rgl).cwiseSqrt();
    Eigen::VectorXd sp = g.p_nodes.cwiseProduct(pgl).cwiseSqrt();
    for (int m = 0; m <= g.max_mode; ++m) {
        Eigen::MatrixXd J(n_r, n_r);
        for (int a = 0; a < n_r; ++a)
            for (int i = 0; i < n_r; ++i)
                J(a, i) = std::cyl_bessel_j(double(m), g.p_nodes[a] * g.r_nodes[i]);
        g.hankel.forward[m] = J * (g.r_nodes.cwiseProduct(rgl)).asDiagonal();
        g.hankel.backward[m] =
            J.transpose() * (g.p_nodes.cwiseProduct(pgl)).asDiagonal();
        // normalized transform sqrt(p wgl) J sqrt(r wgl): contraction on stable grids
        Eigen::MatrixXd Jn = sp.asDiagonal() * J * sr.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jn.transpose() * Jn,
                                                          Eigen::EigenvaluesOnly);
        gain = std::max(gain, std::sqrt(es.eigenvalues().maxCoeff()));
    }
    g.hankel.gain = gain;
    return g;
}

}  // namespace rotaprop
