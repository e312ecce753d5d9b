#pragma once

// Evolution schemes for H(omega t) = H0 + V_{omega t}:
//
//  * evolve_unperturbed  e^{-i t H_omega} = R(omega t)^* e^{-i t H0},
//                        exact diagonal phases on momentum modes;
//  * evolve_averaged     e^{-i t (H0 + Vbar)} by Strang splitting; Vbar is
//                        radial so the splitting factors are mode-diagonal;
//  * evolve_reference    U(t;t0) = R(omega t) e^{-i(t-t0)(H_omega+V0)} R(omega t0)^*,
//                        rotating-frame Strang alternating the exact
//                        e^{-i tau H_omega} with the position multiplier
//                        e^{-i tau V0}. e^{-i tau H_omega} is applied as one
//                        diagonal phase (H0 and J commute), so the splitting
//                        error does not inherit the omega J stiffness;
//  * product_formula_W   ordered product of averaged steps and the exact
//                        pointwise exponentials exp{-i int W_{omega s} ds};
//  * u_tilde_factor /    the corrected factors: the unitary exponential of the
//    u_lin_factor        interaction-picture time integral B, and its linear
//                        approximation 1 - iB;
//  * scheme_product      the corrected products with their norm error bounds.
//
// The B integral is evaluated by Gauss-Legendre quadrature; each node
// conjugates the W multiplier with evolve_averaged. Every quadrature term is
// exactly Hermitian (unitary conjugation of a real multiplier with a positive
// weight), so e^{-iB} is unitary up to the Taylor tail regardless of the
// quadrature resolution.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rotaprop/field.hpp"
#include "rotaprop/operators.hpp"
#include "rotaprop/potential.hpp"
#include "rotaprop/quadrature.hpp"

namespace rotaprop {

struct SchemeConfig {
    enum class Kind {
        Reference,
        TrotterInertial,
        AveragedPlusW,
        UTildeProduct,
        ULinearTildeProduct,
        AveragedOnly
    };
    Kind kind = Kind::Reference;

    int n = 1;        // coarse product steps
    int n_sub = 256;  // split-step substeps (whole span for Reference/AveragedOnly,
                      // per coarse step for the product schemes)
    int k_quad = 8;   // Gauss-Legendre nodes for the B integral
    double taylor_tol = 1e-12;
    int conj_rate = 64;  // substeps per unit time in e^{+-i s (H0+Vbar)} conjugations

    double omega = 0.0;
    double T = 1.0;
    double t0 = 0.0;
    KineticSpec kinetic;
    const AngularPotential* potential = nullptr;

    void validate() const {
        if (n < 1 || n_sub < 1 || k_quad < 1)
            throw std::invalid_argument("SchemeConfig: n, n_sub, k_quad must be >= 1");
        if (!(taylor_tol > 0.0) || taylor_tol > 1e-6)
            throw std::invalid_argument("SchemeConfig: taylor_tol must be in (0, 1e-6]");
        if (!potential) throw std::invalid_argument("SchemeConfig: potential not set");
    }
};

struct PropagationResult {
    Field state;
    double norm_drift = 0.0;   // |norm(out) - norm(in)| / norm(in)
    long substeps = 0;         // split-step applications
    long factors = 0;          // product factors applied
    int max_taylor_order = 0;  // highest truncated-series order used
};

// ---- exact unperturbed rotating-frame group ---------------------------------

// Momentum-representation input stays in momentum representation, so chained
// applications compose the diagonal phases exactly (no intermediate radial
// transforms); other representations come back as Modes.
inline Field evolve_unperturbed(const Field& psi, double t, double omega,
                                const KineticSpec& kin) {
    Field mom = to_repr(psi, Repr::MomentumModes);
    const PolarGrid& g = *psi.grid;
    for (int a = 0; a < g.n_r; ++a) {
        const double ph = -t * kin.h(g.p_nodes[a]);
        mom.data.row(a) *= Complex(std::cos(ph), std::sin(ph));
    }
    for (int c = 0; c < g.n_modes(); ++c) {
        const double ph = omega * t * g.col_mode(c);
        mom.data.col(c) *= Complex(std::cos(ph), std::sin(ph));
    }
    return psi.repr == Repr::MomentumModes ? mom : to_position_modes(mom);
}

// ---- averaged evolution:  e^{-i t (H0 + Vbar)} ------------------------------

inline Field evolve_averaged(const Field& psi, double t, int n_sub,
                             const KineticSpec& kin, const Eigen::VectorXd& vbar) {
    Field cur = to_repr(psi, Repr::Modes);
    if (t == 0.0) return cur;
    if (n_sub < 1) throw std::invalid_argument("evolve_averaged: n_sub must be >= 1");
    const PolarGrid& g = *psi.grid;
    const double tau = t / n_sub;

    Eigen::VectorXcd half(g.n_r), kinph(g.n_r);
    for (int i = 0; i < g.n_r; ++i) {
        const double ph = -0.5 * tau * vbar[i];
        half[i] = Complex(std::cos(ph), std::sin(ph));
        const double kp = -tau * kin.h(g.p_nodes[i]);
        kinph[i] = Complex(std::cos(kp), std::sin(kp));
    }
    Eigen::VectorXcd full = half.cwiseProduct(half);

    cur.data.array().colwise() *= half.array();
    for (int s = 0; s < n_sub; ++s) {
        Field mom = to_momentum(cur);
        mom.data.array().colwise() *= kinph.array();
        cur = to_position_modes(mom);
        cur.data.array().colwise() *= (s + 1 < n_sub ? full : half).array();
    }
    return cur;
}

// ---- reference propagator ----------------------------------------------------

// U(t;t0) psi with n_sub Strang substeps of the rotating-frame generator.
inline Field evolve_reference(const Field& psi, double t0, double t,
                              const SchemeConfig& cfg, int n_sub_override = 0) {
    const AngularPotential& ap = *cfg.potential;
    const PolarGrid& g = *ap.grid;
    const double dt = t - t0;
    Field modes = to_repr(psi, Repr::Modes);
    if (dt == 0.0) return modes;
    const int n_sub = n_sub_override > 0 ? n_sub_override : cfg.n_sub;
    const double tau = dt / n_sub;

    // R(omega t0)^*
    Field cur = apply_rotation(modes, -cfg.omega * t0);

    const Eigen::MatrixXd V0 = potential_at_time(ap, 1.0, 0.0);
    Eigen::MatrixXcd EV_half(g.n_r, g.n_phi);
    for (int i = 0; i < g.n_r; ++i)
        for (int k = 0; k < g.n_phi; ++k) {
            const double ph = -0.5 * tau * V0(i, k);
            EV_half(i, k) = Complex(std::cos(ph), std::sin(ph));
        }
    Eigen::MatrixXcd EV_full = EV_half.cwiseProduct(EV_half);

    // e^{-i tau H_omega}: diagonal on momentum modes
    Eigen::MatrixXcd Kin(g.n_r, g.n_modes());
    for (int a = 0; a < g.n_r; ++a)
        for (int c = 0; c < g.n_modes(); ++c) {
            const double ph = -tau * cfg.kinetic.h(g.p_nodes[a]) +
                              cfg.omega * tau * g.col_mode(c);
            Kin(a, c) = Complex(std::cos(ph), std::sin(ph));
        }

    Field pos = from_modes(cur);
    pos.data.array() *= EV_half.array();
    for (int s = 0; s < n_sub; ++s) {
        Field mom = to_momentum(to_modes(pos));
        mom.data.array() *= Kin.array();
        pos = from_modes(to_position_modes(mom));
        pos.data.array() *= (s + 1 < n_sub ? EV_full : EV_half).array();
    }
    // R(omega t)
    return apply_rotation(to_modes(pos), cfg.omega * t);
}

// ---- Duhamel residual ---------------------------------------------------------

// || U(t;t0) psi - [ e^{-i(t-t0)A} psi
//                    - i int_{t0}^{t} e^{-i(t-tau)A} W_{omega tau} U(tau;t0) psi dtau ] ||
// with A = H0 + Vbar and the integral by Gauss-Legendre quadrature.
inline double duhamel_residual(const Field& psi, double t0, double t,
                               const SchemeConfig& cfg, int quad_nodes) {
    if (quad_nodes < 4)
        throw std::invalid_argument("duhamel_residual: quad_nodes must be >= 4");
    if (t == t0) return 0.0;
    const AngularPotential& ap = *cfg.potential;
    const Eigen::VectorXd& vbar = ap.vbar;
    const double span = t - t0;

    Field lhs = evolve_reference(psi, t0, t, cfg);
    Field rhs = evolve_averaged(psi, span, cfg.n_sub, cfg.kinetic, vbar);

    QuadRule q = gauss_legendre(quad_nodes, t0, t);
    for (int k = 0; k < quad_nodes; ++k) {
        const double tq = q.nodes[k];
        const int n1 = std::max(2, int(std::lround(cfg.n_sub * std::abs(tq - t0) /
                                                   std::abs(span))));
        const int n2 = std::max(2, int(std::lround(cfg.n_sub * std::abs(t - tq) /
                                                   std::abs(span))));
        Field u = evolve_reference(psi, t0, tq, cfg, n1);
        Field wu = to_modes(multiply_position(from_modes(u),
                                              remainder_at_time(ap, cfg.omega, tq)));
        Field term = evolve_averaged(wu, t - tq, n2, cfg.kinetic, vbar);
        rhs.data += Complex(0.0, -1.0) * q.weights[k] * term.data;
    }
    lhs.data -= rhs.data;
    return norm(lhs);
}

// ---- the integral identity ----------------------------------------------------

// Difference between R(omega t) e^{-i t (-omega J + W_{omega t1})} psi (by fine
// Strang splitting of -omega J against the fixed multiplier W_{omega t1}) and
// the closed-form exp{-i int_{t1}^{t1+t} W_{omega s} ds} psi. Decreases at
// second order in the substep count.
inline double ident_check(const Field& psi, double t, double t1, double omega,
                          const AngularPotential& ap, int n_sub) {
    if (omega == 0.0) throw std::invalid_argument("ident_check: omega must be nonzero");
    if (n_sub < 1) throw std::invalid_argument("ident_check: n_sub must be >= 1");
    const PolarGrid& g = *ap.grid;
    const double tau = t / n_sub;

    const Eigen::MatrixXd W = remainder_at_time(ap, omega, t1);
    Eigen::MatrixXcd EW_half(g.n_r, g.n_phi);
    for (int i = 0; i < g.n_r; ++i)
        for (int k = 0; k < g.n_phi; ++k) {
            const double ph = -0.5 * tau * W(i, k);
            EW_half(i, k) = Complex(std::cos(ph), std::sin(ph));
        }
    Eigen::MatrixXcd EW_full = EW_half.cwiseProduct(EW_half);

    Field pos = to_repr(psi, Repr::Position);
    Field lhs = pos;
    lhs.data.array() *= EW_half.array();
    for (int s = 0; s < n_sub; ++s) {
        Field modes = to_modes(lhs);
        // e^{-i tau (-omega J)}: mode m picks up e^{+i tau omega m}
        modes = apply_rotation(modes, -omega * tau);
        lhs = from_modes(modes);
        lhs.data.array() *= (s + 1 < n_sub ? EW_full : EW_half).array();
    }
    Field lhs_modes = apply_rotation(to_modes(lhs), omega * t);

    Field rhs = phase_position(pos, W_time_integral(ap, omega, t1, t1 + t), 1.0);
    Field rhs_modes = to_modes(rhs);

    lhs_modes.data -= rhs_modes.data;
    return norm(lhs_modes);
}

// ---- product formula with exact W factors -------------------------------------

// prod_k e^{-i (T/n)(H0+Vbar)} exp{-i int_{t0+kT/n}^{t0+(k+1)T/n} W_{omega s} ds},
// factors ordered with k increasing from right to left. Both factor types are
// exactly unitary. For T/n a whole number of rotation periods the W factors are
// the identity and the product collapses to the averaged evolution.
inline Field product_formula_W(const Field& psi, double t0, double T, int n,
                               const SchemeConfig& cfg,
                               PropagationResult* diag = nullptr) {
    if (n < 1) throw std::invalid_argument("product_formula_W: n must be >= 1");
    const AngularPotential& ap = *cfg.potential;
    const double dt = T / n;
    Field cur = to_repr(psi, Repr::Modes);
    for (int k = 0; k < n; ++k) {
        const double a = t0 + k * dt, b = t0 + (k + 1) * dt;
        Eigen::MatrixXd intW;
        if (cfg.omega == 0.0)
            intW = dt * remainder_at_time(ap, 0.0, 0.0);
        else
            intW = W_time_integral(ap, cfg.omega, a, b);
        cur = to_modes(phase_position(from_modes(cur), intW, 1.0));
        cur = evolve_averaged(cur, dt, cfg.n_sub, cfg.kinetic, ap.vbar);
        if (diag) {
            diag->factors += 2;
            diag->substeps += cfg.n_sub;
        }
    }
    return cur;
}

// ---- corrected factors ---------------------------------------------------------

namespace detail {

// B psi ~ int_0^{t2-t1} e^{+i s A} W_{omega(t1+s)} e^{-i s A} psi ds by
// K-node Gauss-Legendre; A = H0 + Vbar.
inline Field apply_B(const Field& psi, double t1, double t2, const SchemeConfig& cfg) {
    const AngularPotential& ap = *cfg.potential;
    Field acc(*psi.grid, Repr::Modes);
    QuadRule q = gauss_legendre(cfg.k_quad, 0.0, t2 - t1);
    for (int k = 0; k < cfg.k_quad; ++k) {
        const double s = q.nodes[k];
        const int ns = std::max(2, int(std::ceil(s * cfg.conj_rate)));
        Field inner = evolve_averaged(psi, s, ns, cfg.kinetic, ap.vbar);
        Field w = to_modes(multiply_position(
            from_modes(inner), remainder_at_time(ap, cfg.omega, t1 + s)));
        Field outer = evolve_averaged(w, -s, ns, cfg.kinetic, ap.vbar);
        acc.data += q.weights[k] * outer.data;
    }
    return acc;
}

}  // namespace detail

// u~(t2,t1): e^{-iB} by adaptive truncated power series. Requires the crude
// estimate ||B|| <= (t2-t1) ||W0|| < 1 so the series converges rapidly; the
// order cap signals a step too large.
inline Field u_tilde_factor(const Field& psi, double t1, double t2,
                            const SchemeConfig& cfg, int* order_used = nullptr) {
    if (cfg.k_quad < 2) throw std::invalid_argument("u_tilde_factor: k_quad must be >= 2");
    Field cur = to_repr(psi, Repr::Modes);
    if (t1 == t2) return cur;
    if (t2 < t1) throw std::invalid_argument("u_tilde_factor: needs t2 >= t1");
    if ((t2 - t1) * cfg.potential->sup_w >= 1.0)
        throw std::invalid_argument(
            "u_tilde_factor: (t2-t1)||W0|| >= 1; increase the factor count n");
    const double n0 = norm(cur);
    if (n0 == 0.0) return cur;

    Field out = cur;
    Field term = cur;
    for (int k = 1; k <= 40; ++k) {
        Field Bt = detail::apply_B(term, t1, t2, cfg);
        term.data = Bt.data * (Complex(0.0, -1.0) / double(k));
        out.data += term.data;
        if (order_used) *order_used = k;
        if (norm(term) <= 0.5 * cfg.taylor_tol * n0) return out;
    }
    throw std::runtime_error("u_tilde_factor: series did not converge before order 40");
}

// u~~(t2,t1): the linear approximation 1 - iB. Norm growth per factor is at
// most 1 + (t2-t1)||W0||.
inline Field u_lin_factor(const Field& psi, double t1, double t2,
                          const SchemeConfig& cfg) {
    if (cfg.k_quad < 2) throw std::invalid_argument("u_lin_factor: k_quad must be >= 2");
    Field cur = to_repr(psi, Repr::Modes);
    if (t1 == t2) return cur;
    if (t2 < t1) throw std::invalid_argument("u_lin_factor: needs t2 >= t1");
    Field B = detail::apply_B(cur, t1, t2, cfg);
    cur.data += Complex(0.0, -1.0) * B.data;
    return cur;
}

enum class CorrectedKind { Exponential, Linear };

// prod_k e^{-i (T/n)(H0+Vbar)} u(t0+(k+1)T/n, t0+kT/n), k increasing right to
// left, with u the exponential or the linear corrected factor.
inline Field scheme_product(const Field& psi, double t0, double T, int n,
                            CorrectedKind which, const SchemeConfig& cfg,
                            PropagationResult* diag = nullptr) {
    if (n < 1) throw std::invalid_argument("scheme_product: n must be >= 1");
    const double dt = T / n;
    Field cur = to_repr(psi, Repr::Modes);
    for (int k = 0; k < n; ++k) {
        const double a = t0 + k * dt, b = t0 + (k + 1) * dt;
        int order = 0;
        cur = (which == CorrectedKind::Exponential)
                  ? u_tilde_factor(cur, a, b, cfg, &order)
                  : u_lin_factor(cur, a, b, cfg);
        cur = evolve_averaged(cur, dt, cfg.n_sub, cfg.kinetic, cfg.potential->vbar);
        if (diag) {
            diag->factors += 2;
            diag->substeps += cfg.n_sub;
            diag->max_taylor_order = std::max(diag->max_taylor_order, order);
        }
    }
    return cur;
}

// ---- scheme dispatch -----------------------------------------------------------

inline PropagationResult propagate(const Field& psi, const SchemeConfig& cfg) {
    cfg.validate();
    PropagationResult res;
    const double n_in = norm(psi);
    switch (cfg.kind) {
        case SchemeConfig::Kind::Reference:
            res.state = evolve_reference(psi, cfg.t0, cfg.t0 + cfg.T, cfg);
            res.substeps = cfg.n_sub;
            break;
        case SchemeConfig::Kind::AveragedOnly:
            res.state = evolve_averaged(psi, cfg.T, cfg.n_sub, cfg.kinetic,
                                        cfg.potential->vbar);
            res.substeps = cfg.n_sub;
            break;
        // The inertial Trotter factors equal the averaged-plus-W factors
        // through the integral identity (see ident_check), so both configs
        // run the same numerical path.
        case SchemeConfig::Kind::TrotterInertial:
        case SchemeConfig::Kind::AveragedPlusW:
            res.state = product_formula_W(psi, cfg.t0, cfg.T, cfg.n, cfg, &res);
            break;
        case SchemeConfig::Kind::UTildeProduct:
            res.state = scheme_product(psi, cfg.t0, cfg.T, cfg.n,
                                       CorrectedKind::Exponential, cfg, &res);
            break;
        case SchemeConfig::Kind::ULinearTildeProduct:
            res.state = scheme_product(psi, cfg.t0, cfg.T, cfg.n,
                                       CorrectedKind::Linear, cfg, &res);
            break;
    }
    res.norm_drift = n_in > 0.0 ? std::abs(norm(res.state) - n_in) / n_in : 0.0;
    return res;
}

}  // namespace rotaprop
