#pragma once

// Dense finite truncations of H_omega + omega*ell + Vbar + W_phi in the
// (momentum radial node x angular mode) basis. H0 and J are diagonal here;
// all coupling lives in the potential blocks, which are conjugations of the
// radial multipliers by the weight-normalized Hankel matrices
// G_m = diag(sqrt(p wgl)) J_m diag(sqrt(r wgl)).
//
// Coefficients are weight-normalized, x_{(m,a)} = sqrt(wp_a) chi_m(p_a), so
// the Euclidean norm of a coefficient vector equals the field L2 norm and
// every potential block is exactly Hermitian by construction:
//   Vbar block (m,m):   G_|m| diag(vbar) G_|m|^T      (real symmetric)
//   W block   (m,m'):   e^{-i(m-m')phi} G_|m| diag(v_{m-m'}) G_|m'|^T
// with v_{-k} = conj(v_k).

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rotaprop/field.hpp"
#include "rotaprop/operators.hpp"
#include "rotaprop/potential.hpp"

namespace rotaprop {

struct TruncatedOperator {
    const PolarGrid* grid = nullptr;
    Eigen::MatrixXcd mat;  // Hermitian part; the -i zeta shift is applied at solve time
    double zeta = 0.0;
    double omega = 0.0;
    int ell = 0;
    double phi = 0.0;

    int dim() const { return int(mat.rows()); }
    // basis index of (momentum node a, mode m)
    int index(int a, int m) const { return grid->mode_col(m) * grid->n_r + a; }
};

namespace detail {

// normalized per-order Hankel matrix G_m (real, approximately orthogonal)
inline Eigen::MatrixXd normalized_hankel(const PolarGrid& g, int m) {
    Eigen::VectorXd sr = (g.r_weights / (2.0 * pi_v)).cwiseSqrt();
    Eigen::VectorXd sp = (g.p_weights / (2.0 * pi_v)).cwiseSqrt();
    // plan.forward[m] = J_m diag(r wgl) = J_m diag(sr^2)
    return sp.asDiagonal() * g.hankel.forward[m] * sr.cwiseInverse().asDiagonal();
}

}  // namespace detail

// Weight-normalized coefficient vector of a field (stacked mode columns).
inline Eigen::VectorXcd field_to_vec(const Field& f) {
    Field mom = to_repr(f, Repr::MomentumModes);
    const PolarGrid& g = *f.grid;
    Eigen::VectorXd sp = g.p_weights.cwiseSqrt();
    Eigen::VectorXcd v(g.n_r * g.n_modes());
    for (int c = 0; c < g.n_modes(); ++c)
        v.segment(c * g.n_r, g.n_r) = mom.data.col(c).cwiseProduct(sp.cast<Complex>());
    return v;
}

inline Field vec_to_field(const PolarGrid& g, const Eigen::VectorXcd& v) {
    Field f(g, Repr::MomentumModes);
    Eigen::VectorXd isp = g.p_weights.cwiseSqrt().cwiseInverse();
    for (int c = 0; c < g.n_modes(); ++c)
        f.data.col(c) = v.segment(c * g.n_r, g.n_r).cwiseProduct(isp.cast<Complex>());
    return f;
}

inline TruncatedOperator build_truncation(const PolarGrid& g, const KineticSpec& kin,
                                          const AngularPotential& ap, double omega,
                                          int ell, double zeta, double phi) {
    if (zeta == 0.0)
        throw std::invalid_argument("build_truncation: zeta must be nonzero");
    if (std::abs(ell) > g.max_mode)
        throw std::invalid_argument("build_truncation: |ell| exceeds the mode band");
    TruncatedOperator op;
    op.grid = &g;
    op.zeta = zeta;
    op.omega = omega;
    op.ell = ell;
    op.phi = phi;
    const int nm = g.n_modes(), nr = g.n_r;
    op.mat.setZero(nr * nm, nr * nm);

    std::vector<Eigen::MatrixXd> G(g.max_mode + 1);
    for (int m = 0; m <= g.max_mode; ++m) G[m] = detail::normalized_hankel(g, m);

    for (int c = 0; c < nm; ++c) {
        const int m = g.col_mode(c);
        // H_omega + omega ell: diagonal h(p_a) - omega m + omega ell
        for (int a = 0; a < nr; ++a)
            op.mat(c * nr + a, c * nr + a) = kin.h(g.p_nodes[a]) - omega * m + omega * ell;
        // Vbar: block-diagonal in m
        op.mat.block(c * nr, c * nr, nr, nr) +=
            (G[std::abs(m)] * ap.vbar.asDiagonal() * G[std::abs(m)].transpose())
                .cast<Complex>();
    }
    // W_phi: strictly off-block-diagonal couplings by v_{m-m'}
    for (int c = 0; c < nm; ++c) {
        const int m = g.col_mode(c);
        for (int c2 = 0; c2 < nm; ++c2) {
            const int m2 = g.col_mode(c2);
            const int dm = m - m2;
            if (dm == 0 || std::abs(dm) > g.max_mode) continue;
            Eigen::VectorXcd vdm = ap.coeff(dm);
            if (vdm.cwiseAbs().maxCoeff() < 1e-15) continue;
            const Complex rot(std::cos(dm * phi), -std::sin(dm * phi));
            op.mat.block(c * nr, c2 * nr, nr, nr) +=
                rot * (G[std::abs(m)].cast<Complex>() * vdm.asDiagonal() *
                       G[std::abs(m2)].transpose().cast<Complex>());
        }
    }
    return op;
}

// Largest Hermiticity residual of the assembled matrix (diagnostic; the
// construction is Hermitian by symmetry of the blocks).
inline double hermiticity_residual(const TruncatedOperator& op) {
    return (op.mat - op.mat.adjoint()).cwiseAbs().maxCoeff();
}

// Solve (mat - i zeta) x = rhs to residual < 1e-10 ||rhs||, with one step of
// iterative refinement before giving up.
inline Eigen::VectorXcd resolvent_apply(const TruncatedOperator& op,
                                        const Eigen::VectorXcd& rhs) {
    Eigen::MatrixXcd shifted = op.mat;
    shifted.diagonal().array() -= Complex(0.0, op.zeta);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    Eigen::VectorXcd x = lu.solve(rhs);
    const double scale = rhs.norm();
    if (scale == 0.0) return Eigen::VectorXcd::Zero(rhs.size());
    double res = (shifted * x - rhs).norm();
    if (res > 1e-10 * scale) {
        x += lu.solve(rhs - shifted * x);
        res = (shifted * x - rhs).norm();
        if (res > 1e-10 * scale)
            throw std::runtime_error("resolvent_apply: solver residual exceeded");
    }
    return x;
}

// ---- block-diagonal machinery for the W-free lemma ---------------------------

// H0 + Vbar restricted to mode m (real symmetric, momentum basis).
inline Eigen::MatrixXd mode_block(const PolarGrid& g, const KineticSpec& kin,
                                  const Eigen::VectorXd& vbar, int m) {
    Eigen::MatrixXd G = detail::normalized_hankel(g, std::abs(m));
    Eigen::MatrixXd B = G * vbar.asDiagonal() * G.transpose();
    for (int a = 0; a < g.n_r; ++a) B(a, a) += kin.h(g.p_nodes[a]);
    return B;
}

inline Eigen::VectorXcd shifted_block_solve(const Eigen::MatrixXd& block, double shift,
                                            double zeta, const Eigen::VectorXcd& rhs) {
    Eigen::MatrixXcd A = block.cast<Complex>();
    A.diagonal().array() += Complex(shift, -zeta);
    return A.partialPivLu().solve(rhs);
}

struct Limres1Row {
    double omega = 0.0;
    double deviation = 0.0;
    double envelope = 0.0;  // 1/(omega - mu_max - |zeta|) when positive, else +inf
};

// || (H_omega + Vbar + omega ell - i zeta)^{-1} Phi  -  (H0 + Vbar - i zeta)^{-1} P_ell Phi ||
// per omega, using the exact block-diagonal structure (W absent). mu_max is
// the spectral radius of H0 + Vbar on the modes carrying Phi.
inline std::vector<Limres1Row> limres1_check(const PolarGrid& g, const KineticSpec& kin,
                                             const Eigen::VectorXd& vbar, int ell,
                                             double zeta,
                                             const std::vector<double>& omegas,
                                             const Field& phi_state,
                                             double* mu_max_out = nullptr) {
    if (zeta == 0.0) throw std::invalid_argument("limres1_check: zeta must be nonzero");
    if (std::abs(ell) > g.max_mode)
        throw std::invalid_argument("limres1_check: |ell| exceeds the mode band");
    Field mom = to_repr(phi_state, Repr::MomentumModes);
    Eigen::VectorXd sp = g.p_weights.cwiseSqrt();

    // modes actually present
    std::vector<int> active;
    for (int c = 0; c < g.n_modes(); ++c)
        if (mom.data.col(c).cwiseAbs().maxCoeff() > 1e-14) active.push_back(g.col_mode(c));

    std::vector<Eigen::MatrixXd> blocks;
    double mu_max = 0.0;
    for (int m : active) {
        blocks.push_back(mode_block(g, kin, vbar, m));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blocks.back(),
                                                          Eigen::EigenvaluesOnly);
        mu_max = std::max(mu_max, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    if (mu_max_out) *mu_max_out = mu_max;

    // the limit object (H0 + Vbar - i zeta)^{-1} P_ell Phi
    Eigen::VectorXcd phi_ell =
        (std::abs(ell) <= g.max_mode)
            ? Eigen::VectorXcd(mom.data.col(g.mode_col(ell)).cwiseProduct(
                  sp.cast<Complex>()))
            : Eigen::VectorXcd::Zero(g.n_r);
    Eigen::MatrixXd block_ell = mode_block(g, kin, vbar, ell);
    Eigen::VectorXcd limit = shifted_block_solve(block_ell, 0.0, zeta, phi_ell);

    std::vector<Limres1Row> rows;
    for (double omega : omegas) {
        double dev2 = 0.0;
        for (std::size_t bi = 0; bi < active.size(); ++bi) {
            const int m = active[bi];
            Eigen::VectorXcd rhs =
                mom.data.col(g.mode_col(m)).cwiseProduct(sp.cast<Complex>());
            Eigen::VectorXcd x =
                shifted_block_solve(blocks[bi], omega * (ell - m), zeta, rhs);
            if (m == ell) x -= limit;
            dev2 += x.squaredNorm();
        }
        // P_ell Phi may live in a mode with zero content; the limit still counts
        bool ell_active = false;
        for (int m : active) ell_active = ell_active || (m == ell);
        if (!ell_active) dev2 += limit.squaredNorm();

        Limres1Row row;
        row.omega = omega;
        row.deviation = std::sqrt(dev2);
        const double gap = omega - mu_max - std::abs(zeta);
        row.envelope = gap > 0.0 ? 1.0 / gap : std::numeric_limits<double>::infinity();
        rows.push_back(row);
    }
    return rows;
}

struct ResolvRow {
    double omega = 0.0;
    double phi = 0.0;
    double deviation = 0.0;
};

// Full resolvent limit with the W_phi coupling:
// (H_omega + omega ell + Vbar + W_phi - i zeta)^{-1} Phi -> (H0+Vbar-i zeta)^{-1} P_ell Phi.
// Requires |zeta| > ||W0|| (Neumann series of the proof).
inline std::vector<ResolvRow> resolv_limit_check(const PolarGrid& g,
                                                 const KineticSpec& kin,
                                                 const AngularPotential& ap, int ell,
                                                 double zeta,
                                                 const std::vector<double>& omegas,
                                                 const std::vector<double>& phis,
                                                 const Field& phi_state) {
    if (!(std::abs(zeta) > ap.sup_w))
        throw std::invalid_argument("resolv_limit_check: requires |zeta| > ||W0||");
    if (std::abs(ell) > g.max_mode)
        throw std::invalid_argument("resolv_limit_check: |ell| exceeds the mode band");
    Eigen::VectorXd sp = g.p_weights.cwiseSqrt();
    Field mom = to_repr(phi_state, Repr::MomentumModes);

    Eigen::VectorXcd phi_ell =
        mom.data.col(g.mode_col(ell)).cwiseProduct(sp.cast<Complex>());
    Eigen::VectorXcd limit_ell =
        shifted_block_solve(mode_block(g, kin, ap.vbar, ell), 0.0, zeta, phi_ell);
    Eigen::VectorXcd limit = Eigen::VectorXcd::Zero(g.n_r * g.n_modes());
    limit.segment(g.mode_col(ell) * g.n_r, g.n_r) = limit_ell;

    Eigen::VectorXcd rhs = field_to_vec(phi_state);
    std::vector<ResolvRow> rows;
    for (double omega : omegas)
        for (double phi : phis) {
            TruncatedOperator op = build_truncation(g, kin, ap, omega, ell, zeta, phi);
            Eigen::VectorXcd x = resolvent_apply(op, rhs);
            rows.push_back({omega, phi, (x - limit).norm()});
        }
    return rows;
}

}  // namespace rotaprop
