#pragma once

// Potentials and their angular decomposition V0 = Vbar + W0. The angular
// Fourier coefficients v_m(r) are computed once; all time dependence is a
// phase rotation of modes, V_{omega t}(r,phi) = sum_m v_m(r) e^{i m (phi - omega t)}.
// Vbar is the m = 0 coefficient (the rotational average), W0 the rest.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "rotaprop/field.hpp"
#include "rotaprop/operators.hpp"

namespace rotaprop {

struct PotentialSpec {
    enum class Variant { OffsetGaussian, Fan, Sampled };
    Variant variant = Variant::OffsetGaussian;

    // OffsetGaussian: V0(x) = A exp(-|x - d e1|^2 / sigma^2)
    // (d = 0 gives a rotationally invariant control potential, W0 = 0)
    double amplitude = 1.0;
    double distance = 1.0;
    double width = 1.0;

    // Fan: V0(r,phi) = f(r) cos(K phi) with the normalized cubic-Gaussian
    // envelope f(r) = A (2/3)^{3/2} e^{3/2} (r/r0)^3 exp(-(r/r0)^2),
    // sup f = A attained at r = r0 sqrt(3/2). Analytic at the origin since
    // r^3 e^{+-i3phi} is a polynomial in x (K = 3 is the default harmonic).
    int harmonic = 3;
    double r0 = 1.5;

    // Sampled: arbitrary real values on the grid (n_r x n_phi)
    Eigen::MatrixXd samples;

    bool bounded = true;

    static PotentialSpec offset_gaussian(double A, double d, double sigma) {
        PotentialSpec s;
        s.variant = Variant::OffsetGaussian;
        s.amplitude = A;
        s.distance = d;
        s.width = sigma;
        return s;
    }
    static PotentialSpec fan(double A, double r0, int K) {
        PotentialSpec s;
        s.variant = Variant::Fan;
        s.amplitude = A;
        s.r0 = r0;
        s.harmonic = K;
        return s;
    }
    static PotentialSpec sampled(Eigen::MatrixXd values) {
        PotentialSpec s;
        s.variant = Variant::Sampled;
        s.samples = std::move(values);
        return s;
    }

    double fan_envelope(double r) const {
        const double u = r / r0;
        return amplitude * std::pow(2.0 / 3.0, 1.5) * std::exp(1.5) * u * u * u *
               std::exp(-u * u);
    }

    // V0 at an arbitrary point (Sampled has no off-grid values)
    double eval(double r, double phi) const {
        switch (variant) {
            case Variant::OffsetGaussian: {
                const double dx = r * std::cos(phi) - distance;
                const double dy = r * std::sin(phi);
                return amplitude * std::exp(-(dx * dx + dy * dy) / (width * width));
            }
            case Variant::Fan:
                return fan_envelope(r) * std::cos(harmonic * phi);
            default:
                throw std::logic_error("PotentialSpec::eval: sampled variant has no closed form");
        }
    }

    bool has_closed_form() const { return variant != Variant::Sampled; }

    // Angular coefficient v_m(r) in closed form where available:
    //   OffsetGaussian: v_m(r) = A e^{-(r^2+d^2)/sigma^2} I_m(2 r d / sigma^2)
    //   Fan:            v_{+-K}(r) = f(r)/2, else 0
    double closed_form_vm(int m, double r) const {
        switch (variant) {
            case Variant::OffsetGaussian: {
                const double s2 = width * width;
                return amplitude * std::exp(-(r * r + distance * distance) / s2) *
                       std::cyl_bessel_i(double(std::abs(m)), 2.0 * r * distance / s2);
            }
            case Variant::Fan:
                return (std::abs(m) == harmonic) ? 0.5 * fan_envelope(r) : 0.0;
            default:
                throw std::logic_error("PotentialSpec::closed_form_vm: sampled variant");
        }
    }
};

struct AngularPotential {
    const PolarGrid* grid = nullptr;
    Eigen::MatrixXcd v;      // n_r x n_modes, column c holds v_{c-M}(r_i)
    Eigen::VectorXd vbar;    // real m = 0 profile (the averaged potential)
    double sup_w = 0.0;      // ess-sup of |W0| from the oversampled search
    double sup_vbar = 0.0;   // max |Vbar| on the oversampled radii
    std::optional<PotentialSpec> source;  // kept for oversampled evaluation

    int n_modes() const { return grid->n_modes(); }

    // v_m at grid radii; zero outside the retained band
    Eigen::VectorXcd coeff(int m) const {
        if (std::abs(m) > grid->max_mode) return Eigen::VectorXcd::Zero(grid->n_r);
        return v.col(grid->mode_col(m));
    }
};

// Position samples of V_{omega t}; t = 0 gives V0. Real up to rounding.
inline Eigen::MatrixXd potential_at_time(const AngularPotential& ap, double omega,
                                         double t) {
    const PolarGrid& g = *ap.grid;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(g.n_r, g.n_phi);
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        const double ph0 = -m * omega * t;
        for (int k = 0; k < g.n_phi; ++k) {
            const double ph = m * g.phi_nodes[k] + ph0;
            acc.col(k) += ap.v.col(c) * Complex(std::cos(ph), std::sin(ph));
        }
    }
    return acc.real();
}

// Samples of W_{omega t} = V_{omega t} - Vbar.
inline Eigen::MatrixXd remainder_at_time(const AngularPotential& ap, double omega,
                                         double t) {
    Eigen::MatrixXd out = potential_at_time(ap, omega, t);
    out.colwise() -= ap.vbar;
    return out;
}

// Closed form of int_{t1}^{t2} W_{omega s} ds:
//   sum_{m != 0} v_m(r) e^{i m phi} (e^{-i m omega t1} - e^{-i m omega t2}) / (i m omega).
// Vanishes identically when t2 - t1 is a whole number of periods 2 pi / omega.
// omega = 0 is rejected; that branch is plain quadrature (t2-t1) W0 and the
// caller must choose it explicitly.
inline Eigen::MatrixXd W_time_integral(const AngularPotential& ap, double omega,
                                       double t1, double t2) {
    if (omega == 0.0)
        throw std::invalid_argument(
            "W_time_integral: omega = 0 has no oscillatory closed form; integrate "
            "(t2-t1) * W0 directly");
    const PolarGrid& g = *ap.grid;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(g.n_r, g.n_phi);
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        if (m == 0) continue;
        const Complex e1(std::cos(m * omega * t1), -std::sin(m * omega * t1));
        const Complex e2(std::cos(m * omega * t2), -std::sin(m * omega * t2));
        const Complex coef = (e1 - e2) / Complex(0.0, m * omega);
        for (int k = 0; k < g.n_phi; ++k) {
            const double ph = m * g.phi_nodes[k];
            acc.col(k) += ap.v.col(c) * (coef * Complex(std::cos(ph), std::sin(ph)));
        }
    }
    return acc.real();
}

inline double sup_norm_W(const AngularPotential& ap);

// Angular Fourier coefficients of V0 on the grid. Checks conjugate symmetry,
// pointwise reconstruction and the mode-truncation headroom |v_m| < 1e-12 for
// |m| > M/2 (mode coupling during evolution needs the upper half of the band
// to stay empty).
inline AngularPotential decompose_potential(const PotentialSpec& spec,
                                            const PolarGrid& g) {
    AngularPotential ap;
    ap.grid = &g;
    ap.source = spec;

    Eigen::MatrixXd V0(g.n_r, g.n_phi);
    if (spec.variant == PotentialSpec::Variant::Sampled) {
        if (spec.samples.rows() != g.n_r || spec.samples.cols() != g.n_phi)
            throw std::invalid_argument("decompose_potential: sample shape mismatch");
        V0 = spec.samples;
    } else {
        for (int i = 0; i < g.n_r; ++i)
            for (int k = 0; k < g.n_phi; ++k)
                V0(i, k) = spec.eval(g.r_nodes[i], g.phi_nodes[k]);
    }
    if (!V0.allFinite())
        throw std::invalid_argument("decompose_potential: potential contains non-finite values");

    ap.v = V0.cast<Complex>() * g.ang_fwd;

    // conjugate symmetry v_{-m} = conj(v_m) for a real potential
    for (int m = 1; m <= g.max_mode; ++m) {
        const double asym = (ap.v.col(g.mode_col(-m)) - ap.v.col(g.mode_col(m)).conjugate())
                                .cwiseAbs()
                                .maxCoeff();
        if (asym > 1e-10)
            throw std::runtime_error("decompose_potential: conjugate symmetry violated");
    }

    // reconstruction must match the samples
    Eigen::MatrixXd rec = (ap.v * g.ang_bwd).real();
    if ((rec - V0).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, V0.cwiseAbs().maxCoeff()))
        throw std::runtime_error("decompose_potential: reconstruction residual too large");

    // truncation headroom
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        if (2 * std::abs(m) > g.max_mode && ap.v.col(c).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument(
                "decompose_potential: potential has angular content above M/2; "
                "increase n_phi");
    }

    ap.vbar = ap.v.col(g.mode_col(0)).real();
    ap.sup_vbar = ap.vbar.cwiseAbs().maxCoeff();
    ap.sup_w = sup_norm_W(ap);
    return ap;
}

// Ess-sup of |W0| over a 4x oversampled position grid (the operator norm of
// the bounded multiplication operator W0). Radial oversampling uses the
// closed-form coefficients when the source potential has them; for sampled
// potentials only the angular direction is refined.
inline double sup_norm_W(const AngularPotential& ap) {
    const PolarGrid& g = *ap.grid;
    const int nm = g.n_modes();
    const int nphi = 4 * g.n_phi;
    const bool closed = ap.source && ap.source->has_closed_form();
    const int nr = closed ? 4 * g.n_r : g.n_r;

    // sample set: 4x uniform refinement plus the grid radii themselves, so the
    // search always upper-bounds the grid samples
    std::vector<double> radii(nr);
    for (int i = 0; i < nr; ++i)
        radii[i] = closed ? (i + 0.5) * g.r_max / nr : g.r_nodes[i];
    if (closed)
        for (int i = 0; i < g.n_r; ++i) radii.push_back(g.r_nodes[i]);

    Eigen::MatrixXcd vm(radii.size(), nm);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        for (int c = 0; c < nm; ++c) {
            const int m = g.col_mode(c);
            if (m == 0)
                vm(i, c) = 0.0;
            else
                vm(i, c) = closed
                               ? Complex(ap.source->closed_form_vm(m, radii[i]), 0.0)
                               : ap.v(i, c);
        }
    }
    Eigen::MatrixXcd phases(nm, nphi);
    for (int c = 0; c < nm; ++c)
        for (int k = 0; k < nphi; ++k) {
            const double ph = g.col_mode(c) * 2.0 * pi_v * k / nphi;
            phases(c, k) = Complex(std::cos(ph), std::sin(ph));
        }
    return (vm * phases).cwiseAbs().maxCoeff();
}

// Splitting check of the diagonal/off-diagonal structure: Vbar commutes with
// every P_j and W0 has vanishing (j,j) blocks. Both potentials act as
// position multipliers here so the check exercises the transforms rather
// than the mode bookkeeping. Returns (||P_j Vbar psi - Vbar P_j psi||,
// ||P_j W0 P_j psi||).
inline std::pair<double, double> verify_diag_offdiag(const AngularPotential& ap,
                                                     const Field& psi, int j) {
    const PolarGrid& g = *ap.grid;
    Field modes = to_repr(psi, Repr::Modes);

    Eigen::MatrixXd Vbar_pos(g.n_r, g.n_phi);
    Vbar_pos.colwise() = ap.vbar;
    Eigen::MatrixXd W_pos = potential_at_time(ap, 1.0, 0.0);
    W_pos.colwise() -= ap.vbar;

    auto mult = [&](const Field& m, const Eigen::MatrixXd& V) {
        return to_modes(multiply_position(from_modes(m), V));
    };

    Field a = project(mult(modes, Vbar_pos), j);
    Field b = mult(project(modes, j), Vbar_pos);
    a.data -= b.data;
    const double comm = norm(a);

    Field w = project(mult(project(modes, j), W_pos), j);
    return {comm, norm(w)};
}

}  // namespace rotaprop
