#pragma once

// Wave functions on a PolarGrid in one of three interconvertible
// representations. Conversions never mutate their input; all transforms are
// linear and norm-preserving for band-limited fields (Parseval via the
// quadrature weights).

#include <complex>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "rotaprop/polar_grid.hpp"

namespace rotaprop {

enum class Repr { Position, Modes, MomentumModes };

inline const char* repr_name(Repr r) {
    switch (r) {
        case Repr::Position: return "Position";
        case Repr::Modes: return "Modes";
        default: return "MomentumModes";
    }
}

struct Field {
    const PolarGrid* grid = nullptr;
    Repr repr = Repr::Modes;
    Eigen::MatrixXcd data;  // Position: n_r x n_phi; mode reprs: n_r x n_modes

    Field() = default;
    Field(const PolarGrid& g, Repr r) : grid(&g), repr(r) {
        data.setZero(g.n_r, r == Repr::Position ? g.n_phi : g.n_modes());
    }
};

inline void require_repr(const Field& f, Repr r, const char* where) {
    if (f.repr != r)
        throw std::invalid_argument(std::string(where) + ": field is in " +
                                    repr_name(f.repr) + ", expected " + repr_name(r));
}

inline void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (a.grid != b.grid)
        throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

// ---- constructors -----------------------------------------------------------

inline Field field_from_position(const PolarGrid& g,
                                 const std::function<Complex(double, double)>& f) {
    Field out(g, Repr::Position);
    for (int i = 0; i < g.n_r; ++i)
        for (int k = 0; k < g.n_phi; ++k)
            out.data(i, k) = f(g.r_nodes[i], g.phi_nodes[k]);
    return out;
}

// psi_m(r) = profile(r) in a single angular mode
inline Field field_single_mode(const PolarGrid& g, int m,
                               const std::function<Complex(double)>& profile) {
    if (std::abs(m) > g.max_mode)
        throw std::invalid_argument("field_single_mode: |m| > max mode");
    Field out(g, Repr::Modes);
    for (int i = 0; i < g.n_r; ++i) out.data(i, g.mode_col(m)) = profile(g.r_nodes[i]);
    return out;
}

// ---- inner product / norm ---------------------------------------------------

inline Complex inner(const Field& a, const Field& b) {
    require_same_grid(a, b, "inner");
    if (a.repr != b.repr) throw std::invalid_argument("inner: representation mismatch");
    const PolarGrid& g = *a.grid;
    Complex s = 0.0;
    if (a.repr == Repr::Position) {
        for (int i = 0; i < g.n_r; ++i) {
            Complex row = 0.0;
            for (int k = 0; k < g.n_phi; ++k)
                row += std::conj(a.data(i, k)) * b.data(i, k);
            s += g.r_weights[i] / double(g.n_phi) * row;
        }
    } else {
        const Eigen::VectorXd& w =
            (a.repr == Repr::Modes) ? g.r_weights : g.p_weights;
        for (int c = 0; c < g.n_modes(); ++c)
            for (int i = 0; i < g.n_r; ++i)
                s += w[i] * std::conj(a.data(i, c)) * b.data(i, c);
    }
    return s;
}

inline double norm(const Field& f) {
    const PolarGrid& g = *f.grid;
    double s = 0.0;
    if (f.repr == Repr::Position) {
        for (int i = 0; i < g.n_r; ++i)
            s += g.r_weights[i] / double(g.n_phi) * f.data.row(i).squaredNorm();
    } else {
        const Eigen::VectorXd& w =
            (f.repr == Repr::Modes) ? g.r_weights : g.p_weights;
        for (int i = 0; i < g.n_r; ++i) s += w[i] * f.data.row(i).squaredNorm();
    }
    return std::sqrt(s);
}

// ---- representation changes -------------------------------------------------

inline Field to_modes(const Field& f) {
    require_repr(f, Repr::Position, "to_modes");
    Field out(*f.grid, Repr::Modes);
    out.data = f.data * f.grid->ang_fwd;
    return out;
}

inline Field from_modes(const Field& f) {
    require_repr(f, Repr::Modes, "from_modes");
    Field out(*f.grid, Repr::Position);
    out.data = f.data * f.grid->ang_bwd;
    return out;
}

namespace detail {
// Apply the per-order real Hankel matrices column-by-column with the
// (-i)^|m| / (+i)^|m| phases.
inline Eigen::MatrixXcd hankel_apply(const PolarGrid& g,
                                     const std::vector<Eigen::MatrixXd>& mats,
                                     const Eigen::MatrixXcd& in, bool forward) {
    Eigen::MatrixXcd out(g.n_r, g.n_modes());
    for (int c = 0; c < g.n_modes(); ++c) {
        const int am = std::abs(g.col_mode(c));
        const Complex phase = forward ? mipow(am) : ipow(am);
        Eigen::VectorXd re = mats[am] * in.col(c).real();
        Eigen::VectorXd im = mats[am] * in.col(c).imag();
        out.col(c) = phase * (re + Complex(0.0, 1.0) * im);
    }
    return out;
}
}  // namespace detail

inline Field to_momentum(const Field& f) {
    require_repr(f, Repr::Modes, "to_momentum");
    Field out(*f.grid, Repr::MomentumModes);
    out.data = detail::hankel_apply(*f.grid, f.grid->hankel.forward, f.data, true);
    return out;
}

inline Field to_position_modes(const Field& f) {
    require_repr(f, Repr::MomentumModes, "to_position_modes");
    Field out(*f.grid, Repr::Modes);
    out.data = detail::hankel_apply(*f.grid, f.grid->hankel.backward, f.data, false);
    return out;
}

// Convert through the chain Position <-> Modes <-> MomentumModes as needed.
inline Field to_repr(const Field& f, Repr target) {
    if (f.repr == target) return f;
    switch (f.repr) {
        case Repr::Position:
            return (target == Repr::Modes) ? to_modes(f) : to_repr(to_modes(f), target);
        case Repr::Modes:
            return (target == Repr::Position) ? from_modes(f) : to_momentum(f);
        default:
            return (target == Repr::Modes) ? to_position_modes(f)
                                           : to_repr(to_position_modes(f), target);
    }
}

// Relative norm error of the Position -> Modes -> Momentum -> Modes -> Position
// cycle; the guard run before every experiment. Zero field reports 0.
inline double roundtrip_diagnostic(const Field& f) {
    Field pos = to_repr(f, Repr::Position);
    const double n0 = norm(pos);
    if (n0 == 0.0) return 0.0;
    Field cycled = from_modes(to_position_modes(to_momentum(to_modes(pos))));
    cycled.data -= pos.data;
    return norm(cycled) / n0;
}

// Largest |psi| on the outermost radial node relative to the overall maximum;
// fields and potentials must decay below ~1e-10 there for the hard disc
// truncation to be harmless.
inline double boundary_amplitude(const Field& f) {
    Field pos = to_repr(f, Repr::Position);
    const double peak = pos.data.cwiseAbs().maxCoeff();
    if (peak == 0.0) return 0.0;
    return pos.data.row(f.grid->n_r - 1).cwiseAbs().maxCoeff() / peak;
}

}  // namespace rotaprop
