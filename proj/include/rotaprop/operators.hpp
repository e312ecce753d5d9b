#pragma once

// Kinetic-energy families and the exactly-diagonal operators: rotations,
// angular momentum, and the mode projections. In the mode representations
// R(theta) multiplies mode m by e^{-i m theta} and J by m, so everything
// here is a diagonal phase or selection; unitarity holds to rounding.

#include <cmath>
#include <stdexcept>

#include "rotaprop/field.hpp"

namespace rotaprop {

struct KineticSpec {
    enum class Kind { NonRelativistic, PowerLaw };
    Kind kind = Kind::NonRelativistic;
    double mass = 1.0;  // NonRelativistic: h(p) = p^2 / (2 mass)
    double beta = 2.0;  // PowerLaw: h(p) = p^beta / beta, beta > 1

    static KineticSpec nonrelativistic(double m) {
        if (!(m > 0.0)) throw std::invalid_argument("KineticSpec: mass must be > 0");
        return {Kind::NonRelativistic, m, 2.0};
    }
    static KineticSpec power_law(double beta) {
        if (!(beta > 1.0))
            throw std::invalid_argument("KineticSpec: beta must be > 1 (h' unbounded)");
        return {Kind::PowerLaw, 1.0, beta};
    }

    double h(double p) const {
        return kind == Kind::NonRelativistic ? p * p / (2.0 * mass)
                                             : std::pow(p, beta) / beta;
    }
};

// e^{-i t H0} on momentum modes: samplewise phase e^{-i t h(p_a)}.
inline Field apply_h0(const Field& f, const KineticSpec& kin, double t) {
    require_repr(f, Repr::MomentumModes, "apply_h0");
    Field out = f;
    const PolarGrid& g = *f.grid;
    for (int a = 0; a < g.n_r; ++a) {
        const double ph = -t * kin.h(g.p_nodes[a]);
        out.data.row(a) *= Complex(std::cos(ph), std::sin(ph));
    }
    return out;
}

// R(theta) = e^{-i theta J}: mode m picks up e^{-i m theta}. Valid in either
// mode representation (rotations commute with the radial transforms).
inline Field apply_rotation(const Field& f, double theta) {
    if (f.repr == Repr::Position)
        throw std::invalid_argument("apply_rotation: convert to a mode representation");
    Field out = f;
    const PolarGrid& g = *f.grid;
    for (int c = 0; c < g.n_modes(); ++c) {
        const double ph = -g.col_mode(c) * theta;
        out.data.col(c) *= Complex(std::cos(ph), std::sin(ph));
    }
    return out;
}

// J = -i d/dphi: multiplication by m.
inline Field apply_J(const Field& f) {
    if (f.repr == Repr::Position)
        throw std::invalid_argument("apply_J: convert to a mode representation");
    Field out = f;
    for (int c = 0; c < f.grid->n_modes(); ++c)
        out.data.col(c) *= double(f.grid->col_mode(c));
    return out;
}

// Orthogonal projection onto the J-eigenspace of eigenvalue j.
inline Field project(const Field& f, int j) {
    if (f.repr == Repr::Position)
        throw std::invalid_argument("project: convert to a mode representation");
    if (std::abs(j) > f.grid->max_mode)
        throw std::invalid_argument("project: |j| exceeds max retained mode");
    Field out(*f.grid, f.repr);
    out.data.col(f.grid->mode_col(j)) = f.data.col(f.grid->mode_col(j));
    return out;
}

// Pointwise multiplication by a real position multiplier.
inline Field multiply_position(const Field& f, const Eigen::MatrixXd& mult) {
    require_repr(f, Repr::Position, "multiply_position");
    Field out = f;
    out.data.array() *= mult.array();
    return out;
}

// Pointwise e^{-i s mult} with a real multiplier: exact unitary.
inline Field phase_position(const Field& f, const Eigen::MatrixXd& mult, double s) {
    require_repr(f, Repr::Position, "phase_position");
    Field out = f;
    for (int i = 0; i < f.grid->n_r; ++i)
        for (int k = 0; k < f.grid->n_phi; ++k) {
            const double ph = -s * mult(i, k);
            out.data(i, k) *= Complex(std::cos(ph), std::sin(ph));
        }
    return out;
}

}  // namespace rotaprop
