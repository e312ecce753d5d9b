#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rotaprop/resolvent_lab.hpp"
#include "rotaprop/rng.hpp"
#include "test_helpers.hpp"

using namespace rotaprop;

namespace {

const PolarGrid& rgrid() { return testutil::grid(40, 18, 8.0, 8.0); }

AngularPotential fan3() {
    return decompose_potential(PotentialSpec::fan(0.5, 1.5, 3), rgrid());
}

AngularPotential invariant() {
    return decompose_potential(PotentialSpec::offset_gaussian(0.6, 0.0, 1.3), rgrid());
}

KineticSpec kin() { return KineticSpec::nonrelativistic(1.0); }

Eigen::VectorXcd random_vec(int n, StateRng& rng) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.complex_normal();
    return v;
}

}  // namespace

TEST_CASE("build_truncation structure") {
    const PolarGrid& g = rgrid();
    AngularPotential inv = invariant();
    AngularPotential fan = fan3();

    CHECK_THROWS_AS(build_truncation(g, kin(), fan, 4.0, 0, 0.0, 0.1),
                    std::invalid_argument);

    // W0 = 0: block-diagonal in m
    TruncatedOperator noW = build_truncation(g, kin(), inv, 4.0, 0, 2.0, 0.3);
    for (int c = 0; c < g.n_modes(); ++c)
        for (int c2 = 0; c2 < g.n_modes(); ++c2) {
            if (c == c2) continue;
            CHECK(noW.mat.block(c * g.n_r, c2 * g.n_r, g.n_r, g.n_r)
                      .cwiseAbs()
                      .maxCoeff() < 1e-14);
        }

    // fan K=3 couples only |m - m'| = 3
    TruncatedOperator wf = build_truncation(g, kin(), fan, 4.0, 0, 2.0, 0.3);
    for (int c = 0; c < g.n_modes(); ++c)
        for (int c2 = 0; c2 < g.n_modes(); ++c2) {
            const int dm = std::abs(g.col_mode(c) - g.col_mode(c2));
            const double mx =
                wf.mat.block(c * g.n_r, c2 * g.n_r, g.n_r, g.n_r).cwiseAbs().maxCoeff();
            if (dm == 3)
                CHECK(mx > 1e-8);
            else if (dm != 0)
                CHECK(mx < 1e-13);
        }

    // periodicity in phi
    TruncatedOperator w0 = build_truncation(g, kin(), fan, 4.0, 0, 2.0, 0.0);
    TruncatedOperator w2pi = build_truncation(g, kin(), fan, 4.0, 0, 2.0, 2.0 * pi_v);
    CHECK((w0.mat - w2pi.mat).cwiseAbs().maxCoeff() < 1e-12);

    CHECK(hermiticity_residual(wf) < 1e-10);

    // projecting the (m,m) blocks of Vbar + W recovers Vbar exactly: the fan
    // part is strictly off-diagonal, so the diagonal blocks of the combined
    // potential match the invariant-only truncation
    AngularPotential both = decompose_potential(
        PotentialSpec::sampled(potential_at_time(fan, 1.0, 0.0) +
                               potential_at_time(inv, 1.0, 0.0)),
        g);
    TruncatedOperator full = build_truncation(g, kin(), both, 4.0, 0, 2.0, 0.3);
    TruncatedOperator vbar_only = build_truncation(g, kin(), inv, 4.0, 0, 2.0, 0.3);
    for (int c = 0; c < g.n_modes(); ++c) {
        Eigen::MatrixXcd diag_blk = full.mat.block(c * g.n_r, c * g.n_r, g.n_r, g.n_r);
        CHECK((diag_blk - vbar_only.mat.block(c * g.n_r, c * g.n_r, g.n_r, g.n_r))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
}

TEST_CASE("resolvent_apply") {
    const PolarGrid& g = rgrid();
    AngularPotential fan = fan3();
    TruncatedOperator op = build_truncation(g, kin(), fan, 4.0, 0, 2.0, 0.7);

    CHECK(resolvent_apply(op, Eigen::VectorXcd::Zero(op.dim())).norm() == 0.0);

    // diagonal case: closed form componentwise
    AngularPotential zero = decompose_potential(
        PotentialSpec::sampled(Eigen::MatrixXd::Zero(g.n_r, g.n_phi)), g);
    TruncatedOperator d = build_truncation(g, kin(), zero, 3.0, 1, 2.0, 0.0);
    StateRng rng(7);
    Eigen::VectorXcd rhs = random_vec(d.dim(), rng);
    Eigen::VectorXcd x = resolvent_apply(d, rhs);
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        for (int a = 0; a < g.n_r; ++a) {
            const Complex denom(kin().h(g.p_nodes[a]) - 3.0 * m + 3.0 * 1, -2.0);
            CHECK(std::abs(x[c * g.n_r + a] - rhs[c * g.n_r + a] / denom) < 1e-12);
        }
    }

    // Hermitian real part: ||(A - i zeta) x||^2 = ||A x||^2 + zeta^2 ||x||^2
    Eigen::VectorXcd y = random_vec(op.dim(), rng);
    const double lhs2 = ((op.mat * y) - Complex(0.0, op.zeta) * y).squaredNorm();
    const double rhs2 = (op.mat * y).squaredNorm() + op.zeta * op.zeta * y.squaredNorm();
    CHECK(std::abs(lhs2 - rhs2) < 1e-10 * rhs2);

    // solver residual contract
    Eigen::MatrixXcd shifted = op.mat;
    shifted.diagonal().array() -= Complex(0.0, op.zeta);
    Eigen::VectorXcd sol = resolvent_apply(op, rhs);
    CHECK((shifted * sol - rhs).norm() < 1e-10 * rhs.norm());
}

TEST_CASE("resolvent identity") {
    const PolarGrid& g = rgrid();
    AngularPotential fan = fan3();
    AngularPotential inv = invariant();
    TruncatedOperator A = build_truncation(g, kin(), fan, 4.0, 0, 2.0, 0.4);
    TruncatedOperator B = build_truncation(g, kin(), inv, 4.0, 0, 2.0, 0.4);

    StateRng rng(11);
    Eigen::VectorXcd phi = random_vec(A.dim(), rng);
    // (A - iz)^{-1} - (B - iz)^{-1} = (A - iz)^{-1} (B - A) (B - iz)^{-1}
    Eigen::VectorXcd lhs = resolvent_apply(A, phi) - resolvent_apply(B, phi);
    Eigen::VectorXcd rhs =
        resolvent_apply(A, (B.mat - A.mat) * resolvent_apply(B, phi));
    CHECK((lhs - rhs).norm() < 1e-9 * phi.norm());
}

TEST_CASE("limres1: exact on the ell block, O(1/omega) off it") {
    const PolarGrid& g = rgrid();
    AngularPotential inv = invariant();
    std::vector<double> omegas{8, 16, 32, 64, 128};

    Field phi_ell = mode_gaussian(g, 0, 1.0);
    auto rows_eq = limres1_check(g, kin(), inv.vbar, 0, 2.0, omegas, phi_ell);
    for (const auto& r : rows_eq) CHECK(r.deviation < 1e-12);

    Field phi_j = mode_gaussian(g, 1, 1.0);
    double mu_max = 0.0;
    auto rows = limres1_check(g, kin(), inv.vbar, 0, 2.0, omegas, phi_j, &mu_max);
    CHECK(mu_max > 1.0);

    // slope of log(deviation) against log(omega) near -1
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rows) {
        const double x = std::log(r.omega), y = std::log(r.deviation);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const int n = int(rows.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope < -0.85);
    CHECK(slope > -1.15);

    // envelope 1/(omega - mu_max - |zeta|) where it is meaningful
    for (const auto& r : rows)
        if (r.omega > mu_max + 2.0) CHECK(r.deviation <= r.envelope);

    // deviation halves per omega doubling
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].deviation < 0.7 * rows[i - 1].deviation);
}

TEST_CASE("resolv_limit_check") {
    const PolarGrid& g = rgrid();
    AngularPotential fan = fan3();
    const double zeta = 2.0 * std::max(1.0, fan.sup_w);

    CHECK_THROWS_AS(resolv_limit_check(g, kin(), fan, 0, 0.1, {8.0}, {0.0},
                                       mode_gaussian(g, 0, 1.0)),
                    std::invalid_argument);

    Field phi = mode_gaussian(g, 0, 1.0);
    std::vector<double> omegas{8, 32, 128};
    std::vector<double> phis{0.0, 1.1, 2.2, 3.3, 4.4, 5.5};
    auto rows = resolv_limit_check(g, kin(), fan, 0, zeta, omegas, phis, phi);

    // decay of the max over phi by at least 4x over the 16x range
    auto max_at = [&](double om) {
        double m = 0.0;
        for (const auto& r : rows)
            if (r.omega == om) m = std::max(m, r.deviation);
        return m;
    };
    CHECK(max_at(128) < max_at(8) / 4.0);

    // phi-uniformity at the largest omega
    double mx = 0.0, mean = 0.0;
    int cnt = 0;
    for (const auto& r : rows)
        if (r.omega == 128) {
            mx = std::max(mx, r.deviation);
            mean += r.deviation;
            ++cnt;
        }
    mean /= cnt;
    CHECK(mx < 2.0 * mean);

    // phi and phi + 2 pi give identical rows
    auto again = resolv_limit_check(g, kin(), fan, 0, zeta, {32.0},
                                    {0.7, 0.7 + 2.0 * pi_v}, phi);
    CHECK(std::abs(again[0].deviation - again[1].deviation) < 1e-12);

    // W0 = 0 reduces to the block-diagonal lemma rows
    AngularPotential inv = invariant();
    auto red = resolv_limit_check(g, kin(), inv, 0, 2.0, {16.0}, {0.0},
                                  mode_gaussian(g, 1, 1.0));
    auto lem = limres1_check(g, kin(), inv.vbar, 0, 2.0, {16.0},
                             mode_gaussian(g, 1, 1.0));
    CHECK(std::abs(red[0].deviation - lem[0].deviation) < 1e-9);
}

TEST_CASE("first Neumann term converges uniformly over phi") {
    const PolarGrid& g = rgrid();
    AngularPotential fan = fan3();
    const double zeta = 2.0;
    // mixed state: for P_ell-pure states the W-free resolvent equals the limit
    // exactly at every omega, so the Neumann term would be identically zero
    StateRng srng(19);
    Field phi_state = random_band_limited(g, 3, 1.0, srng);
    Eigen::VectorXcd rhs = field_to_vec(phi_state);

    // limit vector (H0+Vbar-izeta)^{-1} P_0 Phi
    Eigen::VectorXcd lim = Eigen::VectorXcd::Zero(g.n_r * g.n_modes());
    lim.segment(g.mode_col(0) * g.n_r, g.n_r) = shifted_block_solve(
        mode_block(g, kin(), fan.vbar, 0), 0.0, zeta,
        rhs.segment(g.mode_col(0) * g.n_r, g.n_r));

    AngularPotential zero = decompose_potential(
        PotentialSpec::sampled(Eigen::MatrixXd::Zero(g.n_r, g.n_phi)), g);

    double worst_small = 0.0, worst_large = 0.0;
    for (double phi : {0.0, 1.3, 2.9, 4.7}) {
        TruncatedOperator w_op = build_truncation(g, kin(), fan, 1.0, 0, zeta, phi);
        Eigen::MatrixXcd W = w_op.mat;
        // subtract the W-free part to isolate the W matrix
        TruncatedOperator base = build_truncation(g, kin(), zero, 1.0, 0, zeta, phi);
        Eigen::MatrixXcd vb = build_truncation(g, kin(), fan, 1.0, 0, zeta, phi).mat;
        W = vb - base.mat;
        // remove the Vbar blocks (diagonal in m) to keep W only
        for (int c = 0; c < g.n_modes(); ++c)
            W.block(c * g.n_r, c * g.n_r, g.n_r, g.n_r).setZero();

        for (double omega : {8.0, 128.0}) {
            // (H_omega + omega ell + Vbar - i zeta)^{-1} Phi, block-diagonal
            Eigen::VectorXcd x = Eigen::VectorXcd::Zero(g.n_r * g.n_modes());
            for (int c = 0; c < g.n_modes(); ++c) {
                const int m = g.col_mode(c);
                Eigen::VectorXcd seg = rhs.segment(c * g.n_r, g.n_r);
                if (seg.cwiseAbs().maxCoeff() < 1e-16) continue;
                x.segment(c * g.n_r, g.n_r) = shifted_block_solve(
                    mode_block(g, kin(), fan.vbar, m), omega * (0 - m), zeta, seg);
            }
            const double term = (W * x - W * lim).norm();
            if (omega == 8.0)
                worst_small = std::max(worst_small, term);
            else
                worst_large = std::max(worst_large, term);
        }
    }
    CHECK(worst_large < worst_small / 4.0);
    CHECK(worst_large < 0.05);
}
