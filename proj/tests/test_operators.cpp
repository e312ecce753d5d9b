#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rotaprop/operators.hpp"
#include "rotaprop/potential.hpp"
#include "rotaprop/rng.hpp"
#include "test_helpers.hpp"

using namespace rotaprop;

namespace {

Field fan_state(const PolarGrid& g, int m, double scale = 1.0) {
    Field f = field_single_mode(g, m, [&](double r) {
        return Complex(scale * std::pow(r, std::abs(m)) * std::exp(-0.5 * r * r), 0.0);
    });
    f.data /= norm(f);
    return f;
}

}  // namespace

TEST_CASE("apply_h0 phases") {
    const PolarGrid& g = testutil::grid_small();
    Field f = to_momentum(fan_state(g, 0));

    Field id = apply_h0(f, KineticSpec::nonrelativistic(1.0), 0.0);
    id.data -= f.data;
    CHECK(norm(id) == 0.0);

    // nonrelativistic: sample at p gets e^{-i t p^2/2}
    Field ev = apply_h0(f, KineticSpec::nonrelativistic(1.0), 1.0);
    for (int a : {0, g.n_r / 2, g.n_r - 1}) {
        const double p = g.p_nodes[a];
        const Complex expect =
            f.data(a, g.mode_col(0)) *
            Complex(std::cos(p * p / 2), -std::sin(p * p / 2));
        CHECK(std::abs(ev.data(a, g.mode_col(0)) - expect) < 1e-14);
    }
    CHECK(std::abs(norm(ev) - norm(f)) < 1e-13);

    // power law beta = 3: h(1) = 1/3, so t = 3 gives phase e^{-i}
    KineticSpec pl = KineticSpec::power_law(3.0);
    CHECK(std::abs(pl.h(1.0) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(pl.h(2.0) - 8.0 / 3.0) < 1e-15);

    CHECK_THROWS_AS(apply_h0(fan_state(g, 0), pl, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(KineticSpec::power_law(1.0), std::invalid_argument);
    CHECK_THROWS_AS(KineticSpec::nonrelativistic(0.0), std::invalid_argument);
}

TEST_CASE("rotation group laws") {
    const PolarGrid& g = testutil::grid_small();
    StateRng rng(17);
    Field psi = random_band_limited(g, 5, 1.0, rng);

    Field full = apply_rotation(psi, 2.0 * pi_v);
    full.data -= psi.data;
    CHECK(norm(full) < 1e-13);

    Field m1 = fan_state(g, 1);
    Field quarter = apply_rotation(m1, pi_v / 2.0);
    // mode 1 rotated by pi/2 picks up e^{-i pi/2} = -i
    Field expect = m1;
    expect.data *= Complex(0.0, -1.0);
    quarter.data -= expect.data;
    CHECK(norm(quarter) < 1e-14);

    Field ab = apply_rotation(apply_rotation(psi, 0.7), 1.1);
    Field once = apply_rotation(psi, 1.8);
    ab.data -= once.data;
    CHECK(norm(ab) < 1e-13);
    CHECK(std::abs(norm(apply_rotation(psi, 0.37)) - 1.0) < 1e-12);
}

TEST_CASE("rotating a sampled offset Gaussian by pi recenters it") {
    const PolarGrid& g = testutil::grid_sweep();
    PotentialSpec spec = PotentialSpec::offset_gaussian(1.0, 1.0, 1.0);
    Field sampled = field_from_position(g, [&](double r, double phi) {
        return Complex(spec.eval(r, phi), 0.0);
    });
    Field rotated = from_modes(apply_rotation(to_modes(sampled), pi_v));
    // the rotated sample is the Gaussian centered at -d e1
    Field target = field_from_position(g, [&](double r, double phi) {
        const double dx = r * std::cos(phi) + 1.0;
        const double dy = r * std::sin(phi);
        return Complex(std::exp(-(dx * dx + dy * dy)), 0.0);
    });
    rotated.data -= target.data;
    CHECK(norm(rotated) < 1e-8 * norm(target));
}

TEST_CASE("J and projections") {
    const PolarGrid& g = testutil::grid_small();
    Field m3 = fan_state(g, 3);

    Field j = apply_J(m3);
    Field expect = m3;
    expect.data *= 3.0;
    j.data -= expect.data;
    CHECK(norm(j) < 1e-14);

    Field p3 = project(m3, 3);
    p3.data -= m3.data;
    CHECK(norm(p3) < 1e-14);
    CHECK(norm(project(m3, 2)) == 0.0);

    CHECK_THROWS_AS(project(m3, g.max_mode + 1), std::invalid_argument);

    StateRng rng(29);
    Field psi = random_band_limited(g, g.max_mode, 1.0, rng);

    // completeness: sum of projections recovers psi
    Field sum(g, Repr::Modes);
    for (int jj = -g.max_mode; jj <= g.max_mode; ++jj)
        sum.data += project(psi, jj).data;
    sum.data -= psi.data;
    CHECK(norm(sum) < 1e-12);

    // idempotent, orthogonal, self-adjoint
    Field pp = project(project(psi, 4), 4);
    pp.data -= project(psi, 4).data;
    CHECK(norm(pp) < 1e-14);
    CHECK(norm(project(project(psi, 4), -2)) < 1e-14);
    Field phi = random_band_limited(g, g.max_mode, 0.9, rng);
    CHECK(std::abs(inner(project(psi, 2), phi) - inner(psi, project(phi, 2))) < 1e-13);

    // J block-diagonalizes: J P_j = j P_j
    Field jp = apply_J(project(psi, 5));
    Field jp2 = project(psi, 5);
    jp2.data *= 5.0;
    jp.data -= jp2.data;
    CHECK(norm(jp) < 1e-14);
}

TEST_CASE("decompose_potential: rotationally invariant and fan") {
    const PolarGrid& g = testutil::grid_sweep();

    AngularPotential inv =
        decompose_potential(PotentialSpec::offset_gaussian(0.7, 0.0, 1.3), g);
    CHECK(inv.sup_w < 1e-13);
    for (int c = 0; c < g.n_modes(); ++c) {
        if (g.col_mode(c) == 0) continue;
        CHECK(inv.v.col(c).cwiseAbs().maxCoeff() < 1e-14);
    }
    for (int i = 0; i < g.n_r; ++i)
        CHECK(std::abs(inv.vbar[i] - 0.7 * std::exp(-g.r_nodes[i] * g.r_nodes[i] /
                                                    (1.3 * 1.3))) < 1e-12);

    PotentialSpec fan = PotentialSpec::fan(0.5, 1.5, 3);
    AngularPotential af = decompose_potential(fan, g);
    CHECK(af.vbar.cwiseAbs().maxCoeff() < 1e-14);
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        if (std::abs(m) == 3) {
            for (int i = 0; i < g.n_r; ++i)
                CHECK(std::abs(af.v(i, c) -
                               Complex(0.5 * fan.fan_envelope(g.r_nodes[i]), 0.0)) <
                      1e-12);
        } else {
            CHECK(af.v.col(c).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
}

TEST_CASE("decompose_potential: offset Gaussian average matches Bessel form") {
    // Vbar(r) = e^{-(r^2+1)} I0(2r) for A = d = sigma = 1; independently also

    // checked against direct angular quadrature of V0(R(phi)^{-1} x).
    const PolarGrid& g = testutil::grid(72, 80, 10.0, 10.0);
    AngularPotential ap =
        decompose_potential(PotentialSpec::offset_gaussian(1.0, 1.0, 1.0), g);
    for (int i = 0; i < g.n_r; ++i) {
        const double r = g.r_nodes[i];
        const double expect = std::exp(-(r * r + 1.0)) * std::cyl_bessel_i(0.0, 2.0 * r);
        CHECK(std::abs(ap.vbar[i] - expect) < 1e-10);
    }
    // angular quadrature oracle at a few radii
    for (int i : {3, g.n_r / 2, g.n_r - 20}) {
        const double r = g.r_nodes[i];
        double acc = 0.0;
        const int nq = 512;
        for (int k = 0; k < nq; ++k) {
            const double phi = 2.0 * pi_v * k / nq;
            const double dx = r * std::cos(phi) - 1.0, dy = r * std::sin(phi);
            acc += std::exp(-(dx * dx + dy * dy));
        }
        acc /= nq;
        CHECK(std::abs(ap.vbar[i] - acc) < 1e-12);
    }
    // conjugate symmetry of the coefficients
    for (int m = 1; m <= g.max_mode; ++m) {
        Eigen::VectorXcd d =
            ap.coeff(-m) - ap.coeff(m).conjugate();
        CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("decompose_potential rejects overfull angular content") {
    // harmonic above M/2 must be rejected at decomposition
    const PolarGrid& g = testutil::grid_small();  // M = 7
    CHECK_THROWS_AS(decompose_potential(PotentialSpec::fan(0.5, 1.5, 5), g),
                    std::invalid_argument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(g.n_r, g.n_phi);
    bad(2, 3) = std::nan("");
    CHECK_THROWS_AS(decompose_potential(PotentialSpec::sampled(bad), g),
                    std::invalid_argument);
}

TEST_CASE("potential_at_time: periodicity and rotation") {
    const PolarGrid& g = testutil::grid(72, 80, 10.0, 10.0);
    PotentialSpec spec = PotentialSpec::offset_gaussian(0.8, 1.0, 1.2);
    AngularPotential ap = decompose_potential(spec, g);
    const double omega = 3.0;

    Eigen::MatrixXd v0 = potential_at_time(ap, omega, 0.0);
    for (int i = 0; i < g.n_r; ++i)
        for (int k = 0; k < g.n_phi; ++k)
            CHECK(std::abs(v0(i, k) - spec.eval(g.r_nodes[i], g.phi_nodes[k])) < 1e-10);

    Eigen::MatrixXd vper = potential_at_time(ap, omega, 2.0 * pi_v / omega);
    CHECK((vper - v0).cwiseAbs().maxCoeff() < 1e-10);

    // omega t = pi/2 recenters the Gaussian at d e2
    Eigen::MatrixXd vq = potential_at_time(ap, omega, pi_v / (2.0 * omega));
    for (int i = 0; i < g.n_r; i += 7)
        for (int k = 0; k < g.n_phi; k += 5) {
            const double x = g.r_nodes[i] * std::cos(g.phi_nodes[k]);
            const double y = g.r_nodes[i] * std::sin(g.phi_nodes[k]);
            const double expect =
                0.8 * std::exp(-((x * x + (y - 1.0) * (y - 1.0)) / (1.2 * 1.2)));
            CHECK(std::abs(vq(i, k) - expect) < 1e-10);
        }

    // exact splitting: Vbar + W_{omega t} = V_{omega t}
    Eigen::MatrixXd w = remainder_at_time(ap, omega, 0.37);
    Eigen::MatrixXd vt = potential_at_time(ap, omega, 0.37);
    Eigen::MatrixXd recon = w;
    recon.colwise() += ap.vbar;
    CHECK((recon - vt).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("W_time_integral closed form") {
    const PolarGrid& g = testutil::grid_sweep();
    AngularPotential ap = decompose_potential(PotentialSpec::fan(0.5, 1.5, 3), g);
    const double omega = 5.0;

    // full period and empty interval vanish identically
    CHECK(W_time_integral(ap, omega, 0.3, 0.3 + 2.0 * pi_v / omega)
              .cwiseAbs()
              .maxCoeff() < 1e-13);
    CHECK(W_time_integral(ap, omega, 0.4, 0.4).cwiseAbs().maxCoeff() < 1e-15);

    // Gauss-Legendre time quadrature oracle
    const double t1 = 0.13, t2 = 0.61;
    QuadRule q = gauss_legendre(64, t1, t2);
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(g.n_r, g.n_phi);
    for (int k = 0; k < 64; ++k)
        oracle += q.weights[k] * remainder_at_time(ap, omega, q.nodes[k]);
    Eigen::MatrixXd closed = W_time_integral(ap, omega, t1, t2);
    CHECK((closed - oracle).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(W_time_integral(ap, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("sup_norm_W") {
    const PolarGrid& g = testutil::grid_sweep();

    AngularPotential inv =
        decompose_potential(PotentialSpec::offset_gaussian(0.7, 0.0, 1.3), g);
    CHECK(inv.sup_w < 1e-13);

    // fan envelope peaks exactly at the amplitude
    AngularPotential fan = decompose_potential(PotentialSpec::fan(0.5, 1.5, 3), g);
    CHECK(std::abs(fan.sup_w - 0.5) < 1e-4);
    CHECK(fan.sup_w <= 0.5 + 1e-12);

    // oversampled search upper-bounds the grid samples
    AngularPotential og =
        decompose_potential(PotentialSpec::offset_gaussian(1.0, 1.0, 1.0),
                            testutil::grid(72, 80, 10.0, 10.0));
    Eigen::MatrixXd wg = remainder_at_time(og, 1.0, 0.0);
    CHECK(og.sup_w >= wg.cwiseAbs().maxCoeff() - 1e-12);
    CHECK(og.sup_w > 0.1);
}

TEST_CASE("verify_diag_offdiag") {
    const PolarGrid& g = testutil::grid_sweep();
    StateRng rng(41);

    AngularPotential inv =
        decompose_potential(PotentialSpec::offset_gaussian(0.7, 0.0, 1.3), g);
    Field psi = random_band_limited(g, 4, 1.0, rng);
    auto [comm, offdiag] = verify_diag_offdiag(inv, psi, 2);
    CHECK(comm < 1e-10);
    CHECK(offdiag < 1e-12);

    AngularPotential fan = decompose_potential(PotentialSpec::fan(0.5, 1.5, 3), g);
    Field m2 = fan_state(g, 2);
    auto [comm2, offdiag2] = verify_diag_offdiag(fan, m2, 2);
    CHECK(comm2 < 1e-10);
    CHECK(offdiag2 < 1e-10);

    // W sends mode 2 to modes -1 and 5 only (explicit mode bookkeeping)
    Field w2 = to_modes(multiply_position(from_modes(m2),
                                          remainder_at_time(fan, 1.0, 0.0)));
    for (int c = 0; c < g.n_modes(); ++c) {
        const int m = g.col_mode(c);
        if (m == -1 || m == 5) {
            CHECK(w2.data.col(c).cwiseAbs().maxCoeff() > 1e-6);
        } else {
            CHECK(w2.data.col(c).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    Field zero(g, Repr::Modes);
    auto [c0, o0] = verify_diag_offdiag(fan, zero, 1);
    CHECK(c0 == 0.0);
    CHECK(o0 == 0.0);
}

TEST_CASE("conjugation identity: V_{omega t} = R(omega t) V0 R(omega t)^*") {
    const PolarGrid& g = testutil::grid(72, 80, 10.0, 10.0);
    AngularPotential ap =
        decompose_potential(PotentialSpec::offset_gaussian(0.8, 1.0, 1.2), g);
    StateRng rng(53);
    Field psi = random_band_limited(g, 5, 1.0, rng);
    const double omega = 4.0, t = 0.29;

    Field lhs = to_modes(
        multiply_position(from_modes(psi), potential_at_time(ap, omega, t)));
    Field inner_rot = apply_rotation(psi, -omega * t);
    Field v0psi = to_modes(
        multiply_position(from_modes(inner_rot), potential_at_time(ap, omega, 0.0)));
    Field rhs = apply_rotation(v0psi, omega * t);
    lhs.data -= rhs.data;
    CHECK(norm(lhs) < 1e-8);
}

TEST_CASE("rotation commutes with h0 and with Vbar multiplication") {
    const PolarGrid& g = testutil::grid_sweep();
    StateRng rng(61);
    Field psi = random_band_limited(g, 5, 1.0, rng);
    const double th = 0.83;
    KineticSpec kin = KineticSpec::nonrelativistic(1.0);

    Field a = to_position_modes(apply_h0(to_momentum(apply_rotation(psi, th)), kin, 0.7));
    Field b = apply_rotation(
        to_position_modes(apply_h0(to_momentum(psi), kin, 0.7)), th);
    a.data -= b.data;
    CHECK(norm(a) < 1e-10);

    AngularPotential inv =
        decompose_potential(PotentialSpec::offset_gaussian(0.7, 0.0, 1.3), g);
    Eigen::MatrixXd vbar_pos(g.n_r, g.n_phi);
    vbar_pos.colwise() = inv.vbar;
    Field c = to_modes(multiply_position(from_modes(apply_rotation(psi, th)), vbar_pos));
    Field d = apply_rotation(to_modes(multiply_position(from_modes(psi), vbar_pos)), th);
    c.data -= d.data;
    CHECK(norm(c) < 1e-10);
}
