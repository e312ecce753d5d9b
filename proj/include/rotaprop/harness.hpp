#pragma once

// Drivers wiring the experiment configuration to the modules and the CSV
// contracts. One driver per CLI subcommand; each returns the outcomes that
// feed the run manifest and the process exit code. Row computations are
// scheduled through parallel_for and aggregated by index, so CSVs are
// bit-identical for any worker count.

#include <cmath>

#include "rotaprop/bounds_lab.hpp"
#include "rotaprop/config.hpp"
#include "rotaprop/experiments.hpp"
#include "rotaprop/resolvent_lab.hpp"
#include "rotaprop/runner.hpp"
#include "rotaprop/table.hpp"

namespace rotaprop {

namespace harness_detail {

inline RunStatus worse(RunStatus a, RunStatus b) { return a > b ? a : b; }

inline double entry_num(const nlohmann::json& e, const char* key, double dflt) {
    return e.contains(key) ? e[key].get<double>() : dflt;
}
inline int entry_int(const nlohmann::json& e, const char* key, int dflt) {
    return e.contains(key) ? e[key].get<int>() : dflt;
}

}  // namespace harness_detail

// ---- propagate --------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_propagate(ExperimentConfig& cfg,
                                                    const std::string& out_dir,
                                                    int /*workers*/) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("propagate")) return outcomes;
    Table t;
    t.columns = {"scenario", "scheme",  "state_id", "norm_in",
                 "norm_out", "drift",   "substeps", "factors",
                 "max_taylor_order"};
    ExperimentOutcome out;
    out.name = "propagate";
    StopWatch sw;
    for (const auto& e : cfg.raw["experiments"]["propagate"]) {
        const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
        guard_scenario(sc);
        SchemeConfig scheme;
        const std::string kind = e["scheme"].get<std::string>();
        scheme.kind = kind == "reference"             ? SchemeConfig::Kind::Reference
                      : kind == "trotter_inertial"    ? SchemeConfig::Kind::TrotterInertial
                      : kind == "averaged_plus_w"     ? SchemeConfig::Kind::AveragedPlusW
                      : kind == "u_tilde_product"     ? SchemeConfig::Kind::UTildeProduct
                      : kind == "u_lin_tilde_product" ? SchemeConfig::Kind::ULinearTildeProduct
                                                      : SchemeConfig::Kind::AveragedOnly;
        scheme.n = entry_int(e, "n", 4);
        scheme.n_sub = entry_int(e, "n_sub", 256);
        scheme.k_quad = entry_int(e, "k_quad", 8);
        scheme.taylor_tol = entry_num(e, "taylor_tol", 1e-12);
        scheme.omega = sc.omega;
        scheme.T = sc.T;
        scheme.t0 = sc.t0;
        scheme.kinetic = sc.kinetic;
        scheme.potential = sc.potential;
        for (std::size_t si = 0; si < sc.states.size(); ++si) {
            const double n_in = norm(sc.states[si]);
            PropagationResult r = propagate(sc.states[si], scheme);
            t.add_row({sc.name, kind, sc.state_ids[si], n_in, norm(r.state),
                       r.norm_drift, (long long)r.substeps, (long long)r.factors,
                       (long long)r.max_taylor_order});
        }
    }
    const std::string path = out_dir + "/propagate.csv";
    emit(t, path);
    out.outputs = {path};
    out.wall_ms = sw.ms();
    outcomes.push_back(std::move(out));
    return outcomes;
}

// ---- sweep-omega (+ covariance + riemann-lebesgue) ---------------------------------

inline std::vector<ExperimentOutcome> run_sweep_omega(ExperimentConfig& cfg,
                                                      const std::string& out_dir,
                                                      int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    const auto& ex = cfg.raw["experiments"];

    if (ex.contains("sweep_omega")) {
        Table t, tc;
        t.columns = {"scenario", "omega", "state_id", "deviation", "slack", "pass"};
        t.slope_pairs = {{"omega", "deviation"}};
        tc.columns = {"scenario", "omega", "state_id", "t0_a", "t0_b", "residual"};
        for (const auto& e : ex["sweep_omega"]) {
            ExperimentOutcome out;
            const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
            out.name = "sweep_omega[" + sc.name + "]";
            StopWatch sw;
            SweepOmegaOptions opt;
            opt.omegas = e["omegas"].get<std::vector<double>>();
            opt.n_sub_rate = entry_num(e, "n_sub_rate", 32.0);
            opt.n_sub_min = entry_int(e, "n_sub_min", 256);
            opt.n_sub_avg = entry_int(e, "n_sub_avg", 512);
            opt.t0_check = entry_num(e, "t0_check", 0.37);
            const bool control = e.contains("control") && e["control"].get<bool>();

            std::vector<SweepOmegaRow> rows;
            try {
                // precompute per-state limits serially, then parallel cells
                guard_scenario(sc);
                const int n_states = int(sc.states.size());
                const int n_om = int(opt.omegas.size());
                std::vector<Field> limits(n_states);
                std::vector<double> sc_avg(n_states);
                for (int si = 0; si < n_states; ++si) {
                    limits[si] = evolve_averaged(sc.states[si], sc.T, opt.n_sub_avg,
                                                 sc.kinetic, sc.potential->vbar);
                    sc_avg[si] = field_dist(
                        limits[si],
                        evolve_averaged(sc.states[si], sc.T, opt.n_sub_avg / 2,
                                        sc.kinetic, sc.potential->vbar));
                }
                rows.resize(std::size_t(n_states) * n_om);
                parallel_for(n_states * n_om, workers, [&](int idx) {
                    const int si = idx / n_om, oi = idx % n_om;
                    const double omega = opt.omegas[oi];
                    SchemeConfig c;
                    c.omega = omega;
                    c.T = sc.T;
                    c.t0 = sc.t0;
                    c.kinetic = sc.kinetic;
                    c.potential = sc.potential;
                    const int n_sub = omega_substeps(opt, omega, sc.T);
                    const Field& psi = sc.states[si];
                    Field u = evolve_reference(psi, sc.t0, sc.t0 + sc.T, c, n_sub);
                    Field uh = evolve_reference(psi, sc.t0, sc.t0 + sc.T, c, n_sub / 2);
                    SweepOmegaRow row;
                    row.scenario = sc.name;
                    row.state_id = sc.state_ids[si];
                    row.omega = omega;
                    row.deviation = field_dist(u, limits[si]);
                    const double sr = field_dist(u, uh);
                    row.slack = std::max(10.0 * (sr + sc_avg[si]), 1e-8);
                    row.under_resolved = row.deviation > 10.0 * row.slack
                                             ? false
                                             : row.slack > 0.5 * row.deviation;
                    if (oi == 0 || oi == n_om - 1) {
                        const double t0c = opt.t0_check;
                        Field lhs = evolve_reference(psi, t0c, t0c + sc.T, c, n_sub);
                        Field rhs = apply_rotation(
                            evolve_reference(
                                apply_rotation(to_repr(psi, Repr::Modes), -omega * t0c),
                                0.0, sc.T, c, n_sub),
                            omega * t0c);
                        row.cov_residual = field_dist(lhs, rhs);
                    }
                    rows[idx] = std::move(row);
                });
            } catch (const std::exception& err) {
                out.status = RunStatus::Fail;
                out.note = err.what();
                out.wall_ms = sw.ms();
                outcomes.push_back(std::move(out));
                continue;
            }

            RunStatus status = RunStatus::Pass;
            for (const auto& r : rows) {
                const bool row_pass = control ? r.deviation <= r.slack : !r.under_resolved;
                t.add_row({r.scenario, r.omega, r.state_id, r.deviation, r.slack,
                           row_pass});
                if (!row_pass)
                    status = worse(status, control ? RunStatus::Fail
                                                   : RunStatus::UnderResolved);
                if (r.cov_residual >= 0.0) {
                    tc.add_row({r.scenario, r.omega, r.state_id, 0.0, opt.t0_check,
                                r.cov_residual});
                    if (r.cov_residual > 1e-8) status = worse(status, RunStatus::Fail);
                }
            }
            if (!control) {
                const double decay = entry_num(e, "require_decay_factor", 0.0);
                const double final_below = entry_num(e, "require_final_below", 0.0);
                const int n_om = int(opt.omegas.size());
                for (std::size_t si = 0; si < sc.states.size(); ++si) {
                    const auto& first = rows[si * n_om];
                    const auto& last = rows[si * n_om + n_om - 1];
                    if (decay > 0.0 && !(last.deviation <= first.deviation / decay)) {
                        status = worse(status, RunStatus::Fail);
                        out.note = "decay factor not met";
                    }
                    if (final_below > 0.0 && !(last.deviation < final_below)) {
                        status = worse(status, RunStatus::Fail);
                        out.note = "final deviation above threshold";
                    }
                }
            }
            out.status = status;
            out.wall_ms = sw.ms();
            outcomes.push_back(std::move(out));
        }
        if (!t.rows.empty()) {
            emit(t, out_dir + "/sweep_omega.csv");
            for (auto& o : outcomes)
                if (o.name.rfind("sweep_omega[", 0) == 0)
                    o.outputs.push_back(out_dir + "/sweep_omega.csv");
        }
        if (!tc.rows.empty()) {
            emit(tc, out_dir + "/sweep_omega_covariance.csv");
            for (auto& o : outcomes)
                if (o.name.rfind("sweep_omega[", 0) == 0)
                    o.outputs.push_back(out_dir + "/sweep_omega_covariance.csv");
        }
    }

    if (ex.contains("riemann_lebesgue")) {
        Table t;
        t.columns = {"scenario", "j", "ell", "omega", "integral_norm"};
        t.slope_pairs = {{"omega", "integral_norm"}};
        for (const auto& e : ex["riemann_lebesgue"]) {
            ExperimentOutcome out;
            const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
            out.name = "riemann_lebesgue[" + sc.name + "]";
            StopWatch sw;
            const int j = e["j"].get<int>(), ell = e["ell"].get<int>();
            const auto omegas = e["omegas"].get<std::vector<double>>();
            try {
                auto rows = riemann_lebesgue_probe(sc, j, ell, omegas,
                                                   e["interval"].get<double>());
                const double decay = entry_num(e, "require_decay_factor", 4.0);
                const int n_om = int(omegas.size());
                for (const auto& r : rows)
                    t.add_row({r.scenario, (long long)j, (long long)ell, r.omega,
                               r.integral_norm});
                for (std::size_t b = 0; b + n_om <= rows.size(); b += n_om) {
                    const double first = rows[b].integral_norm;
                    const double last = rows[b + n_om - 1].integral_norm;
                    if (!(last <= first / decay)) {
                        out.status = RunStatus::Fail;
                        out.note = "oscillatory integral did not decay";
                    }
                }
            } catch (const std::exception& err) {
                out.status = RunStatus::Fail;
                out.note = err.what();
            }
            out.wall_ms = sw.ms();
            outcomes.push_back(std::move(out));
        }
        if (!t.rows.empty()) {
            emit(t, out_dir + "/riemann_lebesgue.csv");
            for (auto& o : outcomes)
                if (o.name.rfind("riemann_lebesgue[", 0) == 0)
                    o.outputs.push_back(out_dir + "/riemann_lebesgue.csv");
        }
    }
    return outcomes;
}

// ---- sweep-n ------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_sweep_n(ExperimentConfig& cfg,
                                                  const std::string& out_dir,
                                                  int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("sweep_n")) return outcomes;
    Table t;
    t.columns = {"scenario", "scheme", "n", "measured", "paper_bound", "slack", "pass"};
    t.slope_pairs = {{"n", "measured"}};
    for (const auto& e : cfg.raw["experiments"]["sweep_n"]) {
        ExperimentOutcome out;
        const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
        out.name = "sweep_n[" + sc.name + "]";
        StopWatch sw;
        SweepNOptions opt;
        opt.ns = e["ns"].get<std::vector<int>>();
        opt.n_sub_ref = entry_int(e, "n_sub_ref", 2048);
        opt.k_quad = entry_int(e, "k_quad", 8);
        opt.taylor_tol = entry_num(e, "taylor_tol", 1e-12);
        opt.conj_rate = entry_int(e, "conj_rate", 64);
        opt.n_sub_step_budget = entry_int(e, "n_sub_step_budget", 256);
        try {
            guard_scenario(sc);
            const double TW = std::abs(sc.T) * sc.potential->sup_w;
            const int n_states = int(sc.states.size());
            // references per state (serial), then the (state, n, scheme) cells
            std::vector<Field> refs(n_states);
            std::vector<double> slacks(n_states);
            SchemeConfig base;
            base.omega = sc.omega;
            base.T = sc.T;
            base.t0 = sc.t0;
            base.kinetic = sc.kinetic;
            base.potential = sc.potential;
            base.k_quad = opt.k_quad;
            base.taylor_tol = opt.taylor_tol;
            base.conj_rate = opt.conj_rate;
            for (int si = 0; si < n_states; ++si) {
                refs[si] = evolve_reference(sc.states[si], sc.t0, sc.t0 + sc.T, base,
                                            opt.n_sub_ref);
                slacks[si] = std::max(
                    10.0 * field_dist(refs[si],
                                      evolve_reference(sc.states[si], sc.t0,
                                                       sc.t0 + sc.T, base,
                                                       opt.n_sub_ref / 2)),
                    1e-8);
            }
            const int n_cells = n_states * int(opt.ns.size()) * 2;
            std::vector<SweepNRow> rows(n_cells);
            parallel_for(n_cells, workers, [&](int idx) {
                const int si = idx / (int(opt.ns.size()) * 2);
                const int rem = idx % (int(opt.ns.size()) * 2);
                const int ni = rem / 2, which = rem % 2;
                const int n = opt.ns[ni];
                SchemeConfig c = base;
                c.n_sub = std::max(4, opt.n_sub_step_budget / n);
                Field outp = scheme_product(sc.states[si], sc.t0, sc.T, n,
                                            which == 0 ? CorrectedKind::Exponential
                                                       : CorrectedKind::Linear,
                                            c);
                SweepNRow row;
                row.scenario = sc.name;
                row.scheme = which == 0 ? "u_tilde" : "u_lin_tilde";
                row.n = n;
                row.measured = field_dist(outp, refs[si]);
                row.paper_bound = which == 0 ? TW * TW / n
                                             : TW * TW / (2.0 * n) * std::exp(TW);
                row.slack = slacks[si];
                row.under_resolved = row.slack >= 0.1 * row.paper_bound;
                row.pass = row.measured <= row.paper_bound + row.slack;
                rows[idx] = std::move(row);
            });
            for (const auto& r : rows) {
                t.add_row({r.scenario, r.scheme, (long long)r.n, r.measured,
                           r.paper_bound, r.slack, r.pass});
                if (!r.pass)
                    out.status = worse(out.status, RunStatus::Fail);
                else if (r.under_resolved)
                    out.status = worse(out.status, RunStatus::UnderResolved);
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/sweep_n.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("sweep_n[", 0) == 0)
                o.outputs.push_back(out_dir + "/sweep_n.csv");
    }
    return outcomes;
}

// ---- duhamel -------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_duhamel(ExperimentConfig& cfg,
                                                  const std::string& out_dir,
                                                  int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("duhamel")) return outcomes;
    Table t, tr;
    t.columns = {"scenario", "state_id", "dt", "measured", "bound", "slack", "pass"};
    tr.columns = {"scenario", "quad_nodes", "n_sub", "residual", "max_residual", "pass"};
    for (const auto& e : cfg.raw["experiments"]["duhamel"]) {
        ExperimentOutcome out;
        const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
        out.name = "duhamel[" + sc.name + "]";
        StopWatch sw;
        try {
            guard_scenario(sc);
            const auto dts = e["dts"].get<std::vector<double>>();
            const int rate = entry_int(e, "n_sub_rate", 512);
            const int n_states = int(sc.states.size());
            std::vector<DuhamelRow> rows(std::size_t(n_states) * dts.size());
            parallel_for(int(rows.size()), workers, [&](int idx) {
                const int si = idx / int(dts.size());
                const double dt = dts[idx % int(dts.size())];
                Scenario one = sc;
                one.states = {sc.states[si]};
                one.state_ids = {sc.state_ids[si]};
                rows[idx] = duhamel_bound_table(one, {dt}, rate)[0];
            });
            for (const auto& r : rows) {
                t.add_row({r.scenario, r.state_id, r.dt, r.measured, r.bound, r.slack,
                           r.pass});
                if (!r.pass)
                    out.status = worse(out.status, RunStatus::Fail);
                else if (r.under_resolved)
                    out.status = worse(out.status, RunStatus::UnderResolved);
            }
            if (e.contains("residual_quad_nodes")) {
                const int qn = e["residual_quad_nodes"].get<int>();
                const int ns = entry_int(e, "residual_n_sub", 512);
                const double mx = entry_num(e, "residual_max", 1e-4);
                SchemeConfig c;
                c.omega = sc.omega;
                c.T = sc.T;
                c.t0 = sc.t0;
                c.kinetic = sc.kinetic;
                c.potential = sc.potential;
                c.n_sub = ns;
                const double res =
                    duhamel_residual(sc.states[0], sc.t0, sc.t0 + sc.T, c, qn);
                const bool ok = res < mx;
                tr.add_row({sc.name, (long long)qn, (long long)ns, res, mx, ok});
                if (!ok) out.status = worse(out.status, RunStatus::Fail);
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/duhamel.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("duhamel[", 0) == 0)
                o.outputs.push_back(out_dir + "/duhamel.csv");
    }
    if (!tr.rows.empty()) {
        emit(tr, out_dir + "/duhamel_residual.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("duhamel[", 0) == 0)
                o.outputs.push_back(out_dir + "/duhamel_residual.csv");
    }
    return outcomes;
}

// ---- ident ---------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_ident(ExperimentConfig& cfg,
                                                const std::string& out_dir,
                                                int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("ident")) return outcomes;
    Table t;
    t.columns = {"scenario", "substeps", "difference", "pass"};
    t.slope_pairs = {{"substeps", "difference"}};
    for (const auto& e : cfg.raw["experiments"]["ident"]) {
        ExperimentOutcome out;
        const Scenario& sc = cfg.scenario(e["scenario"].get<std::string>());
        out.name = "ident[" + sc.name + "]";
        StopWatch sw;
        try {
            guard_scenario(sc);
            const auto subs = e["substeps"].get<std::vector<int>>();
            const double tt = e["t"].get<double>(), t1 = e["t1"].get<double>();
            const double omega = e["omega"].get<double>();
            const double final_below = entry_num(e, "final_below", 1e-8);
            const double min_order = entry_num(e, "min_order", 1.9);
            std::vector<double> diffs(subs.size());
            parallel_for(int(subs.size()), workers, [&](int i) {
                diffs[i] = ident_check(sc.states[0], tt, t1, omega, *sc.potential,
                                       subs[i]);
            });
            const double order =
                std::log(diffs.front() / diffs.back()) /
                std::log(double(subs.back()) / double(subs.front()));
            const bool ok_order = order >= min_order;
            const bool ok_final = diffs.back() < final_below;
            for (std::size_t i = 0; i < subs.size(); ++i)
                t.add_row({sc.name, (long long)subs[i], diffs[i],
                           i + 1 == subs.size() ? (ok_order && ok_final) : true});
            if (!(ok_order && ok_final)) {
                out.status = RunStatus::Fail;
                out.note = ok_order ? "final difference too large"
                                    : "observed order below threshold";
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/ident.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("ident[", 0) == 0)
                o.outputs.push_back(out_dir + "/ident.csv");
    }
    return outcomes;
}

// ---- limres1 --------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_limres1(ExperimentConfig& cfg,
                                                  const std::string& out_dir,
                                                  int /*workers*/) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("limres1")) return outcomes;
    Table t;
    t.columns = {"grid", "potential", "ell", "state_mode", "omega",
                 "deviation", "envelope", "pass"};
    t.slope_pairs = {{"omega", "deviation"}};
    int entry_idx = 0;
    for (const auto& e : cfg.raw["experiments"]["limres1"]) {
        ExperimentOutcome out;
        out.name = "limres1[" + std::to_string(entry_idx++) + "]";
        StopWatch sw;
        try {
            const std::string gname = e["grid"].get<std::string>();
            const std::string pname = e["potential"].get<std::string>();
            const PolarGrid& g = cfg.grid(gname);
            const AngularPotential& ap = cfg.angular_potential(pname, gname);
            KineticSpec kin = ExperimentConfig::kinetic_from(
                e.contains("kinetic") ? e["kinetic"] : nlohmann::json());
            const int ell = e["ell"].get<int>();
            const int mode = e["state_mode"].get<int>();
            const double zeta = e["zeta"].get<double>();
            const double sigma = entry_num(e, "state_sigma", 1.0);
            const auto omegas = e["omegas"].get<std::vector<double>>();
            Field phi = mode_gaussian(g, mode, sigma);
            double mu_max = 0.0;
            auto rows = limres1_check(g, kin, ap.vbar, ell, zeta, omegas, phi, &mu_max);

            const bool equal_case = (mode == ell);
            bool all_pass = true;
            for (const auto& r : rows) {
                bool pass = equal_case ? r.deviation <= 1e-10 : true;
                if (!equal_case && r.omega > mu_max + std::abs(zeta) + 1.0)
                    pass = r.deviation <= r.envelope;
                all_pass = all_pass && pass;
                t.add_row({gname, pname, (long long)ell, (long long)mode, r.omega,
                           r.deviation, r.envelope, pass});
            }
            if (!equal_case) {
                std::vector<double> xs, ys;
                for (const auto& r : rows) {
                    xs.push_back(r.omega);
                    ys.push_back(r.deviation);
                }
                const double slope = loglog_slope(xs, ys);
                const double window = entry_num(e, "slope_window", 0.15);
                if (std::abs(slope + 1.0) > window) {
                    out.status = RunStatus::Fail;
                    out.note = "log-log slope " + std::to_string(slope) +
                               " outside -1 +/- " + std::to_string(window);
                }
            }
            if (!all_pass) out.status = RunStatus::Fail;
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/limres1.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("limres1[", 0) == 0)
                o.outputs.push_back(out_dir + "/limres1.csv");
    }
    return outcomes;
}

// ---- resolvent ------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_resolvent(ExperimentConfig& cfg,
                                                    const std::string& out_dir,
                                                    int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("resolvent")) return outcomes;
    Table t;
    t.columns = {"grid", "potential", "ell", "zeta", "omega", "phi", "deviation",
                 "pass"};
    t.slope_pairs = {{"omega", "deviation"}};
    int entry_idx = 0;
    for (const auto& e : cfg.raw["experiments"]["resolvent"]) {
        ExperimentOutcome out;
        out.name = "resolvent[" + std::to_string(entry_idx++) + "]";
        StopWatch sw;
        try {
            const std::string gname = e["grid"].get<std::string>();
            const std::string pname = e["potential"].get<std::string>();
            const PolarGrid& g = cfg.grid(gname);
            const AngularPotential& ap = cfg.angular_potential(pname, gname);
            KineticSpec kin = ExperimentConfig::kinetic_from(
                e.contains("kinetic") ? e["kinetic"] : nlohmann::json());
            const int ell = e["ell"].get<int>();
            const double zeta = e.contains("zeta")
                                    ? e["zeta"].get<double>()
                                    : 2.0 * std::max(1.0, ap.sup_w);
            if (!(std::abs(zeta) > ap.sup_w))
                throw std::invalid_argument("resolvent: requires |zeta| > ||W0||");
            const auto omegas = e["omegas"].get<std::vector<double>>();
            const int n_phi = entry_int(e, "phi_samples", 16);
            std::vector<double> phis(n_phi);
            for (int i = 0; i < n_phi; ++i) phis[i] = 2.0 * pi_v * i / n_phi;
            Field phi_state =
                e.contains("state")
                    ? cfg.build_state(e["state"], g, 0)
                    : mode_gaussian(g, ell, 1.0);

            // limit vector, then one dense solve per (omega, phi) cell
            Eigen::VectorXd sp = g.p_weights.cwiseSqrt();
            Field mom = to_repr(phi_state, Repr::MomentumModes);
            Eigen::VectorXcd phi_ell =
                mom.data.col(g.mode_col(ell)).cwiseProduct(sp.cast<Complex>());
            Eigen::VectorXcd limit = Eigen::VectorXcd::Zero(g.n_r * g.n_modes());
            limit.segment(g.mode_col(ell) * g.n_r, g.n_r) = shifted_block_solve(
                mode_block(g, kin, ap.vbar, ell), 0.0, zeta, phi_ell);
            Eigen::VectorXcd rhs = field_to_vec(phi_state);

            std::vector<ResolvRow> rows(omegas.size() * phis.size());
            parallel_for(int(rows.size()), workers, [&](int idx) {
                const double omega = omegas[idx / n_phi];
                const double phi = phis[idx % n_phi];
                TruncatedOperator op =
                    build_truncation(g, kin, ap, omega, ell, zeta, phi);
                Eigen::VectorXcd x = resolvent_apply(op, rhs);
                rows[idx] = {omega, phi, (x - limit).norm()};
            });

            auto stats_at = [&](std::size_t oi) {
                double mx = 0.0, mean = 0.0;
                for (int pi = 0; pi < n_phi; ++pi) {
                    const double d = rows[oi * n_phi + pi].deviation;
                    mx = std::max(mx, d);
                    mean += d;
                }
                return std::make_pair(mx, mean / n_phi);
            };
            const double decay = entry_num(e, "require_decay_factor", 4.0);
            const double spread = entry_num(e, "spread_factor", 2.0);
            auto [mx_first, mean_first] = stats_at(0);
            auto [mx_last, mean_last] = stats_at(omegas.size() - 1);
            const bool ok_decay = mx_last <= mx_first / decay;
            const bool ok_spread = mx_last < spread * mean_last;
            for (const auto& r : rows)
                t.add_row({gname, pname, (long long)ell, zeta, r.omega, r.phi,
                           r.deviation, ok_decay && ok_spread});
            if (!ok_decay || !ok_spread) {
                out.status = RunStatus::Fail;
                out.note = ok_decay ? "phi spread too wide" : "max deviation did not decay";
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/resolvent.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("resolvent[", 0) == 0)
                o.outputs.push_back(out_dir + "/resolvent.csv");
    }
    return outcomes;
}

// ---- symbol ----------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_symbol(ExperimentConfig& cfg,
                                                 const std::string& out_dir,
                                                 int /*workers*/) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("symbol")) return outcomes;
    Table t;
    t.columns = {"p_bar_norm", "quadrature", "closed_form", "rel_err", "a"};
    int entry_idx = 0;
    for (const auto& e : cfg.raw["experiments"]["symbol"]) {
        ExperimentOutcome out;
        out.name = "symbol[" + std::to_string(entry_idx++) + "]";
        StopWatch sw;
        try {
            const double rel_tol = entry_num(e, "rel_tol", 1e-6);
            bool ok = true;
            for (double a : e["a_values"].get<std::vector<double>>())
                for (double pb : e["pbar_values"].get<std::vector<double>>()) {
                    const double q = symbol_integral(a, pb);
                    const double cf = symbol_closed_form(a, pb);
                    const double rel = std::abs(q - cf) / cf;
                    t.add_row({pb, q, cf, rel, a});
                    ok = ok && rel < rel_tol && q <= pi_v * pi_v + 1e-9;
                }
            if (!ok) {
                out.status = RunStatus::Fail;
                out.note = "quadrature/closed-form mismatch or cap violated";
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/symbol.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("symbol[", 0) == 0)
                o.outputs.push_back(out_dir + "/symbol.csv");
    }
    return outcomes;
}

// ---- bounds -----------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_bounds(ExperimentConfig& cfg,
                                                 const std::string& out_dir,
                                                 int workers) {
    using namespace harness_detail;
    std::vector<ExperimentOutcome> outcomes;
    if (!cfg.raw["experiments"].contains("bounds")) return outcomes;
    Table t, tc;
    t.columns = {"center_x", "center_y", "a", "omega", "generator",
                 "b_emp", "worst_ratio", "b_proof", "identity_residual", "pass"};
    tc.columns = {"nx", "ny", "samples_per_unit", "partition_residual",
                  "components_exact", "pass"};
    int entry_idx = 0;
    for (const auto& e : cfg.raw["experiments"]["bounds"]) {
        ExperimentOutcome out;
        out.name = "bounds[" + std::to_string(entry_idx++) + "]";
        StopWatch sw;
        try {
            const double a = e["a"].get<double>();
            const double omega = e["omega"].get<double>();
            const int n_states = entry_int(e, "n_states", 32);
            const int box_n = entry_int(e, "box_n", 384);
            const double box_len = entry_num(e, "box_len", 10.0);
            const double stab = entry_num(e, "stability_rel", 0.25);
            std::vector<Eigen::Vector2i> centers;
            for (const auto& c : e["centers"])
                centers.push_back({c[0].get<int>(), c[1].get<int>()});

            struct Row {
                Eigen::Vector2i c;
                KatoSampleResult lin, ang;
                double ident = 0.0;
            };
            std::vector<Row> rows(centers.size());
            parallel_for(int(centers.size()), workers, [&](int i) {
                CartesianGrid grid(box_n, box_len);
                auto states = kato_test_states(grid, n_states, cfg.seed);
                SquarePotential sq = SquarePotential::inverse_sqrt(centers[i]);
                Row r;
                r.c = centers[i];
                r.lin = kato_bound_sample(sq, a, omega, states, grid);
                r.ang = kato_bound_J_sample(sq, a, omega, states, grid);
                r.ident = J_identity_residual(centers[i], states, grid);
                rows[i] = std::move(r);
            });

            auto stable = [&](auto get) {
                double mn = 1e300, mx = 0.0;
                for (const auto& r : rows) {
                    mn = std::min(mn, get(r));
                    mx = std::max(mx, get(r));
                }
                return (mx - mn) <= stab * std::max(mx, 1e-12);
            };
            const bool ok_lin = stable([](const Row& r) { return r.lin.b_emp; });
            const bool ok_ang = stable([](const Row& r) { return r.ang.b_emp; });
            const double ident_max = entry_num(e, "identity_residual_max", 1e-6);
            bool ok_ident = true;
            for (const auto& r : rows) ok_ident = ok_ident && r.ident < ident_max;
            for (const auto& r : rows) {
                t.add_row({(long long)r.c[0], (long long)r.c[1], a, omega,
                           std::string("linear"), r.lin.b_emp, r.lin.worst_ratio,
                           r.lin.b_proof, 0.0, ok_lin});
                t.add_row({(long long)r.c[0], (long long)r.c[1], a, omega,
                           std::string("angular"), r.ang.b_emp, r.ang.worst_ratio,
                           r.ang.b_proof, r.ident, ok_ang && ok_ident});
            }

            const int nx = entry_int(e, "checkerboard_nx", 4);
            const int ny = entry_int(e, "checkerboard_ny", 4);
            const int spu = entry_int(e, "checkerboard_samples", 24);
            const double pr_max = entry_num(e, "partition_residual_max", 1e-10);
            const double pr = partition_residual(nx, ny, spu);
            Checkerboard cb = checkerboard(
                [](double x, double y) {
                    return std::sin(2.3 * x) * std::cos(1.7 * y) + 0.4;
                },
                nx, ny, spu);
            Eigen::MatrixXd sum = cb.parts[0] + cb.parts[1] + cb.parts[2] + cb.parts[3];
            const bool exact = (sum - cb.total).cwiseAbs().maxCoeff() == 0.0;
            const bool ok_cb = pr < pr_max && exact;
            tc.add_row({(long long)nx, (long long)ny, (long long)spu, pr, exact, ok_cb});

            if (!(ok_lin && ok_ang && ok_ident && ok_cb)) {
                out.status = RunStatus::Fail;
                out.note = !ok_cb      ? "partition of unity residual too large"
                           : !ok_ident ? "operator identity residual too large"
                                       : "b_emp not stable across centers";
            }
        } catch (const std::exception& err) {
            out.status = RunStatus::Fail;
            out.note = err.what();
        }
        out.wall_ms = sw.ms();
        outcomes.push_back(std::move(out));
    }
    if (!t.rows.empty()) {
        emit(t, out_dir + "/kato.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("bounds[", 0) == 0)
                o.outputs.push_back(out_dir + "/kato.csv");
    }
    if (!tc.rows.empty()) {
        emit(tc, out_dir + "/checkerboard.csv");
        for (auto& o : outcomes)
            if (o.name.rfind("bounds[", 0) == 0)
                o.outputs.push_back(out_dir + "/checkerboard.csv");
    }
    return outcomes;
}

// ---- dispatch ------------------------------------------------------------------------

inline std::vector<ExperimentOutcome> run_subcommand(ExperimentConfig& cfg,
                                                     const std::string& sub,
                                                     const std::string& out_dir,
                                                     int workers) {
    std::vector<ExperimentOutcome> all;
    auto append = [&](std::vector<ExperimentOutcome> v) {
        for (auto& o : v) all.push_back(std::move(o));
    };
    if (sub == "propagate" || sub == "all") append(run_propagate(cfg, out_dir, workers));
    if (sub == "sweep-omega" || sub == "all")
        append(run_sweep_omega(cfg, out_dir, workers));
    if (sub == "sweep-n" || sub == "all") append(run_sweep_n(cfg, out_dir, workers));
    if (sub == "duhamel" || sub == "all") append(run_duhamel(cfg, out_dir, workers));
    if (sub == "ident" || sub == "all") append(run_ident(cfg, out_dir, workers));
    if (sub == "limres1" || sub == "all") append(run_limres1(cfg, out_dir, workers));
    if (sub == "resolvent" || sub == "all") append(run_resolvent(cfg, out_dir, workers));
    if (sub == "symbol" || sub == "all") append(run_symbol(cfg, out_dir, workers));
    if (sub == "bounds" || sub == "all") append(run_bounds(cfg, out_dir, workers));
    return all;
}

inline int exit_code_for(const std::vector<ExperimentOutcome>& outcomes) {
    bool any_fail = false, any_ur = false;
    for (const auto& o : outcomes) {
        any_fail = any_fail || o.status == RunStatus::Fail;
        any_ur = any_ur || o.status == RunStatus::UnderResolved;
    }
    return any_fail ? 1 : (any_ur ? 2 : 0);
}

}  // namespace rotaprop
