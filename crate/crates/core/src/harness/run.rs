use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::bounds::{c_tf, e_lt, e_tf, p_critical, plane_wave_upper_bound, rescaled_constant, tf_particle_count, MemoizedI1};
use crate::dimer::{binding_gap_vs_p, dimer_policy, interaction_curve, Cluster};
use crate::error::Result;
use crate::ledger::BindingLedger;
use crate::scalar::{radial_ground_state, solve_scalar, ScalarOptions};
use crate::solver::ground::local_maxima;
use crate::solver::{solve_ground_state, sweep_mass, GroundStateResult, ModelParams, SolverConfig, SweepPoint};

use super::config::{ExperimentSpec, Kind};
use super::io::{cell, dump_orbitals, write_field, Csv};
use super::record::*;

/// Relative floor of the peak rule.
pub const PEAK_FLOOR: f64 = 1e-3;

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    files: Vec<String>,
    lines: Vec<String>,
    docs: Vec<(String, Vec<(&'static str, &'static str)>)>,
}

impl Ctx<'_> {
    fn dir(&self) -> &Path {
        &self.spec.output
    }

    fn csv(&mut self, name: &str, columns: &[(&'static str, &'static str)]) -> Result<Csv> {
        self.files.push(name.to_string());
        self.docs.push((name.to_string(), columns.to_vec()));
        let header: Vec<&str> = columns.iter().map(|c| c.0).collect();
        Csv::create(&self.dir().join(name), &header)
    }

    fn field(&mut self, name: &str, state: &GroundStateResult) -> Result<()> {
        let axes: &[(&str, &str)] = &[("x", "first coordinate"), ("y", "second coordinate"), ("z", "third coordinate")];
        let mut cols: Vec<(&'static str, &'static str)> = axes[..state.grid.dim()].to_vec();
        cols.push(("rho", "density Σ ν_i u_i² at the grid point"));
        self.files.push(name.to_string());
        self.docs.push((name.to_string(), cols));
        write_field(&self.dir().join(name), &state.density, "rho")
    }

    fn dump(&mut self, tag: &str, state: &GroundStateResult) -> Result<()> {
        if self.spec.dump_orbitals {
            let names = dump_orbitals(self.dir(), tag, state)?;
            self.files.extend(names);
        }
        Ok(())
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn state_lines(&mut self, label: &str, s: &GroundStateResult) {
        let d = &s.diagnostics;
        self.line(format!(
            "{label}: J = {:.12e}, converged = {}, iterations = {}, grid L = {}, n = {}",
            s.energy,
            s.converged,
            s.iterations,
            s.grid.length(),
            s.grid.n()
        ));
        self.line(format!(
            "{label}: virial residual = {:.2e}, aufbau verified = {}, multiplier bounds ok = {}, peaks = {}",
            d.virial_residual, d.aufbau_verified, d.mu_bounds_ok, d.local_maxima
        ));
    }
}

fn params(spec: &ExperimentSpec, mass: f64) -> Result<ModelParams> {
    ModelParams::new(spec.dim, spec.p, mass)
}

fn rows_from(points: Vec<SweepPoint>) -> (Vec<SweepRow>, Vec<Option<GroundStateResult>>) {
    points
        .into_iter()
        .map(|pt| match pt.result {
            Ok(r) => (SweepRow { mass: pt.mass, state: Some(StateSummary::from(&r)), error: None }, Some(r)),
            Err(e) => (SweepRow { mass: pt.mass, state: None, error: Some(e) }, None),
        })
        .unzip()
}

fn run_solve(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let state = solve_ground_state(&params(spec, spec.mass)?, &spec.solver)?;
    ctx.field("density.csv", &state)?;
    ctx.dump("solve", &state)?;
    ctx.state_lines("solve", &state);
    Ok((Results::Solve(StateSummary::from(&state)), state.converged))
}

fn run_sweep(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let (rows, _) = rows_from(sweep_mass(spec.dim, spec.p, &spec.masses, &spec.solver, spec.warm_start)?);
    let mut csv = ctx.csv(
        "sweep.csv",
        &[
            ("lambda", "mass λ"),
            ("J", "ground-state energy J(λ)"),
            ("J_over_lambda", "J(λ)/λ"),
            ("mu_last", "last filled multiplier μ_N"),
            ("virial_residual", "relative virial residual"),
            ("converged", "solver convergence flag"),
        ],
    )?;
    for r in &rows {
        let s = r.state.as_ref();
        csv.row(&[
            r.mass.to_string(),
            cell(r.energy()),
            cell(r.energy().map(|e| e / r.mass)),
            cell(s.and_then(|s| s.mu.last().copied())),
            cell(s.map(|s| s.diagnostics.virial_residual)),
            r.converged().to_string(),
        ])?;
    }
    csv.finish()?;
    ctx.line(format!("sweep: {} masses, {} converged", rows.len(), rows.iter().filter(|r| r.converged()).count()));
    let ok = rows.iter().all(SweepRow::converged);
    Ok((Results::SweepLambda(rows), ok))
}

/// Builds the binding ledger from integer-mass solves on a common grid.
pub fn binding_report(spec: &ExperimentSpec, states: Vec<SweepRow>) -> Result<BindingReport> {
    let mut ledger = BindingLedger::new(spec.dim, spec.p, spec.c_lt)?;
    ledger.slack = spec.binding_slack;
    let mut rejections = Vec::new();
    for (i, row) in states.iter().enumerate() {
        let n = i as u32 + 1;
        match &row.state {
            Some(s) if s.converged => {
                let tag = format!("{}:seed{}:N{n}", spec.kind, spec.seed);
                if let Err(e) = ledger.insert(n, s.energy, &tag) {
                    rejections.push(format!("N = {n}: {e}"));
                }
            }
            Some(_) => rejections.push(format!("N = {n}: solve did not converge")),
            None => rejections.push(format!("N = {n}: {}", row.error.clone().unwrap_or_default())),
        }
    }
    let top = ledger.entries.keys().copied().take_while({
        let mut expect = 0;
        move |&k| {
            expect += 1;
            k == expect
        }
    });
    let covered = top.last().unwrap_or(0);
    let mut verdicts = Vec::new();
    for n in 2..=covered {
        verdicts.push(ledger.binding_check(n)?);
    }
    let binding_set = if covered > 0 { ledger.binding_set(covered)? } else { Vec::new() };
    let (mut decompositions, mut decomposition_errors) = (Vec::new(), Vec::new());
    for n in 1..=covered {
        match ledger.binding_set_decompose(n) {
            Ok(d) => decompositions.push(d),
            Err(e) => decomposition_errors.push(format!("N = {n}: {e}")),
        }
    }
    let floor = e_lt(spec.dim, spec.p, spec.c_lt)?;
    let mut sandwich = Vec::new();
    let mut non_increasing = true;
    if covered > 0 {
        let i1 = ledger.energy(1)?;
        let slack = spec.binding_slack * i1.abs();
        let mut prev = f64::INFINITY;
        for n in 1..=covered {
            let per = ledger.energy(n)? / n as f64;
            sandwich.push(SandwichRow { n, e_lt: floor, per_particle: per, i1, slack, ok: floor <= per && per <= i1 + slack });
            non_increasing &= per <= prev + slack;
            prev = per;
        }
    }
    Ok(BindingReport {
        ledger,
        rejections,
        verdicts,
        binding_set,
        decompositions,
        decomposition_errors,
        sandwich,
        per_particle_non_increasing: non_increasing,
        states,
    })
}

fn integer_masses(n_max: u32) -> Vec<f64> {
    (1..=n_max).map(f64::from).collect()
}

fn run_binding(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let (rows, _) = rows_from(sweep_mass(spec.dim, spec.p, &integer_masses(spec.n_max), &spec.solver, false)?);
    let report = binding_report(spec, rows)?;
    report.ledger.save(&ctx.dir().join("ledger.json"))?;
    ctx.files.push("ledger.json".into());
    let mut csv = ctx.csv(
        "energies.csv",
        &[
            ("N", "integer mass"),
            ("J", "ground-state energy J(N)"),
            ("J_over_N", "J(N)/N"),
            ("e_LT", "Lieb-Thirring lower bound per particle"),
            ("I1", "J(1) upper bound per particle"),
            ("sandwich_ok", "e_LT ≤ J(N)/N ≤ J(1) within slack"),
        ],
    )?;
    for s in &report.sandwich {
        csv.row(&[
            s.n.to_string(),
            (s.per_particle * s.n as f64).to_string(),
            s.per_particle.to_string(),
            s.e_lt.to_string(),
            s.i1.to_string(),
            s.ok.to_string(),
        ])?;
    }
    csv.finish()?;
    let mut csv = ctx.csv(
        "binding.csv",
        &[
            ("N", "total mass"),
            ("K", "split K + (N - K)"),
            ("margin", "J(K) + J(N-K) - J(N)"),
            ("slack", "binding slack for this N"),
            ("binds", "all margins of N exceed the slack"),
        ],
    )?;
    for v in &report.verdicts {
        for m in &v.margins {
            csv.row(&[v.n.to_string(), m.k.to_string(), m.margin.to_string(), v.slack.to_string(), v.binds.to_string()])?;
        }
    }
    csv.finish()?;
    for v in &report.verdicts {
        let ms: Vec<String> = v.margins.iter().map(|m| format!("K={}: {:.3e}", m.k, m.margin)).collect();
        ctx.line(format!("N = {}: binds = {} ({}; slack {:.1e})", v.n, v.binds, ms.join(", "), v.slack));
    }
    ctx.line(format!("binding set: {:?}", report.binding_set));
    for r in &report.rejections {
        ctx.line(format!("rejected {r}"));
    }
    let ok = report.rejections.is_empty() && report.states.iter().all(SweepRow::converged);
    Ok((Results::BindingTable(report), ok))
}

/// Constants, energies, critical exponent and plane-wave bound sequence.
pub fn bounds_report(spec: &ExperimentSpec) -> Result<(BoundsReport, bool)> {
    let (dim, p) = (spec.dim, spec.p);
    let radial = radial_ground_state(dim, p)?;
    let opts = ScalarOptions { policy: spec.solver.grid.clone(), ..ScalarOptions::default() };
    let scalar = solve_scalar(dim, p, &opts)?;
    let (p_crit, p_crit_err) = match MemoizedI1::build(dim, spec.memo_spacing)
        .and_then(|memo| p_critical(dim, spec.c_lt, |q| memo.eval(q)))
    {
        Ok(pc) => (Some(pc), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let plane_wave = spec
        .pw_lengths
        .iter()
        .map(|&l| plane_wave_upper_bound(dim, p, tf_particle_count(dim, p, l)?, l, spec.mollifier_eps))
        .collect::<Result<Vec<_>>>()?;
    let report = BoundsReport {
        dim,
        p,
        c_tf: c_tf(dim)?,
        c_lt: spec.c_lt,
        c_lt_source: spec.c_lt_source.clone(),
        e_tf: e_tf(dim, p)?,
        e_lt: e_lt(dim, p, spec.c_lt)?,
        i1: radial.i1,
        mu1: radial.mu1,
        i1_grid: scalar.i1,
        virial_grid: scalar.virial_residual,
        rescaled_constant: rescaled_constant(dim, p, 1.0, radial.i1)?,
        p_critical: p_crit,
        p_critical_error: p_crit_err,
        plane_wave,
    };
    Ok((report, scalar.converged))
}

fn bounds_table(r: &BoundsReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("d = {}, p = {}\n", r.dim, r.p));
    let rows = [
        ("c_TF", r.c_tf),
        ("c_LT", r.c_lt),
        ("e_TF", r.e_tf),
        ("e_LT", r.e_lt),
        ("I(d,p,1) radial", r.i1),
        ("I(d,p,1) grid", r.i1_grid),
        ("mu(1)", r.mu1),
        ("c(d,p,1)", r.rescaled_constant),
    ];
    for (k, v) in rows {
        s.push_str(&format!("{k:<18} {v:>20.12e}\n"));
    }
    match (&r.p_critical, &r.p_critical_error) {
        (Some(pc), _) => s.push_str(&format!(
            "{:<18} {:>20.5}   bracket [{:.5}, {:.5}]\n",
            "p_c",
            pc.value,
            pc.bracket.0,
            pc.bracket.1
        )),
        (None, Some(e)) => s.push_str(&format!("{:<18} {e}\n", "p_c")),
        _ => {}
    }
    s.push_str(&format!("c_LT source: {}\n\n", r.c_lt_source));
    s.push_str(&format!("{:>10} {:>8} {:>20} {:>12}\n", "L", "N", "plane-wave e/N", "rel. gap"));
    for b in &r.plane_wave {
        s.push_str(&format!(
            "{:>10} {:>8} {:>20.12e} {:>12.4e}\n",
            b.length,
            b.particles,
            b.per_particle,
            (b.per_particle - b.e_tf) / b.e_tf.abs()
        ));
    }
    s
}

fn run_bounds(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let (report, ok) = bounds_report(ctx.spec)?;
    let mut csv = ctx.csv(
        "plane_wave.csv",
        &[
            ("L", "box side"),
            ("N", "particles at the Thomas-Fermi density"),
            ("per_particle", "trial energy per particle"),
            ("e_TF", "Thomas-Fermi energy per particle"),
            ("relative_gap", "(per_particle - e_TF)/|e_TF|"),
            ("degenerate_shell", "last |k| shell only partly filled"),
        ],
    )?;
    for b in &report.plane_wave {
        csv.row(&[
            b.length.to_string(),
            b.particles.to_string(),
            b.per_particle.to_string(),
            b.e_tf.to_string(),
            ((b.per_particle - b.e_tf) / b.e_tf.abs()).to_string(),
            b.degenerate_shell.to_string(),
        ])?;
    }
    csv.finish()?;
    let table = bounds_table(&report);
    std::fs::write(ctx.dir().join("bounds.txt"), &table)?;
    ctx.files.push("bounds.txt".into());
    for l in table.lines() {
        ctx.line(l.to_string());
    }
    Ok((Results::BoundsReport(report), ok))
}

fn run_dimer(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let separations = spec.separations();
    let r_max = separations.last().copied().unwrap_or(0.0);
    let cfg = SolverConfig { grid: dimer_policy(spec.dim, spec.p, spec.mass, r_max, &spec.solver.grid)?, ..spec.solver.clone() };
    let state = solve_ground_state(&params(spec, spec.mass)?, &cfg)?;
    let left = Cluster::from_ground_state(&state)?;
    let right = left.rotated(spec.quarter_turns);
    let curve = interaction_curve(&left, &right, &separations)?;
    let mut csv = ctx.csv(
        "dimer.csv",
        &[
            ("R", "separation along the first axis"),
            ("interaction", "E(γ_R) - J - J'"),
            ("fitted_rate", "decay rate of |interaction| fitted over the window"),
            ("theory_rate_attract", "2p εε'/(ε+ε')"),
            ("theory_rate_orth", "2ε'"),
            ("gram_condition", "condition number of the overlap matrix"),
        ],
    )?;
    for pt in &curve.points {
        csv.row(&[
            pt.separation.to_string(),
            cell(pt.interaction),
            cell(curve.fitted_rate),
            curve.theory_rate_attract.to_string(),
            curve.theory_rate_orth.to_string(),
            cell(pt.gram_condition),
        ])?;
    }
    csv.finish()?;
    ctx.state_lines("cluster", &state);
    ctx.line(format!(
        "fitted rate = {:?} over {:?} ({} points); theory attract = {:.6}, orth = {:.6}",
        curve.fitted_rate, curve.fit_window, curve.fit_points, curve.theory_rate_attract, curve.theory_rate_orth
    ));
    let ok = state.converged && curve.points.iter().all(|p| p.error.is_none());
    Ok((Results::DimerCurve(DimerReport { state: StateSummary::from(&state), curve }), ok))
}

fn run_figure1(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let state = solve_ground_state(&params(spec, spec.mass)?, &spec.solver)?;
    ctx.field("density.csv", &state)?;
    ctx.dump("figure1", &state)?;
    let peaks = local_maxima(&state.density, PEAK_FLOOR);
    let peak_positions: Vec<f64> = peaks.iter().map(|&i| state.grid.point(i)[0]).collect();
    ctx.state_lines("figure1", &state);
    ctx.line(format!("peak count = {}", peaks.len()));
    let ok = state.converged;
    Ok((Results::Figure1(Figure1Report { state: StateSummary::from(&state), peaks: peaks.len(), peak_positions }), ok))
}

/// Integer masses `1..=n_max` on a common grid, with per-row peak counts.
pub fn cluster_report(spec: &ExperimentSpec) -> Result<(ClusterReport, Vec<Option<GroundStateResult>>)> {
    let (rows, states) = rows_from(sweep_mass(spec.dim, spec.p, &integer_masses(spec.n_max), &spec.solver, false)?);
    let rows: Vec<ClusterRow> = rows
        .into_iter()
        .zip(&states)
        .enumerate()
        .map(|(i, (row, st))| {
            let n = i as u32 + 1;
            let spread = row.state.as_ref().map_or(0.0, StateSummary::restart_spread);
            ClusterRow {
                n,
                energy_per_n: row.energy().map(|e| e / n as f64),
                restart_spread: spread,
                peaks: st.as_ref().map_or(0, |s| local_maxima(&s.density, PEAK_FLOOR).len()),
                state: row.state,
                error: row.error,
            }
        })
        .collect();
    let mut non_increasing = true;
    for w in rows.windows(2) {
        match (w[0].energy_per_n, w[1].energy_per_n) {
            (Some(a), Some(b)) => {
                let tol = w[0].restart_spread / w[0].n as f64 + w[1].restart_spread / w[1].n as f64 + 1e-12 * a.abs();
                non_increasing &= b <= a + tol;
            }
            _ => non_increasing = false,
        }
    }
    Ok((ClusterReport { rows, non_increasing }, states))
}

fn run_clusters(ctx: &mut Ctx, densities: bool) -> Result<(Results, bool)> {
    let (report, states) = cluster_report(ctx.spec)?;
    if densities {
        for (row, st) in report.rows.iter().zip(&states) {
            if let Some(s) = st {
                ctx.field(&format!("density_N{}.csv", row.n), s)?;
                ctx.dump(&format!("N{}", row.n), s)?;
            }
        }
    } else {
        let mut csv = ctx.csv(
            "energy_per_n.csv",
            &[
                ("N", "integer mass"),
                ("J", "best energy over restarts"),
                ("J_over_N", "J(N)/N"),
                ("restart_spread", "max - min of converged restart energies"),
                ("peaks", "local maxima of the density"),
            ],
        )?;
        for r in &report.rows {
            csv.row(&[
                r.n.to_string(),
                cell(r.state.as_ref().map(|s| s.energy)),
                cell(r.energy_per_n),
                r.restart_spread.to_string(),
                r.peaks.to_string(),
            ])?;
        }
        csv.finish()?;
    }
    for r in &report.rows {
        ctx.line(format!(
            "N = {}: J/N = {}, peaks = {}, restart spread = {:.2e}",
            r.n,
            cell(r.energy_per_n),
            r.peaks,
            r.restart_spread
        ));
    }
    ctx.line(format!("J(N)/N non-increasing: {}", report.non_increasing));
    let ok = report.rows.iter().all(|r| r.state.as_ref().is_some_and(|s| s.converged));
    Ok((if densities { Results::Figure2(report) } else { Results::Figure3(report) }, ok))
}

/// Monotonicity and piecewise concavity of `J` over a mass grid.
pub fn figure4_report(rows: Vec<SweepRow>, slack_rel: f64) -> Figure4Report {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.energy().map(|e| (r.mass, e))).collect();
    let complete = pts.len() == rows.len();
    let strictly_decreasing = complete && pts.windows(2).all(|w| w[1].1 < w[0].1);
    let mut concavity = Vec::new();
    for w in pts.windows(3) {
        let ((a, ja), (b, jb), (c, jc)) = (w[0], w[1], w[2]);
        let k = a.floor();
        // Only triples inside one closed unit interval; kinks sit at integers.
        let inside = b.fract() != 0.0 && a >= k && c <= k + 1.0 && b > k;
        if !inside {
            continue;
        }
        let interp = ((c - b) * ja + (b - a) * jc) / (c - a);
        let defect = interp - jb;
        let slack = slack_rel * jb.abs();
        concavity.push(ConcavityPoint { mass: b, defect, slack, ok: defect <= slack });
    }
    let piecewise_concave = complete && concavity.iter().all(|c| c.ok);
    let ratios: Vec<f64> = pts.iter().map(|(m, j)| j / m).collect();
    let ratio_monotone = ratios.windows(2).all(|w| w[1] <= w[0]) || ratios.windows(2).all(|w| w[1] >= w[0]);
    Figure4Report { rows, strictly_decreasing, concavity, piecewise_concave, ratio_monotone }
}

fn run_figure4(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let (rows, _) = rows_from(sweep_mass(spec.dim, spec.p, &spec.masses, &spec.solver, spec.warm_start)?);
    let report = figure4_report(rows, spec.binding_slack);
    let mut csv = ctx.csv(
        "figure4.csv",
        &[
            ("lambda", "mass λ"),
            ("J", "ground-state energy J(λ)"),
            ("J_over_lambda", "J(λ)/λ"),
            ("concavity_defect", "neighbour interpolation minus J, empty at kinks and ends"),
        ],
    )?;
    for r in &report.rows {
        let defect = report.concavity.iter().find(|c| c.mass == r.mass).map(|c| c.defect);
        csv.row(&[r.mass.to_string(), cell(r.energy()), cell(r.energy().map(|e| e / r.mass)), cell(defect)])?;
    }
    csv.finish()?;
    ctx.line(format!("J strictly decreasing: {}", report.strictly_decreasing));
    ctx.line(format!("J concave on each unit interval: {}", report.piecewise_concave));
    ctx.line(format!("J/λ monotone: {}", report.ratio_monotone));
    let ok = report.rows.iter().all(SweepRow::converged);
    Ok((Results::Figure4(report), ok))
}

fn run_gap(ctx: &mut Ctx) -> Result<(Results, bool)> {
    let spec = ctx.spec;
    let points = binding_gap_vs_p(spec.dim, &spec.p_list, &spec.solver);
    let all_negative = points.iter().all(|g| match (g.gap, g.j2) {
        (Some(gap), Some(j2)) => gap < -spec.binding_slack * j2.abs(),
        _ => false,
    });
    let gaps: Vec<Option<f64>> = points.iter().map(|g| g.gap).collect();
    let shrinking = gaps.iter().all(Option::is_some) && gaps.windows(2).all(|w| w[1].unwrap().abs() < w[0].unwrap().abs());
    let mut csv = ctx.csv(
        "gap.csv",
        &[("p", "exponent"), ("J1", "J(1)"), ("J2", "J(2)"), ("gap", "J(2) - 2J(1)")],
    )?;
    for g in &points {
        csv.row(&[g.p.to_string(), cell(g.j1), cell(g.j2), cell(g.gap)])?;
        ctx.line(format!("p = {}: gap = {}", g.p, cell(g.gap)));
    }
    csv.finish()?;
    ctx.line(format!("all negative: {all_negative}, shrinking: {shrinking}"));
    let ok = points.iter().all(|g| g.error.is_none());
    Ok((Results::GapVsP(GapReport { points, all_negative, shrinking }), ok))
}

/// Runs the experiment, writing `record.json`, `summary.txt` and the CSV
/// files into the output directory.
pub fn run(spec: &ExperimentSpec) -> Result<RunRecord> {
    std::fs::create_dir_all(&spec.output)?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let t0 = Instant::now();
    let mut ctx = Ctx { spec, files: Vec::new(), lines: Vec::new(), docs: Vec::new() };
    let (results, converged) = match spec.kind {
        Kind::Solve => run_solve(&mut ctx)?,
        Kind::SweepLambda => run_sweep(&mut ctx)?,
        Kind::BindingTable => run_binding(&mut ctx)?,
        Kind::BoundsReport => run_bounds(&mut ctx)?,
        Kind::DimerCurve => run_dimer(&mut ctx)?,
        Kind::Figure1 => run_figure1(&mut ctx)?,
        Kind::Figure2 => run_clusters(&mut ctx, true)?,
        Kind::Figure3 => run_clusters(&mut ctx, false)?,
        Kind::Figure4 => run_figure4(&mut ctx)?,
        Kind::GapVsP => run_gap(&mut ctx)?,
    };
    ctx.files.push("summary.txt".into());
    ctx.files.push("record.json".into());
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        started_unix,
        wall_time_s: t0.elapsed().as_secs_f64(),
        converged,
        results,
        files: ctx.files.clone(),
    };
    record.save(&spec.output.join("record.json"))?;

    let mut summary = format!("{} (schema {SCHEMA_VERSION})\nconverged: {converged}\n\n", spec.kind);
    for l in &ctx.lines {
        summary.push_str(l);
        summary.push('\n');
    }
    summary.push_str("\nColumns\n");
    for (file, cols) in &ctx.docs {
        summary.push_str(&format!("{file}\n"));
        for (c, d) in cols {
            summary.push_str(&format!("  {c}: {d}\n"));
        }
    }
    std::fs::write(spec.output.join("summary.txt"), summary)?;
    Ok(record)
}
