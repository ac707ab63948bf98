use anyhow::{bail, Context, Result};
use shieldlab::catalog::{self, example_scenario};
use shieldlab::classical::{enumerate_ground, ladder_transition, LadderRow};
use shieldlab::closed_forms::{chain3_correlation, f, g};
use shieldlab::csvfmt::sci;
use shieldlab::lattice::{ParamPath, MAX_CLASSICAL_SITES};
use shieldlab::operator::{build_hamiltonian, expectation_of, partial_trace, trace_distance, SiteObservable};
use shieldlab::scenario::{Beta, Scenario};
use shieldlab::shielding::{
    check_identities, alignment_check, alignment_from_state, correlation, sector_decompose, single_site_verify,
    ground_sweep_verify, IdentityReport, DEFAULT_EPS,
};
use shieldlab::spectral::{gibbs_state, ground_space};

use crate::commands::{beta_label, gap_tol, need_beta, need_partition, sign_text, sweep_points, table, zz_name, Edits};
use crate::report::RunReport;

/// Splits off the `p=<count>` override that sizes `pentagon-n`.
fn pentagon_count(name: &str, overrides: &[String]) -> Result<(Option<usize>, Vec<String>)> {
    let mut count = None;
    let mut rest = Vec::new();
    for kv in overrides {
        match kv.split_once('=') {
            Some((k, v)) if name == "pentagon-n" && k.trim() == "p" => {
                let n: usize = v.trim().parse().with_context(|| format!("`p` must be a pentagon count, got `{v}`"))?;
                if n < 2 || 5 + 3 * (n - 1) > MAX_CLASSICAL_SITES {
                    bail!("pentagon count must lie in 2..=8, got {n}");
                }
                count = Some(n);
            }
            _ => rest.push(kv.clone()),
        }
    }
    Ok((count, rest))
}

pub fn run(name: &str, edits: &Edits, report: &mut RunReport) -> Result<()> {
    let (count, overrides) = pentagon_count(name, edits.overrides)?;
    let base = example_scenario(name, count)?;
    let sc = Edits { overrides: &overrides, beta: edits.beta }.apply(base)?;
    report.line(format!("example: {name}"));
    match name {
        "theorem1-chain3" => single_site_chain(&sc, report),
        "fig4-foursite" => foursite(&sc, report),
        "chain5-correlations" => chain5(&sc, report),
        "pentagon-pair" | "pentagon-n" => pentagons(&sc, count.unwrap_or(if name == "pentagon-pair" { 2 } else { 4 }), report),
        "ladder" => ladder(&sc, report),
        "quasichain" => quasichain(&sc, report),
        _ => unreachable!("example_scenario rejects unknown names"),
    }
}

fn finite_beta(sc: &Scenario) -> Result<f64> {
    match need_beta(sc)? {
        Beta::Finite(b) => Ok(b),
        Beta::Infinite => bail!("this example needs a finite beta"),
    }
}

fn single_site_chain(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let beta = finite_beta(sc)?;
    let p = need_partition(sc)?;
    let points = sweep_points(sc)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (_, v, lat) in &points {
        let rho = gibbs_state(&build_hamiltonian(lat)?, beta)?;
        let ed = correlation(&rho, 0, 2)?;
        let closed = chain3_correlation(beta, lat.coupling(0, 1), lat.coupling(1, 2), lat.field_x(0));
        worst = worst.max((ed - closed).abs());
        rows.push(vec![sci(*v), sci(ed), sci(closed)]);
    }
    let r = single_site_verify(p, beta, points)?;
    report.line(format!("beta: {}", beta_label(Beta::Finite(beta))));
    report.line(format!("max sweep distance = {}", sci(r.max_sweep_distance)));
    report.line(format!("distance to Gibbs(H_Y) = {}", sci(r.max_prediction_distance)));
    report.line(format!("max |connected correlation - closed form| = {}", sci(worst)));
    report.contract("max sweep distance < 1e-9", r.max_sweep_distance < 1e-9);
    report.contract("distance to Gibbs(H_Y) < 1e-9", r.max_prediction_distance < 1e-9);
    report.contract("connected correlation matches closed form < 1e-9", worst < 1e-9);
    report.csv("sweep.csv", |buf| r.write_csv(buf))?;
    report.file("correlation.csv", table(&["value", "ed", "closed_form"], &rows));
    Ok(())
}

fn foursite(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let p = need_partition(sc)?;
    let lat = sc.resolve_lattice()?;
    let (l1, l2) = (p.set_s()[0], p.set_s()[1]);
    let pair = zz_name(&lat, l1, l2);

    let ground = alignment_check(&lat, p, gap_tol(sc), DEFAULT_EPS)?;
    report.line(format!("condition9: {} (ground)", if ground.pass { "PASS" } else { "FAIL" }));
    if let Some(s) = &ground.sector_star {
        report.line(format!("ground sector = {s}"));
    }
    let sweep = ground_sweep_verify(p, gap_tol(sc), DEFAULT_EPS, sweep_points(sc)?)?;
    report.line(format!("ground sweep distance = {}", sci(sweep.max_sweep_distance)));
    report.contract("ground sweep distance < 1e-8", sweep.max_sweep_distance < 1e-8);
    report.contract("ground prediction distance < 1e-8", sweep.max_prediction_distance < 1e-8);
    report.csv("ground_sweep.csv", |buf| sweep.write_csv(buf))?;

    let beta = finite_beta(sc)?;
    let y = p.set_y();
    let rho = gibbs_state(&build_hamiltonian(&lat)?, beta)?;
    let thermal = alignment_from_state(&partial_trace(&rho, &y)?, p.set_s(), DEFAULT_EPS)?;
    report.line(format!("condition9: {} (beta={})", if thermal.pass { "PASS" } else { "FAIL" }, beta_label(Beta::Finite(beta))));
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut states = Vec::new();
    for (_, v, point) in sweep_points(sc)? {
        let rho = gibbs_state(&build_hamiltonian(&point)?, beta)?;
        let ed = expectation_of(&rho, &SiteObservable::zz(l1, l2))?;
        let closed = f(beta, point.field_x(0), point.field_x(3));
        worst = worst.max((ed - closed).abs());
        rows.push(vec![sci(v), sci(ed), sci(closed)]);
        states.push(partial_trace(&rho, &y)?);
    }
    let drift = states.iter().map(|s| trace_distance(&states[0], s)).collect::<shieldlab::Result<Vec<_>>>()?;
    let drift = drift.into_iter().fold(0.0, f64::max);
    report.line(format!("<{pair}> at beta={} = {}", beta_label(Beta::Finite(beta)), sci(thermal.values[0].1)));
    report.line(format!("thermal sweep distance = {}", sci(drift)));
    report.contract(format!("<{pair}> matches f(beta, h1, h4) < 1e-9"), worst < 1e-9);
    report.file("thermal.csv", table(&["value", "zz_ed", "f"], &rows));
    Ok(())
}

fn chain5(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let beta = finite_beta(sc)?;
    let p = need_partition(sc)?;
    let (l1, l2) = (p.set_s()[0], p.set_s()[1]);
    let b = p.set_b();
    let (o1, o2) = (b[0], b[1]);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let (mut ground_vals, mut thermal_vals) = (Vec::new(), Vec::new());
    let points = sweep_points(sc)?;
    let lat0 = &points[0].2;
    for (_, v, lat) in &points {
        let h = build_hamiltonian(lat)?;
        let rho = gibbs_state(&h, beta)?;
        let inner = expectation_of(&rho, &SiteObservable::zz(l1, l2))?;
        let closed = g(beta, lat.field_x(p.set_a()[0]));
        worst = worst.max((inner - closed).abs());
        let gs = ground_space(&h, gap_tol(sc))?;
        let outer_ground = expectation_of(&gs.reduced(&[o1, o2])?, &SiteObservable::zz(o1, o2))?;
        let outer_thermal = expectation_of(&rho, &SiteObservable::zz(o1, o2))?;
        ground_vals.push(outer_ground);
        thermal_vals.push(outer_thermal);
        rows.push(vec![sci(*v), sci(inner), sci(closed), sci(outer_ground), sci(outer_thermal)]);
    }
    let spread = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let (gs, th) = (spread(&ground_vals), spread(&thermal_vals));
    let inner_name = zz_name(lat0, l1, l2);
    let outer_name = zz_name(lat0, o1, o2);
    report.line(format!("max |<{inner_name}> - g| = {}", sci(worst)));
    report.line(format!("ground <{outer_name}> spread = {}", sci(gs)));
    report.line(format!("<{outer_name}> spread at beta={} = {}", beta_label(Beta::Finite(beta)), sci(th)));
    report.contract(format!("<{inner_name}> matches g(beta, h3) < 1e-9"), worst < 1e-9);
    report.contract(format!("ground <{outer_name}> spread < 1e-8"), gs < 1e-8);
    report.file(
        "correlations.csv",
        table(&["value", "zz_inner_ed", "g", "zz_outer_ground", "zz_outer_thermal"], &rows),
    );
    Ok(())
}

/// Sign of the far pair the `a = 1/2` threshold predicts; `None` means both signs.
fn threshold_sign(a: f64) -> Option<i8> {
    match a.partial_cmp(&0.5) {
        Some(std::cmp::Ordering::Greater) => Some(1),
        Some(std::cmp::Ordering::Less) => Some(-1),
        _ => None,
    }
}

fn pentagons(sc: &Scenario, count: usize, report: &mut RunReport) -> Result<()> {
    let (i, j) = catalog::pentagon_chain(count, 0.5)?.far_pair;
    let a_path = ParamPath::Named("a".into());
    let current = *sc.params.get("a").context("the pentagon scenario declares `a`")?;
    let mut grid = sc.sweep_values()?.unwrap_or_default();
    if !grid.contains(&current) {
        grid.push(current);
    }
    let mut rows = Vec::new();
    let mut all_match = true;
    let mut headline = String::new();
    for &a in &grid {
        let lat = sc.with_value(&a_path, a)?.resolve_lattice()?;
        let ground = enumerate_ground(&lat)?;
        let d = ground.pair_distribution(i, j);
        all_match &= match threshold_sign(a) {
            Some(s) => d.deterministic() == Some(s),
            None => d.both_signs(),
        };
        rows.push(vec![sci(a), sci(ground.energy_min), ground.degeneracy().to_string(), sci(d.mean()), d.plus.to_string(), d.minus.to_string()]);
        if a == current {
            let value = match d.deterministic() {
                Some(s) => sign_text(s).to_string(),
                None => "±1 (both signs in the ground set)".to_string(),
            };
            headline = format!("{} = {value}", zz_name(&lat, i, j));
            report.csv("ground_set.csv", |buf| ground.write_csv(&[(i, j)], buf))?;
        }
    }
    report.line(format!("pentagons: {count}, sites: {}", 5 + 3 * (count - 1)));
    report.line(format!("a = {}", sci(current)));
    report.line(headline);
    report.contract("far-pair sign follows the a = 1/2 threshold", all_match);
    report.file("pentagon_scan.csv", table(&["a", "energy", "degeneracy", "zz", "plus", "minus"], &rows));
    Ok(())
}

fn ladder(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let p = need_partition(sc)?;
    let (l1, l2) = (p.set_s()[0], p.set_s()[1]);
    let mut rows = Vec::new();
    for (_, m, lat) in sweep_points(sc)? {
        let ground = enumerate_ground(&lat)?;
        rows.push(LadderRow { m, energy: ground.energy_min, degeneracy: ground.degeneracy(), zz: ground.zz(l1, l2) });
    }
    rows.sort_by(|a, b| a.m.total_cmp(&b.m));
    let lat = sc.resolve_lattice()?;
    let name = zz_name(&lat, l1, l2);
    let below = rows.iter().filter(|r| r.m < 2.0).all(|r| r.shielded() && r.degeneracy == 2);
    let above = rows.iter().filter(|r| r.m > 2.0).all(|r| !r.shielded() && r.degeneracy > 2);
    let transition = ladder_transition(&rows);
    match transition {
        Some((lo, hi)) => report.line(format!("transition between M = {} and M = {}", sci(lo), sci(hi))),
        None => report.line("transition: not bracketed by the grid"),
    }
    for r in &rows {
        report.line(format!("M = {}: |<{name}>| = {}, degeneracy {}", sci(r.m), sci(r.zz.abs()), r.degeneracy));
    }
    report.contract(format!("|<{name}>| = 1 with a two-fold ground set for M < 2"), below);
    report.contract(format!("|<{name}>| < 1 with a larger ground set for M > 2"), above);
    report.contract(
        "transition within [1.9, 2.1]",
        matches!(transition, Some((lo, hi)) if lo >= 1.9 - 1e-12 && hi <= 2.1 + 1e-12),
    );
    let csv: Vec<Vec<String>> =
        rows.iter().map(|r| vec![sci(r.m), sci(r.energy), r.degeneracy.to_string(), sci(r.zz)]).collect();
    report.file("ladder_scan.csv", table(&["M", "energy", "degeneracy", "zz"], &csv));
    Ok(())
}

fn quasichain(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let beta = finite_beta(sc)?;
    let p = need_partition(sc)?;
    let lat = sc.resolve_lattice()?;
    let r = check_identities(&lat, p, &[beta])?;
    let d = sector_decompose(&lat, p)?;
    let direct = partial_trace(&gibbs_state(&build_hamiltonian(&lat)?, beta)?, &p.set_y())?;
    let oracle = d.sector_reduced_gibbs(beta)?;
    let gap = trace_distance(&direct, &oracle)?;
    let items = [
        ("sector reassembly", r.reassembly, IdentityReport::REASSEMBLY_TOL),
        ("Gibbs factorization", r.factorization, IdentityReport::FACTORIZATION_TOL),
        ("parity conjugation", r.parity_conjugation, IdentityReport::PARITY_TOL),
        ("trace parity", r.parity_trace, IdentityReport::TRACE_PARITY_TOL),
        ("sector-assembled reduced state", gap, 1e-10),
    ];
    let mut rows = Vec::new();
    for (name, value, tol) in items {
        report.line(format!("{name} = {}", sci(value)));
        report.contract(format!("{name} < {tol:e}"), value < tol);
        rows.push(vec![name.replace(' ', "_"), sci(value), sci(tol)]);
    }
    let ground = alignment_check(&lat, p, gap_tol(sc), DEFAULT_EPS)?;
    report.line(format!("condition9: {} (ground)", if ground.pass { "PASS" } else { "FAIL" }));
    report.file("identities.csv", table(&["quantity", "value", "tolerance"], &rows));
    report.csv("rho_y.csv", |buf| direct.write_csv(buf))?;
    Ok(())
}
