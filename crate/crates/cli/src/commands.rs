use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use shieldlab::classical::{enumerate_ground, frustration_free_check};
use shieldlab::csvfmt::{row, sci};
use shieldlab::lattice::{validate_partition, ParamPath, Partition, SpinLattice};
use shieldlab::operator::{build_hamiltonian, expectation_of, partial_trace, trace_distance, DensityMatrix, Pauli};
use shieldlab::scenario::{parse_scenario, Beta, Scenario};
use shieldlab::shielding::{alignment_from_state, single_site_verify, ground_sweep_verify, SweepPoint, DEFAULT_EPS};
use shieldlab::spectral::{eigendecompose, gibbs_state, ground_from_spectrum, ground_space, DEFAULT_GAP_TOL};

use crate::report::RunReport;

/// Command-wide edits applied on top of a scenario.
pub struct Edits<'a> {
    pub overrides: &'a [String],
    pub beta: Option<&'a str>,
}

impl Edits<'_> {
    pub fn apply(&self, mut sc: Scenario) -> Result<Scenario> {
        for kv in self.overrides {
            sc.apply_override_str(kv).with_context(|| format!("applying override `{kv}`"))?;
        }
        if let Some(b) = self.beta {
            sc.beta = Some(Beta::parse(b)?);
        }
        Ok(sc)
    }
}

pub fn load(path: &Path, edits: &Edits) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let sc = parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))?;
    edits.apply(sc)
}

pub fn gap_tol(sc: &Scenario) -> f64 {
    sc.gap_tol.unwrap_or(DEFAULT_GAP_TOL)
}

pub fn need_partition(sc: &Scenario) -> Result<&Partition> {
    sc.partition.as_ref().ok_or_else(|| anyhow!("the scenario has no [partition] section"))
}

pub fn need_beta(sc: &Scenario) -> Result<Beta> {
    sc.beta.ok_or_else(|| anyhow!("no temperature given; set run.beta or pass --beta"))
}

/// Shortest decimal form of a temperature for summaries: `1`, `0.5`, `INF`.
pub fn beta_label(beta: Beta) -> String {
    match beta {
        Beta::Finite(b) => format!("{b}"),
        Beta::Infinite => "INF".into(),
    }
}

pub fn zz_name(lat: &SpinLattice, i: usize, j: usize) -> String {
    format!("Z{}Z{}", lat.label(i), lat.label(j))
}

pub fn sign_text(s: i8) -> &'static str {
    if s > 0 {
        "+1"
    } else {
        "-1"
    }
}

/// A CSV from a header and pre-formatted rows.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = row(header.iter().copied());
    out.push('\n');
    for r in rows {
        out.push_str(&row(r));
        out.push('\n');
    }
    out.into_bytes()
}

/// Sweep points of the scenario, or the scenario itself when it has no sweep.
pub fn sweep_points(sc: &Scenario) -> Result<Vec<SweepPoint>> {
    match &sc.sweep {
        Some(sweep) => sweep
            .grid
            .values()?
            .into_iter()
            .map(|v| Ok((Some(sweep.path.clone()), v, sc.with_value(&sweep.path, v)?.resolve_lattice()?)))
            .collect(),
        None => Ok(vec![(None, 0.0, sc.resolve_lattice()?)]),
    }
}

/// The state the scenario's temperature selects, on all sites.
fn full_state(lat: &SpinLattice, beta: Beta, gap_tol: f64) -> Result<DensityMatrix> {
    let h = build_hamiltonian(lat)?;
    Ok(match beta {
        Beta::Finite(b) => gibbs_state(&h, b)?,
        Beta::Infinite => ground_space(&h, gap_tol)?.normalized(),
    })
}

pub fn build(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let lat = sc.resolve_lattice()?;
    let h = build_hamiltonian(&lat)?;
    report.line(format!("sites: {}", lat.n_sites()));
    report.line(format!("dimension: {}", h.dim()));
    report.line(format!("couplings: {}", lat.couplings().count()));
    if let Some(p) = &sc.partition {
        let issues = validate_partition(&lat, p)?;
        if issues.is_empty() {
            report.line("partition hypotheses: OK");
        } else {
            report.line(format!("partition hypotheses: {issues}"));
        }
    }
    report.csv("hamiltonian.csv", |buf| h.write_csv(buf))?;
    report.file("scenario.txt", sc.to_text().into_bytes());
    Ok(())
}

pub fn spectrum(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let lat = sc.resolve_lattice()?;
    let h = build_hamiltonian(&lat)?;
    let spec = eigendecompose(&h)?;
    let ground = ground_from_spectrum(&spec, gap_tol(sc), lat.n_sites());
    report.line(format!("ground energy: {}", sci(ground.energy)));
    report.line(format!("degeneracy: {}", ground.degeneracy));
    match ground.gap {
        Some(g) => report.line(format!("gap: {}", sci(g))),
        None => report.line("gap: none (the whole spectrum is degenerate)"),
    }
    let rows: Vec<Vec<String>> = spec.eigenvalues.iter().enumerate().map(|(k, e)| vec![k.to_string(), sci(*e)]).collect();
    report.file("spectrum.csv", table(&["index", "energy"], &rows));
    Ok(())
}

pub fn reduce(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let lat = sc.resolve_lattice()?;
    let beta = need_beta(sc)?;
    let rho = full_state(&lat, beta, gap_tol(sc))?;
    let keep = match &sc.partition {
        Some(p) => p.set_y(),
        None => (0..lat.n_sites()).collect(),
    };
    let reduced = partial_trace(&rho, &keep)?;
    report.line(format!("beta: {}", beta_label(beta)));
    report.line(format!("kept sites: {keep:?}"));
    if let Some(p) = &sc.partition {
        let c9 = alignment_from_state(&reduced, p.set_s(), DEFAULT_EPS)?;
        report.line(format!("condition9: {} (beta={})", if c9.pass { "PASS" } else { "FAIL" }, beta_label(beta)));
    }
    let mut rows = Vec::new();
    for obs in &sc.observables {
        let v = expectation_of(&rho, obs)?;
        report.line(format!("<{obs}> = {}", sci(v)));
        rows.push(vec![obs.to_string(), sci(v)]);
    }
    if !rows.is_empty() {
        report.file("observables.csv", table(&["observable", "value"], &rows));
    }
    report.csv("rho_y.csv", |buf| reduced.write_csv(buf))?;
    Ok(())
}

pub fn shielding_scan(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let p = need_partition(sc)?;
    let beta = need_beta(sc)?;
    let points = sweep_points(sc)?;
    match beta {
        Beta::Infinite => {
            let r = ground_sweep_verify(p, gap_tol(sc), DEFAULT_EPS, points)?;
            let failed = r.alignment_failures();
            report.line(format!("points: {}, condition9 failures: {}", r.points.len(), failed.len()));
            report.line(format!("sector groups: {}", r.groups.len()));
            for g in &r.groups {
                let label = g.sector.as_ref().map(|s| s.to_string()).unwrap_or_default();
                report.line(format!("group {label}: {} points", g.members.len()));
            }
            report.line(format!("max sweep distance = {}", sci(r.max_sweep_distance)));
            report.line(format!("max prediction distance = {}", sci(r.max_prediction_distance)));
            report.contract("max sweep distance < 1e-8", r.max_sweep_distance < 1e-8);
            report.contract("prediction distance < 1e-8", r.max_prediction_distance < 1e-8);
            report.csv("sweep.csv", |buf| r.write_csv(buf))?;
        }
        Beta::Finite(b) if p.interface_len() == 1 => {
            let r = single_site_verify(p, b, points)?;
            report.line(format!("max sweep distance = {}", sci(r.max_sweep_distance)));
            report.line(format!("distance to Gibbs(H_Y) = {}", sci(r.max_prediction_distance)));
            report.contract("max sweep distance < 1e-9", r.max_sweep_distance < 1e-9);
            report.contract("distance to Gibbs(H_Y) < 1e-9", r.max_prediction_distance < 1e-9);
            report.csv("sweep.csv", |buf| r.write_csv(buf))?;
        }
        Beta::Finite(b) => thermal_scan(p, b, points, report)?,
    }
    Ok(())
}

/// Multi-site interface at finite β: nothing is promised, so everything is reported.
fn thermal_scan(p: &Partition, beta: f64, points: Vec<SweepPoint>, report: &mut RunReport) -> Result<()> {
    let y = p.set_y();
    let mut states = Vec::new();
    let mut rows = Vec::new();
    let mut any_pass = false;
    let mut max = 0.0f64;
    for (k, (path, v, lat)) in points.iter().enumerate() {
        let rho = partial_trace(&gibbs_state(&build_hamiltonian(lat)?, beta)?, &y)?;
        let c9 = alignment_from_state(&rho, p.set_s(), DEFAULT_EPS)?;
        any_pass |= c9.pass;
        let d = match states.first() {
            Some(first) => trace_distance(first, &rho)?,
            None => 0.0,
        };
        max = max.max(d);
        let mut r = vec![k.to_string(), path.as_ref().map(|x| x.to_string()).unwrap_or_default(), sci(*v)];
        r.extend(c9.values.iter().map(|x| sci(x.1)));
        r.push(sci(d));
        rows.push(r);
        states.push(rho);
    }
    report.line(format!("condition9: {} (beta={})", if any_pass { "PASS" } else { "FAIL" }, beta_label(Beta::Finite(beta))));
    report.line(format!("max sweep distance = {}", sci(max)));
    let s = p.set_s();
    let mut header = vec!["index".to_string(), "param".into(), "value".into()];
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            header.push(format!("zz_{}_{}", s[a], s[b]));
        }
    }
    header.push("distance_to_reference".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    report.file("sweep.csv", table(&header, &rows));
    Ok(())
}

pub fn classical_gs(sc: &Scenario, report: &mut RunReport) -> Result<()> {
    let lat = sc.resolve_lattice()?;
    let ground = enumerate_ground(&lat)?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if let Some(p) = &sc.partition {
        let s = p.set_s();
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                pairs.push((s[a], s[b]));
            }
        }
    }
    for obs in &sc.observables {
        if let [(i, Pauli::Z), (j, Pauli::Z)] = obs.factors() {
            if !pairs.contains(&(*i, *j)) {
                pairs.push((*i, *j));
            }
        }
    }
    report.line(format!("ground energy: {}", sci(ground.energy_min)));
    report.line(format!("degeneracy: {}", ground.degeneracy()));
    report.line(format!("exact arithmetic: {}", if ground.exact { "yes" } else { "no" }));
    for &(i, j) in &pairs {
        let d = ground.pair_distribution(i, j);
        let text = match d.deterministic() {
            Some(s) => sign_text(s).to_string(),
            None => format!("{} (both signs in the ground set)", sci(d.mean())),
        };
        report.line(format!("{} = {text}", zz_name(&lat, i, j)));
    }
    if let Some(p) = &sc.partition {
        let unsatisfied = frustration_free_check(&lat, &p.set_x(), &ground).iter().filter(|t| !t.satisfied).count();
        report.line(format!("unsatisfied bonds inside X: {unsatisfied}"));
    }
    report.csv("ground_set.csv", |buf| ground.write_csv(&pairs, buf))?;
    Ok(())
}

pub fn check_sweep_path(sc: &Scenario) -> Result<()> {
    if let Some(s) = &sc.sweep {
        if let ParamPath::Named(n) = &s.path {
            if !sc.params.contains_key(n) {
                bail!("sweep parameter `{n}` is not declared in [params]");
            }
        }
    }
    Ok(())
}
