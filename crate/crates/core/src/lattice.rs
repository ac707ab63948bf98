//! Lattices, partitions and the structural checks the shielding checks need.
//!
//! Sign convention: `H = -Σ J_ij Z_i Z_j - Σ h_i X_i - Σ g_i Y_i`, so `J > 0`
//! is ferromagnetic. Site 0 is the least-significant bit of a basis index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest lattice the dense quantum paths accept.
pub const MAX_QUANTUM_SITES: usize = 12;
/// Largest lattice the classical enumerator accepts.
pub const MAX_CLASSICAL_SITES: usize = 26;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinLattice {
    n_sites: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields_x: BTreeMap<usize, f64>,
    fields_y: BTreeMap<usize, f64>,
    labels: Option<Vec<String>>,
}

impl SpinLattice {
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("a lattice needs at least one site".into()));
        }
        Ok(Self {
            n_sites,
            couplings: BTreeMap::new(),
            fields_x: BTreeMap::new(),
            fields_y: BTreeMap::new(),
            labels: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
        }
        Ok(())
    }

    /// Sets `J_ij`. A zero value removes the edge.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::SelfCoupling(i));
        }
        let key = (i.min(j), i.max(j));
        if value == 0.0 {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, value);
        }
        Ok(())
    }

    /// Adds `value` to `J_ij`; used when two building blocks share an edge.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let current = self.coupling(i, j);
        self.set_coupling(i, j, current + value)
    }

    pub fn set_field_x(&mut self, site: usize, value: f64) -> Result<()> {
        self.check_site(site)?;
        if value == 0.0 {
            self.fields_x.remove(&site);
        } else {
            self.fields_x.insert(site, value);
        }
        Ok(())
    }

    pub fn set_field_y(&mut self, site: usize, value: f64) -> Result<()> {
        self.check_site(site)?;
        if value == 0.0 {
            self.fields_y.remove(&site);
        } else {
            self.fields_y.insert(site, value);
        }
        Ok(())
    }

    pub fn with_coupling(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.set_coupling(i, j, value)?;
        Ok(self)
    }

    pub fn with_field_x(mut self, site: usize, value: f64) -> Result<Self> {
        self.set_field_x(site, value)?;
        Ok(self)
    }

    pub fn with_field_y(mut self, site: usize, value: f64) -> Result<Self> {
        self.set_field_y(site, value)?;
        Ok(self)
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.n_sites {
            return Err(Error::InvalidArgument(format!(
                "{} labels given for {} sites",
                labels.len(),
                self.n_sites
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn field_x(&self, site: usize) -> f64 {
        self.fields_x.get(&site).copied().unwrap_or(0.0)
    }

    pub fn field_y(&self, site: usize) -> f64 {
        self.fields_y.get(&site).copied().unwrap_or(0.0)
    }

    /// Nonzero couplings as `((i, j), J)` with `i < j`.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn fields_x(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fields_x.iter().map(|(&k, &v)| (k, v))
    }

    pub fn fields_y(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fields_y.iter().map(|(&k, &v)| (k, v))
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of a site: its label when present, otherwise the index.
    pub fn label(&self, site: usize) -> String {
        match &self.labels {
            Some(l) if site < l.len() => l[site].clone(),
            _ => site.to_string(),
        }
    }

    /// Site index carrying `label`, if any.
    pub fn site_by_label(&self, label: &str) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }

    pub fn neighbors(&self, site: usize) -> Vec<(usize, f64)> {
        self.couplings
            .iter()
            .filter_map(|(&(i, j), &v)| {
                if i == site {
                    Some((j, v))
                } else if j == site {
                    Some((i, v))
                } else {
                    None
                }
            })
            .collect()
    }

    /// True when every transverse field vanishes (the Hamiltonian is diagonal).
    pub fn is_classical(&self) -> bool {
        self.fields_x.is_empty() && self.fields_y.is_empty()
    }

    pub fn has_field(&self, site: usize) -> bool {
        self.field_x(site) != 0.0 || self.field_y(site) != 0.0
    }

    /// Lattice restricted to `sites`, re-indexed by position in `sites`.
    /// Keeps every coupling and field supported inside the subset.
    pub fn induced(&self, sites: &[usize]) -> Result<SpinLattice> {
        for &s in sites {
            self.check_site(s)?;
        }
        let pos: BTreeMap<usize, usize> = sites.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let mut sub = SpinLattice::new(sites.len().max(1))?;
        if sites.is_empty() {
            return Ok(sub);
        }
        for ((i, j), v) in self.couplings() {
            if let (Some(&a), Some(&b)) = (pos.get(&i), pos.get(&j)) {
                sub.set_coupling(a, b, v)?;
            }
        }
        for (&s, &k) in &pos {
            sub.set_field_x(k, self.field_x(s))?;
            sub.set_field_y(k, self.field_y(s))?;
        }
        if let Some(labels) = &self.labels {
            sub.labels = Some(sites.iter().map(|&s| labels[s].clone()).collect());
        }
        Ok(sub)
    }

    /// Applies a single-parameter edit.
    pub fn apply(&mut self, path: &ParamPath, value: f64) -> Result<()> {
        match path {
            ParamPath::FieldX(s) => self.set_field_x(*s, value),
            ParamPath::FieldY(s) => self.set_field_y(*s, value),
            ParamPath::Coupling(i, j) => self.set_coupling(*i, *j, value),
            ParamPath::Named(name) => Err(Error::InvalidArgument(format!(
                "parameter `{name}` is not a lattice entry; resolve it through a scenario"
            ))),
        }
    }
}

/// Address of one tunable number in a scenario or lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamPath {
    /// A named scenario parameter (`a`, `M`, ...).
    Named(String),
    FieldX(usize),
    FieldY(usize),
    Coupling(usize, usize),
}

impl ParamPath {
    /// Sites whose parameters this path touches.
    pub fn sites(&self) -> Vec<usize> {
        match self {
            ParamPath::Named(_) => vec![],
            ParamPath::FieldX(s) | ParamPath::FieldY(s) => vec![*s],
            ParamPath::Coupling(i, j) => vec![*i, *j],
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPath::Named(n) => write!(f, "{n}"),
            ParamPath::FieldX(s) => write!(f, "hx.{s}"),
            ParamPath::FieldY(s) => write!(f, "hy.{s}"),
            ParamPath::Coupling(i, j) => write!(f, "J.{i}.{j}"),
        }
    }
}

impl FromStr for ParamPath {
    type Err = Error;

    /// Accepts `hx.3`, `hy.3`, `J.0.1`, optionally prefixed by `lattice.`,
    /// and `name` or `params.name` for named parameters.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognized parameter path `{s}`"));
        let trimmed = s.trim();
        let body = trimmed.strip_prefix("lattice.").unwrap_or(trimmed);
        let parts: Vec<&str> = body.split('.').collect();
        let idx = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["hx", i] => Ok(ParamPath::FieldX(idx(i)?)),
            ["hy", i] => Ok(ParamPath::FieldY(idx(i)?)),
            ["J", i, j] => {
                let (i, j) = (idx(i)?, idx(j)?);
                Ok(ParamPath::Coupling(i.min(j), i.max(j)))
            }
            ["params", name] if is_identifier(name) => Ok(ParamPath::Named(name.to_string())),
            [name] if is_identifier(name) => Ok(ParamPath::Named(name.to_string())),
            _ => Err(bad()),
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The `(A, S, B)` split; `X = A ∪ S`, `Y = S ∪ B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    set_a: BTreeSet<usize>,
    set_s: Vec<usize>,
    set_b: BTreeSet<usize>,
}

impl Partition {
    pub fn new(
        set_a: impl IntoIterator<Item = usize>,
        set_s: impl IntoIterator<Item = usize>,
        set_b: impl IntoIterator<Item = usize>,
    ) -> Self {
        Self {
            set_a: set_a.into_iter().collect(),
            set_s: set_s.into_iter().collect(),
            set_b: set_b.into_iter().collect(),
        }
    }

    pub fn set_a(&self) -> Vec<usize> {
        self.set_a.iter().copied().collect()
    }

    /// Interface sites in the order `L_1, ..., L_m`.
    pub fn set_s(&self) -> &[usize] {
        &self.set_s
    }

    pub fn set_b(&self) -> Vec<usize> {
        self.set_b.iter().copied().collect()
    }

    /// `Y = S ∪ B`, sorted ascending.
    pub fn set_y(&self) -> Vec<usize> {
        let mut y: Vec<usize> = self.set_s.iter().chain(self.set_b.iter()).copied().collect();
        y.sort_unstable();
        y.dedup();
        y
    }

    /// `X = A ∪ S`, sorted ascending.
    pub fn set_x(&self) -> Vec<usize> {
        let mut x: Vec<usize> = self.set_a.iter().chain(self.set_s.iter()).copied().collect();
        x.sort_unstable();
        x.dedup();
        x
    }

    pub fn interface_len(&self) -> usize {
        self.set_s.len()
    }

    pub fn in_a(&self, site: usize) -> bool {
        self.set_a.contains(&site)
    }

    pub fn in_b(&self, site: usize) -> bool {
        self.set_b.contains(&site)
    }

    pub fn in_s(&self, site: usize) -> bool {
        self.set_s.contains(&site)
    }
}

/// One violated structural hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    Overlap { site: String },
    Uncovered { site: String },
    DuplicateInterfaceSite { site: String },
    AbCoupling { a: String, b: String },
    InterfaceField { site: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::Overlap { site } => write!(f, "site {site} belongs to more than one of A, S, B"),
            Issue::Uncovered { site } => write!(f, "site {site} is in none of A, S, B"),
            Issue::DuplicateInterfaceSite { site } => {
                write!(f, "interface site {site} listed more than once")
            }
            Issue::AbCoupling { a, b } => write!(f, "A–B coupling ({a},{b})"),
            Issue::InterfaceField { site } => write!(f, "nonzero field on interface site {site}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// True if any issue message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.to_string().contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "all structural hypotheses hold");
        }
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "- {issue}")?;
        }
        Ok(())
    }
}

/// Lists every violated structural hypothesis of the shielding checks.
pub fn validate_partition(lattice: &SpinLattice, partition: &Partition) -> Result<ValidationReport> {
    let n = lattice.n_sites();
    let all = partition
        .set_a
        .iter()
        .chain(partition.set_s.iter())
        .chain(partition.set_b.iter());
    for &s in all {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n_sites: n });
        }
    }

    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for &s in &partition.set_s {
        if !seen.insert(s) {
            report.issues.push(Issue::DuplicateInterfaceSite { site: lattice.label(s) });
        }
    }
    for site in 0..n {
        let count = partition.in_a(site) as usize + partition.in_s(site) as usize + partition.in_b(site) as usize;
        if count > 1 {
            report.issues.push(Issue::Overlap { site: lattice.label(site) });
        } else if count == 0 {
            report.issues.push(Issue::Uncovered { site: lattice.label(site) });
        }
    }
    for ((i, j), _) in lattice.couplings() {
        let (a, b) = if partition.in_a(i) && partition.in_b(j) {
            (i, j)
        } else if partition.in_a(j) && partition.in_b(i) {
            (j, i)
        } else {
            continue;
        };
        report.issues.push(Issue::AbCoupling { a: lattice.label(a), b: lattice.label(b) });
    }
    for &s in &partition.set_s {
        if lattice.has_field(s) {
            report.issues.push(Issue::InterfaceField { site: lattice.label(s) });
        }
    }
    Ok(report)
}

/// Whether the interface is connected through couplings between interface sites.
pub fn interface_connected(lattice: &SpinLattice, partition: &Partition) -> bool {
    let s = partition.set_s();
    if s.len() <= 1 {
        return true;
    }
    let mut visited = vec![false; s.len()];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(k) = queue.pop_front() {
        for (other, seen) in visited.iter_mut().enumerate() {
            if !*seen && lattice.coupling(s[k], s[other]) != 0.0 {
                *seen = true;
                queue.push_back(other);
            }
        }
    }
    visited.into_iter().all(|v| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_site(h1: f64, h4: f64) -> SpinLattice {
        SpinLattice::new(4)
            .unwrap()
            .with_coupling(0, 1, 1.0)
            .unwrap()
            .with_coupling(0, 2, 1.0)
            .unwrap()
            .with_coupling(1, 3, 1.0)
            .unwrap()
            .with_coupling(2, 3, 1.0)
            .unwrap()
            .with_field_x(0, h1)
            .unwrap()
            .with_field_x(3, h4)
            .unwrap()
            .with_labels(["1", "2", "3", "4"])
            .unwrap()
    }

    fn single_interface() -> (SpinLattice, Partition) {
        let lat = SpinLattice::new(3)
            .unwrap()
            .with_coupling(0, 1, 1.0)
            .unwrap()
            .with_coupling(1, 2, 0.5)
            .unwrap()
            .with_field_x(0, 0.7)
            .unwrap()
            .with_field_x(2, 0.4)
            .unwrap()
            .with_labels(["A1", "L", "B1"])
            .unwrap();
        (lat, Partition::new([0], [1], [2]))
    }

    #[test]
    fn single_site_interface_is_valid() {
        let (lat, p) = single_interface();
        assert!(validate_partition(&lat, &p).unwrap().is_empty());
    }

    #[test]
    fn field_on_interface_is_reported() {
        let (mut lat, p) = single_interface();
        lat.set_field_x(1, 0.3).unwrap();
        let report = validate_partition(&lat, &p).unwrap();
        assert!(report.mentions("nonzero field on interface site L"), "{report}");
    }

    #[test]
    fn ab_edge_is_reported() {
        let mut lat = four_site(1.0, 1.0);
        lat.set_coupling(0, 3, 1.0).unwrap();
        let p = Partition::new([0], [1, 2], [3]);
        let report = validate_partition(&lat, &p).unwrap();
        assert!(report.mentions("A–B coupling (1,4)"), "{report}");
    }

    #[test]
    fn overlap_and_uncovered_sites() {
        let lat = four_site(1.0, 1.0);
        let p = Partition::new([0, 1], [1, 2], []);
        let report = validate_partition(&lat, &p).unwrap();
        assert!(report.mentions("site 2 belongs to more than one"));
        assert!(report.mentions("site 4 is in none"));
    }

    #[test]
    fn out_of_range_partition_is_an_error() {
        let lat = four_site(1.0, 1.0);
        let p = Partition::new([0], [1, 9], [3]);
        assert!(matches!(validate_partition(&lat, &p), Err(Error::SiteOutOfRange { site: 9, .. })));
    }

    #[test]
    fn coupling_invariants() {
        let mut lat = SpinLattice::new(3).unwrap();
        assert!(matches!(lat.set_coupling(1, 1, 1.0), Err(Error::SelfCoupling(1))));
        assert!(lat.set_coupling(0, 3, 1.0).is_err());
        lat.set_coupling(2, 0, 0.5).unwrap();
        assert_eq!(lat.coupling(0, 2), 0.5);
        assert_eq!(lat.couplings().count(), 1);
        lat.add_coupling(0, 2, -0.5).unwrap();
        assert_eq!(lat.couplings().count(), 0);
    }

    #[test]
    fn connectivity_of_interfaces() {
        let (lat, p) = single_interface();
        assert!(interface_connected(&lat, &p));

        let diamond = four_site(1.0, 1.0);
        let p = Partition::new([0], [1, 2], [3]);
        assert!(!interface_connected(&diamond, &p));
        let mut bridged = diamond.clone();
        bridged.set_coupling(1, 2, 1.0).unwrap();
        assert!(interface_connected(&bridged, &p));
    }

    #[test]
    fn induced_sublattice_reindexes() {
        let lat = four_site(0.3, 0.9);
        let sub = lat.induced(&[1, 2, 3]).unwrap();
        assert_eq!(sub.n_sites(), 3);
        assert_eq!(sub.coupling(0, 2), 1.0);
        assert_eq!(sub.coupling(1, 2), 1.0);
        assert_eq!(sub.coupling(0, 1), 0.0);
        assert_eq!(sub.field_x(2), 0.9);
        assert_eq!(sub.label(0), "2");
    }

    #[test]
    fn param_paths_parse() {
        assert_eq!("hx.3".parse::<ParamPath>().unwrap(), ParamPath::FieldX(3));
        assert_eq!("lattice.J.4.1".parse::<ParamPath>().unwrap(), ParamPath::Coupling(1, 4));
        assert_eq!("params.a".parse::<ParamPath>().unwrap(), ParamPath::Named("a".into()));
        assert_eq!("M".parse::<ParamPath>().unwrap(), ParamPath::Named("M".into()));
        assert!("hx.x".parse::<ParamPath>().is_err());
        for p in ["hx.2", "hy.0", "J.1.5", "a"] {
            assert_eq!(p.parse::<ParamPath>().unwrap().to_string(), p);
        }
    }
}
