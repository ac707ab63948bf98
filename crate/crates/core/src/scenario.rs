//! Scenario files: a lattice, an optional partition and run settings.
//!
//! ```text
//! # comments start with '#'
//! [params]
//! a = "0,5"                  # decimal commas are accepted inside quotes
//!
//! [lattice]
//! n_sites = 3
//! labels = ["A1", "L", "B1"] # optional
//! J = [0, 1, 1.0]            # repeatable: i, j, value
//! J = [1, 2, a]              # values may name a parameter, or its negative (-a)
//! hx = [0, 0.7]              # repeatable: site, value
//! hy = [2, 0.1]              # repeatable: site, value
//!
//! [partition]
//! a = [0]
//! s = [1]                    # order is the interface order
//! b = [2]
//!
//! [run]
//! beta = 1.0                 # or INF for the ground-space path
//! gap_tol = 1e-9
//! sweep.path = "hx.0"        # hx.i, hy.i, J.i.j or a parameter name
//! sweep.grid = "0.1:0.1:1.0" # inclusive start:step:stop, or a list
//! observables = ["z1*z2", "x0"]
//! ```
//!
//! Sites are 0-based. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::lattice::{is_identifier, ParamPath, Partition, SpinLattice};
use crate::operator::SiteObservable;

/// A number or a reference to a named parameter, optionally negated (`-M`).
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Param(String),
    NegParam(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{}", fmt_num(*x)),
            Value::Param(p) => write!(f, "{p}"),
            Value::NegParam(p) => write!(f, "-{p}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    /// The ground-space path.
    Infinite,
}

impl Beta {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_matches('"');
        if t.eq_ignore_ascii_case("inf") {
            return Ok(Beta::Infinite);
        }
        let x = parse_decimal(t).ok_or_else(|| Error::Semantic(format!("bad beta `{s}`")))?;
        Beta::finite(x)
    }

    pub fn finite(x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Semantic(format!("beta must be positive and finite, got {x}")));
        }
        Ok(Beta::Finite(x))
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(x) => write!(f, "{}", fmt_num(*x)),
            Beta::Infinite => write!(f, "INF"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    /// Inclusive arithmetic progression.
    Range { start: f64, step: f64, stop: f64 },
    List(Vec<f64>),
}

impl Grid {
    pub fn parse_range(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Semantic(format!("grid `{s}` is not start:step:stop"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> = parts.iter().map(|p| parse_decimal(p.trim()).ok_or_else(bad)).collect::<Result<_>>()?;
        let grid = Grid::Range { start: nums[0], step: nums[1], stop: nums[2] };
        grid.values()?;
        Ok(grid)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::List(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Semantic("sweep grid must be nonempty and finite".into()));
                }
                Ok(v.clone())
            }
            &Grid::Range { start, step, stop } => {
                if ![start, step, stop].iter().all(|x| x.is_finite()) || step == 0.0 {
                    return Err(Error::Semantic("sweep range needs finite values and a nonzero step".into()));
                }
                let span = (stop - start) / step;
                if span < -1e-9 {
                    return Err(Error::Semantic("sweep range is empty".into()));
                }
                let count = (span + 1e-9).floor() as usize + 1;
                if count > 1_000_000 {
                    return Err(Error::Semantic(format!("sweep range has {count} points")));
                }
                Ok((0..count).map(|k| start + k as f64 * step).collect())
            }
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Range { start, step, stop } => {
                write!(f, "\"{}:{}:{}\"", fmt_num(*start), fmt_num(*step), fmt_num(*stop))
            }
            Grid::List(v) => write!(f, "[{}]", v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub path: ParamPath,
    pub grid: Grid,
}

/// Lattice entries as written, before parameters are substituted.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub labels: Option<Vec<String>>,
    pub couplings: Vec<(usize, usize, Value)>,
    pub hx: Vec<(usize, Value)>,
    pub hy: Vec<(usize, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: BTreeMap<String, f64>,
    pub lattice: LatticeSpec,
    pub partition: Option<Partition>,
    pub beta: Option<Beta>,
    pub gap_tol: Option<f64>,
    pub sweep: Option<Sweep>,
    pub observables: Vec<SiteObservable>,
}

/// Shortest form that parses back to the same `f64`.
fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Parses `0.5`, `0,5`, `-1e-3`.
fn parse_decimal(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    let normalized = if t.contains(',') && !t.contains('.') { t.replacen(',', ".", 1) } else { t.to_string() };
    if normalized.contains(',') {
        return None;
    }
    normalized.parse::<f64>().ok().filter(|x| x.is_finite())
}

impl Scenario {
    /// Scenario holding a concrete lattice, with no parameters.
    pub fn from_lattice(lattice: &SpinLattice, partition: Option<Partition>) -> Self {
        Self {
            params: BTreeMap::new(),
            lattice: LatticeSpec {
                n_sites: lattice.n_sites(),
                labels: lattice.labels().map(|l| l.to_vec()),
                couplings: lattice.couplings().map(|((i, j), v)| (i, j, Value::Num(v))).collect(),
                hx: lattice.fields_x().map(|(s, v)| (s, Value::Num(v))).collect(),
                hy: lattice.fields_y().map(|(s, v)| (s, Value::Num(v))).collect(),
            },
            partition,
            beta: None,
            gap_tol: None,
            sweep: None,
            observables: vec![],
        }
    }

    /// Makes the entry at `path` refer to parameter `name`, creating the
    /// parameter with the entry's current value.
    pub fn bind(&mut self, path: &ParamPath, name: &str) -> Result<()> {
        self.bind_signed(path, name, false)
    }

    /// Like `bind`, but the entry becomes `-name`.
    pub fn bind_negated(&mut self, path: &ParamPath, name: &str) -> Result<()> {
        self.bind_signed(path, name, true)
    }

    fn bind_signed(&mut self, path: &ParamPath, name: &str, negate: bool) -> Result<()> {
        let current = self.resolve_lattice()?;
        let value = match path {
            ParamPath::FieldX(s) => current.field_x(*s),
            ParamPath::FieldY(s) => current.field_y(*s),
            ParamPath::Coupling(i, j) => current.coupling(*i, *j),
            ParamPath::Named(_) => return Err(Error::InvalidArgument("cannot bind a parameter to a parameter".into())),
        };
        let (stored, entry) = if negate {
            (-value, Value::NegParam(name.to_string()))
        } else {
            (value, Value::Param(name.to_string()))
        };
        self.params.insert(name.to_string(), stored);
        self.set_entry(path, entry)
    }

    fn set_entry(&mut self, path: &ParamPath, value: Value) -> Result<()> {
        let n = self.lattice.n_sites;
        for s in path.sites() {
            if s >= n {
                return Err(Error::Semantic(format!("site {s} out of range for {n} sites")));
            }
        }
        match path {
            ParamPath::FieldX(s) => upsert(&mut self.lattice.hx, |e| e.0 == *s, (*s, value)),
            ParamPath::FieldY(s) => upsert(&mut self.lattice.hy, |e| e.0 == *s, (*s, value)),
            ParamPath::Coupling(i, j) => {
                if i == j {
                    return Err(Error::SelfCoupling(*i));
                }
                let key = (*i.min(j), *i.max(j));
                upsert(&mut self.lattice.couplings, |e| (e.0.min(e.1), e.0.max(e.1)) == key, (key.0, key.1, value))
            }
            ParamPath::Named(name) => {
                if let Value::Num(x) = value {
                    if !self.params.contains_key(name) {
                        return Err(Error::Semantic(format!("unknown parameter `{name}`")));
                    }
                    self.params.insert(name.clone(), x);
                } else {
                    return Err(Error::Semantic("parameters must be numbers".into()));
                }
            }
        }
        Ok(())
    }

    /// Sets one numeric entry (a sweep point or an override).
    pub fn set_value(&mut self, path: &ParamPath, x: f64) -> Result<()> {
        self.set_entry(path, Value::Num(x))
    }

    pub fn with_value(&self, path: &ParamPath, x: f64) -> Result<Self> {
        let mut s = self.clone();
        s.set_value(path, x)?;
        Ok(s)
    }

    /// Applies a `key=value` edit such as `a=0.8`, `run.beta=INF`, `hx.3=0.2`, `J.0.1=-1`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key.strip_prefix("run.").unwrap_or(key) {
            "beta" => {
                self.beta = Some(Beta::parse(value)?);
                return Ok(());
            }
            "gap_tol" => {
                let x = parse_decimal(value.trim_matches('"'))
                    .filter(|&x| x > 0.0)
                    .ok_or_else(|| Error::Semantic(format!("bad gap_tol `{value}`")))?;
                self.gap_tol = Some(x);
                return Ok(());
            }
            _ => {}
        }
        let path: ParamPath = key.parse()?;
        let x = parse_decimal(value.trim().trim_matches('"'))
            .ok_or_else(|| Error::Semantic(format!("override `{key}` needs a number, got `{value}`")))?;
        self.set_value(&path, x)
    }

    /// Parses `key=value`.
    pub fn apply_override_str(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("override `{kv}` is not key=value")))?;
        self.apply_override(k, v)
    }

    fn eval(&self, v: &Value) -> Result<f64> {
        match v {
            Value::Num(x) => Ok(*x),
            Value::Param(p) | Value::NegParam(p) => {
                let x = self.params.get(p).copied().ok_or_else(|| Error::Semantic(format!("unknown parameter `{p}`")))?;
                Ok(if matches!(v, Value::NegParam(_)) { -x } else { x })
            }
        }
    }

    /// The lattice with every parameter substituted.
    pub fn resolve_lattice(&self) -> Result<SpinLattice> {
        let spec = &self.lattice;
        let mut lat = SpinLattice::new(spec.n_sites)?;
        for (i, j, v) in &spec.couplings {
            lat.set_coupling(*i, *j, self.eval(v)?)?;
        }
        for (s, v) in &spec.hx {
            lat.set_field_x(*s, self.eval(v)?)?;
        }
        for (s, v) in &spec.hy {
            lat.set_field_y(*s, self.eval(v)?)?;
        }
        if let Some(labels) = &spec.labels {
            lat = lat.with_labels(labels.clone())?;
        }
        Ok(lat)
    }

    pub fn sweep_values(&self) -> Result<Option<Vec<f64>>> {
        self.sweep.as_ref().map(|s| s.grid.values()).transpose()
    }

    /// Canonical text form; parsing it gives back an equal scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.params.is_empty() {
            out.push_str("[params]\n");
            for (k, v) in &self.params {
                let _ = writeln!(out, "{k} = {}", fmt_num(*v));
            }
            out.push('\n');
        }
        let l = &self.lattice;
        out.push_str("[lattice]\n");
        let _ = writeln!(out, "n_sites = {}", l.n_sites);
        if let Some(labels) = &l.labels {
            let q: Vec<String> = labels.iter().map(|s| format!("{s:?}")).collect();
            let _ = writeln!(out, "labels = [{}]", q.join(", "));
        }
        for (i, j, v) in &l.couplings {
            let _ = writeln!(out, "J = [{i}, {j}, {v}]");
        }
        for (s, v) in &l.hx {
            let _ = writeln!(out, "hx = [{s}, {v}]");
        }
        for (s, v) in &l.hy {
            let _ = writeln!(out, "hy = [{s}, {v}]");
        }
        if let Some(p) = &self.partition {
            let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
            out.push_str("\n[partition]\n");
            let _ = writeln!(out, "a = [{}]", list(&p.set_a()));
            let _ = writeln!(out, "s = [{}]", list(p.set_s()));
            let _ = writeln!(out, "b = [{}]", list(&p.set_b()));
        }
        let has_run = self.beta.is_some() || self.gap_tol.is_some() || self.sweep.is_some() || !self.observables.is_empty();
        if has_run {
            out.push_str("\n[run]\n");
            if let Some(b) = self.beta {
                let _ = writeln!(out, "beta = {b}");
            }
            if let Some(g) = self.gap_tol {
                let _ = writeln!(out, "gap_tol = {}", fmt_num(g));
            }
            if let Some(s) = &self.sweep {
                let _ = writeln!(out, "sweep.path = \"{}\"", s.path);
                let _ = writeln!(out, "sweep.grid = {}", s.grid);
            }
            if !self.observables.is_empty() {
                let q: Vec<String> = self.observables.iter().map(|o| format!("\"{o}\"")).collect();
                let _ = writeln!(out, "observables = [{}]", q.join(", "));
            }
        }
        out
    }
}

fn upsert<T>(v: &mut Vec<T>, matches: impl Fn(&T) -> bool, item: T) {
    match v.iter().position(matches) {
        Some(k) => v[k] = item,
        None => v.push(item),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Raw {
    Num(f64),
    Str(String),
    Ident(String),
    List(Vec<(Raw, usize)>),
}

impl Raw {
    fn kind(&self) -> &'static str {
        match self {
            Raw::Num(_) => "number",
            Raw::Str(_) => "string",
            Raw::Ident(_) => "identifier",
            Raw::List(_) => "list",
        }
    }
}

struct LineParser<'a> {
    line: usize,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, column: col + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] == b' ' || self.bytes[self.pos] == b'\t') {
            self.pos += 1;
        }
    }

    fn value(&mut self) -> Result<(Raw, usize)> {
        self.skip_ws();
        let start = self.pos;
        match self.bytes.get(self.pos) {
            None => Err(self.err(start, "expected a value")),
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.bytes.get(self.pos) == Some(&b']') {
                        self.pos += 1;
                        break;
                    }
                    if !items.is_empty() {
                        if self.bytes.get(self.pos) != Some(&b',') {
                            return Err(self.err(self.pos, "expected ',' or ']'"));
                        }
                        self.pos += 1;
                    }
                    let item = self.value()?;
                    if matches!(item.0, Raw::List(_)) {
                        return Err(self.err(item.1, "nested lists are not allowed"));
                    }
                    items.push(item);
                }
                Ok((Raw::List(items), start))
            }
            Some(b'"') => {
                self.pos += 1;
                let from = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'"' {
                    self.pos += 1;
                }
                if self.pos >= self.bytes.len() {
                    return Err(self.err(start, "unterminated string"));
                }
                let s = String::from_utf8_lossy(&self.bytes[from..self.pos]).into_owned();
                self.pos += 1;
                Ok((Raw::Str(s), start))
            }
            Some(_) => {
                while self.pos < self.bytes.len() && !b" \t,]".contains(&self.bytes[self.pos]) {
                    self.pos += 1;
                }
                let tok = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
                if is_identifier(&tok) || tok.strip_prefix('-').is_some_and(is_identifier) {
                    Ok((Raw::Ident(tok), start))
                } else if let Ok(x) = tok.parse::<f64>() {
                    Ok((Raw::Num(x), start))
                } else {
                    Err(self.err(start, format!("cannot read `{tok}` as a value")))
                }
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (k, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..k],
            _ => {}
        }
    }
    line
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Params,
    Lattice,
    Partition,
    Run,
}

struct Entry {
    line: usize,
    key: String,
    key_col: usize,
    value: Raw,
    value_col: usize,
}

impl Entry {
    fn err(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, column: col + 1, message: message.into() }
    }

    fn number(&self, raw: &Raw, col: usize) -> Result<f64> {
        match raw {
            Raw::Num(x) => Ok(*x),
            Raw::Str(s) => parse_decimal(s).ok_or_else(|| self.err(col, format!("`{s}` is not a decimal number"))),
            other => Err(self.err(col, format!("expected a number, found a {}", other.kind()))),
        }
    }

    fn value(&self, raw: &Raw, col: usize) -> Result<Value> {
        match raw {
            Raw::Ident(p) => Ok(match p.strip_prefix('-') {
                Some(q) => Value::NegParam(q.to_string()),
                None => Value::Param(p.clone()),
            }),
            other => self.number(other, col).map(Value::Num),
        }
    }

    fn index(&self, raw: &Raw, col: usize) -> Result<usize> {
        match raw {
            Raw::Num(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
            _ => Err(self.err(col, "expected a non-negative integer site index")),
        }
    }

    fn string(&self) -> Result<String> {
        match &self.value {
            Raw::Str(s) => Ok(s.clone()),
            Raw::Ident(s) => Ok(s.clone()),
            other => Err(self.err(self.value_col, format!("expected a string, found a {}", other.kind()))),
        }
    }

    fn list(&self) -> Result<&[(Raw, usize)]> {
        match &self.value {
            Raw::List(v) => Ok(v),
            other => Err(self.err(self.value_col, format!("expected a list, found a {}", other.kind()))),
        }
    }

    fn index_list(&self) -> Result<Vec<usize>> {
        self.list()?.iter().map(|(r, c)| self.index(r, *c)).collect()
    }
}

/// Parses a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut section: Option<Section> = None;
    let mut entries: Vec<(Section, Entry)> = Vec::new();
    let mut seen_sections = Vec::new();

    for (k, raw_line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = strip_comment(raw_line);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        if trimmed.starts_with('[') {
            let name = trimmed
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| Error::Parse { line: line_no, column: indent + 1, message: "malformed section header".into() })?;
            let sec = match name.trim() {
                "params" => Section::Params,
                "lattice" => Section::Lattice,
                "partition" => Section::Partition,
                "run" => Section::Run,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        column: indent + 2,
                        message: format!("unknown section `{other}`"),
                    })
                }
            };
            if seen_sections.contains(&sec) {
                return Err(Error::Parse { line: line_no, column: indent + 1, message: format!("section `{name}` repeated") });
            }
            seen_sections.push(sec);
            section = Some(sec);
            continue;
        }
        let eq = line.find('=').ok_or_else(|| Error::Parse {
            line: line_no,
            column: indent + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = line[..eq].trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse { line: line_no, column: indent + 1, message: "missing key".into() });
        }
        let sec = section.ok_or_else(|| Error::Parse {
            line: line_no,
            column: indent + 1,
            message: "key outside of any section".into(),
        })?;
        let mut p = LineParser { line: line_no, bytes: line.as_bytes(), pos: eq + 1 };
        let (value, value_col) = p.value()?;
        p.skip_ws();
        if p.pos < line.len() {
            return Err(p.err(p.pos, "unexpected trailing characters"));
        }
        entries.push((sec, Entry { line: line_no, key, key_col: indent, value, value_col }));
    }

    let mut params = BTreeMap::new();
    let mut n_sites = None;
    let mut labels = None;
    let mut couplings = Vec::new();
    let mut hx = Vec::new();
    let mut hy = Vec::new();
    let (mut set_a, mut set_s, mut set_b) = (None, None, None);
    let mut beta = None;
    let mut gap_tol = None;
    let mut sweep_path: Option<(ParamPath, usize, usize)> = None;
    let mut sweep_grid: Option<Grid> = None;
    let mut observables: Option<Vec<SiteObservable>> = None;

    fn once<T>(slot: &mut Option<T>, e: &Entry, v: T) -> Result<()> {
        if slot.is_some() {
            return Err(e.err(e.key_col, format!("key `{}` given twice", e.key)));
        }
        *slot = Some(v);
        Ok(())
    }

    for (sec, e) in &entries {
        match (sec, e.key.as_str()) {
            (Section::Params, name) => {
                if !is_identifier(name) || name.eq_ignore_ascii_case("inf") {
                    return Err(e.err(e.key_col, format!("`{name}` is not a valid parameter name")));
                }
                let x = e.number(&e.value, e.value_col)?;
                if params.insert(name.to_string(), x).is_some() {
                    return Err(e.err(e.key_col, format!("parameter `{name}` given twice")));
                }
            }
            (Section::Lattice, "n_sites") => {
                let n = e.index(&e.value, e.value_col)?;
                if n == 0 {
                    return Err(e.err(e.value_col, "n_sites must be positive"));
                }
                once(&mut n_sites, e, n)?;
            }
            (Section::Lattice, "labels") => {
                let v = e
                    .list()?
                    .iter()
                    .map(|(r, c)| match r {
                        Raw::Str(s) => Ok(s.clone()),
                        _ => Err(e.err(*c, "labels must be quoted strings")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                once(&mut labels, e, (v, e.line, e.value_col))?;
            }
            (Section::Lattice, "J") => {
                let l = e.list()?;
                if l.len() != 3 {
                    return Err(e.err(e.value_col, "J takes [i, j, value]"));
                }
                let i = e.index(&l[0].0, l[0].1)?;
                let j = e.index(&l[1].0, l[1].1)?;
                if i == j {
                    return Err(e.err(l[1].1, format!("self-coupling on site {i}")));
                }
                couplings.push((i, j, e.value(&l[2].0, l[2].1)?, e.line, l[0].1));
            }
            (Section::Lattice, key @ ("hx" | "hy")) => {
                let l = e.list()?;
                if l.len() != 2 {
                    return Err(e.err(e.value_col, format!("{key} takes [site, value]")));
                }
                let s = e.index(&l[0].0, l[0].1)?;
                let entry = (s, e.value(&l[1].0, l[1].1)?, e.line, l[0].1);
                if key == "hx" { hx.push(entry) } else { hy.push(entry) }
            }
            (Section::Partition, "a") => once(&mut set_a, e, (e.index_list()?, e.line, e.value_col))?,
            (Section::Partition, "s") => once(&mut set_s, e, (e.index_list()?, e.line, e.value_col))?,
            (Section::Partition, "b") => once(&mut set_b, e, (e.index_list()?, e.line, e.value_col))?,
            (Section::Run, "beta") => {
                let b = match &e.value {
                    Raw::Ident(t) | Raw::Str(t) if t.eq_ignore_ascii_case("inf") => Beta::Infinite,
                    raw => {
                        let x = e.number(raw, e.value_col)?;
                        Beta::finite(x).map_err(|_| e.err(e.value_col, format!("beta must be positive, got {x}")))?
                    }
                };
                once(&mut beta, e, b)?;
            }
            (Section::Run, "gap_tol") => {
                let x = e.number(&e.value, e.value_col)?;
                if !(x > 0.0) {
                    return Err(e.err(e.value_col, "gap_tol must be positive"));
                }
                once(&mut gap_tol, e, x)?;
            }
            (Section::Run, "sweep.path") => {
                let s = e.string()?;
                let path: ParamPath = s.parse().map_err(|_| e.err(e.value_col, format!("bad sweep path `{s}`")))?;
                once(&mut sweep_path, e, (path, e.line, e.value_col))?;
            }
            (Section::Run, "sweep.grid") => {
                let grid = match &e.value {
                    Raw::Str(s) => Grid::parse_range(s).map_err(|err| e.err(e.value_col, err.to_string()))?,
                    Raw::List(items) => {
                        let v = items.iter().map(|(r, c)| e.number(r, *c)).collect::<Result<Vec<_>>>()?;
                        let g = Grid::List(v);
                        g.values().map_err(|err| e.err(e.value_col, err.to_string()))?;
                        g
                    }
                    other => return Err(e.err(e.value_col, format!("sweep.grid must be a string or list, found a {}", other.kind()))),
                };
                once(&mut sweep_grid, e, grid)?;
            }
            (Section::Run, "observables") => {
                let v = e
                    .list()?
                    .iter()
                    .map(|(r, c)| match r {
                        Raw::Str(s) => s.parse::<SiteObservable>().map_err(|err| e.err(*c, err.to_string())),
                        _ => Err(e.err(*c, "observables must be quoted strings like \"z2*z3\"")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                once(&mut observables, e, v)?;
            }
            (sec, key) => {
                return Err(e.err(e.key_col, format!("unknown key `{key}` in [{}]", section_name(*sec))));
            }
        }
    }

    let n = n_sites.ok_or_else(|| Error::Semantic("[lattice] n_sites is required".into()))?;
    let range_check = |s: usize, line: usize, col: usize| -> Result<()> {
        if s >= n {
            Err(Error::Parse { line, column: col + 1, message: format!("site {s} out of range for {n} sites") })
        } else {
            Ok(())
        }
    };
    let value_check = |v: &Value, line: usize, col: usize| -> Result<()> {
        match v {
            Value::Param(p) | Value::NegParam(p) if !params.contains_key(p) => {
                Err(Error::Parse { line, column: col + 1, message: format!("unknown parameter `{p}`") })
            }
            _ => Ok(()),
        }
    };
    let mut seen_pairs = std::collections::BTreeSet::new();
    for (i, j, v, line, col) in &couplings {
        range_check(*i.max(j), *line, *col)?;
        value_check(v, *line, *col)?;
        if !seen_pairs.insert((*i.min(j), *i.max(j))) {
            return Err(Error::Parse { line: *line, column: col + 1, message: format!("coupling ({i},{j}) given twice") });
        }
    }
    for list in [&hx, &hy] {
        let mut seen = std::collections::BTreeSet::new();
        for (s, v, line, col) in list.iter() {
            range_check(*s, *line, *col)?;
            value_check(v, *line, *col)?;
            if !seen.insert(*s) {
                return Err(Error::Parse { line: *line, column: col + 1, message: format!("field on site {s} given twice") });
            }
        }
    }
    if let Some((l, line, col)) = &labels {
        if l.len() != n {
            return Err(Error::Parse { line: *line, column: col + 1, message: format!("{} labels for {n} sites", l.len()) });
        }
    }
    let partition = match (set_a, set_s, set_b) {
        (None, None, None) => None,
        (Some(a), Some(s), Some(b)) => {
            for (list, line, col) in [&a, &s, &b] {
                for &x in list.iter() {
                    range_check(x, *line, *col)?;
                }
            }
            Some(Partition::new(a.0, s.0, b.0))
        }
        _ => return Err(Error::Semantic("[partition] needs all of a, s and b".into())),
    };
    let sweep = match (sweep_path, sweep_grid) {
        (None, None) => None,
        (Some((path, line, col)), Some(grid)) => {
            for s in path.sites() {
                range_check(s, line, col)?;
            }
            if let ParamPath::Named(p) = &path {
                if !params.contains_key(p) {
                    return Err(Error::Parse { line, column: col + 1, message: format!("unknown parameter `{p}`") });
                }
            }
            Some(Sweep { path, grid })
        }
        _ => return Err(Error::Semantic("sweep needs both sweep.path and sweep.grid".into())),
    };

    Ok(Scenario {
        params,
        lattice: LatticeSpec {
            n_sites: n,
            labels: labels.map(|l| l.0),
            couplings: couplings.into_iter().map(|(i, j, v, _, _)| (i, j, v)).collect(),
            hx: hx.into_iter().map(|(s, v, _, _)| (s, v)).collect(),
            hy: hy.into_iter().map(|(s, v, _, _)| (s, v)).collect(),
        },
        partition,
        beta,
        gap_tol,
        sweep,
        observables: observables.unwrap_or_default(),
    })
}

fn section_name(s: Section) -> &'static str {
    match s {
        Section::Params => "params",
        Section::Lattice => "lattice",
        Section::Partition => "partition",
        Section::Run => "run",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
# three-site chain
[params]
a = "0,5"

[lattice]
n_sites = 3
labels = ["A1", "L", "B1"]
J = [0, 1, 1.0]
J = [1, 2, a]
hx = [0, 0.7]
hy = [2, -0.1]

[partition]
a = [0]
s = [1]
b = [2]

[run]
beta = 1.5
sweep.path = "hx.0"
sweep.grid = "0.1:0.1:1.0"
observables = ["z1*z2", "x0"]
"#;

    #[test]
    fn parses_the_sample() {
        let s = parse_scenario(SAMPLE).unwrap();
        assert_eq!(s.params["a"], 0.5);
        assert_eq!(s.beta, Some(Beta::Finite(1.5)));
        let lat = s.resolve_lattice().unwrap();
        assert_eq!(lat.coupling(1, 2), 0.5);
        assert_eq!(lat.field_y(2), -0.1);
        assert_eq!(lat.label(1), "L");
        assert_eq!(s.partition.unwrap().set_s(), &[1]);
        let grid = s.sweep.unwrap().grid.values().unwrap();
        assert_eq!(grid.len(), 10);
        assert!((grid[9] - 1.0).abs() < 1e-12);
        assert_eq!(s.observables.len(), 2);
    }

    #[test]
    fn infinite_beta_token() {
        let s = parse_scenario("[lattice]\nn_sites = 1\n[run]\nbeta = INF\n").unwrap();
        assert_eq!(s.beta, Some(Beta::Infinite));
    }

    #[test]
    fn comma_decimal() {
        let s = parse_scenario("[params]\na = \"0,5\"\n[lattice]\nn_sites = 2\nJ = [0, 1, \"1,25\"]\n").unwrap();
        assert_eq!(s.params["a"], 0.5);
        assert_eq!(s.resolve_lattice().unwrap().coupling(0, 1), 1.25);
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("[lattice]\nn_sites = 2\nfoo = 1\n", 3, 1),
            ("[lattice]\nn_sites = 2\nJ = [0, 5, 1.0]\n", 3, 6),
            ("[lattice]\nn_sites = 2\nJ = [0, 1, b]\n", 3, 6),
            ("[lattice]\nn_sites = 2\n[run]\nbeta = -1\n", 4, 8),
            ("[lattice]\nn_sites = 2\nhx = [0, 1.0\n", 3, 13),
            ("[weird]\n", 1, 2),
        ];
        for (text, line, column) in cases {
            match parse_scenario(text) {
                Err(Error::Parse { line: l, column: c, .. }) => assert_eq!((l, c), (line, column), "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(parse_scenario("[run]\nbeta = 1\n"), Err(Error::Semantic(_))));
    }

    #[test]
    fn overrides() {
        let mut s = parse_scenario(SAMPLE).unwrap();
        s.apply_override_str("a=0.8").unwrap();
        s.apply_override_str("params.a=\"0,9\"").unwrap();
        s.apply_override_str("run.beta=INF").unwrap();
        s.apply_override_str("hx.2=0.3").unwrap();
        s.apply_override_str("lattice.J.1.0=-2").unwrap();
        let lat = s.resolve_lattice().unwrap();
        assert_eq!(lat.coupling(1, 2), 0.9);
        assert_eq!(lat.coupling(0, 1), -2.0);
        assert_eq!(lat.field_x(2), 0.3);
        assert_eq!(s.beta, Some(Beta::Infinite));
        assert!(s.apply_override_str("zeta=1").is_err());
        assert!(s.apply_override_str("hx.9=1").is_err());
        assert!(s.apply_override_str("beta=0").is_err());
    }

    #[test]
    fn round_trip_sample() {
        let s = parse_scenario(SAMPLE).unwrap();
        let again = parse_scenario(&s.to_text()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn bind_turns_entries_into_parameters() {
        let lat = SpinLattice::new(2).unwrap().with_coupling(0, 1, 0.3).unwrap();
        let mut s = Scenario::from_lattice(&lat, None);
        s.bind(&ParamPath::Coupling(0, 1), "a").unwrap();
        s.apply_override_str("a=0.7").unwrap();
        assert_eq!(s.resolve_lattice().unwrap().coupling(0, 1), 0.7);
        assert!(s.to_text().contains("J = [0, 1, a]"));
        let mut n = Scenario::from_lattice(&lat, None);
        n.bind_negated(&ParamPath::Coupling(0, 1), "M").unwrap();
        assert_eq!(n.params["M"], -0.3);
        n.apply_override_str("M=2").unwrap();
        assert_eq!(n.resolve_lattice().unwrap().coupling(0, 1), -2.0);
        assert_eq!(parse_scenario(&n.to_text()).unwrap(), n);
    }

    fn arb_scenario() -> impl Strategy<Value = Scenario> {
        (1usize..7, proptest::collection::vec((0usize..7, 0usize..7, -3.0f64..3.0), 0..8), proptest::collection::vec((0usize..7, -2.0f64..2.0), 0..4), prop::option::of(0.01f64..10.0), prop::bool::ANY)
            .prop_map(|(n, js, hs, beta, named)| {
                let mut lat = SpinLattice::new(n).unwrap();
                for (i, j, v) in js {
                    if i < n && j < n && i != j {
                        lat.set_coupling(i, j, v).unwrap();
                    }
                }
                for (s, v) in hs {
                    if s < n {
                        lat.set_field_x(s, v).unwrap();
                    }
                }
                let partition = (n >= 3).then(|| Partition::new([0], [1], 2..n));
                let mut sc = Scenario::from_lattice(&lat, partition);
                sc.beta = beta.map(Beta::Finite).or(Some(Beta::Infinite));
                if named && n >= 2 {
                    sc.bind(&ParamPath::Coupling(0, 1), "k").unwrap();
                    sc.sweep = Some(Sweep { path: ParamPath::Named("k".into()), grid: Grid::Range { start: 0.1, step: 0.2, stop: 0.9 } });
                } else {
                    sc.sweep = Some(Sweep { path: ParamPath::FieldX(0), grid: Grid::List(vec![0.5, 1.5]) });
                }
                sc.observables = vec![SiteObservable::zz(0, n - 1)];
                sc
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(s in arb_scenario()) {
            let text = s.to_text();
            let parsed = parse_scenario(&text).unwrap();
            prop_assert_eq!(&parsed, &s);
            prop_assert_eq!(parse_scenario(&parsed.to_text()).unwrap(), parsed);
        }
    }
}
