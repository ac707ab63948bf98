//! Built-in lattices for the worked examples.
//!
//! Site labels follow the 1-based numbering used when the examples are
//! discussed; indices are 0-based as everywhere else. Where a bond is quoted
//! as an energy label `E = label · s_i s_j`, the coupling is `J = -label`.

use crate::error::{Error, Result};
use crate::lattice::{ParamPath, Partition, SpinLattice};
use crate::scenario::{Beta, Grid, Scenario, Sweep};

/// Names accepted by [`example_scenario`].
pub const EXAMPLES: [&str; 7] = [
    "theorem1-chain3",
    "fig4-foursite",
    "chain5-correlations",
    "pentagon-pair",
    "pentagon-n",
    "ladder",
    "quasichain",
];

fn numbered(n: usize) -> Vec<String> {
    (1..=n).map(|k| k.to_string()).collect()
}

/// `-h X_1 - J1 Z_1 Z_2 - J2 Z_2 Z_3` with interface `{2}`.
pub fn chain3(j1: f64, j2: f64, h: f64) -> Result<(SpinLattice, Partition)> {
    let lat = SpinLattice::new(3)?
        .with_coupling(0, 1, j1)?
        .with_coupling(1, 2, j2)?
        .with_field_x(0, h)?
        .with_labels(numbered(3))?;
    Ok((lat, Partition::new([0], [1], [2])))
}

/// Four sites on a square: bonds 1-2, 1-3, 2-4, 3-4 with `J = 1`, fields on 1 and 4.
/// The interface `{2, 3}` separates site 1 from site 4.
pub fn diamond(h1: f64, h4: f64) -> Result<(SpinLattice, Partition)> {
    let mut lat = SpinLattice::new(4)?;
    for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
        lat.set_coupling(i, j, 1.0)?;
    }
    lat.set_field_x(0, h1)?;
    lat.set_field_x(3, h4)?;
    Ok((lat.with_labels(numbered(4))?, Partition::new([0], [1, 2], [3])))
}

/// Open five-site chain with unit bonds and fields on sites 1, 3, 5.
/// Interface `{2, 4}`, with site 3 on one side and sites 1, 5 on the other.
pub fn chain5(h1: f64, h3: f64, h5: f64) -> Result<(SpinLattice, Partition)> {
    let mut lat = SpinLattice::new(5)?;
    for i in 0..4 {
        lat.set_coupling(i, i + 1, 1.0)?;
    }
    lat.set_field_x(0, h1)?;
    lat.set_field_x(2, h3)?;
    lat.set_field_x(4, h5)?;
    Ok((lat.with_labels(numbered(5))?, Partition::new([2], [1, 3], [0, 4])))
}

/// A chain that widens to two interface sites `L, L'` between three-site arms.
pub fn quasichain() -> Result<(SpinLattice, Partition)> {
    let mut lat = SpinLattice::new(8)?;
    let bonds = [
        (0, 1, 0.9),
        (1, 2, 1.1),
        (2, 3, 0.7),
        (2, 4, -0.6),
        (3, 4, 0.5),
        (3, 5, 1.2),
        (4, 5, 0.8),
        (5, 6, 1.0),
        (6, 7, -0.9),
    ];
    for (i, j, v) in bonds {
        lat.set_coupling(i, j, v)?;
    }
    for (s, h) in [(0, 0.6), (1, 1.3), (2, 0.9), (5, 0.4), (6, 1.1), (7, 0.7)] {
        lat.set_field_x(s, h)?;
    }
    let labels = ["1", "2", "3", "L", "L'", "L+1", "L+2", "L+3"];
    Ok((lat.with_labels(labels)?, Partition::new([0, 1, 2], [3, 4], [5, 6, 7])))
}

/// Seven sites with a single interface site: a triangle on one side, a
/// three-site branch on the other, and both x and y fields away from `L`.
pub fn single_interface7() -> Result<(SpinLattice, Partition)> {
    let mut lat = SpinLattice::new(7)?;
    let bonds = [
        (0, 1, 1.0),
        (1, 2, 0.8),
        (0, 2, -0.6),
        (1, 3, 0.9),
        (2, 3, -1.1),
        (3, 4, 0.7),
        (3, 5, 1.3),
        (4, 5, 0.5),
        (5, 6, -0.8),
    ];
    for (i, j, v) in bonds {
        lat.set_coupling(i, j, v)?;
    }
    for (s, h) in [(0, 0.5), (1, 1.2), (2, 0.3), (4, 0.9), (5, 0.4), (6, 1.5)] {
        lat.set_field_x(s, h)?;
    }
    lat.set_field_y(1, 0.4)?;
    lat.set_field_y(5, 0.6)?;
    let labels = ["A1", "A2", "A3", "L", "B1", "B2", "B3"];
    Ok((lat.with_labels(labels)?, Partition::new([0, 1, 2], [3], [4, 5, 6])))
}

const PENTAGON_BONDS: [(usize, usize); 5] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];

/// Couplings of the pentagon template around the ring 1-2-3-4-5-1.
/// Energy labels `-1, -1, -a, -1.5, +0.5`: the aligned state costs `-3 - a`,
/// the state with sites 4 and 5 flipped costs `-4 + a`.
fn pentagon_couplings(a: f64) -> [f64; 5] {
    [1.0, 1.0, a, 1.5, -0.5]
}

pub fn pentagon(a: f64) -> Result<SpinLattice> {
    let mut lat = SpinLattice::new(5)?;
    for (&(i, j), v) in PENTAGON_BONDS.iter().zip(pentagon_couplings(a)) {
        lat.set_coupling(i, j, v)?;
    }
    lat.with_labels(numbered(5))
}

/// A chain of pentagons sharing edges, with its interface and far pair.
#[derive(Clone, Debug)]
pub struct PentagonLattice {
    pub lattice: SpinLattice,
    pub partition: Partition,
    /// The pair whose `Z Z` value is read off at the far end.
    pub far_pair: (usize, usize),
}

/// `count ≥ 2` pentagons. The first carries the tunable `a` and forms side A
/// with interface `{1, 5}`; the rest use `a = 1/2`, the value where an isolated
/// pentagon is degenerate. Pentagon 2 shares edge 1-5 with pentagon 1; each
/// later pentagon shares its own 1-5 edge with the previous pentagon's 3-4 edge.
pub fn pentagon_chain(count: usize, a: f64) -> Result<PentagonLattice> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("a pentagon chain needs at least 2 pentagons, got {count}")));
    }
    let n = 5 + 3 * (count - 1);
    let mut lat = SpinLattice::new(n)?;
    let mut add = |sites: [usize; 5], a: f64| -> Result<()> {
        for (&(p, q), v) in PENTAGON_BONDS.iter().zip(pentagon_couplings(a)) {
            lat.add_coupling(sites[p], sites[q], v)?;
        }
        Ok(())
    };
    add([0, 1, 2, 3, 4], a)?;
    let mut prev = [0, 7, 6, 5, 4];
    add(prev, 0.5)?;
    let mut next = 8;
    for _ in 2..count {
        let sites = [prev[2], next + 2, next + 1, next, prev[3]];
        add(sites, 0.5)?;
        prev = sites;
        next += 3;
    }
    let far_pair = (prev[3], prev[2]);
    let lattice = lat.with_labels(numbered(n))?;
    Ok(PentagonLattice { lattice, partition: Partition::new([1, 2, 3], [0, 4], 5..n), far_pair })
}

pub fn pentagon_pair(a: f64) -> Result<PentagonLattice> {
    pentagon_chain(2, a)
}

/// Six-site ladder: rungs 1-2 and 5-6 carry energy label `M`; every site of
/// `{1, 2}` and `{5, 6}` is tied to both interface sites `{3, 4}` with label -1.
/// There is no 3-4 bond.
pub fn ladder(m: f64) -> Result<(SpinLattice, Partition)> {
    let mut lat = SpinLattice::new(6)?;
    lat.set_coupling(0, 1, -m)?;
    lat.set_coupling(4, 5, -m)?;
    for outer in [0, 1, 4, 5] {
        for inner in [2, 3] {
            lat.set_coupling(outer, inner, 1.0)?;
        }
    }
    Ok((lat.with_labels(numbered(6))?, Partition::new([0, 1], [2, 3], [4, 5])))
}

/// Scenario for a named example with its default parameters.
/// `pentagons` sets the chain length of `pentagon-n` (default 4).
pub fn example_scenario(name: &str, pentagons: Option<usize>) -> Result<Scenario> {
    let range = |start, step, stop| Grid::Range { start, step, stop };
    let sc = match name {
        "theorem1-chain3" => {
            let (lat, p) = chain3(1.0, 1.0, 1.0)?;
            let mut s = Scenario::from_lattice(&lat, Some(p));
            s.beta = Some(Beta::Finite(1.0));
            s.sweep = Some(Sweep { path: ParamPath::FieldX(0), grid: range(0.1, 0.1, 2.0) });
            s
        }
        "fig4-foursite" => {
            let (lat, p) = diamond(1.0, 1.0)?;
            let mut s = Scenario::from_lattice(&lat, Some(p));
            s.bind(&ParamPath::FieldX(0), "h1")?;
            s.bind(&ParamPath::FieldX(3), "h4")?;
            s.beta = Some(Beta::Finite(1.0));
            s.sweep = Some(Sweep { path: ParamPath::Named("h1".into()), grid: range(0.1, 0.1, 3.0) });
            s
        }
        "chain5-correlations" => {
            let (lat, p) = chain5(0.7, 1.0, 1.3)?;
            let mut s = Scenario::from_lattice(&lat, Some(p));
            s.bind(&ParamPath::FieldX(2), "h3")?;
            s.beta = Some(Beta::Finite(1.0));
            s.sweep = Some(Sweep { path: ParamPath::Named("h3".into()), grid: range(0.25, 0.25, 2.5) });
            s
        }
        "pentagon-pair" | "pentagon-n" => {
            let count = if name == "pentagon-pair" { 2 } else { pentagons.unwrap_or(4) };
            let pl = pentagon_chain(count, 0.8)?;
            let mut s = Scenario::from_lattice(&pl.lattice, Some(pl.partition));
            s.bind(&ParamPath::Coupling(2, 3), "a")?;
            s.beta = Some(Beta::Infinite);
            s.sweep = Some(Sweep { path: ParamPath::Named("a".into()), grid: Grid::List(vec![0.2, 0.5, 0.8]) });
            s
        }
        "ladder" => {
            let (lat, p) = ladder(-1.0)?;
            let mut s = Scenario::from_lattice(&lat, Some(p));
            s.bind_negated(&ParamPath::Coupling(0, 1), "M")?;
            s.bind_negated(&ParamPath::Coupling(4, 5), "M")?;
            s.beta = Some(Beta::Infinite);
            s.sweep = Some(Sweep {
                path: ParamPath::Named("M".into()),
                grid: Grid::List(vec![-1.0, 0.0, 1.0, 1.9, 2.0, 2.1, 3.0]),
            });
            s
        }
        "quasichain" => {
            let (lat, p) = quasichain()?;
            let mut s = Scenario::from_lattice(&lat, Some(p));
            s.beta = Some(Beta::Finite(1.0));
            s
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown example `{other}`; available: {}",
                EXAMPLES.join(", ")
            )))
        }
    };
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{interface_connected, validate_partition};

    #[test]
    fn every_example_satisfies_the_structural_hypotheses() {
        for name in EXAMPLES {
            let s = example_scenario(name, None).unwrap();
            let lat = s.resolve_lattice().unwrap();
            let p = s.partition.clone().unwrap();
            let report = validate_partition(&lat, &p).unwrap();
            assert!(report.is_empty(), "{name}: {report}");
        }
        let (lat, p) = single_interface7().unwrap();
        assert!(validate_partition(&lat, &p).unwrap().is_empty());
        for count in 2..6 {
            let pl = pentagon_chain(count, 0.3).unwrap();
            assert!(validate_partition(&pl.lattice, &pl.partition).unwrap().is_empty());
        }
    }

    #[test]
    fn chain_sizes() {
        assert_eq!(pentagon_pair(0.8).unwrap().lattice.n_sites(), 8);
        assert_eq!(pentagon_chain(4, 0.8).unwrap().lattice.n_sites(), 14);
        assert_eq!(pentagon_pair(0.8).unwrap().far_pair, (5, 6));
        assert!(pentagon_chain(1, 0.8).is_err());
    }

    #[test]
    fn shared_edges_merge() {
        let pl = pentagon_pair(0.8).unwrap();
        assert_eq!(pl.lattice.coupling(0, 4), -1.0);
        let chain = pentagon_chain(3, 0.8).unwrap();
        // The third pentagon's 1-5 bond cancels the second one's 3-4 bond.
        assert_eq!(chain.lattice.coupling(6, 5), 0.0);
    }

    #[test]
    fn interface_connectivity() {
        let (lat, p) = chain5(1.0, 1.0, 1.0).unwrap();
        assert!(!interface_connected(&lat, &p));
        let (lat, p) = quasichain().unwrap();
        assert!(interface_connected(&lat, &p));
        let (lat, p) = chain3(1.0, 1.0, 1.0).unwrap();
        assert!(interface_connected(&lat, &p));
    }

    #[test]
    fn ladder_parameter_is_an_energy_label() {
        let mut s = example_scenario("ladder", None).unwrap();
        assert_eq!(s.params["M"], -1.0);
        s.apply_override_str("M=3").unwrap();
        let lat = s.resolve_lattice().unwrap();
        assert_eq!(lat.coupling(0, 1), -3.0);
        assert_eq!(lat.coupling(4, 5), -3.0);
        assert!(example_scenario("nope", None).unwrap_err().to_string().contains("fig4-foursite"));
    }
}
