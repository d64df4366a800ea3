//! Log-width probabilistic circuits compiled from a configuration space:
//! T identical blocks of per-configuration parts driven by one coin wire,
//! a decision block that copies "register holds the accepting
//! configuration" onto wire 0, lowering onto {NOT, AND, OR, RESET} with
//! one auxiliary wire, and an exact sparse simulator.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::config::{ConfigMatrix, ConfigSpace};
use crate::error::{Error, Result};
use crate::machine::rat;

/// Wire 0: coin / decision output. Wire 1: block control. Wire 2:
/// configuration control. Wires 3..3+l: configuration register.
pub const WIRE_COIN: usize = 0;
pub const WIRE_BLOCK: usize = 1;
pub const WIRE_CONFIG: usize = 2;
pub const REGISTER_BASE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    Coin { wire: usize },
    /// In-place deterministic update of ≤4 wires. `wires[0]` is the most
    /// significant bit of the table index; `table[idx]` packs the output
    /// bits the same way.
    Det { wires: Vec<usize>, table: Vec<u8> },
    Reset { wire: usize, value: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    /// Fires before block `i` (1-based); the register marginal there is
    /// the step-(i-1) configuration distribution.
    Block(usize),
    /// Fires before the part handling configuration `j`.
    Part(usize),
    /// Fires after the last block, before the decision gates.
    Decision,
}

/// An ordered gate list with marker positions (marker at gate index p
/// fires before gate p executes).
#[derive(Debug, Clone)]
pub struct ProbCircuit {
    pub width: usize,
    /// Register length; wires 3..3+l.
    pub l: usize,
    pub gates: Vec<Gate>,
    pub markers: Vec<(usize, Marker)>,
}

// Truth tables, all indexed with wires[0] as MSB.

fn table_identity(arity: usize) -> Vec<u8> {
    (0..1u8 << arity).collect()
}

const TABLE_NOT: [u8; 2] = [1, 0];
/// (a, b) -> (a, a AND b).
const TABLE_AND: [u8; 4] = [0, 0, 2, 3];
/// (a, b) -> (a, a OR b).
const TABLE_OR: [u8; 4] = [0, 1, 3, 3];
/// (a, b) -> (a, b AND NOT a).
const TABLE_ANDNOT: [u8; 4] = [0, 1, 2, 2];

/// (w1, w2, r) -> w2 &= (r == t), only when w1 = 1.
fn table_eq3(t: bool) -> Vec<u8> {
    let mut table = Vec::with_capacity(8);
    for idx in 0..8u8 {
        let (a, b, c) = (idx >> 2 & 1, idx >> 1 & 1, idx & 1);
        let b2 = if a == 1 { b & (c == t as u8) as u8 } else { b };
        table.push(a << 2 | b2 << 1 | c);
    }
    table
}

/// (w0, w1, w2, r) -> r := tv when w0 = rv and w1 = w2 = 1.
fn table_trans4(rv: bool, tv: bool) -> Vec<u8> {
    let mut table = Vec::with_capacity(16);
    for idx in 0..16u8 {
        let (a, b, c, d) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
        let d2 = if a == rv as u8 && b == 1 && c == 1 { tv as u8 } else { d };
        table.push(a << 3 | b << 2 | c << 1 | d2);
    }
    table
}

fn det(wires: Vec<usize>, table: &[u8]) -> Gate {
    Gate::Det { wires, table: table.to_vec() }
}

/// Gates for the part handling configuration `j`: arm the configuration
/// control bit, compare the register against encode(C_j) bit by bit,
/// rewrite the register toward the heads or tails successor, and drop
/// the block control bit if the part was taken.
pub fn part_gates(cs: &ConfigSpace, mat: &ConfigMatrix, j: usize) -> Vec<Gate> {
    let l = cs.l;
    let cbits = cs.encode_bits(&cs.config_at(j));
    let (h, t) = mat.successor_pair(j);
    let hbits = cs.encode_bits(&cs.config_at(h));
    let tbits = cs.encode_bits(&cs.config_at(t));
    let mut gates = Vec::with_capacity(3 * l + 2);
    gates.push(det(vec![WIRE_BLOCK, WIRE_CONFIG], &TABLE_OR));
    for i in 0..l {
        gates.push(det(vec![WIRE_BLOCK, WIRE_CONFIG, REGISTER_BASE + i], &table_eq3(cbits[i])));
    }
    for i in 0..l {
        let wires = vec![WIRE_COIN, WIRE_BLOCK, WIRE_CONFIG, REGISTER_BASE + i];
        gates.push(det(wires, &table_trans4(false, hbits[i])));
    }
    for i in 0..l {
        let wires = vec![WIRE_COIN, WIRE_BLOCK, WIRE_CONFIG, REGISTER_BASE + i];
        gates.push(det(wires, &table_trans4(true, tbits[i])));
    }
    gates.push(det(vec![WIRE_CONFIG, WIRE_BLOCK], &TABLE_ANDNOT));
    gates
}

/// Compiles the full circuit: a preamble loading the initial
/// configuration, `t` identical blocks (coin, arm block control, one
/// part per configuration), and the decision block.
pub fn compile(cs: &ConfigSpace, mat: &ConfigMatrix, t: usize) -> Result<ProbCircuit> {
    assert!(t >= 1, "clock must be positive");
    let l = cs.l;
    let width = l + 3;
    if width + 1 > 63 {
        return Err(Error::BadCircuit(format!(
            "width {width} plus auxiliary exceeds the 63-wire simulator limit"
        )));
    }
    let mut gates = Vec::new();
    let mut markers = Vec::new();
    for (i, bit) in cs.encode_bits(&cs.config_at(mat.initial)).iter().enumerate() {
        if *bit {
            gates.push(det(vec![REGISTER_BASE + i], &TABLE_NOT));
        }
    }
    for b in 1..=t {
        markers.push((gates.len(), Marker::Block(b)));
        gates.push(Gate::Coin { wire: WIRE_COIN });
        gates.push(Gate::Reset { wire: WIRE_BLOCK, value: true });
        for j in 0..mat.n {
            markers.push((gates.len(), Marker::Part(j)));
            gates.extend(part_gates(cs, mat, j));
        }
    }
    markers.push((gates.len(), Marker::Decision));
    gates.push(Gate::Reset { wire: WIRE_COIN, value: false });
    gates.push(Gate::Reset { wire: WIRE_CONFIG, value: true });
    for (i, bit) in cs.encode_bits(&cs.config_at(mat.accept)).iter().enumerate() {
        let table = if *bit { &TABLE_AND } else { &TABLE_ANDNOT };
        gates.push(det(vec![REGISTER_BASE + i, WIRE_CONFIG], table));
    }
    gates.push(det(vec![WIRE_CONFIG, WIRE_COIN], &TABLE_OR));
    for wire in 1..width {
        gates.push(Gate::Reset { wire, value: false });
    }
    Ok(ProbCircuit { width, l, gates, markers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DetKind {
    Identity,
    Not,
    And,
    Or,
    AndNot,
    Eq3 { t: bool },
    Trans4 { rv: bool, tv: bool },
}

fn classify(table: &[u8]) -> Option<DetKind> {
    let arity = table.len().trailing_zeros() as usize;
    if table == table_identity(arity) {
        return Some(DetKind::Identity);
    }
    match arity {
        1 if table == TABLE_NOT => Some(DetKind::Not),
        2 if table == TABLE_AND => Some(DetKind::And),
        2 if table == TABLE_OR => Some(DetKind::Or),
        2 if table == TABLE_ANDNOT => Some(DetKind::AndNot),
        3 => [false, true]
            .into_iter()
            .find(|&t| table == table_eq3(t))
            .map(|t| DetKind::Eq3 { t }),
        4 => {
            for rv in [false, true] {
                for tv in [false, true] {
                    if table == table_trans4(rv, tv) {
                        return Some(DetKind::Trans4 { rv, tv });
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// Rewrites every gate over {NOT, AND(a,b)->(a,a∧b), OR(a,b)->(a,a∨b),
/// RESET, COIN} using one auxiliary wire appended below the circuit. The
/// auxiliary is returned to 0 at the end of every expansion, so the
/// joint distribution on the original wires is untouched.
pub fn lower(k: &ProbCircuit) -> Result<ProbCircuit> {
    let aux = k.width;
    let not_g = |w: usize| det(vec![w], &TABLE_NOT);
    let and_g = |a: usize, b: usize| det(vec![a, b], &TABLE_AND);
    let or_g = |a: usize, b: usize| det(vec![a, b], &TABLE_OR);
    let mut gates = Vec::new();
    let mut markers = Vec::new();
    let mut next_marker = 0usize;
    for (pos, gate) in k.gates.iter().enumerate() {
        while next_marker < k.markers.len() && k.markers[next_marker].0 == pos {
            markers.push((gates.len(), k.markers[next_marker].1));
            next_marker += 1;
        }
        match gate {
            Gate::Coin { .. } | Gate::Reset { .. } => gates.push(gate.clone()),
            Gate::Det { wires, table } => {
                let kind = classify(table).ok_or_else(|| {
                    Error::BadCircuit(format!("unrecognized det table {table:?} on {wires:?}"))
                })?;
                match kind {
                    DetKind::Identity => {}
                    DetKind::Not => gates.push(not_g(wires[0])),
                    DetKind::And => gates.push(and_g(wires[0], wires[1])),
                    DetKind::Or => gates.push(or_g(wires[0], wires[1])),
                    DetKind::AndNot => {
                        let (a, b) = (wires[0], wires[1]);
                        gates.extend([not_g(a), and_g(a, b), not_g(a)]);
                    }
                    DetKind::Eq3 { t } => {
                        // aux := (r == t) OR NOT w1; w2 &= aux.
                        let (w1, w2, r) = (wires[0], wires[1], wires[2]);
                        gates.push(Gate::Reset { wire: aux, value: false });
                        if t {
                            gates.push(or_g(r, aux));
                        } else {
                            gates.extend([not_g(r), or_g(r, aux), not_g(r)]);
                        }
                        gates.extend([not_g(w1), or_g(w1, aux), not_g(w1)]);
                        gates.push(and_g(aux, w2));
                        gates.push(Gate::Reset { wire: aux, value: false });
                    }
                    DetKind::Trans4 { rv, tv } => {
                        // aux := w1 AND w2 AND (w0 == rv); force r when aux.
                        let (w0, w1, w2, r) = (wires[0], wires[1], wires[2], wires[3]);
                        gates.push(Gate::Reset { wire: aux, value: true });
                        gates.extend([and_g(w1, aux), and_g(w2, aux)]);
                        if rv {
                            gates.push(and_g(w0, aux));
                        } else {
                            gates.extend([not_g(w0), and_g(w0, aux), not_g(w0)]);
                        }
                        if tv {
                            gates.push(or_g(aux, r));
                        } else {
                            gates.extend([not_g(aux), and_g(aux, r)]);
                        }
                        gates.push(Gate::Reset { wire: aux, value: false });
                    }
                }
            }
        }
    }
    while next_marker < k.markers.len() {
        markers.push((gates.len(), k.markers[next_marker].1));
        next_marker += 1;
    }
    Ok(ProbCircuit { width: k.width + 1, l: k.l, gates, markers })
}

/// Exact distribution over wire assignments; key bit k is wire k.
pub type Distribution = BTreeMap<u64, BigRational>;

fn add_mass(dist: &mut Distribution, key: u64, p: BigRational) {
    match dist.entry(key) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(p);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += p;
        }
    }
}

fn apply_gate(dist: Distribution, gate: &Gate) -> Distribution {
    let mut out = Distribution::new();
    match gate {
        Gate::Coin { wire } => {
            let half = rat(1, 2);
            for (key, p) in dist {
                let split = p * &half;
                add_mass(&mut out, key & !(1 << wire), split.clone());
                add_mass(&mut out, key | 1 << wire, split);
            }
        }
        Gate::Det { wires, table } => {
            let arity = wires.len();
            for (key, p) in dist {
                let mut idx = 0usize;
                for &w in wires {
                    idx = idx << 1 | (key >> w & 1) as usize;
                }
                let output = table[idx];
                let mut key2 = key;
                for (pos, &w) in wires.iter().enumerate() {
                    let bit = (output >> (arity - 1 - pos) & 1) as u64;
                    key2 = key2 & !(1 << w) | bit << w;
                }
                add_mass(&mut out, key2, p);
            }
        }
        Gate::Reset { wire, value } => {
            for (key, p) in dist {
                let key2 = key & !(1 << wire) | (*value as u64) << wire;
                add_mass(&mut out, key2, p);
            }
        }
    }
    out
}

pub fn key_from_bits(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |key, (w, &b)| key | (b as u64) << w)
}

/// Runs the circuit from a basis state, invoking `on_marker` with the
/// distribution as each marker position is reached.
pub fn simulate_with(
    k: &ProbCircuit,
    initial: &[bool],
    mut on_marker: impl FnMut(Marker, &Distribution),
) -> Distribution {
    assert_eq!(initial.len(), k.width, "initial string length must equal the width");
    let mut dist = Distribution::new();
    dist.insert(key_from_bits(initial), rat(1, 1));
    let mut next_marker = 0usize;
    for (pos, gate) in k.gates.iter().enumerate() {
        while next_marker < k.markers.len() && k.markers[next_marker].0 == pos {
            on_marker(k.markers[next_marker].1, &dist);
            next_marker += 1;
        }
        dist = apply_gate(dist, gate);
    }
    while next_marker < k.markers.len() {
        on_marker(k.markers[next_marker].1, &dist);
        next_marker += 1;
    }
    dist
}

pub fn simulate_from(k: &ProbCircuit, initial: &[bool]) -> Distribution {
    simulate_with(k, initial, |_, _| {})
}

/// Runs the circuit from the all-zero state.
pub fn simulate(k: &ProbCircuit) -> Distribution {
    simulate_from(k, &vec![false; k.width])
}

/// P[wire = 1].
pub fn wire_marginal(dist: &Distribution, wire: usize) -> BigRational {
    dist.iter()
        .filter(|(key, _)| *key >> wire & 1 == 1)
        .map(|(_, p)| p.clone())
        .sum()
}

/// Marginal over the configuration register, as bit vectors.
pub fn register_marginal(dist: &Distribution, l: usize) -> BTreeMap<Vec<bool>, BigRational> {
    let mut out: BTreeMap<Vec<bool>, BigRational> = BTreeMap::new();
    for (key, p) in dist {
        let bits: Vec<bool> = (0..l).map(|i| key >> (REGISTER_BASE + i) & 1 == 1).collect();
        *out.entry(bits).or_insert_with(BigRational::zero) += p;
    }
    out
}

impl ProbCircuit {
    /// `width=<int> gates=<int>` header, one gate per line, with
    /// `# block i` / `# part j` / `# decision` comments interleaved.
    pub fn dump(&self) -> String {
        let mut out = format!("width={} gates={}\n", self.width, self.gates.len());
        let mut next_marker = 0usize;
        for (pos, gate) in self.gates.iter().enumerate() {
            while next_marker < self.markers.len() && self.markers[next_marker].0 == pos {
                match self.markers[next_marker].1 {
                    Marker::Block(i) => out.push_str(&format!("# block {i}\n")),
                    Marker::Part(j) => out.push_str(&format!("# part {j}\n")),
                    Marker::Decision => out.push_str("# decision\n"),
                }
                next_marker += 1;
            }
            match gate {
                Gate::Coin { wire } => out.push_str(&format!("COIN {wire}\n")),
                Gate::Det { wires, table } => {
                    let ws: Vec<String> = wires.iter().map(|w| w.to_string()).collect();
                    let hex: String = table.iter().map(|&v| format!("{v:x}")).collect();
                    out.push_str(&format!("DET {} table={hex}\n", ws.join(" ")));
                }
                Gate::Reset { wire, value } => {
                    out.push_str(&format!("RESET {wire} {}\n", *value as u8));
                }
            }
        }
        out
    }
}
