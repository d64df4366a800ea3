//! Postselected quantum realization of lowered circuits: classical gates
//! are dilated into unitaries whose top-left block, kept by measuring
//! auxiliary qubits and postselecting on zero, acts as the original gate
//! scaled by 1/e. The state vector is evolved sparsely; discarded
//! branches are tracked as a cumulative log-survival scalar.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuit::{Gate, Marker, ProbCircuit};
use crate::error::{Error, Result};
use crate::format::fmt_sig;

/// Unitarity and action tolerance.
pub const EPS_U: f64 = 1e-10;
/// Gram–Schmidt residuals below this are treated as dependent.
const EPS_SPAN: f64 = 1e-9;
/// Ceiling for the integer e² search.
const E2_SEARCH_BOUND: i64 = 4096;

/// A unitary dilation of a classical (possibly non-unitary) operator.
/// Indices are auxiliary-major: row/column = (aux value << log-wires) |
/// logical value, so the top-left logical_dim × logical_dim block is the
/// postselected action, 1/e included.
#[derive(Debug, Clone)]
pub struct EmbeddedGate {
    pub matrix: Vec<Vec<f64>>,
    pub logical_dim: usize,
    pub e2: f64,
}

impl EmbeddedGate {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn e(&self) -> f64 {
        self.e2.sqrt()
    }

    /// max |U Uᵀ − I| over all entries.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| self.matrix[i][k] * self.matrix[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// The postselected block applied to a logical vector.
    pub fn postselected_action(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.logical_dim);
        (0..self.logical_dim)
            .map(|i| (0..self.logical_dim).map(|j| self.matrix[i][j] * v[j]).sum())
            .collect()
    }
}

/// Completes `rows` (orthonormal) to a full orthonormal basis of
/// dimension `dim` by orthonormalizing the residual standard basis
/// vectors in index order.
fn complete_rows(mut rows: Vec<Vec<f64>>, dim: usize) -> Result<Vec<Vec<f64>>> {
    for k in 0..dim {
        if rows.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for row in &rows {
            let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ri) in v.iter_mut().zip(row) {
                *vi -= dot * ri;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > EPS_SPAN {
            for vi in &mut v {
                *vi /= norm;
            }
            rows.push(v);
        }
    }
    if rows.len() != dim {
        return Err(Error::NotEmbeddable(format!(
            "row completion found only {} of {dim} orthonormal rows",
            rows.len()
        )));
    }
    Ok(rows)
}

fn finish_embedding(
    rows: Vec<Vec<f64>>,
    source: &[Vec<f64>],
    logical_dim: usize,
    e2: f64,
) -> Result<EmbeddedGate> {
    let dim = rows[0].len();
    let matrix = complete_rows(rows, dim)?;
    let gate = EmbeddedGate { matrix, logical_dim, e2 };
    let defect = gate.unitarity_defect();
    if defect > EPS_U {
        return Err(Error::NotUnitary(defect));
    }
    let e = gate.e();
    for i in 0..logical_dim {
        for j in 0..logical_dim {
            if (gate.matrix[i][j] * e - source[i][j]).abs() > EPS_U {
                return Err(Error::NotEmbeddable(format!(
                    "postselected block mismatch at ({i}, {j})"
                )));
            }
        }
    }
    Ok(gate)
}

/// Dilates an arbitrary real 2×2 operator into a 4×4 unitary with one
/// auxiliary qubit, searching the smallest integer e² that lets the two
/// source rows extend to orthogonal rows of length e.
pub fn embed_nonunitary(m: &[[f64; 2]; 2]) -> Result<EmbeddedGate> {
    let n1 = m[0][0] * m[0][0] + m[0][1] * m[0][1];
    let n2 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
    let s = m[0][0] * m[1][0] + m[0][1] * m[1][1];
    // Row norms of actual gates are integers or simple surds, so any
    // padding square this small is rounding noise, not structure.
    let snap = |v: f64| if v.abs() < EPS_SPAN { 0.0 } else { v };
    let mut e2 = n1.max(n2).ceil().max(1.0) as i64;
    while e2 <= E2_SEARCH_BOUND {
        let e2f = e2 as f64;
        let d11sq = snap(e2f - n1);
        if d11sq < 0.0 {
            e2 += 1;
            continue;
        }
        let d11 = d11sq.sqrt();
        let d21 = if d11 > EPS_U {
            -s / d11
        } else if s.abs() <= EPS_U {
            0.0
        } else {
            e2 += 1;
            continue;
        };
        let d22sq = snap(e2f - n2 - d21 * d21);
        if d22sq < 0.0 {
            e2 += 1;
            continue;
        }
        let d22 = d22sq.sqrt();
        let e = e2f.sqrt();
        let rows = vec![
            vec![m[0][0] / e, m[0][1] / e, d11 / e, 0.0],
            vec![m[1][0] / e, m[1][1] / e, d21 / e, d22 / e],
        ];
        let source: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
        return finish_embedding(rows, &source, 2, e2f);
    }
    Err(Error::NotEmbeddable(format!(
        "no integer e² ≤ {E2_SEARCH_BOUND} dilates [[{}, {}], [{}, {}]]",
        m[0][0], m[0][1], m[1][0], m[1][1]
    )))
}

/// Embeds a total 0/1 function matrix: dimension 2 goes through the
/// one-auxiliary dilation; dimension 4 uses the row scheme
/// [G | G′ | G″ | 0] with G′ unit lower triangular chosen for pairwise
/// row orthogonality and G″ diagonal padding every row up to length e.
pub fn embed_gate(g: &[Vec<f64>]) -> Result<EmbeddedGate> {
    let k = g.len();
    if !(k == 2 || k == 4) || g.iter().any(|r| r.len() != k) {
        return Err(Error::NotEmbeddable(format!("expected a 2×2 or 4×4 matrix, got {k} rows")));
    }
    for j in 0..k {
        let ones = (0..k).filter(|&i| g[i][j] == 1.0).count();
        let clean = (0..k).all(|i| g[i][j] == 0.0 || g[i][j] == 1.0);
        if !clean || ones != 1 {
            return Err(Error::NotEmbeddable(format!(
                "column {j} is not a total 0/1 function column"
            )));
        }
    }
    if k == 2 {
        return embed_nonunitary(&[[g[0][0], g[0][1]], [g[1][0], g[1][1]]]);
    }
    // G′ recurrence: zero the inner product of rows i > j column by column.
    let mut gp = [[0.0f64; 4]; 4];
    for i in 0..4 {
        gp[i][i] = 1.0;
        for j in 0..i {
            let gg: f64 = (0..4).map(|c| g[i][c] * g[j][c]).sum();
            let acc: f64 = (0..j).map(|c| gp[i][c] * gp[j][c]).sum();
            gp[i][j] = -(gg + acc);
        }
    }
    let row_norm2: Vec<f64> = (0..4)
        .map(|i| {
            let a: f64 = (0..4).map(|c| g[i][c] * g[i][c]).sum();
            let b: f64 = (0..4).map(|c| gp[i][c] * gp[i][c]).sum();
            a + b
        })
        .collect();
    let e2 = row_norm2.iter().cloned().fold(0.0f64, f64::max);
    let e = e2.sqrt();
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let mut row = vec![0.0; 16];
            for c in 0..4 {
                row[c] = g[i][c] / e;
                row[4 + c] = gp[i][c] / e;
            }
            row[8 + i] = (e2 - row_norm2[i]).max(0.0).sqrt() / e;
            row
        })
        .collect();
    finish_embedding(rows, g, 4, e2)
}

/// Builds the 0/1 function matrix of an in-place det table and embeds it.
pub fn embed_det_table(table: &[u8]) -> Result<EmbeddedGate> {
    let k = table.len();
    if !(k == 2 || k == 4) {
        return Err(Error::NotEmbeddable(format!(
            "det gate over {k} rows: only 1- and 2-wire gates are embeddable; lower the \
             circuit first"
        )));
    }
    let mut g = vec![vec![0.0; k]; k];
    for (v_in, &v_out) in table.iter().enumerate() {
        g[v_out as usize][v_in] = 1.0;
    }
    embed_gate(&g)
}

/// The literal fair-coin unitary: postselecting its auxiliary qubit on
/// |0⟩ sends either basis state to (|0⟩+|1⟩)/√2 with survival 1/2.
pub fn coin_unitary() -> EmbeddedGate {
    let h = 0.5;
    EmbeddedGate {
        matrix: vec![
            vec![h, h, h, h],
            vec![h, h, -h, -h],
            vec![h, -h, h, -h],
            vec![h, -h, -h, h],
        ],
        logical_dim: 2,
        e2: 4.0,
    }
}

/// The decision operator: maps (1−A, A) to ((1+2A)/2, (1−2A)/2)
/// ∝ (1/2+A, 1/2−A).
pub fn decision_operator() -> [[f64; 2]; 2] {
    [[0.5, 1.5], [0.5, -0.5]]
}

/// The amplification step operator diag(1/2, 1): relative to the first
/// amplitude, each application doubles the second.
pub fn iteration_operator() -> Result<EmbeddedGate> {
    embed_nonunitary(&[[0.5, 0.0], [0.0, 1.0]])
}

/// Sparse postselected quantum state: nonzero amplitudes keyed by wire
/// assignment (key bit k = wire k), plus ln of the cumulative survival
/// probability. Auxiliary qubits are measured immediately after every
/// gate, so only logical wires are materialized.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub wires: usize,
    pub amps: BTreeMap<u64, Complex64>,
    pub log_survival: f64,
}

impl StateVector {
    pub fn basis(wires: usize, key: u64) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(key, Complex64::new(1.0, 0.0));
        StateVector { wires, amps, log_survival: 0.0 }
    }

    pub fn amplitude(&self, key: u64) -> Complex64 {
        self.amps.get(&key).copied().unwrap_or_default()
    }

    pub fn norm2(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn survival(&self) -> f64 {
        self.log_survival.exp()
    }

    /// `wires=` and survival headers, then sorted `bitstring re im`
    /// lines with 12 significant digits.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "wires={}\nlog_survival={}\nsurvival={}\n",
            self.wires,
            fmt_sig(self.log_survival),
            fmt_sig(self.survival())
        );
        for (key, amp) in &self.amps {
            let bits: String =
                (0..self.wires).map(|w| if key >> w & 1 == 1 { '1' } else { '0' }).collect();
            out.push_str(&format!("{bits} {} {}\n", fmt_sig(amp.re), fmt_sig(amp.im)));
        }
        out
    }
}

/// Applies an embedded gate to the given logical wires (targets[0] is
/// the most significant logical bit), projects the auxiliaries onto
/// zero, renormalizes, and charges the retained mass to survival.
pub fn apply_embedded(
    state: &mut StateVector,
    gate: &EmbeddedGate,
    targets: &[usize],
) -> Result<()> {
    let k = gate.logical_dim;
    assert_eq!(1 << targets.len(), k, "target count must match the gate's logical wires");
    assert!(targets.iter().all(|&t| t < state.wires), "target out of range");
    let arity = targets.len();
    let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
    for (&key, &amp) in &state.amps {
        let mut v_in = 0usize;
        for &t in targets {
            v_in = v_in << 1 | (key >> t & 1) as usize;
        }
        for v_out in 0..k {
            let coef = gate.matrix[v_out][v_in];
            if coef == 0.0 {
                continue;
            }
            let mut key2 = key;
            for (pos, &t) in targets.iter().enumerate() {
                let bit = (v_out >> (arity - 1 - pos) & 1) as u64;
                key2 = key2 & !(1 << t) | bit << t;
            }
            let entry = out.entry(key2).or_insert_with(Complex64::default);
            *entry += amp * coef;
        }
    }
    out.retain(|_, a| a.norm_sqr() > 0.0);
    let retained: f64 = out.values().map(|a| a.norm_sqr()).sum();
    if retained < 1e-300 {
        return Err(Error::SurvivalUnderflow(retained));
    }
    let scale = 1.0 / retained.sqrt();
    for a in out.values_mut() {
        *a *= scale;
    }
    state.amps = out;
    state.log_survival += retained.ln();
    Ok(())
}

/// Embedded forms of every gate the lowered circuits use, keyed per det
/// table so each dilation is computed once.
struct GateCache {
    coin: EmbeddedGate,
    reset0: EmbeddedGate,
    reset1: EmbeddedGate,
    dets: BTreeMap<Vec<u8>, EmbeddedGate>,
}

impl GateCache {
    fn new() -> Result<Self> {
        Ok(GateCache {
            coin: coin_unitary(),
            reset0: embed_gate(&[vec![1.0, 1.0], vec![0.0, 0.0]])?,
            reset1: embed_gate(&[vec![0.0, 0.0], vec![1.0, 1.0]])?,
            dets: BTreeMap::new(),
        })
    }

    fn det(&mut self, table: &[u8]) -> Result<&EmbeddedGate> {
        if !self.dets.contains_key(table) {
            self.dets.insert(table.to_vec(), embed_det_table(table)?);
        }
        Ok(&self.dets[table])
    }
}

/// Coherently evolves the all-|0⟩ state through a lowered circuit,
/// invoking `on_marker` with the state at each marker position.
pub fn run_postselected_with(
    k: &ProbCircuit,
    mut on_marker: impl FnMut(Marker, &StateVector),
) -> Result<StateVector> {
    let mut cache = GateCache::new()?;
    let mut state = StateVector::basis(k.width, 0);
    let mut next_marker = 0usize;
    for (pos, gate) in k.gates.iter().enumerate() {
        while next_marker < k.markers.len() && k.markers[next_marker].0 == pos {
            on_marker(k.markers[next_marker].1, &state);
            next_marker += 1;
        }
        match gate {
            Gate::Coin { wire } => apply_embedded(&mut state, &cache.coin, &[*wire])?,
            Gate::Reset { wire, value } => {
                let g = if *value { &cache.reset1 } else { &cache.reset0 };
                apply_embedded(&mut state, g, &[*wire])?;
            }
            Gate::Det { wires, table } => {
                let g = cache.det(table)?;
                apply_embedded(&mut state, g, wires)?;
            }
        }
    }
    while next_marker < k.markers.len() {
        on_marker(k.markers[next_marker].1, &state);
        next_marker += 1;
    }
    Ok(state)
}

pub fn run_postselected_circuit(k: &ProbCircuit) -> Result<StateVector> {
    run_postselected_with(k, |_, _| {})
}

/// Checks the final state is wire 0 tensor |0…0⟩, then applies the
/// embedded decision operator: the result is a single-wire state
/// ∝ (1/2+A)|0⟩ + (1/2−A)|1⟩ with survival carried forward.
pub fn extract_u_tilde(state: &StateVector) -> Result<StateVector> {
    let stray: f64 =
        state.amps.iter().filter(|(k, _)| **k & !1 != 0).map(|(_, a)| a.norm_sqr()).sum();
    if stray > EPS_U {
        return Err(Error::NotSeparable(stray));
    }
    let mut out = StateVector {
        wires: 1,
        amps: BTreeMap::new(),
        log_survival: state.log_survival,
    };
    for key in [0u64, 1] {
        let a = state.amplitude(key);
        if a.norm_sqr() > 0.0 {
            out.amps.insert(key, a);
        }
    }
    let norm = out.norm2().sqrt();
    for a in out.amps.values_mut() {
        *a /= norm;
    }
    let decision = embed_nonunitary(&decision_operator())?;
    apply_embedded(&mut out, &decision, &[0])?;
    Ok(out)
}

/// Measurement in the rotated basis: (|⟨+|ψ⟩|², |⟨−|ψ⟩|²).
pub fn measure_pm(state: &StateVector) -> (f64, f64) {
    assert_eq!(state.wires, 1, "plus/minus measurement needs a single wire");
    let a0 = state.amplitude(0);
    let a1 = state.amplitude(1);
    let p_plus = (a0 + a1).norm_sqr() / 2.0;
    let p_minus = (a0 - a1).norm_sqr() / 2.0;
    (p_plus, p_minus)
}
