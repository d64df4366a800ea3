//! Configuration space of a canonical machine on a fixed input: the
//! finite set of (state, input-head, work-window, work-head) snapshots,
//! their fixed-width binary encoding, the column-stochastic one-step
//! transition matrix, and the exact distribution iteration that yields
//! the acceptance probability.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::machine::{rat, MachineSpec, BLANK};

/// Hard ceiling on the number of configurations.
pub const DEFAULT_CONFIG_CAP: usize = 1 << 20;

/// One machine snapshot. The work window has fixed width: cell values are
/// bits, with a blank cell indistinguishable from a written 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Configuration {
    pub state: usize,
    pub h_in: usize,
    pub work: Vec<bool>,
    pub h_wk: usize,
}

fn ceil_log2(x: usize) -> usize {
    debug_assert!(x >= 1);
    x.next_power_of_two().trailing_zeros() as usize
}

/// The configuration space of one (machine, input, space bound) instance:
/// field widths, enumeration order, and encoding.
#[derive(Debug)]
pub struct ConfigSpace<'a> {
    pub spec: &'a MachineSpec,
    pub input: Vec<char>,
    pub space: usize,
    pub state_bits: usize,
    pub hin_bits: usize,
    pub hwk_bits: usize,
    /// Total encoded length: state ‖ h_in ‖ w ‖ h_wk.
    pub l: usize,
    pub n_configs: usize,
}

impl<'a> ConfigSpace<'a> {
    pub fn new(spec: &'a MachineSpec, input: &str, space: usize) -> Result<Self> {
        Self::with_cap(spec, input, space, DEFAULT_CONFIG_CAP)
    }

    pub fn with_cap(
        spec: &'a MachineSpec,
        input: &str,
        space: usize,
        cap: usize,
    ) -> Result<Self> {
        assert!(space >= 1, "space bound must be positive");
        let input: Vec<char> = input.chars().collect();
        let m = spec.states.len();
        let n = input.len();
        let per_state = (n + 2)
            .checked_mul(1usize.checked_shl(space as u32).unwrap_or(0))
            .and_then(|x| x.checked_mul(space));
        let n_configs = per_state.and_then(|x| x.checked_mul(m)).unwrap_or(usize::MAX);
        if n_configs > cap {
            return Err(Error::ConfigSpaceTooLarge { n: n_configs, cap });
        }
        let state_bits = ceil_log2(m);
        let hin_bits = ceil_log2(n + 2);
        let hwk_bits = ceil_log2(space);
        let l = state_bits + hin_bits + space + hwk_bits;
        Ok(ConfigSpace { spec, input, space, state_bits, hin_bits, hwk_bits, l, n_configs })
    }

    pub fn initial_config(&self) -> Configuration {
        Configuration {
            state: self.spec.initial,
            h_in: 0,
            work: vec![false; self.space],
            h_wk: 0,
        }
    }

    pub fn accept_config(&self) -> Configuration {
        Configuration {
            state: self.spec.accept,
            h_in: 0,
            work: vec![false; self.space],
            h_wk: 0,
        }
    }

    pub fn reject_config(&self) -> Configuration {
        Configuration {
            state: self.spec.reject,
            h_in: 0,
            work: vec![false; self.space],
            h_wk: 0,
        }
    }

    /// Position of `c` in the enumeration order (lexicographic on state,
    /// h_in, work-as-big-endian-integer, h_wk).
    pub fn index(&self, c: &Configuration) -> usize {
        debug_assert_eq!(c.work.len(), self.space);
        let mut w = 0usize;
        for &bit in &c.work {
            w = (w << 1) | bit as usize;
        }
        ((c.state * (self.input.len() + 2) + c.h_in) << self.space | w) * self.space + c.h_wk
    }

    pub fn config_at(&self, idx: usize) -> Configuration {
        debug_assert!(idx < self.n_configs);
        let h_wk = idx % self.space;
        let rest = idx / self.space;
        let w = rest & ((1 << self.space) - 1);
        let rest = rest >> self.space;
        let h_in = rest % (self.input.len() + 2);
        let state = rest / (self.input.len() + 2);
        let work = (0..self.space).map(|i| (w >> (self.space - 1 - i)) & 1 == 1).collect();
        Configuration { state, h_in, work, h_wk }
    }

    /// All configurations in index order.
    pub fn enumerate(&self) -> Vec<Configuration> {
        (0..self.n_configs).map(|i| self.config_at(i)).collect()
    }

    /// Fixed-field binary encoding, big-endian within each field.
    pub fn encode_bits(&self, c: &Configuration) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.l);
        let push_field = |bits: &mut Vec<bool>, value: usize, width: usize| {
            for k in (0..width).rev() {
                bits.push((value >> k) & 1 == 1);
            }
        };
        push_field(&mut bits, c.state, self.state_bits);
        push_field(&mut bits, c.h_in, self.hin_bits);
        bits.extend_from_slice(&c.work);
        push_field(&mut bits, c.h_wk, self.hwk_bits);
        bits
    }

    pub fn decode_bits(&self, bits: &[bool]) -> Result<Configuration> {
        if bits.len() != self.l {
            return Err(Error::ConfigOutOfBounds(format!(
                "encoding has {} bits, expected {}",
                bits.len(),
                self.l
            )));
        }
        let field = |lo: usize, width: usize| -> usize {
            bits[lo..lo + width].iter().fold(0, |acc, &b| (acc << 1) | b as usize)
        };
        let state = field(0, self.state_bits);
        let h_in = field(self.state_bits, self.hin_bits);
        let work: Vec<bool> =
            bits[self.state_bits + self.hin_bits..self.state_bits + self.hin_bits + self.space]
                .to_vec();
        let h_wk = field(self.state_bits + self.hin_bits + self.space, self.hwk_bits);
        if state >= self.spec.states.len() {
            return Err(Error::ConfigOutOfBounds(format!(
                "state field {state} >= {}",
                self.spec.states.len()
            )));
        }
        if h_in >= self.input.len() + 2 {
            return Err(Error::ConfigOutOfBounds(format!(
                "input head field {h_in} >= {}",
                self.input.len() + 2
            )));
        }
        if h_wk >= self.space {
            return Err(Error::ConfigOutOfBounds(format!(
                "work head field {h_wk} >= {}",
                self.space
            )));
        }
        Ok(Configuration { state, h_in, work, h_wk })
    }

    /// Heads and tails successors of a non-halting configuration.
    pub fn successors(&self, c: &Configuration) -> Result<(Configuration, Configuration)> {
        if self.spec.is_halting(c.state) {
            return Err(Error::ConfigOutOfBounds(format!(
                "no successor: {} is a halting state",
                self.spec.state_name(c.state)
            )));
        }
        let sigma = if c.h_in == 0 || c.h_in == self.input.len() + 1 {
            BLANK
        } else {
            self.input[c.h_in - 1]
        };
        let gamma = if c.work[c.h_wk] { '1' } else { BLANK };
        let rules = self.spec.delta.get(&(c.state, sigma, gamma)).ok_or_else(|| {
            Error::NotCanonical(format!(
                "no rules at ({}, {}, {})",
                self.spec.state_name(c.state),
                sigma,
                gamma
            ))
        })?;
        if rules.len() != 2 || rules.iter().any(|r| r.prob != rat(1, 2)) {
            return Err(Error::NotCanonical(format!(
                "({}, {}, {}) does not split into two 1/2 branches",
                self.spec.state_name(c.state),
                sigma,
                gamma
            )));
        }
        let apply = |rule: &crate::machine::Rule| -> Result<Configuration> {
            let h_in = c.h_in as i64 + rule.d_in as i64;
            let h_wk = c.h_wk as i64 + rule.d_wk as i64;
            if !(0..=self.input.len() as i64 + 1).contains(&h_in) {
                return Err(Error::ConfigOutOfBounds(format!(
                    "input head moves to {h_in} from ({}, h_in {}, h_wk {})",
                    self.spec.state_name(c.state),
                    c.h_in,
                    c.h_wk
                )));
            }
            if !(0..self.space as i64).contains(&h_wk) {
                return Err(Error::ConfigOutOfBounds(format!(
                    "work head moves to {h_wk} from ({}, h_in {}, h_wk {}); space bound {}",
                    self.spec.state_name(c.state),
                    c.h_in,
                    c.h_wk,
                    self.space
                )));
            }
            let mut work = c.work.clone();
            work[c.h_wk] = rule.write == '1';
            Ok(Configuration { state: rule.state, h_in: h_in as usize, work, h_wk: h_wk as usize })
        };
        Ok((apply(&rules[0])?, apply(&rules[1])?))
    }

    /// Builds the one-step transition matrix. Non-halting configurations
    /// reachable from the initial one must have in-bounds successors;
    /// unreachable ones with out-of-bounds successors become absorbing
    /// self-loops (they carry no probability mass on any run).
    pub fn build_matrix(&self) -> Result<ConfigMatrix> {
        let n = self.n_configs;
        let mut reachable = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        let start = self.index(&self.initial_config());
        reachable[start] = true;
        queue.push_back(start);
        let mut cols: Vec<Column> = Vec::with_capacity(n);
        for i in 0..n {
            let c = self.config_at(i);
            if self.spec.is_halting(c.state) {
                cols.push(Column::Single(i));
            } else {
                match self.successors(&c) {
                    Ok((h, t)) => {
                        let hi = self.index(&h);
                        let ti = self.index(&t);
                        cols.push(if hi == ti { Column::Single(hi) } else { Column::Split(hi, ti) });
                    }
                    Err(e) => cols.push(Column::Trapped(e.to_string())),
                }
            }
        }
        while let Some(i) = queue.pop_front() {
            match &cols[i] {
                Column::Single(t) => {
                    if !reachable[*t] {
                        reachable[*t] = true;
                        queue.push_back(*t);
                    }
                }
                Column::Split(h, t) => {
                    for &j in &[*h, *t] {
                        if !reachable[j] {
                            reachable[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
                Column::Trapped(reason) => {
                    return Err(Error::ConfigOutOfBounds(format!(
                        "reachable configuration {i} has no in-bounds successors: {reason}"
                    )));
                }
            }
        }
        Ok(ConfigMatrix {
            n,
            cols,
            initial: start,
            accept: self.index(&self.accept_config()),
            reject: self.index(&self.reject_config()),
        })
    }

    /// `index bits state h_in w h_wk` lines for every configuration.
    pub fn dump_table(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_configs {
            let c = self.config_at(i);
            let bits: String =
                self.encode_bits(&c).iter().map(|&b| if b { '1' } else { '0' }).collect();
            let w: String = c.work.iter().map(|&b| if b { '1' } else { '0' }).collect();
            out.push_str(&format!(
                "{i} {bits} {} {} {w} {}\n",
                self.spec.state_name(c.state),
                c.h_in,
                c.h_wk
            ));
        }
        out
    }
}

/// One matrix column: where a configuration's probability mass goes in
/// one step. Branch order is heads then tails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    /// Both branches coincide, or the configuration is halting/absorbing.
    Single(usize),
    Split(usize, usize),
    /// Unreachable configuration with out-of-bounds successors; treated
    /// as absorbing. The reason is kept for diagnostics.
    Trapped(String),
}

/// Column-stochastic one-step transition matrix over all configurations.
pub struct ConfigMatrix {
    pub n: usize,
    pub cols: Vec<Column>,
    pub initial: usize,
    pub accept: usize,
    pub reject: usize,
}

impl ConfigMatrix {
    /// Nonzero entries of column `i` as (row, probability), heads first.
    pub fn column_entries(&self, i: usize) -> Vec<(usize, BigRational)> {
        match &self.cols[i] {
            Column::Single(t) => vec![(*t, rat(1, 1))],
            Column::Trapped(_) => vec![(i, rat(1, 1))],
            Column::Split(h, t) => vec![(*h, rat(1, 2)), (*t, rat(1, 2))],
        }
    }

    /// Heads/tails successor indices for the circuit compiler. Halting
    /// and trapped columns report themselves twice (a dummy split).
    pub fn successor_pair(&self, i: usize) -> (usize, usize) {
        match &self.cols[i] {
            Column::Single(t) => (*t, *t),
            Column::Trapped(_) => (i, i),
            Column::Split(h, t) => (*h, *t),
        }
    }

    /// One application of the matrix to a dense probability vector.
    pub fn step(&self, v: &[BigRational]) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.n];
        for (i, mass) in v.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (j, p) in self.column_entries(i) {
                out[j] += mass * &p;
            }
        }
        out
    }

    /// Distribution trajectory v_0..v_T from the initial indicator.
    pub fn iterate(&self, t: usize) -> Vec<Vec<BigRational>> {
        let mut v = vec![BigRational::zero(); self.n];
        v[self.initial] = BigRational::one();
        let mut out = vec![v];
        for _ in 0..t {
            let next = self.step(out.last().expect("trajectory is non-empty"));
            out.push(next);
        }
        out
    }

    /// `N=<int>` header plus `j i p/q` triples, column-major.
    pub fn dump(&self) -> String {
        use crate::format::fmt_rational;
        let mut out = format!("N={}\n", self.n);
        for i in 0..self.n {
            for (j, p) in self.column_entries(i) {
                out.push_str(&format!("{j} {i} {}\n", fmt_rational(&p)));
            }
        }
        out
    }
}

/// Iterates the matrix `t` times and reads off the acceptance and
/// rejection probabilities. Errors if any mass sits outside the two
/// halting configurations, i.e. the machine was not canonical at clock t.
pub fn final_distribution(m: &ConfigMatrix, t: usize) -> Result<(BigRational, BigRational)> {
    let v = m.iterate(t).pop().expect("trajectory is non-empty");
    let mut stray = BigRational::zero();
    for (i, mass) in v.iter().enumerate() {
        if i != m.accept && i != m.reject {
            stray += mass;
        }
    }
    if !stray.is_zero() {
        return Err(Error::NotCanonical(format!(
            "machine not canonical at clock {t}: probability {stray} outside the halting \
             configurations"
        )));
    }
    Ok((v[m.accept].clone(), v[m.reject].clone()))
}

/// The integer A' with A = A'/2^t, if A is such a dyadic.
pub fn dyadic_numerator(a: &BigRational, t: usize) -> Option<BigInt> {
    let scaled = a * BigRational::from_integer(BigInt::from(1) << t);
    scaled.is_integer().then(|| scaled.to_integer())
}

/// The degeneracy guard: A = 1/2 exactly, i.e. A' = 2^{t-1}.
pub fn is_degenerate(a: &BigRational) -> bool {
    a == &rat(1, 2)
}
