//! Machine model: bounded-space Turing machines with deterministic,
//! nondeterministic, probabilistic, and postselecting variants, plus an
//! exhaustive oracle that computes exact outcome distributions by
//! distribution propagation over configurations.
//!
//! The oracle is the ground truth every later stage is checked against:
//! it works on arbitrary rational transition probabilities and an
//! unbounded (capped) work tape, with no canonical-form assumptions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Blank tape symbol. Input cells 0 and n+1 always read blank.
pub const BLANK: char = '#';

/// Convenience constructor for exact rationals.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MachineKind {
    Dtm,
    Ntm,
    Ptm,
    PostPtm,
}

impl MachineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MachineKind::Dtm => "dtm",
            MachineKind::Ntm => "ntm",
            MachineKind::Ptm => "ptm",
            MachineKind::PostPtm => "postptm",
        }
    }
}

/// One transition branch: target state, written work symbol, head moves,
/// and the branch probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub state: usize,
    pub write: char,
    pub d_in: i8,
    pub d_wk: i8,
    pub prob: BigRational,
}

/// A two-tape machine: read-only input tape indexed 0..=n+1 with blanks at
/// both ends, and a work tape. `delta` maps (state, input symbol, work
/// symbol) to an ordered list of branches; the order is significant for
/// canonical machines, where entry 0 is the heads branch and entry 1 the
/// tails branch of the step's coin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    pub kind: MachineKind,
    pub states: Vec<String>,
    pub initial: usize,
    pub accept: usize,
    pub reject: usize,
    pub nonpost: Option<usize>,
    pub input_alphabet: Vec<char>,
    pub work_alphabet: Vec<char>,
    pub delta: BTreeMap<(usize, char, char), Vec<Rule>>,
}

impl MachineSpec {
    /// Builds a machine with an empty transition table. Panics on unknown
    /// state names; callers constructing from untrusted text must resolve
    /// names first.
    pub fn new(
        kind: MachineKind,
        states: &[&str],
        initial: &str,
        accept: &str,
        reject: &str,
        nonpost: Option<&str>,
        input_alphabet: &[char],
        work_alphabet: &[char],
    ) -> Self {
        let names: Vec<String> = states.iter().map(|s| s.to_string()).collect();
        let idx = |name: &str| -> usize {
            names
                .iter()
                .position(|s| s == name)
                .unwrap_or_else(|| panic!("unknown state name {name:?}"))
        };
        MachineSpec {
            kind,
            initial: idx(initial),
            accept: idx(accept),
            reject: idx(reject),
            nonpost: nonpost.map(idx),
            states: names,
            input_alphabet: input_alphabet.to_vec(),
            work_alphabet: work_alphabet.to_vec(),
            delta: BTreeMap::new(),
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn state_name(&self, idx: usize) -> &str {
        &self.states[idx]
    }

    pub fn is_halting(&self, state: usize) -> bool {
        state == self.accept || state == self.reject || Some(state) == self.nonpost
    }

    /// Input symbols including the blank.
    pub fn input_symbols(&self) -> Vec<char> {
        let mut v = self.input_alphabet.clone();
        v.push(BLANK);
        v
    }

    /// Work symbols including the blank.
    pub fn work_symbols(&self) -> Vec<char> {
        let mut v = self.work_alphabet.clone();
        v.push(BLANK);
        v
    }

    /// Appends one transition branch. Panics on unknown state names.
    pub fn add_rule(
        &mut self,
        from: &str,
        sigma: char,
        gamma: char,
        to: &str,
        write: char,
        d_in: i8,
        d_wk: i8,
        prob: BigRational,
    ) {
        let from = self
            .state_index(from)
            .unwrap_or_else(|| panic!("unknown state name {from:?}"));
        let to = self
            .state_index(to)
            .unwrap_or_else(|| panic!("unknown state name {to:?}"));
        self.delta.entry((from, sigma, gamma)).or_default().push(Rule {
            state: to,
            write,
            d_in,
            d_wk,
            prob,
        });
    }

    /// Appends a probability-1 branch.
    pub fn add_det(
        &mut self,
        from: &str,
        sigma: char,
        gamma: char,
        to: &str,
        write: char,
        d_in: i8,
        d_wk: i8,
    ) {
        self.add_rule(from, sigma, gamma, to, write, d_in, d_wk, BigRational::one());
    }

    /// Appends a fair coin split: branch 0 on heads, branch 1 on tails.
    #[allow(clippy::too_many_arguments)]
    pub fn add_split(
        &mut self,
        from: &str,
        sigma: char,
        gamma: char,
        heads: (&str, char, i8, i8),
        tails: (&str, char, i8, i8),
    ) {
        self.add_rule(from, sigma, gamma, heads.0, heads.1, heads.2, heads.3, rat(1, 2));
        self.add_rule(from, sigma, gamma, tails.0, tails.1, tails.2, tails.3, rat(1, 2));
    }

    /// Checks the structural invariants. An empty report means the machine
    /// is well-formed: every non-halting (state, input symbol, work symbol)
    /// triple has total outgoing probability exactly 1, probabilities fit
    /// the machine kind, no transition leaves a halting state, and all
    /// symbols belong to the declared alphabets.
    pub fn validate_well_formed(&self) -> Vec<String> {
        let mut findings = Vec::new();
        if self.accept == self.reject {
            findings.push("accept and reject are the same state".to_string());
        }
        if let Some(np) = self.nonpost {
            if np == self.accept || np == self.reject {
                findings.push("nonpost coincides with accept or reject".to_string());
            }
            if self.kind != MachineKind::PostPtm {
                findings.push(format!(
                    "nonpost state declared on a {} machine",
                    self.kind.as_str()
                ));
            }
        } else if self.kind == MachineKind::PostPtm {
            findings.push("postptm without a nonpost state".to_string());
        }
        if self.input_alphabet.contains(&BLANK) || self.work_alphabet.contains(&BLANK) {
            findings.push("alphabets must not contain the blank symbol".to_string());
        }

        let sigmas = self.input_symbols();
        let gammas = self.work_symbols();
        for s in 0..self.states.len() {
            if self.is_halting(s) {
                continue;
            }
            for &sigma in &sigmas {
                for &gamma in &gammas {
                    let rules = self.delta.get(&(s, sigma, gamma));
                    let mass: BigRational = rules
                        .map(|rs| rs.iter().map(|r| r.prob.clone()).sum())
                        .unwrap_or_else(BigRational::zero);
                    if !mass.is_one() {
                        findings.push(format!(
                            "probability mass {} != 1 at ({}, {}, {})",
                            mass,
                            self.state_name(s),
                            sigma,
                            gamma
                        ));
                    }
                    let Some(rules) = rules else { continue };
                    if self.kind == MachineKind::Dtm && rules.len() != 1 {
                        findings.push(format!(
                            "dtm needs exactly one branch at ({}, {}, {}), found {}",
                            self.state_name(s),
                            sigma,
                            gamma,
                            rules.len()
                        ));
                    }
                    for r in rules {
                        if r.prob.is_negative() || r.prob > BigRational::one() {
                            findings.push(format!(
                                "probability {} outside [0, 1] at ({}, {}, {})",
                                r.prob,
                                self.state_name(s),
                                sigma,
                                gamma
                            ));
                        }
                        if self.kind == MachineKind::Ptm
                            && !(r.prob == rat(1, 2) || r.prob.is_one())
                        {
                            findings.push(format!(
                                "probability {} not in {{0, 1/2, 1}} at ({}, {}, {})",
                                r.prob,
                                self.state_name(s),
                                sigma,
                                gamma
                            ));
                        }
                        if r.write != BLANK && !self.work_alphabet.contains(&r.write) {
                            findings.push(format!(
                                "written symbol {} not in the work alphabet at ({}, {}, {})",
                                r.write,
                                self.state_name(s),
                                sigma,
                                gamma
                            ));
                        }
                        if !(-1..=1).contains(&r.d_in) || !(-1..=1).contains(&r.d_wk) {
                            findings.push(format!(
                                "head move outside {{-1, 0, +1}} at ({}, {}, {})",
                                self.state_name(s),
                                sigma,
                                gamma
                            ));
                        }
                    }
                }
            }
        }
        for &(s, sigma, gamma) in self.delta.keys() {
            if self.is_halting(s) {
                findings.push(format!(
                    "transition leaves halting state {}",
                    self.state_name(s)
                ));
            }
            if !sigmas.contains(&sigma) || !gammas.contains(&gamma) {
                findings.push(format!(
                    "transition keyed on undeclared symbol at ({}, {}, {})",
                    self.state_name(s),
                    sigma,
                    gamma
                ));
            }
        }
        findings
    }

    /// Errors with the first finding unless the machine is well-formed.
    pub fn require_well_formed(&self) -> Result<()> {
        match self.validate_well_formed().into_iter().next() {
            None => Ok(()),
            Some(f) => Err(Error::NotWellFormed(f)),
        }
    }
}

/// Exact outcome masses of a bounded run. Sums to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeDistribution {
    pub p_acc: BigRational,
    pub p_rej: BigRational,
    pub p_npost: BigRational,
    pub p_nonhalt: BigRational,
}

impl OutcomeDistribution {
    pub fn halting_mass(&self) -> BigRational {
        self.p_acc.clone() + self.p_rej.clone() + self.p_npost.clone()
    }
}

/// Normalized acceptance under postselection: discards non-postselecting
/// mass and renormalizes over accept + reject.
pub fn postselect_normalize(d: &OutcomeDistribution) -> Result<(BigRational, BigRational)> {
    if !d.p_nonhalt.is_zero() {
        return Err(Error::NonHaltingMass(d.p_nonhalt.to_string()));
    }
    let denom = d.p_acc.clone() + d.p_rej.clone();
    if denom.is_zero() {
        return Err(Error::NoHaltingMass);
    }
    Ok((d.p_acc.clone() / denom.clone(), d.p_rej.clone() / denom))
}

/// Caps for exhaustive runs. `space_cap` bounds both the number of
/// non-blank work cells and the work head's excursion from cell 0.
#[derive(Debug, Clone, Copy)]
pub struct RunLimits {
    pub step_budget: usize,
    pub space_cap: usize,
}

impl RunLimits {
    pub fn new(step_budget: usize) -> Self {
        RunLimits { step_budget, space_cap: 64 }
    }

    pub fn with_space_cap(step_budget: usize, space_cap: usize) -> Self {
        RunLimits { step_budget, space_cap }
    }
}

/// A full machine configuration as the oracle tracks it: work tape stored
/// sparsely, blanks omitted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct OracleConfig {
    pub state: usize,
    pub h_in: i64,
    pub work: BTreeMap<i64, char>,
    pub h_wk: i64,
}

impl OracleConfig {
    pub fn initial(spec: &MachineSpec) -> Self {
        OracleConfig {
            state: spec.initial,
            h_in: 0,
            work: BTreeMap::new(),
            h_wk: 0,
        }
    }

    pub fn read_work(&self) -> char {
        self.work.get(&self.h_wk).copied().unwrap_or(BLANK)
    }
}

/// Per-step halting masses of an exhaustive run, alongside the totals.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub outcome: OutcomeDistribution,
    /// (step, accept mass, reject mass, nonpost mass) for steps with halts.
    pub halts_by_step: Vec<(usize, BigRational, BigRational, BigRational)>,
}

pub(crate) fn read_input_symbol(input: &[char], h_in: i64) -> char {
    if h_in <= 0 || h_in as usize > input.len() {
        BLANK
    } else {
        input[h_in as usize - 1]
    }
}

/// Applies one branch to a configuration. Errors name the offending move;
/// the caller supplies the path prefix.
pub(crate) fn apply_rule(
    cfg: &OracleConfig,
    rule: &Rule,
    input_len: usize,
    limits: &RunLimits,
    path: impl Fn() -> String,
) -> Result<OracleConfig> {
    let mut work = cfg.work.clone();
    if rule.write == BLANK {
        work.remove(&cfg.h_wk);
    } else {
        work.insert(cfg.h_wk, rule.write);
    }
    let h_in = cfg.h_in + rule.d_in as i64;
    if h_in < 0 || h_in > input_len as i64 + 1 {
        return Err(Error::InputHeadOutOfBounds { path: path() });
    }
    let h_wk = cfg.h_wk + rule.d_wk as i64;
    if work.len() > limits.space_cap || h_wk.unsigned_abs() as usize > limits.space_cap {
        return Err(Error::WorkSpaceExceeded { cap: limits.space_cap, path: path() });
    }
    Ok(OracleConfig { state: rule.state, h_in, work, h_wk })
}

fn describe_move(spec: &MachineSpec, cfg: &OracleConfig, sigma: char, gamma: char, rule: &Rule) -> String {
    format!(
        "{} {} {} -> {}",
        spec.state_name(cfg.state),
        sigma,
        gamma,
        spec.state_name(rule.state)
    )
}

/// Exhaustively runs `spec` on `input` for up to `limits.step_budget`
/// steps, propagating the exact distribution over configurations. Mass
/// still in flight when the budget runs out is reported as `p_nonhalt`.
pub fn run_exhaustive_record(
    spec: &MachineSpec,
    input: &str,
    limits: &RunLimits,
) -> Result<RunRecord> {
    spec.require_well_formed()?;
    let input: Vec<char> = input.chars().collect();
    for c in &input {
        if !spec.input_alphabet.contains(c) {
            return Err(Error::NotWellFormed(format!(
                "input symbol {c} not in the input alphabet"
            )));
        }
    }

    let mut current: BTreeMap<OracleConfig, BigRational> = BTreeMap::new();
    // First predecessor and move label per reached configuration, for
    // reconstructing a witness path when a bound is violated.
    let mut parent: BTreeMap<OracleConfig, (OracleConfig, String)> = BTreeMap::new();
    let start = OracleConfig::initial(spec);
    let halted_at_start = spec.is_halting(start.state);
    current.insert(start.clone(), BigRational::one());

    let zero3 = || (BigRational::zero(), BigRational::zero(), BigRational::zero());
    let mut p_acc = BigRational::zero();
    let mut p_rej = BigRational::zero();
    let mut p_npost = BigRational::zero();
    let mut halts_by_step = Vec::new();

    if halted_at_start {
        // Degenerate but legal: the initial state already halts.
        if start.state == spec.accept {
            p_acc = BigRational::one();
        } else if start.state == spec.reject {
            p_rej = BigRational::one();
        } else {
            p_npost = BigRational::one();
        }
        halts_by_step.push((0, p_acc.clone(), p_rej.clone(), p_npost.clone()));
        current.clear();
    }

    let witness = |parent: &BTreeMap<OracleConfig, (OracleConfig, String)>,
                   cfg: &OracleConfig,
                   last: String| {
        let mut moves = vec![last];
        let mut cur = cfg.clone();
        while let Some((prev, label)) = parent.get(&cur) {
            moves.push(label.clone());
            cur = prev.clone();
        }
        moves.reverse();
        moves.join("; ")
    };

    for step in 1..=limits.step_budget {
        if current.is_empty() {
            break;
        }
        let mut next: BTreeMap<OracleConfig, BigRational> = BTreeMap::new();
        let (mut acc_t, mut rej_t, mut np_t) = zero3();
        for (cfg, mass) in &current {
            let sigma = read_input_symbol(&input, cfg.h_in);
            let gamma = cfg.read_work();
            let rules = spec
                .delta
                .get(&(cfg.state, sigma, gamma))
                .ok_or_else(|| {
                    Error::NotWellFormed(format!(
                        "no rules at ({}, {}, {})",
                        spec.state_name(cfg.state),
                        sigma,
                        gamma
                    ))
                })?;
            for rule in rules {
                if rule.prob.is_zero() {
                    continue;
                }
                let label = describe_move(spec, cfg, sigma, gamma, rule);
                let succ = apply_rule(cfg, rule, input.len(), limits, || {
                    witness(&parent, cfg, label.clone())
                })?;
                let add = mass.clone() * rule.prob.clone();
                if spec.is_halting(succ.state) {
                    if succ.state == spec.accept {
                        acc_t += add;
                    } else if succ.state == spec.reject {
                        rej_t += add;
                    } else {
                        np_t += add;
                    }
                } else {
                    // The start config is the walk's anchor: giving it a
                    // parent (a loop back to the start) would let witness
                    // reconstruction cycle forever.
                    if succ != start {
                        parent
                            .entry(succ.clone())
                            .or_insert_with(|| (cfg.clone(), label));
                    }
                    *next.entry(succ).or_insert_with(BigRational::zero) += add;
                }
            }
        }
        if !(acc_t.is_zero() && rej_t.is_zero() && np_t.is_zero()) {
            halts_by_step.push((step, acc_t.clone(), rej_t.clone(), np_t.clone()));
        }
        p_acc += acc_t;
        p_rej += rej_t;
        p_npost += np_t;
        current = next;
    }

    let p_nonhalt: BigRational = current.values().cloned().sum();
    Ok(RunRecord {
        outcome: OutcomeDistribution { p_acc, p_rej, p_npost, p_nonhalt },
        halts_by_step,
    })
}

/// Exhaustive run with the default space cap.
pub fn run_exhaustive(
    spec: &MachineSpec,
    input: &str,
    step_budget: usize,
) -> Result<OutcomeDistribution> {
    run_exhaustive_record(spec, input, &RunLimits::new(step_budget)).map(|r| r.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn validate_flags_missing_mass() {
        let mut m = MachineSpec::new(
            MachineKind::Ptm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &['a'],
            &[],
        );
        m.add_rule("s0", 'a', BLANK, "acc", BLANK, 0, 0, rat(1, 2));
        let findings = m.validate_well_formed();
        assert!(
            findings.iter().any(|f| f.contains("1/2 != 1") && f.contains("(s0, a, #)")),
            "expected a mass finding naming the triple, got {findings:?}"
        );
    }

    #[test]
    fn validate_flags_dtm_branching() {
        let mut m = MachineSpec::new(
            MachineKind::Dtm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &[],
            &[],
        );
        m.add_rule("s0", BLANK, BLANK, "acc", BLANK, 0, 0, rat(1, 2));
        m.add_rule("s0", BLANK, BLANK, "rej", BLANK, 0, 0, rat(1, 2));
        let findings = m.validate_well_formed();
        assert!(findings.iter().any(|f| f.contains("dtm")), "{findings:?}");
    }

    #[test]
    fn validate_flags_halting_state_rules() {
        let mut m = corpus::det_acc();
        m.delta.insert(
            (m.accept, BLANK, BLANK),
            vec![Rule { state: m.accept, write: BLANK, d_in: 0, d_wk: 0, prob: rat(1, 1) }],
        );
        let findings = m.validate_well_formed();
        assert!(findings.iter().any(|f| f.contains("leaves halting state")), "{findings:?}");
    }

    #[test]
    fn det_acc_accepts_in_one_step() {
        let d = run_exhaustive(&corpus::det_acc(), "a", 1).unwrap();
        assert!(d.p_acc.is_one());
        assert!(d.p_rej.is_zero() && d.p_npost.is_zero() && d.p_nonhalt.is_zero());
    }

    #[test]
    fn d1_accepts_three_quarters() {
        let d = run_exhaustive(&corpus::d1(), "a", 2).unwrap();
        assert_eq!(d.p_acc, rat(3, 4));
        assert_eq!(d.p_rej, rat(1, 4));
        assert!(d.p_npost.is_zero() && d.p_nonhalt.is_zero());
    }

    #[test]
    fn zero_budget_reports_all_mass_in_flight() {
        let d = run_exhaustive(&corpus::d1(), "a", 0).unwrap();
        assert!(d.p_acc.is_zero() && d.p_rej.is_zero());
        assert!(d.p_nonhalt.is_one());
    }

    #[test]
    fn runaway_input_head_names_the_path() {
        let mut m = MachineSpec::new(
            MachineKind::Dtm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &['a'],
            &[],
        );
        // Walks right forever regardless of what it reads.
        m.add_det("s0", 'a', BLANK, "s0", BLANK, 1, 0);
        m.add_det("s0", BLANK, BLANK, "s0", BLANK, 1, 0);
        let err = run_exhaustive(&m, "a", 10).unwrap_err();
        match err {
            Error::InputHeadOutOfBounds { path } => {
                assert!(path.contains("s0 # # -> s0"), "path was {path}");
            }
            other => panic!("expected head-bound error, got {other}"),
        }
    }

    #[test]
    fn witness_reconstruction_survives_loops_through_the_start() {
        let mut m = MachineSpec::new(
            MachineKind::Ptm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &['a'],
            &[],
        );
        // Heads stands still (looping the start config back onto itself),
        // tails walks off the left edge; naming the offending path must
        // not chase the loop forever.
        m.add_split("s0", 'a', BLANK, ("s0", BLANK, 0, 0), ("s0", BLANK, -1, 0));
        m.add_split("s0", BLANK, BLANK, ("s0", BLANK, 0, 0), ("s0", BLANK, -1, 0));
        let err = run_exhaustive(&m, "a", 4).unwrap_err();
        match err {
            Error::InputHeadOutOfBounds { path } => {
                assert!(path.contains("s0 # # -> s0"), "path was {path}");
            }
            other => panic!("expected head-bound error, got {other}"),
        }
    }

    #[test]
    fn work_space_cap_is_enforced() {
        let mut m = MachineSpec::new(
            MachineKind::Dtm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &[],
            &['1'],
        );
        m.add_det("s0", BLANK, BLANK, "s0", '1', 0, 1);
        m.add_det("s0", BLANK, '1', "s0", '1', 0, 1);
        let err = run_exhaustive_record(&m, "", &RunLimits::with_space_cap(100, 8)).unwrap_err();
        assert!(matches!(err, Error::WorkSpaceExceeded { cap: 8, .. }));
    }

    #[test]
    fn normalize_discards_nonpost_mass() {
        let d = OutcomeDistribution {
            p_acc: rat(1, 3),
            p_rej: rat(1, 3),
            p_npost: rat(1, 3),
            p_nonhalt: rat(0, 1),
        };
        let (a, r) = postselect_normalize(&d).unwrap();
        assert_eq!(a, rat(1, 2));
        assert_eq!(r, rat(1, 2));
    }

    #[test]
    fn normalize_rejects_empty_halting_mass() {
        let d = OutcomeDistribution {
            p_acc: rat(0, 1),
            p_rej: rat(0, 1),
            p_npost: rat(1, 1),
            p_nonhalt: rat(0, 1),
        };
        assert!(matches!(postselect_normalize(&d), Err(Error::NoHaltingMass)));
    }

    #[test]
    fn normalize_rejects_nonhalting_mass() {
        let d = OutcomeDistribution {
            p_acc: rat(1, 2),
            p_rej: rat(1, 4),
            p_npost: rat(0, 1),
            p_nonhalt: rat(1, 4),
        };
        assert!(matches!(postselect_normalize(&d), Err(Error::NonHaltingMass(_))));
    }

    #[test]
    fn rational_branching_is_exact() {
        let mut m = MachineSpec::new(
            MachineKind::Ntm,
            &["s0", "acc", "rej"],
            "s0",
            "acc",
            "rej",
            None,
            &[],
            &[],
        );
        m.add_rule("s0", BLANK, BLANK, "acc", BLANK, 0, 0, rat(1, 3));
        m.add_rule("s0", BLANK, BLANK, "rej", BLANK, 0, 0, rat(2, 3));
        let d = run_exhaustive(&m, "", 1).unwrap();
        assert_eq!(d.p_acc, rat(1, 3));
        assert_eq!(d.p_rej, rat(2, 3));
    }

    #[test]
    fn record_tracks_halting_steps() {
        let r = run_exhaustive_record(&corpus::post_18_38(), "", &RunLimits::new(8)).unwrap();
        assert_eq!(r.outcome.p_acc, rat(1, 8));
        assert_eq!(r.outcome.p_rej, rat(3, 8));
        assert_eq!(r.outcome.p_npost, rat(1, 2));
        assert!(r.outcome.p_nonhalt.is_zero());
        let total_steps: BigRational = r
            .halts_by_step
            .iter()
            .map(|(t, a, rj, np)| rat(*t as i64, 1) * (a.clone() + rj.clone() + np.clone()))
            .sum();
        assert_eq!(total_steps, rat(3, 1), "every path halts at step 3");
    }
}
