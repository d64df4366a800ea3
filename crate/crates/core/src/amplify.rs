//! Amplified decision procedure: a sweep of runs indexed by p, each
//! stretching the rejection component of the decision state by 2^(T-p)
//! before a ±45° measurement, combined through an all-plus/all-minus
//! counter whose normalized verdict has error at most 3/10. Also the
//! equality recognizer that maps the decision state to (2A−1, 2^{-T})
//! and accepts on |0⟩.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::circuit::{compile, lower};
use crate::config::{final_distribution, is_degenerate, ConfigSpace};
use crate::error::{Error, Result};
use crate::format::{fmt_rational, fmt_sig};
use crate::machine::{rat, MachineSpec};
use crate::quantum::{
    apply_embedded, embed_nonunitary, extract_u_tilde, iteration_operator, measure_pm,
    run_postselected_circuit, StateVector,
};

/// Everything the p-sweep shares: the exact acceptance probability and
/// the decision state ∝ (1/2+A)|0⟩ + (1/2−A)|1⟩ produced by one
/// coherent run. Individual runs differ only after this point, so the
/// state is computed once and cloned per p.
pub struct Pipeline {
    pub a_exact: BigRational,
    pub t: usize,
    pub space: usize,
    pub u_tilde: StateVector,
}

pub fn prepare_pipeline(
    spec: &MachineSpec,
    input: &str,
    clock: usize,
    space: usize,
) -> Result<Pipeline> {
    let cs = ConfigSpace::new(spec, input, space)?;
    let mat = cs.build_matrix()?;
    let (a_exact, _) = final_distribution(&mat, clock)?;
    let k = compile(&cs, &mat, clock)?;
    let kp = lower(&k)?;
    let state = run_postselected_circuit(&kp)?;
    let u_tilde = extract_u_tilde(&state)?;
    Ok(Pipeline { a_exact, t: clock, space, u_tilde })
}

/// Applies the iteration operator `steps` times: each application keeps
/// the |0⟩ amplitude and doubles the |1⟩ amplitude relative to it,
/// taking ∝ (1/2+A, 1/2−A) to ∝ (1/2+A, 2^steps (1/2−A)).
pub fn iterate_u_p(u: &StateVector, steps: usize) -> Result<StateVector> {
    let op = iteration_operator()?;
    let mut state = u.clone();
    for _ in 0..steps {
        apply_embedded(&mut state, &op, &[0])?;
    }
    Ok(state)
}

/// One run of the sweep at parameter p.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub p: usize,
    pub p_plus: f64,
    pub p_minus: f64,
    pub log_survival: f64,
}

pub fn run_m_p(pipe: &Pipeline, p: usize) -> Result<RunOutcome> {
    assert!(p < pipe.t, "p ranges over 0..T");
    let state = iterate_u_p(&pipe.u_tilde, pipe.t - p)?;
    let (p_plus, p_minus) = measure_pm(&state);
    Ok(RunOutcome { p, p_plus, p_minus, log_survival: state.log_survival })
}

/// The full sweep: per-p outcomes, the counter value of the all-same
/// event that fires, and the normalized acceptance probability.
#[derive(Debug, Clone)]
pub struct DecisionTrace {
    pub a: BigRational,
    pub t: usize,
    pub runs: Vec<RunOutcome>,
    pub counter: i64,
    pub p_all_plus: f64,
    pub p_all_minus: f64,
    pub p_acc: f64,
    pub accepted: bool,
}

impl DecisionTrace {
    /// The normative one-line report.
    pub fn report_line(&self) -> String {
        format!(
            "A={} T={} C={} P_allplus={} P_allminus={} p_acc={} verdict={}",
            fmt_rational(&self.a),
            self.t,
            self.counter,
            fmt_sig(self.p_all_plus),
            fmt_sig(self.p_all_minus),
            fmt_sig(self.p_acc),
            if self.accepted { "accept" } else { "reject" }
        )
    }
}

/// Runs M[p] for every p in {0..T−1}, computes the exact probabilities
/// of the all-plus and all-minus counter events, and decides by their
/// normalized ratio. Acceptance means the counter reached −T on the
/// all-minus event; rejection means +T.
pub fn overall_decide(
    spec: &MachineSpec,
    input: &str,
    clock: usize,
    space: usize,
) -> Result<DecisionTrace> {
    let pipe = prepare_pipeline(spec, input, clock, space)?;
    if is_degenerate(&pipe.a_exact) {
        return Err(Error::DegenerateAcceptance);
    }
    let runs: Vec<RunOutcome> = (0..clock).map(|p| run_m_p(&pipe, p)).collect::<Result<_>>()?;
    let p_all_plus: f64 = runs.iter().map(|r| r.p_plus).product();
    let p_all_minus: f64 = runs.iter().map(|r| r.p_minus).product();
    let p_acc = p_all_minus / (p_all_minus + p_all_plus);
    let accepted = p_acc > 0.5;
    let counter = if accepted { -(clock as i64) } else { clock as i64 };
    let should_accept = pipe.a_exact > rat(1, 2);
    assert_eq!(
        accepted, should_accept,
        "verdict contradicts the exact acceptance probability {}",
        fmt_rational(&pipe.a_exact)
    );
    let error = if accepted { 1.0 - p_acc } else { p_acc };
    assert!(error <= 0.3, "normalized error {error} exceeds 3/10");
    Ok(DecisionTrace {
        a: pipe.a_exact,
        t: clock,
        runs,
        counter,
        p_all_plus,
        p_all_minus,
        p_acc,
        accepted,
    })
}

/// The geometry behind the 3/10 bound, checked exactly.
#[derive(Debug, Clone)]
pub struct YBounds {
    /// |⟨y|+⟩|² for y ∝ (1/2, 2).
    pub y_plus: f64,
    /// |⟨y′|−⟩|² for y′ ∝ (1/2, −2).
    pub y_prime_minus: f64,
    pub scan_t_max: usize,
    pub scan_points: usize,
    /// Smallest correct-side probability seen at the witness p.
    pub min_correct_side: BigRational,
    /// Every scanned A′ admitted a p with the stretched component in
    /// [1,2] (A < 1/2) or [−2,−1] (A > 1/2).
    pub all_covered: bool,
}

fn pm_probabilities_exact(u0: &BigRational, u1: &BigRational) -> (BigRational, BigRational) {
    let norm2 = u0 * u0 + u1 * u1;
    let two = BigRational::from_integer(BigInt::from(2));
    let plus = (u0 + u1) * (u0 + u1) / (&two * &norm2);
    let minus = (u0 - u1) * (u0 - u1) / (two * norm2);
    (plus, minus)
}

/// Verifies the boundary-state overlaps and exhaustively scans every
/// dyadic acceptance probability A′/2^T with A′ ≠ 2^{T−1} up to
/// `t_max`, confirming some p lands the stretched state in the sandwich
/// where its correct-side measurement probability is at least 25/34.
pub fn verify_y_bounds(t_max: usize) -> YBounds {
    let s = 2.0 / 17.0f64.sqrt();
    let y = (0.5 * s, 2.0 * s);
    let y_plus = (y.0 + y.1) * (y.0 + y.1) / 2.0;
    let yp = (0.5 * s, -2.0 * s);
    let y_prime_minus = (yp.0 - yp.1) * (yp.0 - yp.1) / 2.0;
    let threshold = rat(25, 34);
    let mut scan_points = 0usize;
    let mut all_covered = true;
    let mut min_correct: Option<BigRational> = None;
    for t in 1..=t_max {
        let pow_t = BigInt::from(1) << t;
        let half = BigInt::from(1) << (t - 1);
        for a_prime_int in 0..=(1u64 << t) {
            let a_prime = BigInt::from(a_prime_int);
            if a_prime == half {
                continue;
            }
            scan_points += 1;
            let a = BigRational::new(a_prime.clone(), pow_t.clone());
            let u0 = rat(1, 2) + &a;
            let accept_side = a > rat(1, 2);
            let mut found = false;
            for p in 0..t {
                // Stretched second component (2^T − 2A′) / 2^{p+1}.
                let u1 = BigRational::new(
                    &pow_t - BigInt::from(2) * &a_prime,
                    BigInt::from(1) << (p + 1),
                );
                let in_window = if accept_side {
                    u1 >= rat(-2, 1) && u1 <= rat(-1, 1)
                } else {
                    u1 >= rat(1, 1) && u1 <= rat(2, 1)
                };
                if !in_window {
                    continue;
                }
                found = true;
                // Quadrant law: the stretched state sits on the side
                // whose measurement we are counting.
                assert_eq!(u1.is_negative(), accept_side, "sign of the stretched component");
                let (plus, minus) = pm_probabilities_exact(&u0, &u1);
                let correct = if accept_side { minus } else { plus };
                assert!(
                    correct >= threshold,
                    "A'={a_prime_int}, T={t}, p={p}: correct-side probability below 25/34"
                );
                min_correct = Some(match min_correct.take() {
                    Some(m) if m <= correct => m,
                    _ => correct,
                });
            }
            if !found {
                all_covered = false;
            }
        }
    }
    YBounds {
        y_plus,
        y_prime_minus,
        scan_t_max: t_max,
        scan_points,
        min_correct_side: min_correct.unwrap_or_else(BigRational::zero),
        all_covered,
    }
}

/// Guard for the equality recognizer's promise: the machine accepts
/// with probability exactly 1/2, or at distance at least 2^{-T} from it.
pub fn check_coeq_promise(a: &BigRational, clock: usize) -> Result<()> {
    let gap = (a - rat(1, 2)).abs();
    if gap.is_zero() {
        return Ok(());
    }
    let bound = BigRational::new(BigInt::one(), BigInt::from(1) << clock);
    if gap < bound {
        return Err(Error::PromiseViolated(format!(
            "acceptance probability {} lies strictly inside (1/2 - 2^-{clock}, 1/2 + 2^-{clock})",
            fmt_rational(a)
        )));
    }
    Ok(())
}

/// Result of the equality recognizer.
#[derive(Debug, Clone)]
pub struct CoeqOutcome {
    pub a: BigRational,
    pub t: usize,
    pub p_acc: f64,
    pub p_rej: f64,
    pub log_survival: f64,
}

impl CoeqOutcome {
    pub fn report_line(&self) -> String {
        format!(
            "A={} T={} p_acc={} p_rej={}",
            fmt_rational(&self.a),
            self.t,
            fmt_sig(self.p_acc),
            fmt_sig(self.p_rej)
        )
    }
}

/// Decides whether A ≠ 1/2 under the promise: maps the decision state
/// ∝ (1/2+A, 1/2−A) through [[0, −2], [2^{-T}, 2^{-T}]] to
/// ∝ (2A−1, 2^{-T}), measures the computational basis, and accepts on
/// |0⟩. A = 1/2 accepts with probability zero; promise-respecting
/// machines with A ≠ 1/2 accept with probability at least 4/5.
pub fn coeq_recognize(
    spec: &MachineSpec,
    input: &str,
    clock: usize,
    space: usize,
) -> Result<CoeqOutcome> {
    let pipe = prepare_pipeline(spec, input, clock, space)?;
    check_coeq_promise(&pipe.a_exact, clock)?;
    let scale = 0.5f64.powi(clock as i32);
    let r = embed_nonunitary(&[[0.0, -2.0], [scale, scale]])?;
    let mut state = pipe.u_tilde.clone();
    apply_embedded(&mut state, &r, &[0])?;
    let p_acc = state.amplitude(0).norm_sqr();
    let p_rej = state.amplitude(1).norm_sqr();
    Ok(CoeqOutcome {
        a: pipe.a_exact,
        t: clock,
        p_acc,
        p_rej,
        log_survival: state.log_survival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use num_traits::ToPrimitive;

    fn entry(name: &str) -> corpus::CorpusEntry {
        corpus::canonical_corpus()
            .into_iter()
            .find(|e| e.name == name)
            .unwrap_or_else(|| panic!("{name} not in corpus"))
    }

    fn pipeline(name: &str) -> Pipeline {
        let e = entry(name);
        prepare_pipeline(&e.spec, e.input, e.clock, e.space).unwrap()
    }

    #[test]
    fn zero_steps_leave_the_state_alone() {
        let pipe = pipeline("d1");
        let it = iterate_u_p(&pipe.u_tilde, 0).unwrap();
        assert_eq!(it.amps, pipe.u_tilde.amps);
        assert_eq!(it.log_survival, pipe.u_tilde.log_survival);
    }

    #[test]
    fn one_step_doubles_the_second_component() {
        // A = 0: u ∝ (1/2, 1/2); one step gives ∝ (1/2, 1) exactly.
        let pipe = pipeline("tape-flip-b");
        assert!(pipe.a_exact.is_zero());
        let it = iterate_u_p(&pipe.u_tilde, 1).unwrap();
        let ratio = it.amplitude(1).re / it.amplitude(0).re;
        assert!((ratio - 2.0).abs() < 1e-8, "ratio {ratio}");
    }

    #[test]
    fn d1_run_at_p_zero_measures_81_82_minus() {
        let pipe = pipeline("d1");
        let run = run_m_p(&pipe, 0).unwrap();
        assert!((run.p_minus - 81.0 / 82.0).abs() < 1e-8, "P' {}", run.p_minus);
        assert!(
            run.p_minus / run.p_plus >= 7.0 / 3.0,
            "correct side dominates by at least 7/3"
        );
    }

    #[test]
    fn closed_form_ratio_holds_for_every_p() {
        for name in ["d1", "tape-flip-a", "bin-lt-5-8", "canon-coin-once"] {
            let pipe = pipeline(name);
            let a = pipe.a_exact.to_f64().unwrap();
            for p in 0..pipe.t {
                let it = iterate_u_p(&pipe.u_tilde, pipe.t - p).unwrap();
                let have = it.amplitude(1).re / it.amplitude(0).re;
                let want = 2.0f64.powi((pipe.t - p) as i32) * (0.5 - a) / (0.5 + a);
                assert!(
                    (have - want).abs() <= 1e-8 * want.abs().max(1.0),
                    "{name}, p={p}: ratio {have}, closed form {want}"
                );
            }
        }
    }

    #[test]
    fn decide_accepts_d1_and_reports_the_normative_line() {
        let e = entry("d1");
        let trace = overall_decide(&e.spec, e.input, e.clock, e.space).unwrap();
        assert!(trace.accepted);
        assert!(trace.p_acc >= 0.7, "p_acc {}", trace.p_acc);
        assert_eq!(trace.counter, -2);
        let line = trace.report_line();
        assert!(line.starts_with("A=3/4 T=2 C=-2 "), "{line}");
        assert!(line.ends_with("verdict=accept"), "{line}");
        assert_eq!(line, trace.report_line(), "report is stable");
    }

    #[test]
    fn decide_rejects_below_half() {
        let e = entry("bin-lt-1-8");
        let trace = overall_decide(&e.spec, e.input, e.clock, e.space).unwrap();
        assert!(!trace.accepted);
        assert!(trace.p_acc <= 0.3, "p_acc {}", trace.p_acc);
        assert_eq!(trace.counter, e.clock as i64);
        assert!(trace.report_line().ends_with("verdict=reject"));
    }

    #[test]
    fn certain_acceptance_stays_in_the_fourth_quadrant() {
        let pipe = pipeline("canon-det-acc");
        assert!(pipe.a_exact.is_one());
        for p in 0..pipe.t {
            let it = iterate_u_p(&pipe.u_tilde, pipe.t - p).unwrap();
            assert!(it.amplitude(0).re > 0.0 && it.amplitude(1).re < 0.0, "p={p}");
            let run = run_m_p(&pipe, p).unwrap();
            assert!(run.p_minus > run.p_plus, "p={p}: minus side dominates");
        }
        let e = entry("canon-det-acc");
        let trace = overall_decide(&e.spec, e.input, e.clock, e.space).unwrap();
        assert!(trace.accepted && trace.p_acc >= 0.7);
    }

    #[test]
    fn half_acceptance_is_refused() {
        let e = entry("canon-coin-once");
        let err = overall_decide(&e.spec, e.input, e.clock, e.space).unwrap_err();
        assert!(matches!(err, Error::DegenerateAcceptance), "{err}");
    }

    #[test]
    fn y_bounds_hold_exactly() {
        let b = verify_y_bounds(6);
        assert!((b.y_plus - 25.0 / 34.0).abs() < 1e-12, "y_plus {}", b.y_plus);
        assert!((b.y_prime_minus - 25.0 / 34.0).abs() < 1e-12);
        assert!(b.y_plus > 0.7, "25/34 beats the 7/10 threshold");
        assert!(b.all_covered, "every A' admits a witness p");
        assert_eq!(b.scan_points, 126, "2^t values per clock, t = 1..6");
        assert_eq!(b.min_correct_side, rat(25, 34), "the bound is tight at (1/2, 2)");
    }

    #[test]
    fn coeq_rejects_the_fair_coin_outright() {
        let e = entry("canon-coin-once");
        let out = coeq_recognize(&e.spec, e.input, e.clock, e.space).unwrap();
        assert!(out.p_acc <= 1e-12, "p_acc {}", out.p_acc);
        assert!((out.p_rej - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn coeq_boundary_member_accepts_at_four_fifths() {
        // A = 5/8 = 1/2 + 2^{-3} at T = 3: amplitudes (2·2^{-3}, 2^{-3}).
        let e = entry("bin-lt-5-8");
        let out = coeq_recognize(&e.spec, e.input, e.clock, e.space).unwrap();
        assert!((out.p_acc - 0.8).abs() < 1e-8, "p_acc {}", out.p_acc);
        let line = out.report_line();
        assert!(line.starts_with("A=5/8 T=3 "), "{line}");
    }

    #[test]
    fn coeq_closed_form_across_members() {
        for name in ["bin-lt-1-8", "bin-lt-47-64", "canon-det-acc", "tape-flip-b"] {
            let e = entry(name);
            let out = coeq_recognize(&e.spec, e.input, e.clock, e.space).unwrap();
            let a = out.a.to_f64().unwrap();
            let num = (2.0 * a - 1.0) * (2.0 * a - 1.0);
            let want = num / (num + 0.25f64.powi(e.clock as i32));
            assert!((out.p_acc - want).abs() < 1e-8, "{name}: p_acc {}", out.p_acc);
            assert!(out.p_acc >= 0.8, "{name}: members accept with at least 4/5");
        }
    }

    #[test]
    fn promise_band_is_enforced() {
        assert!(check_coeq_promise(&rat(1, 2), 3).is_ok());
        assert!(check_coeq_promise(&rat(5, 8), 3).is_ok());
        assert!(check_coeq_promise(&rat(1, 8), 3).is_ok());
        let err = check_coeq_promise(&rat(17, 32), 3).unwrap_err();
        assert!(matches!(err, Error::PromiseViolated(ref m) if m.contains("17/32")), "{err}");
    }
}
