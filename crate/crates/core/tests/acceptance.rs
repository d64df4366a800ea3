//! Acceptance gate for the whole pipeline, one test per criterion:
//!
//!   1. exact agreement between the exhaustive machine oracle and the
//!      configuration-matrix path over the full canonical corpus;
//!   2. exact circuit fidelity, direct and lowered, including every
//!      per-block register marginal;
//!   3. soundness of every unitary embedding the corpus circuits use,
//!      plus the two displayed coin postselection identities;
//!   4. coherence of the quantum run: register amplitudes proportional
//!      to the classical trajectory, and the extracted decision state's
//!      amplitude ratio;
//!   5. the 25/34 correct-side measurement bound, reproduced and scanned
//!      exhaustively;
//!   6. the amplified decision procedure: correct verdicts, bounded
//!      normalized error, and the 7/3 product-ratio margin;
//!   7. the exact-half recognizer: sure rejection at A = 1/2, acceptance
//!      probability at least 4/5 elsewhere;
//!   8. the machine transformations: exact balance preservation, exact
//!      restart limits, and zero-error support equivalence;
//!   9. byte-identical reports from repeated decide runs.
//!
//! Each test ends with one `criterion N PASS` line (visible under
//! `--nocapture`); a failure names its criterion in the panic message.
//! All tolerances are pinned here.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_traits::{ToPrimitive, Zero};

use postsim::amplify::{coeq_recognize, overall_decide, verify_y_bounds};
use postsim::circuit::{
    compile, lower, register_marginal, simulate, simulate_with, wire_marginal, Gate, Marker,
    ProbCircuit, REGISTER_BASE,
};
use postsim::config::{final_distribution, ConfigSpace};
use postsim::construct::{
    combine_ntms_zero_error, postptm_to_ntm, postselect_to_restart, postselect_to_unbounded,
    restart_semantics_exact,
};
use postsim::corpus::{canonical_corpus, ntm_all_b, ntm_contains_a, post_18_38, post_coin};
use postsim::machine::{postselect_normalize, rat, run_exhaustive};
use postsim::quantum::{
    coin_unitary, embed_det_table, embed_gate, extract_u_tilde, run_postselected_circuit,
    run_postselected_with,
};

/// Maximum unitarity defect of any embedding (criterion 3).
const EPS_UNITARY: f64 = 1e-10;
/// Maximum deviation of a postselected action from its source (criterion 3).
const EPS_ACTION: f64 = 1e-10;
/// Tolerance for the displayed coin identities (criterion 3) and for the
/// bound reproduction (criterion 5).
const EPS_DISPLAY: f64 = 1e-12;
/// Per-entry relative tolerance for coherent amplitudes (criterion 4).
const EPS_COHERENCE: f64 = 1e-8;
/// Residual accept mass allowed at A = 1/2 (criterion 7).
const EPS_SURE_REJECT: f64 = 1e-12;

fn corpus_pipeline(
    e: &postsim::corpus::CorpusEntry,
) -> (ConfigSpace<'_>, postsim::config::ConfigMatrix, ProbCircuit) {
    let cs = ConfigSpace::new(&e.spec, e.input, e.space).expect("configuration space");
    let mat = cs.build_matrix().expect("configuration matrix");
    let k = compile(&cs, &mat, e.clock).expect("compile");
    (cs, mat, k)
}

#[test]
fn criterion_1_oracle_matrix_agreement() {
    let started = Instant::now();
    let corpus = canonical_corpus();
    assert!(
        corpus.len() >= 10,
        "criterion 1: corpus must hold at least 10 canonical machines, found {}",
        corpus.len()
    );
    for e in &corpus {
        assert!(e.clock <= 6, "criterion 1: {} exceeds the desk clock", e.name);
        let cs = ConfigSpace::new(&e.spec, e.input, e.space).expect("configuration space");
        assert!(
            cs.n_configs <= 5000,
            "criterion 1: {} has {} configurations, above the desk cap",
            e.name,
            cs.n_configs
        );
        let mat = cs.build_matrix().expect("configuration matrix");
        let (a, r) = final_distribution(&mat, e.clock).expect("final distribution");
        let d = run_exhaustive(&e.spec, e.input, e.clock).expect("exhaustive run");
        assert_eq!(a, d.p_acc, "criterion 1: {}: matrix acceptance vs oracle", e.name);
        assert_eq!(r, d.p_rej, "criterion 1: {}: matrix rejection vs oracle", e.name);
        assert_eq!(a, e.expected_a, "criterion 1: {}: frozen acceptance", e.name);
        assert!(
            d.p_npost.is_zero() && d.p_nonhalt.is_zero(),
            "criterion 1: {}: canonical machines leave no stray mass",
            e.name
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 1: runtime {elapsed:.2}s exceeds 10s");
    println!(
        "criterion 1 PASS: oracle and matrix agree exactly on {} machines in {elapsed:.2}s",
        corpus.len()
    );
}

#[test]
fn criterion_2_circuit_fidelity() {
    let corpus = canonical_corpus();
    for e in &corpus {
        let (cs, mat, k) = corpus_pipeline(e);
        let kp = lower(&k).expect("lowering");
        let direct = wire_marginal(&simulate(&k), 0);
        let lowered = wire_marginal(&simulate(&kp), 0);
        assert_eq!(direct, e.expected_a, "criterion 2: {}: direct circuit acceptance", e.name);
        assert_eq!(lowered, e.expected_a, "criterion 2: {}: lowered circuit acceptance", e.name);

        let traj = mat.iterate(e.clock);
        simulate_with(&k, &vec![false; k.width], |marker, dist| {
            let step = match marker {
                Marker::Block(i) => i - 1,
                Marker::Decision => e.clock,
                Marker::Part(_) => return,
            };
            let marg = register_marginal(dist, cs.l);
            for (bits, p) in &marg {
                let idx = cs.index(&cs.decode_bits(bits).expect("register decodes"));
                assert_eq!(
                    p, &traj[step][idx],
                    "criterion 2: {}: register mass at step {step}, configuration {idx}",
                    e.name
                );
            }
            let live = traj[step].iter().filter(|p| !p.is_zero()).count();
            assert_eq!(
                marg.len(),
                live,
                "criterion 2: {}: stray register mass at step {step}",
                e.name
            );
        });
    }
    println!(
        "criterion 2 PASS: circuit acceptance and every block marginal exact on {} machines",
        corpus.len()
    );
}

#[test]
fn criterion_3_embedding_soundness() {
    // Every distinct deterministic table the lowered corpus circuits use,
    // plus the coin and both resets.
    let mut tables: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut reset_values: BTreeSet<bool> = BTreeSet::new();
    let mut coin_used = false;
    for e in &canonical_corpus() {
        let (_, _, k) = corpus_pipeline(e);
        let kp = lower(&k).expect("lowering");
        for g in &kp.gates {
            match g {
                Gate::Det { table, .. } => {
                    tables.insert(table.clone());
                }
                Gate::Reset { value, .. } => {
                    reset_values.insert(*value);
                }
                Gate::Coin { .. } => coin_used = true,
            }
        }
    }
    assert!(coin_used, "criterion 3: corpus circuits must use the coin");

    let mut checked = 0usize;
    let mut check = |g: &postsim::quantum::EmbeddedGate, source: &[Vec<f64>], what: &str| {
        assert!(
            g.unitarity_defect() <= EPS_UNITARY,
            "criterion 3: {what}: unitarity defect {}",
            g.unitarity_defect()
        );
        let e = g.e();
        for (i, row) in source.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                let have = g.matrix[i][j] * e;
                assert!(
                    (have - want).abs() <= EPS_ACTION,
                    "criterion 3: {what}: postselected entry ({i},{j}) is {have}, wants {want}"
                );
            }
        }
        checked += 1;
    };

    for table in &tables {
        let g = embed_det_table(table).expect("table embeds");
        let dim = table.len();
        let mut source = vec![vec![0.0; dim]; dim];
        for (v_in, &v_out) in table.iter().enumerate() {
            source[v_out as usize][v_in] = 1.0;
        }
        check(&g, &source, &format!("table {table:?}"));
    }
    for &value in &reset_values {
        let source = if value {
            vec![vec![0.0, 0.0], vec![1.0, 1.0]]
        } else {
            vec![vec![1.0, 1.0], vec![0.0, 0.0]]
        };
        let g = embed_gate(&source).expect("reset embeds");
        check(&g, &source, &format!("reset {value}"));
    }

    // The coin's two displayed identities: either basis input, with the
    // auxiliary postselected on 0, lands on (|0> + |1>)/sqrt(2) -- as
    // unnormalized top-block coefficients, exactly (1/2, 1/2).
    let coin = coin_unitary();
    assert!(coin.unitarity_defect() <= EPS_DISPLAY, "criterion 3: coin unitarity");
    for basis in 0..2 {
        let mut input = vec![0.0; 2];
        input[basis] = 1.0;
        let action = coin.postselected_action(&input);
        for (i, &have) in action.iter().enumerate() {
            assert!(
                (have - 0.5).abs() <= EPS_DISPLAY,
                "criterion 3: coin on |{basis}>: component {i} is {have}, wants 1/2"
            );
        }
    }
    println!(
        "criterion 3 PASS: {checked} embeddings sound to {EPS_UNITARY:e}, coin identities to {EPS_DISPLAY:e}"
    );
}

#[test]
fn criterion_4_coherence() {
    let corpus = canonical_corpus();
    let mut ratios_checked = 0usize;
    for e in &corpus {
        let (cs, mat, k) = corpus_pipeline(e);
        let kp = lower(&k).expect("lowering");
        let traj = mat.iterate(e.clock);
        run_postselected_with(&kp, |marker, st| {
            let step = match marker {
                Marker::Block(i) => i - 1,
                Marker::Decision => e.clock,
                Marker::Part(_) => return,
            };
            let total: f64 = st.amps.values().map(|a| a.re).sum();
            assert!(total > 0.0, "criterion 4: {}: vanished amplitude mass", e.name);
            let mut by_config: BTreeMap<usize, f64> = BTreeMap::new();
            for (key, amp) in &st.amps {
                assert!(
                    amp.im.abs() <= EPS_DISPLAY,
                    "criterion 4: {}: amplitudes stay real, found {amp}",
                    e.name
                );
                let bits: Vec<bool> =
                    (0..cs.l).map(|i| key >> (REGISTER_BASE + i) & 1 == 1).collect();
                let idx = cs.index(&cs.decode_bits(&bits).expect("register decodes"));
                *by_config.entry(idx).or_insert(0.0) += amp.re;
            }
            for (idx, share) in &by_config {
                let want = traj[step][*idx].to_f64().expect("probability fits f64");
                assert!(
                    want > 0.0,
                    "criterion 4: {}: amplitude on dead configuration {idx} at step {step}",
                    e.name
                );
                let have = share / total;
                assert!(
                    (have - want).abs() <= EPS_COHERENCE * want,
                    "criterion 4: {}: configuration {idx} at step {step}: share {have}, wants {want}",
                    e.name
                );
            }
            let live = traj[step].iter().filter(|p| !p.is_zero()).count();
            assert_eq!(
                by_config.len(),
                live,
                "criterion 4: {}: live configuration count at step {step}",
                e.name
            );
        })
        .expect("coherent run");

        if e.expected_a != rat(1, 2) {
            let st = run_postselected_circuit(&kp).expect("coherent run");
            let u = extract_u_tilde(&st).expect("decision state");
            let a0 = u.amplitude(0).re;
            let a1 = u.amplitude(1).re;
            let plus = rat(1, 2) + &e.expected_a;
            let minus = rat(1, 2) - &e.expected_a;
            let plus_f = plus.to_f64().unwrap();
            let minus_f = minus.to_f64().unwrap();
            // a0/a1 == (1/2+A)/(1/2-A), compared cross-multiplied so a
            // zero component (A = 0) stays well-defined.
            let lhs = a0 * minus_f;
            let rhs = a1 * plus_f;
            let scale = (a0.abs().max(a1.abs())) * plus_f.abs().max(minus_f.abs());
            assert!(
                (lhs - rhs).abs() <= EPS_COHERENCE * scale,
                "criterion 4: {}: decision amplitudes ({a0}, {a1}) vs ({plus_f}, {minus_f})",
                e.name
            );
            ratios_checked += 1;
        }
    }
    println!(
        "criterion 4 PASS: coherent amplitudes track the trajectory on {} machines, {ratios_checked} decision ratios",
        corpus.len()
    );
}

#[test]
fn criterion_5_bound_reproduction() {
    let b = verify_y_bounds(6);
    let bound = 25.0 / 34.0;
    assert!(
        (b.y_plus - bound).abs() <= EPS_DISPLAY,
        "criterion 5: y_plus {} is not 25/34",
        b.y_plus
    );
    assert!(
        (b.y_prime_minus - bound).abs() <= EPS_DISPLAY,
        "criterion 5: y_prime_minus {} is not 25/34",
        b.y_prime_minus
    );
    assert!(rat(25, 34) > rat(7, 10), "criterion 5: 25/34 must exceed 7/10");
    assert_eq!(
        b.min_correct_side,
        rat(25, 34),
        "criterion 5: scan must find the bound tight"
    );
    assert!(b.all_covered, "criterion 5: every scanned A' needs a witness p");
    assert_eq!(b.scan_points, 126, "criterion 5: exhaustive scan size");
    println!(
        "criterion 5 PASS: correct-side bound 25/34 reproduced to {EPS_DISPLAY:e} and tight over {} points",
        b.scan_points
    );
}

#[test]
fn criterion_6_decision_correctness() {
    let started = Instant::now();
    let corpus = canonical_corpus();
    let mut decided = 0usize;
    for e in &corpus {
        if e.expected_a == rat(1, 2) {
            continue;
        }
        let trace =
            overall_decide(&e.spec, e.input, e.clock, e.space).expect("decision procedure");
        let should_accept = e.expected_a > rat(1, 2);
        assert_eq!(
            trace.accepted, should_accept,
            "criterion 6: {}: verdict on A = {}",
            e.name, e.expected_a
        );
        let error = if trace.accepted { 1.0 - trace.p_acc } else { trace.p_acc };
        assert!(
            error <= 0.3,
            "criterion 6: {}: normalized error {error} exceeds 3/10",
            e.name
        );
        let (correct, wrong) = if should_accept {
            (trace.p_all_minus, trace.p_all_plus)
        } else {
            (trace.p_all_plus, trace.p_all_minus)
        };
        assert!(
            correct / wrong >= 7.0 / 3.0,
            "criterion 6: {}: correct-side product ratio {} below 7/3",
            e.name,
            correct / wrong
        );
        decided += 1;
    }
    assert!(decided >= 10, "criterion 6: too few decidable machines ({decided})");
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 6: runtime {elapsed:.2}s exceeds 60s");
    println!(
        "criterion 6 PASS: {decided} verdicts correct, error <= 3/10, ratio >= 7/3, in {elapsed:.2}s"
    );
}

#[test]
fn criterion_7_exact_half_recognizer() {
    let corpus = canonical_corpus();
    let mut members = 0usize;
    let mut non_members = 0usize;
    for e in &corpus {
        let out = coeq_recognize(&e.spec, e.input, e.clock, e.space).expect("recognizer");
        if e.expected_a == rat(1, 2) {
            assert!(
                out.p_acc <= EPS_SURE_REJECT,
                "criterion 7: {}: accept mass {} at A = 1/2",
                e.name,
                out.p_acc
            );
            non_members += 1;
        } else {
            assert!(
                out.p_acc >= 0.8 - EPS_SURE_REJECT,
                "criterion 7: {}: accept probability {} below 4/5",
                e.name,
                out.p_acc
            );
            members += 1;
        }
    }
    assert!(
        non_members >= 1 && members >= 1,
        "criterion 7: corpus must exercise both sides (members {members}, non-members {non_members})"
    );
    println!(
        "criterion 7 PASS: {non_members} sure rejections at A = 1/2, {members} members above 4/5"
    );
}

#[test]
fn criterion_8_machine_transformations() {
    // Balance preservation under the abandon-state fold, exact.
    for (spec, input) in [(post_coin(), "a"), (post_18_38(), "a")] {
        let before = run_exhaustive(&spec, input, 16).expect("source run");
        let folded = postselect_to_unbounded(&spec).expect("fold");
        let after = run_exhaustive(&folded, input, 16).expect("folded run");
        assert_eq!(
            &before.p_acc - &before.p_rej,
            &after.p_acc - &after.p_rej,
            "criterion 8: fold must preserve the acceptance balance exactly"
        );
        assert!(after.p_npost.is_zero(), "criterion 8: fold leaves no abandoned mass");
        assert_eq!(
            &after.p_acc + &after.p_rej,
            rat(1, 1),
            "criterion 8: folded machine halts absolutely"
        );
    }

    // Restart limiting acceptance equals postselected acceptance, exact.
    for (spec, input) in [(post_coin(), "a"), (post_18_38(), "a")] {
        let rm = postselect_to_restart(&spec).expect("restart wrap");
        let sem = restart_semantics_exact(&rm, input, 16).expect("restart semantics");
        let d = run_exhaustive(&spec, input, 16).expect("source run");
        let (acc, _) = postselect_normalize(&d).expect("normalize");
        assert_eq!(
            sem.limit_acc, acc,
            "criterion 8: restart limit must equal postselected acceptance exactly"
        );
    }

    // Zero-error support equivalence for the contains-an-a language.
    let inputs = ["", "a", "b", "ab", "ba", "bb", "aab", "bba"];
    let joined = combine_ntms_zero_error(&ntm_contains_a(), &ntm_all_b(), &inputs, 64)
        .expect("complement join");
    let rejoined_ntm = postptm_to_ntm(&joined).expect("support reread");
    for input in inputs {
        let member = input.contains('a');
        let d = run_exhaustive(&joined, input, 64).expect("joined run");
        let (acc, rej) = postselect_normalize(&d).expect("normalize");
        if member {
            assert_eq!(acc, rat(1, 1), "criterion 8: member {input:?} accepts surely");
        } else {
            assert_eq!(rej, rat(1, 1), "criterion 8: non-member {input:?} rejects surely");
        }
        let n = run_exhaustive(&rejoined_ntm, input, 64).expect("support run");
        assert_eq!(
            !n.p_acc.is_zero(),
            member,
            "criterion 8: nondeterministic support must equal membership on {input:?}"
        );
    }
    println!("criterion 8 PASS: balance exact, restart limits exact, support equivalence on {} inputs", inputs.len());
}

#[test]
fn criterion_9_report_determinism() {
    let exe = env!("CARGO_BIN_EXE_postsim");
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/d1.mach");
    let run = || {
        std::process::Command::new(exe)
            .args([
                "decide", fixture, "--input", "a", "--clock", "2", "--space", "1", "--sample",
                "2000", "--seed", "42",
            ])
            .output()
            .expect("decide run")
    };
    let first = run();
    let second = run();
    assert!(first.status.success(), "criterion 9: decide must succeed");
    assert!(second.status.success(), "criterion 9: decide must succeed twice");
    assert_eq!(first.stdout, second.stdout, "criterion 9: reports must be byte-identical");
    let report = String::from_utf8(first.stdout).expect("utf-8 report");
    assert!(report.contains("A=3/4"), "criterion 9: report embeds the exact A:\n{report}");
    assert!(report.contains("verdict=accept"), "criterion 9: verdict present:\n{report}");
    println!("criterion 9 PASS: repeated decide reports byte-identical ({} bytes)", report.len());
}
