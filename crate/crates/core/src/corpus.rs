//! Built-in machine corpus used by the test suites and the demo pipeline.
//!
//! Every machine here is small enough to brute-force: a handful of states,
//! clocks of at most six steps, work windows of one or two cells. The
//! canonical entries carry their exact acceptance probability, derived
//! once by hand from the coin tree and frozen here; the oracle, the
//! configuration matrix, the circuit simulator, and the quantum pipeline
//! must all reproduce these numbers independently.

use num_rational::BigRational;

use crate::canonical::canonicalize;
use crate::machine::{rat, MachineKind, MachineSpec, BLANK};

/// A canonical machine with its probed input, clock, space bound, and
/// hand-derived acceptance probability.
pub struct CorpusEntry {
    pub name: &'static str,
    pub spec: MachineSpec,
    pub input: &'static str,
    pub clock: usize,
    pub space: usize,
    pub expected_a: BigRational,
}

/// Canonical two-step machine: the first step writes the coin outcome to
/// the work tape, the second reads it back and accepts on 0, or flips
/// again on 1. Accepts with probability 3/4.
pub fn d1() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ptm,
        &["s0", "s1", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a'],
        &['0', '1'],
    );
    for sigma in ['a', BLANK] {
        for gamma in ['0', '1', BLANK] {
            m.add_split(
                "s0", sigma, gamma,
                ("s1", '0', 0, 0),
                ("s1", '1', 0, 0),
            );
            if gamma == '1' {
                m.add_split(
                    "s1", sigma, gamma,
                    ("acc", BLANK, 0, 0),
                    ("rej", BLANK, 0, 0),
                );
            } else {
                m.add_split(
                    "s1", sigma, gamma,
                    ("acc", BLANK, 0, 0),
                    ("acc", BLANK, 0, 0),
                );
            }
        }
    }
    m
}

/// One-step deterministic acceptor; halts clean but never splits.
pub fn det_acc() -> MachineSpec {
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
    for sigma in ['a', BLANK] {
        m.add_det("s0", sigma, BLANK, "acc", BLANK, 0, 0);
    }
    m
}

/// One-step deterministic rejector.
pub fn det_rej() -> MachineSpec {
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
    for sigma in ['a', BLANK] {
        m.add_det("s0", sigma, BLANK, "rej", BLANK, 0, 0);
    }
    m
}

/// Single fair coin: accept on heads, reject on tails. Canonical at
/// clock 1 with the degenerate acceptance probability 1/2.
pub fn coin_once() -> MachineSpec {
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
    for sigma in ['a', BLANK] {
        m.add_split("s0", sigma, BLANK, ("acc", BLANK, 0, 0), ("rej", BLANK, 0, 0));
    }
    m
}

/// Accepts in one step but leaves a 1 on the work tape: a clean target
/// for the cleanup sweep of the canonicalizer.
pub fn messy() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Dtm,
        &["s0", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a'],
        &['1'],
    );
    for sigma in ['a', BLANK] {
        for gamma in ['1', BLANK] {
            m.add_det("s0", sigma, gamma, "acc", '1', 0, 0);
        }
    }
    m
}

/// Walks one cell right and accepts iff it reads an `a` there; the final
/// move walks the input head back home, so it halts already parked.
pub fn stepper() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Dtm,
        &["s0", "s1", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a', 'b'],
        &[],
    );
    for sigma in ['a', 'b', BLANK] {
        m.add_det("s0", sigma, BLANK, "s1", BLANK, 1, 0);
        let target = if sigma == 'a' { "acc" } else { "rej" };
        m.add_det("s1", sigma, BLANK, target, BLANK, -1, 0);
    }
    m
}

/// Walks right and flips up to two coins, accepting with probability 3/4;
/// every halting configuration leaves the input head one or two cells from
/// home, so canonicalization must run its parking phase.
pub fn strider() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ptm,
        &["s0", "s1", "s2", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a'],
        &[],
    );
    for sigma in ['a', BLANK] {
        m.add_det("s0", sigma, BLANK, "s1", BLANK, 1, 0);
        m.add_split("s1", sigma, BLANK, ("acc", BLANK, 1, 0), ("s2", BLANK, 0, 0));
        m.add_split("s2", sigma, BLANK, ("acc", BLANK, 0, 0), ("rej", BLANK, 0, 0));
    }
    m
}

/// Deterministic self-loop; never halts.
pub fn loop_forever() -> MachineSpec {
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
    for sigma in ['a', BLANK] {
        m.add_det("s0", sigma, BLANK, "s0", BLANK, 0, 0);
    }
    m
}

/// Canonical four-step machine that reads its input: step 1 writes coin
/// c1, step 2 reads the input symbol under the moved head and decides
/// `x = a and (c1 or c2)`, steps 3-4 idle. Accepts "a" with probability
/// 3/4 and "b" with probability 0.
pub fn tape_flip() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ptm,
        &["s0", "s1", "p0", "p1", "q0", "q1", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a', 'b'],
        &['0', '1'],
    );
    for sigma in ['a', 'b', BLANK] {
        for gamma in ['0', '1', BLANK] {
            m.add_split(
                "s0", sigma, gamma,
                ("s1", '0', 1, 0),
                ("s1", '1', 1, 0),
            );
            let c1 = gamma == '1';
            let heads = if sigma == 'a' && c1 { "p1" } else { "p0" };
            let tails = if sigma == 'a' { "p1" } else { "p0" };
            m.add_split(
                "s1", sigma, gamma,
                (heads, BLANK, -1, 0),
                (tails, BLANK, -1, 0),
            );
            m.add_split("p0", sigma, gamma, ("q0", BLANK, 0, 0), ("q0", BLANK, 0, 0));
            m.add_split("p1", sigma, gamma, ("q1", BLANK, 0, 0), ("q1", BLANK, 0, 0));
            m.add_split("q0", sigma, gamma, ("rej", BLANK, 0, 0), ("rej", BLANK, 0, 0));
            m.add_split("q1", sigma, gamma, ("acc", BLANK, 0, 0), ("acc", BLANK, 0, 0));
        }
    }
    m
}

/// Canonical six-step machine over a two-cell work window: writes coins
/// to cells 0 and 1, walks back erasing both, and accepts iff both coins
/// came up 1. Accepts with probability 1/4.
pub fn walker() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ptm,
        &["s0", "s1", "s2", "t0", "t1", "p0", "p1", "q0", "q1", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a'],
        &['0', '1'],
    );
    for sigma in ['a', BLANK] {
        for gamma in ['0', '1', BLANK] {
            m.add_split(
                "s0", sigma, gamma,
                ("s1", '0', 0, 1),
                ("s1", '1', 0, 1),
            );
            m.add_split(
                "s1", sigma, gamma,
                ("s2", '0', 0, 0),
                ("s2", '1', 0, 0),
            );
            // Read coin c2 at cell 1, erase it, walk left.
            let t = if gamma == '1' { "t1" } else { "t0" };
            m.add_split("s2", sigma, gamma, (t, BLANK, 0, -1), (t, BLANK, 0, -1));
            // Read coin c1 at cell 0, erase it; accept iff c1 and c2.
            let c1 = gamma == '1';
            let p_from_t0 = "p0";
            let p_from_t1 = if c1 { "p1" } else { "p0" };
            m.add_split("t0", sigma, gamma, (p_from_t0, BLANK, 0, 0), (p_from_t0, BLANK, 0, 0));
            m.add_split("t1", sigma, gamma, (p_from_t1, BLANK, 0, 0), (p_from_t1, BLANK, 0, 0));
            m.add_split("p0", sigma, gamma, ("q0", BLANK, 0, 0), ("q0", BLANK, 0, 0));
            m.add_split("p1", sigma, gamma, ("q1", BLANK, 0, 0), ("q1", BLANK, 0, 0));
            m.add_split("q0", sigma, gamma, ("rej", BLANK, 0, 0), ("rej", BLANK, 0, 0));
            m.add_split("q1", sigma, gamma, ("acc", BLANK, 0, 0), ("acc", BLANK, 0, 0));
        }
    }
    m
}

/// Canonical `clock`-step machine accepting iff the coin string, read as a
/// big-endian `clock`-bit number, is strictly below `a_prime`. Its
/// acceptance probability is therefore exactly `a_prime / 2^clock`, which
/// makes it a generator for arbitrary dyadic acceptance values.
pub fn bin_lt(a_prime: u64, clock: u32) -> MachineSpec {
    assert!(clock >= 1 && clock <= 20, "clock out of range");
    assert!(a_prime <= 1 << clock, "threshold must fit in clock bits");
    let t = clock as usize;
    let mut names: Vec<String> = Vec::new();
    for i in 0..t {
        names.push(format!("cmp{i}"));
    }
    for i in 1..t {
        names.push(format!("lt{i}"));
        names.push(format!("ge{i}"));
    }
    names.push("acc".into());
    names.push("rej".into());
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut m = MachineSpec::new(
        MachineKind::Ptm,
        &refs,
        "cmp0",
        "acc",
        "rej",
        None,
        &['a'],
        &[],
    );
    let lt = |i: usize| if i == t { "acc".to_string() } else { format!("lt{i}") };
    let ge = |i: usize| if i == t { "rej".to_string() } else { format!("ge{i}") };
    let cmp = |i: usize| if i == t { "rej".to_string() } else { format!("cmp{i}") };
    for sigma in ['a', BLANK] {
        for i in 0..t {
            let from = format!("cmp{i}");
            let (heads, tails) = if a_prime == 1 << clock {
                (lt(i + 1), lt(i + 1))
            } else {
                let bit = (a_prime >> (clock - 1 - i as u32)) & 1;
                if bit == 1 {
                    // Coin 0 beats a 1 bit; coin 1 ties and keeps comparing.
                    (lt(i + 1), cmp(i + 1))
                } else {
                    // Coin 0 ties; coin 1 overshoots for good.
                    (cmp(i + 1), ge(i + 1))
                }
            };
            m.add_split(
                &from, sigma, BLANK,
                (&heads, BLANK, 0, 0),
                (&tails, BLANK, 0, 0),
            );
        }
        for i in 1..t {
            let a = lt(i + 1);
            let b = ge(i + 1);
            m.add_split(&format!("lt{i}"), sigma, BLANK, (&a, BLANK, 0, 0), (&a, BLANK, 0, 0));
            m.add_split(&format!("ge{i}"), sigma, BLANK, (&b, BLANK, 0, 0), (&b, BLANK, 0, 0));
        }
    }
    m
}

/// Coin machine with postselection: heads accepts, tails lands in the
/// non-postselected state. Conditioned on staying postselected it accepts
/// with probability 1.
pub fn post_coin() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::PostPtm,
        &["s0", "acc", "rej", "np"],
        "s0",
        "acc",
        "rej",
        Some("np"),
        &['a'],
        &[],
    );
    for sigma in ['a', BLANK] {
        m.add_split("s0", sigma, BLANK, ("acc", BLANK, 0, 0), ("np", BLANK, 0, 0));
    }
    m
}

/// Three-coin machine halting at step 3 on every path: accepts on HHH
/// (1/8), rejects on HHT, HTH, HTT (3/8), and abandons the run on tails
/// first (1/2). Conditioned acceptance 1/4, expected episode length 3.
pub fn post_18_38() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::PostPtm,
        &["s0", "h", "t", "hh", "ht", "tt", "acc", "rej", "np"],
        "s0",
        "acc",
        "rej",
        Some("np"),
        &['a'],
        &[],
    );
    for sigma in ['a', BLANK] {
        m.add_split("s0", sigma, BLANK, ("h", BLANK, 0, 0), ("t", BLANK, 0, 0));
        m.add_split("h", sigma, BLANK, ("hh", BLANK, 0, 0), ("ht", BLANK, 0, 0));
        m.add_det("t", sigma, BLANK, "tt", BLANK, 0, 0);
        m.add_split("hh", sigma, BLANK, ("acc", BLANK, 0, 0), ("rej", BLANK, 0, 0));
        m.add_det("ht", sigma, BLANK, "rej", BLANK, 0, 0);
        m.add_det("tt", sigma, BLANK, "np", BLANK, 0, 0);
    }
    m
}

/// Nondeterministic scanner accepting iff the input contains an `a`: on
/// each `a` it guesses whether to commit. Accepting paths exist exactly
/// for members.
pub fn ntm_contains_a() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ntm,
        &["st", "s0", "acc", "rej"],
        "st",
        "acc",
        "rej",
        None,
        &['a', 'b'],
        &[],
    );
    for sigma in ['a', 'b', BLANK] {
        m.add_det("st", sigma, BLANK, "s0", BLANK, 1, 0);
    }
    m.add_rule("s0", 'a', BLANK, "acc", BLANK, 0, 0, rat(1, 2));
    m.add_rule("s0", 'a', BLANK, "s0", BLANK, 1, 0, rat(1, 2));
    m.add_det("s0", 'b', BLANK, "s0", BLANK, 1, 0);
    m.add_det("s0", BLANK, BLANK, "rej", BLANK, 0, 0);
    m
}

/// Deterministic scanner accepting iff the input is all `b`s.
pub fn ntm_all_b() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ntm,
        &["st", "s0", "acc", "rej"],
        "st",
        "acc",
        "rej",
        None,
        &['a', 'b'],
        &[],
    );
    for sigma in ['a', 'b', BLANK] {
        m.add_det("st", sigma, BLANK, "s0", BLANK, 1, 0);
    }
    m.add_det("s0", 'a', BLANK, "rej", BLANK, 0, 0);
    m.add_det("s0", 'b', BLANK, "s0", BLANK, 1, 0);
    m.add_det("s0", BLANK, BLANK, "acc", BLANK, 0, 0);
    m
}

/// Rational-branching machine: accepts with probability 1/3.
pub fn rational_third() -> MachineSpec {
    let mut m = MachineSpec::new(
        MachineKind::Ntm,
        &["s0", "acc", "rej"],
        "s0",
        "acc",
        "rej",
        None,
        &['a'],
        &[],
    );
    for sigma in ['a', BLANK] {
        m.add_rule("s0", sigma, BLANK, "acc", BLANK, 0, 0, rat(1, 3));
        m.add_rule("s0", sigma, BLANK, "rej", BLANK, 0, 0, rat(2, 3));
    }
    m
}

/// The canonical corpus: every entry passes `check_canonical` at its
/// clock, and its exact acceptance probability is frozen alongside it.
pub fn canonical_corpus() -> Vec<CorpusEntry> {
    let canon = |spec: &MachineSpec, input: &'static str, clock: usize, space: usize| {
        canonicalize(spec, input, clock, space)
            .unwrap_or_else(|e| panic!("corpus rebuild failed: {e}"))
    };
    vec![
        CorpusEntry {
            name: "d1",
            spec: d1(),
            input: "a",
            clock: 2,
            space: 1,
            expected_a: rat(3, 4),
        },
        CorpusEntry {
            name: "coin-once",
            spec: coin_once(),
            input: "a",
            clock: 1,
            space: 1,
            expected_a: rat(1, 2),
        },
        CorpusEntry {
            name: "tape-flip-a",
            spec: tape_flip(),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(3, 4),
        },
        CorpusEntry {
            name: "tape-flip-b",
            spec: tape_flip(),
            input: "b",
            clock: 4,
            space: 1,
            expected_a: rat(0, 1),
        },
        CorpusEntry {
            name: "walker",
            spec: walker(),
            input: "a",
            clock: 6,
            space: 2,
            expected_a: rat(1, 4),
        },
        CorpusEntry {
            name: "bin-lt-1-8",
            spec: bin_lt(1, 3),
            input: "a",
            clock: 3,
            space: 1,
            expected_a: rat(1, 8),
        },
        CorpusEntry {
            name: "bin-lt-5-8",
            spec: bin_lt(5, 3),
            input: "a",
            clock: 3,
            space: 1,
            expected_a: rat(5, 8),
        },
        CorpusEntry {
            name: "bin-lt-3-16",
            spec: bin_lt(3, 4),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(3, 16),
        },
        CorpusEntry {
            name: "bin-lt-11-16",
            spec: bin_lt(11, 4),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(11, 16),
        },
        CorpusEntry {
            name: "bin-lt-13-32",
            spec: bin_lt(13, 5),
            input: "a",
            clock: 5,
            space: 1,
            expected_a: rat(13, 32),
        },
        CorpusEntry {
            name: "bin-lt-47-64",
            spec: bin_lt(47, 6),
            input: "a",
            clock: 6,
            space: 1,
            expected_a: rat(47, 64),
        },
        CorpusEntry {
            name: "canon-det-acc",
            spec: canon(&det_acc(), "a", 4, 1),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(1, 1),
        },
        CorpusEntry {
            name: "canon-det-rej",
            spec: canon(&det_rej(), "a", 4, 1),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(0, 1),
        },
        CorpusEntry {
            name: "canon-messy",
            spec: canon(&messy(), "a", 4, 1),
            input: "a",
            clock: 4,
            space: 1,
            expected_a: rat(1, 1),
        },
        CorpusEntry {
            name: "canon-stepper-a",
            spec: canon(&stepper(), "a", 5, 1),
            input: "a",
            clock: 5,
            space: 1,
            expected_a: rat(1, 1),
        },
        CorpusEntry {
            name: "canon-coin-once",
            spec: canon(&coin_once(), "a", 3, 1),
            input: "a",
            clock: 3,
            space: 1,
            expected_a: rat(1, 2),
        },
        CorpusEntry {
            name: "canon-strider",
            spec: canon(&strider(), "a", 6, 1),
            input: "a",
            clock: 6,
            space: 1,
            expected_a: rat(3, 4),
        },
    ]
}
