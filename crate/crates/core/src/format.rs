//! Machine description files and report number formatting.
//!
//! The file format is line-oriented: a `[machine]` section of
//! whitespace-separated key/value lines (kind, states, initial, accept,
//! reject, nonpost, input_alphabet, work_alphabet) followed by a `[delta]`
//! section with one rule per line:
//!
//! ```text
//! s σ γ -> s' γ' d_in d_wk @ p/q
//! ```
//!
//! `#` denotes the blank symbol, moves are -1/0/1 (with +1 accepted), and
//! `;` starts a comment. Probabilities are exact rationals in lowest
//! terms. On fair-coin machines (kind `ptm`) a probability-1 rule denotes
//! a coin flip whose two outcomes coincide, so it parses into two
//! identical probability-1/2 branches; the printer merges such pairs back
//! into one line, making parse/print round-trip exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::machine::{rat, MachineKind, MachineSpec, Rule, BLANK};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_symbol(tok: &str, line: usize, what: &str) -> Result<char> {
    let mut chars = tok.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(perr(line, format!("{what} must be a single symbol, got {tok:?}"))),
    }
}

fn parse_move(tok: &str, line: usize) -> Result<i8> {
    match tok {
        "-1" => Ok(-1),
        "0" => Ok(0),
        "1" | "+1" => Ok(1),
        _ => Err(perr(line, format!("move must be -1, 0, or 1, got {tok:?}"))),
    }
}

fn parse_rational(tok: &str, line: usize) -> Result<BigRational> {
    let bad = || perr(line, format!("malformed rational {tok:?}"));
    let (num, den) = match tok.split_once('/') {
        Some((n, d)) => (n, d),
        None => (tok, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(perr(line, format!("zero denominator in {tok:?}")));
    }
    let r = BigRational::new(num, den);
    if r.is_negative() || r > BigRational::one() {
        return Err(perr(line, format!("probability {tok} out of [0, 1]")));
    }
    Ok(r)
}

/// Parses the documented machine file format into a `MachineSpec`.
/// Structural problems (bad syntax, duplicate rules, unknown states or
/// symbols, malformed rationals) are reported with their line number;
/// probability-mass problems are left to `validate_well_formed`.
pub fn parse_machine_file(text: &str) -> Result<MachineSpec> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Machine,
        Delta,
    }
    let mut section = Section::None;
    let mut machine_line = 0usize;
    let mut keys: Vec<(usize, String, Vec<String>)> = Vec::new();
    let mut rules: Vec<(usize, String, char, char, String, char, i8, i8, BigRational)> =
        Vec::new();
    let mut seen_rules: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content == "[machine]" {
            section = Section::Machine;
            machine_line = line;
            continue;
        }
        if content == "[delta]" {
            section = Section::Delta;
            continue;
        }
        if content.starts_with('[') {
            return Err(perr(line, format!("unknown section {content}")));
        }
        match section {
            Section::None => return Err(perr(line, "content before any section header")),
            Section::Machine => {
                let mut toks = content.split_whitespace().map(str::to_string);
                let key = toks.next().expect("non-empty line has a first token");
                let values: Vec<String> = toks.collect();
                if keys.iter().any(|(_, k, _)| *k == key) {
                    return Err(perr(line, format!("duplicate key {key}")));
                }
                keys.push((line, key, values));
            }
            Section::Delta => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                if toks.len() != 10 || toks[3] != "->" || toks[8] != "@" {
                    return Err(perr(
                        line,
                        "rule must have the form: s σ γ -> s' γ' d_in d_wk @ p/q",
                    ));
                }
                let sigma = parse_symbol(toks[1], line, "input symbol")?;
                let gamma = parse_symbol(toks[2], line, "work symbol")?;
                let write = parse_symbol(toks[5], line, "written symbol")?;
                let d_in = parse_move(toks[6], line)?;
                let d_wk = parse_move(toks[7], line)?;
                let prob = parse_rational(toks[9], line)?;
                let fingerprint = format!(
                    "{} {} {} {} {} {} {} {}",
                    toks[0], sigma, gamma, toks[4], write, d_in, d_wk, prob
                );
                if !seen_rules.insert(fingerprint) {
                    return Err(perr(line, "duplicate rule"));
                }
                if prob.is_zero() {
                    continue;
                }
                rules.push((
                    line,
                    toks[0].to_string(),
                    sigma,
                    gamma,
                    toks[4].to_string(),
                    write,
                    d_in,
                    d_wk,
                    prob,
                ));
            }
        }
    }

    let find = |key: &str| keys.iter().find(|(_, k, _)| k == key);
    let required = |key: &str| -> Result<&(usize, String, Vec<String>)> {
        find(key).ok_or_else(|| perr(machine_line, format!("missing key {key}")))
    };
    let single = |key: &str| -> Result<String> {
        let (line, _, values) = required(key)?;
        if values.len() != 1 {
            return Err(perr(*line, format!("{key} takes exactly one value")));
        }
        Ok(values[0].clone())
    };
    if find("kind").is_none() && find("states").is_none() {
        return Err(perr(machine_line.max(1), "missing [machine] section keys"));
    }

    let kind = match single("kind")?.as_str() {
        "dtm" => MachineKind::Dtm,
        "ntm" => MachineKind::Ntm,
        "ptm" => MachineKind::Ptm,
        "postptm" => MachineKind::PostPtm,
        other => {
            let (line, _, _) = required("kind")?;
            return Err(perr(*line, format!("unknown kind {other}")));
        }
    };
    let (states_line, _, state_names) = required("states")?;
    if state_names.is_empty() {
        return Err(perr(*states_line, "states list is empty"));
    }
    {
        let mut set = std::collections::BTreeSet::new();
        for s in state_names {
            if !set.insert(s) {
                return Err(perr(*states_line, format!("duplicate state {s}")));
            }
        }
    }
    let alphabet = |key: &str| -> Result<Vec<char>> {
        match find(key) {
            None => Ok(Vec::new()),
            Some((line, _, values)) => {
                let mut out = Vec::new();
                for v in values {
                    let c = parse_symbol(v, *line, "alphabet symbol")?;
                    if c == BLANK {
                        return Err(perr(*line, "blank # is implicit, not listed"));
                    }
                    if out.contains(&c) {
                        return Err(perr(*line, format!("duplicate symbol {c}")));
                    }
                    out.push(c);
                }
                Ok(out)
            }
        }
    };
    let input_alphabet = alphabet("input_alphabet")?;
    let work_alphabet = alphabet("work_alphabet")?;

    let known = |name: &str| state_names.iter().any(|s| s == name);
    for key in ["initial", "accept", "reject"] {
        let v = single(key)?;
        if !known(&v) {
            let (line, _, _) = required(key)?;
            return Err(perr(*line, format!("unknown state {v}")));
        }
    }
    let nonpost = match find("nonpost") {
        None => None,
        Some((line, _, values)) => {
            if values.len() != 1 {
                return Err(perr(*line, "nonpost takes exactly one value"));
            }
            if !known(&values[0]) {
                return Err(perr(*line, format!("unknown state {}", values[0])));
            }
            Some(values[0].clone())
        }
    };
    for (line, key, _) in &keys {
        let ok = matches!(
            key.as_str(),
            "kind" | "states" | "initial" | "accept" | "reject" | "nonpost" | "input_alphabet"
                | "work_alphabet"
        );
        if !ok {
            return Err(perr(*line, format!("unknown key {key}")));
        }
    }

    let refs: Vec<&str> = state_names.iter().map(|s| s.as_str()).collect();
    let mut spec = MachineSpec::new(
        kind,
        &refs,
        &single("initial")?,
        &single("accept")?,
        &single("reject")?,
        nonpost.as_deref(),
        &input_alphabet,
        &work_alphabet,
    );

    let input_symbols = spec.input_symbols();
    let work_symbols = spec.work_symbols();
    for (line, s, sigma, gamma, s2, write, d_in, d_wk, prob) in rules {
        if !known(&s) {
            return Err(perr(line, format!("unknown state {s}")));
        }
        if !known(&s2) {
            return Err(perr(line, format!("unknown state {s2}")));
        }
        if !input_symbols.contains(&sigma) {
            return Err(perr(line, format!("symbol {sigma} not in the input alphabet")));
        }
        if !work_symbols.contains(&gamma) {
            return Err(perr(line, format!("symbol {gamma} not in the work alphabet")));
        }
        if !work_symbols.contains(&write) {
            return Err(perr(line, format!("symbol {write} not in the work alphabet")));
        }
        if kind == MachineKind::Ptm {
            let half = rat(1, 2);
            let one = rat(1, 1);
            if prob != half && prob != one {
                return Err(perr(line, "probability not in {0,1/2,1} on a ptm"));
            }
            if prob == one {
                // A certain move on a fair-coin machine is a dummy split.
                spec.add_rule(&s, sigma, gamma, &s2, write, d_in, d_wk, half.clone());
                spec.add_rule(&s, sigma, gamma, &s2, write, d_in, d_wk, half);
                continue;
            }
        }
        spec.add_rule(&s, sigma, gamma, &s2, write, d_in, d_wk, prob);
    }

    let initial = spec.initial;
    if !spec.is_halting(initial)
        && !spec.delta.keys().any(|(s, _, _)| *s == initial)
    {
        return Err(perr(machine_line, "initial state has no outgoing rules"));
    }
    Ok(spec)
}

/// Renders a machine back into the file format. Runs of identical
/// branches within one rule list are merged into a single line with the
/// summed probability, so fair-coin dummy splits print as `@ 1/1`.
pub fn print_machine_file(spec: &MachineSpec) -> String {
    let mut out = String::new();
    out.push_str("[machine]\n");
    out.push_str(&format!("kind {}\n", spec.kind.as_str()));
    out.push_str(&format!("states {}\n", spec.states.join(" ")));
    out.push_str(&format!("initial {}\n", spec.state_name(spec.initial)));
    out.push_str(&format!("accept {}\n", spec.state_name(spec.accept)));
    out.push_str(&format!("reject {}\n", spec.state_name(spec.reject)));
    if let Some(np) = spec.nonpost {
        out.push_str(&format!("nonpost {}\n", spec.state_name(np)));
    }
    let join = |cs: &[char]| cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    if !spec.input_alphabet.is_empty() {
        out.push_str(&format!("input_alphabet {}\n", join(&spec.input_alphabet)));
    }
    if !spec.work_alphabet.is_empty() {
        out.push_str(&format!("work_alphabet {}\n", join(&spec.work_alphabet)));
    }
    out.push_str("[delta]\n");
    for ((s, sigma, gamma), rules) in &spec.delta {
        let mut i = 0;
        while i < rules.len() {
            let mut j = i + 1;
            let mut prob = rules[i].prob.clone();
            while j < rules.len() && same_branch(&rules[i], &rules[j]) {
                prob += &rules[j].prob;
                j += 1;
            }
            out.push_str(&format!(
                "{} {} {} -> {} {} {} {} @ {}\n",
                spec.state_name(*s),
                sigma,
                gamma,
                spec.state_name(rules[i].state),
                rules[i].write,
                rules[i].d_in,
                rules[i].d_wk,
                fmt_rational(&prob)
            ));
            i = j;
        }
    }
    out
}

fn same_branch(a: &Rule, b: &Rule) -> bool {
    a.state == b.state
        && a.write == b.write
        && a.d_in == b.d_in
        && a.d_wk == b.d_wk
        && a.prob == b.prob
}

/// Rationals print as `p/q` in lowest terms, denominator always present.
pub fn fmt_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Floats print with 12 significant digits, positionally where readable.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor();
    if !(-10.0..15.0).contains(&mag) {
        return format!("{x:.11e}");
    }
    let prec = (11 - mag as i32).max(0) as usize;
    format!("{x:.prec$}")
}
