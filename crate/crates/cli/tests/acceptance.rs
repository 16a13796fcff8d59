//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

use swigc_core::dsep::{d_separated, DSepQuery};
use swigc_core::dsl::DslError;
use swigc_core::estimand::compile;
use swigc_core::graph::{
    build_graph, CausalGraph, InterventionContext, NodeAttrs, NodeId, Role, Value, VarName,
};
use swigc_core::identify::{
    identify_estimand, Blocking, Event, Formula, Identifier, IdentifyOutcome, Rule, Term,
};
use swigc_core::oracle::{
    check_soundness, enumerate, fixtures, random_scm, true_estimand, DEFAULT_ROW_CAP,
};
use swigc_core::render::{to_tikz, RenderStyle};
use swigc_core::{parse, serialize, split, Rational, StudySpec};

type Check = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn spec_path(name: &str) -> PathBuf {
    root().join("../core/specs").join(format!("{name}.swg"))
}

fn study(name: &str) -> StudySpec {
    parse(&std::fs::read_to_string(spec_path(name)).unwrap()).unwrap()
}

fn swigc(cmd: &str, name: &str, rest: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swigc"))
        .arg(cmd)
        .arg(spec_path(name))
        .args(rest)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn golden(file: &str) -> String {
    std::fs::read_to_string(root().join("tests/golden").join(file)).unwrap_or_default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v(s: &str) -> VarName {
    VarName::new(s).unwrap()
}

fn level(a: i64) -> InterventionContext {
    [(v("A"), Value::Int(a))].into_iter().collect()
}

fn obs(name: &str, value: Value) -> Event {
    Event {
        term: Term::Observed(v(name)),
        value,
    }
}

/// `Σ_{over} E[Y | given]·P(over)` with the conditioning set compared as a set.
fn is_adjustment(f: &Formula, over: &[&str], outcome: &str, given: &[Event]) -> bool {
    let body: &Formula = match f {
        Formula::Sum { over: vars, body }
            if vars.iter().map(|x| x.as_str()).eq(over.iter().copied()) =>
        {
            body
        }
        _ if over.is_empty() => f,
        _ => return false,
    };
    match body {
        Formula::Expectation { target, given: g } => {
            *target == Term::Observed(v(outcome))
                && g.len() == given.len()
                && given.iter().all(|e| g.contains(e))
        }
        _ => false,
    }
}

fn outcome_formula(o: &IdentifyOutcome) -> Result<&Formula, String> {
    o.formula()
        .ok_or_else(|| format!("no formula: {}", o.tag()))
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let o = swigc("identify", "itt", &[]);
    let elapsed = start.elapsed();
    let text = stdout(&o);
    ensure(o.status.code() == Some(0), || {
        format!("exit {:?}", o.status.code())
    })?;
    ensure(text == golden("identify_itt.txt"), || {
        format!("golden diff:\n{text}")
    })?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    let r = identify_estimand(&study("itt"));
    for (term, a) in [(&r.left, 1), (&r.right, 0)] {
        let steps = &term.trace().steps;
        let rules: Vec<&str> = steps.iter().map(|s| s.rule.name()).collect();
        ensure(
            rules == ["definition", "randomization", "consistency"],
            || format!("{rules:?}"),
        )?;
        let p = steps[1].premise.as_ref().unwrap().to_string();
        ensure(p == "Y(a) ⊥ A", || p.clone())?;
        let f = outcome_formula(term)?;
        ensure(
            is_adjustment(f, &[], "Y", &[obs("A", Value::Int(a))]),
            || f.to_string(),
        )?;
    }
    let combined = r
        .combined
        .as_ref()
        .map(|f| f.to_string())
        .unwrap_or_default();
    ensure(combined == "E[Y|A=1] - E[Y|A=0]", || combined.clone())?;
    Ok(format!(
        "three-step trace, golden match, {} ms",
        elapsed.as_millis()
    ))
}

fn criterion_2() -> Check {
    let o = swigc("identify", "hypothetical_unobserved", &[]);
    ensure(o.status.code() == Some(5), || {
        format!("exit {:?}", o.status.code())
    })?;
    let r = identify_estimand(&study("hypothetical_unobserved"));
    for term in [&r.left, &r.right] {
        match term {
            IdentifyOutcome::NotIdentifiable {
                reason: Blocking::OpenBackdoor { witness, .. },
                ..
            } => {
                let w = witness.to_string();
                ensure(w == "M(a) <- U -> Y(a,m)", || format!("witness {w}"))?;
            }
            other => return Err(format!("expected not identifiable, got {}", other.tag())),
        }
    }
    ensure(
        stdout(&o).contains("open backdoor path M(a) <- U -> Y(a,m)"),
        || stdout(&o),
    )?;
    Ok("not identifiable, witness M(a) <- U -> Y(a,m), exit 5".into())
}

fn criterion_3() -> Check {
    let o = swigc("identify", "hypothetical_adjusted", &[]);
    ensure(o.status.code() == Some(0), || {
        format!("exit {:?}", o.status.code())
    })?;
    ensure(
        stdout(&o) == golden("identify_hypothetical_adjusted.txt"),
        || stdout(&o),
    )?;
    let r = identify_estimand(&study("hypothetical_adjusted"));
    for (term, a) in [(&r.left, 1), (&r.right, 0)] {
        let given = [
            obs("C", Value::Symbolic("c".into())),
            obs("M", Value::Int(0)),
            obs("A", Value::Int(a)),
        ];
        let f = outcome_formula(term)?;
        ensure(is_adjustment(f, &["C"], "Y", &given), || f.to_string())?;
    }
    Ok("Σ_c E[Y|C=c,M=0,A=a]·P(C=c) for both arms, golden match".into())
}

fn criterion_4() -> Check {
    let s = study("composite");
    let r = identify_estimand(&s);
    let combined = r
        .combined
        .as_ref()
        .map(|f| f.to_string())
        .unwrap_or_default();
    ensure(combined == "E[U|A=1] - E[U|A=0]", || combined.clone())?;
    let c = compile(&s).map_err(|e| e.to_string())?;
    let terms = |a: i64| {
        let ctx = level(a);
        ["U", "Y", "M"].map(|n| Term::new(v(n), ctx.clone()))
    };
    let mut rows = 0usize;
    for seed in 0..100 {
        let scm = random_scm(s.graph(), seed, s.supports());
        let t = enumerate::<Rational>(&c.graph, &scm, &[level(1), level(0)], DEFAULT_ROW_CAP)
            .map_err(|e| e.to_string())?;
        for row in t.rows() {
            for world in [
                terms(1),
                terms(0),
                ["U", "Y", "M"].map(|n| Term::Observed(v(n))),
            ] {
                let [u, y, m] = world.map(|x| t.value(row, &x).unwrap());
                ensure(u == y * i64::from(m == 0), || {
                    format!("seed {seed}: U={u} Y={y} M={m}")
                })?;
                rows += 1;
            }
        }
    }
    Ok(format!(
        "E[U|A=1] - E[U|A=0]; U = Y·1[M=0] on {rows} rows over 100 models"
    ))
}

fn criterion_5() -> Check {
    let o = swigc("identify", "principal_stratum", &[]);
    ensure(o.status.code() == Some(4), || {
        format!("exit {:?}", o.status.code())
    })?;
    let r = identify_estimand(&study("principal_stratum"));
    let f = outcome_formula(&r.left)?;
    ensure(
        r.left.is_identified() && f.to_string() == "E[Y|M=0,A=1]",
        || f.to_string(),
    )?;
    match &r.right {
        IdentifyOutcome::PartiallyIdentified {
            formula,
            reason: Blocking::CrossWorld { .. },
            ..
        } => {
            let s = formula.to_string();
            ensure(s == "E[Y|M(a=1)=0,A=0]", || s.clone())?;
        }
        other => return Err(format!("control term is {}", other.tag())),
    }
    Ok("treated E[Y|M=0,A=1]; control partial E[Y|M(a=1)=0,A=0] (cross-world), exit 4".into())
}

fn criterion_6() -> Check {
    let o = swigc("identify", "chronic_pain", &[]);
    ensure(o.status.code() == Some(0), || {
        format!("exit {:?}", o.status.code())
    })?;
    ensure(stdout(&o) == golden("identify_chronic_pain.txt"), || {
        stdout(&o)
    })?;
    let s = study("chronic_pain");
    let id = Identifier::new(&s);
    let r = id.identify_estimand();
    for (term, a) in [(&r.left, 1), (&r.right, 0)] {
        let given = [
            obs("A", Value::Int(a)),
            obs("C", Value::Symbolic("c".into())),
            obs("M3", Value::Int(0)),
            obs("M4", Value::Int(0)),
        ];
        let f = outcome_formula(term)?;
        ensure(is_adjustment(f, &["C"], "Y", &given), || f.to_string())?;
        let premises: Vec<_> = term
            .trace()
            .steps
            .iter()
            .filter(|s| matches!(s.rule, Rule::IeConditioning { .. }))
            .map(|s| s.premise.clone().unwrap())
            .collect();
        ensure(premises.len() == 2, || {
            format!("{} d-separation premises", premises.len())
        })?;
        for p in &premises {
            ensure(p.holds(id.swig().graph()) == Ok(true), || {
                format!("{p} fails")
            })?;
        }
        id.verify(term.trace())?;
    }
    Ok("Σ_c E[Y|A=a,C=c,M3=0,M4=0]·P(C=c); both premises re-verified on the SWIG".into())
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut total = 0;
    for name in ["itt", "hypothetical_adjusted", "composite", "chronic_pain"] {
        let s = study(name);
        let mut supports = s.supports().clone();
        // widen the covariate and outcome to three levels
        for (var, levels) in supports.iter_mut() {
            let role = s.graph().node(s.graph().random(var).unwrap()).attrs.role;
            if matches!(role, Role::Covariate | Role::Outcome) {
                *levels = vec![0, 1, 2];
            }
        }
        let reports: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..4u64)
                .map(|k| {
                    let (s, supports) = (&s, &supports);
                    scope.spawn(move || {
                        (k * 25..(k + 1) * 25)
                            .map(|seed| {
                                let scm = random_scm(s.graph(), seed, supports);
                                (seed, check_soundness::<Rational>(s, &scm, DEFAULT_ROW_CAP))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        for (seed, r) in reports {
            let r = r.map_err(|e| format!("{name} seed {seed}: {e}"))?;
            ensure(r.identified, || format!("{name} not identified"))?;
            ensure(r.gap == Rational::from_integer(0.into()), || {
                format!("{name} seed {seed}: gap {}", r.gap)
            })?;
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{total} models, every gap exactly 0, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> CausalGraph {
    let names: Vec<VarName> = (0..n).map(|i| v(&format!("V{i}"))).collect();
    let nodes: Vec<_> = names
        .iter()
        .map(|x| (x.clone(), NodeAttrs::new(Role::Covariate)))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    build_graph(&nodes, &edges).unwrap()
}

fn subsets(items: &[NodeId], max: usize) -> Vec<BTreeSet<NodeId>> {
    let mut out = vec![BTreeSet::new()];
    for &x in items {
        let grown: Vec<_> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut s = s.clone();
                s.insert(x);
                s
            })
            .collect();
        out.extend(grown);
    }
    out
}

fn criterion_8() -> Check {
    let (mut statements, mut separated) = (0usize, 0usize);
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(&mut rng, 4 + (seed % 3) as usize);
        let world: InterventionContext = g
            .nodes()
            .filter_map(|(_, n)| {
                let level = rng.random_range(0..2);
                rng.random_bool(0.35)
                    .then(|| (n.var().clone(), Value::Int(level)))
            })
            .collect();
        let swig = split(&g, &world).map_err(|e| e.to_string())?;
        let sg = swig.graph();
        let supports: BTreeMap<VarName, Vec<i64>> = g
            .nodes()
            .map(|(_, n)| (n.var().clone(), vec![0, 1]))
            .collect();
        let scm = random_scm(&g, seed, &supports);
        let table = enumerate::<Rational>(&g, &scm, std::slice::from_ref(&world), DEFAULT_ROW_CAP)
            .map_err(|e| e.to_string())?;
        let term = |id: NodeId| {
            let n = sg.node(id);
            Term::new(n.var().clone(), n.context().unwrap().clone())
        };
        let random: Vec<NodeId> = sg
            .node_ids()
            .filter(|&id| !sg.node(id).is_fixed())
            .collect();
        let sets: Vec<_> = subsets(&random, 2)
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect();
        for x in &sets {
            for y in &sets {
                if x >= y || !x.is_disjoint(y) {
                    continue;
                }
                let rest: Vec<NodeId> = random
                    .iter()
                    .copied()
                    .filter(|k| !x.contains(k) && !y.contains(k))
                    .collect();
                for z in subsets(&rest, 2) {
                    let q = DSepQuery {
                        x: x.clone(),
                        y: y.clone(),
                        z: z.clone(),
                    };
                    statements += 1;
                    if !d_separated(sg, &q).map_err(|e| e.to_string())? {
                        continue;
                    }
                    separated += 1;
                    let terms =
                        |s: &BTreeSet<NodeId>| s.iter().map(|&k| term(k)).collect::<Vec<_>>();
                    let holds = table
                        .conditionally_independent(&terms(x), &terms(y), &terms(&z))
                        .map_err(|e| e.to_string())?;
                    ensure(holds, || format!("seed {seed}: {} violated", q.render(sg)))?;
                }
            }
        }
    }
    ensure(separated > 0, || "no separated statements generated".into())?;
    Ok(format!(
        "{statements} statements over 50 models, {separated} separated, 0 violations"
    ))
}

fn criterion_9() -> Check {
    // id, Y(a=0), Y(a=1), A, Y as printed in the God's Table
    const PRINTED: [[i64; 5]; 5] = [
        [1, 60, 52, 1, 52],
        [2, 45, 37, 0, 45],
        [3, 46, 38, 1, 38],
        [4, 75, 67, 1, 67],
        [5, 21, 15, 0, 21],
    ];
    let (graph, scm) = fixtures::five_units();
    let contrast = fixtures::ate_contrast();
    let t = enumerate::<Rational>(&graph, &scm, &[level(1), level(0)], DEFAULT_ROW_CAP)
        .map_err(|e| e.to_string())?;
    ensure(t.rows().len() == 5, || format!("{} rows", t.rows().len()))?;
    let (y0, y1) = (Term::new(v("Y"), level(0)), Term::new(v("Y"), level(1)));
    let (a, y) = (Term::Observed(v("A")), Term::Observed(v("Y")));
    let mut cells = 0;
    for (row, want) in t.rows().iter().zip(&PRINTED) {
        let got = [&y0, &y1, &a, &y].map(|x| t.value(row, x).unwrap());
        for (g, w) in got.iter().zip(&want[1..]) {
            ensure(g == w, || format!("unit {}: {got:?} vs {want:?}", want[0]))?;
            cells += 1;
        }
        let [y0v, y1v, av, yv] = got;
        ensure(yv == y1v * av + y0v * (1 - av), || {
            format!("unit {} inconsistent", want[0])
        })?;
    }
    let truth = true_estimand(&t, &contrast).map_err(|e| e.to_string())?;
    ensure(truth == Rational::new((-38).into(), 5.into()), || {
        truth.to_string()
    })?;
    Ok(format!(
        "{cells} cells match, Y = Y(a=1)A + Y(a=0)(1-A) on every unit"
    ))
}

const RENDERED: &[(&str, &str, &[&str])] = &[
    ("dag_itt.tex", "itt", &["--dag"]),
    ("swig_simplest.tex", "simplest", &[]),
    ("swig_itt.tex", "itt", &[]),
    (
        "swig_hypothetical_unobserved.tex",
        "hypothetical_unobserved",
        &[],
    ),
    (
        "swig_hypothetical_adjusted.tex",
        "hypothetical_adjusted",
        &[],
    ),
    ("swig_composite.tex", "composite", &[]),
    (
        "swig_principal_stratum_a1.tex",
        "principal_stratum",
        &["--world", "a=1"],
    ),
    (
        "swig_principal_stratum_a0.tex",
        "principal_stratum",
        &["--world", "a=0"],
    ),
    ("swig_chronic_pain.tex", "chronic_pain", &[]),
];

type Markup = (Vec<(usize, String)>, BTreeSet<(usize, usize)>);

fn tikz_structure(text: &str) -> Markup {
    let id = |s: &str| -> usize {
        s.trim_matches(|c| c == '(' || c == ')' || c == 'n')
            .parse()
            .unwrap()
    };
    let mut nodes = Vec::new();
    let mut edges = BTreeSet::new();
    for l in text.lines().map(str::trim) {
        if l.starts_with("\\node") {
            let at = l.find(") at").unwrap();
            let open = l[..at].rfind('(').unwrap();
            let label = &l[l.rfind("{$").unwrap() + 2..l.rfind("$}").unwrap()];
            nodes.push((id(&l[open..=at]), label.replace("\\_", "_")));
        } else if l.contains(" edge ") {
            let from = &l[..=l.find(')').unwrap()];
            let to = &l[l.rfind('(').unwrap()..];
            edges.insert((id(from), id(to)));
        }
    }
    (nodes, edges)
}

fn criterion_10() -> Check {
    for (file, name, args) in RENDERED {
        let text = stdout(&swigc("render", name, args));
        ensure(text == stdout(&swigc("render", name, args)), || {
            format!("{file} not stable")
        })?;
        ensure(text == golden(file), || {
            format!("{file} differs from golden")
        })?;
        let mut json_args = args.to_vec();
        json_args.push("--json");
        let g: Json = serde_json::from_str(&stdout(&swigc("swig", name, &json_args))).unwrap();
        let labels: Vec<String> = g["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|n| n["label"].as_str().unwrap().to_string())
            .collect();
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let edges: BTreeSet<(usize, usize)> = g["edges"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| (index[e[0].as_str().unwrap()], index[e[1].as_str().unwrap()]))
            .collect();
        let (tnodes, tedges) = tikz_structure(&text);
        ensure(tnodes.len() == labels.len(), || {
            format!("{file}: node count")
        })?;
        for (i, label) in &tnodes {
            // a principal stratum label carries its level, as in M(a=1)=0
            ensure(label.starts_with(labels[*i].as_str()), || {
                format!("{file}: n{i} is {label}")
            })?;
        }
        ensure(tedges == edges, || {
            format!("{file}: edges {tedges:?} vs {edges:?}")
        })?;
    }
    let s = study("chronic_pain");
    let c = compile(&s).map_err(|e| e.to_string())?;
    let sw = split(&c.graph, &c.symbolic_interventions()).map_err(|e| e.to_string())?;
    let style = RenderStyle::default();
    let notes = Default::default();
    ensure(
        to_tikz(sw.graph(), &style, &notes) == to_tikz(sw.graph(), &style, &notes),
        || "library output unstable".into(),
    )?;
    Ok(format!(
        "{} graphs byte-stable, golden match, node/edge sets equal",
        RENDERED.len()
    ))
}

const TOKENS: &[&str] = &[
    "{",
    "}",
    "(",
    ")",
    ";",
    ":",
    ",",
    "->",
    "=",
    "[",
    "]",
    "node",
    "edges",
    "strategy",
    "estimand",
    "study",
    "scm",
    "role",
    "treatment",
    "outcome",
    "intercurrent",
    "covariate",
    "observed",
    "false",
    "adjust",
    "values",
    "hypothetical(0)",
    "composite(0)",
    "treatment_policy",
    "while_on_treatment",
    "principal_stratum(M(a=1)=0)",
    "mean_difference(Y; A=1 vs A=0)",
    "table(A)",
    "noise",
    "~",
    "1/0",
    "-",
    "99999999999999999999",
    "0",
    "A",
    "Y",
    "M",
    "U",
    "//",
    "/*",
    "\"",
    "⊥",
    "\u{0}",
    "\n",
];

fn mutate(rng: &mut ChaCha8Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.random_range(1..=4) {
        let n = chars.len();
        let at = rng.random_range(0..=n);
        match rng.random_range(0..6) {
            0 if n > 0 => {
                let end = (at + rng.random_range(1..=8)).min(n);
                chars.drain(at.min(n)..end);
            }
            1 => {
                let t = TOKENS[rng.random_range(0..TOKENS.len())];
                chars.splice(at..at, t.chars());
            }
            2 if n > 0 => {
                let start = rng.random_range(0..n);
                let end = (start + rng.random_range(1..=24)).min(n);
                let slice: Vec<char> = chars[start..end].to_vec();
                chars.splice(at..at, slice);
            }
            3 if n > 1 => {
                let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                chars.swap(i, j);
            }
            4 => chars.truncate(at),
            _ => chars.insert(at, char::from(rng.random_range(0x20u8..0x7f))),
        }
    }
    chars.into_iter().collect()
}

const SPECS: &[&str] = &[
    "simplest",
    "itt",
    "hypothetical_unobserved",
    "hypothetical_adjusted",
    "composite",
    "principal_stratum",
    "chronic_pain",
];

fn criterion_11() -> Check {
    let sources: Vec<String> = SPECS
        .iter()
        .chain(["role_misuse"].iter())
        .map(|n| std::fs::read_to_string(spec_path(n)).unwrap())
        .collect();
    for (name, text) in SPECS.iter().zip(&sources) {
        let s = parse(text).map_err(|e| format!("{name}: {e}"))?;
        let printed = serialize(&s);
        let again = parse(&printed).map_err(|e| format!("{name} reprint: {e}"))?;
        ensure(again == s && serialize(&again) == printed, || {
            format!("{name}: not a fixpoint")
        })?;
    }
    let previous = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut valid, mut parse_err, mut semantic_err) = (0, 0, 0);
    let mut failure = None;
    let mut samples = Vec::new();
    for i in 0..10_000 {
        let src = &sources[i % sources.len()];
        let text = mutate(&mut rng, src);
        let result = catch_unwind(AssertUnwindSafe(|| match parse(&text) {
            Ok(s) => {
                let printed = serialize(&s);
                let fixpoint = parse(&printed).map(|again| again == s).unwrap_or(false);
                let _ = identify_estimand(&s);
                (Ok(()), fixpoint)
            }
            Err(e) => (Err(e), true),
        }));
        match result {
            Ok((Ok(()), true)) => valid += 1,
            Ok((Ok(()), false)) => {
                failure = Some(format!(
                    "mutant {i} parses but does not round-trip:\n{text}"
                ));
                break;
            }
            Ok((Err(DslError::Parse(_)), _)) => parse_err += 1,
            Ok((Err(DslError::Semantic(_)), _)) => semantic_err += 1,
            Err(_) => {
                failure = Some(format!("mutant {i} panicked:\n{text}"));
                break;
            }
        }
        if i % 50 == 0 {
            samples.push(text);
        }
    }
    std::panic::set_hook(previous);
    if let Some(f) = failure {
        return Err(f);
    }
    let dir = std::env::temp_dir().join(format!("swigc-fuzz-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let path = dir.join("mutant.swg");
    for text in &samples {
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let o = Command::new(env!("CARGO_BIN_EXE_swigc"))
            .arg("validate")
            .arg(&path)
            .output()
            .unwrap();
        let code = o.status.code();
        ensure(matches!(code, Some(0 | 2)), || {
            format!("cli exit {code:?} on:\n{text}")
        })?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "10000 mutants: {valid} valid, {parse_err} parse errors, {semantic_err} semantic errors, 0 panics; \
         {} through the CLI; {} specs are print fixpoints",
        samples.len(),
        SPECS.len()
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 11] = [
        ("ITT golden trace", criterion_1),
        ("hypothetical failure", criterion_2),
        ("hypothetical success", criterion_3),
        ("composite", criterion_4),
        ("principal stratum", criterion_5),
        ("chronic pain end-to-end", criterion_6),
        ("oracle soundness battery", criterion_7),
        ("d-separation soundness", criterion_8),
        ("God's Table reproduction", criterion_9),
        ("rendering goldens", criterion_10),
        ("DSL robustness", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
