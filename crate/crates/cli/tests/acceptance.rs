//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! `cargo test -p iqa-cli --test acceptance`

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use iqa_core::harness::drive_oracle;
use iqa_core::interaction::{gain_from_parts, rank_options, OptionPayload};
use iqa_core::{
    canonicalize, compute_metrics, entropy, evaluate, execute_query, information_gain, load_dataset, option_gain,
    option_probability, parse_sparql, AnswerSet, AnswerType, Cqi, Engine, EvalQuestion, InteractionOption,
    InteractiveMode, InterpretationSpace, KnowledgeGraph, Lexicon, Mode, OptionCategory, PatternTerm, PipelineConfig,
    QueryGraph, SessionSettings, SessionState, SessionStatus, Term, Triple, TriplePattern, UserQuestion,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOL_INFO: f64 = 1e-9;
const TOL_GAIN: f64 = 1e-12;
const RUNNING: &str = "List software that is written in C++ and runs on Mac OS.";

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn engine() -> Engine {
    let kg = KnowledgeGraph::from_tsv(&read("kg.tsv")).unwrap();
    Engine::new(
        Arc::new(kg),
        Lexicon::from_json(&read("lex.json")).unwrap(),
        PipelineConfig::default(),
    )
}

fn dataset(engine: &Engine) -> Vec<EvalQuestion> {
    load_dataset(&read("qs.json"), engine.kg().type_pred()).unwrap()
}

fn space(weights: &[f64]) -> InterpretationSpace {
    InterpretationSpace::from_cqis(
        weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Cqi {
                id: format!("q{i:02}"),
                qi: vec![],
                answer_type: AnswerType::Select,
                query_graph: QueryGraph::new([TriplePattern::parse("?uri", "p", &format!("e{i}"))]).unwrap(),
                probability: w,
                canonical: format!("c{i}"),
            })
            .collect(),
    )
}

fn random_space(rng: &mut StdRng, max: usize) -> InterpretationSpace {
    let n = rng.random_range(1..=max);
    space(&(0..n).map(|_| rng.random_range(1e-6..1.0)).collect::<Vec<_>>())
}

fn option(id: String, complexity: f64, subsumed: BTreeSet<String>) -> InteractionOption {
    InteractionOption::new(
        id.clone(),
        OptionCategory::C1,
        OptionPayload::Query(id.clone()),
        id.clone(),
        id,
        complexity,
        subsumed,
    )
}

fn random_pool(rng: &mut StdRng, qis: &InterpretationSpace, max: usize) -> Vec<InteractionOption> {
    (0..rng.random_range(1..=max))
        .map(|i| {
            let density = rng.random_range(0.0..1.0);
            let subsumed = qis.ids().into_iter().filter(|_| rng.random_bool(density)).collect();
            option(format!("o{i:02}"), f64::from(rng.random_range(0..4u8)), subsumed)
        })
        .collect()
}

fn settings(omega: u32, max_interactions: usize) -> SessionSettings {
    SessionSettings {
        omega,
        max_interactions,
        superclass_depth: 2,
    }
}

fn information_theory() -> Check {
    let start = Instant::now();
    let uniform = space(&[1.0; 4]);
    ensure(entropy(&uniform) == 2.0, || {
        format!("entropy(uniform-4) = {}", entropy(&uniform))
    })?;
    let half = option(
        "half".into(),
        0.0,
        ["q00", "q01"].iter().map(|s| (*s).to_owned()).collect(),
    );
    let ig = information_gain(&half, &uniform);
    ensure((ig - 1.0).abs() <= TOL_INFO, || format!("half split IG = {ig}"))?;

    let mut rng = StdRng::seed_from_u64(101);
    for _ in 0..1000 {
        let qis = random_space(&mut rng, 32);
        for io in random_pool(&mut rng, &qis, 4) {
            let ig = information_gain(&io, &qis);
            ensure((-TOL_INFO..=1.0 + TOL_INFO).contains(&ig), || {
                format!("IG {ig} out of [0, 1]")
            })?;
            let p = option_probability(&io, &qis);
            let trivial = io.subsumed.is_empty() || io.subsumed.len() == qis.len();
            ensure((ig == 0.0) == trivial, || format!("IG {ig} with P(IO) = {p}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 random spaces, tol {TOL_INFO:e}, {elapsed:.2?}"))
}

fn option_gain_contract() -> Check {
    let mut rng = StdRng::seed_from_u64(102);
    for _ in 0..1000 {
        let qis = random_space(&mut rng, 20);
        let pool = random_pool(&mut rng, &qis, 30);
        let og: Vec<&str> = rank_options(&pool, &qis, 0)
            .iter()
            .map(|r| r.option.id.as_str())
            .collect();
        let mut by_ig: Vec<(&InteractionOption, f64)> = pool
            .iter()
            .map(|o| (o, information_gain(o, &qis)))
            .filter(|(_, g)| *g > 0.0)
            .collect();
        by_ig.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| b.0.usability.total_cmp(&a.0.usability))
                .then_with(|| a.0.id.cmp(&b.0.id))
        });
        let ig: Vec<&str> = by_ig.iter().map(|(o, _)| o.id.as_str()).collect();
        ensure(og == ig, || {
            format!("omega=0 ranking {og:?} differs from IG ranking {ig:?}")
        })?;
        for o in &pool {
            let want = o.usability * information_gain(o, &qis);
            let got = option_gain(o, &qis, 1);
            ensure((got - want).abs() <= TOL_GAIN, || format!("OG {got} vs {want}"))?;
        }
    }
    let engine = engine();
    let mut questions = dataset(&engine);
    questions.extend(load_dataset(&read("running.json"), engine.kg().type_pred()).unwrap());
    let mut n = 0;
    for q in &questions {
        for o in engine.start_session(&q.q_nl, InteractiveMode::Og).state.options() {
            let want = 1.0 / (1.0 + o.complexity);
            ensure((o.usability - want).abs() <= TOL_GAIN, || {
                format!("{}: usability {}", o.id, o.usability)
            })?;
            n += 1;
        }
    }
    Ok(format!("1000 random pools, {n} fixture options, tol {TOL_GAIN:e}"))
}

fn greedy_vs_brute_force() -> Check {
    let mut rng = StdRng::seed_from_u64(103);
    let mut mismatches = 0;
    for _ in 0..500 {
        let qis = random_space(&mut rng, 20);
        let pool = random_pool(&mut rng, &qis, 50);
        let omega = rng.random_range(0..=2);
        let state = SessionState::with_options(
            UserQuestion::new("q", vec![]),
            qis.clone(),
            pool.clone(),
            settings(omega, 10),
        );
        let best = pool
            .iter()
            .filter_map(|o| {
                let ig = information_gain(o, &qis);
                (ig > 0.0).then(|| (o, gain_from_parts(o.usability, ig, omega)))
            })
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then_with(|| a.0.usability.total_cmp(&b.0.usability))
                    .then_with(|| b.0.id.cmp(&a.0.id))
            })
            .map(|(o, _)| o.id.clone());
        if state.select_best_option().map(|o| o.id.clone()) != best {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches"))?;
    Ok("500 random spaces, 0 mismatches".into())
}

fn oracle_consistency() -> Check {
    let mut rng = StdRng::seed_from_u64(104);
    for _ in 0..500 {
        let qis = random_space(&mut rng, 20);
        let mut pool = random_pool(&mut rng, &qis, 40);
        pool.extend(
            qis.ids()
                .into_iter()
                .map(|id| option(format!("c4:{id}"), 1.0, BTreeSet::from([id]))),
        );
        let ids: Vec<String> = qis.ids().into_iter().collect();
        let gold = ids[rng.random_range(0..ids.len())].clone();
        let mut state = SessionState::with_options(UserQuestion::new("q", vec![]), qis, pool, settings(1, 100));
        drive_oracle(&mut state, |c| c.id == gold, |o| o.subsumed.contains(&gold));
        ensure(state.qis().contains(&gold), || {
            "random session pruned the intended query".into()
        })?;
        ensure(state.status() == &SessionStatus::AcceptedCqi(gold.clone()), || {
            "random session did not accept gold".into()
        })?;
    }

    let engine = engine();
    let questions = dataset(&engine);
    let categories: BTreeSet<usize> = questions.iter().map(|q| q.complexity_category).collect();
    ensure(questions.len() >= 20, || {
        format!("{} fixture questions", questions.len())
    })?;
    ensure((2..=4).all(|c| categories.contains(&c)), || {
        format!("categories {categories:?}")
    })?;
    let (mut in_space, mut reached) = (0, 0);
    for q in &questions {
        let mut state = engine.start_session(&q.q_nl, InteractiveMode::Og).state;
        let Some(gold) = state.qis().find_canonical(&q.canonical).map(|c| c.id.clone()) else {
            continue;
        };
        in_space += 1;
        drive_oracle(&mut state, |c| c.id == gold, |o| o.subsumed.contains(&gold));
        ensure(state.qis().contains(&gold), || {
            format!("{}: intended query pruned", q.id)
        })?;
        if state.status() == &SessionStatus::AcceptedCqi(gold) && state.interactions_used() <= 10 {
            reached += 1;
        }
    }
    let rate = reached as f64 / in_space as f64;
    ensure(rate >= 0.95, || format!("reached {reached}/{in_space}"))?;
    Ok(format!(
        "500 random sessions, {reached}/{in_space} fixture questions within 10 interactions (KG {} triples)",
        engine.kg().len()
    ))
}

fn baseline_dominance() -> Check {
    let start = Instant::now();
    let engine = engine();
    let questions = dataset(&engine);
    let traces = evaluate(&questions, &engine, &[Mode::Og, Mode::Ig, Mode::Nib, Mode::Sib]);
    let cost = |mode: Mode, id: &str| traces.iter().find(|t| t.mode == mode && t.question_id == id).unwrap();
    let mut checked = 0;
    for q in &questions {
        let nib = cost(Mode::Nib, &q.id);
        if !nib.gold_in_space || nib.initial_qis_size < 4 {
            continue;
        }
        checked += 1;
        for mode in [Mode::Og, Mode::Ig] {
            let t = cost(mode, &q.id);
            ensure(t.cost <= nib.cost, || {
                format!("{}: {} cost {:?} > NIB {:?}", q.id, mode.name(), t.cost, nib.cost)
            })?;
        }
    }
    let report = compute_metrics(&traces, &questions);
    let mean = |m: &str| report.modes[m].overall.cost_mean.unwrap_or(f64::INFINITY);
    let (og, ig, sib) = (mean("og"), mean("ig"), mean("sib"));
    ensure(og < sib && ig < sib, || {
        format!("mean cost og {og:.2} ig {ig:.2} sib {sib:.2}")
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{checked} questions with |QIS| >= 4, mean cost og {og:.2} ig {ig:.2} nib {:.2} sib {sib:.2}, {elapsed:.2?}",
        mean("nib")
    ))
}

const ENTITIES: [&str; 6] = ["e:a", "e:b", "e:c", "e:d", "e:e", "e:f"];
const PREDICATES: [&str; 3] = ["p:x", "p:y", "p:z"];
const VARS: [&str; 3] = ["v0", "v1", "v2"];

fn random_term(rng: &mut StdRng, pos: usize) -> PatternTerm {
    {
        if rng.random_bool(0.55) {
            PatternTerm::var(VARS[rng.random_range(0..3)])
        } else if pos == 1 {
            PatternTerm::iri(PREDICATES[rng.random_range(0..3)])
        } else if pos == 2 && rng.random_bool(0.2) {
            PatternTerm::Literal("7".into())
        } else {
            PatternTerm::iri(ENTITIES[rng.random_range(0..6)])
        }
    }
}

fn random_query(rng: &mut StdRng) -> QueryGraph {
    let n = rng.random_range(1..=3);
    QueryGraph::new((0..n).map(|_| TriplePattern::new(random_term(rng, 0), random_term(rng, 1), random_term(rng, 2))))
        .unwrap()
}

fn evaluator_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(106);
    for _ in 0..200 {
        let mut b = KnowledgeGraph::builder();
        for _ in 0..rng.random_range(1..=50) {
            let o = if rng.random_bool(0.2) {
                Term::Literal("7".into())
            } else {
                Term::Iri(ENTITIES[rng.random_range(0..6)].into())
            };
            b.add_triple(Triple::new(
                ENTITIES[rng.random_range(0..6)],
                PREDICATES[rng.random_range(0..3)],
                o,
            ));
        }
        let kg = b.build();
        let qg = random_query(&mut rng);
        let mut domain: BTreeSet<Term> = BTreeSet::new();
        for t in kg.triples() {
            domain.insert(Term::Iri(t.subject.clone()));
            domain.insert(Term::Iri(t.predicate.clone()));
            domain.insert(t.object.clone());
        }
        let domain: Vec<Term> = domain.into_iter().collect();
        let vars: Vec<String> = qg.variables().into_iter().collect();
        let mut expected = BTreeSet::new();
        let total = domain.len().pow(vars.len() as u32);
        for mut code in 0..total {
            let binding: std::collections::BTreeMap<String, Term> = vars
                .iter()
                .map(|v| {
                    let value = domain[code % domain.len()].clone();
                    code /= domain.len();
                    (v.clone(), value)
                })
                .collect();
            let val = |t: &PatternTerm| match t {
                PatternTerm::Var(v) => binding[v].clone(),
                other => other.to_term().unwrap(),
            };
            let holds = qg.patterns().iter().all(|p| {
                kg.triples().iter().any(|t| {
                    Term::Iri(t.subject.clone()) == val(&p.subject)
                        && Term::Iri(t.predicate.clone()) == val(&p.predicate)
                        && t.object == val(&p.object)
                })
            });
            if holds {
                expected.insert(binding);
            }
        }
        let AnswerSet::Select(rows) = execute_query(&kg, AnswerType::Select, &qg) else {
            return Err("SELECT did not return rows".into());
        };
        let got: BTreeSet<_> = rows.iter().cloned().collect();
        ensure(got == expected, || format!("query {qg:?} disagrees with brute force"))?;
        ensure(
            execute_query(&kg, AnswerType::Count, &qg) == AnswerSet::Count(rows.len()),
            || "COUNT incoherent".into(),
        )?;
        ensure(
            execute_query(&kg, AnswerType::Ask, &qg) == AnswerSet::Ask(!rows.is_empty()),
            || "ASK incoherent".into(),
        )?;
    }
    Ok("200 random instances agree with brute force".into())
}

fn canonicalization() -> Check {
    let mut rng = StdRng::seed_from_u64(107);
    for _ in 0..500 {
        let qg = random_query(&mut rng);
        let names: Vec<String> = qg.variables().into_iter().collect();
        let mut fresh: Vec<String> = (0..names.len()).map(|i| format!("r{i}")).collect();
        for i in (1..fresh.len()).rev() {
            fresh.swap(i, rng.random_range(0..=i));
        }
        let rn = |t: &PatternTerm| match t {
            PatternTerm::Var(v) => PatternTerm::var(&fresh[names.iter().position(|n| n == v).unwrap()]),
            other => other.clone(),
        };
        let mut patterns: Vec<TriplePattern> = qg
            .patterns()
            .iter()
            .map(|p| TriplePattern::new(rn(&p.subject), rn(&p.predicate), rn(&p.object)))
            .collect();
        for i in (1..patterns.len()).rev() {
            patterns.swap(i, rng.random_range(0..=i));
        }
        let renamed = QueryGraph::new(patterns).unwrap();
        ensure(
            canonicalize(AnswerType::Select, &qg).unwrap() == canonicalize(AnswerType::Select, &renamed).unwrap(),
            || format!("renaming changed canonical form of {qg:?}"),
        )?;
    }
    let mut mutations = 0;
    while mutations < 500 {
        let qg = random_query(&mut rng);
        let mut patterns = qg.patterns().to_vec();
        let i = rng.random_range(0..patterns.len());
        let slot = match rng.random_range(0..3) {
            0 => &mut patterns[i].subject,
            1 => &mut patterns[i].predicate,
            _ => &mut patterns[i].object,
        };
        *slot = match slot {
            PatternTerm::Var(_) => continue,
            PatternTerm::Literal(_) => PatternTerm::Literal("mutant".into()),
            PatternTerm::Iri(_) => PatternTerm::iri("x:mutant"),
        };
        let mutated = QueryGraph::new(patterns).unwrap();
        ensure(
            canonicalize(AnswerType::Select, &qg).unwrap() != canonicalize(AnswerType::Select, &mutated).unwrap(),
            || format!("mutation of {qg:?} kept its canonical form"),
        )?;
        mutations += 1;
    }
    Ok("500 renamings identical, 500 constant mutations distinct".into())
}

fn iqa(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut full: Vec<String> = args.iter().map(|s| (*s).to_owned()).collect();
    full.extend([
        "--kg".into(),
        fixture("kg.tsv").display().to_string(),
        "--lexicon".into(),
        fixture("lex.json").display().to_string(),
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_iqa"))
        .args(&full)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    Ok(out.stdout)
}

fn running_example() -> Check {
    let gold = load_dataset(&read("running.json"), "rdf:type").unwrap().remove(0);
    let dump: serde_json::Value =
        serde_json::from_slice(&iqa(&["ask", "--question", RUNNING, "--json"])?).map_err(|e| e.to_string())?;
    let queries = dump["queries"].as_array().ok_or("no queries in ask output")?;
    let position = queries.iter().position(|q| {
        let (at, qg) = parse_sparql(q["sparql"].as_str().unwrap_or_default()).unwrap();
        canonicalize(at, &qg).unwrap() == gold.canonical
    });
    let rank = position.ok_or("intended query missing from the space")? + 1;
    let has_type = gold
        .gold_query
        .patterns()
        .contains(&TriplePattern::parse("?uri", "rdf:type", "dbo:Software"));
    ensure(has_type, || "gold lacks the Software type pattern".into())?;

    let dir = std::env::temp_dir().join(format!("iqa-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.join(format!("report{i}.json"));
        let traces = dir.join(format!("traces{i}.json"));
        iqa(&[
            "bench",
            "--dataset",
            fixture("running.json").to_str().unwrap(),
            "--modes",
            "og",
            "--out",
            out.to_str().unwrap(),
            "--traces",
            traces.to_str().unwrap(),
        ])?;
        reports.push((std::fs::read(&out).unwrap(), std::fs::read(&traces).unwrap()));
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(reports[0] == reports[1], || "reruns differ".into())?;
    let traces: serde_json::Value = serde_json::from_slice(&reports[0].1).unwrap();
    let cost = traces[0]["cost"].as_u64().ok_or("no cost")?;
    ensure(traces[0]["success"] == true && cost <= 5, || {
        format!("oracle cost {cost}, trace {}", traces[0])
    })?;
    Ok(format!(
        "intended query at rank {rank} of {}, oracle cost {cost}, reruns byte-identical",
        queries.len()
    ))
}

fn metric_definitions() -> Check {
    let engine = engine();
    let questions = dataset(&engine);
    let modes = [Mode::Og, Mode::Ig, Mode::Nib, Mode::Sib];
    let traces = evaluate(&questions, &engine, &modes);
    let report = compute_metrics(&traces, &questions);
    let mut groups = 0;
    for (name, m) in &report.modes {
        for (label, g) in std::iter::once(("all", &m.overall)).chain(m.by_category.iter().map(|(k, v)| (k.as_str(), v)))
        {
            if let (Some(f1), Some(sr)) = (g.f1, g.success_rate) {
                ensure(f1 <= sr, || format!("{name}/{label}: f1 {f1} > success {sr}"))?;
                groups += 1;
            }
        }
    }
    let top1 = questions
        .iter()
        .find(|q| engine.run(&q.q_nl).qis.rank_of_canonical(&q.canonical) == Some(1))
        .ok_or("no question with gold at top-1")?;
    let single = compute_metrics(
        &evaluate(std::slice::from_ref(top1), &engine, &[Mode::Og]),
        std::slice::from_ref(top1),
    );
    let c = single.modes["og"].overall.cost_mean;
    ensure(c == Some(1.0), || format!("immediate accept reports cost {c:?}"))?;
    Ok(format!(
        "f1 <= success_rate in {groups} groups, immediate accept costs exactly 1"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("information theory", information_theory),
        ("option gain contract", option_gain_contract),
        ("greedy vs brute force", greedy_vs_brute_force),
        ("oracle consistency", oracle_consistency),
        ("baseline dominance", baseline_dominance),
        ("query evaluator equivalence", evaluator_equivalence),
        ("canonicalization", canonicalization),
        ("running example end to end", running_example),
        ("metric definitions", metric_definitions),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
