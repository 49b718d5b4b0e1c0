//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use som_cwm::checker::ReportRecord;
use som_cwm::datasets::three_clusters;
use som_cwm::global::{default_concept_pool, CheckStatus, PropertyReport};
use som_cwm::som::feature_ranges;
use som_cwm::{
    check_strict, check_typicality, extract_kb, parse_kb, run_trace, ConceptExpr, CwmModel,
    Inclusion, SemanticModel, SomMap, SpecificityRelation, Stimulus, TrainConfig,
};

/// Quantisation error of the reference run before and after training,
/// recorded once and frozen.
const REFERENCE_INITIAL_QE: f64 = 6.62304047532606;
const REFERENCE_FINAL_QE: f64 = 0.24297933861946705;
const QE_REL_TOL: f64 = 1e-9;

fn reference_config() -> TrainConfig<f64> {
    TrainConfig {
        epochs: 50,
        lr_start: 0.5,
        lr_end: 0.01,
        radius_start: 3.0,
        radius_end: 0.5,
        seed: 42,
        shuffle: true,
    }
}

fn reference_data() -> Vec<Stimulus<f64>> {
    three_clusters(42)
}

fn untrained(data: &[Stimulus<f64>], rows: usize, cols: usize, seed: u64) -> SomMap<f64> {
    let ranges = feature_ranges(data).unwrap();
    SomMap::init(rows, cols, ranges.len(), seed, &ranges).unwrap()
}

/// Reference 6x6 map trained for 50 epochs, with its QE log.
fn reference_map() -> (SomMap<f64>, f64, Vec<f64>) {
    let data = reference_data();
    let mut map = untrained(&data, 6, 6, 42);
    let initial = map.quantization_error(&data).unwrap();
    let log = map.train(&data, &reference_config()).unwrap();
    (map, initial, log)
}

/// The reference model plus models of seeded random datasets on small maps.
fn test_models() -> Vec<SemanticModel<f64>> {
    let data = reference_data();
    let (map, _, _) = reference_map();
    let mut models = vec![SemanticModel::build(&map, &data, &[]).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for m in 0..12 {
        let n = rng.random_range(1..30);
        let labels = ["A", "B", "C"];
        let data: Vec<Stimulus<f64>> = (0..n)
            .map(|i| {
                let f = vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
                Stimulus::new(format!("s{i}"), f, labels[rng.random_range(0..3)])
            })
            .collect();
        let mut map = untrained(&data, rng.random_range(1..5), rng.random_range(1..5), m);
        let cfg = TrainConfig {
            epochs: rng.random_range(0..6),
            seed: m,
            ..reference_config()
        };
        map.train(&data, &cfg).unwrap();
        models.push(SemanticModel::build(&map, &data, &[]).unwrap());
    }
    models
}

fn random_cwm_models() -> Vec<(common::RandomModel, CwmModel<f64>)> {
    common::random_models(2024, 100)
        .into_iter()
        .map(|m| {
            let cwm = CwmModel::build(m.model(), m.specificity()).unwrap();
            (m, cwm)
        })
        .collect()
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_bmu_zero() -> Outcome {
    let data = reference_data();
    let (map, _, _) = reference_map();
    let model = SemanticModel::build(&map, &data, &[]).unwrap();
    for link in model.links() {
        let weights = &map.unit(link.bmu_unit).weights;
        let rd = model.relative_distance_of(weights, &link.label).unwrap();
        let rd_elem = model
            .relative_distance(link.bmu_element, &link.label)
            .unwrap();
        ensure(rd == 0.0 && rd_elem == 0.0, || {
            format!("rd(BMU of {}, {}) = {rd}", link.id, link.label)
        })?;
    }
    Ok(format!("{} stimuli, 3 categories", model.links().len()))
}

fn c2_typical_containment() -> Outcome {
    let models = test_models();
    let mut checked = 0;
    for (i, model) in models.iter().enumerate() {
        for c in model.categories() {
            let minimal: BTreeSet<usize> = c
                .extension
                .iter()
                .copied()
                .filter(|&x| !c.extension.iter().any(|&z| c.rd[z] < c.rd[x]))
                .collect();
            ensure(c.bmu_elements.is_subset(&minimal), || {
                format!("model {i}: BMU_{} not within min_<{}", c.name, c.name)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} categories over {} models", models.len()))
}

fn c3_reflexive_checks() -> Outcome {
    let models = test_models();
    let mut pairs = 0;
    for (i, model) in models.iter().enumerate() {
        let names: Vec<&str> = model.category_names().collect();
        for &a in &names {
            ensure(check_typicality(model, a, a).unwrap().holds(), || {
                format!("model {i}: T({a}) <= {a}")
            })?;
            ensure(check_strict(model, a, a).unwrap().holds(), || {
                format!("model {i}: {a} <= {a}")
            })?;
            for &b in &names {
                let strict = check_strict(model, a, b).unwrap().holds();
                let typ = check_typicality(model, a, b).unwrap().holds();
                ensure(!strict || typ, || {
                    format!("model {i}: {a} <= {b} without T({a}) <= {b}")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "{pairs} ordered pairs over {} models",
        models.len()
    ))
}

fn c4_oracle_equivalence() -> Outcome {
    let mut pairs = 0usize;
    for (i, (m, cwm)) in random_cwm_models().iter().enumerate() {
        let oracle = common::brute_force_relation(m);
        for (x, row) in oracle.iter().enumerate() {
            for (y, &expected) in row.iter().enumerate() {
                ensure(cwm.prefers(x, y) == expected, || {
                    format!("model {i}: pair ({x}, {y})")
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} ordered pairs over 100 models"))
}

fn c5_order_axioms() -> Outcome {
    let mut triples = 0usize;
    for (i, (m, cwm)) in random_cwm_models().iter().enumerate() {
        let n = m.ids.len();
        for x in 0..n {
            ensure(!cwm.prefers(x, x), || format!("model {i}: {x} < {x}"))?;
            for y in 0..n {
                for z in 0..n {
                    if cwm.prefers(x, y) && cwm.prefers(y, z) {
                        ensure(cwm.prefers(x, z), || {
                            format!("model {i}: {x} < {y} < {z} but not {x} < {z}")
                        })?;
                    }
                    triples += 1;
                }
            }
        }
    }
    Ok(format!("{triples} triples over 100 models"))
}

fn c6_klm() -> Outcome {
    let required = [
        "reflexivity",
        "left_logical_equivalence",
        "right_weakening",
        "and",
        "cautious_monotonicity",
    ];
    let mut instances = 0;
    for (i, (_, cwm)) in random_cwm_models().iter().enumerate() {
        let report = cwm.verify_klm(&default_concept_pool(cwm.base())).unwrap();
        for name in required {
            let c = report.get(name).unwrap();
            ensure(
                c.status == CheckStatus::Pass && c.violations.is_empty(),
                || format!("model {i}: {name}: {:?}", c.violations.first()),
            )?;
            instances += c.checked;
        }
    }
    Ok(format!("{instances} postulate instances over 100 models"))
}

fn c7_bob_mary() -> Outcome {
    // mary <_Student bob, bob <_PhDStudent mary, ties elsewhere
    let model = SemanticModel::<f64>::from_rd_tables(
        vec!["bob".into(), "mary".into()],
        vec![
            ("Student".into(), vec![0.4, 0.1], 1.0),
            ("PhDStudent".into(), vec![0.1, 0.4], 1.0),
            ("Employee".into(), vec![0.3, 0.3], 1.0),
        ],
    )
    .unwrap();
    let spec = SpecificityRelation::from_pairs([("PhDStudent", "Student")]).unwrap();
    let cwm = CwmModel::build(model, spec).unwrap();
    let bob = cwm.base().element_index("bob").unwrap();
    let mary = cwm.base().element_index("mary").unwrap();
    ensure(cwm.prefers(bob, mary), || "bob < mary does not hold".into())?;
    ensure(!cwm.prefers(mary, bob), || "mary < bob holds".into())?;
    Ok("bob < mary, not mary < bob".into())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= QE_REL_TOL * b.abs()
}

fn c8_learning() -> Outcome {
    let (_, initial, log) = reference_map();
    let last = *log.last().unwrap();
    ensure(log.len() == 50, || format!("{} QE entries", log.len()))?;
    ensure(
        close(initial, REFERENCE_INITIAL_QE) && close(last, REFERENCE_FINAL_QE),
        || {
            format!(
                "QE {initial} -> {last}, recorded {REFERENCE_INITIAL_QE} -> {REFERENCE_FINAL_QE}"
            )
        },
    )?;
    ensure(last <= 0.5 * initial, || format!("QE {initial} -> {last}"))?;
    Ok(format!("QE {initial:.6} -> {last:.6}"))
}

fn c9_trace() -> Outcome {
    let data = reference_data();
    let cfg = TrainConfig {
        epochs: 10,
        ..reference_config()
    };
    let trace = run_trace(untrained(&data, 6, 6, 42), &data, &cfg).unwrap();
    let bottom = |c: &str| Inclusion::strict(ConceptExpr::name(c), ConceptExpr::Bot);
    let first = &trace.steps[0];
    for c in ["A", "B", "C"] {
        ensure(first.kb_before.contains(&bottom(c)), || {
            format!("{c} <= Bot missing initially")
        })?;
    }
    let mut pending: BTreeSet<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    for step in &trace.steps {
        let label = &step.stimulus.label;
        if pending.remove(label) {
            ensure(step.removed.contains(&bottom(label)), || {
                format!("step {}: {label} <= Bot not removed", step.step_index)
            })?;
        }
        ensure(!step.kb_after.contains(&bottom(label)), || {
            format!(
                "step {}: {label} <= Bot holds after a {label} stimulus",
                step.step_index
            )
        })?;
    }
    let mut batch = untrained(&data, 6, 6, 42);
    batch.train(&data, &cfg).unwrap();
    ensure(trace.state.map() == &batch, || {
        "trace map differs from batch map".into()
    })?;
    let batch_kb = extract_kb(&SemanticModel::build(&batch, &data, &[]).unwrap()).satisfied();
    let last = trace.steps.last().unwrap();
    ensure(last.kb_after == batch_kb, || {
        format!(
            "final kb differs: {:?}",
            last.kb_after
                .symmetric_difference(&batch_kb)
                .collect::<Vec<_>>()
        )
    })?;
    Ok(format!(
        "{} steps, final kb of {} inclusions",
        trace.steps.len(),
        batch_kb.len()
    ))
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_som-cwm"))
        .args(args)
        .output()
        .unwrap()
}

fn cli_ok(args: &[&str]) -> Result<(), String> {
    let out = cli(args);
    ensure(out.status.success(), || {
        format!(
            "`{}` exited {:?}: {}",
            args[0],
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn write_csv(path: &Path, data: &[Stimulus<f64>]) {
    let mut text = String::from("x,y,label\n");
    for s in data {
        text.push_str(&format!(
            "{},{},{}\n",
            s.features[0], s.features[1], s.label
        ));
    }
    std::fs::write(path, text).unwrap();
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyJson {
    ok: bool,
    specificity: Vec<(String, String)>,
    preferential: PropertyReport,
    klm: PropertyReport,
}

fn c10_cli_pipeline() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    write_csv(&d("data.csv"), &reference_data());
    let data = s(&d("data.csv"));
    for run in ["run1", "run2"] {
        cli_ok(&[
            "train",
            "--data",
            &data,
            "--out",
            &s(&d(run)),
            "--seed",
            "7",
            "--epochs",
            "20",
        ])?;
    }
    let map_text = read(&d("run1/map.json"));
    ensure(
        map_text.as_bytes() == read(&d("run2/map.json")).as_bytes(),
        || "map snapshots differ".into(),
    )?;
    ensure(read(&d("run1/qe.csv")) == read(&d("run2/qe.csv")), || {
        "QE logs differ".into()
    })?;
    cli_ok(&[
        "extract",
        "--map",
        &s(&d("run1/map.json")),
        "--data",
        &data,
        "--out",
        &s(&d("ex")),
    ])?;
    cli_ok(&[
        "verify",
        "--model",
        &s(&d("ex/model.json")),
        "--out",
        &s(&d("ex")),
    ])?;

    let map = SomMap::<f64>::from_json(&map_text).map_err(|e| e.to_string())?;
    ensure(map.to_json() == map_text, || {
        "map.json does not re-serialise identically".into()
    })?;
    let model_text = read(&d("ex/model.json"));
    let model = SemanticModel::<f64>::from_json(&model_text).map_err(|e| e.to_string())?;
    ensure(model.to_json() == model_text, || {
        "model.json does not re-serialise identically".into()
    })?;
    let spec_text = read(&d("ex/specificity.json"));
    let spec = SpecificityRelation::from_json(&spec_text).map_err(|e| e.to_string())?;
    ensure(spec.to_json() == spec_text, || {
        "specificity.json does not re-serialise identically".into()
    })?;
    for line in read(&d("ex/reports.jsonl")).lines() {
        let r: ReportRecord<f64> = serde_json::from_str(line).map_err(|e| e.to_string())?;
        ensure(serde_json::to_string(&r).unwrap() == line, || {
            format!("report line changed: {line}")
        })?;
    }
    let kb: BTreeSet<Inclusion> = parse_kb(&read(&d("ex/kb.txt")))
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect();
    ensure(kb == extract_kb(&model).satisfied(), || {
        "kb.txt differs from the model's kb".into()
    })?;
    let verify: VerifyJson =
        serde_json::from_str(&read(&d("ex/verify.json"))).map_err(|e| e.to_string())?;
    ensure(
        verify.ok && verify.preferential.ok() && verify.klm.ok(),
        || "verify reported violations".into(),
    )?;
    ensure(
        verify.specificity == spec.pairs().iter().cloned().collect::<Vec<_>>(),
        || "verify specificity differs".into(),
    )?;
    Ok("byte-identical map.json; map, model, specificity, reports, kb and verify re-read losslessly".into())
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (
            1,
            "BMU-zero property",
            Some(Duration::from_secs(1)),
            c1_bmu_zero,
        ),
        (
            2,
            "typical-set containment",
            Some(Duration::from_secs(1)),
            c2_typical_containment,
        ),
        (3, "reflexive checks", None, c3_reflexive_checks),
        (
            4,
            "global-preference oracle equivalence",
            Some(Duration::from_secs(30)),
            c4_oracle_equivalence,
        ),
        (5, "order axioms", None, c5_order_axioms),
        (6, "KLM suite", Some(Duration::from_secs(60)), c6_klm),
        (7, "bob/mary reproduction", None, c7_bob_mary),
        (
            8,
            "SOM learning sanity",
            Some(Duration::from_secs(10)),
            c8_learning,
        ),
        (
            9,
            "revision-trace coherence",
            Some(Duration::from_secs(10)),
            c9_trace,
        ),
        (10, "CLI determinism and round-trip", None, c10_cli_pipeline),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
