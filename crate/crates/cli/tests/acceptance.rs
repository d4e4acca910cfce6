//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Data-dependent criteria look for files under `data/`
//! (overridable through the environment) and fail when the data is absent.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use binreg::branch_bound::{brute_force_oracle, solve, SolveConfig, SolveStatus};
use binreg::dataset::{corrupt_labels, CorruptionSpec};
use binreg::emitters::{
    lp_string, mps_string, parse_lp, parse_mps, weights_pgm, PIXEL_POSITIVE, PIXEL_ZERO,
};
use binreg::encoder::{
    build_mip, build_pbo, decode_values, default_bounds, margin_slacks, TrainedModel,
};
use binreg::evaluator::{accuracy, margin};
use binreg::model_ir::ModelIR;
use binreg::ratio::Rational;
use binreg::suite::{oracle_variables, tiny_suite, TinyInstance};
use binreg_cli::{
    cmd_render, cmd_train, DataSource, RunConfig, MODEL_FILE, TEST_REPORT_FILE, TRAIN_REPORT_FILE,
};
use common::{check_opb, fixture};
use rand::Rng;

const SUITE_SIZE: usize = 24;
const ORACLE_BUDGET_SECS: f64 = 60.0;
const DESK_LIMIT_SECS: u64 = 600;
const MNIST_LIMIT_SECS: u64 = 3600;
const MNIST_MIN_TEST_ACCURACY: f64 = 0.30;
const ROUND_TRIP_ASSIGNMENTS: usize = 100;
const CORRUPTION: (i64, i64) = (1, 10);

fn workspace() -> PathBuf {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

fn data_path(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var).map_or_else(|| workspace().join(default), PathBuf::from)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

fn quiet(time_limit_secs: f64) -> SolveConfig {
    SolveConfig {
        time_limit_secs,
        log_interval_secs: None,
        ..SolveConfig::default()
    }
}

struct Solved {
    inst: TinyInstance,
    mip: ModelIR,
    mip_objective: Option<i64>,
    mip_status: SolveStatus,
    oracle_objective: i64,
    oracle_assignment: Vec<i64>,
    layout: binreg::encoder::EncodingLayout,
}

fn solve_suite() -> (Vec<Solved>, f64) {
    let start = Instant::now();
    let solved = tiny_suite(SUITE_SIZE)
        .into_iter()
        .map(|inst| {
            let (mip, layout) = build_mip(&inst.train, &inst.hp).unwrap();
            let result = solve(&mip, &quiet(60.0));
            let oracle = brute_force_oracle(&mip, &oracle_variables(&layout))
                .unwrap()
                .expect("the all-zero classifier is feasible");
            Solved {
                mip_objective: result.objective,
                mip_status: result.status,
                oracle_objective: oracle.objective,
                oracle_assignment: oracle.assignment,
                inst,
                mip,
                layout,
            }
        })
        .collect();
    (solved, start.elapsed().as_secs_f64())
}

fn oracle_equivalence(solved: &[Solved], secs: f64) -> Outcome {
    let mismatches: Vec<u64> = solved
        .iter()
        .filter(|s| {
            s.mip_status != SolveStatus::Optimal || s.mip_objective != Some(s.oracle_objective)
        })
        .map(|s| s.inst.seed)
        .collect();
    let detail = format!(
        "{} instances, {} mismatches {mismatches:?}, {secs:.1}s",
        solved.len(),
        mismatches.len()
    );
    if mismatches.is_empty() && secs < ORACLE_BUDGET_SECS {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn pbo_agreement(solved: &[Solved]) -> Outcome {
    let mut mismatches = Vec::new();
    for s in solved {
        let (pbo, _) =
            build_pbo(&s.inst.train, &s.inst.hp, &default_bounds(&s.inst.train)).unwrap();
        let r = solve(&pbo, &quiet(60.0));
        if !pbo.all_binary() || r.status != SolveStatus::Optimal || r.objective != s.mip_objective {
            mismatches.push(s.inst.seed);
        }
    }
    let detail = format!("{} instances, mismatches {mismatches:?}", solved.len());
    if mismatches.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn complementarity(solved: &[Solved]) -> Outcome {
    let mut checked = 0;
    for s in solved {
        let trained = decode_values(&s.layout, &s.oracle_assignment);
        let slacks = margin_slacks(&s.layout, &s.oracle_assignment);
        for (inst, (ep, em)) in s.inst.train.instances().iter().zip(slacks) {
            let m = margin(&trained, &inst.x, inst.label).unwrap();
            if (ep, em) != (m.max(0), (-m).max(0)) {
                return fail(format!(
                    "seed {}: margin {m}, slacks ({ep}, {em})",
                    s.inst.seed
                ));
            }
            checked += 1;
        }
    }
    pass(format!(
        "{checked} instances across {} problems",
        solved.len()
    ))
}

fn desk_run(name: &str, csv: &Path, out: &Path) -> Result<String, String> {
    if !csv.exists() {
        return Err(format!("{name}: {} not found", csv.display()));
    }
    let mut cfg = RunConfig::new(
        DataSource::Csv {
            csv: csv.to_path_buf(),
        },
        10,
        out.join(name),
    );
    cfg.alpha = Rational::from_integer(2);
    cfg.beta = Some(Rational::from_integer(5));
    cfg.time_limit_secs = DESK_LIMIT_SECS;
    let outcome = cmd_train(&cfg).map_err(|e| format!("{name}: {e}"))?;
    let r = &outcome.result;
    let reduction = outcome.train_report.as_ref().map(|t| t.reduction_pct);
    let ok = r.objective.is_some()
        && r.gap == 0.0
        && reduction.is_some_and(|p| (0.0..=100.0).contains(&p));
    let line = format!(
        "{name} gap {} reduction {reduction:?} {:.1}s",
        r.gap, r.runtime_secs
    );
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn desk_scale(out: &Path) -> Outcome {
    let runs = [
        desk_run(
            "flags",
            &data_path("BINREG_FLAGS_CSV", "data/flags.csv"),
            out,
        ),
        desk_run(
            "askubuntu",
            &data_path("BINREG_ASKUBUNTU_CSV", "data/askubuntu.csv"),
            out,
        ),
    ];
    let detail = runs
        .iter()
        .map(|r| r.as_ref().unwrap_or_else(|e| e).clone())
        .collect::<Vec<_>>()
        .join("; ");
    if runs.iter().all(Result::is_ok) {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn mnist(out: &Path) -> Outcome {
    let dir = data_path("BINREG_MNIST_DIR", "data/mnist");
    let images = dir.join("images-idx3-ubyte.gz");
    let labels = dir.join("labels-idx1-ubyte.gz");
    if !images.exists() || !labels.exists() {
        return fail(format!("MNIST IDX files not found in {}", dir.display()));
    }
    let mut cfg = RunConfig::new(DataSource::Idx { images, labels }, 20, out.join("mnist"));
    cfg.alpha = Rational::from_integer(5);
    cfg.beta = Some(Rational::from_integer(10));
    cfg.threshold = Rational::new(255, 2);
    cfg.time_limit_secs = MNIST_LIMIT_SECS;
    let outcome = match cmd_train(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let r = &outcome.result;
    let Some(test) = &outcome.test_report else {
        return fail(format!("no incumbent, status {:?}", r.status));
    };
    let monotone = r.trace.windows(2).all(|w| {
        let inc = match (w[0].incumbent, w[1].incumbent) {
            (Some(a), Some(b)) => b <= a,
            (Some(_), None) => false,
            _ => true,
        };
        inc && w[1].bound >= w[0].bound
    });
    let detail = format!(
        "status {:?}, gap {:.6}, {:.1}s, test accuracy {:.4}, monotone trace {monotone}",
        r.status, r.gap, r.runtime_secs, test.accuracy
    );
    let proven = r.status == SolveStatus::Optimal && r.gap == 0.0;
    if test.accuracy >= MNIST_MIN_TEST_ACCURACY && (proven || monotone) {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn corruption(solved: &[Solved]) -> Outcome {
    let fraction = Rational::new(CORRUPTION.0, CORRUPTION.1);
    let (mut clean_acc, mut noisy_acc) = (0.0, 0.0);
    for s in solved {
        let k = s.inst.train.len() as i64;
        let expected = ((CORRUPTION.0 * k * 2 + CORRUPTION.1) / (2 * CORRUPTION.1)) as usize;
        let noisy = corrupt_labels(
            &s.inst.train,
            CorruptionSpec {
                fraction,
                seed: s.inst.seed,
            },
        )
        .unwrap();
        let changed = s
            .inst
            .train
            .labels()
            .zip(noisy.labels())
            .filter(|(a, b)| a != b)
            .count();
        if changed != expected {
            return fail(format!(
                "seed {}: {changed} labels changed, expected {expected}",
                s.inst.seed
            ));
        }
        let (model, layout) = build_mip(&noisy, &s.inst.hp).unwrap();
        let r = solve(&model, &quiet(60.0));
        if r.status != SolveStatus::Optimal {
            return fail(format!("seed {}: status {:?}", s.inst.seed, r.status));
        }
        let noisy_model = decode_values(&layout, r.incumbent.as_ref().unwrap());
        let clean_model = decode_values(&s.layout, &s.oracle_assignment);
        clean_acc += accuracy(&clean_model, &s.inst.train).unwrap().accuracy;
        noisy_acc += accuracy(&noisy_model, &s.inst.train).unwrap().accuracy;
    }
    let n = solved.len() as f64;
    pass(format!(
        "{} problems optimal; mean clean-label train accuracy {:.4} uncorrupted vs {:.4} corrupted",
        solved.len(),
        clean_acc / n,
        noisy_acc / n
    ))
}

fn assignments_agree(
    original: &ModelIR,
    parsed: &ModelIR,
    rng: &mut impl Rng,
) -> Result<(), String> {
    if parsed.num_vars() != original.num_vars() {
        return Err(format!(
            "{} variables, expected {}",
            parsed.num_vars(),
            original.num_vars()
        ));
    }
    let order: Vec<usize> = original
        .variables()
        .iter()
        .map(|v| {
            parsed
                .var_by_name(&v.name)
                .map(|id| id.index())
                .ok_or(v.name.clone())
        })
        .collect::<Result<_, _>>()?;
    for _ in 0..ROUND_TRIP_ASSIGNMENTS {
        let values: Vec<i64> = original
            .variables()
            .iter()
            .map(|v| rng.gen_range(v.lower..=v.upper))
            .collect();
        let mut mapped = vec![0; values.len()];
        for (j, &p) in order.iter().enumerate() {
            mapped[p] = values[j];
        }
        let a = original
            .evaluate_dense(&values)
            .map_err(|e| e.to_string())?;
        let b = parsed.evaluate_dense(&mapped).map_err(|e| e.to_string())?;
        if (a.objective, a.feasible, a.violated.len())
            != (b.objective, b.feasible, b.violated.len())
        {
            return Err(format!("evaluation differs: {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

fn round_trips(solved: &[Solved]) -> Outcome {
    let mut rng = binreg::dataset::rng_from_seed(7);
    let model = &solved.iter().max_by_key(|s| s.mip.num_vars()).unwrap().mip;
    let lp = parse_lp(&lp_string(model), Path::new("model.lp")).map_err(|e| e.to_string());
    let mps = parse_mps(&mps_string(model), Path::new("model.mps")).map_err(|e| e.to_string());
    for (format, parsed) in [("LP", lp), ("MPS", mps)] {
        if let Err(e) = parsed.and_then(|p| assignments_agree(model, &p, &mut rng)) {
            return fail(format!("{format}: {e}"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let opb = dir.path().join("toy.opb");
    let mut cfg = RunConfig::new(
        DataSource::Csv {
            csv: fixture("toy.csv"),
        },
        3,
        dir.path(),
    );
    cfg.mode = binreg_cli::Mode::Pbo;
    if let Err(e) = binreg_cli::cmd_export(&cfg, binreg_cli::Format::Opb, &opb) {
        return fail(e.to_string());
    }
    let text = std::fs::read_to_string(&opb).unwrap();
    let golden = std::fs::read_to_string(fixture("toy.opb")).unwrap();
    if text != golden {
        return fail("OPB output differs from golden file");
    }
    if let Err(e) = check_opb(&text) {
        return fail(format!("OPB grammar: {e}"));
    }
    pass(format!(
        "LP and MPS preserve evaluation on {ROUND_TRIP_ASSIGNMENTS} assignments each ({} variables); OPB matches golden and grammar",
        model.num_vars()
    ))
}

fn write_synthetic(path: &Path) {
    let mut text = String::new();
    for i in 0..40u32 {
        let x: Vec<u32> = (0..6).map(|f| (i * 5 + f * 3 + i / 7) % 2).collect();
        let label = (x[0] + x[2] + 2 * x[4] + i % 5 / 4) % 3;
        for v in &x {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{label}\n"));
    }
    std::fs::write(path, text).unwrap();
}

fn determinism(out: &Path) -> Outcome {
    let csv = out.join("synthetic.csv");
    write_synthetic(&csv);
    let run = |name: &str| -> Result<PathBuf, String> {
        let dir = out.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_binreg"))
            .args([
                "train",
                "--k",
                "15",
                "--seed",
                "3",
                "--corrupt",
                "0.1",
                "--csv",
            ])
            .arg(&csv)
            .arg("--out")
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if status.success() {
            Ok(dir)
        } else {
            Err(format!("train exited with {status}"))
        }
    };
    let (a, b) = match (run("det_a"), run("det_b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    for file in [MODEL_FILE, TRAIN_REPORT_FILE, TEST_REPORT_FILE] {
        if std::fs::read(a.join(file)).ok() != std::fs::read(b.join(file)).ok() {
            return fail(format!("{file} differs between runs"));
        }
    }
    pass("model JSON and both reports byte-identical across two runs")
}

fn rendering(out: &Path) -> Outcome {
    let mut rng = binreg::dataset::rng_from_seed(11);
    let random = TrainedModel {
        feature_count: 784,
        class_count: 10,
        weights: (0..784)
            .map(|_| (0..10).map(|_| rng.gen_range(-1..=1)).collect())
            .collect(),
        bias: vec![0; 10],
    };
    let path = out.join("random_model.json");
    binreg::emitters::save_model(&random, &path).unwrap();
    let paths = match cmd_render(&path, 28, 28, &out.join("pgm")) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    if paths.len() != 10 {
        return fail(format!("{} images", paths.len()));
    }
    for p in &paths {
        let bytes = std::fs::read(p).unwrap();
        let Some(pixels) = bytes.strip_prefix(b"P5\n28 28\n255\n") else {
            return fail(format!("{}: bad header", p.display()));
        };
        if pixels.len() != 784 || !pixels.iter().all(|b| [0, 128, 255].contains(b)) {
            return fail(format!("{}: bad pixel data", p.display()));
        }
    }
    let (row, col, class) = (5, 17, 3);
    let mut single = TrainedModel {
        feature_count: 784,
        class_count: 10,
        weights: vec![vec![0; 10]; 784],
        bias: vec![0; 10],
    };
    single.weights[row * 28 + col][class] = 1;
    for c in 0..10 {
        let pixels = weights_pgm(&single, c, 28, 28).unwrap();
        let pixels = &pixels[pixels.len() - 784..];
        for (i, &p) in pixels.iter().enumerate() {
            let expected = if c == class && i == row * 28 + col {
                PIXEL_POSITIVE
            } else {
                PIXEL_ZERO
            };
            if p != expected {
                return fail(format!("class {c} pixel {i}: {p}, expected {expected}"));
            }
        }
    }
    pass("ten 28x28 P5 images over {0,128,255}; single +1 weight lands on its pixel")
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let out = tempfile::tempdir().unwrap();
    let (solved, secs) = solve_suite();
    let criteria: Vec<(&str, Check)> = vec![
        (
            "oracle equivalence",
            Box::new(|| oracle_equivalence(&solved, secs)),
        ),
        (
            "MIP and PBO optima agree",
            Box::new(|| pbo_agreement(&solved)),
        ),
        (
            "margin slack complementarity",
            Box::new(|| complementarity(&solved)),
        ),
        (
            "desk-scale datasets reach gap 0",
            Box::new(|| desk_scale(out.path())),
        ),
        ("MNIST k=20", Box::new(|| mnist(out.path()))),
        ("label corruption", Box::new(|| corruption(&solved))),
        ("format round trips", Box::new(|| round_trips(&solved))),
        ("determinism", Box::new(|| determinism(out.path()))),
        ("rendering", Box::new(|| rendering(out.path()))),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            n + 1,
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
