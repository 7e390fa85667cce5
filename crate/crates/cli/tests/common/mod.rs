//! Fixtures shared by the CLI test targets: planted studies written to disk
//! in the extractor's layout, and a runner for the built binary.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modalgauge_core::embed_io::write_task;
use modalgauge_core::measures::iimm;
use modalgauge_core::synth::{outcome_table, planted_task};
use modalgauge_core::transfer::write_outcomes_csv;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modalgauge"));
    c.env_remove("MODALGAUGE_THREADS").env_remove("RUST_LOG");
    c
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    bin().args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Nine (or more) planted tasks for one model with gains following a known line.
pub struct Study {
    pub dir: PathBuf,
    pub manifests: Vec<PathBuf>,
    pub tasks: Vec<String>,
    pub iimm: Vec<f64>,
    pub gains: Vec<f64>,
    pub outcomes: PathBuf,
    /// Manifest of an extra task that is not in the outcomes table.
    pub held_out: PathBuf,
    pub held_out_iimm: f64,
}

pub struct StudySpec {
    pub seed: u64,
    pub n_tasks: usize,
    pub n_images: usize,
    pub n_classes: usize,
    pub dim: usize,
    pub slope: f64,
    pub intercept: f64,
    pub noise_sd: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self { seed: 0, n_tasks: 9, n_images: 80, n_classes: 8, dim: 24, slope: 1.4, intercept: -0.2, noise_sd: 0.02 }
    }
}

pub fn write_study(dir: &Path, spec: &StudySpec) -> Study {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tasks: Vec<String> = (0..spec.n_tasks).map(|i| format!("task{i}")).collect();
    let mut manifests = Vec::new();
    let mut values = Vec::new();
    for (i, name) in tasks.iter().enumerate() {
        // Concentrations spread over [0, 2] keep planted gains inside [-0.2, 0.9].
        let c = 2.0 * i as f32 / (spec.n_tasks - 1) as f32 + rng.gen_range(-0.05..0.05);
        let t = planted_task(&mut rng, name, "clip", spec.n_images, spec.n_classes, spec.dim, c.max(0.0));
        values.push(iimm(&t).unwrap());
        manifests.push(write_task(dir, &t, Some("a photo of a {}.")).unwrap());
    }
    let c = rng.gen_range(0.4..1.6);
    let held = planted_task(&mut rng, "heldout", "clip", spec.n_images, spec.n_classes, spec.dim, c);
    let held_out_iimm = iimm(&held).unwrap();
    let held_out = write_task(dir, &held, None).unwrap();

    let noise = Normal::new(0.0, spec.noise_sd).unwrap();
    let gains: Vec<f64> = values.iter().map(|x| spec.slope * x + spec.intercept + noise.sample(&mut rng)).collect();
    let records = outcome_table(&mut rng, "clip", &tasks, &gains);
    let outcomes = dir.join("outcomes.csv");
    write_outcomes_csv(&records, fs::File::create(&outcomes).unwrap()).unwrap();
    Study { dir: dir.to_path_buf(), manifests, tasks, iimm: values, gains, outcomes, held_out, held_out_iimm }
}

/// `measure` over every training manifest of the study, written as CSV.
pub fn measure_study(study: &Study, measures: &str, extra: &[&str]) -> (PathBuf, Output) {
    let out = study.dir.join("measures.csv");
    let mut args: Vec<String> = vec!["measure".into(), "--measures".into(), measures.into()];
    args.extend(["--format".into(), "csv".into(), "--out".into(), out.display().to_string()]);
    args.push("--manifest".into());
    args.extend(study.manifests.iter().map(|m| m.display().to_string()));
    args.extend(extra.iter().map(|s| s.to_string()));
    let o = run(&args);
    (out, o)
}
