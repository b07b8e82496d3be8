//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and fails if any hard criterion fails. Run with `--nocapture` to see the
//! report.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cgp_smbo::evolution::{mutate, randomize_inactive};
use cgp_smbo::smbo::SearchMode;
use cgp_smbo::surrogate::{expected_improvement, fit, ThetaBounds};
use cgp_smbo::task::{adjusted_accuracy, Dataset};
use cgp_smbo::{distance::distance_matrix, DistanceKind, Genome, GenomeConfig};
use cgp_smbo_harness::config::{ConfigValues, DistanceTag, Method};
use cgp_smbo_harness::experiment::{run_experiment, RunRecord};
use cgp_smbo_harness::samples::PdSource;
use cgp_smbo_harness::summary::{final_values, summarize};
use cgp_smbo_harness::load_iris;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const REPLICATIONS: usize = 15;
const BASE_SEED: u64 = 1000;

fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

struct Report {
    hard_failures: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, name: &'static str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.hard_failures.push(name);
        }
    }

    fn warning(&mut self, name: &'static str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL (warning only)" };
        println!("{tag} {name}: {detail}");
    }
}

fn distance_axioms(data: &Dataset) -> (bool, String) {
    let start = Instant::now();
    let config = GenomeConfig::iris();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kinds = [
        DistanceKind::Genotypic,
        DistanceKind::GenotypicId,
        DistanceKind::phenotypic(data.features().clone()).unwrap(),
    ];
    let mut violations = Vec::new();
    for kind in &kinds {
        for i in 0..200 {
            let a = Genome::random(&config, &mut rng);
            // Half unrelated pairs, half mutants at varying rates.
            let b = if i % 2 == 0 {
                Genome::random(&config, &mut rng)
            } else {
                let rate = rng.random_range(0.01..0.5);
                mutate(&a, rate, &mut rng)
            };
            let ab = kind.between(&a, &b).unwrap();
            let ba = kind.between(&b, &a).unwrap();
            let aa = kind.between(&a, &a).unwrap();
            if ab != ba || aa != 0.0 || !(0.0..=1.0 + 1e-12).contains(&ab) {
                violations.push(format!("{kind} pair {i}: d(a,b)={ab} d(b,a)={ba} d(a,a)={aa}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed < Duration::from_secs(30);
    let detail = format!(
        "200 pairs x 3 kinds, {} violations, {:.2} s (limit 30 s){}",
        violations.len(),
        elapsed.as_secs_f64(),
        violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
    );
    (pass, detail)
}

fn kriging_interpolation() -> (bool, String) {
    let start = Instant::now();
    let config = GenomeConfig::iris();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_error = 0.0f64;
    let mut worst_nugget = 0.0f64;
    for _ in 0..20 {
        let genomes: Vec<Genome> = (0..10).map(|_| Genome::random(&config, &mut rng)).collect();
        let d = distance_matrix(&genomes, &DistanceKind::Genotypic).unwrap();
        let y: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let model = fit(&d, &y, ThetaBounds::default()).unwrap();
        worst_nugget = worst_nugget.max(model.nugget());
        for (i, &yi) in y.iter().enumerate() {
            let p = model.predict(d.row(i)).unwrap();
            worst_error = worst_error.max((p.mean - yi).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_error <= 1e-4 && worst_nugget <= 1e-6 && elapsed < Duration::from_secs(10);
    let detail = format!(
        "20 archives of 10, max |mean - y| = {worst_error:.3e} (limit 1e-4), max nugget {worst_nugget:.0e} (limit 1e-6), {:.2} s (limit 10 s)",
        elapsed.as_secs_f64()
    );
    (pass, detail)
}

fn ei_oracle() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mean = rng.random_range(-1.0..1.0);
        let s: f64 = rng.random_range(0.01..0.25);
        let y_min = mean + rng.random_range(-2.0 * s..2.0 * s);
        let normal = Normal::new(mean, s).unwrap();
        let samples = 1_000_000;
        let mc: f64 = (0..samples)
            .map(|_| (y_min - normal.sample(&mut rng)).max(0.0))
            .sum::<f64>()
            / samples as f64;
        worst = worst.max((expected_improvement(mean, s * s, y_min) - mc).abs());
    }
    let zero_s = [(0.3, 0.5), (0.5, 0.3), (0.2, 0.2)]
        .iter()
        .all(|&(mean, y_min)| expected_improvement(mean, 0.0, y_min) == 0.0);
    let pass = worst <= 1e-3 && zero_s;
    (
        pass,
        format!("20 triples vs 1e6-sample Monte Carlo, max |diff| = {worst:.2e} (limit 1e-3); EI(s=0) = 0: {zero_s}"),
    )
}

fn budget_accounting(groups: &[(String, Vec<RunRecord>)]) -> (bool, String) {
    let mut problems = Vec::new();
    let mut iterations_checked = 0;
    for (label, records) in groups {
        let expected = if label.starts_with("cgpann") { 253 } else { 250 };
        for r in records {
            let Ok(o) = &r.outcome else {
                problems.push(format!("{label} seed {} failed", r.seed));
                continue;
            };
            if o.evaluations() != expected {
                problems.push(format!("{label} seed {}: {} evaluations", r.seed, o.evaluations()));
            }
            if label.starts_with("smbo") {
                if o.iterations.len() != 200 {
                    problems.push(format!("{label} seed {}: {} iterations", r.seed, o.iterations.len()));
                }
                for it in &o.iterations {
                    let expected = match it.mode {
                        SearchMode::Local => 410,
                        SearchMode::Global => 1400,
                    };
                    iterations_checked += 1;
                    if it.ei_evaluations != expected {
                        problems.push(format!("{label}: {} iteration used {} EI evaluations", it.mode, it.ei_evaluations));
                    }
                }
            }
        }
    }
    let detail = format!(
        "random 250, cgpann 253, smbo 250 true evaluations; {iterations_checked} smbo iterations at 410 (L) / 1400 (G) surrogate evaluations; {} problems{}",
        problems.len(),
        problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
    );
    (problems.is_empty(), detail)
}

fn experiment(values: ConfigValues, data: &Dataset) -> (String, Vec<RunRecord>) {
    let config = ConfigValues {
        replications: Some(REPLICATIONS),
        seed: Some(BASE_SEED),
        ..values
    }
    .resolve()
    .unwrap();
    let records = run_experiment(&config, data);
    (config.file_stem(), records)
}

fn method(method: Method) -> ConfigValues {
    ConfigValues {
        method: Some(method),
        ..Default::default()
    }
}

fn smbo(distance: DistanceTag, pd_samples: Option<PdSource>) -> ConfigValues {
    ConfigValues {
        distance: Some(distance),
        pd_samples,
        ..method(Method::Smbo)
    }
}

fn median_of(groups: &[(String, Vec<RunRecord>)], label: &str) -> f64 {
    let (_, records) = groups.iter().find(|(l, _)| l == label).unwrap();
    summarize(&final_values(records)).unwrap()[0].median
}

fn finals_of(groups: &[(String, Vec<RunRecord>)], label: &str) -> Vec<f64> {
    let (_, records) = groups.iter().find(|(l, _)| l == label).unwrap();
    records.iter().filter_map(|r| r.outcome.as_ref().ok().map(|o| o.final_fitness)).collect()
}

fn determinism(dir: &Path) -> (bool, String) {
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{"method": "smbo", "distance": "gidd", "budget": 60, "replications": 2, "seed": 77,
            "initial_size": 20, "global_starts": 200, "es_budget": 100}"#,
    )
    .unwrap();
    let run = |sub: &str, extra: &[&str]| {
        let out = dir.join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_cgp-smbo"))
            .args(["run", "--config", config.to_str().unwrap(), "--data", iris_path().to_str().unwrap()])
            .args(["--out", out.to_str().unwrap()])
            .args(extra)
            .status()
            .unwrap();
        assert!(status.success());
        out
    };
    let read = |dir: PathBuf, name: &str| std::fs::read(dir.join(name)).unwrap();
    let smbo_same = read(run("a", &[]), "smbo_gidd_trace.csv") == read(run("b", &[]), "smbo_gidd_trace.csv");
    let cgp_args = ["--method", "cgpann", "--mutation-rate", "0.15", "--budget", "250"];
    let cgp_dir = |sub: &str| {
        let out = dir.join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_cgp-smbo"))
            .args(["run", "--data", iris_path().to_str().unwrap(), "--reps", "3", "--seed", "5"])
            .args(["--out", out.to_str().unwrap()])
            .args(cgp_args)
            .status()
            .unwrap();
        assert!(status.success());
        out
    };
    let cgp_same = read(cgp_dir("c"), "cgpann_0.15_trace.csv") == read(cgp_dir("d"), "cgpann_0.15_trace.csv");
    (
        smbo_same && cgp_same,
        format!("repeated `run` invocations give byte-identical trace CSVs: smbo-gidd {smbo_same}, cgpann {cgp_same}"),
    )
}

fn inactive_invariance(data: &Dataset) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pd = DistanceKind::phenotypic(data.features().clone()).unwrap();
    let mut changed_genes = 0usize;
    let mut violations = 0;
    for _ in 0..100 {
        let g = Genome::random(&GenomeConfig::iris(), &mut rng);
        let h = randomize_inactive(&g, &mut rng);
        changed_genes += g.to_genes().iter().zip(h.to_genes()).filter(|(a, b)| **a != *b).count();
        if adjusted_accuracy(&g, data) != adjusted_accuracy(&h, data) || pd.between(&g, &h).unwrap() != 0.0 {
            violations += 1;
        }
    }
    (
        violations == 0 && changed_genes > 0,
        format!("100 genomes, {changed_genes} inactive genes changed, {violations} with changed fitness or PD"),
    )
}

#[test]
fn acceptance() {
    let data = load_iris(iris_path()).unwrap();
    let mut report = Report {
        hard_failures: Vec::new(),
    };

    let (pass, detail) = distance_axioms(&data);
    report.line("distance axioms", pass, detail);
    let (pass, detail) = kriging_interpolation();
    report.line("kriging interpolation", pass, detail);
    let (pass, detail) = ei_oracle();
    report.line("expected improvement oracle", pass, detail);

    let start = Instant::now();
    let groups: Vec<(String, Vec<RunRecord>)> = vec![
        experiment(method(Method::Random), &data),
        experiment(method(Method::Cgpann), &data),
        experiment(smbo(DistanceTag::Pd, Some(PdSource::Full)), &data),
        experiment(smbo(DistanceTag::Pd, Some(PdSource::Rsm15)), &data),
        experiment(smbo(DistanceTag::Gd, None), &data),
        experiment(smbo(DistanceTag::Gidd, None), &data),
    ];
    let elapsed = start.elapsed();

    let (pass, detail) = budget_accounting(&groups);
    report.line("budget accounting", pass, detail);

    let random = median_of(&groups, "random");
    let cgpann = median_of(&groups, "cgpann_0.05");
    let pd_full = median_of(&groups, "smbo_pd_full");
    let pd_rsm15 = median_of(&groups, "smbo_pd_rsm15");
    let gd = median_of(&groups, "smbo_gd");
    let gidd = median_of(&groups, "smbo_gidd");
    let checks = [
        ("pd-full beats cgpann by 0.02", pd_full >= cgpann + 0.02),
        ("pd-full beats random by 0.02", pd_full >= random + 0.02),
        ("rsm15 within 0.05 of pd-full", pd_rsm15 >= pd_full - 0.05),
        ("cgpann not below random - 0.01", cgpann >= random - 0.01),
        ("gd within 0.05 of cgpann", (gd - cgpann).abs() <= 0.05),
        ("gidd within 0.05 of cgpann", (gidd - cgpann).abs() <= 0.05),
        ("under 30 min", elapsed < Duration::from_secs(30 * 60)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(name, _)| *name).collect();
    report.line(
        "method comparison",
        failed.is_empty(),
        format!(
            "medians over {REPLICATIONS} reps: random {random:.4}, cgpann(5%) {cgpann:.4}, smbo-pd(full) {pd_full:.4}, \
             smbo-pd(rsm15) {pd_rsm15:.4}, smbo-gd {gd:.4}, smbo-gidd {gidd:.4}; {:.0} s; failed: {failed:?}",
            elapsed.as_secs_f64()
        ),
    );

    let gd_finals = finals_of(&groups, "smbo_gd");
    let in_band = gd_finals.iter().filter(|v| (0.60..=0.72).contains(*v)).count();
    report.warning(
        "gd local optimum near 0.66",
        in_band > 0,
        format!("{in_band} of {} smbo-gd finals in [0.60, 0.72]: {gd_finals:.3?}", gd_finals.len()),
    );

    let dir = tempfile::tempdir().unwrap();
    let (pass, detail) = determinism(dir.path());
    report.line("determinism", pass, detail);
    let (pass, detail) = inactive_invariance(&data);
    report.line("inactive-gene invariance", pass, detail);

    assert!(report.hard_failures.is_empty(), "failed: {:?}", report.hard_failures);
}
