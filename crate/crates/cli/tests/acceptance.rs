//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits 0;
//! set `ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use augbench::augment::{enumerate_chains, AugmenterSpec, FitContext, FitObserver, NoObserver, StageConfig};
use augbench::classifiers::{mlp_loss, train, Architecture, ForestParams, MlpParams, ModelSpec};
use augbench::data::synthetic::SyntheticConfig;
use augbench::data::grouped_kfold;
use augbench::generation::{
    augment_by_generation, discriminator_loss, generator_loss, train_generator, vae_loss, GenerationConfig,
    GenerationKind,
};
use augbench::harness::{aggregate, run_experiment, run_seed, ExperimentConfig, Report};
use augbench::net::{gradient_check, Activation, Adam, NetCore};
use augbench::sampling::{apply_sampling, smote, smote_enn, SamplingSpec, SamplingTechnique};
use augbench::stats::{auc, benjamini_hochberg, delong_variance, power_analysis, PowerConfig};
use augbench::{SeedStream, TabularDataset};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

// pinned tolerances and budgets
const POWER_SEED: u64 = 20_240_501;
const POWER_REPS: usize = 2000;
const POWER_BUDGET: Duration = Duration::from_secs(180);
const AUC_TOL: f64 = 1e-12;
const DELONG_TOL: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-4;
const GRAD_EPS: f64 = 1e-5;
const GRAD_SEEDS: u64 = 20;
const BAYES_AUC: f64 = 0.69;
const BAYES_TOL: f64 = 0.005;
const LR_GAP: f64 = 0.03;
const SMOTE_ENN_DROP: f64 = 0.02;
const SANITY_BUDGET: Duration = Duration::from_secs(600);
const SIZE_TRIALS: u64 = 50;
const SIZE_SHARE: f64 = 0.95;

type Verdict = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("power analysis", power),
        ("chain enumeration", chains),
        ("balance contracts", balance),
        ("AUC and DeLong oracles", auc_oracles),
        ("BH oracle", bh_oracle),
        ("gradient checks", gradients),
        ("determinism", determinism),
        ("synthetic end-to-end sanity", sanity),
        ("SMOTE-ENN size reduction", size_reduction),
        ("leakage audit", leakage),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn power() -> Verdict {
    let start = Instant::now();
    let cfg = PowerConfig::default();
    let at = |n: usize| power_analysis(0.05, n, 0.64, POWER_REPS, &cfg, &SeedStream::new(POWER_SEED).derive(n as u64));
    let large = at(1709).map_err(err)?;
    let small = at(591).map_err(err)?;
    let took = start.elapsed();
    let ok = large >= 0.90 && (0.30..=0.50).contains(&small) && took < POWER_BUDGET;
    Ok((ok, format!("power(n=1709)={large:.4} (need >= 0.90), power(n=591)={small:.4} (need in [0.30, 0.50]), reps={POWER_REPS}")))
}

fn chains() -> Verdict {
    let all = enumerate_chains();
    let count = |c: &str| all.iter().filter(|s| s.category() == c).count();
    let split = [count("sampling->generation"), count("perturbation->sampling"), count("perturbation->generation")];
    let names: BTreeSet<String> = all.iter().map(AugmenterSpec::name).collect();
    let ok = all.len() == 99 && split == [9, 81, 9] && names.len() == 99;
    Ok((ok, format!("{} chains, {} distinct, split {:?}", all.len(), names.len(), split)))
}

fn balance() -> Verdict {
    let data = SyntheticConfig::default().generate().map_err(err)?;
    // KMeansSMOTE needs clusters with a minority majority, which the heavily
    // overlapping benchmark does not have; it is checked on separated classes
    let separated = SyntheticConfig { features: 4, informative: 4, bayes_auc: 0.999, ..SyntheticConfig::default() }
        .generate()
        .map_err(err)?;
    for d in [&data, &separated] {
        if d.class_counts() != [612, 1097] {
            return Ok((false, format!("dataset counts {:?}", d.class_counts())));
        }
    }
    let mut bad = Vec::new();
    let mut seen = Vec::new();
    for (i, t) in SamplingTechnique::ALL.into_iter().enumerate() {
        let spec = SamplingSpec::new(t);
        let rng = SeedStream::new(3).derive(i as u64);
        let input = if t == SamplingTechnique::KMeansSmote {
            if let Err(e) = apply_sampling(&spec, &data, &rng) {
                seen.push(format!("KMeansSMOTE on benchmark: {e};"));
            }
            &separated
        } else {
            &data
        };
        let c = apply_sampling(&spec, input, &rng).map_err(err)?.data.class_counts();
        let ok = match t {
            SamplingTechnique::Smote
            | SamplingTechnique::BorderlineSmote
            | SamplingTechnique::KMeansSmote
            | SamplingTechnique::RandomOversample => c == [1097, 1097],
            SamplingTechnique::Adasyn => c[1] == 1097 && c[0].abs_diff(1097) <= 1,
            SamplingTechnique::RandomUndersample | SamplingTechnique::NearMiss => c == [612, 612],
            // hybrids clean after oversampling; no exact count
            SamplingTechnique::SmoteTomek | SamplingTechnique::SmoteEnn => continue,
        };
        seen.push(format!("{}={}/{}", t.name(), c[0], c[1]));
        if !ok {
            bad.push(t.name().to_string());
        }
    }
    let cfg = GenerationConfig::default();
    for (i, kind) in GenerationKind::ALL.into_iter().enumerate() {
        let rng = SeedStream::new(5).derive(i as u64);
        let model = train_generator(kind, &data, &cfg, &rng.derive(0)).map_err(err)?;
        let out = augment_by_generation(&data, &model, &rng.derive(1)).map_err(err)?;
        let c = out.class_counts();
        seen.push(format!("{}={} ({}/{})", kind.name(), out.n_rows(), c[0], c[1]));
        if out.n_rows() != 3418 || c != [1224, 2194] {
            bad.push(kind.name().to_string());
        }
    }
    Ok((bad.is_empty(), format!("{}; mismatches: {:?}", seen.join(" "), bad)))
}

fn random_labels(n: usize, r: &mut impl Rng) -> Vec<u8> {
    loop {
        let labels: Vec<u8> = (0..n).map(|_| u8::from(r.random_bool(0.6))).collect();
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos >= 2 && n - pos >= 2 {
            return labels;
        }
    }
}

fn auc_oracles() -> Verdict {
    let mut r = SeedStream::new(4).rng();
    let (mut worst_auc, mut worst_var) = (0.0f64, 0.0f64);
    for inst in 0..500 {
        let n = r.random_range(4..=200);
        let labels = random_labels(n, &mut r);
        // every other instance draws from a handful of values to force ties
        let scores: Vec<f64> = if inst % 2 == 0 {
            (0..n).map(|_| r.random_range(0..6) as f64 * 0.25).collect()
        } else {
            (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
        };
        let pos: Vec<f64> = (0..n).filter(|&i| labels[i] == 1).map(|i| scores[i]).collect();
        let neg: Vec<f64> = (0..n).filter(|&i| labels[i] == 0).map(|i| scores[i]).collect();
        let psi = |a: f64, b: f64| if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
        let v10: Vec<f64> = pos.iter().map(|&p| neg.iter().map(|&q| psi(p, q)).sum::<f64>() / neg.len() as f64).collect();
        let v01: Vec<f64> = neg.iter().map(|&q| pos.iter().map(|&p| psi(p, q)).sum::<f64>() / pos.len() as f64).collect();
        let pairs: f64 = pos.iter().map(|&p| neg.iter().map(|&q| psi(p, q)).sum::<f64>()).sum();
        let oracle_auc = pairs / (pos.len() * neg.len()) as f64;
        let svar = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let oracle_var = svar(&v10) / pos.len() as f64 + svar(&v01) / neg.len() as f64;
        worst_auc = worst_auc.max((auc(&scores, &labels).map_err(err)? - oracle_auc).abs());
        worst_var = worst_var.max((delong_variance(&scores, &labels).map_err(err)? - oracle_var).abs());
    }
    let ok = worst_auc < AUC_TOL && worst_var < DELONG_TOL;
    Ok((ok, format!("500 instances, max |AUC diff|={worst_auc:.2e}, max |variance diff|={worst_var:.2e}")))
}

fn bh_brute_force(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    // largest k with at least k p-values at or below k q / m
    let k = (1..=m)
        .rev()
        .find(|&k| p.iter().filter(|&&x| x <= k as f64 * q / m as f64).count() >= k);
    match k {
        Some(k) => p.iter().map(|&x| x <= k as f64 * q / m as f64).collect(),
        None => vec![false; m],
    }
}

fn bh_oracle() -> Verdict {
    let mut r = SeedStream::new(5).rng();
    let mut mismatches = 0;
    let mut rejections = 0;
    for v in 0..1000 {
        let m = r.random_range(1..=50);
        let q = [0.01, 0.05, 0.1, 0.25][v % 4];
        let p: Vec<f64> = (0..m)
            .map(|_| match r.random_range(0..4) {
                0 => r.random_range(0.0..0.01),
                1 => r.random_range(0..20) as f64 / 200.0,
                _ => r.random::<f64>(),
            })
            .collect();
        let fast = benjamini_hochberg(&p, q);
        rejections += fast.iter().filter(|&&b| b).count();
        if fast != bh_brute_force(&p, q) {
            mismatches += 1;
        }
    }
    Ok((mismatches == 0, format!("1000 vectors, {mismatches} mismatches, {rejections} rejections in total")))
}

fn matrix(rows: usize, cols: usize, r: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(r))
}

/// Network with every parameter (biases included) drawn from N(0, 0.5^2).
fn net(sizes: &[usize], activations: &[Activation], seed: &SeedStream) -> NetCore {
    let mut n = NetCore::new(sizes, activations, Adam::new(1e-3, 0.9, 0.999), seed);
    let mut r = seed.derive(1).rng();
    let p: Vec<f64> = (0..n.n_params())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            0.5 * z
        })
        .collect();
    n.set_params_flat(&p);
    n
}

fn gradients() -> Verdict {
    const RL: [Activation; 2] = [Activation::Relu, Activation::Linear];
    let mut worst = [0.0f64; 4];
    for seed in 0..GRAD_SEEDS {
        let s = SeedStream::new(6).derive(seed);
        let mut r = s.derive_str("data").rng();

        let m = net(&[5, 8, 1], &RL, &s.derive_str("mlp"));
        let x = matrix(12, 5, &mut r);
        let y = Array2::from_shape_fn((12, 1), |(i, _)| (i % 3 == 0) as u8 as f64);
        let (_, g) = mlp_loss(&m, &x, &y, 0.3);
        worst[0] = worst[0].max(gradient_check(&m, &g, GRAD_EPS, |n| mlp_loss(n, &x, &y, 0.3).0));

        // unconditioned (GAN) and class-conditioned (CGAN) adversarial pairs
        for (slot, cond_w) in [(1, 0), (2, 1)] {
            let g = net(&[3 + cond_w, 8, 4], &RL, &s.derive_str("g").derive(cond_w as u64));
            let d = net(&[4 + cond_w, 8, 1], &RL, &s.derive_str("d").derive(cond_w as u64));
            let z = matrix(10, 3 + cond_w, &mut r);
            let cond = Array2::from_shape_fn((10, cond_w), |(i, _)| (i % 2) as f64);
            let with = |a: &Array2<f64>| ndarray::concatenate(ndarray::Axis(1), &[a.view(), cond.view()]).unwrap();
            let real = with(&matrix(10, 4, &mut r));
            let fake = with(&g.forward(&z));
            let c = (cond_w > 0).then_some(&cond);
            let (_, gd) = discriminator_loss(&d, &real, &fake);
            let (_, gg) = generator_loss(&g, &d, &z, c);
            let ed = gradient_check(&d, &gd, GRAD_EPS, |dn| discriminator_loss(dn, &real, &fake).0);
            let eg = gradient_check(&g, &gg, GRAD_EPS, |gn| generator_loss(gn, &d, &z, c).0);
            worst[slot] = worst[slot].max(ed).max(eg);
        }

        let enc = net(&[4, 8, 4], &RL, &s.derive_str("enc"));
        let dec = net(&[2, 8, 4], &RL, &s.derive_str("dec"));
        let x = matrix(10, 4, &mut r);
        let eps = matrix(10, 2, &mut r);
        let (_, ge, gdec) = vae_loss(&enc, &dec, &x, &eps);
        let ee = gradient_check(&enc, &ge, GRAD_EPS, |en| vae_loss(en, &dec, &x, &eps).0.total());
        let edec = gradient_check(&dec, &gdec, GRAD_EPS, |de| vae_loss(&enc, de, &x, &eps).0.total());
        worst[3] = worst[3].max(ee).max(edec);
    }
    let ok = worst.iter().all(|&w| w < GRAD_TOL);
    Ok((
        ok,
        format!(
            "{GRAD_SEEDS} seeds, max relative error MLP={:.1e} GAN={:.1e} CGAN={:.1e} VAE={:.1e} (limit {GRAD_TOL:.0e})",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn report_csv_without_runtime(report: &Report) -> Result<String, String> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(err)?;
    let text = String::from_utf8(buf).map_err(err)?;
    let rt = text.lines().next().unwrap_or("").split(',').position(|h| h == "runtime_seconds").ok_or("no runtime column")?;
    Ok(text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(rt);
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

fn determinism() -> Verdict {
    let data = SyntheticConfig { rows: 800, ..SyntheticConfig::default() }.generate().map_err(err)?;
    let cfg = ExperimentConfig {
        models: vec![ModelSpec::default_for(Architecture::Lr), ModelSpec::default_for(Architecture::Svm)],
        techniques: ["SMOTE", "NoiseAddition", "NearMiss"]
            .iter()
            .map(|t| AugmenterSpec::parse(t))
            .collect::<augbench::Result<_>>()
            .map_err(err)?,
        n_seeds: 5,
        bootstrap_b: 1000,
        master_seed: 31,
        ..ExperimentConfig::default()
    };
    let once = || -> Result<String, String> {
        let res = run_experiment(&data, &cfg, &NoObserver).map_err(err)?;
        report_csv_without_runtime(&aggregate(&res.records, &res.failures, &cfg).map_err(err)?)
    };
    let (a, b) = (once()?, once()?);
    let identical = a == b;

    // deterministic cells recomputed seed by seed, without replication
    let folds = grouped_kfold(&data).map_err(err)?;
    let mut invariant = 0;
    let mut varying = Vec::new();
    for model in &cfg.models {
        for tech in [AugmenterSpec::identity(), AugmenterSpec::parse("NearMiss").map_err(err)?] {
            let runs: Vec<Vec<f64>> = (0..cfg.n_seeds as u64)
                .map(|s| run_seed(model, &tech, &data, &folds, &cfg, s, &NoObserver).map(|r| r.fold_aucs))
                .collect::<Result<_, _>>()
                .map_err(|f| f.message)?;
            if runs.iter().all(|r| *r == runs[0]) {
                invariant += 1;
            } else {
                varying.push(format!("{}/{}", model.name(), tech.name()));
            }
        }
    }
    let ok = identical && varying.is_empty();
    Ok((
        ok,
        format!(
            "report.csv identical across runs: {identical} ({} lines); LR/SVM deterministic cells seed-invariant: {invariant}/4 {varying:?}",
            a.lines().count()
        ),
    ))
}

fn sanity() -> Verdict {
    let start = Instant::now();
    let syn = SyntheticConfig::default();
    let analytic = syn.analytic_auc().map_err(err)?;
    let data = syn.generate().map_err(err)?;
    // the Bayes score for equal-covariance Gaussians is the informative sum
    let bayes_scores: Vec<f64> = (0..data.n_rows())
        .map(|i| data.row(i).iter().take(syn.informative).sum())
        .collect();
    let empirical = auc(&bayes_scores, data.labels()).map_err(err)?;
    let cfg = ExperimentConfig {
        models: vec![ModelSpec::default_for(Architecture::Lr)],
        techniques: vec![AugmenterSpec::parse("SMOTE-ENN").map_err(err)?],
        n_seeds: 20,
        bootstrap_b: 1000,
        master_seed: POWER_SEED,
        ..ExperimentConfig::default()
    };
    let res = run_experiment(&data, &cfg, &NoObserver).map_err(err)?;
    let report = aggregate(&res.records, &res.failures, &cfg).map_err(err)?;
    let mean_of = |t: &str| report.row("LR", t).and_then(|r| r.mean_auc).ok_or(format!("no {t} mean"));
    let (base, enn) = (mean_of("Baseline")?, mean_of("SMOTE-ENN")?);
    let took = start.elapsed();
    let ok = (analytic - BAYES_AUC).abs() <= BAYES_TOL
        && (base - analytic).abs() <= LR_GAP
        && enn >= base - SMOTE_ENN_DROP
        && data.n_rows() == 1709
        && took < SANITY_BUDGET;
    Ok((
        ok,
        format!(
            "n={}, analytic Bayes AUC={analytic:.4} (empirical {empirical:.4}), LR baseline={base:.4}, SMOTE-ENN={enn:.4}, {} failed runs",
            data.n_rows(),
            res.failures.len()
        ),
    ))
}

fn size_reduction() -> Verdict {
    let spec = ModelSpec::default_for(Architecture::Lr);
    let mut smaller = 0;
    let (mut t_smote, mut t_enn) = (Duration::ZERO, Duration::ZERO);
    let (mut n_smote, mut n_enn) = (0usize, 0usize);
    for t in 0..SIZE_TRIALS {
        let data = SyntheticConfig { rows: 800, seed: 9000 + t, ..SyntheticConfig::default() }.generate().map_err(err)?;
        let rng = SeedStream::new(9).derive(t);
        let s = smote(&data, 5, &rng).map_err(err)?;
        let e = smote_enn(&data, 5, 3, &rng).map_err(err)?;
        n_smote += s.n_rows();
        n_enn += e.n_rows();
        if e.n_rows() < s.n_rows() {
            smaller += 1;
        }
        let time = |d: &TabularDataset| -> Result<Duration, String> {
            let start = Instant::now();
            train(&spec, d, &rng.derive_str("model")).map_err(err)?;
            Ok(start.elapsed())
        };
        // alternate the order so warm-up effects do not favour one side
        if t % 2 == 0 {
            t_smote += time(&s)?;
            t_enn += time(&e)?;
        } else {
            t_enn += time(&e)?;
            t_smote += time(&s)?;
        }
    }
    let share = smaller as f64 / SIZE_TRIALS as f64;
    let ok = share >= SIZE_SHARE && t_enn < t_smote;
    let per = |d: Duration| d.as_secs_f64() * 1e3 / SIZE_TRIALS as f64;
    Ok((
        ok,
        format!(
            "SMOTE-ENN smaller in {smaller}/{SIZE_TRIALS} trials (mean rows {} vs {}), mean LR fit {:.2} ms vs {:.2} ms",
            n_enn / SIZE_TRIALS as usize,
            n_smote / SIZE_TRIALS as usize,
            per(t_enn),
            per(t_smote)
        ),
    ))
}

struct LeakageAudit {
    test_sets: Vec<BTreeSet<usize>>,
    fits: Mutex<BTreeMap<(String, String, u64), usize>>,
    violations: Mutex<usize>,
}

impl FitObserver for LeakageAudit {
    fn before_fit(&self, ctx: &FitContext<'_>, rows: &TabularDataset) -> augbench::Result<()> {
        let key = (ctx.model.to_string(), ctx.technique.to_string(), ctx.seed);
        *self.fits.lock().unwrap().entry(key).or_default() += 1;
        let leaked = rows.origin().iter().flatten().filter(|o| self.test_sets[ctx.fold].contains(o)).count();
        *self.violations.lock().unwrap() += leaked;
        Ok(())
    }
}

fn leakage() -> Verdict {
    let data = SyntheticConfig { rows: 240, features: 5, informative: 3, ..SyntheticConfig::default() }
        .generate()
        .map_err(err)?;
    let folds = grouped_kfold(&data).map_err(err)?;
    let mut techniques: Vec<AugmenterSpec> = augbench::augment::catalog().into_iter().map(AugmenterSpec::single).collect();
    techniques.extend(enumerate_chains());
    let cfg = ExperimentConfig {
        models: vec![
            ModelSpec::default_for(Architecture::Lr),
            ModelSpec::default_for(Architecture::Svm),
            ModelSpec::Rf(ForestParams { n_trees: 10, ..ForestParams::default() }),
            ModelSpec::Mlp(MlpParams { hidden: 16, max_epochs: 10, ..MlpParams::default() }),
        ],
        techniques,
        n_seeds: 2,
        bootstrap_b: 100,
        master_seed: 10,
        stages: StageConfig {
            generation: GenerationConfig { latent_dim: 4, epochs: 2, hidden: vec![8, 8], ..GenerationConfig::default() },
            ..StageConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let audit = LeakageAudit {
        test_sets: folds.iter().map(|f| f.test.iter().copied().collect()).collect(),
        fits: Mutex::new(BTreeMap::new()),
        violations: Mutex::new(0),
    };
    let res = run_experiment(&data, &cfg, &audit).map_err(err)?;
    let fits = audit.fits.into_inner().unwrap();
    let violations = audit.violations.into_inner().unwrap();
    // every completed run must have reported each stage of each fold
    let stages = |t: &str| AugmenterSpec::parse(t).map(|s| s.stages().len()).unwrap_or(0);
    let unaudited = res
        .records
        .iter()
        .filter(|r| !r.replicated)
        .filter(|r| fits.get(&(r.model.clone(), r.technique.clone(), r.seed)).copied().unwrap_or(0) != folds.len() * stages(&r.technique))
        .count();
    let total: usize = fits.values().sum();
    let ok = violations == 0 && unaudited == 0 && !res.records.is_empty();
    Ok((
        ok,
        format!(
            "{} models x {} techniques x {} seeds, {total} audited stage fits, {violations} violations, {unaudited} incompletely audited runs, {} runs failed (no minority-dense cluster)",
            cfg.models.len(),
            cfg.cell_techniques().len(),
            cfg.n_seeds,
            res.failures.iter().filter(|f| f.message.contains("minority-dense")).count()
        ),
    ))
}
