//! The experiment pipeline behind the command-line tool: collect, train,
//! evaluate, analyse. Every step is a pure function of its config and input
//! files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::collection::{build_pairs, collect, load_dataset, save_dataset, Dataset};
use crate::config::{EstimatorConfig, ExperimentConfig};
use crate::control::{run_trajectory, sample_targets};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::metrics::{
    classify_pd_flags, read_results, step_curve, success_row, summarize_conditions,
    write_steps_csv, write_success_table, write_trajectories_csv, SuccessRow, TraceSummary,
};
use crate::neural::{
    load_model, save_model, train_neural_jacobian, train_neural_kinematics, ModelKind, NeuralModel,
    TrainReport,
};

pub const DATASET_FILE: &str = "dataset.njds";
pub const MODELS_DIR: &str = "models";
pub const RESULTS_DIR: &str = "results";
pub const ANALYSIS_DIR: &str = "analysis";

/// Where outputs go and whether existing ones may be replaced.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub out: PathBuf,
    pub force: bool,
}

impl Workspace {
    pub fn new(out: impl Into<PathBuf>, force: bool) -> Self {
        Self {
            out: out.into(),
            force,
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.out.join(DATASET_FILE)
    }

    pub fn model_path(&self, name: &str) -> PathBuf {
        self.out.join(MODELS_DIR).join(format!("{name}.njlm"))
    }

    pub fn results_dir(&self) -> PathBuf {
        self.out.join(RESULTS_DIR)
    }

    fn writable(&self, path: &Path) -> Result<()> {
        if path.exists() && !self.force {
            return Err(Error::InvalidArgument(format!(
                "{} already exists; pass --force to overwrite",
                path.display()
            )));
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        Ok(())
    }
}

/// Runs `f` on a thread pool of `jobs` workers (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn make_env(cfg: &ExperimentConfig) -> Result<Env> {
    Env::new(cfg.env, &cfg.sim)
}

#[derive(Clone, Debug)]
pub struct CollectSummary {
    pub path: PathBuf,
    pub samples: usize,
    pub trajectories: usize,
    pub seed: u64,
}

pub fn cmd_collect(cfg: &ExperimentConfig, ws: &Workspace) -> Result<CollectSummary> {
    cfg.validate()?;
    let path = ws.dataset_path();
    ws.writable(&path)?;
    let cc = cfg.collect_config();
    let ds = collect(&make_env(cfg)?, &cc)?;
    save_dataset(&ds, &path)?;
    Ok(CollectSummary {
        path,
        samples: ds.len(),
        trajectories: cc.n_traj,
        seed: cc.seed,
    })
}

/// A required input file is absent: a runtime failure, not a bad argument.
fn missing(path: &Path, hint: &str) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} is missing; {hint}", path.display()),
    ))
}

fn load_matching_dataset(cfg: &ExperimentConfig, path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(missing(path, "run collect first"));
    }
    let ds = load_dataset(path)?;
    if ds.kind() != cfg.env {
        return Err(Error::InvalidArgument(format!(
            "dataset {} was collected in {}, config is for {}",
            path.display(),
            ds.kind().name(),
            cfg.env.name()
        )));
    }
    Ok(ds)
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub name: String,
    pub model_path: PathBuf,
    pub log_path: PathBuf,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Trains the named neural estimators (all of them when `names` is empty)
/// on the dataset at `dataset` (the workspace dataset when `None`).
pub fn cmd_train(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    dataset: Option<&Path>,
    names: &[String],
) -> Result<Vec<TrainSummary>> {
    cfg.validate()?;
    let selected: Vec<&EstimatorConfig> = if names.is_empty() {
        cfg.estimators.iter().filter(|e| e.is_neural()).collect()
    } else {
        names
            .iter()
            .map(|n| match cfg.estimator(n) {
                Some(e) if e.is_neural() => Ok(e),
                Some(_) => Err(Error::InvalidArgument(format!(
                    "estimator {n:?} has nothing to train"
                ))),
                None => Err(Error::InvalidArgument(format!("unknown estimator {n:?}"))),
            })
            .collect::<Result<_>>()?
    };
    for e in &selected {
        ws.writable(&ws.model_path(&e.name()))?;
    }
    let ds_path = dataset.map_or_else(|| ws.dataset_path(), Path::to_path_buf);
    let ds = load_matching_dataset(cfg, &ds_path)?;
    let mut out = Vec::new();
    for e in selected {
        let name = e.name();
        let net = cfg.network(e).expect("neural estimator");
        let (report, kind, beta) = match e {
            EstimatorConfig::NeuralJacobian { beta, k, .. } => {
                let pairs = build_pairs(&ds, *k)?;
                let r = train_neural_jacobian(&pairs, net.embedding, net.spec, &net.train, *beta)?;
                (r, ModelKind::Jacobian, *beta)
            }
            _ => {
                let r = train_neural_kinematics(&ds, net.embedding, net.spec, &net.train)?;
                (r, ModelKind::Kinematics, 0.0)
            }
        };
        let model = NeuralModel::new(kind, cfg.env, net.embedding, beta, report.model.clone())?;
        let model_path = ws.model_path(&name);
        save_model(&model, &model_path)?;
        let log_path = model_path.with_file_name(format!("{name}_log.csv"));
        write_train_log(&report, beta, &log_path)?;
        out.push(TrainSummary {
            name,
            model_path,
            log_path,
            best_epoch: report.best_epoch,
            best_val_loss: report.best_val_loss,
        });
    }
    Ok(out)
}

/// Rows for epochs `1..`; the initial losses appear as epoch 0.
fn write_train_log(r: &TrainReport, beta: f64, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "epoch,train_loss,val_loss,beta")?;
    for e in &r.log {
        writeln!(w, "{},{},{},{beta}", e.epoch, e.train_loss, e.val_loss)?;
    }
    w.flush()?;
    Ok(())
}

/// Builds the runtime estimator for a config entry, loading models and the
/// dataset from the workspace as needed.
pub fn build_estimator(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    e: &EstimatorConfig,
    dataset: &mut Option<Arc<Dataset>>,
) -> Result<Estimator> {
    Ok(match e {
        EstimatorConfig::True => Estimator::true_for(cfg.env),
        EstimatorConfig::Broyden(b) => Estimator::Broyden(*b),
        EstimatorConfig::LlKnn { k } => {
            if dataset.is_none() {
                *dataset = Some(Arc::new(load_matching_dataset(cfg, &ws.dataset_path())?));
            }
            Estimator::llknn(dataset.as_deref().expect("loaded"), cfg.llknn_k(*k))?
        }
        EstimatorConfig::NeuralJacobian { .. } | EstimatorConfig::NeuralKinematics { .. } => {
            let path = ws.model_path(&e.name());
            if !path.exists() {
                return Err(missing(&path, "run train first"));
            }
            let model = load_model(&path)?;
            if model.env != cfg.env {
                return Err(Error::InvalidArgument(format!(
                    "model {} was trained for {}",
                    path.display(),
                    model.env.name()
                )));
            }
            Estimator::neural(Arc::new(model))
        }
    })
}

#[derive(Clone, Debug)]
pub struct EvalSummary {
    pub trajectories: usize,
    pub rows: Vec<SuccessRow>,
    pub dir: PathBuf,
}

/// Runs every configured estimator on `targets_per_seed` targets for each
/// seed and writes `trajectories.csv`, `steps.csv` and `summary.csv`.
/// Rows are ordered by seed, target, then estimator.
pub fn cmd_eval(cfg: &ExperimentConfig, ws: &Workspace) -> Result<EvalSummary> {
    cfg.validate()?;
    let dir = ws.results_dir();
    let files = ["trajectories.csv", "steps.csv", "summary.csv"].map(|f| dir.join(f));
    for f in &files {
        ws.writable(f)?;
    }
    let env = make_env(cfg)?;
    let mut dataset = None;
    let estimators: Vec<(String, Estimator)> = cfg
        .estimators
        .iter()
        .map(|e| Ok((e.name(), build_estimator(cfg, ws, e, &mut dataset)?)))
        .collect::<Result<_>>()?;
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        let targets = sample_targets(&env, seed, cfg.evaluation.targets_per_seed);
        let jobs: Vec<(usize, usize)> = (0..targets.len())
            .flat_map(|t| (0..estimators.len()).map(move |e| (t, e)))
            .collect();
        let chunk: Vec<TraceSummary> = jobs
            .par_iter()
            .map(|&(t, e)| {
                let (name, est) = &estimators[e];
                let mut env = env.clone();
                let mut trace =
                    run_trajectory(&mut env, est, &targets[t], &cfg.evaluation.controller)?;
                trace.estimator = name.clone();
                trace.seed = seed;
                trace.target_id = t;
                TraceSummary::from_trace(&trace)
            })
            .collect::<Result<_>>()?;
        all.extend(chunk);
    }
    let thresholds = cfg.thresholds();
    let buckets = cfg.buckets();
    let rows = estimators
        .iter()
        .map(|(name, _)| {
            let mine: Vec<&TraceSummary> = all.iter().filter(|t| &t.estimator == name).collect();
            success_row(name, &mine, &thresholds, &buckets)
        })
        .collect::<Result<Vec<_>>>()?;
    write_trajectories_csv(&all, &files[0])?;
    write_steps_csv(&all, &files[1])?;
    write_success_table(&rows, &buckets, &files[2])?;
    Ok(EvalSummary {
        trajectories: all.len(),
        rows,
        dir,
    })
}

/// Reads evaluation results from `results` and writes Frobenius-error
/// curves, condition-number distributions and the positive-definiteness
/// partition into `out`.
pub fn cmd_analyze(results: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let tpath = results.join("trajectories.csv");
    let spath = results.join("steps.csv");
    for p in [&tpath, &spath] {
        if !p.exists() {
            return Err(missing(p, "run eval first"));
        }
    }
    let traces = read_results(&tpath, &spath)?;
    fs::create_dir_all(out)?;
    let mut names: Vec<&str> = Vec::new();
    for t in &traces {
        if !names.contains(&t.estimator.as_str()) {
            names.push(&t.estimator);
        }
    }
    let group = |name: &str| -> Vec<&TraceSummary> {
        traces.iter().filter(|t| t.estimator == name).collect()
    };

    let frob_path = out.join("frobenius.csv");
    let mut w = BufWriter::new(fs::File::create(&frob_path)?);
    writeln!(w, "estimator,step,mean_frobenius_error,stderr,count")?;
    for name in &names {
        for p in step_curve(&group(name), |s| s.frobenius_error) {
            writeln!(w, "{name},{},{},{},{}", p.step, p.mean, p.stderr, p.count)?;
        }
    }
    w.flush()?;

    let cond_path = out.join("condition.csv");
    let mut w = BufWriter::new(fs::File::create(&cond_path)?);
    writeln!(w, "estimator,seed,target_id,step,cond,ln_cond")?;
    for t in &traces {
        for (i, s) in t.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{i},{},{}",
                t.estimator,
                t.seed,
                t.target_id,
                s.cond,
                s.cond
                    .finite()
                    .map_or_else(|| "inf".to_string(), |c| c.ln().to_string())
            )?;
        }
    }
    w.flush()?;

    let cs_path = out.join("condition_summary.csv");
    let mut w = BufWriter::new(fs::File::create(&cs_path)?);
    writeln!(
        w,
        "estimator,mean,median,stddev,median_all,fraction_infinite,count"
    )?;
    for name in &names {
        let conds: Vec<_> = group(name)
            .iter()
            .flat_map(|t| t.steps.iter().map(|s| s.cond))
            .collect();
        if conds.is_empty() {
            continue;
        }
        let s = summarize_conditions(&conds)?;
        writeln!(
            w,
            "{name},{},{},{},{},{},{}",
            s.mean,
            s.median,
            s.stddev,
            s.median_all,
            s.fraction_infinite,
            conds.len()
        )?;
    }
    w.flush()?;

    let pd_path = out.join("pd_partition.csv");
    let curve_path = out.join("pd_curves.csv");
    let mut w = BufWriter::new(fs::File::create(&pd_path)?);
    let mut wc = BufWriter::new(fs::File::create(&curve_path)?);
    writeln!(
        w,
        "estimator,always_pd_pct,not_always_pd_pct,always_pd,not_always_pd"
    )?;
    writeln!(wc, "estimator,partition,step,mean_distance,stderr,count")?;
    for name in &names {
        let g = group(name);
        let flags: Vec<Vec<bool>> = g.iter().map(|t| t.pd_flags()).collect();
        let part = classify_pd_flags(&flags);
        let (a, b) = part.percentages();
        writeln!(
            w,
            "{name},{a},{b},{},{}",
            part.always_pd.len(),
            part.not_always_pd.len()
        )?;
        for (label, idx) in [
            ("always_pd", &part.always_pd),
            ("not_always_pd", &part.not_always_pd),
        ] {
            let members: Vec<&TraceSummary> = idx.iter().map(|&i| g[i]).collect();
            for p in step_curve(&members, |s| s.distance) {
                writeln!(
                    wc,
                    "{name},{label},{},{},{},{}",
                    p.step, p.mean, p.stderr, p.count
                )?;
            }
        }
    }
    w.flush()?;
    wc.flush()?;
    Ok(vec![frob_path, cond_path, cs_path, pd_path, curve_path])
}

/// Settings for the end-to-end planar demonstration.
#[derive(Clone, Debug)]
pub struct DemoOptions {
    pub seed: u64,
    pub n_traj: usize,
    pub epochs: usize,
    pub targets: usize,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_traj: 100,
            epochs: 45,
            targets: 50,
        }
    }
}

/// The demo configuration: planar arm, a tanh kinematics network with one
/// hidden layer, compared against the exact Jacobian and Broyden.
pub fn demo_config(opts: &DemoOptions) -> ExperimentConfig {
    use crate::config::NetworkConfig;
    use crate::env::EnvKind;
    use crate::neural::Activation;

    let mut cfg = ExperimentConfig::defaults(EnvKind::Planar2);
    cfg.seeds = vec![opts.seed];
    cfg.collection.seed = opts.seed;
    cfg.collection.n_traj = Some(opts.n_traj);
    cfg.evaluation.targets_per_seed = opts.targets;
    cfg.estimators = vec![
        EstimatorConfig::True,
        EstimatorConfig::Broyden(Default::default()),
        EstimatorConfig::NeuralKinematics {
            name: "nk_tanh".into(),
            network: NetworkConfig {
                activation: Some(Activation::Tanh),
                epochs: Some(opts.epochs),
                seed: opts.seed,
                ..NetworkConfig::default()
            },
        },
    ];
    cfg
}

#[derive(Clone, Debug)]
pub struct DemoReport {
    pub collect: CollectSummary,
    pub train: Vec<TrainSummary>,
    pub eval: EvalSummary,
}

/// Collect, train, evaluate and analyse on the planar arm in one go.
pub fn demo(opts: &DemoOptions, ws: &Workspace) -> Result<DemoReport> {
    let cfg = demo_config(opts);
    fs::create_dir_all(&ws.out)?;
    let cfg_path = ws.out.join("config.json");
    ws.writable(&cfg_path)?;
    fs::write(&cfg_path, cfg.to_json())?;
    let collect = cmd_collect(&cfg, ws)?;
    let train = cmd_train(&cfg, ws, None, &[])?;
    let eval = cmd_eval(&cfg, ws)?;
    let analysis = ws.out.join(ANALYSIS_DIR);
    cmd_analyze(&eval.dir, &analysis)?;
    Ok(DemoReport {
        collect,
        train,
        eval,
    })
}
