//! Evaluation statistics and result-file writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{EvalTrace, StepRecord};
use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::linalg::{cond, is_positive_definite, pinv, Condition, Mat};

/// Inclusive grid of success thresholds, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

impl ThresholdSpec {
    pub fn for_kind(kind: EnvKind) -> Self {
        let high = match kind {
            EnvKind::MultiPoint7 => 0.25,
            EnvKind::SinglePoint7 | EnvKind::Planar2 => 0.1,
        };
        Self {
            low: 0.001,
            high,
            step: 0.001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.low <= self.high) || !self.high.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad threshold grid {self:?}"
            )));
        }
        Ok(())
    }

    /// `low + i·step` for `i` in `0..=round((high − low) / step)`.
    pub fn thresholds(&self) -> Vec<f64> {
        let count = ((self.high - self.low) / self.step).round() as usize + 1;
        (0..count)
            .map(|i| self.low + i as f64 * self.step)
            .collect()
    }
}

/// Arithmetic mean over thresholds of the percentage of final distances at
/// or below each threshold.
pub fn mean_success(finals: &[f64], spec: &ThresholdSpec) -> Result<f64> {
    if finals.is_empty() {
        return Err(Error::Empty("final distances"));
    }
    spec.validate()?;
    if finals.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidArgument(
            "final distances must be non-negative".into(),
        ));
    }
    let ts = spec.thresholds();
    let hits: usize = ts
        .iter()
        .map(|t| finals.iter().filter(|&&d| d <= *t).count())
        .sum();
    Ok(100.0 * hits as f64 / (ts.len() * finals.len()) as f64)
}

/// Half-open buckets `[eᵢ, eᵢ₊₁)` over initial distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BucketSpec {
    pub edges: Vec<f64>,
}

impl BucketSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let s = Self { edges };
        s.validate()?;
        Ok(s)
    }

    pub fn for_kind(kind: EnvKind) -> Self {
        let edges = match kind {
            EnvKind::SinglePoint7 => vec![0.0, 0.5, 1.0, 1.5, 2.0],
            EnvKind::MultiPoint7 => vec![0.0, 1.0, 2.0, 3.0, 4.0],
            EnvKind::Planar2 => vec![0.0, 0.2, 0.4, 0.6],
        };
        Self { edges }
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.len() < 2 || self.edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(format!(
                "bucket edges must be at least two strictly increasing values, got {:?}",
                self.edges
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges
            .windows(2)
            .map(|w| format!("{:.1}-{:.1}", w[0], w[1]))
            .collect()
    }

    /// Label of the whole range, `first-last`.
    pub fn range_label(&self) -> String {
        format!(
            "{:.1}-{:.1}",
            self.edges[0],
            self.edges[self.edges.len() - 1]
        )
    }

    fn index(&self, d: f64) -> Option<usize> {
        self.edges.windows(2).position(|w| d >= w[0] && d < w[1])
    }
}

/// Indices of the inputs falling in each bucket, plus those outside.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Buckets {
    pub groups: Vec<Vec<usize>>,
    pub overflow: Vec<usize>,
}

impl Buckets {
    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

pub fn bucketize(initial_distances: &[f64], spec: &BucketSpec) -> Buckets {
    let mut out = Buckets {
        groups: vec![Vec::new(); spec.edges.len() - 1],
        overflow: Vec::new(),
    };
    for (i, &d) in initial_distances.iter().enumerate() {
        match spec.index(d) {
            Some(b) => out.groups[b].push(i),
            None => out.overflow.push(i),
        }
    }
    out
}

pub fn frobenius_error(j_true: &Mat, j_hat: &Mat) -> Result<f64> {
    if j_true.shape() != j_hat.shape() {
        return Err(Error::ShapeMismatch {
            context: "frobenius error",
            left: j_true.shape(),
            right: j_hat.shape(),
        });
    }
    Ok((j_true - j_hat).frobenius_norm())
}

/// Whether `J* Ĵ†` is positive definite, the local convergence condition of
/// the inverse-Jacobian controller.
pub fn pd_criterion(j_true: &Mat, j_hat: &Mat) -> Result<bool> {
    if j_true.shape() != j_hat.shape() {
        return Err(Error::ShapeMismatch {
            context: "pd criterion",
            left: j_true.shape(),
            right: j_hat.shape(),
        });
    }
    is_positive_definite(&j_true.matmul(&pinv(j_hat)?))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PdPartition {
    pub always_pd: Vec<usize>,
    pub not_always_pd: Vec<usize>,
}

impl PdPartition {
    /// `(always, not always)` as percentages of all trajectories.
    pub fn percentages(&self) -> (f64, f64) {
        let total = (self.always_pd.len() + self.not_always_pd.len()) as f64;
        if total == 0.0 {
            return (0.0, 0.0);
        }
        let a = 100.0 * self.always_pd.len() as f64 / total;
        (a, 100.0 - a)
    }
}

/// Partitions trajectories by whether every step's flag is set.
pub fn classify_pd_flags<F: AsRef<[bool]>>(flags: &[F]) -> PdPartition {
    let mut p = PdPartition::default();
    for (i, f) in flags.iter().enumerate() {
        if f.as_ref().iter().all(|&b| b) {
            p.always_pd.push(i);
        } else {
            p.not_always_pd.push(i);
        }
    }
    p
}

pub fn pd_flags(trace: &EvalTrace) -> Result<Vec<bool>> {
    trace
        .steps
        .iter()
        .map(|s| pd_criterion(&s.j_true, &s.j_hat))
        .collect()
}

pub fn classify_pd_trajectories(traces: &[EvalTrace]) -> Result<PdPartition> {
    let flags = traces.iter().map(pd_flags).collect::<Result<Vec<_>>>()?;
    Ok(classify_pd_flags(&flags))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionStats {
    /// Mean, median and standard deviation of the finite values; NaN when
    /// there are none.
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
    /// Median of all values with the infinite ones ordered last.
    pub median_all: Condition,
    pub fraction_infinite: f64,
    /// Natural log of every value, `+∞` for singular matrices.
    pub log_values: Vec<f64>,
}

pub fn condition_stats(jacobians: &[Mat]) -> Result<ConditionStats> {
    let conds = jacobians.iter().map(cond).collect::<Result<Vec<_>>>()?;
    summarize_conditions(&conds)
}

pub fn summarize_conditions(conds: &[Condition]) -> Result<ConditionStats> {
    if conds.is_empty() {
        return Err(Error::Empty("condition numbers"));
    }
    let mut finite: Vec<f64> = conds.iter().filter_map(Condition::finite).collect();
    finite.sort_by(f64::total_cmp);
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let stddev = (finite.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut all: Vec<f64> = conds.iter().map(Condition::to_f64).collect();
    all.sort_by(f64::total_cmp);
    let med_all = median_sorted(&all);
    Ok(ConditionStats {
        mean,
        median: median_sorted(&finite),
        stddev,
        median_all: if med_all.is_finite() {
            Condition::Finite(med_all)
        } else {
            Condition::Infinite
        },
        fraction_infinite: (conds.len() - finite.len()) as f64 / conds.len() as f64,
        log_values: conds.iter().map(|c| c.to_f64().ln()).collect(),
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Per-step mean and standard error of some per-step quantity over a group
/// of trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn step_curve(
    traces: &[&TraceSummary],
    value: impl Fn(&StepMetrics) -> f64,
) -> Vec<CurvePoint> {
    let len = traces.iter().map(|t| t.steps.len()).max().unwrap_or(0);
    (0..len)
        .map(|step| {
            let d: Vec<f64> = traces
                .iter()
                .filter_map(|t| t.steps.get(step).map(&value))
                .collect();
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let var = if d.len() > 1 {
                d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            CurvePoint {
                step,
                mean,
                stderr: (var / n).sqrt(),
                count: d.len(),
            }
        })
        .collect()
}

/// One row of a success table: per-bucket and overall mean success.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessRow {
    pub estimator: String,
    /// `None` for empty buckets.
    pub buckets: Vec<Option<f64>>,
    pub overall: Option<f64>,
    pub counts: Vec<usize>,
    pub overflow: usize,
}

pub fn success_row(
    estimator: &str,
    traces: &[&TraceSummary],
    thresholds: &ThresholdSpec,
    buckets: &BucketSpec,
) -> Result<SuccessRow> {
    let initial: Vec<f64> = traces.iter().map(|t| t.initial_distance).collect();
    let finals: Vec<f64> = traces.iter().map(|t| t.final_distance).collect();
    let groups = bucketize(&initial, buckets);
    let score = |idx: &[usize]| -> Result<Option<f64>> {
        if idx.is_empty() {
            return Ok(None);
        }
        let f: Vec<f64> = idx.iter().map(|&i| finals[i]).collect();
        mean_success(&f, thresholds).map(Some)
    };
    let all: Vec<usize> = (0..finals.len()).collect();
    Ok(SuccessRow {
        estimator: estimator.to_string(),
        buckets: groups
            .groups
            .iter()
            .map(|g| score(g))
            .collect::<Result<_>>()?,
        overall: score(&all)?,
        counts: groups.counts(),
        overflow: groups.overflow.len(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| format!("{v:.2}"))
}

/// Estimator rows × bucket columns plus the whole range, then counts.
pub fn write_success_table(rows: &[SuccessRow], buckets: &BucketSpec, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let labels = buckets.labels();
    let mut header = vec!["estimator".to_string()];
    header.extend(labels.iter().cloned());
    header.push(buckets.range_label());
    header.extend(labels.iter().map(|l| format!("n_{l}")));
    header.push("n_overflow".into());
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let mut cells = vec![r.estimator.clone()];
        cells.extend(r.buckets.iter().map(|b| opt(*b)));
        cells.push(opt(r.overall));
        cells.extend(r.counts.iter().map(usize::to_string));
        cells.push(r.overflow.to_string());
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Scalar diagnostics of one control step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub distance: f64,
    pub frobenius_error: f64,
    pub cond: Condition,
    pub cond_true: Condition,
    pub pd: bool,
}

impl StepMetrics {
    pub fn from_record(s: &StepRecord) -> Result<Self> {
        Ok(Self {
            distance: s.distance,
            frobenius_error: frobenius_error(&s.j_true, &s.j_hat)?,
            cond: cond(&s.j_hat)?,
            cond_true: cond(&s.j_true)?,
            pd: pd_criterion(&s.j_true, &s.j_hat)?,
        })
    }
}

/// A trajectory reduced to what the result files carry.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSummary {
    pub estimator: String,
    pub seed: u64,
    pub target_id: usize,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub failure: Option<String>,
    pub steps: Vec<StepMetrics>,
}

impl TraceSummary {
    pub fn from_trace(t: &EvalTrace) -> Result<Self> {
        Ok(Self {
            estimator: t.estimator.clone(),
            seed: t.seed,
            target_id: t.target_id,
            initial_distance: t.initial_distance,
            final_distance: t.final_distance(),
            failure: t.failure.clone(),
            steps: t
                .steps
                .iter()
                .map(StepMetrics::from_record)
                .collect::<Result<_>>()?,
        })
    }

    pub fn pd_flags(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.pd).collect()
    }
}

pub const TRAJECTORY_HEADER: &str =
    "estimator,seed,target_id,initial_distance,final_distance,steps,failure";
pub const STEP_HEADER: &str =
    "estimator,seed,target_id,step,distance,frobenius_error,cond,cond_true,pd_flag";

pub fn write_trajectories_csv(traces: &[TraceSummary], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for t in traces {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            t.estimator,
            t.seed,
            t.target_id,
            t.initial_distance,
            t.final_distance,
            t.steps.len(),
            t.failure
                .as_deref()
                .unwrap_or("")
                .replace([',', '\n', '\r'], " ")
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_steps_csv(traces: &[TraceSummary], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{STEP_HEADER}")?;
    for t in traces {
        for (i, s) in t.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                t.estimator,
                t.seed,
                t.target_id,
                i,
                s.distance,
                s.frobenius_error,
                s.cond,
                s.cond_true,
                u8::from(s.pd)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_err(file: &Path, line: usize, what: &str) -> Error {
    Error::Format(format!("{}:{}: {what}", file.display(), line + 1))
}

fn csv_rows<'a>(
    text: &'a str,
    header: &str,
    path: &Path,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(parse_err(path, 0, "unexpected header")),
    }
    Ok(lines.map(|(i, l)| (i, l.split(',').collect())))
}

/// Reads `trajectories.csv` and `steps.csv` back into summaries, in file
/// order.
pub fn read_results(trajectories: &Path, steps: &Path) -> Result<Vec<TraceSummary>> {
    let ttext = fs::read_to_string(trajectories)?;
    let mut out = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (i, f) in csv_rows(&ttext, TRAJECTORY_HEADER, trajectories)? {
        if f.len() != 7 {
            return Err(parse_err(trajectories, i, "expected 7 fields"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(trajectories, i, "bad number"))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_err(trajectories, i, "bad integer"))
        };
        let key = (f[0].to_string(), int(f[1])?, int(f[2])? as usize);
        index.insert(key.clone(), out.len());
        out.push(TraceSummary {
            estimator: key.0,
            seed: key.1,
            target_id: key.2,
            initial_distance: num(f[3])?,
            final_distance: num(f[4])?,
            failure: (!f[6].is_empty()).then(|| f[6].to_string()),
            steps: Vec::with_capacity(int(f[5])? as usize),
        });
    }
    let stext = fs::read_to_string(steps)?;
    for (i, f) in csv_rows(&stext, STEP_HEADER, steps)? {
        if f.len() != 9 {
            return Err(parse_err(steps, i, "expected 9 fields"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(steps, i, "bad number"))
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_err(steps, i, "bad integer"))
        };
        let condition = |s: &str| {
            Condition::parse(s).ok_or_else(|| parse_err(steps, i, "bad condition number"))
        };
        let key = (f[0].to_string(), int(f[1])?, int(f[2])? as usize);
        let t = *index
            .get(&key)
            .ok_or_else(|| parse_err(steps, i, "step for an unknown trajectory"))?;
        if int(f[3])? as usize != out[t].steps.len() {
            return Err(parse_err(steps, i, "steps out of order"));
        }
        out[t].steps.push(StepMetrics {
            distance: num(f[4])?,
            frobenius_error: num(f[5])?,
            cond: condition(f[6])?,
            cond_true: condition(f[7])?,
            pd: match f[8] {
                "1" => true,
                "0" => false,
                _ => return Err(parse_err(steps, i, "bad pd flag")),
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn single() -> ThresholdSpec {
        ThresholdSpec::for_kind(EnvKind::SinglePoint7)
    }

    #[test]
    fn threshold_grid() {
        assert_eq!(single().thresholds().len(), 100);
        assert_eq!(
            ThresholdSpec::for_kind(EnvKind::MultiPoint7)
                .thresholds()
                .len(),
            250
        );
        let t = single().thresholds();
        assert!((t[99] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn success_examples() {
        assert_eq!(mean_success(&[0.0005; 4], &single()).unwrap(), 100.0);
        assert_eq!(mean_success(&[0.0505], &single()).unwrap(), 50.0);
        assert_eq!(mean_success(&[1.0, 2.0], &single()).unwrap(), 0.0);
        assert!(mean_success(&[], &single()).is_err());
    }

    #[test]
    fn ties_succeed_and_single_threshold_is_plain_fraction() {
        let one = ThresholdSpec {
            low: 0.05,
            high: 0.05,
            step: 0.001,
        };
        assert_eq!(mean_success(&[0.05, 0.06, 0.01, 0.2], &one).unwrap(), 50.0);
    }

    #[test]
    fn success_is_monotone() {
        let mut rng = seeded(1);
        for _ in 0..200 {
            let a: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..0.15)).collect();
            let b: Vec<f64> = a.iter().map(|v| v * rng.random_range(0.0..1.0)).collect();
            assert!(mean_success(&b, &single()).unwrap() >= mean_success(&a, &single()).unwrap());
        }
    }

    #[test]
    fn buckets() {
        let spec = BucketSpec::new(vec![0.0, 0.5, 1.0]).unwrap();
        let b = bucketize(&[0.5, 0.1, 1.0, 0.99, -0.1], &spec);
        assert_eq!(b.groups, vec![vec![1], vec![0, 3]]);
        assert_eq!(b.overflow, vec![2, 4]);
        assert_eq!(bucketize(&[], &spec).counts(), vec![0, 0]);
        assert!(BucketSpec::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn frobenius_examples() {
        let i = Mat::identity(2);
        assert_eq!(frobenius_error(&i, &i).unwrap(), 0.0);
        assert_eq!(frobenius_error(&i, &Mat::zeros(2, 2)).unwrap(), 2f64.sqrt());
        let mut d = Mat::zeros(2, 3);
        d[(1, 2)] = 3.0;
        assert_eq!(frobenius_error(&d, &Mat::zeros(2, 3)).unwrap(), 3.0);
        assert!(frobenius_error(&i, &Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn pd_examples() {
        let j = Mat::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.0, 1.0, 2.0]]).unwrap();
        assert!(pd_criterion(&j, &j).unwrap());
        assert!(!pd_criterion(&j, &(-&j)).unwrap());
        let rot = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(!pd_criterion(&rot, &Mat::identity(2)).unwrap());
    }

    fn trace(flags: &[bool]) -> EvalTrace {
        let good = Mat::identity(2);
        let skew = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        EvalTrace {
            estimator: "x".into(),
            seed: 0,
            target_id: 0,
            target: vec![0.0, 0.0],
            initial_distance: 1.0,
            steps: flags
                .iter()
                .map(|&f| StepRecord {
                    q: vec![0.0; 2],
                    x: vec![0.0; 2],
                    j_hat: if f { good.clone() } else { skew.clone() },
                    j_true: good.clone(),
                    distance: 0.5,
                })
                .collect(),
            failure: None,
        }
    }

    #[test]
    fn pd_partition() {
        let traces = vec![
            trace(&[true, true]),
            trace(&[true, false, true]),
            trace(&[true]),
        ];
        let p = classify_pd_trajectories(&traces).unwrap();
        assert_eq!(p.always_pd, vec![0, 2]);
        assert_eq!(p.not_always_pd, vec![1]);
        let (a, b) = p.percentages();
        assert!((a + b - 100.0).abs() < 1e-12);
    }

    #[test]
    fn results_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (tp, sp) = (dir.path().join("t.csv"), dir.path().join("s.csv"));
        let mut a = trace(&[true, false]);
        a.failure = Some("rank, lost".into());
        let mut b = trace(&[true]);
        b.target_id = 1;
        b.steps[0].j_hat = Mat::zeros(2, 2);
        let sums: Vec<TraceSummary> = [a, b]
            .iter()
            .map(|t| TraceSummary::from_trace(t).unwrap())
            .collect();
        write_trajectories_csv(&sums, &tp).unwrap();
        write_steps_csv(&sums, &sp).unwrap();
        let back = read_results(&tp, &sp).unwrap();
        assert_eq!(back[1].steps[0].cond, Condition::Infinite);
        assert_eq!(back[0].failure.as_deref(), Some("rank  lost"));
        assert_eq!(back[0].steps, sums[0].steps);
        assert!(fs::read_to_string(&sp).unwrap().contains(",inf,"));
    }

    #[test]
    fn condition_examples() {
        let s = condition_stats(&vec![Mat::identity(3); 4]).unwrap();
        assert_eq!((s.mean, s.fraction_infinite), (1.0, 0.0));
        let mut v = vec![Mat::identity(2); 3];
        v.push(Mat::zeros(2, 2));
        let s = condition_stats(&v).unwrap();
        assert_eq!(s.fraction_infinite, 0.25);
        assert_eq!(s.log_values[3], f64::INFINITY);
        let s = condition_stats(&[Mat::diag(&[1.0, 1.0]), Mat::diag(&[3.0, 1.0])]).unwrap();
        assert_eq!(s.mean, 2.0);
        let s = summarize_conditions(&[
            Condition::Infinite,
            Condition::Infinite,
            Condition::Finite(2.0),
        ])
        .unwrap();
        assert_eq!(s.median_all, Condition::Infinite);
        assert_eq!(s.median, 2.0);
    }

    #[test]
    fn table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let traces = [TraceSummary::from_trace(&trace(&[true])).unwrap()];
        let refs: Vec<&TraceSummary> = traces.iter().collect();
        let spec = BucketSpec::for_kind(EnvKind::SinglePoint7);
        let row = success_row("true", &refs, &single(), &spec).unwrap();
        write_success_table(&[row], &spec, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "estimator,0.0-0.5,0.5-1.0,1.0-1.5,1.5-2.0,0.0-2.0,n_0.0-0.5,n_0.5-1.0,n_1.0-1.5,n_1.5-2.0,n_overflow"
        );
        assert_eq!(
            lines.next().unwrap(),
            "true,nan,nan,0.00,nan,0.00,0,0,1,0,0"
        );
    }
}
