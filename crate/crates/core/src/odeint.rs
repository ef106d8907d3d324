//! Dormand–Prince 5(4) integration and trajectory datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, DomainError, Expr, ExprError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("right-hand side undefined at t = {t}: {source}")]
    Domain { t: f64, source: DomainError },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("solution left the bounded region at t = {t}")]
    Diverged { t: f64 },
    #[error("step limit exceeded at t = {t}")]
    TooManySteps { t: f64 },
    #[error("need at least {needed} trajectories for a {dim}-dimensional system, got {got}")]
    TooFewTrajectories { needed: usize, dim: usize, got: usize },
    #[error("could not build a dataset for `{name}` after {attempts} attempts: {last}")]
    DatasetFailed {
        name: String,
        attempts: usize,
        last: Box<OdeError>,
    },
}

/// `y' = f(t, y)` together with the sampling ranges used to build datasets.
#[derive(Clone, Debug)]
pub struct OdeSystem {
    pub name: String,
    pub f: Expr,
    pub start_range: (f64, f64),
    pub time_interval: (f64, f64),
}

impl OdeSystem {
    pub fn new(
        name: impl Into<String>,
        f: Expr,
        start_range: (f64, f64),
        time_interval: (f64, f64),
    ) -> Result<Self, OdeError> {
        let d = f.root_count();
        if d == 0 {
            return Err(OdeError::InvalidSystem("right-hand side has no components".into()));
        }
        if let Some(v) = f.max_var() {
            if v > d {
                return Err(OdeError::InvalidSystem(format!(
                    "right-hand side references y{v} but the system has dimension {d}"
                )));
            }
        }
        let proper = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !proper(start_range) {
            return Err(OdeError::InvalidSystem(format!("degenerate start range {start_range:?}")));
        }
        if !proper(time_interval) {
            return Err(OdeError::InvalidSystem(format!(
                "degenerate time interval {time_interval:?}"
            )));
        }
        Ok(OdeSystem {
            name: name.into(),
            f,
            start_range,
            time_interval,
        })
    }

    /// Parses one string per component.
    pub fn parse(
        name: impl Into<String>,
        components: &[&str],
        start_range: (f64, f64),
        time_interval: (f64, f64),
    ) -> Result<Self, OdeError> {
        let d = components.len();
        let parts = components
            .iter()
            .map(|s| parse(s, d))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(p) = parts.iter().find(|p| p.root_count() != 1) {
            return Err(ExprError::ComponentCount {
                expected: 1,
                found: p.root_count(),
            }
            .into());
        }
        OdeSystem::new(name, Expr::stack(&parts), start_range, time_interval)
    }

    pub fn dim(&self) -> usize {
        self.f.root_count()
    }

    fn rhs(&self, t: f64, y: &[f64], vars: &mut Vec<f64>) -> Result<Vec<f64>, OdeError> {
        vars.clear();
        vars.push(t);
        vars.extend_from_slice(y);
        self.f
            .eval_slice(vars)
            .map_err(|source| OdeError::Domain { t, source })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub n_samples: usize,
    pub max_steps: usize,
    /// A trajectory whose state exceeds this magnitude is treated as blown up.
    pub max_abs_state: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            n_samples: 50,
            max_steps: 200_000,
            max_abs_state: 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Vec<f64>,
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub name: String,
    pub dim: usize,
    pub seed: u64,
    pub rtol: f64,
    pub atol: f64,
    pub n_samples: usize,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryDataset {
    /// Total number of sample points `n`.
    pub fn n_total(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// Every sample as `(t, y)`, trajectory by trajectory.
    pub fn points(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.trajectories
            .iter()
            .flat_map(|tr| tr.t.iter().copied().zip(tr.y.iter().map(Vec::as_slice)))
    }

    /// Per-variable `(min, max)` over all samples, `t` first.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim + 1];
        for (t, y) in self.points() {
            for (k, v) in std::iter::once(t).chain(y.iter().copied()).enumerate() {
                bb[k].0 = bb[k].0.min(v);
                bb[k].1 = bb[k].1.max(v);
            }
        }
        bb
    }

    /// Rows `traj_id, t, y1..yd`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["traj_id".to_string(), "t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("y{i}")));
        w.write_record(&header).expect("in-memory write");
        for (id, tr) in self.trajectories.iter().enumerate() {
            for (t, y) in tr.t.iter().zip(&tr.y) {
                let mut row = vec![id.to_string(), t.to_string()];
                row.extend(y.iter().map(f64::to_string));
                w.write_record(&row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Step {
    y_new: Vec<f64>,
    /// Stage derivatives; `k[6]` is `f(t + h, y_new)`.
    k: [Vec<f64>; 7],
}

fn dopri_step(
    sys: &OdeSystem,
    t: f64,
    y: &[f64],
    k1: &[f64],
    h: f64,
    vars: &mut Vec<f64>,
) -> Result<Step, OdeError> {
    let d = y.len();
    let mut k: [Vec<f64>; 7] = Default::default();
    k[0] = k1.to_vec();
    let mut tmp = vec![0.0; d];
    for s in 1..7 {
        for i in 0..d {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        k[s] = sys.rhs(t + C[s] * h, &tmp, vars)?;
    }
    // Stage 7 is evaluated at the 5th-order solution (FSAL).
    Ok(Step { y_new: tmp, k })
}

fn error_norm(step: &Step, y: &[f64], h: f64, rtol: f64, atol: f64) -> f64 {
    let d = y.len();
    let mut sum = 0.0;
    for i in 0..d {
        let e: f64 = (0..7).map(|s| E[s] * step.k[s][i]).sum::<f64>() * h;
        let sk = atol + rtol * y[i].abs().max(step.y_new[i].abs());
        sum += (e / sk).powi(2);
    }
    (sum / d as f64).sqrt()
}

/// Dense output on `[t, t + h]` at `theta` in `[0, 1]`.
fn interpolate(step: &Step, y: &[f64], h: f64, theta: f64) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..y.len())
        .map(|i| {
            let ydiff = step.y_new[i] - y[i];
            let bspl = h * step.k[0][i] - ydiff;
            let r4 = ydiff - h * step.k[6][i] - bspl;
            let r5 = h * (0..7).map(|s| D[s] * step.k[s][i]).sum::<f64>();
            y[i] + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)))
        })
        .collect()
}

fn initial_step(
    sys: &OdeSystem,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    span: f64,
    opts: &IntegratorOptions,
    vars: &mut Vec<f64>,
) -> f64 {
    let d = y0.len() as f64;
    let scale = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let norm = |v: &[f64]| {
        (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / d).sqrt()
    };
    let (d0, d1) = (norm(y0), norm(f0));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let h = match sys.rhs(t0 + h0, &y1, vars) {
        Ok(f1) => {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            let d2 = norm(&diff) / h0;
            let m = d1.max(d2);
            let h1 = if m <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / m).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
        Err(_) => h0 * 1e-3,
    };
    h.min(span).max(span * 1e-12)
}

fn sample_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Integrates until `t1` or the first failure; samples reached before a
/// failure are returned alongside it.
fn integrate_partial(
    sys: &OdeSystem,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> (Trajectory, Option<OdeError>) {
    let times = sample_times(t0, t1, opts.n_samples);
    let mut out = Trajectory {
        initial: y0.to_vec(),
        t: Vec::with_capacity(times.len()),
        y: Vec::with_capacity(times.len()),
    };
    if times.is_empty() {
        return (out, None);
    }
    out.t.push(t0);
    out.y.push(y0.to_vec());
    let mut next = 1;
    if next >= times.len() {
        return (out, None);
    }

    let mut vars = Vec::with_capacity(y0.len() + 1);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = match sys.rhs(t, &y, &mut vars) {
        Ok(k) => k,
        Err(e) => return (out, Some(e)),
    };
    let span = t1 - t0;
    let mut h = initial_step(sys, t0, &y, &k1, span, opts, &mut vars);
    let mut steps = 0;
    let mut last_rejected = false;

    while next < times.len() {
        steps += 1;
        if steps > opts.max_steps {
            return (out, Some(OdeError::TooManySteps { t }));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return (out, Some(OdeError::StepUnderflow { t }));
        }
        let h_try = h.min(t1 - t);
        let step = match dopri_step(sys, t, &y, &k1, h_try, &mut vars) {
            Ok(s) => s,
            Err(OdeError::Domain { .. }) => {
                // The trial stages left the domain; retreat.
                h = h_try * 0.25;
                last_rejected = true;
                continue;
            }
            Err(e) => return (out, Some(e)),
        };
        let err = error_norm(&step, &y, h_try, opts.rtol, opts.atol);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h = h_try * fac;
            last_rejected = true;
            continue;
        }
        let t_new = if h_try == t1 - t { t1 } else { t + h_try };
        while next < times.len() && times[next] <= t_new {
            let yi = if times[next] == t_new {
                step.y_new.clone()
            } else {
                interpolate(&step, &y, h_try, (times[next] - t) / h_try)
            };
            out.t.push(times[next]);
            out.y.push(yi);
            next += 1;
        }
        let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h = h_try * fac;
        t = t_new;
        y = step.y_new;
        k1 = step.k[6].clone();
        if y.iter().any(|v| !v.is_finite() || v.abs() > opts.max_abs_state) {
            // Drop samples taken past the blow-up threshold.
            while out.y.last().is_some_and(|s| s.iter().any(|v| v.abs() > opts.max_abs_state)) {
                out.t.pop();
                out.y.pop();
            }
            return (out, Some(OdeError::Diverged { t }));
        }
    }
    (out, None)
}

/// Solves `y' = f(t, y)` from `y(t0) = y0` and returns the solution at
/// `n_samples` equally spaced times in `[t0, t1]`.
pub fn integrate(
    sys: &OdeSystem,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, OdeError> {
    if y0.len() != sys.dim() {
        return Err(OdeError::InvalidSystem(format!(
            "initial state has {} components, system has {}",
            y0.len(),
            sys.dim()
        )));
    }
    if !(t1 > t0) && opts.n_samples > 1 {
        return Err(OdeError::InvalidSystem(format!("empty interval [{t0}, {t1}]")));
    }
    match integrate_partial(sys, y0, t0, t1, opts) {
        (tr, None) => Ok(tr),
        (_, Some(e)) => Err(e),
    }
}

/// Classical fixed-step Dormand–Prince (5th-order solution); returns the
/// final state. Used to measure the order of the method.
pub fn integrate_fixed(
    sys: &OdeSystem,
    y0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Vec<f64>, OdeError> {
    let n = ((t1 - t0) / h).round().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let mut vars = Vec::new();
    let mut y = y0.to_vec();
    let mut k1 = sys.rhs(t0, &y, &mut vars)?;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let step = dopri_step(sys, t, &y, &k1, h, &mut vars)?;
        y = step.y_new;
        k1 = step.k[6].clone();
    }
    Ok(y)
}

/// Trajectories truncated by blow-up are kept if they retain at least this
/// share of the requested samples (and never fewer than two).
const MIN_KEPT_FRACTION: f64 = 0.1;
const MAX_ATTEMPTS: usize = 100;

/// Simulates `n_traj` trajectories from seeded uniform initial conditions.
///
/// Trajectory `i` draws its initial conditions from its own stream of the
/// seeded generator, so the dataset does not depend on scheduling.
pub fn build_dataset(
    sys: &OdeSystem,
    n_traj: usize,
    opts: &IntegratorOptions,
    seed: u64,
) -> Result<TrajectoryDataset, OdeError> {
    let d = sys.dim();
    if n_traj < d + 1 {
        return Err(OdeError::TooFewTrajectories {
            needed: d + 1,
            dim: d,
            got: n_traj,
        });
    }
    let min_kept = ((opts.n_samples as f64 * MIN_KEPT_FRACTION).ceil() as usize)
        .max(2)
        .min(opts.n_samples);
    let (lo, hi) = sys.start_range;
    let (t0, t1) = sys.time_interval;
    let trajectories = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut last = None;
            for _ in 0..MAX_ATTEMPTS {
                let y0: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
                match integrate_partial(sys, &y0, t0, t1, opts) {
                    (tr, None) => return Ok(tr),
                    (tr, Some(e @ OdeError::Diverged { .. })) => {
                        if tr.len() >= min_kept {
                            return Ok(tr);
                        }
                        last = Some(e);
                    }
                    (_, Some(e)) => last = Some(e),
                }
            }
            Err(OdeError::DatasetFailed {
                name: sys.name.clone(),
                attempts: MAX_ATTEMPTS,
                last: Box::new(last.expect("at least one attempt")),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrajectoryDataset {
        name: sys.name.clone(),
        dim: d,
        seed,
        rtol: opts.rtol,
        atol: opts.atol,
        n_samples: opts.n_samples,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intro() -> OdeSystem {
        OdeSystem::parse("intro", &["-y2", "y1"], (1.0, 2.0), (0.0, 2.0)).unwrap()
    }

    #[test]
    fn quarter_turn_of_the_oscillator() {
        let tr = integrate(
            &intro(),
            &[1.0, 0.0],
            0.0,
            std::f64::consts::FRAC_PI_2,
            &IntegratorOptions::default(),
        )
        .unwrap();
        let end = tr.y.last().unwrap();
        assert!(end[0].abs() < 1e-8 && (end[1] - 1.0).abs() < 1e-8, "{end:?}");
        assert_eq!(tr.len(), 50);
    }

    #[test]
    fn dense_output_tracks_the_solution() {
        let tr = integrate(&intro(), &[1.0, 0.0], 0.0, 3.0, &IntegratorOptions::default()).unwrap();
        for (t, y) in tr.t.iter().zip(&tr.y) {
            assert!((y[0] - t.cos()).abs() < 1e-8);
            assert!((y[1] - t.sin()).abs() < 1e-8);
        }
        assert!(tr.t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_sample_returns_initial_state() {
        let opts = IntegratorOptions {
            n_samples: 1,
            ..Default::default()
        };
        let tr = integrate(&intro(), &[0.3, 0.7], 1.0, 1.0, &opts).unwrap();
        assert_eq!(tr.t, vec![1.0]);
        assert_eq!(tr.y, vec![vec![0.3, 0.7]]);
    }

    #[test]
    fn too_few_trajectories_is_rejected() {
        let err = build_dataset(&intro(), 2, &IntegratorOptions::default(), 1).unwrap_err();
        assert!(matches!(err, OdeError::TooFewTrajectories { needed: 3, .. }));
    }

    #[test]
    fn datasets_are_reproducible() {
        let opts = IntegratorOptions::default();
        let a = build_dataset(&intro(), 3, &opts, 7).unwrap();
        let b = build_dataset(&intro(), 3, &opts, 7).unwrap();
        assert_eq!(a, b);
        let c = build_dataset(&intro(), 3, &opts, 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.n_total(), 150);
        for tr in &a.trajectories {
            assert!(tr.initial.iter().all(|v| (1.0..2.0).contains(v)));
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = OdeSystem::parse("riccati", &["y1^2"], (1.0, 2.0), (0.0, 2.0)).unwrap();
        let err = integrate(&sys, &[1.0], 0.0, 2.0, &IntegratorOptions::default()).unwrap_err();
        assert!(matches!(err, OdeError::Diverged { t } | OdeError::StepUnderflow { t } if t < 1.0));
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let opts = IntegratorOptions {
            n_samples: 3,
            ..Default::default()
        };
        let ds = build_dataset(&intro(), 3, &opts, 1).unwrap();
        let csv = ds.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "traj_id,t,y1,y2");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].starts_with("0,0,"));
    }
}
