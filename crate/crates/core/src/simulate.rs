//! Monte Carlo path engine for drawdown, drawup and extrema functionals.
//!
//! Paths are simulated on a uniform grid. Brownian steps are exact Gaussian
//! increments, compound-Poisson jumps are placed at their exact arrival
//! times, and stable increments come from the Chambers–Mallows–Stuck
//! transform. Every path draws from its own ChaCha stream keyed by
//! `(seed, path index)`, so results do not depend on the worker count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::EmpiricalLaw;
use crate::models::LevyModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingRule {
    /// Stop at a deterministic time.
    FixedTime(f64),
    /// Stop at the first passage above a level.
    PassageAbove(f64),
    /// Stop at an independent exponential time with the given rate.
    ExponentialTime(f64),
}

impl StoppingRule {
    /// Parses `fixed:T`, `passage:B` or `exp:G`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, value) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("stopping rule '{text}' is not of the form kind:value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number in stopping rule '{text}'")))?;
        match kind.trim() {
            "fixed" => Ok(StoppingRule::FixedTime(v)),
            "passage" => Ok(StoppingRule::PassageAbove(v)),
            "exp" => Ok(StoppingRule::ExponentialTime(v)),
            other => Err(Error::Config(format!("unknown stopping rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    Passage,
    ExpTime,
    DownCrossing,
    /// The running maximum loss exceeded the configured cap.
    DrawdownCap,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Horizon => "horizon",
            StopReason::Passage => "passage",
            StopReason::ExpTime => "exp_time",
            StopReason::DownCrossing => "down_crossing",
            StopReason::DrawdownCap => "drawdown_cap",
        }
    }
}

/// Functionals of one path at its stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppedStats {
    pub m_minus: f64,
    pub m_plus: f64,
    pub sup: f64,
    pub inf: f64,
    pub stop_time: f64,
    pub stop_reason: StopReason,
    /// Value of the process at the stopping time.
    #[serde(skip)]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: LevyModel,
    pub dt: f64,
    /// Longest simulated time for passage and exponential stopping.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub stopping: StoppingRule,
    /// Sample the within-step maximum and minimum from the Brownian bridge.
    pub bridge_correction: bool,
    /// Stop at the first passage below this negative level.
    pub barrier_below: Option<f64>,
    /// Stop once the running maximum loss exceeds this value.
    pub drawdown_cap: Option<f64>,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(model: LevyModel, stopping: StoppingRule) -> Self {
        SimConfig {
            model,
            dt: 1e-3,
            horizon: 1e3,
            n_paths: 10_000,
            seed: 0,
            stopping,
            bridge_correction: false,
            barrier_below: None,
            drawdown_cap: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| Error::Config(e.to_string()))?;
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive(self.dt, "dt")?;
        positive(self.horizon, "horizon")?;
        if self.n_paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        match self.stopping {
            StoppingRule::FixedTime(t) => positive(t, "stopping time")?,
            StoppingRule::ExponentialTime(g) => positive(g, "exponential rate")?,
            StoppingRule::PassageAbove(b) => {
                positive(b, "passage level")?;
                if !self.model.is_spectrally_negative() {
                    return Err(Error::Config(format!(
                        "passage stopping needs a model without positive jumps, got {}",
                        self.model.name()
                    )));
                }
            }
        }
        if self.bridge_correction && !matches!(self.model, LevyModel::BrownianDrift { .. }) {
            return Err(Error::Config("bridge correction is available for Brownian motion only".into()));
        }
        if let Some(b) = self.barrier_below {
            if !(b < 0.0) || !b.is_finite() {
                return Err(Error::Config(format!("lower barrier must be negative, got {b}")));
            }
        }
        if let Some(c) = self.drawdown_cap {
            positive(c, "drawdown cap")?;
        }
        Ok(())
    }
}

/// One simulated trajectory with its running functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub running_sup: Vec<f64>,
    pub running_inf: Vec<f64>,
    pub drawdown: Vec<f64>,
    pub drawup: Vec<f64>,
}

impl PathGrid {
    pub fn from_values(times: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut running_sup = Vec::with_capacity(n);
        let mut running_inf = Vec::with_capacity(n);
        let mut drawdown = Vec::with_capacity(n);
        let mut drawup = Vec::with_capacity(n);
        let (mut s, mut i) = (f64::NEG_INFINITY, f64::INFINITY);
        for &x in &values {
            s = s.max(x);
            i = i.min(x);
            running_sup.push(s);
            running_inf.push(i);
            drawdown.push(s - x);
            drawup.push(x - i);
        }
        PathGrid {
            times,
            values,
            running_sup,
            running_inf,
            drawdown,
            drawup,
        }
    }

    /// Maximum loss of the recorded values, via the running recurrence.
    pub fn max_loss(&self) -> f64 {
        self.drawdown.iter().copied().fold(0.0, f64::max)
    }

    /// Maximum gain of the recorded values.
    pub fn max_gain(&self) -> f64 {
        self.drawup.iter().copied().fold(0.0, f64::max)
    }

    /// The path of `−X` on the same grid.
    pub fn negated(&self) -> PathGrid {
        PathGrid::from_values(self.times.clone(), self.values.iter().map(|v| -v).collect())
    }
}

/// Draws a standard `S_α(1, β, 0)` variable, characteristic function
/// `exp(−|θ|^α (1 − iβ sgn θ tan(πα/2)))`, for `α ≠ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSampler {
    alpha: f64,
    b: f64,
    s: f64,
}

impl StableSampler {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) || alpha == 1.0 {
            return Err(Error::Domain(format!("stable sampler needs alpha in (0,1)∪(1,2], got {alpha}")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("stable sampler needs beta in [-1,1], got {beta}")));
        }
        let zeta = beta * (PI * alpha / 2.0).tan();
        Ok(StableSampler {
            alpha,
            b: zeta.atan() / alpha,
            s: (1.0 + zeta * zeta).powf(0.5 / alpha),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        while u == 0.0 {
            u = rng.random();
        }
        let v = PI * (u - 0.5);
        let w: f64 = Exp1.sample(rng);
        let a = self.alpha;
        let t = a * (v + self.b);
        self.s * t.sin() / v.cos().powf(1.0 / a) * ((v - t).cos() / w).powf((1.0 - a) / a)
    }
}

#[derive(Debug, Clone, Copy)]
enum Increments {
    Gaussian { drift: f64, vol: f64 },
    JumpDiffusion { drift: f64, vol: f64, rate: f64, mean: f64 },
    Stable { sampler: StableSampler, c: f64, alpha: f64 },
}

impl Increments {
    fn new(model: &LevyModel) -> Result<Self> {
        Ok(match *model {
            LevyModel::BrownianDrift { mu, sigma } => Increments::Gaussian { drift: -mu, vol: sigma },
            LevyModel::JumpDiffusion {
                mu,
                sigma,
                jump_rate,
                jump_mean,
            } => Increments::JumpDiffusion {
                drift: -mu,
                vol: sigma,
                rate: jump_rate,
                mean: jump_mean,
            },
            LevyModel::StableSN { alpha, c } => Increments::Stable {
                sampler: StableSampler::new(alpha, -1.0)?,
                c,
                alpha,
            },
            LevyModel::StableGeneral { alpha, beta, c } => Increments::Stable {
                sampler: StableSampler::new(alpha, beta)?,
                c,
                alpha,
            },
        })
    }

    fn continuous<R: Rng + ?Sized>(&self, rng: &mut R, h: f64) -> f64 {
        match *self {
            Increments::Gaussian { drift, vol } | Increments::JumpDiffusion { drift, vol, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                drift * h + vol * h.sqrt() * z
            }
            Increments::Stable { sampler, c, alpha } => (c * h).powf(1.0 / alpha) * sampler.sample(rng),
        }
    }

    fn variance_rate(&self) -> f64 {
        match *self {
            Increments::Gaussian { vol, .. } | Increments::JumpDiffusion { vol, .. } => vol * vol,
            Increments::Stable { .. } => 0.0,
        }
    }

    fn creeps_down(&self) -> bool {
        matches!(self, Increments::Gaussian { .. })
    }
}

fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Walker {
    x: f64,
    sup: f64,
    inf: f64,
    m_minus: f64,
    m_plus: f64,
}

impl Walker {
    fn observe(&mut self, v: f64) {
        self.x = v;
        if v > self.sup {
            self.sup = v;
        }
        if v < self.inf {
            self.inf = v;
        }
        self.m_minus = self.m_minus.max(self.sup - v);
        self.m_plus = self.m_plus.max(v - self.inf);
    }

    /// Step to `x1` whose within-step extremes are `hi ≥ max(x0, x1)` and
    /// `lo ≤ min(x0, x1)`. Their order inside the step is unknown, so the
    /// pair `hi − lo` is not used as a loss or gain.
    fn observe_bridged(&mut self, x1: f64, hi: f64, lo: f64) {
        self.m_minus = self.m_minus.max(self.sup - lo).max(hi - x1);
        self.m_plus = self.m_plus.max(hi - self.inf).max(x1 - lo);
        self.sup = self.sup.max(hi);
        self.inf = self.inf.min(lo);
        self.x = x1;
    }

    fn stop(&self, time: f64, reason: StopReason) -> StoppedStats {
        StoppedStats {
            m_minus: self.m_minus,
            m_plus: self.m_plus,
            sup: self.sup,
            inf: self.inf,
            stop_time: time,
            stop_reason: reason,
            value: self.x,
        }
    }
}

/// Maximum and minimum of a Brownian bridge from `a` to `b` with variance
/// `v` over the step, from the inverse of `P{max > m} = exp(−2(m−a)(m−b)/v)`.
fn bridge_extremes<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64, v: f64) -> (f64, f64) {
    let d2 = (b - a) * (b - a);
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = 1.0 - rng.random::<f64>();
    let hi = 0.5 * (a + b + (d2 - 2.0 * v * u1.ln()).sqrt());
    let lo = 0.5 * (a + b - (d2 - 2.0 * v * u2.ln()).sqrt());
    (hi, lo)
}

struct PathRun<'a> {
    cfg: &'a SimConfig,
    inc: Increments,
    rng: ChaCha8Rng,
    w: Walker,
    record: Option<(Vec<f64>, Vec<f64>)>,
}

impl PathRun<'_> {
    /// Continuous motion over `[t, t + h]`; returns the stop if one occurs.
    fn diffuse(&mut self, t: f64, h: f64) -> Option<StoppedStats> {
        if h <= 0.0 {
            return None;
        }
        let x0 = self.w.x;
        let x1 = x0 + self.inc.continuous(&mut self.rng, h);
        let (hi, lo) = if self.cfg.bridge_correction {
            bridge_extremes(&mut self.rng, x0, x1, self.inc.variance_rate() * h)
        } else {
            (x1, x1)
        };
        let crossing = |level: f64, reached: bool| {
            if reached && x1 != x0 {
                t + h * ((level - x0) / (x1 - x0)).clamp(0.0, 1.0)
            } else {
                t + 0.5 * h
            }
        };
        if let StoppingRule::PassageAbove(beta) = self.cfg.stopping {
            if hi >= beta {
                let time = crossing(beta, x1 >= beta);
                self.w.m_plus = self.w.m_plus.max(beta - self.w.inf);
                self.w.sup = self.w.sup.max(beta);
                self.w.x = beta;
                return Some(self.finish(time, StopReason::Passage));
            }
        }
        if let Some(b) = self.cfg.barrier_below {
            if lo < b {
                let time = crossing(b, x1 < b);
                self.w.observe(if self.inc.creeps_down() { b } else { x1 });
                return Some(self.finish(time, StopReason::DownCrossing));
            }
        }
        if self.cfg.bridge_correction {
            self.w.observe_bridged(x1, hi, lo);
        } else {
            self.w.observe(x1);
        }
        self.capped(t + h)
    }

    fn jump(&mut self, t: f64, size: f64) -> Option<StoppedStats> {
        self.w.observe(self.w.x - size);
        if let Some(b) = self.cfg.barrier_below {
            if self.w.x < b {
                return Some(self.finish(t, StopReason::DownCrossing));
            }
        }
        self.capped(t)
    }

    fn capped(&mut self, t: f64) -> Option<StoppedStats> {
        match self.cfg.drawdown_cap {
            Some(cap) if self.w.m_minus > cap => Some(self.finish(t, StopReason::DrawdownCap)),
            _ => None,
        }
    }

    fn push(&mut self, t: f64) {
        if let Some((times, values)) = self.record.as_mut() {
            times.push(t);
            values.push(self.w.x);
        }
    }

    fn finish(&mut self, t: f64, reason: StopReason) -> StoppedStats {
        if reason != StopReason::Horizon && reason != StopReason::ExpTime {
            self.push(t);
        }
        self.w.stop(t, reason)
    }

    fn run(&mut self) -> StoppedStats {
        let cfg = self.cfg;
        let (end, end_reason) = match cfg.stopping {
            StoppingRule::FixedTime(t) => (t, StopReason::Horizon),
            StoppingRule::PassageAbove(_) => (cfg.horizon, StopReason::Horizon),
            StoppingRule::ExponentialTime(g) => {
                let e: f64 = Exp1.sample(&mut self.rng);
                if e / g < cfg.horizon {
                    (e / g, StopReason::ExpTime)
                } else {
                    (cfg.horizon, StopReason::Horizon)
                }
            }
        };
        let mut next_jump = match self.inc {
            Increments::JumpDiffusion { rate, .. } => {
                let e: f64 = Exp1.sample(&mut self.rng);
                e / rate
            }
            _ => f64::INFINITY,
        };
        self.push(0.0);
        // the last step is shortened so the path ends exactly at `end`
        let steps = ((end / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        for k in 0..steps {
            let t0 = k as f64 * cfg.dt;
            let t1 = if k + 1 == steps { end } else { t0 + cfg.dt };
            let mut s = t0;
            while next_jump < t1 {
                if let Some(stop) = self.diffuse(s, next_jump - s) {
                    return stop;
                }
                self.push(next_jump);
                let Increments::JumpDiffusion { rate, mean, .. } = self.inc else {
                    unreachable!()
                };
                let e: f64 = Exp1.sample(&mut self.rng);
                let size = mean * e;
                if let Some(stop) = self.jump(next_jump, size) {
                    return stop;
                }
                self.push(next_jump);
                s = next_jump;
                let e: f64 = Exp1.sample(&mut self.rng);
                next_jump += e / rate;
            }
            if let Some(stop) = self.diffuse(s, t1 - s) {
                return stop;
            }
            self.push(t1);
        }
        self.finish(end, end_reason)
    }
}

fn run_path(cfg: &SimConfig, inc: Increments, index: u64, record: bool) -> (StoppedStats, Option<PathGrid>) {
    let mut run = PathRun {
        cfg,
        inc,
        rng: path_rng(cfg.seed, index),
        w: Walker::default(),
        record: record.then(|| (Vec::new(), Vec::new())),
    };
    let stats = run.run();
    let grid = run.record.map(|(t, v)| PathGrid::from_values(t, v));
    (stats, grid)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Simulates `n_paths` paths; element `i` always comes from substream `i`.
pub fn simulate_paths(cfg: &SimConfig) -> Result<Vec<StoppedStats>> {
    cfg.validate()?;
    let inc = Increments::new(&cfg.model)?;
    with_pool(cfg.workers, || {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| run_path(cfg, inc, i, false).0)
            .collect()
    })
}

/// Simulates path `index` of the configuration and records its grid.
pub fn simulate_path(cfg: &SimConfig, index: u64) -> Result<(PathGrid, StoppedStats)> {
    cfg.validate()?;
    let inc = Increments::new(&cfg.model)?;
    let (stats, grid) = run_path(cfg, inc, index, true);
    Ok((grid.expect("recording was requested"), stats))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// `(value − reference)/SE`; when the sample is degenerate (frequency 0
    /// or 1) the binomial error at the reference value is used instead.
    pub fn z_score(&self, reference: f64) -> f64 {
        let se = if self.std_error > 0.0 {
            self.std_error
        } else {
            (reference * (1.0 - reference) / self.n as f64).sqrt()
        };
        if se == 0.0 {
            if self.value == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - reference) / se
        }
    }
}

/// Maximum losses stopped at the first passage above a level.
#[derive(Debug, Clone)]
pub struct PassageSample {
    pub stats: Vec<StoppedStats>,
    pub m_minus: EmpiricalLaw,
    /// Paths that reached the horizon before passing the level.
    pub unfinished: usize,
}

impl PassageSample {
    /// Frequency of `{M⁻ ≤ u, I ≥ −α}`.
    pub fn joint_frequency(&self, u: f64, alpha: f64) -> Estimate {
        let hits = self.stats.iter().filter(|s| s.m_minus <= u && s.inf >= -alpha).count();
        Estimate::proportion(hits, self.stats.len())
    }
}

/// Runs a passage-stopped simulation. Fails when more than 0.1% of paths
/// neither pass the level nor reach the drawdown cap within the horizon.
pub fn empirical_maxloss_passage(cfg: &SimConfig) -> Result<PassageSample> {
    if !matches!(cfg.stopping, StoppingRule::PassageAbove(_)) {
        return Err(Error::Config("maximum loss at passage needs a passage stopping rule".into()));
    }
    let stats = simulate_paths(cfg)?;
    let unfinished = stats.iter().filter(|s| s.stop_reason == StopReason::Horizon).count();
    if unfinished as f64 > 1e-3 * stats.len() as f64 {
        return Err(Error::Config(format!(
            "{unfinished} of {} paths did not pass the level within horizon {}",
            stats.len(),
            cfg.horizon
        )));
    }
    let m_minus = EmpiricalLaw::new(stats.iter().map(|s| s.m_minus).collect())?;
    Ok(PassageSample {
        stats,
        m_minus,
        unfinished,
    })
}

/// The four functionals at an exponential time.
#[derive(Debug, Clone)]
pub struct ExpTimeSample {
    pub stats: Vec<StoppedStats>,
    pub m_minus: EmpiricalLaw,
    pub m_plus: EmpiricalLaw,
    pub sup: EmpiricalLaw,
    pub inf: EmpiricalLaw,
}

impl ExpTimeSample {
    /// Frequency of `{a < I_T, S_T < b}`.
    pub fn sup_inf_frequency(&self, a: f64, b: f64) -> Estimate {
        let hits = self.stats.iter().filter(|s| s.inf > a && s.sup < b).count();
        Estimate::proportion(hits, self.stats.len())
    }
}

pub fn empirical_exp_time_stats(cfg: &SimConfig) -> Result<ExpTimeSample> {
    if !matches!(cfg.stopping, StoppingRule::ExponentialTime(_)) {
        return Err(Error::Config("exponential-time statistics need an exponential stopping rule".into()));
    }
    let stats = simulate_paths(cfg)?;
    let law = |f: fn(&StoppedStats) -> f64| EmpiricalLaw::new(stats.iter().map(f).collect());
    Ok(ExpTimeSample {
        m_minus: law(|s| s.m_minus)?,
        m_plus: law(|s| s.m_plus)?,
        sup: law(|s| s.sup)?,
        inf: law(|s| s.inf)?,
        stats,
    })
}

/// Fraction of paths started `x_minus_a` above a barrier whose exponential
/// clock rings before the first passage below the barrier. The model,
/// grid, path count, seed, horizon and bridge flag come from `base`.
pub fn empirical_h_check(base: &SimConfig, gamma: f64, x_minus_a: f64) -> Result<Estimate> {
    if !(x_minus_a > 0.0) {
        return Err(Error::Domain(format!("x - a must be positive, got {x_minus_a}")));
    }
    let cfg = SimConfig {
        stopping: StoppingRule::ExponentialTime(gamma),
        barrier_below: Some(-x_minus_a),
        drawdown_cap: None,
        ..base.clone()
    };
    let stats = simulate_paths(&cfg)?;
    let hits = stats.iter().filter(|s| s.stop_reason == StopReason::ExpTime).count();
    Ok(Estimate::proportion(hits, stats.len()))
}
