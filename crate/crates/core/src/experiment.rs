//! Closed-loop comparison on a periodic plant: open-loop excitation, then
//! the lifted controller, the non-lifted baseline and no control, all driven
//! by the same disturbance and noise realizations.
//!
//! Random numbers come from `ChaCha8Rng` seeded with the configured seed;
//! stream 1 draws the innovation noise and stream 2 the excitation input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::{ConfigFile, ControllerSettings, ExperimentSettings, PlantConfig, Policy};
use crate::controller::{iteration_cost, ClDeePc, DeePrc, PlantInterface};
use crate::error::{Error, Result};
use crate::plant::{phase, LptvPlant, TrajectoryLog};

/// `amplitude * sin(2 pi k / period)`, exactly periodic in `k`.
pub fn periodic_disturbance(k: i64, period: usize, amplitude: f64) -> f64 {
    amplitude * (std::f64::consts::TAU * phase(k, period) as f64 / period as f64).sin()
}

const NOISE_STREAM: u64 = 1;
const EXCITATION_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub controller: ControllerSettings,
    pub experiment: ExperimentSettings,
    /// File the configuration was read from, if any.
    pub source: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn case_study() -> Self {
        Self::from(ConfigFile::case_study())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from(ConfigFile::load(path)?);
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn validate(&self, plant: &LptvPlant) -> Result<()> {
        let e = &self.experiment;
        if e.init_periods == 0 || e.run_periods == 0 {
            return Err(Error::Config("initialization and run lengths must be positive".into()));
        }
        if !(e.noise_variance >= 0.0 && e.noise_variance.is_finite()) {
            return Err(Error::Config("noise variance must be finite and non-negative".into()));
        }
        if !(e.excitation_variance >= 0.0 && e.excitation_variance.is_finite()) {
            return Err(Error::Config("excitation variance must be finite and non-negative".into()));
        }
        if !e.disturbance_amplitude.is_finite() {
            return Err(Error::Config("disturbance amplitude must be finite".into()));
        }
        if let Some(x0) = &e.x0 {
            Error::check_dim("initial state", plant.states(), x0.len())?;
        }
        Ok(())
    }
}

impl From<ConfigFile> for ExperimentConfig {
    fn from(file: ConfigFile) -> Self {
        ExperimentConfig {
            plant: file.plant,
            controller: file.controller,
            experiment: file.experiment,
            source: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    DeePrc,
    Baseline,
    NoControl,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::DeePrc, Arm::Baseline, Arm::NoControl];

    pub fn name(self) -> &'static str {
        match self {
            Arm::DeePrc => "deeprc",
            Arm::Baseline => "baseline",
            Arm::NoControl => "nocontrol",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Arm::DeePrc => "DeePRC",
            Arm::Baseline => "CL-DeePC",
            Arm::NoControl => "no control",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmRecord {
    pub arm: Arm,
    pub log: TrajectoryLog,
    /// Cost of every complete period, starting with the first one.
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub policy: Policy,
    pub period: usize,
    pub x0: Vec<f64>,
    pub noise: bool,
    pub noise_variance: f64,
    pub excitation_variance: f64,
    pub disturbance_amplitude: f64,
    pub init_periods: usize,
    pub run_periods: usize,
    /// First sample computed by a controller.
    pub enable_sample: i64,
    /// Data columns behind the first and the last predictor of each controller.
    pub deeprc_columns: (usize, usize),
    pub baseline_columns: (usize, usize),
    pub rng: String,
    /// FNV-1a hash of the disturbance and noise samples, equal for all arms.
    pub realization_hash: String,
    pub config_source: Option<PathBuf>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub deeprc: ArmRecord,
    pub baseline: ArmRecord,
    pub nocontrol: ArmRecord,
    pub metadata: RunMetadata,
}

impl RunReport {
    pub fn arm(&self, arm: Arm) -> &ArmRecord {
        match arm {
            Arm::DeePrc => &self.deeprc,
            Arm::Baseline => &self.baseline,
            Arm::NoControl => &self.nocontrol,
        }
    }

    /// Index of the first period under control.
    pub fn enable_period(&self) -> usize {
        self.metadata.init_periods
    }

    /// Costs of the periods after the controllers were enabled.
    pub fn post_enable_costs(&self, arm: Arm) -> &[f64] {
        let costs = &self.arm(arm).costs;
        &costs[self.enable_period().min(costs.len())..]
    }
}

struct Realizations {
    d: Vec<DVector<f64>>,
    e: Vec<DVector<f64>>,
    excitation: Vec<DVector<f64>>,
}

fn draw_realizations(
    settings: &ExperimentSettings,
    plant: &LptvPlant,
    total: usize,
    init: usize,
) -> Result<Realizations> {
    let period = plant.period();
    let d = (0..total)
        .map(|k| {
            DVector::from_element(
                plant.disturbances(),
                periodic_disturbance(k as i64, period, settings.disturbance_amplitude),
            )
        })
        .collect();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(settings.seed);
    noise_rng.set_stream(NOISE_STREAM);
    let noise = Normal::new(0.0, settings.noise_variance.sqrt())
        .map_err(|e| Error::Config(e.to_string()))?;
    let e = (0..total)
        .map(|_| {
            if settings.noise {
                DVector::from_fn(plant.outputs(), |_, _| noise.sample(&mut noise_rng))
            } else {
                DVector::zeros(plant.outputs())
            }
        })
        .collect();
    let mut input_rng = ChaCha8Rng::seed_from_u64(settings.seed);
    input_rng.set_stream(EXCITATION_STREAM);
    let input = Normal::new(0.0, settings.excitation_variance.sqrt())
        .map_err(|e| Error::Config(e.to_string()))?;
    let excitation = (0..init)
        .map(|_| DVector::from_fn(plant.inputs(), |_, _| input.sample(&mut input_rng)))
        .collect();
    Ok(Realizations { d, e, excitation })
}

/// Simulated plant fed with the shared exogenous signals.
struct Simulation<'a> {
    plant: &'a LptvPlant,
    log: TrajectoryLog,
    signals: &'a Realizations,
}

impl PlantInterface for Simulation<'_> {
    fn time(&self) -> i64 {
        self.log.next_time()
    }

    fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let k = self.log.len();
        if k >= self.signals.d.len() {
            return Err(Error::Length(format!("simulation horizon of {k} samples exhausted")));
        }
        Ok(self
            .log
            .record(self.plant, u, &self.signals.d[k], &self.signals.e[k])?
            .clone())
    }
}

fn period_costs(log: &TrajectoryLog, period: usize, q: f64, r: f64) -> Result<Vec<f64>> {
    let periods = log.len() / period;
    let l = log.y.first().map_or(0, |v| v.len());
    let m = log.u.first().map_or(0, |v| v.len());
    let qm = DMatrix::identity(l * period, l * period) * q;
    let rm = DMatrix::identity(m * period, m * period) * r;
    (0..periods)
        .map(|j| {
            let span = j * period..(j + 1) * period;
            let y = crate::hankel::stack_vectors(&log.y[span.clone()]);
            let u = crate::hankel::stack_vectors(&log.u[span]);
            iteration_cost(&y, &u, &qm, &rm)
        })
        .collect()
}

/// FNV-1a over the bit patterns of the disturbance and noise samples.
pub fn realization_hash(log: &TrajectoryLog) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in log.d.iter().chain(&log.e) {
        for x in v.iter() {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    h
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Run the three arms.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let started_unix = unix_now();
    let clock = Instant::now();
    let plant = cfg.plant.build()?;
    cfg.validate(&plant)?;
    let settings = &cfg.experiment;
    let period = plant.period();
    let init = settings.init_periods * period;
    let total = init + settings.run_periods * period;
    // configuration errors surface before any simulation
    let mut deeprc = DeePrc::new(&cfg.controller, period, plant.inputs(), plant.outputs(), 0)?;
    let mut baseline = ClDeePc::new(&cfg.controller, period, plant.inputs(), plant.outputs(), 0)?;

    let x0 = match &settings.x0 {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(plant.states()),
    };
    let signals = draw_realizations(settings, &plant, total, init)?;

    let mut open_loop = Simulation {
        plant: &plant,
        log: TrajectoryLog::new(0, x0.clone()),
        signals: &signals,
    };
    for u in &signals.excitation {
        let y = open_loop.apply(u)?;
        deeprc.observe(u, &y)?;
        baseline.observe(u, &y)?;
    }

    let mut sim = Simulation {
        plant: &plant,
        log: open_loop.log.clone(),
        signals: &signals,
    };
    let mut deeprc_columns = (0, 0);
    while sim.log.len() < total {
        let out = deeprc.step(&mut sim)?;
        if deeprc_columns.0 == 0 {
            deeprc_columns.0 = out.columns;
        }
        deeprc_columns.1 = out.columns;
    }
    let deeprc_log = sim.log;

    let mut sim = Simulation {
        plant: &plant,
        log: open_loop.log,
        signals: &signals,
    };
    let mut baseline_columns = (0, 0);
    while sim.log.len() < total {
        let out = baseline.step(&mut sim)?;
        if baseline_columns.0 == 0 {
            baseline_columns.0 = out.columns;
        }
        baseline_columns.1 = out.columns;
    }
    let baseline_log = sim.log;

    let mut sim = Simulation {
        plant: &plant,
        log: TrajectoryLog::new(0, x0.clone()),
        signals: &signals,
    };
    let zero = DVector::zeros(plant.inputs());
    for _ in 0..total {
        sim.apply(&zero)?;
    }
    let nocontrol_log = sim.log;

    let hash = realization_hash(&deeprc_log);
    if realization_hash(&baseline_log) != hash || realization_hash(&nocontrol_log) != hash {
        return Err(Error::Config("arms saw different exogenous signals".into()));
    }
    let (q, r) = (cfg.controller.q, cfg.controller.r);
    let record = |arm, log: TrajectoryLog| -> Result<ArmRecord> {
        Ok(ArmRecord {
            arm,
            costs: period_costs(&log, period, q, r)?,
            log,
        })
    };
    let metadata = RunMetadata {
        seed: settings.seed,
        policy: cfg.controller.policy,
        period,
        x0: x0.iter().copied().collect(),
        noise: settings.noise,
        noise_variance: settings.noise_variance,
        excitation_variance: settings.excitation_variance,
        disturbance_amplitude: settings.disturbance_amplitude,
        init_periods: settings.init_periods,
        run_periods: settings.run_periods,
        enable_sample: init as i64,
        deeprc_columns,
        baseline_columns,
        rng: format!(
            "ChaCha8Rng seed {} (noise stream {NOISE_STREAM}, excitation stream {EXCITATION_STREAM})",
            settings.seed
        ),
        realization_hash: format!("{hash:016x}"),
        config_source: cfg.source.clone(),
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
    };
    Ok(RunReport {
        deeprc: record(Arm::DeePrc, deeprc_log)?,
        baseline: record(Arm::Baseline, baseline_log)?,
        nocontrol: record(Arm::NoControl, nocontrol_log)?,
        metadata,
    })
}

// ---------------------------------------------------------------------------
// CSV

fn channel_names(prefix: &str, count: usize) -> Vec<String> {
    if count == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=count).map(|i| format!("{prefix}{i}")).collect()
    }
}

fn signal_dims(log: &TrajectoryLog, fallback: (usize, usize, usize)) -> (usize, usize, usize) {
    match (log.u.first(), log.y.first(), log.d.first()) {
        (Some(u), Some(y), Some(d)) => (u.len(), y.len(), d.len()),
        _ => fallback,
    }
}

/// Header of a per-arm CSV: `k`, inputs, outputs, disturbances, noise.
pub fn arm_header(r: usize, l: usize, m: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend(channel_names("u", r));
    h.extend((1..=l).map(|i| format!("y{i}")));
    h.extend(channel_names("d", m));
    h.extend((1..=l).map(|i| format!("e{i}")));
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_arm_csv(path: &Path, log: &TrajectoryLog, dims: (usize, usize, usize)) -> Result<()> {
    let (r, l, m) = signal_dims(log, dims);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", arm_header(r, l, m).join(",")).map_err(io)?;
    for i in 0..log.len() {
        let mut row = vec![(log.k0 + i as i64).to_string()];
        for v in [&log.u[i], &log.y[i], &log.d[i], &log.e[i]] {
            row.extend(v.iter().map(|&x| fmt(x)));
        }
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub const COST_HEADER: [&str; 4] = ["j", "cost_deeprc", "cost_baseline", "cost_nocontrol"];

/// Write one CSV per arm, the iteration-cost CSV and `metadata.json` into
/// `dir`. Returns the written paths.
pub fn export_csv(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let dims = [&report.deeprc, &report.baseline, &report.nocontrol]
        .iter()
        .map(|a| signal_dims(&a.log, (0, 0, 0)))
        .find(|d| *d != (0, 0, 0))
        .unwrap_or((1, 2, 1));
    for arm in Arm::ALL {
        let path = dir.join(format!("{}.csv", arm.name()));
        write_arm_csv(&path, &report.arm(arm).log, dims)?;
        written.push(path);
    }

    let path = dir.join("iteration_cost.csv");
    let mut w = create(&path)?;
    let io = |e| Error::io(&path, e);
    writeln!(w, "{}", COST_HEADER.join(",")).map_err(io)?;
    let n = Arm::ALL
        .iter()
        .map(|&a| report.arm(a).costs.len())
        .min()
        .unwrap_or(0);
    for j in 0..n {
        writeln!(
            w,
            "{j},{},{},{}",
            fmt(report.deeprc.costs[j]),
            fmt(report.baseline.costs[j]),
            fmt(report.nocontrol.costs[j])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    written.push(path.clone());

    let path = dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&report.metadata)
        .map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Signals read back from a per-arm CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSignals {
    pub header: Vec<String>,
    pub k: Vec<i64>,
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub d: Vec<DVector<f64>>,
    pub e: Vec<DVector<f64>>,
}

/// Parse a per-arm CSV written by [`export_csv`].
pub fn read_arm_csv(path: impl AsRef<Path>) -> Result<ArmSignals> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| parse_err("missing header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let count = |p: char| {
        header
            .iter()
            .filter(|h| h.starts_with(p) && h[1..].chars().all(|c| c.is_ascii_digit()))
            .count()
    };
    let (r, l, m) = (count('u'), count('y'), count('d'));
    let mut out = ArmSignals {
        header: header.clone(),
        k: Vec::new(),
        u: Vec::new(),
        y: Vec::new(),
        d: Vec::new(),
        e: Vec::new(),
    };
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(parse_err(format!("row {} has {} fields", n + 1, fields.len())));
        }
        out.k.push(
            fields[0]
                .parse()
                .map_err(|e| parse_err(format!("row {}: {e}", n + 1)))?,
        );
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(format!("row {}: {e}", n + 1)))?;
        let mut at = 0;
        let mut take = |len: usize| {
            let v = DVector::from_column_slice(&values[at..at + len]);
            at += len;
            v
        };
        out.u.push(take(r));
        out.y.push(take(l));
        out.d.push(take(m));
        out.e.push(take(l));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// plots

/// Render `outputs.svg` (outputs and input per arm with constraint lines and
/// the enable marker) and `iteration_cost.svg` (log scale) into `dir`.
pub fn emit_plots(
    report: &RunReport,
    controller: &ControllerSettings,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    use plotters::prelude::*;

    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let colors = [RGBColor(0, 90, 181), RGBColor(220, 50, 32), RGBColor(90, 90, 90)];
    let period = report.metadata.period as i64;
    let enable = report.metadata.enable_sample;
    let from = (enable - 5 * period).max(0);
    let log0 = &report.deeprc.log;
    let end = log0.k0 + log0.len() as i64;
    let (r, l) = (
        log0.u.first().map_or(1, |v| v.len()),
        log0.y.first().map_or(2, |v| v.len()),
    );

    let outputs_path = dir.join("outputs.svg");
    {
        let panels = l + r;
        let root = SVGBackend::new(&outputs_path, (1100, 260 * panels as u32)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(&e))?;
        let areas = root.split_evenly((panels, 1));
        for (p, area) in areas.iter().enumerate() {
            let is_output = p < l;
            let ch = if is_output { p } else { p - l };
            let (lo, hi, name) = if is_output {
                (
                    controller.y_min.get(ch).or(controller.y_min.first()).copied(),
                    controller.y_max.get(ch).or(controller.y_max.first()).copied(),
                    format!("y{}", ch + 1),
                )
            } else {
                (
                    controller.u_min.get(ch).or(controller.u_min.first()).copied(),
                    controller.u_max.get(ch).or(controller.u_max.first()).copied(),
                    format!("u{}", ch + 1),
                )
            };
            let series = |rec: &ArmRecord| -> Vec<(i64, f64)> {
                let log = &rec.log;
                (0..log.len())
                    .map(|i| (log.k0 + i as i64, i))
                    .filter(|(k, _)| *k >= from)
                    .map(|(k, i)| {
                        let v = if is_output { log.y[i][ch] } else { log.u[i][ch] };
                        (k, v)
                    })
                    .collect()
            };
            let all: Vec<Vec<(i64, f64)>> =
                Arm::ALL.iter().map(|&a| series(report.arm(a))).collect();
            let mut ymin = all.iter().flatten().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let mut ymax = all.iter().flatten().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            for b in [lo, hi].into_iter().flatten().filter(|b| b.is_finite()) {
                ymin = ymin.min(b);
                ymax = ymax.max(b);
            }
            if !ymin.is_finite() || !ymax.is_finite() {
                (ymin, ymax) = (-1.0, 1.0);
            }
            let pad = 0.05 * (ymax - ymin).max(1e-9);
            let mut chart = ChartBuilder::on(area)
                .margin(8)
                .x_label_area_size(30)
                .y_label_area_size(50)
                .build_cartesian_2d(from..end.max(from + 1), (ymin - pad)..(ymax + pad))
                .map_err(|e| plot_err(&e))?;
            chart
                .configure_mesh()
                .x_desc("k")
                .y_desc(name.as_str())
                .draw()
                .map_err(|e| plot_err(&e))?;
            for b in [lo, hi].into_iter().flatten().filter(|b| b.is_finite()) {
                chart
                    .draw_series(LineSeries::new(
                        [(from, b), (end, b)],
                        BLACK.mix(0.5).stroke_width(1),
                    ))
                    .map_err(|e| plot_err(&e))?;
            }
            chart
                .draw_series(LineSeries::new(
                    [(enable, ymin - pad), (enable, ymax + pad)],
                    RGBColor(150, 150, 150).stroke_width(2),
                ))
                .map_err(|e| plot_err(&e))?;
            for (i, (arm, pts)) in Arm::ALL.iter().zip(all).enumerate() {
                let color = colors[i];
                chart
                    .draw_series(LineSeries::new(pts, color.stroke_width(1)))
                    .map_err(|e| plot_err(&e))?
                    .label(arm.label())
                    .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], color));
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| plot_err(&e))?;
        }
        root.present().map_err(|e| plot_err(&e))?;
    }

    let cost_path = dir.join("iteration_cost.svg");
    {
        let root = SVGBackend::new(&cost_path, (1100, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(&e))?;
        let floor = 1e-12;
        let first = (report.enable_period() as i64 - 5).max(0) as usize;
        let curves: Vec<Vec<(usize, f64)>> = Arm::ALL
            .iter()
            .map(|&a| {
                report
                    .arm(a)
                    .costs
                    .iter()
                    .enumerate()
                    .skip(first)
                    .map(|(j, &c)| (j, c.max(floor)))
                    .collect()
            })
            .collect();
        let lo = curves.iter().flatten().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = curves.iter().flatten().map(|p| p.1).fold(0.0, f64::max);
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (floor, 1.0) };
        let last = curves.iter().map(|c| c.len() + first).max().unwrap_or(1);
        let mut chart = ChartBuilder::on(&root)
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(70)
            .build_cartesian_2d(first..last.max(first + 1), (lo * 0.8..hi * 1.25).log_scale())
            .map_err(|e| plot_err(&e))?;
        chart
            .configure_mesh()
            .x_desc("iteration j")
            .y_desc("iteration cost")
            .draw()
            .map_err(|e| plot_err(&e))?;
        let enable = report.enable_period();
        chart
            .draw_series(LineSeries::new(
                [(enable, lo * 0.8), (enable, hi * 1.25)],
                RGBColor(150, 150, 150).stroke_width(2),
            ))
            .map_err(|e| plot_err(&e))?;
        for (i, (arm, pts)) in Arm::ALL.iter().zip(curves).enumerate() {
            let color = colors[i];
            chart
                .draw_series(LineSeries::new(pts, color.stroke_width(2)))
                .map_err(|e| plot_err(&e))?
                .label(arm.label())
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| plot_err(&e))?;
        root.present().map_err(|e| plot_err(&e))?;
    }
    Ok(vec![outputs_path, cost_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(noise: bool, amplitude: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::case_study();
        cfg.experiment.init_periods = 60;
        cfg.experiment.run_periods = 4;
        cfg.experiment.noise = noise;
        cfg.experiment.disturbance_amplitude = amplitude;
        cfg
    }

    #[test]
    fn disturbance_is_exactly_periodic() {
        for k in 0..40 {
            assert_eq!(
                periodic_disturbance(k, 20, 1.0).to_bits(),
                periodic_disturbance(k + 20 * 7, 20, 1.0).to_bits()
            );
        }
        assert!((periodic_disturbance(5, 20, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn arms_share_realizations_and_init_data() {
        let report = run_experiment(&short(true, 1.0)).unwrap();
        let a = &report.deeprc.log;
        let b = &report.baseline.log;
        let c = &report.nocontrol.log;
        assert_eq!(a.e, b.e);
        assert_eq!(a.e, c.e);
        assert_eq!(a.d, c.d);
        let init = report.metadata.enable_sample as usize;
        // controllers act only after the boundary
        assert_eq!(a.u[..init], b.u[..init]);
        assert!(c.u.iter().all(|u| u[0] == 0.0));
        assert_eq!(a.len(), 64 * 20);
        assert_eq!(report.deeprc.costs.len(), 64);
        assert_eq!(report.post_enable_costs(Arm::DeePrc).len(), 4);
        assert!(a.u.iter().chain(&b.u).all(|u| u[0].abs() <= 10.0));
    }

    #[test]
    fn undisturbed_noiseless_loop_stays_at_rest() {
        let mut cfg = short(false, 0.0);
        cfg.experiment.excitation_variance = 1.0;
        let report = run_experiment(&cfg).unwrap();
        let init = report.metadata.enable_sample as usize;
        // the open-loop phase leaves a decaying state; the controllers regulate it
        let tail = &report.deeprc.log.y[init + 40..];
        assert!(tail.iter().all(|y| y.amax() < 1e-6), "{:?}", tail.last());
    }

    #[test]
    fn uncontrolled_noiseless_output_is_periodic() {
        let report = run_experiment(&short(false, 1.0)).unwrap();
        let y = &report.nocontrol.log.y;
        // monodromy spectral radius is about 0.55, so 40 periods wash out x0
        for k in 50 * 20..63 * 20 {
            assert!((&y[k] - &y[k + 20]).amax() < 1e-9);
        }
    }

    #[test]
    fn invalid_config_fails_before_simulation() {
        let mut cfg = short(true, 1.0);
        cfg.experiment.noise_variance = -1.0;
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        let mut cfg = short(true, 1.0);
        cfg.controller.r = 0.0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn csv_round_trip_and_headers() {
        let report = run_experiment(&short(true, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = export_csv(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        for arm in Arm::ALL {
            let back = read_arm_csv(dir.path().join(format!("{}.csv", arm.name()))).unwrap();
            assert_eq!(back.header, ["k", "u", "y1", "y2", "d", "e1", "e2"]);
            let log = &report.arm(arm).log;
            assert_eq!(back.u, log.u);
            assert_eq!(back.y, log.y);
            assert_eq!(back.d, log.d);
            assert_eq!(back.e, log.e);
            assert_eq!(back.k, (0..log.len() as i64).collect::<Vec<_>>());
        }
        let costs = fs::read_to_string(dir.path().join("iteration_cost.csv")).unwrap();
        assert_eq!(costs.lines().next().unwrap(), "j,cost_deeprc,cost_baseline,cost_nocontrol");
        assert_eq!(costs.lines().count(), 65);
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap())
                .unwrap();
        assert_eq!(meta["seed"], 2024);
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let empty = |arm| ArmRecord {
            arm,
            log: TrajectoryLog::new(0, DVector::zeros(3)),
            costs: Vec::new(),
        };
        let report = RunReport {
            deeprc: empty(Arm::DeePrc),
            baseline: empty(Arm::Baseline),
            nocontrol: empty(Arm::NoControl),
            metadata: run_experiment(&short(false, 0.0)).unwrap().metadata,
        };
        let dir = tempfile::tempdir().unwrap();
        export_csv(&report, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("deeprc.csv")).unwrap();
        assert_eq!(text, "k,u,y1,y2,d,e1,e2\n");
        let text = fs::read_to_string(dir.path().join("iteration_cost.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn plots_are_written() {
        let report = run_experiment(&short(true, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::case_study();
        let files = emit_plots(&report, &cfg.controller, dir.path()).unwrap();
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            assert!(text.len() > 1000);
            assert!(text.contains("no control"));
        }
        let outputs = fs::read_to_string(&files[0]).unwrap();
        // guide lines at the configured bounds: y at +-20 and u at +-10
        assert!(outputs.matches("<polyline").count() >= 3 * 3 + 6);
    }
}
