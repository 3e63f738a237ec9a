//! Declarative parameter sweeps, transition detection and figure-data generation.
//!
//! A [`SweepConfig`] names a model, an invariant and one swept axis (optionally an
//! outer axis for two-dimensional tables). All lengths and temperatures are in the
//! same units as γ. Points run in parallel; records come back in axis order and are
//! byte-for-byte reproducible, which is why the `ms` column stays zero unless timing
//! is explicitly requested.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{
    dd_invariant, nt_chern_2d, second_chern, second_chern_nt_reduced, thermal_chern_2d, DdWeighting, IntegrandOptions, QuadratureGrid, Rule, WedgeForm,
};
use crate::models::{Embedding, Family, ModelSpec};
use crate::thermal::WeightConvention;
use crate::uhlmann::{uhlmann_phase, PhaseOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    UhlmannPhase,
    Chern1,
    Chern1Nt,
    Dd,
    DdNt,
    Chern2,
    Chern2Nt,
}

impl Invariant {
    pub const ALL: [Invariant; 7] =
        [Invariant::UhlmannPhase, Invariant::Chern1, Invariant::Chern1Nt, Invariant::Dd, Invariant::DdNt, Invariant::Chern2, Invariant::Chern2Nt];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::UhlmannPhase => "uhlmann_phase",
            Invariant::Chern1 => "chern1",
            Invariant::Chern1Nt => "chern1_nt",
            Invariant::Dd => "dd",
            Invariant::DdNt => "dd_nt",
            Invariant::Chern2 => "chern2",
            Invariant::Chern2Nt => "chern2_nt",
        }
    }

    fn accepts(self, embedding: &Embedding) -> bool {
        matches!(
            (self, embedding),
            (Invariant::UhlmannPhase, Embedding::Loop2D { .. } | Embedding::Loop4D { .. })
                | (Invariant::Chern1 | Invariant::Chern1Nt, Embedding::Sphere2D { .. })
                | (Invariant::Dd | Invariant::DdNt, Embedding::S3 { .. })
                | (Invariant::Chern2 | Invariant::Chern2Nt, Embedding::S4 { .. })
        )
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Invariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Invariant::ALL.into_iter().find(|i| i.name() == s).ok_or_else(|| Error::InvalidConfig(format!("unknown invariant `{s}`")))
    }
}

/// Swept quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Temperature.
    T,
    /// Loop centre displacement.
    #[serde(rename = "d")]
    D,
    /// Sphere radius.
    R,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::T => "T",
            Axis::D => "d",
            Axis::R => "R",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(Axis::T),
            "d" | "D" => Ok(Axis::D),
            "R" | "r" => Ok(Axis::R),
            other => Err(Error::InvalidConfig(format!("sweep axis must be T, d or R, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    /// `start + k·step` up to `stop` (inclusive within 1e-9 of a step), snapped to a
    /// 1e-12 grid so that e.g. 0.1 + 0.05 prints as 0.15.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidConfig("axis range must be finite".into()));
        }
        if self.start > self.stop {
            return Err(Error::InvalidConfig(format!("axis {}: start {} exceeds stop {}", self.axis, self.start, self.stop)));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidConfig(format!("axis {}: step must be positive", self.axis)));
        }
        if self.axis == Axis::T && self.start <= 0.0 {
            return Err(Error::InvalidConfig("temperatures must be positive".into()));
        }
        if self.axis != Axis::T && self.start < 0.0 {
            return Err(Error::InvalidConfig(format!("axis {} must be non-negative", self.axis)));
        }
        Ok(())
    }
}

/// Quadrature and sampling resolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Resolution {
    pub loop_samples: usize,
    pub sphere: [usize; 2],
    pub s3: [usize; 3],
    pub s4: [usize; 4],
    /// Nodes of the reduced one-dimensional NT second-Chern integral.
    pub reduced_nodes: usize,
    pub rule: Rule,
    /// Collapse azimuthal axes (exact by symmetry); the reduced NT second-Chern path is
    /// used only when this is set.
    pub reduced: bool,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { loop_samples: 800, sphere: [200, 400], s3: [64, 64, 64], s4: [48, 48, 32, 32], reduced_nodes: 2000, rule: Rule::Trapezoid, reduced: true }
    }
}

impl Resolution {
    pub const MIN_LOOP_SAMPLES: usize = 16;

    fn validate(&self) -> Result<()> {
        if self.loop_samples < Self::MIN_LOOP_SAMPLES || !self.loop_samples.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("loop_samples must be even and at least {}", Self::MIN_LOOP_SAMPLES)));
        }
        let all = self.sphere.iter().chain(&self.s3).chain(&self.s4).chain(std::iter::once(&self.reduced_nodes));
        for &n in all {
            if n < QuadratureGrid::MIN_NODES || (self.rule == Rule::Simpson && !n.is_multiple_of(2)) {
                return Err(Error::InvalidConfig(format!("grid count {n} is below the minimum or not even for Simpson")));
            }
        }
        Ok(())
    }
}

fn default_windings() -> usize {
    2
}

/// A complete, serializable sweep description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelSpec,
    pub invariant: Invariant,
    pub sweep: AxisRange,
    /// Optional outer axis turning the sweep into a two-dimensional table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<AxisRange>,
    /// Temperature used when T is not swept.
    pub temperature: f64,
    #[serde(default = "default_windings")]
    pub windings: usize,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub weight_convention: WeightConvention,
    /// Weight for the `dd` invariant (`dd_nt` is always unweighted).
    #[serde(default)]
    pub dd_weighting: DdWeighting,
    /// Fill the `ms` column with wall-clock times (makes output non-reproducible).
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(model: ModelSpec, invariant: Invariant, sweep: AxisRange, temperature: f64) -> Self {
        Self {
            model,
            invariant,
            sweep,
            outer: None,
            temperature,
            windings: 2,
            resolution: Resolution::default(),
            weight_convention: WeightConvention::Abs,
            dd_weighting: DdWeighting::Restoring,
            timing: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.invariant.accepts(&self.model.embedding) {
            return Err(Error::InvalidConfig(format!("invariant {} is not defined on {}", self.invariant, self.model.embedding)));
        }
        self.sweep.validate()?;
        if let Some(outer) = &self.outer {
            outer.validate()?;
            if outer.axis == self.sweep.axis {
                return Err(Error::InvalidConfig("outer and sweep axes must differ".into()));
            }
        }
        for axis in std::iter::once(self.sweep.axis).chain(self.outer.map(|o| o.axis)) {
            let ok = match axis {
                Axis::T => true,
                Axis::D => self.model.embedding.is_loop(),
                Axis::R => !self.model.embedding.is_loop(),
            };
            if !ok {
                return Err(Error::InvalidConfig(format!("axis {axis} cannot be swept for {}", self.model.embedding)));
            }
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if !(1..=2).contains(&self.windings) {
            return Err(Error::InvalidConfig("windings must be 1 or 2".into()));
        }
        self.resolution.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    fn options(&self) -> IntegrandOptions {
        IntegrandOptions { convention: self.weight_convention, reduced: self.resolution.reduced, ..IntegrandOptions::default() }
    }
}

/// One row of sweep output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub outer: Option<f64>,
    pub axis: f64,
    pub value: f64,
    pub refinement_delta: f64,
    pub excluded: usize,
    pub ms: u64,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.value.is_finite()
    }
}

/// Value, refinement delta and excluded-point count of one sweep point.
pub type PointValue = (f64, f64, usize);

fn set_axis(axis: Axis, value: f64, model: &mut ModelSpec, t: &mut f64) {
    match axis {
        Axis::T => *t = value,
        Axis::D => model.embedding = model.embedding.with_displacement(value),
        Axis::R => model.embedding = model.embedding.with_radius(value),
    }
}

fn sphere_radius(e: &Embedding) -> f64 {
    match *e {
        Embedding::Sphere2D { radius } | Embedding::S3 { radius } | Embedding::S4 { radius } => radius,
        Embedding::Loop2D { r, .. } | Embedding::Loop4D { r, .. } => r,
    }
}

/// Evaluates the configured invariant at one (model, temperature).
pub fn evaluate_point(config: &SweepConfig, model: &ModelSpec, t: f64) -> Result<PointValue> {
    let opts = config.options();
    let res = &config.resolution;
    let r = sphere_radius(&model.embedding);
    let grid = |dims: &[usize]| QuadratureGrid::for_embedding(&model.embedding, dims, res.rule);
    let triple = |x: crate::invariants::InvariantResult| (x.value, x.refinement_delta, x.excluded_points);
    match config.invariant {
        Invariant::UhlmannPhase => {
            let po = PhaseOptions { windings: config.windings, samples_per_winding: res.loop_samples, ..PhaseOptions::default() };
            let fine = uhlmann_phase(model, t, config.weight_convention, &po)?.unwrapped_phase.abs();
            let half = PhaseOptions { samples_per_winding: res.loop_samples / 2, ..po };
            let coarse = uhlmann_phase(model, t, config.weight_convention, &half)?.unwrapped_phase.abs();
            Ok((fine, (fine - coarse).abs(), 0))
        }
        Invariant::Chern1 => Ok(triple(thermal_chern_2d(model, r, t, &grid(&res.sphere)?, &opts)?)),
        Invariant::Chern1Nt => Ok(triple(nt_chern_2d(model, r, t, &grid(&res.sphere)?, &opts)?)),
        Invariant::Dd => Ok(triple(dd_invariant(model, r, t, &grid(&res.s3)?, config.dd_weighting, &opts)?)),
        Invariant::DdNt => Ok(triple(dd_invariant(model, r, t, &grid(&res.s3)?, DdWeighting::None, &opts)?)),
        Invariant::Chern2 => Ok(triple(second_chern(model, r, t, &grid(&res.s4)?, true, WedgeForm::Symmetric, &opts)?)),
        Invariant::Chern2Nt => {
            if res.reduced {
                Ok(triple(second_chern_nt_reduced(model, r, t, res.reduced_nodes)?))
            } else {
                Ok(triple(second_chern(model, r, t, &grid(&res.s4)?, false, WedgeForm::Symmetric, &opts)?))
            }
        }
    }
}

/// Runs every point of the sweep. Per-point failures become NaN rows carrying the
/// error tag; only an invalid configuration aborts.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let outer: Vec<Option<f64>> = match &config.outer {
        Some(o) => o.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let points: Vec<(Option<f64>, f64)> = outer.iter().flat_map(|&o| config.sweep.values().into_iter().map(move |x| (o, x))).collect();
    Ok(points
        .par_iter()
        .map(|&(o, x)| {
            let mut model = config.model;
            let mut t = config.temperature;
            if let (Some(ov), Some(range)) = (o, &config.outer) {
                set_axis(range.axis, ov, &mut model, &mut t);
            }
            set_axis(config.sweep.axis, x, &mut model, &mut t);
            let start = Instant::now();
            let result = model.validate().and_then(|_| evaluate_point(config, &model, t));
            let ms = if config.timing { start.elapsed().as_millis() as u64 } else { 0 };
            match result {
                Ok((value, refinement_delta, excluded)) => SweepRecord { outer: o, axis: x, value, refinement_delta, excluded, ms, error: None },
                Err(e) => SweepRecord { outer: o, axis: x, value: f64::NAN, refinement_delta: f64::NAN, excluded: 0, ms, error: Some(e.tag().to_string()) },
            }
        })
        .collect())
}

/// Axis values where the series crosses a midpoint between consecutive `levels`,
/// linearly interpolated between bracketing finite records (NaN rows are skipped).
pub fn detect_transitions(records: &[SweepRecord], levels: &[f64]) -> Vec<f64> {
    let mut lv = levels.to_vec();
    lv.sort_by(f64::total_cmp);
    let mids: Vec<f64> = lv.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let finite: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let mut out = Vec::new();
    for pair in finite.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for &m in &mids {
            if (a.value > m) != (b.value > m) {
                let s = (m - a.value) / (b.value - a.value);
                out.push(a.axis + s * (b.axis - a.axis));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// The single transition of a series; `NoTransition` or `MultipleTransitions` otherwise.
pub fn detect_transition(records: &[SweepRecord], levels: &[f64]) -> Result<f64> {
    let all = detect_transitions(records, levels);
    match all.len() {
        0 => Err(Error::NoTransition),
        1 => Ok(all[0]),
        _ => Err(Error::MultipleTransitions(all)),
    }
}

/// Writes records as CSV: `[outer,]axis,value,refinement_delta,excluded,ms,error`.
pub fn write_csv<W: std::io::Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    let with_outer = records.iter().any(|r| r.outer.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["axis", "value", "refinement_delta", "excluded", "ms", "error"];
    if with_outer {
        header.insert(0, "outer");
    }
    w.write_record(&header).map_err(std::io::Error::from)?;
    for r in records {
        let mut row = vec![r.axis.to_string(), r.value.to_string(), r.refinement_delta.to_string(), r.excluded.to_string(), r.ms.to_string(), r.error.clone().unwrap_or_default()];
        if with_outer {
            row.insert(0, r.outer.map(|x| x.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the output of [`write_csv`].
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header = rd.headers().map_err(std::io::Error::from)?.clone();
    let with_outer = header.get(0) == Some("outer");
    let bad = |what: &str| Error::InvalidInput(format!("malformed sweep CSV ({what})"));
    let num = |s: Option<&str>, what: &str| -> Result<f64> { s.ok_or_else(|| bad(what))?.parse::<f64>().map_err(|_| bad(what)) };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(std::io::Error::from)?;
        let o = usize::from(with_outer);
        let outer = if with_outer { Some(num(row.get(0), "outer")?) } else { None };
        let error = row.get(o + 5).filter(|s| !s.is_empty()).map(str::to_string);
        out.push(SweepRecord {
            outer,
            axis: num(row.get(o), "axis")?,
            value: num(row.get(o + 1), "value")?,
            refinement_delta: num(row.get(o + 2), "refinement_delta")?,
            excluded: row.get(o + 3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("excluded"))?,
            ms: row.get(o + 4).and_then(|s| s.parse().ok()).ok_or_else(|| bad("ms"))?,
            error,
        });
    }
    Ok(out)
}

/// Figures with canonical configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    FigDd,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [FigureId::Fig1, FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5, FigureId::Fig6, FigureId::FigDd];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::FigDd => "figDD",
        }
    }

    /// Named sweeps making up the figure.
    pub fn configs(self) -> Vec<(&'static str, SweepConfig)> {
        let spec = |family, embedding| ModelSpec { family, gamma: 1.0, embedding };
        let range = |axis, start, stop, step| AxisRange { axis, start, stop, step };
        let loop2 = spec(Family::NH2, Embedding::Loop2D { r: 2.0, d: 2.5 });
        let sphere = spec(Family::NH2, Embedding::Sphere2D { radius: 2.0 });
        let s4 = spec(Family::NH4, Embedding::S4 { radius: 2.0 });
        let t_axis = range(Axis::T, 0.1, 3.0, 0.05);
        match self {
            FigureId::Fig1 => vec![("phase", SweepConfig::new(loop2, Invariant::UhlmannPhase, t_axis, 0.5))],
            FigureId::Fig2 => vec![("phase", SweepConfig::new(loop2, Invariant::UhlmannPhase, range(Axis::D, 0.0, 4.0, 0.02), 0.5))],
            FigureId::Fig3 => vec![
                ("chern1", SweepConfig::new(sphere, Invariant::Chern1, t_axis, 0.5)),
                ("chern1_nt", SweepConfig::new(sphere, Invariant::Chern1Nt, t_axis, 0.5)),
            ],
            FigureId::Fig4 => {
                let r_axis = range(Axis::R, 0.2, 3.0, 0.05);
                vec![
                    ("chern1", SweepConfig::new(sphere, Invariant::Chern1, r_axis, 0.5)),
                    ("chern1_nt", SweepConfig::new(sphere, Invariant::Chern1Nt, r_axis, 0.5)),
                ]
            }
            FigureId::Fig5 => {
                let loop4 = spec(Family::NH4, Embedding::Loop4D { r: 2.0, d: 2.5 });
                vec![("phase", SweepConfig::new(loop4, Invariant::UhlmannPhase, range(Axis::T, 0.1, 3.0, 0.01), 0.5))]
            }
            FigureId::Fig6 => {
                let mut nt = SweepConfig::new(s4, Invariant::Chern2Nt, range(Axis::T, 0.1, 3.0, 0.1), 0.5);
                nt.outer = Some(range(Axis::R, 0.2, 3.0, 0.1));
                vec![("chern2_nt", nt), ("chern2", SweepConfig::new(s4, Invariant::Chern2, range(Axis::R, 0.2, 3.0, 0.2), 0.5))]
            }
            FigureId::FigDd => {
                let dd_t = range(Axis::T, 0.05, 3.0, 0.05);
                let nh3 = |radius| spec(Family::NH3, Embedding::S3 { radius });
                let h3 = spec(Family::Hermitian3, Embedding::S3 { radius: 1.0 });
                vec![
                    ("nh3_enclosing", SweepConfig::new(nh3(3.0), Invariant::DdNt, dd_t, 0.5)),
                    ("nh3_not_enclosing", SweepConfig::new(nh3(0.5), Invariant::DdNt, dd_t, 0.5)),
                    ("hermitian_dd", SweepConfig::new(h3, Invariant::Dd, dd_t, 0.5)),
                    ("hermitian_dd_nt", SweepConfig::new(h3, Invariant::DdNt, dd_t, 0.5)),
                ]
            }
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown figure `{s}` (expected fig1..fig6 or figDD)")))
    }
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    config_file: String,
    data_file: String,
    records: usize,
    failed_points: usize,
    config: &'a SweepConfig,
}

#[derive(Serialize)]
struct Manifest<'a> {
    figure: &'a str,
    crate_version: &'a str,
    sweeps: Vec<ManifestEntry<'a>>,
}

fn gnuplot_script(figure: FigureId, entries: &[(&str, &SweepConfig, String)]) -> String {
    let mut s = format!("# {figure}: plot with `gnuplot -p {figure}.gp`\nset datafile separator ','\nset key autotitle columnhead\n");
    let two_d = entries.iter().any(|(_, c, _)| c.outer.is_some());
    if two_d {
        for (name, c, file) in entries.iter().filter(|(_, c, _)| c.outer.is_some()) {
            let outer = c.outer.unwrap().axis;
            s += &format!("set xlabel '{}'\nset ylabel '{outer}'\nset zlabel '{name}'\nsplot '{file}' using 2:1:3 with points title '{name}'\n", c.sweep.axis);
        }
    } else {
        let axis = entries.first().map(|(_, c, _)| c.sweep.axis.to_string()).unwrap_or_default();
        s += &format!("set xlabel '{axis}'\nplot ");
        let parts: Vec<String> = entries.iter().map(|(name, _, file)| format!("'{file}' using 1:2 with linespoints title '{name}'")).collect();
        s += &parts.join(", \\\n     ");
        s.push('\n');
    }
    s
}

/// Writes config, data, plotting script and manifest of a figure into `out_dir`;
/// returns the paths written. Data files are identical across re-runs.
pub fn emit_figure(figure: FigureId, out_dir: &Path) -> Result<Vec<PathBuf>> {
    emit_configs(figure, &figure.configs(), out_dir)
}

/// As [`emit_figure`] with explicit configurations (e.g. reduced resolutions).
pub fn emit_configs(figure: FigureId, configs: &[(&str, SweepConfig)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    let mut manifest = Manifest { figure: figure.name(), crate_version: env!("CARGO_PKG_VERSION"), sweeps: Vec::new() };
    for (name, config) in configs {
        let stem = format!("{}_{}", figure.name(), name);
        let config_path = out_dir.join(format!("{stem}.toml"));
        std::fs::write(&config_path, config.to_toml()?)?;
        let records = run_sweep(config)?;
        let data_path = out_dir.join(format!("{stem}.csv"));
        write_csv(&records, std::fs::File::create(&data_path)?)?;
        manifest.sweeps.push(ManifestEntry {
            name,
            config_file: format!("{stem}.toml"),
            data_file: format!("{stem}.csv"),
            records: records.len(),
            failed_points: records.iter().filter(|r| !r.is_ok()).count(),
            config,
        });
        entries.push((*name, config, format!("{stem}.csv")));
        written.extend([config_path, data_path]);
    }
    let script = out_dir.join(format!("{}.gp", figure.name()));
    std::fs::write(&script, gnuplot_script(figure, &entries))?;
    let manifest_path = out_dir.join(format!("{}_manifest.json", figure.name()));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n")?;
    written.extend([script, manifest_path]);
    Ok(written)
}
