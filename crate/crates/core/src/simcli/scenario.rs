//! Sectioned scenario files.
//!
//! ```text
//! # comment
//! [maps]
//! p = power(2)
//! a = affine(0.5, 0)
//!
//! [schedule]
//! generator = cycle(p, p, a)        # list(..) | cycle(..) | random(seed, ..)
//! marked = auto                     # auto | none | every(period, offset) | indices(n, ..)
//! arc = deg (0, 360)                # full | deg (a, b) .. | rad (a, b) ..
//! bound = 0.6
//! c = 0.5
//! margin = 0.1
//! blocks = auto                     # auto | indices(n, ..)
//! block_count = 3
//!
//! [experiment]
//! samples = 10000
//! steps = 60
//!
//! [quadrature]
//! radial = 128
//!
//! [invariants]
//! suites = geometry, hardy
//! ```
//!
//! Every key is optional except `generator`; the canonical form written by
//! [`Scenario`]'s `Display` spells out all of them.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::hardy::{GridSpec, QuadSpec};
use crate::holomap::parse::{parse_map_detailed, ExprFailure};
use crate::holomap::{MapExpr, ParseError};
use crate::ifs::{Generator, IFSSchedule, MarkedIndex, Marking};
use crate::measure::BoundaryArcSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("[{section}] {field}: {message}")]
    Semantic { section: String, field: String, message: String },
}

fn semantic(section: &str, field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic { section: section.into(), field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Geometry,
    Holomap,
    Hardy,
    Measure,
    Ifs,
    Simcli,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Geometry, Suite::Holomap, Suite::Hardy, Suite::Measure, Suite::Ifs, Suite::Simcli];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Holomap => "holomap",
            Suite::Hardy => "hardy",
            Suite::Measure => "measure",
            Suite::Ifs => "ifs",
            Suite::Simcli => "simcli",
        }
    }

    fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    List,
    Cycle,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MarkedSpec {
    None,
    Auto,
    Every { period: usize, offset: usize },
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlocksSpec {
    Auto,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub kind: GeneratorKind,
    /// Map names, resolved against `[maps]`.
    pub names: Vec<String>,
    pub marked: MarkedSpec,
    pub arc: BoundaryArcSet,
    pub bound: f64,
    pub c: f64,
    pub margin: f64,
    pub blocks: BlocksSpec,
    pub block_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub samples: usize,
    pub steps: usize,
    pub eps_interior: f64,
    pub eps_converged: f64,
    pub seed: u64,
    /// Radius of the disc on which the interior limit is certified.
    pub rho: f64,
    pub limit_tol: f64,
    pub radial_probe: Option<u32>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            samples: 1000,
            steps: 60,
            eps_interior: 0.5,
            eps_converged: 1e-6,
            seed: 0,
            rho: 0.9,
            limit_tol: 1e-9,
            radial_probe: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub quad: QuadSpec,
    pub grid: GridSpec,
    pub trials: usize,
    pub maxdeg: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { quad: QuadSpec::default(), grid: GridSpec::default(), trials: 256, maxdeg: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub maps: Vec<(String, MapExpr)>,
    pub schedule: ScheduleSpec,
    pub experiment: ExperimentSpec,
    pub quadrature: QuadratureSpec,
    pub invariants: Vec<Suite>,
}

impl Scenario {
    pub fn map(&self, name: &str) -> Option<&MapExpr> {
        self.maps.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn to_schedule(&self) -> IFSSchedule {
        let s = &self.schedule;
        let maps: Vec<MapExpr> = s.names.iter().map(|n| self.map(n).expect("names resolved at parse time").clone()).collect();
        let generator = match s.kind {
            GeneratorKind::List => Generator::List(maps),
            GeneratorKind::Cycle => Generator::Cycle(maps),
            GeneratorKind::Random { seed } => Generator::Random { seed, family: maps },
        };
        let (arc, bound) = (s.arc.clone(), s.bound);
        let marking = match &s.marked {
            MarkedSpec::None => Marking::None,
            MarkedSpec::Auto => Marking::Auto { arc, bound },
            MarkedSpec::Every { period, offset } => Marking::Every { period: *period, offset: *offset, arc, bound },
            MarkedSpec::Indices(v) => Marking::Indices(
                v.iter().map(|&index| MarkedIndex { index, arc: arc.clone(), bound }).collect(),
            ),
        };
        IFSSchedule { generator, marking, c: s.c }
    }
}

/// A line's value with its source position.
#[derive(Debug, Clone)]
struct Value<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Value<'a> {
    fn error(&self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse(ParseError {
            line: self.line,
            column: self.column,
            token: self.text.to_string(),
            message: message.into(),
        })
    }

    fn sub(&self, offset: usize, text: &'a str) -> Value<'a> {
        Value { text, line: self.line, column: self.column + self.text[..offset].chars().count() }
    }

    fn trimmed(&self) -> Value<'a> {
        let lead = self.text.len() - self.text.trim_start().len();
        self.sub(lead, self.text.trim())
    }

    fn number(&self) -> Result<f64, ScenarioError> {
        let v = self.trimmed();
        v.text.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| v.error("expected a number"))
    }

    fn integer(&self) -> Result<u64, ScenarioError> {
        let v = self.trimmed();
        v.text.parse::<u64>().map_err(|_| v.error("expected a non-negative integer"))
    }

    /// Splits `name(a, b, ..)` into the name and argument values.
    fn call(&self) -> Result<(&'a str, Vec<Value<'a>>), ScenarioError> {
        let v = self.trimmed();
        let open = v.text.find('(').ok_or_else(|| v.error("expected `name(...)`"))?;
        if !v.text.ends_with(')') {
            return Err(v.error("expected `)` at end of value"));
        }
        let name = v.text[..open].trim();
        let inner = &v.text[open + 1..v.text.len() - 1];
        let mut args = Vec::new();
        if !inner.trim().is_empty() {
            let mut start = 0;
            for (i, ch) in inner.char_indices().chain(std::iter::once((inner.len(), ','))) {
                if ch == ',' {
                    args.push(v.sub(open + 1 + start, &inner[start..i]).trimmed());
                    start = i + 1;
                }
            }
        }
        if let Some(empty) = args.iter().find(|a| a.text.is_empty()) {
            return Err(empty.error("empty argument"));
        }
        Ok((name, args))
    }

    fn index_list(&self, args: &[Value<'a>]) -> Result<Vec<usize>, ScenarioError> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            let n = a.integer()? as usize;
            if n == 0 {
                return Err(a.error("indices are 1-based"));
            }
            if out.last().is_some_and(|&p| p >= n) {
                return Err(a.error("indices must be strictly increasing"));
            }
            out.push(n);
        }
        if out.is_empty() {
            return Err(self.error("expected at least one index"));
        }
        Ok(out)
    }

    fn arc(&self) -> Result<BoundaryArcSet, ScenarioError> {
        let v = self.trimmed();
        if v.text == "full" {
            return Ok(BoundaryArcSet::full());
        }
        if v.text == "empty" {
            return Ok(BoundaryArcSet::empty());
        }
        let (unit, rest) = v.text.split_at(v.text.find(char::is_whitespace).unwrap_or(v.text.len()));
        if unit != "deg" && unit != "rad" {
            return Err(v.error("expected `full`, `empty`, `deg (a, b) ..` or `rad (a, b) ..`"));
        }
        let mut intervals = Vec::new();
        let mut offset = unit.len();
        let mut rest = rest;
        while !rest.trim().is_empty() {
            let lead = rest.len() - rest.trim_start().len();
            offset += lead;
            rest = rest.trim_start();
            let close = rest.find(')').ok_or_else(|| v.sub(offset, rest).error("unclosed interval"))?;
            let piece = v.sub(offset, &rest[..=close]);
            let inner = piece.text.strip_prefix('(').ok_or_else(|| piece.error("expected `(`"))?;
            let inner = &inner[..inner.len() - 1];
            let comma = inner.find(',').filter(|&i| !inner[i + 1..].contains(','));
            let comma = comma.ok_or_else(|| piece.error("interval needs two endpoints"))?;
            let a = piece.sub(1, &inner[..comma]).number()?;
            let b = piece.sub(comma + 2, &inner[comma + 1..]).number()?;
            if b < a {
                return Err(piece.error("interval end precedes its start"));
            }
            intervals.push((a, b));
            offset += close + 1;
            rest = &rest[close + 1..];
        }
        if intervals.is_empty() {
            return Err(v.error("expected at least one interval"));
        }
        let set = if unit == "deg" {
            BoundaryArcSet::from_degrees(&intervals)
        } else {
            BoundaryArcSet::from_intervals(&intervals)
        };
        set.map_err(|e| v.error(e.to_string()))
    }
}

const SECTIONS: [&str; 5] = ["maps", "schedule", "experiment", "quadrature", "invariants"];

fn keys_for(section: &str) -> &'static [&'static str] {
    match section {
        "schedule" => &["generator", "marked", "arc", "bound", "c", "margin", "blocks", "block_count"],
        "experiment" => &["samples", "steps", "eps_interior", "eps_converged", "seed", "rho", "limit_tol", "radial_probe"],
        "quadrature" => &[
            "radial", "angular", "boundary", "tolerance", "grid_radial", "grid_angular", "trials", "maxdeg",
        ],
        "invariants" => &["suites"],
        _ => &[],
    }
}

struct Entry<'a> {
    section: &'static str,
    key: Value<'a>,
    value: Value<'a>,
}

fn split_lines(text: &str) -> Result<Vec<Entry<'_>>, ScenarioError> {
    let mut section: Option<&'static str> = None;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let whole = Value { text: body, line, column: 1 };
        let trimmed = whole.trimmed();
        if trimmed.text.is_empty() {
            continue;
        }
        if let Some(name) = trimmed.text.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| trimmed.error("expected `]`"))?.trim();
            let found = SECTIONS.iter().find(|s| **s == name).ok_or_else(|| trimmed.error("unknown section"))?;
            if !seen.insert(*found) {
                return Err(trimmed.error("duplicate section"));
            }
            section = Some(found);
            continue;
        }
        let Some(section) = section else {
            return Err(trimmed.error("entry outside any section"));
        };
        let eq = body.find('=').ok_or_else(|| trimmed.error("expected `key = value`"))?;
        let key = whole.sub(0, &body[..eq]).trimmed();
        let value = whole.sub(eq + 1, &body[eq + 1..]).trimmed();
        let valid_key = if section == "maps" {
            !key.text.is_empty() && key.text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        } else {
            keys_for(section).contains(&key.text)
        };
        if !valid_key {
            return Err(key.error(format!("unknown key in [{section}]")));
        }
        if value.text.is_empty() {
            return Err(value.error("missing value"));
        }
        if out.iter().any(|e: &Entry| e.section == section && e.key.text == key.text) {
            return Err(key.error("duplicate key"));
        }
        out.push(Entry { section, key, value });
    }
    Ok(out)
}

fn positive(section: &str, field: &str, v: &Value, n: u64) -> Result<usize, ScenarioError> {
    if n == 0 {
        return Err(semantic(section, field, format!("must be positive, got {}", v.text)));
    }
    Ok(n as usize)
}

fn open_unit(section: &str, field: &str, x: f64) -> Result<f64, ScenarioError> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(semantic(section, field, format!("{x} must lie in (0, 1)")))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let entries = split_lines(text)?;
    let mut maps: Vec<(String, MapExpr)> = Vec::new();
    for e in entries.iter().filter(|e| e.section == "maps") {
        let f = parse_map_detailed(e.value.text, e.value.line, e.value.column).map_err(|f| match f {
            ExprFailure::Syntax(p) => ScenarioError::Parse(p),
            ExprFailure::Invalid(err, _) => semantic("maps", e.key.text, err.to_string()),
        })?;
        maps.push((e.key.text.to_string(), f));
    }
    if maps.is_empty() {
        return Err(semantic("maps", "-", "at least one map must be declared"));
    }
    let get = |section: &str, key: &str| entries.iter().find(|e| e.section == section && e.key.text == key);

    // [schedule]
    let gen = get("schedule", "generator").ok_or_else(|| semantic("schedule", "generator", "missing"))?;
    let (kind_name, args) = gen.value.call()?;
    let (kind, name_args) = match kind_name {
        "list" => (GeneratorKind::List, &args[..]),
        "cycle" => (GeneratorKind::Cycle, &args[..]),
        "random" => {
            let seed = args.first().ok_or_else(|| gen.value.error("random(seed, map, ..) needs a seed"))?.integer()?;
            (GeneratorKind::Random { seed }, &args[1..])
        }
        _ => return Err(gen.value.error("expected list(..), cycle(..) or random(..)")),
    };
    if name_args.is_empty() {
        return Err(semantic("schedule", "generator", "no maps listed"));
    }
    let mut names = Vec::new();
    for a in name_args {
        if !maps.iter().any(|(n, _)| n == a.text) {
            return Err(semantic("schedule", "generator", format!("unknown map `{}`", a.text)));
        }
        names.push(a.text.to_string());
    }
    let marked = match get("schedule", "marked") {
        None => MarkedSpec::None,
        Some(e) => match e.value.text {
            "none" => MarkedSpec::None,
            "auto" => MarkedSpec::Auto,
            _ => {
                let (name, args) = e.value.call()?;
                match name {
                    "every" if args.len() == 2 => {
                        let period = positive("schedule", "marked", &args[0], args[0].integer()?)?;
                        let offset = positive("schedule", "marked", &args[1], args[1].integer()?)?;
                        MarkedSpec::Every { period, offset }
                    }
                    "indices" => MarkedSpec::Indices(e.value.index_list(&args)?),
                    _ => return Err(e.value.error("expected auto, none, every(period, offset) or indices(..)")),
                }
            }
        },
    };
    let arc = get("schedule", "arc").map_or(Ok(BoundaryArcSet::full()), |e| e.value.arc())?;
    let number_or = |section: &str, key: &str, default: f64| get(section, key).map_or(Ok(default), |e| e.value.number());
    let bound = open_unit("schedule", "bound", number_or("schedule", "bound", 0.9)?)?;
    let c = open_unit("schedule", "c", number_or("schedule", "c", 0.5)?)?;
    let margin = number_or("schedule", "margin", 0.1)?;
    if !(margin > 0.0 && margin < 0.5) {
        return Err(semantic("schedule", "margin", format!("{margin} must lie in (0, 1/2)")));
    }
    let blocks = match get("schedule", "blocks") {
        None => BlocksSpec::Auto,
        Some(e) if e.value.text == "auto" => BlocksSpec::Auto,
        Some(e) => {
            let (name, args) = e.value.call()?;
            if name != "indices" {
                return Err(e.value.error("expected auto or indices(..)"));
            }
            let v = e.value.index_list(&args)?;
            if v.len() < 2 {
                return Err(semantic("schedule", "blocks", "need at least two indices"));
            }
            BlocksSpec::Indices(v)
        }
    };
    let int_or = |section: &str, key: &str, default: u64| get(section, key).map_or(Ok(default), |e| e.value.integer());
    let block_count = int_or("schedule", "block_count", 3)?;
    if block_count == 0 {
        return Err(semantic("schedule", "block_count", "must be positive"));
    }
    if matches!(marked, MarkedSpec::None) && matches!(blocks, BlocksSpec::Indices(_)) {
        return Err(semantic("schedule", "blocks", "explicit blocks need marked indices"));
    }
    if lebesgue_ok(&arc, c).is_err() && !matches!(marked, MarkedSpec::None) {
        return Err(semantic("schedule", "arc", format!("arc measure must exceed c = {c}")));
    }
    let schedule = ScheduleSpec {
        kind,
        names,
        marked,
        arc,
        bound,
        c,
        margin,
        blocks,
        block_count: block_count as usize,
    };

    // [experiment]
    let d = ExperimentSpec::default();
    let experiment = ExperimentSpec {
        samples: int_or("experiment", "samples", d.samples as u64)? as usize,
        steps: int_or("experiment", "steps", d.steps as u64)? as usize,
        eps_interior: number_or("experiment", "eps_interior", d.eps_interior)?,
        eps_converged: number_or("experiment", "eps_converged", d.eps_converged)?,
        seed: int_or("experiment", "seed", d.seed)?,
        rho: open_unit("experiment", "rho", number_or("experiment", "rho", d.rho)?)?,
        limit_tol: number_or("experiment", "limit_tol", d.limit_tol)?,
        radial_probe: match get("experiment", "radial_probe") {
            None => None,
            Some(e) if e.value.text == "none" => None,
            Some(e) => {
                let j = e.value.integer()?;
                if !(1..=52).contains(&j) {
                    return Err(semantic("experiment", "radial_probe", "must lie in 1..=52"));
                }
                Some(j as u32)
            }
        },
    };
    check_experiment(&experiment)?;

    // [quadrature]
    let dq = QuadratureSpec::default();
    let pos = |key: &str, default: usize| -> Result<usize, ScenarioError> {
        match get("quadrature", key) {
            None => Ok(default),
            Some(e) => positive("quadrature", key, &e.value, e.value.integer()?),
        }
    };
    let boundary = pos("boundary", dq.quad.boundary)?;
    if boundary < 256 || !boundary.is_power_of_two() {
        return Err(semantic("quadrature", "boundary", "must be a power of two >= 256"));
    }
    let tolerance = match get("quadrature", "tolerance") {
        None => None,
        Some(e) if e.value.text == "none" => None,
        Some(e) => {
            let t = e.value.number()?;
            if t <= 0.0 {
                return Err(semantic("quadrature", "tolerance", "must be positive"));
            }
            Some(t)
        }
    };
    let quadrature = QuadratureSpec {
        quad: QuadSpec { radial: pos("radial", dq.quad.radial)?, angular: pos("angular", dq.quad.angular)?, boundary, tolerance },
        grid: GridSpec { radial: pos("grid_radial", dq.grid.radial)?, angular: pos("grid_angular", dq.grid.angular)? },
        trials: pos("trials", dq.trials)?,
        maxdeg: pos("maxdeg", dq.maxdeg)?,
    };

    // [invariants]
    let invariants = match get("invariants", "suites") {
        None => Suite::ALL.to_vec(),
        Some(e) if e.value.text == "all" => Suite::ALL.to_vec(),
        Some(e) => {
            let mut set = BTreeSet::new();
            let mut offset = 0;
            for part in e.value.text.split(',') {
                let v = e.value.sub(offset, part).trimmed();
                offset += part.len() + 1;
                set.insert(Suite::from_name(v.text).ok_or_else(|| v.error("unknown suite"))?);
            }
            set.into_iter().collect()
        }
    };

    Ok(Scenario { maps, schedule, experiment, quadrature, invariants })
}

fn lebesgue_ok(arc: &BoundaryArcSet, c: f64) -> Result<(), ()> {
    if crate::measure::lebesgue(arc) > c {
        Ok(())
    } else {
        Err(())
    }
}

pub(crate) fn check_experiment(x: &ExperimentSpec) -> Result<(), ScenarioError> {
    if x.samples == 0 {
        return Err(semantic("experiment", "samples", "must be at least 1"));
    }
    if x.steps == 0 {
        return Err(semantic("experiment", "steps", "must be at least 1"));
    }
    if !(x.eps_interior > 0.0 && x.eps_interior < 1.0) {
        return Err(semantic("experiment", "eps_interior", format!("{} must lie in (0, 1)", x.eps_interior)));
    }
    if !(x.eps_converged > 0.0 && x.eps_converged < x.eps_interior) {
        return Err(semantic(
            "experiment",
            "eps_converged",
            format!("{} must lie in (0, eps_interior = {})", x.eps_converged, x.eps_interior),
        ));
    }
    if x.limit_tol <= 0.0 {
        return Err(semantic("experiment", "limit_tol", "must be positive"));
    }
    Ok(())
}

fn write_indices(f: &mut fmt::Formatter<'_>, name: &str, v: &[usize]) -> fmt::Result {
    let list: Vec<String> = v.iter().map(|n| n.to_string()).collect();
    write!(f, "{name}({})", list.join(", "))
}

/// Canonical form; parsing it back yields an equal [`Scenario`].
impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[maps]")?;
        for (name, map) in &self.maps {
            writeln!(f, "{name} = {map}")?;
        }
        let s = &self.schedule;
        writeln!(f, "\n[schedule]")?;
        let names = s.names.join(", ");
        match s.kind {
            GeneratorKind::List => writeln!(f, "generator = list({names})")?,
            GeneratorKind::Cycle => writeln!(f, "generator = cycle({names})")?,
            GeneratorKind::Random { seed } => writeln!(f, "generator = random({seed}, {names})")?,
        }
        write!(f, "marked = ")?;
        match &s.marked {
            MarkedSpec::None => write!(f, "none")?,
            MarkedSpec::Auto => write!(f, "auto")?,
            MarkedSpec::Every { period, offset } => write!(f, "every({period}, {offset})")?,
            MarkedSpec::Indices(v) => write_indices(f, "indices", v)?,
        }
        writeln!(f)?;
        if s.arc == BoundaryArcSet::full() {
            writeln!(f, "arc = full")?;
        } else if s.arc.is_empty() {
            writeln!(f, "arc = empty")?;
        } else {
            let parts: Vec<String> = s.arc.intervals().iter().map(|(a, b)| format!("({a}, {b})")).collect();
            writeln!(f, "arc = rad {}", parts.join(" "))?;
        }
        writeln!(f, "bound = {}", s.bound)?;
        writeln!(f, "c = {}", s.c)?;
        writeln!(f, "margin = {}", s.margin)?;
        write!(f, "blocks = ")?;
        match &s.blocks {
            BlocksSpec::Auto => write!(f, "auto")?,
            BlocksSpec::Indices(v) => write_indices(f, "indices", v)?,
        }
        writeln!(f)?;
        writeln!(f, "block_count = {}", s.block_count)?;
        let x = &self.experiment;
        writeln!(f, "\n[experiment]")?;
        writeln!(f, "samples = {}", x.samples)?;
        writeln!(f, "steps = {}", x.steps)?;
        writeln!(f, "eps_interior = {}", x.eps_interior)?;
        writeln!(f, "eps_converged = {}", x.eps_converged)?;
        writeln!(f, "seed = {}", x.seed)?;
        writeln!(f, "rho = {}", x.rho)?;
        writeln!(f, "limit_tol = {}", x.limit_tol)?;
        match x.radial_probe {
            Some(j) => writeln!(f, "radial_probe = {j}")?,
            None => writeln!(f, "radial_probe = none")?,
        }
        let q = &self.quadrature;
        writeln!(f, "\n[quadrature]")?;
        writeln!(f, "radial = {}", q.quad.radial)?;
        writeln!(f, "angular = {}", q.quad.angular)?;
        writeln!(f, "boundary = {}", q.quad.boundary)?;
        match q.quad.tolerance {
            Some(t) => writeln!(f, "tolerance = {t}")?,
            None => writeln!(f, "tolerance = none")?,
        }
        writeln!(f, "grid_radial = {}", q.grid.radial)?;
        writeln!(f, "grid_angular = {}", q.grid.angular)?;
        writeln!(f, "trials = {}", q.trials)?;
        writeln!(f, "maxdeg = {}", q.maxdeg)?;
        writeln!(f, "\n[invariants]")?;
        let suites: Vec<&str> = self.invariants.iter().map(|s| s.name()).collect();
        writeln!(f, "suites = {}", suites.join(", "))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use num_complex::Complex64;

    const MINIMAL: &str = "[maps]\na = affine(0.5, 0)\n\n[schedule]\ngenerator = cycle(a)\n";

    pub(crate) const MIXED: &str = "\
# mixed inner / contracting cycle
[maps]
p = power(2)          # inner
a = affine(0.5, 0)

[schedule]
generator = cycle(p, p, a)
marked = auto
arc = deg (0, 360)
bound = 0.6
c = 0.5
margin = 0.1
blocks = auto
block_count = 3

[experiment]
samples = 200
steps = 60
eps_interior = 0.5
eps_converged = 1e-9
seed = 7

[invariants]
suites = ifs, simcli
";

    #[test]
    fn minimal_scenario() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.maps.len(), 1);
        assert_eq!(s.schedule.kind, GeneratorKind::Cycle);
        assert_eq!(s.experiment, ExperimentSpec::default());
        assert_eq!(s.invariants, Suite::ALL.to_vec());
        let sched = s.to_schedule();
        assert_eq!(sched.map(5).unwrap(), &MapExpr::affine(Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)).unwrap());
    }

    #[test]
    fn full_scenario() {
        let s = parse_scenario(MIXED).unwrap();
        assert_eq!(s.schedule.names, vec!["p", "p", "a"]);
        assert_eq!(s.schedule.marked, MarkedSpec::Auto);
        assert_eq!(s.schedule.arc, BoundaryArcSet::full());
        assert_eq!(s.experiment.samples, 200);
        assert_eq!(s.experiment.eps_converged, 1e-9);
        assert_eq!(s.invariants, vec![Suite::Ifs, Suite::Simcli]);
    }

    #[test]
    fn bad_blaschke_zero_is_semantic() {
        let text = "[maps]\nb = blaschke(0; 0.2, 1.1+0.1i)\n[schedule]\ngenerator = list(b)\n";
        match parse_scenario(text).unwrap_err() {
            ScenarioError::Semantic { section, field, message } => {
                assert_eq!((section.as_str(), field.as_str()), ("maps", "b"));
                assert!(message.contains("1.1"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn positioned_errors() {
        let e = parse_scenario("[maps]\na = affine(0.5, 0)\n[schedule]\n  speed = 3\n").unwrap_err();
        let ScenarioError::Parse(p) = e else { panic!() };
        assert_eq!((p.line, p.column, p.token.as_str()), (4, 3, "speed"));
        let e = parse_scenario("[maps]\na = afine(0.5, 0)\n").unwrap_err();
        let ScenarioError::Parse(p) = e else { panic!() };
        assert_eq!((p.line, p.column), (2, 5));
        let e = parse_scenario("[mapz]\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Parse(ParseError { line: 1, .. })));
        let e = parse_scenario("[maps]\na = power(2)\n[schedule]\ngenerator = cycle(a)\nbound = 0.x\n").unwrap_err();
        let ScenarioError::Parse(p) = e else { panic!() };
        assert_eq!((p.line, p.column, p.token.as_str()), (5, 9, "0.x"));
        let e = parse_scenario("[maps]\na = power(2)\n[schedule]\ngenerator = cycle(a)\narc = deg (10, 5)\n").unwrap_err();
        let ScenarioError::Parse(p) = e else { panic!() };
        assert_eq!((p.line, p.column), (5, 11));
    }

    #[test]
    fn semantic_range_errors() {
        let cases = [
            ("[experiment]\nsamples = 0\n", "samples"),
            ("[experiment]\neps_converged = 0.7\n", "eps_converged"),
            ("[schedule]\ngenerator = cycle(a)\nbound = 1.5\n", "bound"),
            ("[quadrature]\nboundary = 1000\n", "boundary"),
        ];
        for (tail, field) in cases {
            let mut text = String::from("[maps]\na = power(2)\n");
            if !tail.starts_with("[schedule]") {
                text.push_str("[schedule]\ngenerator = cycle(a)\n");
            }
            text.push_str(tail);
            match parse_scenario(&text) {
                Err(ScenarioError::Semantic { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
        let e = parse_scenario("[maps]\na = power(2)\n[schedule]\ngenerator = cycle(b)\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Semantic { .. }));
    }

    #[test]
    fn canonical_round_trip() {
        let texts = [
            MINIMAL.to_string(),
            MIXED.to_string(),
            "[maps]\nb = blaschke(0.3; 0.1-0.2ix2, 0.4)\nq = compose(power(3), auto(1.2, 0.1+0.3i))\n\
             [schedule]\ngenerator = random(11, b, q)\nmarked = indices(2, 5, 9)\narc = deg (350, 370) (90, 100)\nc = 0.05\n\
             blocks = indices(2, 5, 9)\n[experiment]\nradial_probe = 20\n[quadrature]\ntolerance = 1e-5\n"
                .to_string(),
        ];
        for t in texts {
            let s = parse_scenario(&t).unwrap();
            let canonical = s.to_string();
            let again = parse_scenario(&canonical).unwrap();
            assert_eq!(s, again, "{canonical}");
            assert_eq!(canonical, again.to_string());
        }
    }
}
