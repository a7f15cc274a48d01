//! Experiment descriptions and their on-disk format.
//!
//! An experiment file is a small INI dialect: one top-level `mode` key, then
//! `[section]` headers with `key = value` lines, `#` starting a comment.
//! Values are numbers, comma-separated lists, parenthesized tuples for 2-D
//! points, or `+`-separated sums of named field templates. The parser is
//! strict in both directions: unknown sections and keys are hard errors, and
//! every required key is checked against the requested mode before any
//! computation starts. All problems found in one pass are reported together,
//! each with the line it came from.
//!
//! [`serialize_config`] writes the resolved configuration (defaults filled
//! in) back out in canonical form; parsing that text reproduces the resolved
//! configuration exactly, which is what the echoed `config.cfg` artifact in
//! every output directory relies on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::asymptotics::SpikeBranch;
use crate::domain::Domain;
use crate::potential::{GaussianTerm, Potential};
use crate::solver::{Grid, ReactionSpec, Resource, Schedule, MIN_CELLS, STEADY_TOLERANCE_DEFAULT};

/// Default cell count per axis in one dimension.
pub const DEFAULT_CELLS_1D: usize = 4096;
/// Default cell count per axis in two dimensions.
pub const DEFAULT_CELLS_2D: usize = 256;

/// What the harness is asked to do with the configured model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Closed-form report: signal maxima, admissible heights, predicted rates.
    Analyze,
    /// Single-species transient run with snapshots and a comparison report.
    Simulate,
    /// Two-species transient run (shared resource, distinct dispersal).
    Compete,
    /// Leading spectrum of the linearization about the configured field.
    Eig,
    /// Grid of simulate runs over one or two swept parameters.
    Sweep,
}

impl Mode {
    /// Canonical lowercase name, as written in configuration files.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analyze => "analyze",
            Mode::Simulate => "simulate",
            Mode::Compete => "compete",
            Mode::Eig => "eig",
            Mode::Sweep => "sweep",
        }
    }

    /// Parse a mode name; `None` when unrecognized.
    pub fn parse(text: &str) -> Option<Mode> {
        match text {
            "analyze" => Some(Mode::Analyze),
            "simulate" => Some(Mode::Simulate),
            "compete" => Some(Mode::Compete),
            "eig" => Some(Mode::Eig),
            "sweep" => Some(Mode::Sweep),
            _ => None,
        }
    }
}

/// Which reaction family the run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionKind {
    /// mu*u*(1-u)*(u-theta), unit carrying capacity.
    CubicAllee,
    /// u*(u-theta)*(r(x)-u), spatial resource ceiling.
    LogisticAllee,
    /// Two species sharing the resource: density*(u+v-theta)*(r(x)-u-v).
    SharedCompetition,
}

impl ReactionKind {
    fn name(self) -> &'static str {
        match self {
            ReactionKind::CubicAllee => "cubic-allee",
            ReactionKind::LogisticAllee => "logistic-allee",
            ReactionKind::SharedCompetition => "shared-competition",
        }
    }
}

/// Dispersal rule for the second species in compete mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Ideal free dispersal: the rival climbs grad(ln r) at unit rate, so its
    /// advection coefficient is 1 for `resource = exp-potential` and 0 for
    /// `resource = one`.
    Ifd,
    /// The rival climbs the same signal at `speed_ratio` times chi.
    Aggressive,
}

impl Strategy {
    fn name(self) -> &'static str {
        match self {
            Strategy::Ifd => "ifd",
            Strategy::Aggressive => "aggressive",
        }
    }
}

/// Box domain plus its discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Cells per axis; length equals the dimension.
    pub cells: Vec<usize>,
}

impl DomainSection {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// The continuous box.
    pub fn domain(&self) -> Domain {
        match self.dim() {
            1 => Domain::interval(self.lo[0], self.hi[0]),
            _ => Domain::rectangle([self.lo[0], self.lo[1]], [self.hi[0], self.hi[1]]),
        }
    }

    /// The finite-volume grid.
    pub fn grid(&self) -> Grid {
        match self.dim() {
            1 => Grid::interval(self.lo[0], self.hi[0], self.cells[0]),
            _ => Grid::rectangle(
                (self.lo[0], self.hi[0], self.cells[0]),
                (self.lo[1], self.hi[1], self.cells[1]),
            ),
        }
    }
}

/// Model coefficients shared by every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsSection {
    /// Advection strength of the primary species.
    pub chi: f64,
    /// Diffusion coefficient (both species).
    pub diffusion: f64,
    /// Reaction amplitude; meaningful for cubic-allee only.
    pub mu: f64,
    /// Allee threshold.
    pub theta: f64,
    pub reaction: ReactionKind,
    /// Resource density; required by the r-dependent reactions.
    pub resource: Option<Resource>,
    /// Rival advection as a multiple of chi; aggressive strategy only.
    pub speed_ratio: Option<f64>,
    /// Rival dispersal rule; compete mode only.
    pub strategy: Option<Strategy>,
}

impl PhysicsSection {
    /// The reaction term this section describes.
    pub fn reaction_spec(&self) -> ReactionSpec {
        match self.reaction {
            ReactionKind::CubicAllee => {
                ReactionSpec::CubicAllee { mu: self.mu, theta: self.theta }
            }
            ReactionKind::LogisticAllee => ReactionSpec::LogisticAllee {
                theta: self.theta,
                resource: self.resource.clone().expect("validated: resource present"),
            },
            ReactionKind::SharedCompetition => ReactionSpec::SharedCompetition {
                theta: self.theta,
                resource: self.resource.clone().expect("validated: resource present"),
            },
        }
    }

    /// Advection coefficient of the second species, per the strategy.
    /// Valid only on a compete-validated configuration.
    pub fn rival_chi(&self) -> f64 {
        match self.strategy.expect("validated: strategy present") {
            Strategy::Aggressive => self.speed_ratio.expect("validated: speed_ratio") * self.chi,
            Strategy::Ifd => match self.resource.as_ref().expect("validated: resource") {
                Resource::ExpPotential => 1.0,
                Resource::One => 0.0,
                Resource::Linear { .. } => unreachable!("validated: ifd excludes linear"),
            },
        }
    }
}

/// One additive term of an initial field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldTerm {
    /// `constant(c)`.
    Constant { value: f64 },
    /// `cosine(a, k[, phase])`: a*cos(k*x + phase), times cos(k*y + phase)
    /// in two dimensions.
    Cosine { amplitude: f64, wavenumber: f64, phase: f64 },
    /// `gaussian-bump(h, rate[, center...])`: h*exp(-rate*|x - center|^2).
    GaussianBump { height: f64, rate: f64, center: Vec<f64> },
    /// `chirp(a, rate)`: a*cos(rate*|x|^2), a radially accelerating ripple.
    Chirp { amplitude: f64, rate: f64 },
    /// `pattern(branch, ...)`: the closed-form multi-spike ansatz, one branch
    /// per detected signal maximum in descending-value order.
    Pattern { branches: Vec<SpikeBranch> },
}

/// Initial fields; `v` only in compete mode.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSection {
    pub u: Vec<FieldTerm>,
    pub v: Option<Vec<FieldTerm>>,
}

/// Time integration horizon and reporting times.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSection {
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub steady_tolerance: f64,
}

impl ScheduleSection {
    /// The solver schedule this section describes.
    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.t_end)
            .with_snapshots(self.snapshots.clone())
            .with_steady_tolerance(self.steady_tolerance)
    }
}

/// Where artifacts go when the command line does not say.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// A parameter that sweep mode may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Chi,
    Theta,
    Mu,
    Diffusion,
}

impl SweepParameter {
    /// Key name as written in files and in the summary header.
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Chi => "chi",
            SweepParameter::Theta => "theta",
            SweepParameter::Mu => "mu",
            SweepParameter::Diffusion => "diffusion",
        }
    }

    fn parse(text: &str) -> Option<SweepParameter> {
        match text {
            "chi" => Some(SweepParameter::Chi),
            "theta" => Some(SweepParameter::Theta),
            "mu" => Some(SweepParameter::Mu),
            "diffusion" => Some(SweepParameter::Diffusion),
            _ => None,
        }
    }
}

/// One swept axis: a parameter and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// The swept axes; jobs run over their cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub potential: Potential,
    pub domain: DomainSection,
    pub physics: PhysicsSection,
    pub initial: Option<InitialSection>,
    pub schedule: Option<ScheduleSection>,
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
}

/// One problem found in a configuration, anchored to its source line
/// (line 0 marks checks that apply to the file as a whole).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

fn issue(line: usize, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { line, message: message.into() }
}

// ---------------------------------------------------------------------------
// Raw scan: lines into sections, preserving line numbers.
// ---------------------------------------------------------------------------

const SECTION_NAMES: &[&str] =
    &["potential", "domain", "physics", "initial", "schedule", "output", "sweep"];

#[derive(Debug)]
struct RawEntry {
    line: usize,
    value: String,
}

#[derive(Debug, Default)]
struct RawSection {
    /// Line of the `[section]` header.
    line: usize,
    entries: BTreeMap<String, RawEntry>,
}

struct RawConfig {
    top: BTreeMap<String, RawEntry>,
    sections: BTreeMap<String, RawSection>,
}

fn scan(text: &str) -> (RawConfig, Vec<ConfigIssue>) {
    let mut issues = Vec::new();
    let mut raw =
        RawConfig { top: BTreeMap::new(), sections: BTreeMap::new() };
    // None: top level. Some(None): inside an unknown section, whose keys are
    // swallowed because the header error already covers them.
    let mut current: Option<Option<String>> = None;

    for (index, full_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = match full_line.find('#') {
            Some(pos) => &full_line[..pos],
            None => full_line,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }

        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                issues.push(issue(line, "section header must look like `[name]`".to_string()));
                current = Some(None);
                continue;
            };
            let name = name.trim().to_string();
            if !SECTION_NAMES.contains(&name.as_str()) {
                issues.push(issue(
                    line,
                    format!("unknown section `[{name}]` (known: {})", SECTION_NAMES.join(", ")),
                ));
                current = Some(None);
                continue;
            }
            if let Some(existing) = raw.sections.get(&name) {
                issues.push(issue(
                    line,
                    format!("duplicate section `[{name}]` (first at line {})", existing.line),
                ));
                current = Some(None);
                continue;
            }
            raw.sections.insert(name.clone(), RawSection { line, entries: BTreeMap::new() });
            current = Some(Some(name));
            continue;
        }

        let Some(eq) = content.find('=') else {
            issues.push(issue(line, "expected `key = value`".to_string()));
            continue;
        };
        let key = content[..eq].trim().to_string();
        let value = content[eq + 1..].trim().to_string();
        if key.is_empty() {
            issues.push(issue(line, "empty key before `=`".to_string()));
            continue;
        }

        match &current {
            None => {
                if let Some(existing) = raw.top.get(&key) {
                    issues.push(issue(
                        line,
                        format!("duplicate key `{key}` (first at line {})", existing.line),
                    ));
                } else {
                    raw.top.insert(key, RawEntry { line, value });
                }
            }
            Some(None) => {} // inside an unknown section; already reported
            Some(Some(section)) => {
                let entries = &mut raw.sections.get_mut(section).expect("exists").entries;
                if let Some(existing) = entries.get(&key) {
                    issues.push(issue(
                        line,
                        format!("duplicate key `{key}` (first at line {})", existing.line),
                    ));
                } else {
                    entries.insert(key, RawEntry { line, value });
                }
            }
        }
    }

    (raw, issues)
}

// ---------------------------------------------------------------------------
// Typed extraction.
// ---------------------------------------------------------------------------

/// Section wrapper that tracks which keys were consumed, so leftovers can be
/// reported as unknown with their own line numbers.
struct SectionReader<'a> {
    name: &'static str,
    entries: BTreeMap<&'a str, (&'a RawEntry, std::cell::Cell<bool>)>,
}

impl<'a> SectionReader<'a> {
    fn new(name: &'static str, raw: &'a RawSection) -> SectionReader<'a> {
        let entries = raw
            .entries
            .iter()
            .map(|(k, v)| (k.as_str(), (v, std::cell::Cell::new(false))))
            .collect();
        SectionReader { name, entries }
    }

    fn take(&self, key: &str) -> Option<(usize, &'a str)> {
        self.entries.get(key).map(|(entry, used)| {
            used.set(true);
            (entry.line, entry.value.as_str())
        })
    }

    fn finish(&self, issues: &mut Vec<ConfigIssue>) {
        for (key, (entry, used)) in &self.entries {
            if !used.get() {
                issues.push(issue(
                    entry.line,
                    format!("unknown key `{key}` in [{}]", self.name),
                ));
            }
        }
    }
}

fn parse_f64(line: usize, key: &str, text: &str, issues: &mut Vec<ConfigIssue>) -> Option<f64> {
    match text.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Some(x),
        Ok(_) => {
            issues.push(issue(line, format!("`{key}` must be finite, got `{text}`")));
            None
        }
        Err(_) => {
            issues.push(issue(line, format!("`{key}` expects a number, got `{text}`")));
            None
        }
    }
}

fn parse_usize(line: usize, key: &str, text: &str, issues: &mut Vec<ConfigIssue>) -> Option<usize> {
    match text.trim().parse::<usize>() {
        Ok(x) => Some(x),
        Err(_) => {
            issues.push(issue(line, format!("`{key}` expects a non-negative integer, got `{text}`")));
            None
        }
    }
}

/// Split on `sep` at paren depth zero, trimming each piece.
fn split_top(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (pos, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(text[start..pos].trim());
                start = pos + ch.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(text[start..].trim());
    parts
}

fn parse_f64_list(
    line: usize,
    key: &str,
    text: &str,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for piece in split_top(text, ',') {
        if piece.is_empty() {
            issues.push(issue(line, format!("`{key}` has an empty list entry")));
            return None;
        }
        out.push(parse_f64(line, key, piece, issues)?);
    }
    Some(out)
}

/// A list of points: bare numbers in 1-D, `(x, y)` tuples in 2-D.
fn parse_points(
    line: usize,
    key: &str,
    text: &str,
    dim: usize,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for piece in split_top(text, ',') {
        if piece.is_empty() {
            issues.push(issue(line, format!("`{key}` has an empty list entry")));
            return None;
        }
        out.push(parse_point(line, key, piece, dim, issues)?);
    }
    Some(out)
}

fn parse_point(
    line: usize,
    key: &str,
    text: &str,
    dim: usize,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<f64>> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let coords: Vec<&str> = split_top(inner, ',');
        if coords.len() != dim {
            issues.push(issue(
                line,
                format!("`{key}` tuple `{text}` has {} coordinates, domain is {dim}-dimensional", coords.len()),
            ));
            return None;
        }
        let mut point = Vec::with_capacity(dim);
        for c in coords {
            point.push(parse_f64(line, key, c, issues)?);
        }
        Some(point)
    } else if dim == 1 {
        Some(vec![parse_f64(line, key, text, issues)?])
    } else {
        issues.push(issue(
            line,
            format!("`{key}` expects `(x, y)` tuples on a 2-dimensional domain, got `{text}`"),
        ));
        None
    }
}

/// Parse a `+`-separated sum of field templates.
fn parse_terms(
    line: usize,
    key: &str,
    text: &str,
    dim: usize,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Vec<FieldTerm>> {
    let mut terms = Vec::new();
    for piece in split_top(text, '+') {
        if piece.is_empty() {
            issues.push(issue(line, format!("`{key}` has an empty term")));
            return None;
        }
        let Some(open) = piece.find('(') else {
            issues.push(issue(
                line,
                format!("`{key}` term `{piece}` must look like `name(args)`"),
            ));
            return None;
        };
        let Some(rest) = piece[open..].strip_prefix('(').and_then(|t| t.strip_suffix(')')) else {
            issues.push(issue(line, format!("`{key}` term `{piece}` has unbalanced parentheses")));
            return None;
        };
        let name = piece[..open].trim();
        let args: Vec<&str> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            split_top(rest, ',')
        };

        let mut floats = |count_min: usize, count_max: usize| -> Option<Vec<f64>> {
            if args.len() < count_min || args.len() > count_max {
                let want = if count_min == count_max {
                    format!("{count_min}")
                } else {
                    format!("{count_min} to {count_max}")
                };
                issues.push(issue(
                    line,
                    format!("`{name}` takes {want} arguments, got {}", args.len()),
                ));
                return None;
            }
            let mut out = Vec::with_capacity(args.len());
            for a in &args {
                out.push(parse_f64(line, key, a, issues)?);
            }
            Some(out)
        };

        match name {
            "constant" => {
                let a = floats(1, 1)?;
                terms.push(FieldTerm::Constant { value: a[0] });
            }
            "cosine" => {
                let a = floats(2, 3)?;
                terms.push(FieldTerm::Cosine {
                    amplitude: a[0],
                    wavenumber: a[1],
                    phase: a.get(2).copied().unwrap_or(0.0),
                });
            }
            "constant-plus-cosine" => {
                let a = floats(3, 4)?;
                terms.push(FieldTerm::Constant { value: a[0] });
                terms.push(FieldTerm::Cosine {
                    amplitude: a[1],
                    wavenumber: a[2],
                    phase: a.get(3).copied().unwrap_or(0.0),
                });
            }
            "gaussian-bump" => {
                let a = floats(2, 2 + dim)?;
                if a.len() == 3 && dim == 2 {
                    issues.push(issue(
                        line,
                        format!("`gaussian-bump` on a 2-dimensional domain takes 2 or 4 arguments, got 3"),
                    ));
                    return None;
                }
                let center = if a.len() > 2 { a[2..].to_vec() } else { vec![0.0; dim] };
                if a[1] <= 0.0 {
                    issues.push(issue(line, format!("`gaussian-bump` rate must be positive, got {}", a[1])));
                    return None;
                }
                terms.push(FieldTerm::GaussianBump { height: a[0], rate: a[1], center });
            }
            "chirp" => {
                let a = floats(2, 2)?;
                terms.push(FieldTerm::Chirp { amplitude: a[0], rate: a[1] });
            }
            "pattern" => {
                if args.is_empty() {
                    issues.push(issue(line, "`pattern` needs at least one branch".to_string()));
                    return None;
                }
                let mut branches = Vec::with_capacity(args.len());
                for a in &args {
                    branches.push(match a.trim() {
                        "tall" => SpikeBranch::Tall,
                        "short" => SpikeBranch::Short,
                        "off" => SpikeBranch::Off,
                        other => {
                            issues.push(issue(
                                line,
                                format!("`pattern` branch must be tall, short, or off, got `{other}`"),
                            ));
                            return None;
                        }
                    });
                }
                terms.push(FieldTerm::Pattern { branches });
            }
            other => {
                issues.push(issue(
                    line,
                    format!(
                        "unknown template `{other}` (known: constant, cosine, \
                         constant-plus-cosine, gaussian-bump, chirp, pattern)"
                    ),
                ));
                return None;
            }
        }
    }
    if terms.is_empty() {
        issues.push(issue(line, format!("`{key}` must not be empty")));
        return None;
    }
    Some(terms)
}

// ---------------------------------------------------------------------------
// Section extraction.
// ---------------------------------------------------------------------------

fn extract_domain(raw: &RawSection, issues: &mut Vec<ConfigIssue>) -> Option<DomainSection> {
    let r = SectionReader::new("domain", raw);
    let mut lo = Vec::new();
    let mut hi = Vec::new();

    let mut axis = |key: &str| -> Option<Option<(f64, f64)>> {
        let Some((line, text)) = r.take(key) else { return Some(None) };
        let values = parse_f64_list(line, key, text, issues)?;
        if values.len() != 2 {
            issues.push(issue(line, format!("`{key}` expects `lo, hi`, got {} values", values.len())));
            return None;
        }
        if !(values[0] < values[1]) {
            issues.push(issue(line, format!("`{key}` needs lo < hi, got {}, {}", values[0], values[1])));
            return None;
        }
        Some(Some((values[0], values[1])))
    };

    let x = axis("x");
    let y = axis("y");
    let cells_entry = r.take("cells");
    r.finish(issues);

    let x = x?;
    let y = y?;
    let Some((xlo, xhi)) = x else {
        issues.push(issue(raw.line, "[domain] requires `x = lo, hi`".to_string()));
        return None;
    };
    lo.push(xlo);
    hi.push(xhi);
    if let Some((ylo, yhi)) = y {
        lo.push(ylo);
        hi.push(yhi);
    }
    let dim = lo.len();

    let cells = match cells_entry {
        None => {
            if dim == 1 {
                vec![DEFAULT_CELLS_1D]
            } else {
                vec![DEFAULT_CELLS_2D; 2]
            }
        }
        Some((line, text)) => {
            let pieces = split_top(text, ',');
            if pieces.len() != dim {
                issues.push(issue(
                    line,
                    format!("`cells` expects {dim} value(s) on a {dim}-dimensional domain, got {}", pieces.len()),
                ));
                return None;
            }
            let mut cells = Vec::with_capacity(dim);
            for piece in pieces {
                let n = parse_usize(line, "cells", piece, issues)?;
                if n < MIN_CELLS {
                    issues.push(issue(line, format!("`cells` must be at least {MIN_CELLS}, got {n}")));
                    return None;
                }
                cells.push(n);
            }
            cells
        }
    };

    Some(DomainSection { lo, hi, cells })
}

fn extract_potential(
    raw: &RawSection,
    dim: usize,
    issues: &mut Vec<ConfigIssue>,
) -> Option<Potential> {
    let r = SectionReader::new("potential", raw);
    let kind = r.take("type");

    let result = match kind {
        None => {
            issues.push(issue(raw.line, "[potential] requires `type = gaussian-sum | quadratic`".to_string()));
            None
        }
        Some((line, "gaussian-sum")) => {
            let amplitudes = r
                .take("amplitudes")
                .and_then(|(l, t)| parse_f64_list(l, "amplitudes", t, issues));
            let widths =
                r.take("widths").and_then(|(l, t)| parse_f64_list(l, "widths", t, issues));
            let centers = r
                .take("centers")
                .and_then(|(l, t)| parse_points(l, "centers", t, dim, issues));
            let offset = match r.take("offset") {
                Some((l, t)) => parse_f64(l, "offset", t, issues),
                None => Some(0.0),
            };
            (|| {
                let amplitudes = amplitudes?;
                let widths = widths?;
                let centers = centers?;
                let offset = offset?;
                if amplitudes.is_empty()
                    || amplitudes.len() != widths.len()
                    || amplitudes.len() != centers.len()
                {
                    issues.push(issue(
                        line,
                        format!(
                            "gaussian-sum needs matching non-empty lists: {} amplitudes, {} widths, {} centers",
                            amplitudes.len(),
                            widths.len(),
                            centers.len()
                        ),
                    ));
                    return None;
                }
                if let Some(w) = widths.iter().find(|w| **w <= 0.0) {
                    issues.push(issue(line, format!("gaussian widths must be positive, got {w}")));
                    return None;
                }
                let terms = amplitudes
                    .into_iter()
                    .zip(widths)
                    .zip(centers)
                    .map(|((amplitude, width), center)| GaussianTerm { amplitude, center, width })
                    .collect();
                Some(Potential::GaussianSum { terms, offset, dim })
            })()
        }
        Some((line, "quadratic")) => {
            let peak_value = r.take("peak_value").and_then(|(l, t)| parse_f64(l, "peak_value", t, issues));
            let peak = r.take("peak").and_then(|(l, t)| parse_point(l, "peak", t, dim, issues));
            let curvatures = r
                .take("curvatures")
                .and_then(|(l, t)| parse_f64_list(l, "curvatures", t, issues));
            (|| {
                let peak_value = peak_value.or_else(|| {
                    issues.push(issue(line, "quadratic requires `peak_value`".to_string()));
                    None
                })?;
                let peak = peak.or_else(|| {
                    issues.push(issue(line, "quadratic requires `peak`".to_string()));
                    None
                })?;
                let curvatures = curvatures.or_else(|| {
                    issues.push(issue(line, "quadratic requires `curvatures`".to_string()));
                    None
                })?;
                if curvatures.len() != dim {
                    issues.push(issue(
                        line,
                        format!("`curvatures` expects {dim} value(s), got {}", curvatures.len()),
                    ));
                    return None;
                }
                if let Some(h) = curvatures.iter().find(|h| **h <= 0.0) {
                    issues.push(issue(line, format!("curvatures must be positive, got {h}")));
                    return None;
                }
                Some(Potential::Quadratic { peak_value, peak, curvatures })
            })()
        }
        Some((line, other)) => {
            issues.push(issue(line, format!("unknown potential type `{other}` (known: gaussian-sum, quadratic)")));
            None
        }
    };

    r.finish(issues);
    result
}

fn extract_physics(raw: &RawSection, issues: &mut Vec<ConfigIssue>) -> Option<PhysicsSection> {
    let r = SectionReader::new("physics", raw);

    let chi = r.take("chi").and_then(|(l, t)| parse_f64(l, "chi", t, issues)).map(|v| (v, true));
    let chi = match chi {
        Some((v, _)) => Some(v),
        None if raw.entries.contains_key("chi") => None, // parse error already reported
        None => {
            issues.push(issue(raw.line, "[physics] requires `chi`".to_string()));
            None
        }
    };
    let theta = match r.take("theta") {
        Some((l, t)) => parse_f64(l, "theta", t, issues),
        None => {
            issues.push(issue(raw.line, "[physics] requires `theta`".to_string()));
            None
        }
    };
    let diffusion = match r.take("diffusion") {
        Some((l, t)) => parse_f64(l, "diffusion", t, issues),
        None => Some(1.0),
    };
    let mu_entry = r.take("mu");
    let reaction_entry = r.take("reaction");
    let resource_entry = r.take("resource");
    let speed_entry = r.take("speed_ratio");
    let strategy_entry = r.take("strategy");
    r.finish(issues);

    let reaction = match reaction_entry {
        None => Some(ReactionKind::CubicAllee),
        Some((l, "cubic-allee")) => {
            let _ = l;
            Some(ReactionKind::CubicAllee)
        }
        Some((_, "logistic-allee")) => Some(ReactionKind::LogisticAllee),
        Some((_, "shared-competition")) => Some(ReactionKind::SharedCompetition),
        Some((l, other)) => {
            issues.push(issue(
                l,
                format!("unknown reaction `{other}` (known: cubic-allee, logistic-allee, shared-competition)"),
            ));
            None
        }
    };

    let mu = match (mu_entry, reaction) {
        (None, _) => Some(1.0),
        (Some((l, t)), Some(ReactionKind::CubicAllee)) => parse_f64(l, "mu", t, issues),
        (Some((l, _)), Some(_)) => {
            issues.push(issue(l, "`mu` applies to the cubic-allee reaction only".to_string()));
            None
        }
        (Some((l, t)), None) => parse_f64(l, "mu", t, issues),
    };

    let resource = match (resource_entry, reaction) {
        (None, Some(ReactionKind::CubicAllee)) | (None, None) => Some(None),
        (None, Some(kind)) => {
            issues.push(issue(
                raw.line,
                format!("reaction `{}` requires `resource = one | exp-potential | linear(a, b)`", kind.name()),
            ));
            None
        }
        (Some((l, _)), Some(ReactionKind::CubicAllee)) => {
            issues.push(issue(
                l,
                "`resource` applies to logistic-allee and shared-competition only".to_string(),
            ));
            None
        }
        (Some((l, t)), _) => parse_resource(l, t, issues).map(Some),
    };

    let speed_ratio = match speed_entry {
        None => Some(None),
        Some((l, t)) => parse_f64(l, "speed_ratio", t, issues).and_then(|v| {
            if v > 0.0 {
                Some(Some(v))
            } else {
                issues.push(issue(l, format!("`speed_ratio` must be positive, got {v}")));
                None
            }
        }),
    };

    let strategy = match strategy_entry {
        None => Some(None),
        Some((_, "ifd")) => Some(Some(Strategy::Ifd)),
        Some((_, "aggressive")) => Some(Some(Strategy::Aggressive)),
        Some((l, other)) => {
            issues.push(issue(l, format!("unknown strategy `{other}` (known: ifd, aggressive)")));
            None
        }
    };

    // Range checks on whatever parsed.
    if let Some(chi) = chi {
        if chi <= 0.0 {
            issues.push(issue(raw.line, format!("`chi` must be positive, got {chi}")));
        }
    }
    if let Some(theta) = theta {
        if !(theta > 0.0 && theta < 1.0) {
            issues.push(issue(raw.line, format!("`theta` must lie in (0, 1), got {theta}")));
        }
    }
    if let Some(d) = diffusion {
        if d <= 0.0 {
            issues.push(issue(raw.line, format!("`diffusion` must be positive, got {d}")));
        }
    }
    if let Some(mu) = mu {
        if mu <= 0.0 {
            issues.push(issue(raw.line, format!("`mu` must be positive, got {mu}")));
        }
    }

    Some(PhysicsSection {
        chi: chi?,
        diffusion: diffusion?,
        mu: mu?,
        theta: theta?,
        reaction: reaction?,
        resource: resource?,
        speed_ratio: speed_ratio?,
        strategy: strategy?,
    })
}

fn parse_resource(line: usize, text: &str, issues: &mut Vec<ConfigIssue>) -> Option<Resource> {
    let text = text.trim();
    match text {
        "one" => return Some(Resource::One),
        "exp-potential" => return Some(Resource::ExpPotential),
        _ => {}
    }
    if let Some(inner) = text.strip_prefix("linear").map(str::trim) {
        if let Some(body) = inner.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            let parts: Vec<&str> = split_top(body, ',');
            if parts.len() != 2 {
                issues.push(issue(line, format!("`linear` takes 2 arguments, got {}", parts.len())));
                return None;
            }
            let a = parse_f64(line, "resource", parts[0], issues)?;
            let b = parse_f64(line, "resource", parts[1], issues)?;
            return Some(Resource::Linear { a, b });
        }
    }
    issues.push(issue(
        line,
        format!("unknown resource `{text}` (known: one, exp-potential, linear(a, b))"),
    ));
    None
}

fn extract_initial(
    raw: &RawSection,
    dim: usize,
    issues: &mut Vec<ConfigIssue>,
) -> Option<InitialSection> {
    let r = SectionReader::new("initial", raw);
    let u = r.take("u").and_then(|(l, t)| parse_terms(l, "u", t, dim, issues));
    let v = match r.take("v") {
        None => Some(None),
        Some((l, t)) => parse_terms(l, "v", t, dim, issues).map(Some),
    };
    r.finish(issues);
    let u = match u {
        Some(u) => u,
        None => {
            if !raw.entries.contains_key("u") {
                issues.push(issue(raw.line, "[initial] requires `u = <templates>`".to_string()));
            }
            return None;
        }
    };
    Some(InitialSection { u, v: v? })
}

fn extract_schedule(raw: &RawSection, issues: &mut Vec<ConfigIssue>) -> Option<ScheduleSection> {
    let r = SectionReader::new("schedule", raw);
    let t_end = match r.take("t_end") {
        Some((l, t)) => parse_f64(l, "t_end", t, issues).and_then(|v| {
            if v > 0.0 {
                Some(v)
            } else {
                issues.push(issue(l, format!("`t_end` must be positive, got {v}")));
                None
            }
        }),
        None => {
            issues.push(issue(raw.line, "[schedule] requires `t_end`".to_string()));
            None
        }
    };
    let snapshots = match r.take("snapshots") {
        None => Some(Vec::new()),
        Some((l, t)) => parse_f64_list(l, "snapshots", t, issues).and_then(|v| {
            if let Some(bad) = v.iter().find(|s| **s < 0.0) {
                issues.push(issue(l, format!("snapshot times must be non-negative, got {bad}")));
                return None;
            }
            Some(v)
        }),
    };
    let steady_tolerance = match r.take("steady_tolerance") {
        None => Some(STEADY_TOLERANCE_DEFAULT),
        Some((l, t)) => parse_f64(l, "steady_tolerance", t, issues).and_then(|v| {
            if v > 0.0 {
                Some(v)
            } else {
                issues.push(issue(l, format!("`steady_tolerance` must be positive, got {v}")));
                None
            }
        }),
    };
    r.finish(issues);
    Some(ScheduleSection { t_end: t_end?, snapshots: snapshots?, steady_tolerance: steady_tolerance? })
}

fn extract_output(raw: &RawSection, issues: &mut Vec<ConfigIssue>) -> Option<OutputSection> {
    let r = SectionReader::new("output", raw);
    let dir = r.take("dir").map(|(_, t)| t.to_string());
    r.finish(issues);
    Some(OutputSection { dir })
}

fn extract_sweep(raw: &RawSection, issues: &mut Vec<ConfigIssue>) -> Option<SweepSection> {
    let r = SectionReader::new("sweep", raw);

    let mut axis = |pkey: &str, vkey: &str, required: bool| -> Option<Option<SweepAxis>> {
        let param = r.take(pkey);
        let values = r.take(vkey);
        match (param, values) {
            (None, None) => {
                if required {
                    issues.push(issue(raw.line, format!("[sweep] requires `{pkey}` and `{vkey}`")));
                    None
                } else {
                    Some(None)
                }
            }
            (Some((l, p)), Some((vl, vt))) => {
                let parameter = SweepParameter::parse(p).or_else(|| {
                    issues.push(issue(
                        l,
                        format!("unknown sweep parameter `{p}` (known: chi, theta, mu, diffusion)"),
                    ));
                    None
                })?;
                let values = parse_f64_list(vl, vkey, vt, issues)?;
                if values.is_empty() {
                    issues.push(issue(vl, format!("`{vkey}` must not be empty")));
                    return None;
                }
                let ok = values.iter().all(|v| match parameter {
                    SweepParameter::Theta => *v > 0.0 && *v < 1.0,
                    _ => *v > 0.0,
                });
                if !ok {
                    issues.push(issue(
                        vl,
                        format!("`{vkey}` values out of range for `{}`", parameter.name()),
                    ));
                    return None;
                }
                Some(Some(SweepAxis { parameter, values }))
            }
            (Some((l, _)), None) => {
                issues.push(issue(l, format!("`{pkey}` without `{vkey}`")));
                None
            }
            (None, Some((l, _))) => {
                issues.push(issue(l, format!("`{vkey}` without `{pkey}`")));
                None
            }
        }
    };

    let first = axis("parameter", "values", true);
    let second = axis("parameter2", "values2", false);
    r.finish(issues);

    let first = first??;
    let mut axes = vec![first];
    if let Some(ax) = second? {
        if ax.parameter == axes[0].parameter {
            issues.push(issue(raw.line, format!("both sweep axes vary `{}`", ax.parameter.name())));
            return None;
        }
        axes.push(ax);
    }
    Some(SweepSection { axes })
}

// ---------------------------------------------------------------------------
// Mode-dependent validation.
// ---------------------------------------------------------------------------

fn validate_for_mode(
    mode: Mode,
    physics: &PhysicsSection,
    initial: Option<&InitialSection>,
    schedule: Option<&ScheduleSection>,
    sweep: Option<&SweepSection>,
    dim: usize,
    lines: &SectionLines,
    issues: &mut Vec<ConfigIssue>,
) {
    let needs_initial = matches!(mode, Mode::Simulate | Mode::Compete | Mode::Eig | Mode::Sweep);
    let needs_schedule = matches!(mode, Mode::Simulate | Mode::Compete | Mode::Sweep);

    // Only flag truly absent sections; a present-but-broken section already
    // carries its own errors.
    if needs_initial && initial.is_none() && lines.initial == 0 {
        issues.push(issue(0, format!("mode `{}` requires an [initial] section", mode.name())));
    }
    if needs_schedule && schedule.is_none() && lines.schedule == 0 {
        issues.push(issue(0, format!("mode `{}` requires a [schedule] section", mode.name())));
    }

    match mode {
        Mode::Compete => {
            if physics.reaction != ReactionKind::SharedCompetition {
                issues.push(issue(
                    lines.physics,
                    "compete mode requires `reaction = shared-competition`".to_string(),
                ));
            }
            if physics.strategy.is_none() {
                issues.push(issue(
                    lines.physics,
                    "compete mode requires `strategy = ifd | aggressive`".to_string(),
                ));
            }
            match physics.strategy {
                Some(Strategy::Aggressive) if physics.speed_ratio.is_none() => {
                    issues.push(issue(
                        lines.physics,
                        "the aggressive strategy requires `speed_ratio`".to_string(),
                    ));
                }
                Some(Strategy::Ifd) => {
                    if physics.speed_ratio.is_some() {
                        issues.push(issue(
                            lines.physics,
                            "`speed_ratio` applies to the aggressive strategy only".to_string(),
                        ));
                    }
                    if matches!(physics.resource, Some(Resource::Linear { .. })) {
                        issues.push(issue(
                            lines.physics,
                            "ifd dispersal follows grad(ln r), which the advection operator \
                             represents only for `resource = one` or `resource = exp-potential`"
                                .to_string(),
                        ));
                    }
                }
                _ => {}
            }
            if let Some(init) = initial {
                if init.v.is_none() {
                    issues.push(issue(
                        lines.initial,
                        "compete mode requires `v = <templates>` in [initial]".to_string(),
                    ));
                }
            }
            if dim != 1 {
                issues.push(issue(0, "compete mode runs on one-dimensional domains only".to_string()));
            }
        }
        _ => {
            if physics.reaction == ReactionKind::SharedCompetition {
                issues.push(issue(
                    lines.physics,
                    format!(
                        "reaction `shared-competition` is two-species; mode `{}` cannot run it \
                         (use compete)",
                        mode.name()
                    ),
                ));
            }
            if physics.strategy.is_some() || physics.speed_ratio.is_some() {
                issues.push(issue(
                    lines.physics,
                    format!("`strategy` and `speed_ratio` apply to compete mode only, not `{}`", mode.name()),
                ));
            }
            if let Some(init) = initial {
                if init.v.is_some() {
                    issues.push(issue(
                        lines.initial,
                        format!("`v` in [initial] applies to compete mode only, not `{}`", mode.name()),
                    ));
                }
            }
        }
    }

    match (mode, sweep.is_some()) {
        (Mode::Sweep, false) => {
            if lines.sweep == 0 {
                issues.push(issue(0, "mode `sweep` requires a [sweep] section".to_string()));
            }
        }
        (Mode::Sweep, true) => {}
        (_, true) => {
            issues.push(issue(
                lines.sweep,
                format!("a [sweep] section applies to sweep mode only, not `{}`", mode.name()),
            ));
        }
        (_, false) => {}
    }
}

/// Section header lines (0 when the section is absent), for anchoring
/// cross-section errors.
#[derive(Default)]
struct SectionLines {
    physics: usize,
    initial: usize,
    schedule: usize,
    sweep: usize,
}

// ---------------------------------------------------------------------------
// Entry points.
// ---------------------------------------------------------------------------

/// Parse a configuration file, honoring its own `mode` key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    parse_config_with_mode(text, None)
}

/// Parse a configuration file, overriding `mode` (the command line wins).
/// All detected problems are returned together.
pub fn parse_config_with_mode(
    text: &str,
    mode_override: Option<Mode>,
) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let (raw, mut issues) = scan(text);

    // Top-level keys: only `mode`.
    let mut file_mode = None;
    for (key, entry) in &raw.top {
        match key.as_str() {
            "mode" => match Mode::parse(&entry.value) {
                Some(m) => file_mode = Some(m),
                None => issues.push(issue(
                    entry.line,
                    format!(
                        "unknown mode `{}` (known: analyze, simulate, compete, eig, sweep)",
                        entry.value
                    ),
                )),
            },
            other => issues.push(issue(entry.line, format!("unknown top-level key `{other}`"))),
        }
    }
    let mode = match (mode_override, file_mode) {
        (Some(m), _) => Some(m),
        (None, Some(m)) => Some(m),
        (None, None) => {
            issues.push(issue(0, "missing top-level `mode = <name>`".to_string()));
            None
        }
    };

    // Required sections.
    let domain = match raw.sections.get("domain") {
        Some(s) => extract_domain(s, &mut issues),
        None => {
            issues.push(issue(0, "missing required section [domain]".to_string()));
            None
        }
    };
    let dim = domain.as_ref().map(|d| d.dim()).unwrap_or(1);

    let potential = match raw.sections.get("potential") {
        Some(s) => extract_potential(s, dim, &mut issues),
        None => {
            issues.push(issue(0, "missing required section [potential]".to_string()));
            None
        }
    };
    let physics = match raw.sections.get("physics") {
        Some(s) => extract_physics(s, &mut issues),
        None => {
            issues.push(issue(0, "missing required section [physics]".to_string()));
            None
        }
    };

    let initial = raw.sections.get("initial").and_then(|s| extract_initial(s, dim, &mut issues));
    let schedule = raw.sections.get("schedule").and_then(|s| extract_schedule(s, &mut issues));
    let output = raw
        .sections
        .get("output")
        .and_then(|s| extract_output(s, &mut issues))
        .unwrap_or_default();
    let sweep = raw.sections.get("sweep").and_then(|s| extract_sweep(s, &mut issues));

    let lines = SectionLines {
        physics: raw.sections.get("physics").map(|s| s.line).unwrap_or(0),
        initial: raw.sections.get("initial").map(|s| s.line).unwrap_or(0),
        schedule: raw.sections.get("schedule").map(|s| s.line).unwrap_or(0),
        sweep: raw.sections.get("sweep").map(|s| s.line).unwrap_or(0),
    };

    if let (Some(mode), Some(physics)) = (mode, physics.as_ref()) {
        validate_for_mode(
            mode,
            physics,
            initial.as_ref(),
            schedule.as_ref(),
            sweep.as_ref(),
            dim,
            &lines,
            &mut issues,
        );
    }

    if !issues.is_empty() {
        issues.sort_by_key(|i| i.line);
        return Err(issues);
    }

    Ok(ExperimentConfig {
        mode: mode.expect("no issues implies mode"),
        potential: potential.expect("no issues implies potential"),
        domain: domain.expect("no issues implies domain"),
        physics: physics.expect("no issues implies physics"),
        initial,
        schedule,
        output,
        sweep,
    })
}

// ---------------------------------------------------------------------------
// Canonical serializer.
// ---------------------------------------------------------------------------

/// Lossless float in the friendliest notation Rust round-trips: plain
/// decimal (shortest form) for moderate magnitudes, exponent form otherwise.
pub(crate) fn fmt_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_value(*v)).collect::<Vec<_>>().join(", ")
}

fn fmt_point(point: &[f64]) -> String {
    if point.len() == 1 {
        fmt_value(point[0])
    } else {
        format!("({})", fmt_list(point))
    }
}

fn fmt_terms(terms: &[FieldTerm]) -> String {
    terms
        .iter()
        .map(|term| match term {
            FieldTerm::Constant { value } => format!("constant({})", fmt_value(*value)),
            FieldTerm::Cosine { amplitude, wavenumber, phase } => {
                if *phase == 0.0 {
                    format!("cosine({}, {})", fmt_value(*amplitude), fmt_value(*wavenumber))
                } else {
                    format!(
                        "cosine({}, {}, {})",
                        fmt_value(*amplitude),
                        fmt_value(*wavenumber),
                        fmt_value(*phase)
                    )
                }
            }
            FieldTerm::GaussianBump { height, rate, center } => {
                if center.iter().all(|c| *c == 0.0) {
                    format!("gaussian-bump({}, {})", fmt_value(*height), fmt_value(*rate))
                } else {
                    format!(
                        "gaussian-bump({}, {}, {})",
                        fmt_value(*height),
                        fmt_value(*rate),
                        fmt_list(center)
                    )
                }
            }
            FieldTerm::Chirp { amplitude, rate } => {
                format!("chirp({}, {})", fmt_value(*amplitude), fmt_value(*rate))
            }
            FieldTerm::Pattern { branches } => {
                let names: Vec<&str> = branches
                    .iter()
                    .map(|b| match b {
                        SpikeBranch::Tall => "tall",
                        SpikeBranch::Short => "short",
                        SpikeBranch::Off => "off",
                    })
                    .collect();
                format!("pattern({})", names.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn fmt_resource(resource: &Resource) -> String {
    match resource {
        Resource::One => "one".to_string(),
        Resource::ExpPotential => "exp-potential".to_string(),
        Resource::Linear { a, b } => format!("linear({}, {})", fmt_value(*a), fmt_value(*b)),
    }
}

/// Write the resolved configuration in canonical form. Parsing the result
/// reproduces the input configuration exactly.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode = {}", cfg.mode.name());

    let _ = writeln!(out, "\n[potential]");
    match &cfg.potential {
        Potential::GaussianSum { terms, offset, .. } => {
            let _ = writeln!(out, "type = gaussian-sum");
            let amplitudes: Vec<f64> = terms.iter().map(|t| t.amplitude).collect();
            let widths: Vec<f64> = terms.iter().map(|t| t.width).collect();
            let _ = writeln!(out, "amplitudes = {}", fmt_list(&amplitudes));
            let _ = writeln!(out, "widths = {}", fmt_list(&widths));
            let centers: Vec<String> = terms.iter().map(|t| fmt_point(&t.center)).collect();
            let _ = writeln!(out, "centers = {}", centers.join(", "));
            if *offset != 0.0 {
                let _ = writeln!(out, "offset = {}", fmt_value(*offset));
            }
        }
        Potential::Quadratic { peak_value, peak, curvatures } => {
            let _ = writeln!(out, "type = quadratic");
            let _ = writeln!(out, "peak_value = {}", fmt_value(*peak_value));
            let _ = writeln!(out, "peak = {}", fmt_point(peak));
            let _ = writeln!(out, "curvatures = {}", fmt_list(curvatures));
        }
    }

    let _ = writeln!(out, "\n[domain]");
    let _ = writeln!(out, "x = {}, {}", fmt_value(cfg.domain.lo[0]), fmt_value(cfg.domain.hi[0]));
    if cfg.domain.dim() == 2 {
        let _ = writeln!(out, "y = {}, {}", fmt_value(cfg.domain.lo[1]), fmt_value(cfg.domain.hi[1]));
    }
    let cells: Vec<String> = cfg.domain.cells.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "cells = {}", cells.join(", "));

    let _ = writeln!(out, "\n[physics]");
    let _ = writeln!(out, "chi = {}", fmt_value(cfg.physics.chi));
    let _ = writeln!(out, "diffusion = {}", fmt_value(cfg.physics.diffusion));
    if cfg.physics.reaction == ReactionKind::CubicAllee {
        let _ = writeln!(out, "mu = {}", fmt_value(cfg.physics.mu));
    }
    let _ = writeln!(out, "theta = {}", fmt_value(cfg.physics.theta));
    let _ = writeln!(out, "reaction = {}", cfg.physics.reaction.name());
    if let Some(resource) = &cfg.physics.resource {
        let _ = writeln!(out, "resource = {}", fmt_resource(resource));
    }
    if let Some(strategy) = cfg.physics.strategy {
        let _ = writeln!(out, "strategy = {}", strategy.name());
    }
    if let Some(ratio) = cfg.physics.speed_ratio {
        let _ = writeln!(out, "speed_ratio = {}", fmt_value(ratio));
    }

    if let Some(initial) = &cfg.initial {
        let _ = writeln!(out, "\n[initial]");
        let _ = writeln!(out, "u = {}", fmt_terms(&initial.u));
        if let Some(v) = &initial.v {
            let _ = writeln!(out, "v = {}", fmt_terms(v));
        }
    }

    if let Some(schedule) = &cfg.schedule {
        let _ = writeln!(out, "\n[schedule]");
        let _ = writeln!(out, "t_end = {}", fmt_value(schedule.t_end));
        if !schedule.snapshots.is_empty() {
            let _ = writeln!(out, "snapshots = {}", fmt_list(&schedule.snapshots));
        }
        let _ = writeln!(out, "steady_tolerance = {}", fmt_value(schedule.steady_tolerance));
    }

    if let Some(dir) = &cfg.output.dir {
        let _ = writeln!(out, "\n[output]");
        let _ = writeln!(out, "dir = {dir}");
    }

    if let Some(sweep) = &cfg.sweep {
        let _ = writeln!(out, "\n[sweep]");
        let _ = writeln!(out, "parameter = {}", sweep.axes[0].parameter.name());
        let _ = writeln!(out, "values = {}", fmt_list(&sweep.axes[0].values));
        if let Some(second) = sweep.axes.get(1) {
            let _ = writeln!(out, "parameter2 = {}", second.parameter.name());
            let _ = writeln!(out, "values2 = {}", fmt_list(&second.values));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL_SIMULATE: &str = "\
mode = simulate

[potential]
type = gaussian-sum
amplitudes = 1.9947114020071634
widths = 0.2
centers = 0

[domain]
x = -1, 1

[physics]
chi = 10
theta = 0.3

[initial]
u = constant(1.1) + cosine(0.001, 12.566370614359172)

[schedule]
t_end = 2000
snapshots = 0, 10, 100
";

    #[test]
    fn minimal_simulate_config_fills_documented_defaults() {
        let cfg = parse_config(FULL_SIMULATE).expect("valid config");
        assert_eq!(cfg.mode, Mode::Simulate);
        assert_eq!(cfg.domain.cells, vec![DEFAULT_CELLS_1D]);
        assert_eq!(cfg.physics.diffusion, 1.0);
        assert_eq!(cfg.physics.mu, 1.0);
        assert_eq!(cfg.physics.reaction, ReactionKind::CubicAllee);
        assert_eq!(cfg.physics.resource, None);
        let schedule = cfg.schedule.expect("schedule present");
        assert_eq!(schedule.steady_tolerance, STEADY_TOLERANCE_DEFAULT);
        assert_eq!(schedule.snapshots, vec![0.0, 10.0, 100.0]);
        assert_eq!(cfg.initial.as_ref().unwrap().u.len(), 2);
    }

    #[test]
    fn every_error_is_reported_with_its_line() {
        let text = "\
mode = simulate

[potential]
type = quadratic
peak_value = 1
peak = 0
curvatures = 2
wobble = 3

[domain]
x = -1, 1
cells = four

[physics]
chi = 10
theta = 1.7
";
        let issues = parse_config(text).expect_err("invalid config");
        let lines: Vec<usize> = issues.iter().map(|i| i.line).collect();
        // Unknown key `wobble` (line 8), bad `cells` (line 12), theta range
        // (anchored to [physics] at line 14), missing [initial] and
        // [schedule] for simulate (line 0).
        assert!(lines.contains(&8), "unknown key line: {issues:?}");
        assert!(lines.contains(&12), "bad cells line: {issues:?}");
        assert!(lines.contains(&14), "theta range line: {issues:?}");
        assert_eq!(lines.iter().filter(|l| **l == 0).count(), 2, "{issues:?}");
        assert!(issues.len() >= 5, "{issues:?}");
    }

    #[test]
    fn unknown_sections_and_duplicates_are_rejected() {
        let text = "\
mode = analyze

[potential]
type = quadratic
peak_value = 1
peak = 0
curvatures = 2

[potentail]
type = quadratic

[domain]
x = -1, 1
x = -2, 2

[physics]
chi = 10
theta = 0.3
";
        let issues = parse_config(text).expect_err("invalid config");
        assert!(issues.iter().any(|i| i.line == 9 && i.message.contains("unknown section")));
        assert!(issues.iter().any(|i| i.line == 14 && i.message.contains("duplicate key")));
        assert_eq!(issues.len(), 2, "{issues:?}");
    }

    #[test]
    fn constant_plus_cosine_desugars_to_its_two_terms() {
        let direct = parse_config(FULL_SIMULATE).expect("valid");
        let sugared = parse_config(&FULL_SIMULATE.replace(
            "constant(1.1) + cosine(0.001, 12.566370614359172)",
            "constant-plus-cosine(1.1, 0.001, 12.566370614359172)",
        ))
        .expect("valid");
        assert_eq!(direct.initial, sugared.initial);
    }

    #[test]
    fn round_trip_preserves_a_rich_config() {
        let text = "\
mode = sweep

[potential]
type = gaussian-sum
amplitudes = 2, 1
widths = 0.2, 0.35
centers = (0.5, 0.25), (-0.5, 0)
offset = -0.125

[domain]
x = -1, 1
y = -1, 1
cells = 64, 48

[physics]
chi = 30
diffusion = 0.5
theta = 0.25
reaction = logistic-allee
resource = linear(2, 0.5)

[initial]
u = gaussian-bump(0.46, 500, 0.1, -0.2) + chirp(0.01, 1) + pattern(tall, off)

[schedule]
t_end = 10
snapshots = 0, 1, 10
steady_tolerance = 1e-11

[output]
dir = out/rich

[sweep]
parameter = chi
values = 10, 30
parameter2 = theta
values2 = 0.2, 0.25
";
        let cfg = parse_config(text).expect("valid config");
        let echoed = serialize_config(&cfg);
        let reparsed = parse_config(&echoed).unwrap_or_else(|e| panic!("echo parses: {e:?}\n{echoed}"));
        assert_eq!(cfg, reparsed);
        // Echoing is idempotent byte for byte.
        assert_eq!(echoed, serialize_config(&reparsed));
    }

    #[test]
    fn compete_mode_checks_species_and_strategy() {
        let base = "\
mode = compete

[potential]
type = gaussian-sum
amplitudes = 1.9947114020071634
widths = 0.2
centers = 0

[domain]
x = -1, 1

[physics]
chi = 20
theta = 0.03
reaction = shared-competition
resource = exp-potential
strategy = ifd

[initial]
u = gaussian-bump(1.99, 1)
v = constant(0.1) + cosine(0.01, 1)

[schedule]
t_end = 100
";
        assert!(parse_config(base).is_ok());

        let missing_v = base.replace("v = constant(0.1) + cosine(0.01, 1)\n", "");
        let issues = parse_config(&missing_v).expect_err("v required");
        assert!(issues.iter().any(|i| i.message.contains("requires `v")), "{issues:?}");

        let bad_resource = base.replace("resource = exp-potential", "resource = linear(2, 1)");
        let issues = parse_config(&bad_resource).expect_err("ifd excludes linear");
        assert!(issues.iter().any(|i| i.message.contains("grad(ln r)")), "{issues:?}");

        let wrong_reaction = base
            .replace("reaction = shared-competition", "reaction = logistic-allee")
            .replace("resource = exp-potential", "resource = one");
        let issues = parse_config(&wrong_reaction).expect_err("reaction mismatch");
        assert!(
            issues.iter().any(|i| i.message.contains("shared-competition")),
            "{issues:?}"
        );
    }

    #[test]
    fn shared_competition_outside_compete_is_rejected() {
        let text = FULL_SIMULATE
            .replace("theta = 0.3", "theta = 0.3\nreaction = shared-competition\nresource = one");
        let issues = parse_config(&text).expect_err("two-species reaction");
        assert!(issues.iter().any(|i| i.message.contains("use compete")), "{issues:?}");
    }

    #[test]
    fn cli_mode_override_revalidates_requirements() {
        let analyze_only = "\
mode = analyze

[potential]
type = quadratic
peak_value = 1
peak = 0
curvatures = 2

[domain]
x = -1, 1

[physics]
chi = 10
theta = 0.3
";
        assert!(parse_config(analyze_only).is_ok());
        let issues = parse_config_with_mode(analyze_only, Some(Mode::Simulate))
            .expect_err("simulate needs more sections");
        assert!(issues.iter().any(|i| i.message.contains("[initial]")), "{issues:?}");
        assert!(issues.iter().any(|i| i.message.contains("[schedule]")), "{issues:?}");
    }

    #[test]
    fn tuples_and_scalars_respect_the_domain_dimension() {
        let text = "\
mode = analyze

[potential]
type = gaussian-sum
amplitudes = 1
widths = 0.2
centers = 0.5

[domain]
x = -1, 1
y = -1, 1

[physics]
chi = 10
theta = 0.3
";
        let issues = parse_config(text).expect_err("scalar center in 2-D");
        assert!(issues.iter().any(|i| i.message.contains("(x, y)")), "{issues:?}");
    }
}
