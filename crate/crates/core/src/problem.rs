//! Problem description, `key = value` configuration files and the solve pipeline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adr::AdvectionScheme;
use crate::baselines::{csl_preconditioner, wave_ray_preconditioner, CslConfig, WaveRayConfig};
use crate::cycle::{AdrLevel, RayEquation, WaveAdrConfig, WaveAdrSolver, DEFAULT_ALPHA};
use crate::eikonal::{solve_factored_eikonal, PhaseField};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::helmholtz::{point_source, HelmholtzOp};
use crate::hierarchy::{DepthPolicy, Hierarchy};
use crate::ingest::{ingest_slowness, SlownessSource};
use crate::krylov::{fgmres, FgmresConfig};
use crate::linear::{Identity, LinearOperator};
use crate::medium::SlownessModel;
use crate::tuner::{tune_alphas, TunedAlphas, TunerConfig};

/// Interior grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeSpec {
    /// Pick `N` with `ωh ∈ [0.4, 0.6]`.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSpec {
    Center,
    Node(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    WaveAdr,
    WaveRay,
    Csl,
    Unpreconditioned,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::WaveAdr => "wave_adr",
            Method::WaveRay => "wave_ray",
            Method::Csl => "csl",
            Method::Unpreconditioned => "unpreconditioned",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "wave_adr" => Method::WaveAdr,
            "wave_ray" => Method::WaveRay,
            "csl" => Method::Csl,
            "unpreconditioned" | "none" => Method::Unpreconditioned,
            _ => return Err(Error::Parse(format!("unknown method `{s}`"))),
        })
    }
}

/// How the per-level Chebyshev α are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaPolicy {
    /// Uniform α on every Chebyshev level.
    Uniform(f64),
    Tune,
    /// Values for levels `2..=L`.
    Fixed(Vec<f64>),
}

/// Everything needed to run one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub omega: f64,
    pub slowness: SlownessSource,
    pub size: SizeSpec,
    pub source: SourceSpec,
    /// `γ₀ = ratio · ω² s²`; 0 for the unshifted problem.
    pub shift0_ratio: f64,
    pub method: Method,
    pub fgmres: FgmresConfig,
    pub wave_adr: WaveAdrConfig,
    pub rays: usize,
    pub ray_form: RayEquation,
    pub csl: CslConfig,
    pub tuner: TunerConfig,
    pub alphas: AlphaPolicy,
    /// Ingestion smoothing in cells; `None` is `N/64`.
    pub sigma: Option<f64>,
    /// Write `τ` here after the eikonal solve.
    pub tau_output: Option<PathBuf>,
}

impl ProblemSpec {
    pub fn new(omega: f64, slowness: SlownessSource) -> Self {
        Self {
            omega,
            slowness,
            size: SizeSpec::Auto,
            source: SourceSpec::Center,
            shift0_ratio: 0.0,
            method: Method::WaveAdr,
            fgmres: FgmresConfig::default(),
            wave_adr: WaveAdrConfig::default(),
            rays: 8,
            ray_form: RayEquation::default(),
            csl: CslConfig::default(),
            tuner: TunerConfig::default(),
            alphas: AlphaPolicy::Tune,
            sigma: None,
            tau_output: None,
        }
    }

    /// Parse a configuration file; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    /// Parse `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut omega = None;
        let mut slowness = None;
        let mut spec = ProblemSpec::new(1.0, SlownessSource::Constant(1.0));
        let mut tuner_mode: Option<String> = None;
        let mut fixed: Vec<(usize, f64)> = Vec::new();
        let resolve = |p: &str| -> PathBuf {
            let p = PathBuf::from(p);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
            let bad = |what: &str| Error::Parse(format!("line {}: invalid {what} `{value}`", lineno + 1));
            let num = || parse_real(value).ok_or_else(|| bad(key));
            let int = || value.parse::<usize>().map_err(|_| bad(key));
            let flag = || parse_bool(value).ok_or_else(|| bad(key));
            match key {
                "omega" => omega = Some(num()?),
                "slowness" => {
                    let (kind, arg) = value.split_once(':').ok_or_else(|| bad("slowness"))?;
                    slowness = Some(match kind.trim() {
                        "constant" => SlownessSource::Constant(parse_real(arg.trim()).ok_or_else(|| bad("slowness"))?),
                        "image" => SlownessSource::Image(resolve(arg.trim())),
                        "raw" => SlownessSource::Raw(resolve(arg.trim())),
                        _ => return Err(bad("slowness")),
                    });
                }
                "n" => {
                    spec.size = if value == "auto" { SizeSpec::Auto } else { SizeSpec::Fixed(int()?) };
                }
                "source" => {
                    spec.source = if value == "center" {
                        SourceSpec::Center
                    } else {
                        let (i, j) = value.split_once(',').ok_or_else(|| bad("source"))?;
                        SourceSpec::Node(
                            i.trim().parse().map_err(|_| bad("source"))?,
                            j.trim().parse().map_err(|_| bad("source"))?,
                        )
                    };
                }
                "shift0" => {
                    spec.shift0_ratio = match value {
                        "none" => 0.0,
                        "0.01k2" | "0.01k^2" => 0.01,
                        _ => num()?,
                    };
                }
                "method" => spec.method = Method::parse(value)?,
                "fgmres.restart" => spec.fgmres.restart = int()?,
                "fgmres.tol" => spec.fgmres.tol = num()?,
                "fgmres.max_iter" => spec.fgmres.max_iter = int()?,
                "adr.level" => {
                    spec.wave_adr.adr_level = if value == "auto" { AdrLevel::Auto } else { AdrLevel::Fixed(int()?) };
                }
                "adr.steps" => spec.wave_adr.correction_steps = int()?,
                "adr.scheme" => {
                    spec.wave_adr.scheme = match value {
                        "upwind" => AdvectionScheme::Upwind,
                        "central" => AdvectionScheme::Central,
                        _ => return Err(bad("scheme")),
                    };
                }
                "adr.direct" => spec.wave_adr.adr.direct = flag()?,
                "adr.clamp_focusing" => spec.wave_adr.clamp_focusing = flag()?,
                "adr.smoother_steps" => spec.wave_adr.adr.smoother_steps = int()?,
                "adr.coarse_steps" => spec.wave_adr.adr.coarse_steps = int()?,
                "adr.cycles" => spec.wave_adr.adr.cycles = int()?,
                "level3_post_smoothing" => spec.wave_adr.level3_post_smoothing = flag()?,
                "ray.count" => spec.rays = int()?,
                "ray.form" => {
                    spec.ray_form = match value {
                        "consistent" => RayEquation::Consistent,
                        "as_printed" => RayEquation::AsPrinted,
                        _ => return Err(bad("ray form")),
                    };
                }
                "csl.beta" => spec.csl.beta = Some(num()?),
                "tuner" => tuner_mode = Some(value.to_string()),
                "tuner.k" => spec.tuner.k = int()?,
                "tuner.golden_passes" => spec.tuner.golden_passes = int()?,
                "tuner.sweeps" => spec.tuner.sweeps = int()?,
                "tuner.candidates" => {
                    spec.tuner.candidates = value
                        .split(',')
                        .map(|v| parse_real(v.trim()).ok_or_else(|| bad("candidate")))
                        .collect::<Result<_>>()?;
                }
                "alpha" => spec.alphas = AlphaPolicy::Uniform(num()?),
                "ingest.sigma" => spec.sigma = Some(num()?),
                "tau.output" => spec.tau_output = Some(resolve(value)),
                k if k.starts_with("alpha.") => {
                    let l: usize = k["alpha.".len()..].parse().map_err(|_| bad("alpha level"))?;
                    fixed.push((l, num()?));
                }
                _ => return Err(Error::Parse(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        spec.omega = omega.ok_or_else(|| Error::Parse("missing `omega`".into()))?;
        spec.slowness = slowness.ok_or_else(|| Error::Parse("missing `slowness`".into()))?;
        match tuner_mode.as_deref() {
            Some("tune") => spec.alphas = AlphaPolicy::Tune,
            Some("defaults") => {
                if !matches!(spec.alphas, AlphaPolicy::Uniform(_)) {
                    spec.alphas = AlphaPolicy::Uniform(DEFAULT_ALPHA);
                }
            }
            Some("fixed") | None if !fixed.is_empty() => {
                fixed.sort_by_key(|p| p.0);
                if fixed.iter().enumerate().any(|(i, p)| p.0 != i + 2) {
                    return Err(Error::Parse("alpha.<level> keys must cover levels 2, 3, ... without gaps".into()));
                }
                spec.alphas = AlphaPolicy::Fixed(fixed.iter().map(|p| p.1).collect());
            }
            Some("fixed") => return Err(Error::Parse("`tuner = fixed` needs alpha.<level> keys".into())),
            None => {}
            Some(other) => return Err(Error::Parse(format!("unknown tuner mode `{other}`"))),
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.shift0_ratio.is_finite() && self.shift0_ratio >= 0.0) {
            return Err(Error::InvalidParameter("shift0 must be nonnegative".into()));
        }
        if let SizeSpec::Fixed(0) = self.size {
            return Err(Error::InvalidParameter("N must be positive".into()));
        }
        self.fgmres.validate()?;
        self.tuner.validate()?;
        self.wave_adr.adr.validate()?;
        if self.method == Method::WaveRay && self.rays == 0 {
            return Err(Error::InvalidParameter("ray.count must be >= 1".into()));
        }
        Ok(())
    }

    /// Configuration text that parses back to an equivalent spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "omega = {}", self.omega);
        let _ = match &self.slowness {
            SlownessSource::Constant(c) => writeln!(s, "slowness = constant:{c}"),
            SlownessSource::Image(p) => writeln!(s, "slowness = image:{}", p.display()),
            SlownessSource::Raw(p) => writeln!(s, "slowness = raw:{}", p.display()),
        };
        let _ = match self.size {
            SizeSpec::Auto => writeln!(s, "n = auto"),
            SizeSpec::Fixed(n) => writeln!(s, "n = {n}"),
        };
        let _ = match self.source {
            SourceSpec::Center => writeln!(s, "source = center"),
            SourceSpec::Node(i, j) => writeln!(s, "source = {i},{j}"),
        };
        let _ = writeln!(s, "shift0 = {}", self.shift0_ratio);
        let _ = writeln!(s, "method = {}", self.method.name());
        let _ = writeln!(s, "fgmres.restart = {}", self.fgmres.restart);
        let _ = writeln!(s, "fgmres.tol = {:e}", self.fgmres.tol);
        let _ = writeln!(s, "fgmres.max_iter = {}", self.fgmres.max_iter);
        let w = &self.wave_adr;
        let _ = match w.adr_level {
            AdrLevel::Auto => writeln!(s, "adr.level = auto"),
            AdrLevel::Fixed(l) => writeln!(s, "adr.level = {l}"),
        };
        let _ = writeln!(s, "adr.steps = {}", w.correction_steps);
        let scheme = match w.scheme {
            AdvectionScheme::Upwind => "upwind",
            AdvectionScheme::Central => "central",
        };
        let _ = writeln!(s, "adr.scheme = {scheme}");
        let _ = writeln!(s, "adr.direct = {}", w.adr.direct);
        let _ = writeln!(s, "adr.clamp_focusing = {}", w.clamp_focusing);
        let _ = writeln!(s, "adr.smoother_steps = {}", w.adr.smoother_steps);
        let _ = writeln!(s, "adr.coarse_steps = {}", w.adr.coarse_steps);
        let _ = writeln!(s, "adr.cycles = {}", w.adr.cycles);
        let _ = writeln!(s, "level3_post_smoothing = {}", w.level3_post_smoothing);
        let _ = writeln!(s, "ray.count = {}", self.rays);
        let form = match self.ray_form {
            RayEquation::Consistent => "consistent",
            RayEquation::AsPrinted => "as_printed",
        };
        let _ = writeln!(s, "ray.form = {form}");
        if let Some(b) = self.csl.beta {
            let _ = writeln!(s, "csl.beta = {b}");
        }
        let _ = writeln!(s, "tuner.k = {}", self.tuner.k);
        let cands: Vec<String> = self.tuner.candidates.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "tuner.candidates = {}", cands.join(","));
        let _ = writeln!(s, "tuner.golden_passes = {}", self.tuner.golden_passes);
        let _ = writeln!(s, "tuner.sweeps = {}", self.tuner.sweeps);
        match &self.alphas {
            AlphaPolicy::Tune => {
                let _ = writeln!(s, "tuner = tune");
            }
            AlphaPolicy::Uniform(a) => {
                let _ = writeln!(s, "tuner = defaults");
                let _ = writeln!(s, "alpha = {a}");
            }
            AlphaPolicy::Fixed(v) => {
                let _ = writeln!(s, "tuner = fixed");
                for (l, a) in v.iter().enumerate() {
                    let _ = writeln!(s, "alpha.{} = {a}", l + 2);
                }
            }
        }
        if let Some(sig) = self.sigma {
            let _ = writeln!(s, "ingest.sigma = {sig}");
        }
        if let Some(p) = &self.tau_output {
            let _ = writeln!(s, "tau.output = {}", p.display());
        }
        s
    }
}

/// Reals, optionally written as a multiple of π (`20pi`, `20*pi`, `pi`).
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim().to_ascii_lowercase();
    let v = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let c = if head.is_empty() { 1.0 } else { head.parse::<f64>().ok()? };
        c * std::f64::consts::PI
    } else {
        t.parse::<f64>().ok()?
    };
    v.is_finite().then_some(v)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// Interior size for frequency `omega` with `ωh ∈ [0.4, 0.6]`, `h = 1/(N+1)`,
/// preferring the largest power of two in `N + 1`, then `ωh` closest to 0.5.
pub fn auto_size(omega: f64) -> Result<usize> {
    let lo = (omega / 0.6).ceil().max(4.0) as usize;
    let hi = (omega / 0.4).floor() as usize;
    (lo..=hi)
        .filter(|m| m % 2 == 0)
        .max_by(|&a, &b| {
            let ta = a.trailing_zeros();
            let tb = b.trailing_zeros();
            ta.cmp(&tb).then_with(|| {
                let da = (omega / a as f64 - 0.5).abs();
                let db = (omega / b as f64 - 0.5).abs();
                db.total_cmp(&da)
            })
        })
        .map(|m| m - 1)
        .ok_or_else(|| Error::InvalidParameter(format!("no grid size gives omega*h in [0.4, 0.6] for omega = {omega}")))
}

/// Whether `n` coarsens all the way to a grid of 3 or 5 interior points.
pub fn is_valid_size(n: usize) -> bool {
    let mut m = n + 1;
    if m < 4 {
        return false;
    }
    while m % 2 == 0 && m > 6 {
        m /= 2;
    }
    m == 4 || m == 6
}

/// Nearest valid size, ties resolved upwards.
pub fn nearest_valid_size(n: usize) -> usize {
    let mut d = 0;
    loop {
        if is_valid_size(n + d) {
            return n + d;
        }
        if d <= n && n - d >= 3 && is_valid_size(n - d) {
            return n - d;
        }
        d += 1;
    }
}

/// Outcome of [`run_solve`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub spec: ProblemSpec,
    pub method: Method,
    /// Interior size actually used, and the requested one if it was adjusted.
    pub n: usize,
    pub requested_n: Option<usize>,
    pub omega_h: f64,
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(String, f64)>,
    pub alphas: Option<Vec<f64>>,
    pub tuned_loss: Option<f64>,
    pub adr_level: Option<usize>,
}

impl SolveReport {
    pub fn setup_seconds(&self) -> f64 {
        self.timings.iter().filter(|t| t.0 != "solve").map(|t| t.1).sum()
    }

    pub fn solve_seconds(&self) -> f64 {
        self.timings.iter().filter(|t| t.0 == "solve").map(|t| t.1).sum()
    }
}

/// Report together with the computed wavefield.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub solution: ComplexField,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: name,
            message: other.to_string(),
        },
    })
}

/// Resolve the grid size of a spec: `(used, requested if adjusted)`.
pub fn resolve_size(spec: &ProblemSpec) -> Result<(usize, Option<usize>)> {
    match spec.size {
        SizeSpec::Auto => Ok((auto_size(spec.omega)?, None)),
        SizeSpec::Fixed(n) => {
            let used = nearest_valid_size(n);
            Ok((used, (used != n).then_some(n)))
        }
    }
}

/// Ingest, set up, optionally tune, and solve with FGMRES.
pub fn run_solve(spec: &ProblemSpec) -> Result<SolveOutcome> {
    spec.validate()?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let (n, requested_n) = stage("ingest", resolve_size(spec))?;
    let s = stage("ingest", ingest_slowness(&spec.slowness, n, spec.sigma))?;
    let grid = *s.grid();
    let src = match spec.source {
        SourceSpec::Center => grid.center(),
        SourceSpec::Node(i, j) => {
            if i >= grid.nx() || j >= grid.ny() {
                return Err(Error::Stage {
                    stage: "ingest",
                    message: Error::SourceOutsideGrid { i, j, nx: grid.nx(), ny: grid.ny() }.to_string(),
                });
            }
            (i, j)
        }
    };
    let g = point_source(&grid, src)?;
    lap("ingest", &mut timings);

    let hierarchy = stage(
        "hierarchy",
        Hierarchy::build_shifted(&s, spec.omega, spec.shift0_ratio, DepthPolicy::default()),
    )?;
    let op = HelmholtzOp::for_hierarchy(&hierarchy).swap_remove(0);
    stage("hierarchy", op.check_diagonal())?;
    lap("hierarchy", &mut timings);

    let mut alphas = None;
    let mut tuned_loss = None;
    let mut adr_level = None;
    let outcome = match spec.method {
        Method::WaveAdr | Method::WaveRay => {
            let mut solver = if spec.method == Method::WaveAdr {
                let phase = stage("eikonal", eikonal_phase(&s, src, spec))?;
                lap("eikonal", &mut timings);
                stage("preconditioner", WaveAdrSolver::new(hierarchy, &phase, spec.wave_adr))?
            } else {
                let cfg = WaveRayConfig {
                    rays: spec.rays,
                    form: spec.ray_form,
                    cycle: spec.wave_adr,
                };
                stage("preconditioner", wave_ray_preconditioner(hierarchy, cfg))?
            };
            lap("preconditioner", &mut timings);
            stage("tuning", choose_alphas(&mut solver, spec, &mut tuned_loss))?;
            lap("tuning", &mut timings);
            alphas = Some(solver.alphas().to_vec());
            adr_level = Some(solver.adr_level());
            let out = stage("solve", fgmres(&op, &solver, &g, &spec.fgmres))?;
            lap("solve", &mut timings);
            out
        }
        Method::Csl => {
            let csl = stage("preconditioner", csl_preconditioner(&hierarchy, spec.csl))?;
            lap("preconditioner", &mut timings);
            let out = stage("solve", fgmres(&op, &csl, &g, &spec.fgmres))?;
            lap("solve", &mut timings);
            out
        }
        Method::Unpreconditioned => {
            let id = Identity(grid);
            let out = stage("solve", fgmres(&op, &id as &dyn LinearOperator, &g, &spec.fgmres))?;
            lap("solve", &mut timings);
            out
        }
    };
    let report = SolveReport {
        spec: spec.clone(),
        method: spec.method,
        n,
        requested_n,
        omega_h: spec.omega * grid.h(),
        history: outcome.history,
        iterations: outcome.iterations,
        converged: outcome.converged,
        final_residual: outcome.final_residual,
        timings,
        alphas,
        tuned_loss,
        adr_level,
    };
    Ok(SolveOutcome {
        report,
        solution: outcome.solution,
    })
}

fn eikonal_phase(s: &SlownessModel, src: (usize, usize), spec: &ProblemSpec) -> Result<PhaseField> {
    let phase = solve_factored_eikonal(s, src)?;
    if let Some(p) = &spec.tau_output {
        phase.export_tau(p)?;
    }
    Ok(phase)
}

fn choose_alphas(solver: &mut WaveAdrSolver, spec: &ProblemSpec, tuned_loss: &mut Option<f64>) -> Result<()> {
    let depth = solver.hierarchy().depth();
    let mut v = vec![f64::NAN; depth];
    match &spec.alphas {
        AlphaPolicy::Uniform(a) => v[1..].iter_mut().for_each(|x| *x = *a),
        AlphaPolicy::Fixed(list) => {
            if list.len() != depth - 1 {
                return Err(Error::InvalidParameter(format!(
                    "{} fixed alpha values given for {} Chebyshev levels",
                    list.len(),
                    depth - 1
                )));
            }
            v[1..].copy_from_slice(list);
        }
        AlphaPolicy::Tune => {
            let t = tune_alphas(solver, &spec.tuner)?;
            *tuned_loss = Some(t.loss);
            v = t.alphas;
        }
    }
    solver.set_alphas(&v)
}

/// Set up the cycle preconditioner of a `wave_adr` or `wave_ray` spec and
/// tune its α without solving.
pub fn tune_spec(spec: &ProblemSpec) -> Result<TunedAlphas> {
    spec.validate()?;
    let (n, _) = stage("ingest", resolve_size(spec))?;
    let s = stage("ingest", ingest_slowness(&spec.slowness, n, spec.sigma))?;
    let grid = *s.grid();
    let src = match spec.source {
        SourceSpec::Center => grid.center(),
        SourceSpec::Node(i, j) => (i, j),
    };
    let hierarchy = stage(
        "hierarchy",
        Hierarchy::build_shifted(&s, spec.omega, spec.shift0_ratio, DepthPolicy::default()),
    )?;
    let solver = match spec.method {
        Method::WaveAdr => {
            let phase = stage("eikonal", solve_factored_eikonal(&s, src))?;
            stage("preconditioner", WaveAdrSolver::new(hierarchy, &phase, spec.wave_adr))?
        }
        Method::WaveRay => {
            let cfg = WaveRayConfig {
                rays: spec.rays,
                form: spec.ray_form,
                cycle: spec.wave_adr,
            };
            stage("preconditioner", wave_ray_preconditioner(hierarchy, cfg))?
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "method {} has no Chebyshev parameters to tune",
                other.name()
            )))
        }
    };
    stage("tuning", tune_alphas(&solver, &spec.tuner))
}

/// Grid of the resolved size, for callers that need it before solving.
pub fn problem_grid(spec: &ProblemSpec) -> Result<Grid2D> {
    Grid2D::square(resolve_size(spec)?.0)
}
