//! Sweeps, single-point reports and the δ table behind the `coordbound` binary.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use coordbound::bounds::{achievability_bound_from, gaussian_approx_rate_from, PiTable};
use coordbound::info::InfoProfile;
use coordbound::simulate::{mc_expected_error, ErrorEstimate};
use coordbound::{BoundReport, Error as CoreError, JointDistribution, LambdaCache, OptimalRate, TypicalitySpec};
use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

/// Header of the sweep CSV.
pub const CSV_HEADER: &str = "n,Rapprox,R,I,d";

/// Largest codebook for which the Monte Carlo cross-check is attempted.
pub const MC_MAX_CODEBOOK: u64 = 1 << 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config invalid: {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config { field, reason: reason.into() }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn load_distribution(path: &Path) -> Result<JointDistribution> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| invalid("dist", e.to_string()))?;
    Ok(JointDistribution::from_json(&text)?)
}

/// Loads a persisted Λ cache, or starts an empty one if the file is absent.
pub fn load_cache(path: Option<&Path>) -> Result<LambdaCache> {
    match path {
        Some(p) if p.exists() => Ok(LambdaCache::from_bytes(&read_file(p)?)?),
        _ => Ok(LambdaCache::new()),
    }
}

/// `δₙ` under `spec`.
pub fn delta_sequence(spec: &TypicalitySpec, n: u64) -> Result<f64> {
    Ok(spec.delta(n)?)
}

/// Rounds to two significant figures, the precision of the published δ table.
pub fn round_two_significant(x: f64) -> f64 {
    format!("{x:.1e}").parse().expect("formatted float parses")
}

/// `n,d,d_rounded` rows for the δ table.
pub fn table_delta(c: f64, ns: &[u64]) -> Result<String> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    let spec = TypicalitySpec::Convention { c };
    let mut out = String::from("n,d,d_rounded\n");
    for &n in ns {
        let d = delta_sequence(&spec, n)?;
        writeln!(out, "{n},{d},{}", round_two_significant(d)).unwrap();
    }
    Ok(out)
}

/// Everything a sweep or point evaluation needs besides the distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub dist_path: PathBuf,
    pub eps: f64,
    pub typicality: TypicalitySpec,
    pub n_start: u64,
    pub n_end: u64,
    pub n_step: u64,
    pub out: Option<PathBuf>,
    /// Compute R♯ (the expensive column).
    pub exact_rate: bool,
    pub exact_bound: bool,
    pub mc_check: bool,
    pub trials: u64,
    pub seed: u64,
    pub cache: Option<PathBuf>,
}

impl SweepConfig {
    /// A config with the given distribution, ε and threshold rule, a single
    /// blocklength `n`, R♯ enabled and every optional check off.
    pub fn new(dist_path: impl Into<PathBuf>, eps: f64, typicality: TypicalitySpec, n: u64) -> Self {
        SweepConfig {
            dist_path: dist_path.into(),
            eps,
            typicality,
            n_start: n,
            n_end: n,
            n_step: 1,
            out: None,
            exact_rate: true,
            exact_bound: false,
            mc_check: false,
            trials: 10_000,
            seed: 0,
            cache: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid("eps", format!("must lie in (0,1), got {}", self.eps)));
        }
        match &self.typicality {
            TypicalitySpec::Convention { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(invalid("c", format!("must be positive, got {c}")));
                }
                if self.n_start < 2 {
                    return Err(invalid("n_start", "the δ-convention needs n >= 2"));
                }
            }
            TypicalitySpec::Fixed(t) => {
                if t.value() <= 0.0 {
                    return Err(invalid("delta", "must be positive"));
                }
            }
        }
        if self.n_start == 0 {
            return Err(invalid("n_start", "must be at least 1"));
        }
        if self.n_step == 0 {
            return Err(invalid("n_step", "must be at least 1"));
        }
        if self.n_end < self.n_start {
            return Err(invalid("n_end", format!("{} is below n_start {}", self.n_end, self.n_start)));
        }
        if self.mc_check && self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        Ok(())
    }

    pub fn n_grid(&self) -> Vec<u64> {
        (self.n_start..=self.n_end).step_by(self.n_step as usize).collect()
    }
}

/// Monte Carlo cross-check of the exact error at `m*`.
#[derive(Clone, Debug, PartialEq)]
pub struct McCheck {
    pub m: u64,
    pub exact: f64,
    pub estimate: ErrorEstimate,
    pub z_score: f64,
}

/// All quantities computed at one blocklength.
#[derive(Debug)]
pub struct PointReport {
    pub n: u64,
    pub eps: f64,
    pub delta: f64,
    pub mutual_information: f64,
    pub rate_approx: f64,
    /// `None` when not requested.
    pub floor: Option<f64>,
    /// `Some(Err)` when R♯ is infeasible or the search gave up.
    pub optimal: Option<std::result::Result<OptimalRate, CoreError>>,
    pub exact_bound: Option<BoundReport>,
    pub mc: Option<McCheck>,
}

impl PointReport {
    pub fn rate(&self) -> Option<f64> {
        match &self.optimal {
            Some(Ok(r)) => Some(r.rate),
            _ => None,
        }
    }

    fn csv_row(&self) -> String {
        let r = self.rate().map(|r| r.to_string()).unwrap_or_default();
        format!("{},{},{},{},{}\n", self.n, self.rate_approx, r, self.mutual_information, self.delta)
    }

    fn diagnostics_row(&self) -> String {
        let opt = |x: Option<String>| x.unwrap_or_default();
        let (m_log2, err) = match &self.optimal {
            Some(Ok(r)) => (Some(r.m_star.bits().saturating_sub(1).to_string()), Some(r.error.to_string())),
            _ => (None, None),
        };
        let (valid, bound, failed) = match &self.exact_bound {
            Some(b) => (
                Some(b.valid.to_string()),
                b.rate.map(|r| r.to_string()),
                Some(b.failed_conditions().map(|c| c.name).collect::<Vec<_>>().join("; ")),
            ),
            None => (None, None, None),
        };
        let (mc_mean, mc_se, mc_z) = match &self.mc {
            Some(mc) => (
                Some(mc.estimate.mean.to_string()),
                Some(mc.estimate.std_error.to_string()),
                Some(mc.z_score.to_string()),
            ),
            None => (None, None, None),
        };
        let cells = [
            Some(self.n.to_string()),
            self.floor.map(|f| f.to_string()),
            m_log2,
            err,
            valid,
            bound,
            failed.map(|f| format!("\"{f}\"")),
            mc_mean,
            mc_se,
            mc_z,
        ];
        let mut row = cells.into_iter().map(opt).collect::<Vec<_>>().join(",");
        row.push('\n');
        row
    }
}

/// Header of the optional diagnostics sidecar written next to the CSV.
pub const DIAGNOSTICS_HEADER: &str =
    "n,floor,floor_log2_m_star,error_at_m_star,bound_valid,bound_rate,failed_conditions,mc_mean,mc_std_error,mc_z";

impl fmt::Display for PointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}, eps = {}, delta = {}", self.n, self.eps, self.delta)?;
        writeln!(f, "I(U;V)             {}", self.mutual_information)?;
        writeln!(f, "Gaussian rate      {}", self.rate_approx)?;
        if let Some(floor) = self.floor {
            writeln!(f, "error floor        {floor}")?;
        }
        match &self.optimal {
            Some(Ok(r)) => {
                writeln!(f, "optimal rate       {} (m* has {} bits)", r.rate, r.m_star.bits())?;
                writeln!(f, "  error(m*)        {}", r.error)?;
                match r.error_below {
                    Some(e) => writeln!(f, "  error(m* - 1)    {e}")?,
                    None => writeln!(f, "  m* = 1")?,
                }
                if r.m_star.bits() <= 64 {
                    writeln!(f, "  m*               {}", r.m_star)?;
                }
            }
            Some(Err(e)) => writeln!(f, "optimal rate       unavailable: {e}")?,
            None => {}
        }
        if let Some(b) = &self.exact_bound {
            write!(f, "{b}")?;
        }
        if let Some(mc) = &self.mc {
            writeln!(
                f,
                "Monte Carlo at m = {}: {} ± {} vs exact {} (z = {})",
                mc.m, mc.estimate.mean, mc.estimate.std_error, mc.exact, mc.z_score
            )?;
        }
        Ok(())
    }
}

/// Evaluates one blocklength.
pub fn evaluate_point(
    n: u64,
    config: &SweepConfig,
    dist: &JointDistribution,
    profile: &InfoProfile,
    cache: &LambdaCache,
) -> Result<PointReport> {
    let threshold = config.typicality.threshold(n)?;
    let delta = config.typicality.delta(n)?;
    let rate_approx = gaussian_approx_rate_from(profile, n, config.eps)?;
    let exact_bound = config
        .exact_bound
        .then(|| achievability_bound_from(profile, dist.size_u(), dist.size_v(), n, delta, config.eps));
    let mut report = PointReport {
        n,
        eps: config.eps,
        delta,
        mutual_information: profile.mutual_information,
        rate_approx,
        floor: None,
        optimal: None,
        exact_bound,
        mc: None,
    };
    if config.exact_rate || config.mc_check {
        let table = PiTable::build_with_cache(dist, n, &threshold, Some(cache));
        report.floor = Some(table.floor());
        let optimal = table.optimal_codebook_size(config.eps);
        match optimal {
            Ok(_) | Err(CoreError::Infeasible { .. }) | Err(CoreError::SearchCapExceeded { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        if config.mc_check {
            if let Ok(r) = &optimal {
                if r.m_star <= BigUint::from(MC_MAX_CODEBOOK) {
                    let m = u64::try_from(&r.m_star).expect("bounded above");
                    let estimate = mc_expected_error(n as usize, m, dist, &threshold, config.trials, config.seed ^ n)?;
                    let z_score = estimate.z_score(r.error);
                    report.mc = Some(McCheck { m, exact: r.error, estimate, z_score });
                }
            }
        }
        if config.exact_rate {
            report.optimal = Some(optimal);
        }
    }
    Ok(report)
}

/// Output of a sweep.
#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<PointReport>,
    pub csv: String,
    /// Present when the exact bound or Monte Carlo checks were requested.
    pub diagnostics: Option<String>,
}

/// Runs a sweep over `config.n_grid()` with a shared Λ cache.
pub fn run_sweep_with(config: &SweepConfig, dist: &JointDistribution, cache: &LambdaCache) -> Result<SweepOutput> {
    config.validate()?;
    let profile = InfoProfile::compute(dist);
    let rows = config
        .n_grid()
        .into_par_iter()
        .map(|n| evaluate_point(n, config, dist, &profile, cache))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("{CSV_HEADER}\n");
    rows.iter().for_each(|r| csv.push_str(&r.csv_row()));
    let diagnostics = (config.exact_bound || config.mc_check).then(|| {
        let mut d = format!("{DIAGNOSTICS_HEADER}\n");
        rows.iter().for_each(|r| d.push_str(&r.diagnostics_row()));
        d
    });
    Ok(SweepOutput { rows, csv, diagnostics })
}

/// Loads the distribution and cache named in `config`, runs the sweep,
/// writes the CSV (and diagnostics sidecar) if an output path is set, and
/// persists the cache if a cache path is set.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let dist = load_distribution(&config.dist_path)?;
    let cache = load_cache(config.cache.as_deref())?;
    let output = run_sweep_with(config, &dist, &cache)?;
    if let Some(out) = &config.out {
        write_file(out, output.csv.as_bytes())?;
        if let Some(diag) = &output.diagnostics {
            write_file(&diagnostics_path(out), diag.as_bytes())?;
        }
    }
    if let Some(path) = &config.cache {
        write_file(path, &cache.to_bytes())?;
    }
    Ok(output)
}

/// `<out>.diagnostics.csv`.
pub fn diagnostics_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".diagnostics.csv");
    out.with_file_name(name)
}

/// Full report at `n`, including the exact bound.
pub fn run_point(n: u64, config: &SweepConfig) -> Result<PointReport> {
    let config = SweepConfig { n_start: n, n_end: n, n_step: 1, exact_bound: true, ..config.clone() };
    config.validate()?;
    let dist = load_distribution(&config.dist_path)?;
    let cache = load_cache(config.cache.as_deref())?;
    let report = evaluate_point(n, &config, &dist, &InfoProfile::compute(&dist), &cache)?;
    if let Some(path) = &config.cache {
        write_file(path, &cache.to_bytes())?;
    }
    Ok(report)
}
