//! Problem specification: the JSON input format and its validation.

use lemnilab_core::jets::CatalogParams;
use lemnilab_core::{catalog, Analytic, CatalogFunction, Complex64, ComplexPoly, TraceOptions, Tracer, Weight};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const MAX_GRID_COUNT: usize = 100_000;
pub const TOLERANCE_RANGE: (f64, f64) = (1e-14, 1e-2);

/// Raw JSON input. Exactly one of `coeffs`, `roots` or `catalog` must be set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Leading-first `[re, im]` pairs.
    pub coeffs: Option<Vec<[f64; 2]>>,
    pub roots: Option<Vec<[f64; 2]>>,
    pub catalog: Option<String>,
    #[serde(default)]
    pub params: CatalogParamsSpec,
    pub region: Option<Region>,
    pub t: Option<Vec<f64>>,
    pub grid: Option<GridSpec>,
    pub analyses: Option<Analyses>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    pub laurent_n: Option<usize>,
    pub order: Option<usize>,
    pub weight: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParamsSpec {
    pub n: Option<usize>,
    pub window: Option<f64>,
}

/// Which zeros seed the traced region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Every zero in the window.
    All,
    /// Only the zero closest to the origin.
    Principal,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    /// Parses `a:b:n`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::spec(format!("grid `{s}` is not of the form a:b:n")));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| CliError::spec(format!("bad grid bound `{p}`")));
        let count =
            parts[2].trim().parse::<usize>().map_err(|_| CliError::spec(format!("bad grid count `{}`", parts[2])))?;
        Ok(GridSpec { start: num(parts[0])?, stop: num(parts[1])?, count })
    }

    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Analyses {
    Keyword(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rtol: Option<f64>,
    pub level_tol: Option<f64>,
    pub closure_tol: Option<f64>,
    pub critical_band: Option<f64>,
}

/// Selected analyses beyond the per-level length rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Selection {
    pub derivatives: bool,
    pub hankel: bool,
    pub convexity: bool,
    pub kernel: bool,
    pub asymptote: bool,
    pub phi_scan: bool,
    pub k_polynomial: bool,
    pub samples: bool,
}

impl Selection {
    pub const NAMES: [&'static str; 9] =
        ["lengths", "derivatives", "hankel", "convexity", "kernel", "asymptote", "phi_scan", "k_polynomial", "samples"];

    pub fn all() -> Self {
        Selection {
            derivatives: true,
            hankel: true,
            convexity: true,
            kernel: true,
            asymptote: true,
            phi_scan: true,
            k_polynomial: true,
            samples: false,
        }
    }

    fn from_spec(a: &Option<Analyses>) -> CliResult<Self> {
        let names: Vec<String> = match a {
            None => return Ok(Selection::default()),
            Some(Analyses::Keyword(k)) if k == "all" => return Ok(Selection::all()),
            Some(Analyses::Keyword(k)) => vec![k.clone()],
            Some(Analyses::List(v)) => v.clone(),
        };
        let mut s = Selection::default();
        for name in &names {
            match name.as_str() {
                "all" => s = Selection { samples: s.samples, ..Selection::all() },
                "lengths" => {}
                "derivatives" => s.derivatives = true,
                "hankel" => s.hankel = true,
                "convexity" => s.convexity = true,
                "kernel" => s.kernel = true,
                "asymptote" => s.asymptote = true,
                "phi_scan" => s.phi_scan = true,
                "k_polynomial" => s.k_polynomial = true,
                "samples" => s.samples = true,
                other => {
                    return Err(CliError::spec(format!(
                        "unknown analysis `{other}` (expected one of {:?} or \"all\")",
                        Selection::NAMES
                    )))
                }
            }
        }
        Ok(s)
    }
}

/// The function under study.
#[derive(Debug, Clone)]
pub enum Function {
    Polynomial(ComplexPoly),
    Catalog { f: CatalogFunction, region: Region },
}

impl Function {
    pub fn polynomial(&self) -> Option<&ComplexPoly> {
        match self {
            Function::Polynomial(p) => Some(p),
            Function::Catalog { .. } => None,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.polynomial().map(|p| p.degree())
    }

    pub fn analytic(&self) -> &dyn Analytic {
        match self {
            Function::Polynomial(p) => p,
            Function::Catalog { f, .. } => f,
        }
    }

    pub fn tracer(&self, opts: TraceOptions) -> CliResult<Tracer<'_>> {
        match self {
            Function::Polynomial(p) => Ok(Tracer::new(p, opts)?),
            Function::Catalog { f, region: Region::All } => Ok(Tracer::new(f, opts)?),
            Function::Catalog { f, region: Region::Principal } => {
                let zeros = f.zeros()?;
                let first = *zeros.first().ok_or_else(|| CliError::spec("no zeros inside the catalog window"))?;
                Ok(Tracer::with_zeros(f, vec![first], opts)?)
            }
        }
    }
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub function: Function,
    /// Sorted, without duplicates.
    pub levels: Vec<f64>,
    pub selection: Selection,
    pub options: TraceOptions,
    pub laurent_n: usize,
    pub order: usize,
    pub weight: Weight,
    pub warnings: Vec<String>,
}

/// Command-line settings that override the spec file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<GridSpec>,
    pub t: Option<Vec<f64>>,
    pub order: Option<usize>,
    pub laurent_n: Option<usize>,
    pub tol: Option<f64>,
}

fn complex(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn check_tolerance(name: &str, v: f64) -> CliResult<f64> {
    if !(v >= TOLERANCE_RANGE.0 && v <= TOLERANCE_RANGE.1) {
        return Err(CliError::spec(format!(
            "tolerance {name} = {v} outside [{:e}, {:e}]",
            TOLERANCE_RANGE.0, TOLERANCE_RANGE.1
        )));
    }
    Ok(v)
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::spec(format!("invalid problem spec: {e}")))
    }

    pub fn resolve(&self, ov: &Overrides) -> CliResult<Problem> {
        let mut warnings = Vec::new();
        let sources = [self.coeffs.is_some(), self.roots.is_some(), self.catalog.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(CliError::spec("exactly one of `coeffs`, `roots`, `catalog` is required"));
        }
        let function = if let Some(c) = &self.coeffs {
            let (p, normalized) = ComplexPoly::monic(complex(c)).map_err(|e| CliError::spec(e.to_string()))?;
            if normalized {
                warnings.push("leading coefficient divided out; levels refer to the monic polynomial".into());
            }
            Function::Polynomial(p)
        } else if let Some(r) = &self.roots {
            Function::Polynomial(ComplexPoly::from_roots(&complex(r)).map_err(|e| CliError::spec(e.to_string()))?)
        } else {
            let name = self.catalog.as_deref().unwrap_or_default();
            let params = CatalogParams { n: self.params.n, window: self.params.window };
            let f = catalog(name, params).map_err(|e| CliError::spec(e.to_string()))?;
            Function::Catalog { f, region: self.region.unwrap_or(Region::Principal) }
        };
        if self.region.is_some() && matches!(function, Function::Polynomial(_)) && self.region != Some(Region::All) {
            return Err(CliError::spec("polynomials are always traced over all zeros (region \"all\")"));
        }

        let grid = ov.grid.or(self.grid);
        let explicit = ov.t.clone().or_else(|| self.t.clone());
        let mut levels = Vec::new();
        if let Some(g) = grid {
            if g.count > MAX_GRID_COUNT {
                return Err(CliError::spec(format!("grid count {} exceeds {MAX_GRID_COUNT}", g.count)));
            }
            if !(g.start.is_finite() && g.stop.is_finite()) {
                return Err(CliError::spec("grid bounds must be finite"));
            }
            levels.extend(g.points());
        }
        if let Some(ts) = explicit {
            levels.extend(ts);
        }
        if levels.iter().any(|t| !t.is_finite()) {
            return Err(CliError::spec("levels must be finite"));
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();

        let mut options = TraceOptions::default();
        let tol = &self.tolerances;
        if let Some(v) = ov.tol.or(tol.rtol) {
            options.rtol = check_tolerance("rtol", v)?;
        }
        if let Some(v) = tol.level_tol {
            options.level_tol = check_tolerance("level_tol", v)?;
        }
        if let Some(v) = tol.closure_tol {
            options.closure_tol = check_tolerance("closure_tol", v)?;
        }
        if let Some(v) = tol.critical_band {
            options.critical_band = check_tolerance("critical_band", v)?;
        }

        let laurent_n = ov.laurent_n.or(self.laurent_n).unwrap_or(lemnilab_core::laurent::DEFAULT_TRUNCATION);
        if laurent_n == 0 || laurent_n > lemnilab_core::laurent::MAX_TRUNCATION {
            return Err(CliError::spec(format!(
                "laurent_n must lie in 1..={}",
                lemnilab_core::laurent::MAX_TRUNCATION
            )));
        }
        let order = ov.order.or(self.order).unwrap_or(2);
        if order == 0 || 2 * order > lemnilab_core::moments::MAX_DERIVATIVE_ORDER {
            return Err(CliError::spec(format!(
                "Hankel order must lie in 1..={}",
                lemnilab_core::moments::MAX_DERIVATIVE_ORDER / 2
            )));
        }
        let weight = match &self.weight {
            None => Weight::One,
            Some(w) => {
                let p = ComplexPoly::new(complex(w));
                if p.is_zero() {
                    return Err(CliError::spec("weight polynomial is zero"));
                }
                Weight::Poly(p)
            }
        };

        Ok(Problem {
            function,
            levels,
            selection: Selection::from_spec(&self.analyses)?,
            options,
            laurent_n,
            order,
            weight,
            warnings,
        })
    }
}
