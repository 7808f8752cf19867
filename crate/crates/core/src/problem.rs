use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Which argument the diffusion coefficient depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    /// `-div(kappa(u) grad u) = f`
    SolutionDependent,
    /// `-div(kappa(|grad u|^2) grad u) = f`
    GradientDependent,
}

/// A known solution with its gradient, used for error norms.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: FieldFn,
    pub gradient: GradientFn,
}

/// A quasilinear diffusion problem on a polygon with homogeneous Dirichlet data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub kind: DiffusionKind,
    pub kappa: ScalarFn,
    pub dkappa: ScalarFn,
    pub source: FieldFn,
    pub exact: Option<ExactSolution>,
    /// Lower bound on `kappa` enforced at every evaluation during assembly.
    pub kappa_min: f64,
}

impl ProblemSpec {
    pub fn new(
        kind: DiffusionKind,
        kappa: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dkappa: impl Fn(f64) -> f64 + Send + Sync + 'static,
        source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind,
            kappa: Arc::new(kappa),
            dkappa: Arc::new(dkappa),
            source: Arc::new(source),
            exact: None,
            kappa_min: f64::MIN_POSITIVE,
        }
    }

    /// Linear Poisson problem with constant diffusion `c`.
    pub fn constant(c: f64, source: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(DiffusionKind::SolutionDependent, move |_| c, |_| 0.0, source)
    }

    pub fn with_exact(
        mut self,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        });
        self
    }

    pub fn with_kappa_min(mut self, kappa_min: f64) -> Self {
        self.kappa_min = kappa_min;
        self
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kind", &self.kind)
            .field("has_exact", &self.exact.is_some())
            .field("kappa_min", &self.kappa_min)
            .finish_non_exhaustive()
    }
}
