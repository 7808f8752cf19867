//! The six benchmark problems on the unit square.
//!
//! | case   | coefficient                                   | source                         |
//! |--------|-----------------------------------------------|--------------------------------|
//! | ex1/s1 | `1 + 1/(6e-5 + (u - 1/2)^2)`                  | manufactured, `u = sin sin`    |
//! | ex1/s2 | same                                          | `1e5 (1/2-|x-1/2|)^2 (1/2-|y-1/2|)` |
//! | ex2/s1 | `2 + pi/2 + sin(u/eps) + atan(u/eps)`         | manufactured, two-layer polynomial |
//! | ex2/s2 | `10 + sin(u/eps) + atan(u/eps)`               | `(1-x)(1-y)(e^{8x^2}-1)(e^{8y^2}-1)` |
//! | ex3/s1 | `pi + atan((|grad u|^2 - pi)/0.02)`           | manufactured, `u = sin sin`    |
//! | ex3/s2 | same                                          | `2e3 (1/2-|x-1/2|)^2 (1/2-|y-1/2|)^2` |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::Error;
use crate::problem::{DiffusionKind, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Ex1,
    Ex2,
    Ex3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    S1,
    S2,
}

/// One of the shipped (coefficient, source) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Case {
    pub example: Example,
    pub source: Source,
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ex1" => Ok(Self::Ex1),
            "ex2" => Ok(Self::Ex2),
            "ex3" => Ok(Self::Ex3),
            _ => Err(Error::Config(format!("unknown example `{s}` (expected ex1, ex2 or ex3)"))),
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            _ => Err(Error::Config(format!("unknown source `{s}` (expected s1 or s2)"))),
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ex1 => "ex1",
            Self::Ex2 => "ex2",
            Self::Ex3 => "ex3",
        })
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.example, self.source)
    }
}

impl Case {
    pub const ALL: [Case; 6] = [
        Case::new(Example::Ex1, Source::S1),
        Case::new(Example::Ex1, Source::S2),
        Case::new(Example::Ex2, Source::S1),
        Case::new(Example::Ex2, Source::S2),
        Case::new(Example::Ex3, Source::S1),
        Case::new(Example::Ex3, Source::S2),
    ];

    pub const fn new(example: Example, source: Source) -> Self {
        Self { example, source }
    }

    /// Rate tolerance used for this case.
    pub fn default_eps_t(self) -> f64 {
        if self == Case::new(Example::Ex2, Source::S2) {
            0.01
        } else {
            0.005
        }
    }

    pub fn has_exact_solution(self) -> bool {
        self.source == Source::S1
    }

    pub fn problem(self) -> ProblemSpec {
        match (self.example, self.source) {
            (Example::Ex1, Source::S1) => ex1_s1(),
            (Example::Ex1, Source::S2) => ex1_s2(),
            (Example::Ex2, Source::S1) => ex2_s1(),
            (Example::Ex2, Source::S2) => ex2_s2(),
            (Example::Ex3, Source::S1) => ex3_s1(),
            (Example::Ex3, Source::S2) => ex3_s2(),
        }
    }
}

const EX1_EPS: f64 = 6e-5;
const EX2_EPS: f64 = 6e-3;
const EX3_EPS: f64 = 2e-2;

fn ex1_kappa(s: f64) -> f64 {
    let d = s - 0.5;
    1.0 + 1.0 / (EX1_EPS + d * d)
}

fn ex1_dkappa(s: f64) -> f64 {
    let d = s - 0.5;
    let q = EX1_EPS + d * d;
    -2.0 * d / (q * q)
}

fn ex2_kappa(k: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |s| k + (s / EX2_EPS).sin() + (s / EX2_EPS).atan()
}

fn ex2_dkappa(s: f64) -> f64 {
    let t = s / EX2_EPS;
    (t.cos() + 1.0 / (1.0 + t * t)) / EX2_EPS
}

fn ex3_kappa(s: f64) -> f64 {
    PI + ((s - PI) / EX3_EPS).atan()
}

fn ex3_dkappa(s: f64) -> f64 {
    let t = (s - PI) / EX3_EPS;
    1.0 / (EX3_EPS * (1.0 + t * t))
}

fn sin_sin(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

fn sin_sin_grad(x: f64, y: f64) -> [f64; 2] {
    [
        PI * (PI * x).cos() * (PI * y).sin(),
        PI * (PI * x).sin() * (PI * y).cos(),
    ]
}

fn tent(t: f64) -> f64 {
    0.5 - (t - 0.5).abs()
}

pub fn ex1_s1() -> ProblemSpec {
    let f = |x: f64, y: f64| {
        let u = sin_sin(x, y);
        let [ux, uy] = sin_sin_grad(x, y);
        2.0 * PI * PI * ex1_kappa(u) * u - ex1_dkappa(u) * (ux * ux + uy * uy)
    };
    ProblemSpec::new(DiffusionKind::SolutionDependent, ex1_kappa, ex1_dkappa, f).with_exact(sin_sin, sin_sin_grad)
}

pub fn ex1_s2() -> ProblemSpec {
    let f = |x: f64, y: f64| 1e5 * tent(x).powi(2) * tent(y);
    ProblemSpec::new(DiffusionKind::SolutionDependent, ex1_kappa, ex1_dkappa, f)
}

const EX2_A: f64 = 1.85 * 1.85 * 1.85 * 1.85;
const EX2_B: f64 = 256.0;

/// `(P, P', P'')` with `P(x) = x^2 - x`.
fn ex2_p(x: f64) -> [f64; 3] {
    [x * x - x, 2.0 * x - 1.0, 2.0]
}

/// `(Q, Q', Q'')` with `Q(x) = x^{9/4} (x - 1)^2`.
fn ex2_q(x: f64) -> [f64; 3] {
    let x = x.max(0.0);
    let a = x - 1.0;
    [
        x.powf(2.25) * a * a,
        2.25 * x.powf(1.25) * a * a + 2.0 * x.powf(2.25) * a,
        45.0 / 16.0 * x.powf(0.25) * a * a + 9.0 * x.powf(1.25) * a + 2.0 * x.powf(2.25),
    ]
}

/// `(S, S', S'')` with `S(y) = y^2 (y - 1)^2`.
fn ex2_s(y: f64) -> [f64; 3] {
    let a = y - 1.0;
    [
        y * y * a * a,
        4.0 * y.powi(3) - 6.0 * y * y + 2.0 * y,
        12.0 * y * y - 12.0 * y + 2.0,
    ]
}

fn ex2_u(x: f64, y: f64) -> f64 {
    EX2_A * ex2_p(x)[0] * ex2_p(y)[0] - EX2_B * ex2_q(x)[0] * ex2_s(y)[0]
}

fn ex2_grad(x: f64, y: f64) -> [f64; 2] {
    let (px, py, qx, sy) = (ex2_p(x), ex2_p(y), ex2_q(x), ex2_s(y));
    [
        EX2_A * px[1] * py[0] - EX2_B * qx[1] * sy[0],
        EX2_A * px[0] * py[1] - EX2_B * qx[0] * sy[1],
    ]
}

pub fn ex2_s1() -> ProblemSpec {
    let k = 2.0 + PI / 2.0;
    let kappa = ex2_kappa(k);
    let f = move |x: f64, y: f64| {
        let (px, py, qx, sy) = (ex2_p(x), ex2_p(y), ex2_q(x), ex2_s(y));
        let u = ex2_u(x, y);
        let [ux, uy] = ex2_grad(x, y);
        let lap = EX2_A * (px[2] * py[0] + px[0] * py[2]) - EX2_B * (qx[2] * sy[0] + qx[0] * sy[2]);
        -ex2_dkappa(u) * (ux * ux + uy * uy) - kappa(u) * lap
    };
    ProblemSpec::new(DiffusionKind::SolutionDependent, kappa, ex2_dkappa, f).with_exact(ex2_u, ex2_grad)
}

pub fn ex2_s2() -> ProblemSpec {
    let f = |x: f64, y: f64| (1.0 - x) * (1.0 - y) * ((8.0 * x * x).exp() - 1.0) * ((8.0 * y * y).exp() - 1.0);
    ProblemSpec::new(DiffusionKind::SolutionDependent, ex2_kappa(10.0), ex2_dkappa, f)
}

pub fn ex3_s1() -> ProblemSpec {
    let f = |x: f64, y: f64| {
        let u = sin_sin(x, y);
        let [ux, uy] = sin_sin_grad(x, y);
        let uxx = -PI * PI * u;
        let uyy = uxx;
        let uxy = PI * PI * (PI * x).cos() * (PI * y).cos();
        let s = ux * ux + uy * uy;
        let sx = 2.0 * (ux * uxx + uy * uxy);
        let sy = 2.0 * (ux * uxy + uy * uyy);
        -ex3_kappa(s) * (uxx + uyy) - ex3_dkappa(s) * (sx * ux + sy * uy)
    };
    ProblemSpec::new(DiffusionKind::GradientDependent, ex3_kappa, ex3_dkappa, f).with_exact(sin_sin, sin_sin_grad)
}

pub fn ex3_s2() -> ProblemSpec {
    let f = |x: f64, y: f64| 2e3 * tent(x).powi(2) * tent(y).powi(2);
    ProblemSpec::new(DiffusionKind::GradientDependent, ex3_kappa, ex3_dkappa, f)
}
