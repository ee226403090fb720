//! Interaction potentials `f: [-1, 1] -> R` acting on inner products.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A potential evaluated on the inner product `t = <x, y>` of two unit vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// `|t|^p`, the p-frame potential.
    PFrame { p: f64 },
    /// Polynomial in `t`, coefficients from low to high degree.
    Polynomial { coeffs: Vec<f64> },
    /// `max(0, 2 tau^2 (1 + t)(2 - tau^2 (1 - t)))`.
    Causal { tau: f64 },
    /// `arccos |t|`, the acute angle between the lines through x and y.
    AcuteAngle,
    Tabulated(TabulatedKernel),
}

impl Kernel {
    pub fn pframe(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("p-frame exponent must be positive, got {p}")));
        }
        Ok(Kernel::PFrame { p })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("polynomial kernel needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("polynomial coefficients must be finite"));
        }
        Ok(Kernel::Polynomial { coeffs })
    }

    pub fn causal(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain(format!("causal parameter tau must be positive, got {tau}")));
        }
        Ok(Kernel::Causal { tau })
    }

    /// The constant kernel `f = c`.
    pub fn constant(c: f64) -> Self {
        Kernel::Polynomial { coeffs: vec![c] }
    }

    /// `f(t) = t^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        Kernel::Polynomial { coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        match self {
            Kernel::PFrame { p } => t.abs().powf(*p),
            Kernel::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Kernel::Causal { tau } => {
                let tau2 = tau * tau;
                (2.0 * tau2 * (1.0 + t) * (2.0 - tau2 * (1.0 - t))).max(0.0)
            }
            Kernel::AcuteAngle => t.abs().acos(),
            Kernel::Tabulated(table) => table.eval(t),
        }
    }

    /// Derivative `f'(t)`. At non-smooth points the value 0 is used for the
    /// symmetric kinks of `|t|^p` and `arccos|t|` at `t = 0`, and the
    /// one-sided value elsewhere.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        match self {
            Kernel::PFrame { p } => {
                if t == 0.0 {
                    0.0
                } else {
                    p * t.signum() * t.abs().powf(p - 1.0)
                }
            }
            Kernel::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            Kernel::Causal { tau } => {
                let tau2 = tau * tau;
                let inner = 2.0 - tau2 * (1.0 - t);
                if (1.0 + t) * inner <= 0.0 {
                    0.0
                } else {
                    2.0 * tau2 * (inner + (1.0 + t) * tau2)
                }
            }
            Kernel::AcuteAngle => {
                if t == 0.0 {
                    0.0
                } else {
                    -t.signum() / (1.0 - t * t).sqrt()
                }
            }
            Kernel::Tabulated(table) => table.derivative(t),
        }
    }

    /// Interior points of (-1, 1) where the kernel is not smooth.
    /// Quadrature splits the interval there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Kernel::PFrame { p } => {
                if is_even_integer(*p) {
                    vec![]
                } else {
                    vec![0.0]
                }
            }
            Kernel::Polynomial { .. } => vec![],
            Kernel::Causal { tau } => {
                let t0 = 1.0 - 2.0 / (tau * tau);
                if t0 > -1.0 && t0 < 1.0 {
                    vec![t0]
                } else {
                    vec![]
                }
            }
            Kernel::AcuteAngle => vec![0.0],
            Kernel::Tabulated(table) => {
                table.xs.iter().copied().filter(|&x| x > -1.0 && x < 1.0).collect()
            }
        }
    }

    /// Degree when the kernel is exactly a polynomial in `t`.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match self {
            Kernel::Polynomial { coeffs } => {
                Some(coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            }
            Kernel::PFrame { p } if is_even_integer(*p) => Some(p.round() as usize),
            _ => None,
        }
    }

    /// True when `f(t) = f(-t)` holds identically.
    pub fn is_even(&self) -> bool {
        match self {
            Kernel::PFrame { .. } | Kernel::AcuteAngle => true,
            Kernel::Polynomial { coeffs } => {
                coeffs.iter().enumerate().all(|(k, &c)| k % 2 == 0 || c == 0.0)
            }
            Kernel::Causal { .. } => false,
            Kernel::Tabulated(table) => table.is_even(),
        }
    }

    /// Interpolation error estimate for tabulated kernels, zero otherwise.
    pub fn representation_error(&self) -> f64 {
        match self {
            Kernel::Tabulated(table) => table.error_estimate(),
            _ => 0.0,
        }
    }
}

pub(crate) fn is_even_integer(p: f64) -> bool {
    let r = p.round();
    (p - r).abs() < 1e-12 && (r as i64) % 2 == 0
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::PFrame { p } => write!(f, "pframe:{p}"),
            Kernel::Polynomial { coeffs } => {
                let parts: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Kernel::Causal { tau } => write!(f, "causal:{tau}"),
            Kernel::AcuteAngle => write!(f, "acute"),
            Kernel::Tabulated(table) => match &table.source {
                Some(path) => write!(f, "table:{path}"),
                None => write!(f, "table:<inline>"),
            },
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// Parses kernel literals: `pframe:3.0`, `poly:1,0,-2`, `causal:1.5`,
    /// `acute`, `table:path.csv`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (tag, arg) = match s.split_once(':') {
            Some((tag, arg)) => (tag.trim(), Some(arg.trim())),
            None => (s, None),
        };
        let number = |arg: Option<&str>| -> Result<f64> {
            let arg = arg.ok_or_else(|| Error::Parse(format!("kernel `{s}` needs a parameter")))?;
            arg.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{arg}` in kernel `{s}`: {e}")))
        };
        match tag {
            "pframe" => Kernel::pframe(number(arg)?),
            "causal" => Kernel::causal(number(arg)?),
            "acute" if arg.is_none() => Ok(Kernel::AcuteAngle),
            "poly" => {
                let arg = arg.ok_or_else(|| Error::Parse("poly kernel needs coefficients".into()))?;
                let coeffs = arg
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad coefficient `{c}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Kernel::polynomial(coeffs)
            }
            "table" => {
                let path = arg.ok_or_else(|| Error::Parse("table kernel needs a path".into()))?;
                Ok(Kernel::Tabulated(TabulatedKernel::from_csv(path)?))
            }
            _ => Err(Error::Parse(format!("unknown kernel literal `{s}`"))),
        }
    }
}

/// Kernel given by samples on [-1, 1], interpolated piecewise.
///
/// Order 1 is linear interpolation; order 3 is monotone cubic Hermite
/// (Fritsch-Carlson slopes), which never overshoots the data.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedKernel {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    order: usize,
    source: Option<String>,
}

impl TabulatedKernel {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, order: usize) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::domain("tabulated kernel needs at least two (t, f) samples"));
        }
        if !(order == 1 || order == 3) {
            return Err(Error::domain(format!(
                "interpolation order must be 1 or 3, got {order}"
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tabulated abscissae must be strictly increasing"));
        }
        if xs[0] < -1.0 || *xs.last().unwrap() > 1.0 {
            return Err(Error::domain("tabulated abscissae must lie in [-1, 1]"));
        }
        if xs[0] > -1.0 + 1e-12 || *xs.last().unwrap() < 1.0 - 1e-12 {
            return Err(Error::domain("tabulated kernel must cover the whole interval [-1, 1]"));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::domain("tabulated values must be finite"));
        }
        let slopes = if order == 3 { monotone_slopes(&xs, &ys) } else { vec![] };
        Ok(Self { xs, ys, slopes, order, source: None })
    }

    /// Reads `t,f` rows (an optional header line is skipped). Uses cubic
    /// interpolation.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path_ref = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path_ref)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Parse(format!("table row {} has fewer than 2 columns", line + 1)));
            }
            let (a, b) = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match (a, b) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::Parse(format!("table row {} is not numeric", line + 1))),
            }
        }
        let mut table = Self::new(xs, ys, 3)?;
        table.source = Some(path_ref.display().to_string());
        Ok(table)
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn interval(&self, t: f64) -> usize {
        match self.xs.partition_point(|&x| x <= t) {
            0 => 0,
            i if i >= self.xs.len() => self.xs.len() - 2,
            i => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        if self.order == 1 {
            return y0 + s * (y1 - y0);
        }
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = x1 - x0;
        if self.order == 1 {
            return (y1 - y0) / h;
        }
        let s = (t - x0) / h;
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * y0 + (-6.0 * s2 + 6.0 * s) * y1) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (3.0 * s2 - 2.0 * s) * m1
    }

    fn is_even(&self) -> bool {
        let n = self.xs.len();
        (0..n).all(|i| {
            let j = n - 1 - i;
            (self.xs[i] + self.xs[j]).abs() < 1e-12 && (self.ys[i] - self.ys[j]).abs() < 1e-12
        })
    }

    /// Heuristic interpolation error: for linear tables, the second
    /// difference bound `h^2 |f''| / 8`; for cubic tables, the largest
    /// midpoint gap between the cubic and linear interpolants.
    pub fn error_estimate(&self) -> f64 {
        let n = self.xs.len();
        if self.order == 1 {
            if n < 3 {
                return 0.0;
            }
            (1..n - 1)
                .map(|i| {
                    let (h0, h1) = (self.xs[i] - self.xs[i - 1], self.xs[i + 1] - self.xs[i]);
                    let d0 = (self.ys[i] - self.ys[i - 1]) / h0;
                    let d1 = (self.ys[i + 1] - self.ys[i]) / h1;
                    let second = 2.0 * (d1 - d0) / (h0 + h1);
                    second.abs() * h0.max(h1).powi(2) / 8.0
                })
                .fold(0.0, f64::max)
        } else {
            (0..n - 1)
                .map(|i| {
                    let mid = 0.5 * (self.xs[i] + self.xs[i + 1]);
                    let linear = 0.5 * (self.ys[i] + self.ys[i + 1]);
                    (self.eval(mid) - linear).abs()
                })
                .fold(0.0, f64::max)
        }
    }
}

/// Fritsch-Carlson monotone slopes.
fn monotone_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * delta[i];
            m[i + 1] = tau * b * delta[i];
        }
    }
    m
}
