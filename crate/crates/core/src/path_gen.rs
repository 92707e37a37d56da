//! Driver processes `Z` on the grid `{j/m : j = 0..m−1}`, heavy-tailed
//! multipliers `R`, and product paths `Y = R·Z`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Execution};
use crate::rng::{tags, RandomStream};
use crate::tail_models::TailModel;

/// Slack subtracted from the Hurst index to get a usable Hölder exponent.
pub const DEFAULT_HOLDER_SLACK: f64 = 0.05;

/// Largest grid the dense Cholesky fBm sampler accepts.
pub const CHOLESKY_MAX_M: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessKind {
    BrownianMotion,
    FractionalBrownianMotion { hurst: f64 },
    DeterministicRamp,
    DeterministicConstant { value: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmMethod {
    #[default]
    CirculantEmbedding,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessSpecRepr", into = "ProcessSpecRepr")]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Usable Hölder exponent η of the paths.
    pub holder_exponent: f64,
    pub fbm_method: FbmMethod,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    BrownianMotion,
    FractionalBrownianMotion,
    DeterministicRamp,
    DeterministicConstant,
}

/// Serialized form: the kind's parameters inline, η optional.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessSpecRepr {
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default)]
    holder_exponent: Option<f64>,
    #[serde(default)]
    fbm_method: FbmMethod,
}

impl TryFrom<ProcessSpecRepr> for ProcessSpec {
    type Error = Error;

    fn try_from(r: ProcessSpecRepr) -> Result<Self> {
        let kind = match (r.kind, r.hurst, r.value) {
            (KindTag::BrownianMotion, None, None) => ProcessKind::BrownianMotion,
            (KindTag::FractionalBrownianMotion, Some(hurst), None) => {
                ProcessKind::FractionalBrownianMotion { hurst }
            }
            (KindTag::DeterministicRamp, None, None) => ProcessKind::DeterministicRamp,
            (KindTag::DeterministicConstant, None, Some(value)) => {
                ProcessKind::DeterministicConstant { value }
            }
            _ => {
                return Err(Error::invalid(
                    "kind",
                    "hurst is required for (and only for) fractional_brownian_motion, \
                     value for deterministic_constant",
                ))
            }
        };
        let mut spec = ProcessSpec::new(kind)?.with_method(r.fbm_method);
        if let Some(eta) = r.holder_exponent {
            spec.holder_exponent = eta;
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ProcessSpec> for ProcessSpecRepr {
    fn from(s: ProcessSpec) -> Self {
        let (kind, hurst, value) = match s.kind {
            ProcessKind::BrownianMotion => (KindTag::BrownianMotion, None, None),
            ProcessKind::FractionalBrownianMotion { hurst } => {
                (KindTag::FractionalBrownianMotion, Some(hurst), None)
            }
            ProcessKind::DeterministicRamp => (KindTag::DeterministicRamp, None, None),
            ProcessKind::DeterministicConstant { value } => {
                (KindTag::DeterministicConstant, None, Some(value))
            }
        };
        Self {
            kind,
            hurst,
            value,
            holder_exponent: Some(s.holder_exponent),
            fbm_method: s.fbm_method,
        }
    }
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Result<Self> {
        let holder_exponent = match kind {
            ProcessKind::BrownianMotion => 0.5 - DEFAULT_HOLDER_SLACK,
            ProcessKind::FractionalBrownianMotion { hurst } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    return Err(Error::invalid(
                        "hurst",
                        format!("must lie in (0, 1), got {hurst}"),
                    ));
                }
                if hurst > 2.0 * DEFAULT_HOLDER_SLACK {
                    hurst - DEFAULT_HOLDER_SLACK
                } else {
                    hurst / 2.0
                }
            }
            ProcessKind::DeterministicRamp | ProcessKind::DeterministicConstant { .. } => 1.0,
        };
        Ok(Self {
            kind,
            holder_exponent,
            fbm_method: FbmMethod::default(),
        })
    }

    pub fn brownian() -> Self {
        Self::new(ProcessKind::BrownianMotion).expect("valid")
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::new(ProcessKind::FractionalBrownianMotion { hurst })
    }

    pub fn ramp() -> Self {
        Self::new(ProcessKind::DeterministicRamp).expect("valid")
    }

    pub fn constant(value: f64) -> Self {
        Self::new(ProcessKind::DeterministicConstant { value }).expect("valid")
    }

    pub fn with_method(mut self, method: FbmMethod) -> Self {
        self.fbm_method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let ProcessKind::FractionalBrownianMotion { hurst } = self.kind {
            if !(hurst > 0.0 && hurst < 1.0) {
                return Err(Error::invalid(
                    "hurst",
                    format!("must lie in (0, 1), got {hurst}"),
                ));
            }
        }
        if !(self.holder_exponent > 0.0 && self.holder_exponent <= 1.0) {
            return Err(Error::invalid(
                "holder_exponent",
                format!("must lie in (0, 1], got {}", self.holder_exponent),
            ));
        }
        Ok(())
    }

    /// Moment orders for which the increment bound
    /// `E|Z(t) − Z(s)|^κ ≤ K|t − s|^(1+β)` holds.
    pub fn moment_order_bound(&self) -> &'static str {
        match self.kind {
            ProcessKind::BrownianMotion | ProcessKind::FractionalBrownianMotion { .. } => {
                "all orders (Gaussian increments)"
            }
            ProcessKind::DeterministicRamp => "all orders (deterministic)",
            ProcessKind::DeterministicConstant { .. } => "not applicable (Z(0) ≠ 0)",
        }
    }

    pub fn starts_at_zero(&self) -> bool {
        !matches!(self.kind, ProcessKind::DeterministicConstant { .. })
    }
}

/// The scalar `R` multiplying each path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Multiplier {
    Tail(TailModel),
    /// A point mass; handy for checking the pipeline on known paths.
    Fixed(f64),
}

impl Multiplier {
    pub fn draw(&self, stream: &RandomStream) -> f64 {
        self.draw_with(&mut stream.rng())
    }

    pub fn draw_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Multiplier::Tail(model) => model.draw(rng),
            Multiplier::Fixed(r) => *r,
        }
    }

    pub fn tail_model(&self) -> Option<&TailModel> {
        match self {
            Multiplier::Tail(m) => Some(m),
            Multiplier::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub multiplier: Multiplier,
    pub driver: ProcessSpec,
}

impl ProductSpec {
    pub fn validate(&self) -> Result<()> {
        self.driver.validate()?;
        if !self.driver.starts_at_zero() {
            return Err(Error::invalid(
                "driver",
                "product paths need a driver with Z(0) = 0",
            ));
        }
        if let Multiplier::Fixed(r) = self.multiplier {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(
                    "multiplier",
                    format!("must be positive, got {r}"),
                ));
            }
        }
        Ok(())
    }
}

/// Row-major `n × m` grid; entry `(i, j)` is `Y_i(j/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl PathMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::invalid("rows", "path matrix must be non-empty"));
        }
        let mut values = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::LengthMismatch {
                    left: m,
                    right: row.len(),
                });
            }
            values.extend(row);
        }
        Ok(Self { n, m, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.m)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// CSV: a `m,n` header line, the two sizes, then one line per path.
    /// Numbers use the shortest representation that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        let _ = writeln!(out, "m,n\n{},{}", self.m, self.n);
        for row in self.rows() {
            for (j, &x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format_exact(x));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, reason: String| Error::Parse {
            line: line + 1,
            reason,
        };
        match lines.next() {
            Some((_, l)) if l.trim() == "m,n" => {}
            Some((i, l)) => return Err(parse_err(i, format!("expected header `m,n`, got `{l}`"))),
            None => return Err(parse_err(0, "empty input".into())),
        }
        let (i, dims) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing sizes".into()))?;
        let dims: Vec<usize> = dims
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(i, format!("bad sizes: {e}")))?;
        let [m, n] = dims[..] else {
            return Err(parse_err(i, "expected two sizes".into()));
        };
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines {
            let row = parse_row(line).map_err(|reason| parse_err(i, reason))?;
            if row.len() != m {
                return Err(parse_err(
                    i,
                    format!("expected {m} values, got {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: text.lines().count(),
                reason: format!("expected {n} rows, got {}", rows.len()),
            });
        }
        Self::from_rows(rows)
    }
}

pub(crate) fn parse_row(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().map_err(|_| format!("not a number: `{s}`"))
        })
        .collect()
}

/// Shortest round-trip decimal form (at most 17 significant digits).
pub fn format_exact(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A driver prepared for one grid size; cheap to share across threads.
pub struct DriverSampler {
    m: usize,
    kind: Prepared,
}

enum Prepared {
    Brownian {
        step_sd: f64,
    },
    Circulant {
        /// `sqrt(λ_k / L)` for the length-L embedding.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
        step_scale: f64,
    },
    Cholesky {
        lower: DMatrix<f64>,
    },
    Ramp,
    Constant(f64),
}

/// Per-worker scratch for [`DriverSampler::fill_row`].
#[derive(Default)]
pub struct Workspace {
    spectrum: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    normals: Vec<f64>,
}

/// Autocovariance of unit-spacing fractional Gaussian noise.
fn fgn_autocov(lag: usize, hurst: f64) -> f64 {
    let k = lag as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

impl DriverSampler {
    pub fn new(spec: &ProcessSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        if m < 2 {
            return Err(Error::invalid(
                "m",
                format!("grid size must be ≥ 2, got {m}"),
            ));
        }
        let kind = match spec.kind {
            ProcessKind::BrownianMotion => Prepared::Brownian {
                step_sd: (1.0 / m as f64).sqrt(),
            },
            ProcessKind::FractionalBrownianMotion { hurst } => match spec.fbm_method {
                FbmMethod::CirculantEmbedding => Self::circulant(hurst, m)?,
                FbmMethod::Cholesky => Self::cholesky(hurst, m)?,
            },
            ProcessKind::DeterministicRamp => Prepared::Ramp,
            ProcessKind::DeterministicConstant { value } => Prepared::Constant(value),
        };
        Ok(Self { m, kind })
    }

    /// Davies–Harte: embed the `N × N` Toeplitz covariance of the `m − 1`
    /// increments (N rounded up to a power of two) in a `2N` circulant and
    /// diagonalize it with one FFT.
    fn circulant(hurst: f64, m: usize) -> Result<Prepared> {
        let n = (m - 1).next_power_of_two();
        let len = 2 * n;
        let mut first_row: Vec<Complex<f64>> = (0..len)
            .map(|j| {
                let lag = if j <= n { j } else { len - j };
                Complex::new(fgn_autocov(lag, hurst), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        fft.process(&mut first_row);
        let max_eig = first_row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
        let min_eig = first_row.iter().map(|c| c.re).fold(f64::MAX, f64::min);
        if min_eig < -1e-9 * max_eig {
            return Err(Error::EmbeddingNotPsd {
                m,
                min_eigenvalue: min_eig,
            });
        }
        let weights = first_row
            .iter()
            .map(|c| (c.re.max(0.0) / len as f64).sqrt())
            .collect();
        Ok(Prepared::Circulant {
            weights,
            fft,
            step_scale: (1.0 / m as f64).powf(hurst),
        })
    }

    fn cholesky(hurst: f64, m: usize) -> Result<Prepared> {
        if m > CHOLESKY_MAX_M {
            return Err(Error::invalid(
                "m",
                format!("dense Cholesky fBm is limited to m ≤ {CHOLESKY_MAX_M}, got {m}"),
            ));
        }
        let h2 = 2.0 * hurst;
        let dim = m - 1;
        let cov = DMatrix::from_fn(dim, dim, |a, b| {
            let (s, t) = ((a + 1) as f64 / m as f64, (b + 1) as f64 / m as f64);
            0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
        });
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::invalid("hurst", "fBm covariance is not positive definite"))?;
        Ok(Prepared::Cholesky { lower: chol.l() })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::default()
    }

    /// Writes one path `Z(j/m), j = 0..m−1` drawn from `stream` into `out`.
    pub fn fill_row(&self, stream: &RandomStream, ws: &mut Workspace, out: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(out.len(), m);
        match &self.kind {
            Prepared::Brownian { step_sd } => {
                let mut rng = stream.rng();
                out[0] = 0.0;
                let mut acc = 0.0;
                for x in out[1..].iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    acc += step_sd * z;
                    *x = acc;
                }
            }
            Prepared::Circulant {
                weights,
                fft,
                step_scale,
            } => {
                let mut rng = stream.rng();
                ws.spectrum.clear();
                ws.spectrum.extend(weights.iter().map(|&w| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex::new(w * re, w * im)
                }));
                ws.scratch
                    .resize(fft.get_inplace_scratch_len(), Complex::default());
                fft.process_with_scratch(&mut ws.spectrum, &mut ws.scratch);
                out[0] = 0.0;
                let mut acc = 0.0;
                for (x, inc) in out[1..].iter_mut().zip(&ws.spectrum) {
                    acc += step_scale * inc.re;
                    *x = acc;
                }
            }
            Prepared::Cholesky { lower } => {
                let mut rng = stream.rng();
                ws.normals.clear();
                ws.normals.extend((0..m - 1).map(|_| {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                }));
                out[0] = 0.0;
                for (a, x) in out[1..].iter_mut().enumerate() {
                    *x = (0..=a).map(|b| lower[(a, b)] * ws.normals[b]).sum();
                }
            }
            Prepared::Ramp => {
                for (j, x) in out.iter_mut().enumerate() {
                    *x = j as f64 / m as f64;
                }
            }
            Prepared::Constant(c) => out.fill(*c),
        }
    }
}

/// Draws product paths row by row without materializing the matrix.
pub struct ProductSampler {
    multiplier: Multiplier,
    driver: DriverSampler,
}

impl ProductSampler {
    pub fn new(spec: &ProductSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            multiplier: spec.multiplier,
            driver: DriverSampler::new(&spec.driver, m)?,
        })
    }

    pub fn driver(&self) -> &DriverSampler {
        &self.driver
    }

    /// Fills `out` with `R_i · Z_i` and returns `R_i`. `R_i` and `Z_i` come
    /// from separate substreams of `stream`.
    pub fn fill_row(
        &self,
        stream: &RandomStream,
        i: usize,
        ws: &mut Workspace,
        out: &mut [f64],
    ) -> f64 {
        let r = self
            .multiplier
            .draw(&stream.substream(tags::MULTIPLIER, i as u64));
        self.driver
            .fill_row(&stream.substream(tags::DRIVER, i as u64), ws, out);
        for x in out.iter_mut() {
            *x *= r;
        }
        r
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::invalid(
            "m",
            format!("grid size must be ≥ 2, got {m}"),
        ));
    }
    if n < 1 {
        return Err(Error::invalid("n", "path count must be ≥ 1"));
    }
    Ok(())
}

/// `n` independent driver paths; path `i` uses the driver substream `i`.
pub fn simulate_driver(
    spec: &ProcessSpec,
    m: usize,
    n: usize,
    stream: &RandomStream,
    exec: Execution,
) -> Result<PathMatrix> {
    check_dims(m, n)?;
    let sampler = DriverSampler::new(spec, m)?;
    let rows = map_indexed(
        exec,
        n,
        || sampler.workspace(),
        |ws, i| {
            let mut row = vec![0.0; m];
            sampler.fill_row(&stream.substream(tags::DRIVER, i as u64), ws, &mut row);
            row
        },
    );
    PathMatrix::from_rows(rows)
}

/// `n` product paths `R_i · Z_i(j/m)`.
pub fn simulate_product(
    spec: &ProductSpec,
    m: usize,
    n: usize,
    stream: &RandomStream,
    exec: Execution,
) -> Result<PathMatrix> {
    check_dims(m, n)?;
    let sampler = ProductSampler::new(spec, m)?;
    let rows = map_indexed(
        exec,
        n,
        || sampler.driver.workspace(),
        |ws, i| {
            let mut row = vec![0.0; m];
            sampler.fill_row(stream, i, ws, &mut row);
            row
        },
    );
    PathMatrix::from_rows(rows)
}

/// `max_{j<j'} |Y(j'/m) − Y(j/m)| / ((j'−j)/m)^η` over the grid of `path`
/// (with `m = path.len()`); a lower bound for the path's Hölder constant.
pub fn empirical_holder_coefficient(path: &[f64], eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid(
            "eta",
            format!("must be positive, got {eta}"),
        ));
    }
    let m = path.len();
    if m < 2 {
        return Err(Error::invalid("path", "need at least two grid points"));
    }
    let mut best = 0.0f64;
    for lag in 1..m {
        let widest = path
            .iter()
            .zip(&path[lag..])
            .map(|(a, b)| (b - a).abs())
            .fold(0.0, f64::max);
        best = best.max(widest / (lag as f64 / m as f64).powf(eta));
    }
    Ok(best)
}
