//! Planted sparse-approximation instances.
//!
//! A dictionary `A` (M x N, entries i.i.d. N(0, 1/N)), a Bernoulli-Gaussian
//! planted vector `x_hat` and the observation `y = A x_hat + xi` with
//! i.i.d. N(0, sigma_xi2) noise.
//!
//! Instances serialize to a self-describing file: a header carrying the
//! format version, dimensions, generation parameters and seed, followed by
//! the row-major dictionary, `y` and `x_hat`. The binary variant is
//! canonical; the text variant prints every float in shortest round-trip
//! form so both are bit-exact.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{FormatError, ParamError};
use crate::linalg::{axpy, dot};
use crate::rng::{stream_rng, Stream};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;
const BINARY_MAGIC: &[u8; 8] = b"SPANNINS";
const TEXT_MAGIC: &str = "# sparse-anneal instance";

/// Statistical model of a planted instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
    pub rho_hat: f64,
    pub sigma_x2: f64,
    pub sigma_xi2: f64,
    pub seed: u64,
}

impl ModelParams {
    /// Number of measurements, `round(alpha * N)`.
    pub fn m(&self) -> usize {
        (self.alpha * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n < 2 {
            return Err(ParamError::Dimension(self.n));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ParamError::AspectRatio(self.alpha));
        }
        let m = self.m();
        if m == 0 || m >= self.n {
            return Err(ParamError::MeasurementCount { m, n: self.n });
        }
        if !(self.rho_hat >= 0.0 && self.rho_hat < self.alpha) {
            return Err(ParamError::PlantedDensity {
                rho_hat: self.rho_hat,
                alpha: self.alpha,
            });
        }
        for (name, value) in [("sigma_x2", self.sigma_x2), ("sigma_xi2", self.sigma_xi2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::Variance { name, value });
            }
        }
        Ok(())
    }
}

/// One realization of the planted model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    params: ModelParams,
    m: usize,
    n: usize,
    /// Column-major, column `j` is `a[j*m..(j+1)*m]`.
    a: Vec<f64>,
    y: Vec<f64>,
    x_hat: Vec<f64>,
    planted_count: usize,
}

impl ProblemInstance {
    /// Draws an instance. Deterministic in `params` (seed included).
    ///
    /// Draw order on the instance stream: the dictionary row by row, then
    /// for each component of `x_hat` a uniform (support) followed by a
    /// normal when the component is active, then the noise vector.
    pub fn generate(params: &ModelParams) -> Result<Self, ParamError> {
        params.validate()?;
        let (n, m) = (params.n, params.m());
        let mut rng = stream_rng(params.seed, Stream::Instance);

        let scale = (1.0 / n as f64).sqrt();
        let mut a = vec![0.0; m * n];
        for row in 0..m {
            for col in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                a[col * m + row] = scale * z;
            }
        }

        let sx = params.sigma_x2.sqrt();
        let mut x_hat = vec![0.0; n];
        for xi in x_hat.iter_mut() {
            let u: f64 = rng.random();
            if u < params.rho_hat {
                let z: f64 = rng.sample(StandardNormal);
                *xi = if params.sigma_x2 > 0.0 { sx * z } else { 0.0 };
            }
        }

        let sn = params.sigma_xi2.sqrt();
        let mut noise = vec![0.0; m];
        for v in noise.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = if params.sigma_xi2 > 0.0 { sn * z } else { 0.0 };
        }

        let mut inst = Self {
            params: *params,
            m,
            n,
            a,
            y: Vec::new(),
            planted_count: x_hat.iter().filter(|v| **v != 0.0).count(),
            x_hat,
        };
        let mut y = inst.planted_signal();
        for (yi, e) in y.iter_mut().zip(&noise) {
            *yi += e;
        }
        inst.y = y;
        Ok(inst)
    }

    /// Builds an instance from explicit data (`a_rows` row-major M x N).
    pub fn from_parts(
        params: ModelParams,
        a_rows: &[f64],
        y: Vec<f64>,
        x_hat: Vec<f64>,
    ) -> Result<Self, FormatError> {
        let (m, n) = (y.len(), x_hat.len());
        if a_rows.len() != m * n {
            return Err(FormatError::field(
                "a",
                format!("expected {} entries for {m} x {n}, got {}", m * n, a_rows.len()),
            ));
        }
        let mut a = vec![0.0; m * n];
        for row in 0..m {
            for col in 0..n {
                a[col * m + row] = a_rows[row * n + col];
            }
        }
        Ok(Self {
            params,
            m,
            n,
            a,
            y,
            planted_count: x_hat.iter().filter(|v| **v != 0.0).count(),
            x_hat,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.a[j * self.m..(j + 1) * self.m]
    }

    /// Entry `A[row, col]`.
    pub fn a(&self, row: usize, col: usize) -> f64 {
        self.a[col * self.m + row]
    }

    /// Dictionary in row-major order.
    pub fn a_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.n];
        for col in 0..self.n {
            for (row, v) in self.column(col).iter().enumerate() {
                out[row * self.n + col] = *v;
            }
        }
        out
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_hat(&self) -> &[f64] {
        &self.x_hat
    }

    /// Realized number of non-zeros in `x_hat`.
    pub fn planted_count(&self) -> usize {
        self.planted_count
    }

    pub fn planted_support(&self) -> Vec<bool> {
        self.x_hat.iter().map(|v| *v != 0.0).collect()
    }

    /// Whether the instance carries a planted solution to compare against.
    pub fn has_planted(&self) -> bool {
        self.params.sigma_x2 > 0.0
    }

    /// `A x_hat`, accumulated column by column in index order.
    pub fn planted_signal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (j, x) in self.x_hat.iter().enumerate() {
            if *x != 0.0 {
                axpy(*x, self.column(j), &mut out);
            }
        }
        out
    }

    /// The noise realization `y - A x_hat`.
    pub fn noise(&self) -> Vec<f64> {
        self.y
            .iter()
            .zip(self.planted_signal())
            .map(|(y, s)| y - s)
            .collect()
    }

    pub fn y_norm2(&self) -> f64 {
        dot(&self.y, &self.y)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write_text(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Loads either variant, detected from the leading bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let bytes = fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::read_binary(&mut bytes.as_slice())
        } else if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
            Self::read_text(BufReader::new(bytes.as_slice()))
        } else {
            Err(FormatError::Magic)
        }
    }

    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<(), FormatError> {
        let p = &self.params;
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&INSTANCE_FORMAT_VERSION.to_le_bytes())?;
        for v in [self.n as u64, self.m as u64, p.seed, self.planted_count as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [p.alpha, p.rho_hat, p.sigma_x2, p.sigma_xi2] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.a_row_major().iter().chain(&self.y).chain(&self.x_hat) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self, FormatError> {
        let mut magic = [0u8; 8];
        read_exact(r, &mut magic, "magic")?;
        if &magic != BINARY_MAGIC {
            return Err(FormatError::Magic);
        }
        let mut b4 = [0u8; 4];
        read_exact(r, &mut b4, "format_version")?;
        let version = u32::from_le_bytes(b4);
        if version != INSTANCE_FORMAT_VERSION {
            return Err(FormatError::Version(version));
        }
        let n = read_u64(r, "n")? as usize;
        let m = read_u64(r, "m")? as usize;
        let seed = read_u64(r, "seed")?;
        let planted_count = read_u64(r, "planted_count")? as usize;
        let alpha = read_f64(r, "alpha")?;
        let rho_hat = read_f64(r, "rho_hat")?;
        let sigma_x2 = read_f64(r, "sigma_x2")?;
        let sigma_xi2 = read_f64(r, "sigma_xi2")?;
        let params = ModelParams {
            n,
            alpha,
            rho_hat,
            sigma_x2,
            sigma_xi2,
            seed,
        };
        check_header(&params, m)?;
        let a = read_f64s(r, m * n, "a")?;
        let y = read_f64s(r, m, "y")?;
        let x_hat = read_f64s(r, n, "x_hat")?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(FormatError::field("x_hat", "trailing bytes after payload"));
        }
        finish(params, &a, y, x_hat, planted_count)
    }

    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<(), FormatError> {
        let p = &self.params;
        writeln!(w, "{TEXT_MAGIC}")?;
        writeln!(w, "format_version {INSTANCE_FORMAT_VERSION}")?;
        writeln!(w, "n {}", self.n)?;
        writeln!(w, "m {}", self.m)?;
        writeln!(w, "seed {}", p.seed)?;
        writeln!(w, "planted_count {}", self.planted_count)?;
        writeln!(w, "alpha {:?}", p.alpha)?;
        writeln!(w, "rho_hat {:?}", p.rho_hat)?;
        writeln!(w, "sigma_x2 {:?}", p.sigma_x2)?;
        writeln!(w, "sigma_xi2 {:?}", p.sigma_xi2)?;
        writeln!(w, "[a]")?;
        let rows = self.a_row_major();
        for row in rows.chunks(self.n) {
            write_row(w, row)?;
        }
        writeln!(w, "[y]")?;
        write_row(w, &self.y)?;
        writeln!(w, "[x_hat]")?;
        write_row(w, &self.x_hat)?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, FormatError> {
        let mut lines = r.lines();
        let mut next = |field: &'static str| -> Result<String, FormatError> {
            match lines.next() {
                Some(line) => Ok(line?),
                None => Err(FormatError::field(field, "unexpected end of file")),
            }
        };
        if next("magic")?.trim_end() != TEXT_MAGIC {
            return Err(FormatError::Magic);
        }
        let version: u32 = header_value(&next("format_version")?, "format_version")?;
        if version != INSTANCE_FORMAT_VERSION {
            return Err(FormatError::Version(version));
        }
        let n: usize = header_value(&next("n")?, "n")?;
        let m: usize = header_value(&next("m")?, "m")?;
        let seed: u64 = header_value(&next("seed")?, "seed")?;
        let planted_count: usize = header_value(&next("planted_count")?, "planted_count")?;
        let params = ModelParams {
            n,
            seed,
            alpha: header_value(&next("alpha")?, "alpha")?,
            rho_hat: header_value(&next("rho_hat")?, "rho_hat")?,
            sigma_x2: header_value(&next("sigma_x2")?, "sigma_x2")?,
            sigma_xi2: header_value(&next("sigma_xi2")?, "sigma_xi2")?,
        };
        check_header(&params, m)?;

        expect_section(&next("a")?, "a")?;
        let mut a = Vec::with_capacity(m * n);
        for _ in 0..m {
            let row = parse_row(&next("a")?, "a")?;
            if row.len() != n {
                return Err(FormatError::field(
                    "a",
                    format!("row has {} entries, header says N = {n}", row.len()),
                ));
            }
            a.extend(row);
        }
        expect_section(&next("y")?, "y")?;
        let y = parse_row(&next("y")?, "y")?;
        if y.len() != m {
            return Err(FormatError::field(
                "y",
                format!("{} entries, header says M = {m}", y.len()),
            ));
        }
        expect_section(&next("x_hat")?, "x_hat")?;
        let x_hat = parse_row(&next("x_hat")?, "x_hat")?;
        if x_hat.len() != n {
            return Err(FormatError::field(
                "x_hat",
                format!("{} entries, header says N = {n}", x_hat.len()),
            ));
        }
        for line in lines {
            if !line?.trim().is_empty() {
                return Err(FormatError::field("x_hat", "trailing content after payload"));
            }
        }
        finish(params, &a, y, x_hat, planted_count)
    }
}

fn check_header(params: &ModelParams, m: usize) -> Result<(), FormatError> {
    params
        .validate()
        .map_err(|e| FormatError::field("header", e.to_string()))?;
    if params.m() != m {
        return Err(FormatError::field(
            "m",
            format!("header M = {m} disagrees with round(alpha * N) = {}", params.m()),
        ));
    }
    Ok(())
}

fn finish(
    params: ModelParams,
    a: &[f64],
    y: Vec<f64>,
    x_hat: Vec<f64>,
    planted_count: usize,
) -> Result<ProblemInstance, FormatError> {
    let inst = ProblemInstance::from_parts(params, a, y, x_hat)?;
    if inst.planted_count != planted_count {
        return Err(FormatError::field(
            "planted_count",
            format!(
                "header says {planted_count}, payload has {} non-zeros",
                inst.planted_count
            ),
        ));
    }
    Ok(inst)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], field: &'static str) -> Result<(), FormatError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => FormatError::field(field, "truncated"),
        _ => FormatError::Io(e),
    })
}

fn read_u64<R: Read>(r: &mut R, field: &'static str) -> Result<u64, FormatError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, field)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, field: &'static str) -> Result<f64, FormatError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, field)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, len: usize, field: &'static str) -> Result<Vec<f64>, FormatError> {
    let mut bytes = vec![0u8; len * 8];
    read_exact(r, &mut bytes, field)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_row<W: Write>(w: &mut W, row: &[f64]) -> std::io::Result<()> {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            w.write_all(b" ")?;
        }
        write!(w, "{v:?}")?;
    }
    w.write_all(b"\n")
}

fn header_value<T: std::str::FromStr>(line: &str, key: &'static str) -> Result<T, FormatError> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v
            .parse()
            .map_err(|_| FormatError::field(key, format!("cannot parse `{v}`"))),
        _ => Err(FormatError::field(key, format!("expected `{key} <value>`, got `{line}`"))),
    }
}

fn expect_section(line: &str, name: &'static str) -> Result<(), FormatError> {
    if line.trim() == format!("[{name}]") {
        Ok(())
    } else {
        Err(FormatError::field(name, format!("expected section header, got `{line}`")))
    }
}

fn parse_row(line: &str, field: &'static str) -> Result<Vec<f64>, FormatError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| FormatError::field(field, format!("cannot parse `{tok}`")))
        })
        .collect()
}
