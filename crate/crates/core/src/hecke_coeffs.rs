//! Hecke eigenvalues: exact generation for Δ, CSV ingestion, binary cache,
//! and the form descriptors that complete each Dirichlet series.
//!
//! τ(n) is the coefficient of q^n in q·∏(1−q^m)^24. We expand
//! (∏(1−q^m)^3)^8 where the cube is Jacobi's sparse series
//! Σ (−1)^k (2k+1) q^{k(k+1)/2}, so each of the seven multiplications is
//! dense × sparse and stays in exact i128 arithmetic.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MmlError, Result};
use crate::quadrature::CompensatedSum;

/// Largest n_max whose τ values provably fit in i128 (|τ(n)| ≤ d(n)·n^{11/2}).
pub const TAU_I128_LIMIT: usize = 2_000_000;

/// Where a table's values came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    GeneratedDelta,
    IngestedFile,
}

/// λ_f(1..=n_max) in the analytic normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    values: Vec<f64>,
    exact: Option<Vec<i128>>,
    source: CoefficientSource,
    warnings: Vec<String>,
}

impl CoefficientTable {
    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// λ(1..=n_max); index 0 holds λ(1).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Exact τ(1..=n_max) for generated Δ tables.
    pub fn exact_values(&self) -> Option<&[i128]> {
        self.exact.as_deref()
    }

    pub fn source(&self) -> CoefficientSource {
        self.source
    }

    /// Non-fatal findings from ingestion (Deligne-bound excesses).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn tau(&self, n: usize) -> Option<i128> {
        self.exact.as_ref().and_then(|e| e.get(n.checked_sub(1)?).copied())
    }
}

/// Generate Δ's table with the default capacity limit.
pub fn generate_tau_table(n_max: usize) -> Result<CoefficientTable> {
    generate_tau_table_with_budget(n_max, TAU_I128_LIMIT)
}

/// Generate Δ's table, refusing anything above `budget` (itself capped at
/// [`TAU_I128_LIMIT`]).
pub fn generate_tau_table_with_budget(n_max: usize, budget: usize) -> Result<CoefficientTable> {
    let limit = budget.min(TAU_I128_LIMIT);
    if n_max == 0 {
        return Err(MmlError::Validation("n_max must be at least 1".into()));
    }
    if n_max > limit {
        return Err(MmlError::Capacity { requested: n_max, limit });
    }
    let tau = tau_exact(n_max);
    let values = tau.iter().enumerate().map(|(i, &t)| tau_to_lambda(t, i + 1)).collect();
    Ok(CoefficientTable { values, exact: Some(tau), source: CoefficientSource::GeneratedDelta, warnings: Vec::new() })
}

fn tau_exact(n_max: usize) -> Vec<i128> {
    // Coefficients of (q;q)_∞^3 below q^{n_max}.
    let len = n_max;
    let mut sparse: Vec<(usize, i128)> = Vec::new();
    let mut k = 0usize;
    while k * (k + 1) / 2 < len {
        let c = (2 * k + 1) as i128;
        sparse.push((k * (k + 1) / 2, if k % 2 == 0 { c } else { -c }));
        k += 1;
    }
    let mut acc = vec![0i128; len];
    for &(e, c) in &sparse {
        acc[e] = c;
    }
    for _ in 0..7 {
        let mut next = vec![0i128; len];
        for &(e, c) in &sparse {
            for (dst, &src) in next[e..].iter_mut().zip(&acc[..len - e]) {
                *dst += c * src;
            }
        }
        acc = next;
    }
    // q·(q;q)^24: τ(n) is the coefficient of q^{n-1} in (q;q)^24.
    acc
}

fn tau_to_lambda(tau: i128, n: usize) -> f64 {
    let nf = n as f64;
    tau as f64 / (nf.powi(5) * nf.sqrt())
}

/// λ(n), erroring outside 1..=n_max.
pub fn lambda(table: &CoefficientTable, n: usize) -> Result<f64> {
    if n == 0 || n > table.n_max() {
        return Err(MmlError::OutOfRange { what: "n", value: n as f64, max: table.n_max() });
    }
    Ok(table.values[n - 1])
}

/// Σ_{n≤x} λ(n)·e(αn) with compensated accumulation.
pub fn additive_twist_sum(table: &CoefficientTable, x: f64, alpha: f64) -> Result<Complex64> {
    let upto = checked_upper(table, x)?;
    let mut sum = CompensatedSum::new();
    for n in 1..=upto {
        let frac = (alpha * n as f64).rem_euclid(1.0);
        let (s, c) = (std::f64::consts::TAU * frac).sin_cos();
        sum.add(Complex64::new(c, s) * table.values[n - 1]);
    }
    Ok(sum.value())
}

/// (1/x)·Σ_{n≤x} |λ(n)|².
pub fn rankin_average(table: &CoefficientTable, x: f64) -> Result<f64> {
    let upto = checked_upper(table, x)?;
    let mut sum = CompensatedSum::new();
    for n in 1..=upto {
        let v = table.values[n - 1];
        sum.add(Complex64::new(v * v, 0.0));
    }
    Ok(sum.value().re / x)
}

fn checked_upper(table: &CoefficientTable, x: f64) -> Result<usize> {
    if !(x >= 1.0) || x.floor() > table.n_max() as f64 {
        return Err(MmlError::OutOfRange { what: "x", value: x, max: table.n_max() });
    }
    Ok(x.floor() as usize)
}

/// Divisor-count table d(1..=n).
pub fn divisor_counts(n: usize) -> Vec<u32> {
    let mut d = vec![0u32; n + 1];
    for a in 1..=n {
        for m in (a..=n).step_by(a) {
            d[m] += 1;
        }
    }
    d
}

fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            for m in (i..=n).step_by(i) {
                if spf[m] == 0 {
                    spf[m] = i as u32;
                }
            }
        }
    }
    spf
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Summary of an invariant sweep over a table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub n_max: usize,
    pub coprime_pairs_checked: usize,
    pub hecke_relations_checked: usize,
    pub deligne_checked: usize,
    pub deligne_excesses: Vec<usize>,
    pub exact: bool,
}

/// Exact invariant sweep for a generated Δ table: multiplicativity on all
/// coprime pairs with mn ≤ n_max, the prime-power recursion, and Deligne.
pub fn check_generated(table: &CoefficientTable) -> Result<InvariantReport> {
    let tau = table
        .exact
        .as_ref()
        .ok_or_else(|| MmlError::Validation("exact τ values are not available".into()))?;
    let n_max = tau.len();
    let mut report = InvariantReport { n_max, exact: true, ..Default::default() };
    if tau[0] != 1 {
        return Err(MmlError::CoefficientInvariant("τ(1) != 1".into()));
    }
    for m in 2..=n_max {
        for n in (m + 1)..=(n_max / m) {
            if gcd(m, n) == 1 {
                let lhs = tau[m * n - 1];
                let rhs = tau[m - 1].checked_mul(tau[n - 1]);
                if rhs != Some(lhs) {
                    return Err(MmlError::CoefficientInvariant(format!(
                        "multiplicativity fails at (m, n) = ({m}, {n})"
                    )));
                }
                report.coprime_pairs_checked += 1;
            }
        }
    }
    let spf = smallest_prime_factors(n_max);
    for p in 2..=n_max {
        if p * p > n_max {
            break;
        }
        if spf[p] as usize != p {
            continue;
        }
        let p11 = (p as i128).pow(11);
        let mut prev = 1i128; // τ(p^0)
        let mut pk = p; // p^k
        while let Some(next_pk) = pk.checked_mul(p).filter(|&v| v <= n_max) {
            let expected = tau[p - 1] * tau[pk - 1] - p11 * prev;
            if tau[next_pk - 1] != expected {
                return Err(MmlError::CoefficientInvariant(format!(
                    "Hecke recursion fails at p = {p}, p^(k+1) = {next_pk}"
                )));
            }
            report.hecke_relations_checked += 1;
            prev = tau[pk - 1];
            pk = next_pk;
        }
    }
    let d = divisor_counts(n_max);
    for n in 1..=n_max {
        if table.values[n - 1].abs() > d[n] as f64 * (1.0 + 1e-12) {
            return Err(MmlError::CoefficientInvariant(format!("Deligne bound fails at n = {n}")));
        }
    }
    report.deligne_checked = n_max;
    Ok(report)
}

/// Tolerance for floating multiplicativity on ingested data, which is
/// typically printed to ten or so digits.
const INGEST_MULT_TOL: f64 = 1e-7;

fn check_ingested(values: &[f64], exact: Option<&[i128]>) -> Result<(InvariantReport, Vec<String>)> {
    let n_max = values.len();
    let mut report = InvariantReport { n_max, exact: exact.is_some(), ..Default::default() };
    if values[0] != 1.0 {
        return Err(MmlError::CoefficientInvariant(format!("λ(1) = {} but must equal 1", values[0])));
    }
    if let Some(tau) = exact {
        if tau[0] != 1 {
            return Err(MmlError::CoefficientInvariant("τ(1) must equal 1".into()));
        }
    }
    for mn in 6..=n_max {
        for m in 2..mn {
            if m * m > mn {
                break;
            }
            if mn % m != 0 {
                continue;
            }
            let n = mn / m;
            if m == n || gcd(m, n) != 1 {
                continue;
            }
            let ok = match exact {
                Some(tau) => tau[m - 1].checked_mul(tau[n - 1]) == Some(tau[mn - 1]),
                None => {
                    let prod = values[m - 1] * values[n - 1];
                    (values[mn - 1] - prod).abs() <= INGEST_MULT_TOL * prod.abs().max(1.0)
                }
            };
            if !ok {
                return Err(MmlError::CoefficientInvariant(format!(
                    "multiplicativity fails at (m, n) = ({m}, {n})"
                )));
            }
            report.coprime_pairs_checked += 1;
        }
    }
    let d = divisor_counts(n_max);
    let mut warnings = Vec::new();
    for n in 1..=n_max {
        if values[n - 1].abs() > d[n] as f64 * (1.0 + 1e-9) {
            report.deligne_excesses.push(n);
            warnings.push(format!("|λ({n})| = {} exceeds d({n}) = {}", values[n - 1].abs(), d[n]));
        }
    }
    report.deligne_checked = n_max;
    Ok((report, warnings))
}

/// Parse the CSV coefficient format (header `n,lambda[,tau]`) and run the
/// ingestion invariant checks.
pub fn parse_coefficients(text: &str) -> Result<(CoefficientTable, InvariantReport)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| MmlError::Parse(e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_tau = match cols.as_slice() {
        ["n", "lambda"] => false,
        ["n", "lambda", "tau"] => true,
        _ => return Err(MmlError::Parse(format!("unexpected header {:?}, want n,lambda[,tau]", cols))),
    };
    let mut values = Vec::new();
    let mut exact = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MmlError::Parse(e.to_string()))?;
        let line = i + 2;
        if record.len() != cols.len() {
            return Err(MmlError::Parse(format!("line {line}: expected {} fields", cols.len())));
        }
        let n: usize = record[0].parse().map_err(|_| MmlError::Parse(format!("line {line}: bad n {:?}", &record[0])))?;
        if n != i + 1 {
            return Err(MmlError::Parse(format!("line {line}: rows must be contiguous from n=1, found n={n}")));
        }
        let v: f64 =
            record[1].parse().map_err(|_| MmlError::Parse(format!("line {line}: bad lambda {:?}", &record[1])))?;
        if !v.is_finite() {
            return Err(MmlError::Parse(format!("line {line}: lambda is not finite")));
        }
        values.push(v);
        if with_tau {
            let t: i128 =
                record[2].parse().map_err(|_| MmlError::Parse(format!("line {line}: bad tau {:?}", &record[2])))?;
            exact.push(t);
        }
    }
    if values.is_empty() {
        return Err(MmlError::Parse("no coefficient rows".into()));
    }
    let exact = with_tau.then_some(exact);
    let (report, warnings) = check_ingested(&values, exact.as_deref())?;
    let table = CoefficientTable { values, exact, source: CoefficientSource::IngestedFile, warnings };
    Ok((table, report))
}

/// Read and validate a coefficient file.
pub fn ingest_coefficients(path: &Path) -> Result<(CoefficientTable, InvariantReport)> {
    let text = std::fs::read_to_string(path)?;
    parse_coefficients(&text)
}

/// Serialize a table in the CSV coefficient format.
pub fn emit_coefficients(table: &CoefficientTable) -> String {
    let mut out = String::with_capacity(table.n_max() * 24);
    match &table.exact {
        Some(tau) => {
            out.push_str("n,lambda,tau\n");
            for (i, (v, t)) in table.values.iter().zip(tau).enumerate() {
                out.push_str(&format!("{},{:?},{}\n", i + 1, v, t));
            }
        }
        None => {
            out.push_str("n,lambda\n");
            for (i, v) in table.values.iter().enumerate() {
                out.push_str(&format!("{},{:?}\n", i + 1, v));
            }
        }
    }
    out
}

const CACHE_MAGIC: &[u8; 4] = b"HCF1";

/// Binary cache image: magic, little-endian u64 n_max, then the f64 values.
pub fn encode_cache(table: &CoefficientTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * table.n_max());
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&(table.n_max() as u64).to_le_bytes());
    for v in &table.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode a cache image. The result is tagged as generated Δ data without
/// exact values (the format stores only the binary64 λ).
pub fn decode_cache(bytes: &[u8]) -> Result<CoefficientTable> {
    if bytes.len() < 12 || &bytes[..4] != CACHE_MAGIC {
        return Err(MmlError::Parse("missing HCF1 cache header".into()));
    }
    let n_max = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let body = &bytes[12..];
    if n_max == 0 || (body.len() as u64) / 8 != n_max || body.len() % 8 != 0 {
        return Err(MmlError::Parse(format!("cache body length {} does not match n_max = {n_max}", body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    if values[0] != 1.0 || values.iter().any(|v| !v.is_finite()) {
        return Err(MmlError::Parse("cache values are corrupt".into()));
    }
    Ok(CoefficientTable { values, exact: None, source: CoefficientSource::GeneratedDelta, warnings: Vec::new() })
}

/// File name of the Δ cache for a given n_max; the magic doubles as the
/// format version.
pub fn cache_path(dir: &Path, n_max: usize) -> PathBuf {
    dir.join(format!("delta-hcf1-{n_max}.bin"))
}

/// Whether [`load_or_generate`] found a usable cache file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

/// Load the Δ table from `dir` or generate it and write the cache. A corrupt
/// cache file is regenerated.
pub fn load_or_generate(dir: &Path, n_max: usize) -> Result<(CoefficientTable, CacheStatus)> {
    let path = cache_path(dir, n_max);
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(table) = decode_cache(&bytes) {
            if table.n_max() == n_max {
                return Ok((table, CacheStatus::Hit));
            }
        }
    }
    let table = generate_tau_table(n_max)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_cache(&table))?;
    std::fs::rename(&tmp, &path)?;
    Ok((table, CacheStatus::Miss))
}

/// Gamma data of an L-function: γ(s) = π^{-ds/2} ∏ Γ((s−κ_j)/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDescriptor {
    pub name: String,
    pub degree: usize,
    pub kappa: Vec<Complex64>,
    pub conductor: u64,
    pub root_number: Complex64,
    pub self_dual: bool,
}

impl FormDescriptor {
    /// Δ of weight 12 and level 1. Γ(s+11/2)(2π)^{-s} is proportional to
    /// π^{-s}Γ((s+11/2)/2)Γ((s+13/2)/2) by duplication, hence these shifts.
    pub fn delta() -> Self {
        FormDescriptor {
            name: "delta".into(),
            degree: 2,
            kappa: vec![Complex64::new(-5.5, 0.0), Complex64::new(-6.5, 0.0)],
            conductor: 1,
            root_number: Complex64::new(1.0, 0.0),
            self_dual: true,
        }
    }

    pub fn zeta() -> Self {
        FormDescriptor {
            name: "zeta".into(),
            degree: 1,
            kappa: vec![Complex64::new(0.0, 0.0)],
            conductor: 1,
            root_number: Complex64::new(1.0, 0.0),
            self_dual: true,
        }
    }

    /// An even level-1 Maass form with spectral parameter r (eigenvalue 1/4 + r²).
    pub fn maass_even(r: f64) -> Self {
        FormDescriptor {
            name: format!("maass-even-{r}"),
            degree: 2,
            kappa: vec![Complex64::new(0.0, r), Complex64::new(0.0, -r)],
            conductor: 1,
            root_number: Complex64::new(1.0, 0.0),
            self_dual: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.kappa.len() != self.degree {
            return Err(MmlError::Validation(format!(
                "form {}: kappa has {} entries for degree {}",
                self.name,
                self.kappa.len(),
                self.degree
            )));
        }
        if self.kappa.iter().any(|k| !(k.re < 0.5)) {
            return Err(MmlError::Validation(format!("form {}: every Re(kappa_j) must be < 1/2", self.name)));
        }
        if (self.root_number.norm() - 1.0).abs() > 1e-12 {
            return Err(MmlError::Validation(format!("form {}: |root number| must be 1", self.name)));
        }
        if self.conductor == 0 {
            return Err(MmlError::Validation(format!("form {}: conductor must be positive", self.name)));
        }
        Ok(())
    }
}
