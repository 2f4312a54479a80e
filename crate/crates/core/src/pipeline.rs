//! The representation pipeline and the experiment harnesses built on it.
//!
//! [`Solver::represent`] tries, in order:
//!
//! 1. `n = m^2`: return `(m, 0, 0)`.
//! 2. A primitive form of discriminant `4n` in the certified patch. Its parity
//!    repair lands in `K` by certification, so the dictionary triple has
//!    `max(x^2, y^2, z^2) < n`.
//! 3. Any primitive form in `K` whose parity repair yields a bounded triple.
//! 4. Exhaustive search over `0 <= x <= y <= floor(sqrt(n))`.
//!
//! Every returned triple is re-verified in exact integers.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_square, isqrt, square};
use crate::class::class_data;
use crate::dictionary::{form_to_triple, Triple};
use crate::enumerate::{EnumWindow, Region};
use crate::error::{Error, Result};
use crate::form::IntForm;
use crate::measure::measure_of;
use crate::region::{certify_patch, default_radius, BallPatch, CertificationReport, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Path {
    SquareCase,
    OmegaPipeline,
    KFallback,
    BruteForce,
}

impl Path {
    pub const ALL: [Path; 4] = [
        Path::SquareCase,
        Path::OmegaPipeline,
        Path::KFallback,
        Path::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Path::SquareCase => "SquareCase",
            Path::OmegaPipeline => "OmegaPipeline",
            Path::KFallback => "KFallback",
            Path::BruteForce => "BruteForce",
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Found { triple: Triple, path: Path },
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepresentationResult {
    pub n: i64,
    pub outcome: Outcome,
}

impl RepresentationResult {
    pub fn triple(&self) -> Option<&Triple> {
        match &self.outcome {
            Outcome::Found { triple, .. } => Some(triple),
            Outcome::NotFound => None,
        }
    }

    pub fn path(&self) -> Option<Path> {
        match self.outcome {
            Outcome::Found { path, .. } => Some(path),
            Outcome::NotFound => None,
        }
    }
}

/// Holds the certified patch the pipeline searches in.
#[derive(Debug, Clone)]
pub struct Solver {
    patch: BallPatch,
    certification: CertificationReport,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new(default_radius()).expect("the default radius certifies")
    }
}

impl Solver {
    /// Certifies the ball of `radius` around the base point; refuses radii
    /// that fail certification.
    pub fn new(radius: Rational) -> Result<Self> {
        let certification = certify_patch(radius)?;
        if !certification.passed() {
            let w = certification.worst();
            return Err(Error::InvalidInput(format!(
                "patch radius {radius} fails certification at ({}, {}), slack {:.3e}",
                w.map, w.functional, w.slack
            )));
        }
        Ok(Self {
            patch: BallPatch::around_base_point(radius)?,
            certification,
        })
    }

    pub fn patch(&self) -> &BallPatch {
        &self.patch
    }

    pub fn radius(&self) -> Rational {
        self.patch.radius()
    }

    pub fn certification(&self) -> &CertificationReport {
        &self.certification
    }

    pub fn represent(&self, n: i64) -> Result<RepresentationResult> {
        if n < 1 {
            return Err(Error::InvalidInput(format!("n must be positive, got {n}")));
        }
        let found = |triple, path| finish(n, triple, path);
        let root = isqrt(n as i128) as i64;
        if root * root == n {
            return found(Triple::new(root, 0, 0, n)?, Path::SquareCase);
        }
        let d = n
            .checked_mul(4)
            .ok_or(Error::ArithmeticRange("d = 4n"))?;

        let omega = EnumWindow::new(d, Region::Patch(self.patch.clone()))?;
        if let Some(f) = omega.forms().next() {
            let t = repaired_triple(&f)?;
            if !t.is_bounded() {
                return Err(Error::InternalConsistency(format!(
                    "patch form {f} for n = {n} gave unbounded triple {t}"
                )));
            }
            return found(t, Path::OmegaPipeline);
        }

        let k = EnumWindow::new(d, Region::K)?;
        for f in k.forms() {
            let t = repaired_triple(&f)?;
            if t.is_bounded() {
                return found(t, Path::KFallback);
            }
        }

        if let Some(t) = exhaustive_search(n)? {
            return found(t, Path::BruteForce);
        }
        Ok(RepresentationResult {
            n,
            outcome: Outcome::NotFound,
        })
    }

    /// Whether some primitive form of discriminant `d` lands in the patch.
    pub fn patch_hit(&self, d: i64) -> Result<bool> {
        Ok(EnumWindow::new(d, Region::Patch(self.patch.clone()))?
            .forms()
            .next()
            .is_some())
    }
}

fn repaired_triple(f: &IntForm) -> Result<Triple> {
    form_to_triple(&f.parity_fix()?.form)
}

fn finish(n: i64, triple: Triple, path: Path) -> Result<RepresentationResult> {
    let (x, y, z) = (triple.x(), triple.y(), triple.z());
    let value = square(x) + square(y) - square(z);
    let n128 = n as i128;
    if value != n128 || triple.n() != n {
        return Err(Error::InternalConsistency(format!(
            "{path} returned {triple} for n = {n}, which evaluates to {value}"
        )));
    }
    if square(x) > n128 || square(y) > n128 || square(z) > n128 {
        return Err(Error::InternalConsistency(format!(
            "{path} returned {triple} for n = {n}, outside the square bound"
        )));
    }
    Ok(RepresentationResult {
        n,
        outcome: Outcome::Found { triple, path },
    })
}

/// Solver's last resort: `x` outer, `y >= x` inner.
fn exhaustive_search(n: i64) -> Result<Option<Triple>> {
    let s = isqrt(n as i128) as i64;
    for x in 0..=s {
        for y in x..=s {
            let r = square(x) + square(y) - n as i128;
            if r >= 0 && r <= n as i128 && is_square(r) {
                return Triple::new(x, y, isqrt(r) as i64, n).map(Some);
            }
        }
    }
    Ok(None)
}

/// Direct search for `x^2 + y^2 - z^2 = n` with `0 <= x <= y` and
/// `max(x^2, y^2, z^2) <= n`, scanning `y` outer and `x` inner, both
/// ascending. The first hit is returned, e.g. `(0, 1, 0)` for `n = 1`.
pub fn brute_force_oracle(n: i64) -> Option<Triple> {
    if n < 1 {
        return None;
    }
    let s = isqrt(n as i128) as i64;
    (0..=s).find_map(|y| {
        (0..=y).find_map(|x| {
            let z2 = square(x) + square(y) - n as i128;
            if z2 < 0 || z2 > n as i128 {
                return None;
            }
            let z = isqrt(z2);
            (z * z == z2).then(|| Triple::new(x, y, z as i64, n).expect("checked above"))
        })
    })
}

pub fn represent(n: i64) -> Result<RepresentationResult> {
    Solver::default().represent(n)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {workers} workers: {e}")))
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub result: RepresentationResult,
    pub oracle: Option<Triple>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PathCounts {
    pub square_case: u64,
    pub omega_pipeline: u64,
    pub k_fallback: u64,
    pub brute_force: u64,
    pub not_found: u64,
}

impl PathCounts {
    fn add(&mut self, p: Option<Path>) {
        match p {
            Some(Path::SquareCase) => self.square_case += 1,
            Some(Path::OmegaPipeline) => self.omega_pipeline += 1,
            Some(Path::KFallback) => self.k_fallback += 1,
            Some(Path::BruteForce) => self.brute_force += 1,
            None => self.not_found += 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub from: i64,
    pub to: i64,
    pub rows: Vec<ScanRow>,
    /// `n` for which the oracle finds no bounded representation.
    pub exceptional: Vec<i64>,
    /// `n` solved through the certified patch.
    pub omega_hits: Vec<i64>,
    pub path_counts: PathCounts,
    /// `n` where the solver and the oracle disagree on representability.
    pub disagreements: Vec<i64>,
    /// Patch-path results whose bound re-check failed.
    pub omega_bound_failures: Vec<i64>,
}

impl ScanReport {
    pub fn max_exceptional(&self) -> Option<i64> {
        self.exceptional.last().copied()
    }

    pub fn is_consistent(&self) -> bool {
        self.disagreements.is_empty() && self.omega_bound_failures.is_empty()
    }
}

/// Runs the solver and the oracle on every `n` in `[from, to]`.
pub fn scan(solver: &Solver, from: i64, to: i64, workers: usize) -> Result<ScanReport> {
    if from < 1 || from > to {
        return Err(Error::InvalidInput(format!(
            "scan range must satisfy 1 <= from <= to, got [{from}, {to}]"
        )));
    }
    let per_n = pool(workers)?.install(|| {
        (from..=to)
            .into_par_iter()
            .map(|n| (n, solver.represent(n), brute_force_oracle(n)))
            .collect::<Vec<_>>()
    });

    let mut report = ScanReport {
        from,
        to,
        rows: Vec::with_capacity(per_n.len()),
        exceptional: Vec::new(),
        omega_hits: Vec::new(),
        path_counts: PathCounts::default(),
        disagreements: Vec::new(),
        omega_bound_failures: Vec::new(),
    };
    for (n, result, oracle) in per_n {
        let result = match result {
            Ok(r) => r,
            Err(Error::InternalConsistency(msg)) if msg.starts_with("patch form") => {
                report.omega_bound_failures.push(n);
                report.disagreements.push(n);
                RepresentationResult {
                    n,
                    outcome: Outcome::NotFound,
                }
            }
            Err(e) => return Err(e),
        };
        if oracle.is_none() {
            report.exceptional.push(n);
        }
        if result.path() == Some(Path::OmegaPipeline) {
            report.omega_hits.push(n);
        }
        if result.triple().is_some() != oracle.is_some()
            && !report.disagreements.last().is_some_and(|&m| m == n)
        {
            report.disagreements.push(n);
        }
        report.path_counts.add(result.path());
        report.rows.push(ScanRow { result, oracle });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquidistRow {
    pub d: i64,
    pub lambda_k: u64,
    pub lambda_patch: u64,
    pub vol_proxy: f64,
    pub ratio_patch_over_k: f64,
    pub normalized_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    /// `std / mean`.
    pub dispersion: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        if v.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                dispersion: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        Self {
            mean,
            std,
            dispersion: std / mean,
        }
    }
}

/// Summary over the discriminants in `[2^k, 2^(k+1))`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockSummary {
    pub k: u32,
    pub lo: i64,
    pub hi: i64,
    pub count: usize,
    pub normalized_k: Stats,
    pub ratio_patch_over_k: Stats,
    /// Fraction of `d` with at least one patch point.
    pub hit_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquidistSummary {
    pub patch_radius: String,
    pub count: usize,
    pub blocks: Vec<BlockSummary>,
    pub normalized_k: Stats,
    pub ratio_patch_over_k: Stats,
    pub hit_rate: f64,
    /// `measure(patch) / measure(K)`, what the patch ratio should approach.
    pub measure_ratio: f64,
    /// Convergence thresholds applied to these numbers are engineering
    /// choices; no rate of convergence is known.
    pub tolerances_are_engineering_choices: bool,
}

#[derive(Debug, Clone)]
pub struct EquidistReport {
    pub rows: Vec<EquidistRow>,
    pub summary: EquidistSummary,
}

fn dyadic_block(v: i64) -> u32 {
    63 - (v as u64).leading_zeros()
}

pub fn check_equidist_discriminant(d: i64) -> Result<()> {
    if d <= 0 || d % 4 != 0 {
        return Err(Error::InvalidInput(format!(
            "equidistribution discriminants must be positive multiples of 4, got {d}"
        )));
    }
    if is_square(d as i128) {
        return Err(Error::InvalidInput(format!(
            "square discriminant {d} rejected: equidistribution needs non-square d"
        )));
    }
    Ok(())
}

/// Counts in `K` and in the patch against the volume proxy, per `d`.
pub fn equidist_row(solver: &Solver, d: i64) -> Result<EquidistRow> {
    check_equidist_discriminant(d)?;
    let lambda_k = EnumWindow::new(d, Region::K)?.forms().count() as u64;
    let lambda_patch = EnumWindow::new(d, Region::Patch(solver.patch.clone()))?
        .forms()
        .count() as u64;
    let vol_proxy = class_data(d)?.vol_proxy;
    Ok(EquidistRow {
        d,
        lambda_k,
        lambda_patch,
        vol_proxy,
        ratio_patch_over_k: if lambda_k == 0 {
            0.0
        } else {
            lambda_patch as f64 / lambda_k as f64
        },
        normalized_k: lambda_k as f64 / vol_proxy,
    })
}

pub fn equidist(solver: &Solver, ds: &[i64], workers: usize) -> Result<EquidistReport> {
    for &d in ds {
        check_equidist_discriminant(d)?;
    }
    let rows = pool(workers)?.install(|| {
        ds.par_iter()
            .map(|&d| equidist_row(solver, d))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut blocks: Vec<BlockSummary> = Vec::new();
    let mut ks: Vec<u32> = rows.iter().map(|r| dyadic_block(r.d)).collect();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let members: Vec<&EquidistRow> = rows.iter().filter(|r| dyadic_block(r.d) == k).collect();
        blocks.push(BlockSummary {
            k,
            lo: 1i64 << k,
            hi: 1i64 << (k + 1),
            count: members.len(),
            normalized_k: Stats::of(members.iter().map(|r| r.normalized_k)),
            ratio_patch_over_k: Stats::of(members.iter().map(|r| r.ratio_patch_over_k)),
            hit_rate: hit_fraction(members.iter().map(|r| r.lambda_patch)),
        });
    }
    let k_measure = measure_of(&Region::K)?;
    let p_measure = measure_of(&Region::Patch(solver.patch.clone()))?;
    let summary = EquidistSummary {
        patch_radius: solver.radius().to_string(),
        count: rows.len(),
        blocks,
        normalized_k: Stats::of(rows.iter().map(|r| r.normalized_k)),
        ratio_patch_over_k: Stats::of(rows.iter().map(|r| r.ratio_patch_over_k)),
        hit_rate: hit_fraction(rows.iter().map(|r| r.lambda_patch)),
        measure_ratio: p_measure.value / k_measure.value,
        tolerances_are_engineering_choices: true,
    };
    Ok(EquidistReport { rows, summary })
}

fn hit_fraction(counts: impl Iterator<Item = u64>) -> f64 {
    let (hits, total) = counts.fold((0usize, 0usize), |(h, t), c| (h + (c > 0) as usize, t + 1));
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

/// Every `d = 0 (mod 4)` in `[lo, hi]` that is not a square.
pub fn even_nonsquare_discriminants(lo: i64, hi: i64) -> Vec<i64> {
    let start = (lo.max(4) + 3) / 4 * 4;
    (start..=hi)
        .step_by(4)
        .filter(|&d| !is_square(d as i128))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct HitRateBlock {
    pub k: u32,
    pub lo: i64,
    pub hi: i64,
    /// Non-square `n` in the block.
    pub total: u64,
    /// Those with a discriminant-`4n` form in the patch.
    pub hits: u64,
    pub rate: f64,
}

/// Patch hit rate over non-square `n`, per dyadic block `[2^k, 2^(k+1))`
/// for `k` in `k_lo..=k_hi`.
pub fn patch_hit_rates(
    solver: &Solver,
    k_lo: u32,
    k_hi: u32,
    workers: usize,
) -> Result<Vec<HitRateBlock>> {
    if k_lo > k_hi || k_hi >= 60 {
        return Err(Error::InvalidInput(format!("bad block range {k_lo}..={k_hi}")));
    }
    let pool = pool(workers)?;
    (k_lo..=k_hi)
        .map(|k| {
            let (lo, hi) = (1i64 << k, 1i64 << (k + 1));
            let (total, hits) = pool.install(|| {
                (lo..hi)
                    .into_par_iter()
                    .filter(|&n| !is_square(n as i128))
                    .map(|n| solver.patch_hit(4 * n).map(|h| (1u64, h as u64)))
                    .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
            })?;
            Ok(HitRateBlock {
                k,
                lo,
                hi,
                total,
                hits,
                rate: hits as f64 / total as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::verify_bounded;

    fn exhaustive_oracle(n: i64) -> bool {
        // every sign pattern, |x|, |y|, |z| <= sqrt(n)
        let s = isqrt(n as i128) as i64;
        for x in -s..=s {
            for y in -s..=s {
                for z in -s..=s {
                    if x * x + y * y - z * z == n {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn represent_examples() {
        let solver = Solver::default();
        let r = solver.represent(9).unwrap();
        assert_eq!(
            r.outcome,
            Outcome::Found {
                triple: Triple::new(3, 0, 0, 9).unwrap(),
                path: Path::SquareCase
            }
        );
        let r = solver.represent(2).unwrap();
        let t = r.triple().unwrap();
        assert_eq!(t.n(), 2);
        assert!(verify_bounded(t));
        assert_eq!(solver.represent(3).unwrap().outcome, Outcome::NotFound);
        assert_eq!(solver.represent(6).unwrap().outcome, Outcome::NotFound);
        assert!(solver.represent(0).is_err());
        assert!(solver.represent(-5).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(brute_force_oracle(1), Some(Triple::new(0, 1, 0, 1).unwrap()));
        assert_eq!(brute_force_oracle(3), None);
        assert_eq!(brute_force_oracle(6), None);
        let t = brute_force_oracle(4).unwrap();
        assert_eq!(t.n(), 4);
        assert!(t.is_bounded());
    }

    #[test]
    fn oracle_agrees_with_sign_exhaustive_search() {
        for n in 1..=400 {
            assert_eq!(brute_force_oracle(n).is_some(), exhaustive_oracle(n), "n = {n}");
        }
    }

    #[test]
    fn omega_path_fires_at_moderate_n() {
        let solver = Solver::default();
        let hits = (20_000..20_200)
            .filter(|&n| solver.represent(n).unwrap().path() == Some(Path::OmegaPipeline))
            .count();
        assert!(hits > 0);
    }

    #[test]
    fn patch_forms_repair_into_k() {
        let solver = Solver::default();
        let mut seen = 0;
        for n in 30_000..30_300 {
            let d = 4 * n;
            let w = EnumWindow::new(d, Region::Patch(solver.patch().clone())).unwrap();
            for f in w.forms() {
                seen += 1;
                for g in [f, f.apply_t().unwrap(), f.apply_u().unwrap()] {
                    assert!(crate::region::in_k_exact(&g, d).unwrap(), "{g} at d = {d}");
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn deterministic() {
        let solver = Solver::default();
        for n in [12_345, 99_991, 1_000_003] {
            assert_eq!(solver.represent(n).unwrap(), solver.represent(n).unwrap());
        }
    }

    #[test]
    fn uncertifiable_radius_is_refused() {
        assert!(Solver::new(Rational::new(1, 10)).is_err());
        assert!(Solver::new(Rational::new(1, 100)).is_ok());
    }

    #[test]
    fn scan_small_range() {
        let solver = Solver::default();
        let rep = scan(&solver, 1, 100, 4).unwrap();
        assert!(rep.exceptional.contains(&3) && rep.exceptional.contains(&6));
        assert!(rep.is_consistent());
        assert_eq!(rep.rows.len(), 100);
        assert!(rep.rows.iter().enumerate().all(|(i, r)| r.result.n == i as i64 + 1));
        assert!(scan(&solver, 0, 10, 1).is_err());
        assert!(scan(&solver, 10, 9, 1).is_err());
    }

    #[test]
    fn scan_over_squares() {
        let solver = Solver::default();
        for m in 1..200 {
            assert_eq!(solver.represent(m * m).unwrap().path(), Some(Path::SquareCase));
        }
    }

    #[test]
    fn equidist_rows() {
        let solver = Solver::default();
        let ds = even_nonsquare_discriminants(10_000, 10_400);
        assert!(ds.iter().all(|d| d % 4 == 0 && !is_square(*d as i128)));
        let rep = equidist(&solver, &ds, 4).unwrap();
        assert_eq!(rep.rows.len(), ds.len());
        for r in &rep.rows {
            assert!(r.lambda_patch <= r.lambda_k);
            assert!((0.0..=1.0).contains(&r.ratio_patch_over_k));
            assert!(r.vol_proxy > 0.0);
        }
        assert!(equidist(&solver, &[400], 1).is_err());
        assert!(equidist(&solver, &[402], 1).is_err());
    }

    #[test]
    fn even_nonsquare_list() {
        assert_eq!(even_nonsquare_discriminants(1, 40), vec![8, 12, 20, 24, 28, 32, 40]);
    }

    #[test]
    fn stats() {
        let s = Stats::of([1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(s.dispersion, 0.5);
    }
}
