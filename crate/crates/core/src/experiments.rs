//! Monte-Carlo estimation of logical error rates, overlapping-window
//! decoding and cluster statistics.
//!
//! Every shot draws its error from its own ChaCha8 stream keyed by
//! `(run seed, grid point, shot index)`, so shots can run in any order or in
//! parallel and still reproduce bit-for-bit.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::WindowLayout;
use crate::decoder::{DecodeError, DecodeOutcome, Decoder, DecoderSpec};
use crate::gf2::{xor_supports, SparseBinaryMatrix};
use crate::lsd::ClusterStats;
use crate::model::{error_clusters, DetectorModel, ModelError, Syndrome};
use crate::scalar::Real;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Likelihood-ratio factor of the shaded band around an estimated rate.
pub const LR_FACTOR: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("p = {p} is outside [0, 1/(theta-1)) for theta = {theta}")]
    BetheDomain { p: f64, theta: f64 },
    #[error("window needs 1 <= commit ({commit}) <= width ({width})")]
    WindowShape { width: usize, commit: usize },
    #[error("layout lists {got} {what}, model has {expected}")]
    LayoutSize { what: &'static str, got: usize, expected: usize },
    #[error("fault {fault} in round {round} touches detector {detector} of an earlier round")]
    Causality { fault: usize, round: usize, detector: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Draws an error with each fault flipped independently with its prior.
pub fn sample_iid_error<T: Real, R: Rng + ?Sized>(priors: &[T], rng: &mut R) -> Vec<usize> {
    priors
        .iter()
        .enumerate()
        .filter_map(|(i, p)| (rng.random::<f64>() < p.to_f64().unwrap_or(0.0)).then_some(i))
        .collect()
}

/// Random stream of shot `shot` at grid point `point` of a run.
pub fn shot_rng(seed: u64, point: u64, shot: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(shot);
    rng
}

/// Logical error rate per syndrome cycle from the rate over `cycles` cycles.
pub fn per_cycle_rate(p_total: f64, cycles: usize) -> f64 {
    if cycles <= 1 {
        return p_total;
    }
    1.0 - (1.0 - p_total).powf(1.0 / cycles as f64)
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(failures: usize, shots: usize) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let n = shots as f64;
    let phat = failures as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if failures == shots { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn binomial_log_likelihood(failures: f64, shots: f64, q: f64) -> f64 {
    let term = |k: f64, x: f64| if k == 0.0 { 0.0 } else { k * x.ln() };
    term(failures, q) + term(shots - failures, 1.0 - q)
}

/// Rates whose binomial likelihood is within `factor` of the maximum.
pub fn likelihood_ratio_interval(failures: usize, shots: usize, factor: f64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (failures as f64, shots as f64);
    let phat = k / n;
    let threshold = binomial_log_likelihood(k, n, phat) - factor.ln();
    let inside = |q: f64| binomial_log_likelihood(k, n, q) >= threshold;
    let bisect = |mut outside: f64, mut ins: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (outside + ins);
            if inside(mid) {
                ins = mid;
            } else {
                outside = mid;
            }
        }
        ins
    };
    let lo = if failures == 0 { 0.0 } else { bisect(0.0, phat) };
    let hi = if failures == shots { 1.0 } else { bisect(1.0, phat) };
    (lo, hi)
}

/// Expected cluster size of site percolation on the Bethe lattice of
/// degree `theta`: `(1 + p) / (1 - (theta - 1) p)`.
pub fn bethe_avg_cluster(p: f64, theta: f64) -> Result<f64, ExperimentError> {
    let denom = 1.0 - (theta - 1.0) * p;
    if !(0.0..1.0).contains(&p) || theta < 2.0 || denom <= 0.0 {
        return Err(ExperimentError::BetheDomain { p, theta });
    }
    Ok((1.0 + p) / denom)
}

/// Perimeter of a size-`s` cluster on the Bethe lattice of degree `theta`.
pub fn bethe_perimeter(theta: usize, s: usize) -> usize {
    (theta - 2) * s + 2
}

/// Outcome of a single Monte-Carlo shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub seed: u64,
    pub point: u64,
    pub shot: u64,
    pub syndrome_weight: usize,
    pub bp_converged: bool,
    pub nu: usize,
    pub kappa: usize,
    pub kappa_alpha: f64,
    pub optimal_nu: usize,
    pub optimal_kappa: usize,
    pub optimal_kappa_alpha: f64,
    pub logical_failure: bool,
    pub decode_error: bool,
    /// `H·ê = s` held for the returned correction.
    pub valid: bool,
}

/// Quantile summary of one statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let q = |f: f64| {
            let pos = f * (v.len() - 1) as f64;
            let (i, frac) = (pos.floor() as usize, pos.fract());
            if i + 1 < v.len() {
                v[i] + frac * (v[i + 1] - v[i])
            } else {
                v[i]
            }
        };
        Self {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q05: q(0.05),
            q25: q(0.25),
            q50: q(0.5),
            q75: q(0.75),
            q95: q(0.95),
        }
    }
}

/// `ν` summarised over all shots, `κ` and `κ_α` over shots with `ν ≥ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub nu: Summary,
    pub kappa: Summary,
    pub kappa_alpha: Summary,
}

impl StatsReport {
    pub fn from_stats(stats: impl IntoIterator<Item = ClusterStats>) -> Self {
        let (mut nu, mut kappa, mut alpha) = (Vec::new(), Vec::new(), Vec::new());
        for s in stats {
            nu.push(s.nu as f64);
            if s.nu > 0 {
                kappa.push(s.kappa as f64);
                alpha.push(s.kappa_alpha);
            }
        }
        Self {
            nu: Summary::of(&nu),
            kappa: Summary::of(&kappa),
            kappa_alpha: Summary::of(&alpha),
        }
    }
}

/// Aggregate of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub p: f64,
    pub shots: usize,
    pub failures: usize,
    pub decode_errors: usize,
    pub invalid_corrections: usize,
    pub cycles: usize,
    /// Per-cycle logical error rate.
    pub p_l: f64,
    pub ci: (f64, f64),
    pub lr_band: (f64, f64),
    pub decoder: StatsReport,
    pub optimal: StatsReport,
}

impl RunReport {
    pub fn from_records(p: f64, cycles: usize, records: &[ShotRecord]) -> Self {
        let shots = records.len();
        let failures = records.iter().filter(|r| r.logical_failure).count();
        let rate = |x: f64| per_cycle_rate(x, cycles);
        let (lo, hi) = wilson_interval(failures, shots);
        let (llo, lhi) = likelihood_ratio_interval(failures, shots, LR_FACTOR);
        let p_total = if shots == 0 { 0.0 } else { failures as f64 / shots as f64 };
        Self {
            p,
            shots,
            failures,
            decode_errors: records.iter().filter(|r| r.decode_error).count(),
            invalid_corrections: records.iter().filter(|r| !r.valid).count(),
            cycles,
            p_l: rate(p_total),
            ci: (rate(lo), rate(hi)),
            lr_band: (rate(llo), rate(lhi)),
            decoder: StatsReport::from_stats(records.iter().map(|r| ClusterStats {
                nu: r.nu,
                kappa: r.kappa,
                kappa_alpha: r.kappa_alpha,
            })),
            optimal: StatsReport::from_stats(records.iter().map(|r| ClusterStats {
                nu: r.optimal_nu,
                kappa: r.optimal_kappa,
                kappa_alpha: r.optimal_kappa_alpha,
            })),
        }
    }
}

/// Anything that maps a syndrome to a correction.
pub trait ShotDecoder: Sync {
    fn decode_shot(&self, syndrome: &Syndrome) -> Result<DecodeOutcome, DecodeError>;
}

impl<T: Real> ShotDecoder for Decoder<T> {
    fn decode_shot(&self, syndrome: &Syndrome) -> Result<DecodeOutcome, DecodeError> {
        self.decode(syndrome)
    }
}

/// Settings shared by every grid point of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub shots: usize,
    pub seed: u64,
    /// Syndrome cycles `N_c` covered by one shot.
    pub cycles: usize,
    pub parallel: bool,
}

/// Decodes one sampled shot and scores it.
pub fn run_shot<T: Real, D: ShotDecoder + ?Sized>(
    model: &DetectorModel<T>,
    decoder: &D,
    seed: u64,
    point: u64,
    shot: u64,
) -> ShotRecord {
    let mut rng = shot_rng(seed, point, shot);
    let error = sample_iid_error(model.priors(), &mut rng);
    let syndrome = model.syndrome_of(&error);
    let optimal_sizes: Vec<usize> = error_clusters(model.h(), &error).iter().map(Vec::len).collect();
    let optimal = ClusterStats::from_sizes(&optimal_sizes);
    let mut record = ShotRecord {
        seed,
        point,
        shot,
        syndrome_weight: syndrome.weight(),
        bp_converged: false,
        nu: 0,
        kappa: 0,
        kappa_alpha: 0.0,
        optimal_nu: optimal.nu,
        optimal_kappa: optimal.kappa,
        optimal_kappa_alpha: optimal.kappa_alpha,
        logical_failure: true,
        decode_error: false,
        valid: true,
    };
    match decoder.decode_shot(&syndrome) {
        Ok(out) => {
            record.bp_converged = out.bp_converged;
            record.nu = out.stats.nu;
            record.kappa = out.stats.kappa;
            record.kappa_alpha = out.stats.kappa_alpha;
            record.valid = model.h().mul_support(&out.correction) == syndrome.bits();
            record.logical_failure = !record.valid || model.is_logical_failure(&error, &out.correction);
        }
        Err(_) => record.decode_error = true,
    }
    record
}

/// Runs `settings.shots` shots at grid point `point`; records are in shot
/// order whether or not they were computed in parallel.
pub fn run_point<T: Real, D: ShotDecoder + ?Sized>(
    model: &DetectorModel<T>,
    decoder: &D,
    point: u64,
    settings: &RunSettings,
) -> Vec<ShotRecord> {
    let shot = |i: usize| run_shot(model, decoder, settings.seed, point, i as u64);
    if settings.parallel {
        (0..settings.shots).into_par_iter().map(shot).collect()
    } else {
        (0..settings.shots).map(shot).collect()
    }
}

/// Sweeps a grid of physical error rates, giving every fault of `model`
/// the prior `p` at each point. Returns one report and the shot records per
/// point.
pub fn run_monte_carlo<T: Real>(
    model: &DetectorModel<T>,
    spec: &DecoderSpec<T>,
    p_grid: &[f64],
    settings: &RunSettings,
) -> Result<Vec<(RunReport, Vec<ShotRecord>)>, ExperimentError> {
    let mut out = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        let m = model.with_priors(vec![T::of(p); model.num_faults()])?;
        let decoder = Decoder::new(&m, *spec)?;
        let records = run_point(&m, &decoder, i as u64, settings);
        out.push((RunReport::from_records(p, settings.cycles, &records), records));
    }
    Ok(out)
}

struct Window<T> {
    rows: Vec<usize>,
    faults: Vec<usize>,
    /// Number of leading window faults that are committed.
    commit: usize,
    decoder: Decoder<T>,
}

/// Overlapping `(w, c)` window decoder: decode `w` rounds, keep the faults
/// of the oldest `c` rounds, fold their syndrome into the stream and slide
/// forward by `c`. The last window commits everything it holds.
pub struct WindowedDecoder<T> {
    h: SparseBinaryMatrix,
    windows: Vec<Window<T>>,
}

/// Corrections of a windowed decode.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedOutcome {
    pub correction: Vec<usize>,
    /// Faults committed by each window.
    pub commits: Vec<Vec<usize>>,
    /// Syndrome left after all commits; empty on success.
    pub residual: Vec<usize>,
    pub outcomes: Vec<DecodeOutcome>,
}

impl<T: Real> WindowedDecoder<T> {
    pub fn new(
        model: &DetectorModel<T>,
        layout: &WindowLayout,
        width: usize,
        commit: usize,
        spec: DecoderSpec<T>,
    ) -> Result<Self, ExperimentError> {
        if commit == 0 || width < commit {
            return Err(ExperimentError::WindowShape { width, commit });
        }
        if layout.detector_round.len() != model.num_detectors() {
            return Err(ExperimentError::LayoutSize {
                what: "detectors",
                got: layout.detector_round.len(),
                expected: model.num_detectors(),
            });
        }
        if layout.fault_round.len() != model.num_faults() {
            return Err(ExperimentError::LayoutSize {
                what: "faults",
                got: layout.fault_round.len(),
                expected: model.num_faults(),
            });
        }
        let h = model.h();
        for (f, &round) in layout.fault_round.iter().enumerate() {
            if let Some(&d) = h.col(f).iter().find(|&&d| layout.detector_round[d] < round) {
                return Err(ExperimentError::Causality { fault: f, round, detector: d });
            }
        }
        let llrs = model.channel_llrs();
        let mut windows = Vec::new();
        let mut start = 0;
        loop {
            let end = (start + width).min(layout.rounds);
            let last = end == layout.rounds;
            let keep_until = if last { end } else { start + commit };
            let rows: Vec<usize> = (0..model.num_detectors())
                .filter(|&d| (start..end).contains(&layout.detector_round[d]))
                .collect();
            let mut local = vec![usize::MAX; model.num_detectors()];
            for (i, &d) in rows.iter().enumerate() {
                local[d] = i;
            }
            let mut faults: Vec<usize> = (0..model.num_faults())
                .filter(|&f| (start..end).contains(&layout.fault_round[f]))
                .collect();
            // Committed faults first, keeping index order within each part.
            faults.sort_by_key(|&f| (layout.fault_round[f] >= keep_until, f));
            let commit_count = faults.iter().filter(|&&f| layout.fault_round[f] < keep_until).count();
            let cols = faults
                .iter()
                .map(|&f| h.col(f).iter().filter(|&&d| local[d] != usize::MAX).map(|&d| local[d]).collect())
                .collect();
            let sub = SparseBinaryMatrix::from_columns(rows.len(), cols).expect("window columns are in range");
            let sub_llrs = faults.iter().map(|&f| llrs[f]).collect();
            windows.push(Window {
                rows,
                faults,
                commit: commit_count,
                decoder: Decoder::from_parts(sub, sub_llrs, spec)?,
            });
            if last {
                break;
            }
            start += commit;
        }
        Ok(Self { h: h.clone(), windows })
    }

    pub fn num_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn decode(&self, syndrome: &Syndrome) -> Result<WindowedOutcome, DecodeError> {
        let mut residual = syndrome.to_dense(self.h.num_rows());
        let mut correction = Vec::new();
        let mut commits = Vec::with_capacity(self.windows.len());
        let mut outcomes = Vec::with_capacity(self.windows.len());
        for w in &self.windows {
            let local = Syndrome::new(w.rows.iter().enumerate().filter(|(_, &d)| residual[d]).map(|(i, _)| i));
            let out = w.decoder.decode(&local)?;
            let mut committed: Vec<usize> = out
                .correction
                .iter()
                .filter(|&&i| i < w.commit)
                .map(|&i| w.faults[i])
                .collect();
            committed.sort_unstable();
            for &f in &committed {
                for &d in self.h.col(f) {
                    residual[d] ^= true;
                }
            }
            correction = xor_supports(&correction, &committed);
            commits.push(committed);
            outcomes.push(out);
        }
        Ok(WindowedOutcome {
            correction,
            commits,
            residual: crate::gf2::support_of(&residual),
            outcomes,
        })
    }
}

impl<T: Real> ShotDecoder for WindowedDecoder<T> {
    fn decode_shot(&self, syndrome: &Syndrome) -> Result<DecodeOutcome, DecodeError> {
        let out = self.decode(syndrome)?;
        let sizes: Vec<usize> = out
            .outcomes
            .iter()
            .flat_map(|o| o.clusters.iter().map(|c| c.faults.len()))
            .collect();
        Ok(DecodeOutcome {
            correction: out.correction,
            bp_converged: out.outcomes.iter().all(|o| o.bp_converged),
            bp_iterations: out.outcomes.iter().map(|o| o.bp_iterations).sum(),
            clusters: Vec::new(),
            stats: ClusterStats::from_sizes(&sizes),
        })
    }
}

/// Windowed decode of one syndrome stream.
pub fn overlapping_window_decode<T: Real>(
    model: &DetectorModel<T>,
    layout: &WindowLayout,
    syndrome: &Syndrome,
    width: usize,
    commit: usize,
    spec: DecoderSpec<T>,
) -> Result<WindowedOutcome, ExperimentError> {
    Ok(WindowedDecoder::new(model, layout, width, commit, spec)?.decode(syndrome)?)
}

/// Per-shot cluster statistics of the decoder and of the true error's
/// connected components.
pub fn cluster_stats<T: Real>(
    model: &DetectorModel<T>,
    spec: &DecoderSpec<T>,
    settings: &RunSettings,
) -> Result<(StatsReport, StatsReport, Vec<ShotRecord>), ExperimentError> {
    let decoder = Decoder::new(model, *spec)?;
    let records = run_point(model, &decoder, 0, settings);
    let report = RunReport::from_records(0.0, settings.cycles, &records);
    Ok((report.decoder, report.optimal, records))
}

/// Column names of the sweep CSV.
pub const CSV_HEADER: &str = "p,shots,failures,p_l,ci_lo,ci_hi,mean_nu,mean_kappa,mean_kappa_alpha,opt_mean_nu,opt_mean_kappa,opt_mean_kappa_alpha,decode_errors,lr_lo,lr_hi";

/// Writes `# key = value` comment lines, the header and one row per report.
pub fn write_csv<W: Write>(mut w: W, echo: &[(String, String)], reports: &[RunReport]) -> io::Result<()> {
    for (k, v) in echo {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{:.9e},{:.9e},{:.9e},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.9e},{:.9e}",
            r.p,
            r.shots,
            r.failures,
            r.p_l,
            r.ci.0,
            r.ci.1,
            r.decoder.nu.mean,
            r.decoder.kappa.mean,
            r.decoder.kappa_alpha.mean,
            r.optimal.nu.mean,
            r.optimal.kappa.mean,
            r.optimal.kappa_alpha.mean,
            r.decode_errors,
            r.lr_band.0,
            r.lr_band.1,
        )?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, records: &[ShotRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
