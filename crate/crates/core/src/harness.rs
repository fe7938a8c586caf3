//! Monte Carlo sweeps and CSV output.
//!
//! Every trial owns a stream from [`trial_rng`] keyed by the sweep point and
//! the trial index. Per-trial outcomes are collected in trial order before
//! they are summed, so the output is bit-identical for a given config
//! regardless of the thread count.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::analysis::{
    capacity_miso, dof_slope, fano_rate_lower_bound, loglog_slope, probe_dmin, rate_lower_bound_large_k, rate_total,
    DofPoint, DofSetup,
};
use crate::baselines::{mrc_transmit_decode, successive_transmit_decode, BaselineConfig, BaselineScheme};
use crate::error::{invalid, Result};
use crate::model::{db_to_linear, draw_channel_with, rayleigh_gain, trial_rng, GainMapping, NoiseModel, PamConstellation};
use crate::multicast::{
    multicast_decode_s3, multicast_receive_decode, multicast_throughput, multicast_transmit, DEFAULT_ALPHA,
};
use crate::scheme::{symbols_per_use, transmit_and_decode_all, DecoderKind, SymbolBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Ser,
    Rate,
    Dmin,
    Dof,
    Multicast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub k: usize,
    pub q_s: u32,
    /// SNR grid in dB. The DoF sweep reads it as the power grid `10 log₁₀ P`.
    pub zeta_db_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub decoder: DecoderKind,
    /// `None` writes nothing; the caller prints the returned CSV.
    pub output_path: Option<PathBuf>,
    pub antennas: usize,
    pub mapping: GainMapping,
    /// Zero gives a noiseless channel with `P = 10^{ζ/10}`.
    pub sigma2: f64,
    pub epsilon: f64,
    /// Half-sizes swept by the minimum-distance probe.
    pub dmin_q_grid: Vec<u32>,
    pub emit_plot_data: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Ser,
            k: 4,
            q_s: 2,
            zeta_db_grid: (0..=15).map(|i| 2.0 * i as f64).collect(),
            trials: 100_000,
            seed: 1,
            decoder: DecoderKind::Weight,
            output_path: None,
            antennas: 2,
            mapping: GainMapping::Independent,
            sigma2: 1.0,
            epsilon: 0.1,
            dmin_q_grid: vec![2, 4, 8, 16],
            emit_plot_data: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.k < 2 {
            return Err(invalid(format!("k must be at least 2, got {}", self.k)));
        }
        if self.q_s == 0 {
            return Err(invalid("q_s must be at least 1"));
        }
        if self.antennas < 2 {
            return Err(invalid(format!("antennas must be at least 2, got {}", self.antennas)));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(invalid(format!("sigma2 must be non-negative, got {}", self.sigma2)));
        }
        if self.experiment == ExperimentKind::Dmin {
            if self.dmin_q_grid.is_empty() || self.dmin_q_grid.contains(&0) {
                return Err(invalid("the q_s grid must be nonempty and positive"));
            }
        } else if self.zeta_db_grid.is_empty() || self.zeta_db_grid.iter().any(|z| !z.is_finite()) {
            return Err(invalid("the SNR grid must be nonempty and finite"));
        }
        Ok(())
    }

    /// Per-symbol power at `zeta_db`.
    pub fn power_at(&self, zeta_db: f64) -> f64 {
        let reference = if self.sigma2 > 0.0 { self.sigma2 } else { 1.0 };
        reference * db_to_linear(zeta_db)
    }

    fn noise(&self) -> Option<NoiseModel> {
        (self.sigma2 > 0.0).then(|| NoiseModel::new(self.sigma2).expect("validated"))
    }
}

/// Parses `start:step:stop`, a comma list, or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| invalid(format!("not a number: {s:?}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0 && step.is_finite()) || stop < start {
                return Err(invalid(format!("bad grid {text:?}: need step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(invalid(format!("bad grid {text:?}: expected start:step:stop"))),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("bad grid {text:?}")));
    }
    Ok(grid)
}

/// Nine significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// A row type with a fixed CSV schema. `plot` appends the extra columns
/// requested by `--emit-plot-data`.
pub trait CsvRecord {
    fn header(plot: bool) -> Vec<&'static str>;
    fn fields(&self, plot: bool) -> Vec<String>;
}

pub fn write_csv<W: Write, T: CsvRecord>(out: W, rows: &[T], plot: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(T::header(plot))?;
    for row in rows {
        w.write_record(row.fields(plot))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: CsvRecord>(rows: &[T], plot: bool) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, plot)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Binomial standard error `√(p(1−p)/n)`.
pub fn binomial_std_err(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub zeta_db: f64,
    pub scheme: &'static str,
    pub ser: Option<f64>,
    pub ser_std_err: Option<f64>,
    pub rate_bits_per_use: Option<f64>,
    pub normalized_rate: Option<f64>,
    pub bound: Option<f64>,
    /// Symbol decisions behind `ser`, or channel draws for closed-form rows.
    pub trials_used: usize,
    pub mean_power_per_use: Option<f64>,
}

impl SweepRow {
    fn empty(zeta_db: f64, scheme: &'static str, trials_used: usize) -> Self {
        Self {
            zeta_db,
            scheme,
            ser: None,
            ser_std_err: None,
            rate_bits_per_use: None,
            normalized_rate: None,
            bound: None,
            trials_used,
            mean_power_per_use: None,
        }
    }

    fn with_ser(mut self, errors: usize, decisions: usize) -> Self {
        let ser = errors as f64 / decisions as f64;
        self.ser = Some(ser);
        self.ser_std_err = Some(binomial_std_err(ser, decisions));
        self
    }
}

impl CsvRecord for SweepRow {
    fn header(plot: bool) -> Vec<&'static str> {
        let mut h = vec![
            "zeta_db",
            "scheme",
            "ser",
            "ser_std_err",
            "rate_bits_per_use",
            "normalized_rate",
            "bound",
            "trials_used",
            "mean_power_per_use",
        ];
        if plot {
            h.extend(["zeta_linear", "log10_ser"]);
        }
        h
    }

    fn fields(&self, plot: bool) -> Vec<String> {
        let mut f = vec![
            format_float(self.zeta_db),
            self.scheme.to_string(),
            format_opt(self.ser),
            format_opt(self.ser_std_err),
            format_opt(self.rate_bits_per_use),
            format_opt(self.normalized_rate),
            format_opt(self.bound),
            self.trials_used.to_string(),
            format_opt(self.mean_power_per_use),
        ];
        if plot {
            f.push(format_float(db_to_linear(self.zeta_db)));
            f.push(format_opt(self.ser.filter(|s| *s > 0.0).map(f64::log10)));
        }
        f
    }
}

pub const SCHEME_ID: &str = "id";
pub const SCHEME_MRC: &str = "mrc_miso";
pub const SCHEME_SUCCESSIVE: &str = "successive";
pub const SCHEME_GAUSSIAN_LB: &str = "gaussian_lb";
pub const SCHEME_GAUSSIAN_EXACT: &str = "gaussian_exact";
pub const SCHEME_CAPACITY_FLOOR: &str = "capacity_floor";
pub const SCHEME_FANO: &str = "fano_discrete";

#[derive(Debug, Clone, Copy, Default)]
struct SerTrial {
    id_errors: usize,
    mrc_errors: usize,
    successive_errors: usize,
    power: f64,
}

/// SER of the scheme, the 2×1 MRC reference and two-symbol successive
/// decoding, one row per (ζ, scheme).
pub fn run_ser_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let noise = cfg.noise();
    let mut rows = Vec::with_capacity(3 * cfg.zeta_db_grid.len());
    for (point, &zeta_db) in cfg.zeta_db_grid.iter().enumerate() {
        let p = cfg.power_at(zeta_db);
        let id_alphabet = PamConstellation::with_power(p, cfg.q_s)?;
        let mrc_alphabet = BaselineConfig::new(BaselineScheme::MrcMiso, p)?.alphabet(cfg.q_s)?;
        let sd_alphabet = BaselineConfig::new(BaselineScheme::Successive, p)?.alphabet(cfg.q_s)?;
        let trials: Vec<SerTrial> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<SerTrial> {
                let mut rng = trial_rng(cfg.seed, point as u64, t as u64);
                let ch = draw_channel_with(cfg.k, cfg.antennas, cfg.mapping, &mut rng)?;
                let block = SymbolBlock::draw(cfg.k, &id_alphabet, &mut rng)?;
                let out = transmit_and_decode_all(&block, &ch, noise.as_ref(), cfg.decoder, &id_alphabet, &mut rng)?;
                let s = mrc_alphabet.sample(&mut rng);
                let mrc = mrc_transmit_decode(s, &ch.g, &mrc_alphabet, cfg.sigma2, &mut rng);
                let (s1, s2) = (sd_alphabet.sample(&mut rng), sd_alphabet.sample(&mut rng));
                let (d1, d2) =
                    successive_transmit_decode(s1, s2, ch.h[0], ch.h[1], &sd_alphabet, cfg.sigma2, &mut rng);
                Ok(SerTrial {
                    id_errors: out.symbol_errors(&block),
                    mrc_errors: (mrc != s) as usize,
                    successive_errors: (d1 != s1) as usize + (d2 != s2) as usize,
                    power: out.plan.mean_power_per_use(),
                })
            })
            .collect::<Result<_>>()?;

        let mut total = SerTrial::default();
        for t in &trials {
            total.id_errors += t.id_errors;
            total.mrc_errors += t.mrc_errors;
            total.successive_errors += t.successive_errors;
            total.power += t.power;
        }
        let n = cfg.trials;
        let bits = (2.0 * cfg.q_s as f64).log2();

        let mut id = SweepRow::empty(zeta_db, SCHEME_ID, n * cfg.k).with_ser(total.id_errors, n * cfg.k);
        id.rate_bits_per_use = Some(symbols_per_use(cfg.k) * bits);
        id.mean_power_per_use = Some(total.power / n as f64);
        rows.push(id);

        let mut mrc = SweepRow::empty(zeta_db, SCHEME_MRC, n).with_ser(total.mrc_errors, n);
        mrc.rate_bits_per_use = Some(bits);
        mrc.mean_power_per_use = Some(2.0 * p);
        rows.push(mrc);

        let mut sd = SweepRow::empty(zeta_db, SCHEME_SUCCESSIVE, 2 * n).with_ser(total.successive_errors, 2 * n);
        sd.rate_bits_per_use = Some(2.0 * bits);
        sd.mean_power_per_use = Some(2.0 * p);
        rows.push(sd);
    }
    Ok(rows)
}

/// Gaussian-input rates over `trials` channel draws (the same draws at every
/// ζ), the `C − 1` floor, and the Fano bound of the discrete scheme from
/// a Monte Carlo symbol error rate. Rates are normalized by the mean MISO
/// capacity at `P_s = 2P`. The `gaussian_lb` row is the large-`K` bound
/// with `Σh² = Σg²`, unclamped, so it can dip below zero at low SNR.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let Some(noise) = cfg.noise() else {
        return Err(invalid("the rate sweep needs sigma2 > 0"));
    };
    let channels = (0..cfg.trials)
        .into_par_iter()
        .map(|t| draw_channel_with(cfg.k, cfg.antennas, cfg.mapping, &mut trial_rng(cfg.seed, 0, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.trials as f64;
    let mut rows = Vec::with_capacity(4 * cfg.zeta_db_grid.len());
    for (point, &zeta_db) in cfg.zeta_db_grid.iter().enumerate() {
        let p = cfg.power_at(zeta_db);
        let (mut c, mut lb, mut exact) = (0.0, 0.0, 0.0);
        for ch in &channels {
            c += capacity_miso(&ch.g, 2.0 * p, cfg.sigma2);
            lb += rate_lower_bound_large_k(ch.sum_g2(), p, cfg.sigma2);
            exact += rate_total(&ch.h, p, cfg.sigma2);
        }
        let (c, lb, exact) = (c / n, lb / n, exact / n);
        let floor = 1.0 - 1.0 / c;

        let mut row = SweepRow::empty(zeta_db, SCHEME_GAUSSIAN_LB, cfg.trials);
        row.rate_bits_per_use = Some(lb);
        row.normalized_rate = Some(lb / c);
        row.bound = Some(floor);
        rows.push(row);

        let mut row = SweepRow::empty(zeta_db, SCHEME_GAUSSIAN_EXACT, cfg.trials);
        row.rate_bits_per_use = Some(exact);
        row.normalized_rate = Some(exact / c);
        row.bound = Some(floor);
        rows.push(row);

        let mut row = SweepRow::empty(zeta_db, SCHEME_CAPACITY_FLOOR, cfg.trials);
        row.rate_bits_per_use = Some(c - 1.0);
        row.normalized_rate = Some((c - 1.0) / c);
        row.bound = Some(floor);
        rows.push(row);

        let alphabet = PamConstellation::with_power(p, cfg.q_s)?;
        let errors = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<usize> {
                let mut rng = trial_rng(cfg.seed, point as u64 + 1, t as u64);
                let block = SymbolBlock::draw(cfg.k, &alphabet, &mut rng)?;
                let out = transmit_and_decode_all(&block, &channels[t], Some(&noise), cfg.decoder, &alphabet, &mut rng)?;
                Ok(out.symbol_errors(&block))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        let decisions = cfg.trials * cfg.k;
        let mut row = SweepRow::empty(zeta_db, SCHEME_FANO, decisions).with_ser(errors, decisions);
        let rate = fano_rate_lower_bound(row.ser.expect("set"), cfg.q_s)? * symbols_per_use(cfg.k);
        row.rate_bits_per_use = Some(rate);
        row.normalized_rate = Some(rate / c);
        row.bound = Some(floor);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DminRow {
    pub q_s: u32,
    pub samples: usize,
    /// Minimum of `d²_min Q² / (h² A²)` over the draws.
    pub floor: f64,
    pub median: f64,
}

impl CsvRecord for DminRow {
    fn header(plot: bool) -> Vec<&'static str> {
        let mut h = vec!["q_s", "samples", "dmin2_scaled_floor", "dmin2_scaled_median"];
        if plot {
            h.extend(["log2_q_s", "log10_floor"]);
        }
        h
    }

    fn fields(&self, plot: bool) -> Vec<String> {
        let mut f = vec![
            self.q_s.to_string(),
            self.samples.to_string(),
            format_float(self.floor),
            format_float(self.median),
        ];
        if plot {
            f.push(format_float((self.q_s as f64).log2()));
            f.push(format_opt((self.floor > 0.0).then(|| self.floor.log10())));
        }
        f
    }
}

/// Log-log slope of the scaled floor against `q_s`.
pub fn dmin_floor_slope(rows: &[DminRow]) -> f64 {
    let q: Vec<f64> = rows.iter().map(|r| r.q_s as f64).collect();
    let floor: Vec<f64> = rows.iter().map(|r| r.floor).collect();
    loglog_slope(&q, &floor)
}

/// Minimum-distance probe over `dmin_q_grid` with `trials` draws per size and
/// `k − 2` interferers.
pub fn run_dmin_probe(cfg: &ExperimentConfig) -> Result<Vec<DminRow>> {
    cfg.validate()?;
    if cfg.k < 3 {
        return Err(invalid("the dmin probe needs k >= 3"));
    }
    cfg.dmin_q_grid
        .iter()
        .map(|&q_s| {
            let report = probe_dmin(q_s, cfg.trials, cfg.k - 2, cfg.seed)?;
            let mut sorted = report.dmin2_scaled.clone();
            sorted.sort_by(f64::total_cmp);
            Ok(DminRow { q_s, samples: cfg.trials, floor: report.floor(), median: sorted[sorted.len() / 2] })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofRow {
    pub point: DofPoint,
    /// `½(1 − ε)`.
    pub target: f64,
}

impl CsvRecord for DofRow {
    fn header(plot: bool) -> Vec<&'static str> {
        let mut h = vec!["p", "q_s", "p_e", "fano_bound", "slope", "target"];
        if plot {
            h.extend(["p_db", "half_log2_p"]);
        }
        h
    }

    fn fields(&self, plot: bool) -> Vec<String> {
        let pt = &self.point;
        let mut f = vec![
            format_float(pt.p),
            pt.q_s.to_string(),
            format_float(pt.p_e),
            format_float(pt.fano_bound),
            format_float(pt.slope),
            format_float(self.target),
        ];
        if plot {
            f.push(format_float(10.0 * pt.p.log10()));
            f.push(format_float(0.5 * pt.p.log2()));
        }
        f
    }
}

/// DoF sweep with `P = 10^{ζ/10} σ²` for every grid entry.
pub fn run_dof_sweep(cfg: &ExperimentConfig) -> Result<Vec<DofRow>> {
    cfg.validate()?;
    let Some(noise) = cfg.noise() else {
        return Err(invalid("the DoF sweep needs sigma2 > 0"));
    };
    let grid: Vec<f64> = cfg.zeta_db_grid.iter().map(|&z| cfg.power_at(z)).collect();
    let setup = DofSetup { k: cfg.k, trials: cfg.trials, seed: cfg.seed, sigma2: noise.sigma2() };
    let target = 0.5 * (1.0 - cfg.epsilon);
    Ok(dof_slope(&grid, cfg.epsilon, &setup)?
        .into_iter()
        .map(|point| DofRow { point, target })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticastRow {
    pub zeta_db: f64,
    /// `s₁` at user 1.
    pub ser_user1: f64,
    /// `s₂` at user 2.
    pub ser_user2: f64,
    /// `s₃` at user 3.
    pub ser_user3: f64,
    /// `s₃` errors when user 3 decoded `(s₁, s₂)` correctly.
    pub ser_s3_pair_ok: Option<f64>,
    /// `s₃` errors when it did not.
    pub ser_s3_pair_err: Option<f64>,
    pub throughput: f64,
    pub trials: usize,
}

impl CsvRecord for MulticastRow {
    fn header(plot: bool) -> Vec<&'static str> {
        let mut h = vec![
            "zeta_db",
            "ser_user1",
            "ser_user2",
            "ser_user3",
            "ser_s3_pair_ok",
            "ser_s3_pair_err",
            "symbols_per_use",
            "trials",
        ];
        if plot {
            h.push("zeta_linear");
        }
        h
    }

    fn fields(&self, plot: bool) -> Vec<String> {
        let mut f = vec![
            format_float(self.zeta_db),
            format_float(self.ser_user1),
            format_float(self.ser_user2),
            format_float(self.ser_user3),
            format_opt(self.ser_s3_pair_ok),
            format_opt(self.ser_s3_pair_err),
            format_float(self.throughput),
            self.trials.to_string(),
        ];
        if plot {
            f.push(format_float(db_to_linear(self.zeta_db)));
        }
        f
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MulticastTrial {
    e1: bool,
    e2: bool,
    e3: bool,
    pair3_wrong: bool,
}

/// Three users with independent Rayleigh gains, every symbol on the
/// `q_s` alphabet at power `P`.
pub fn run_multicast(cfg: &ExperimentConfig) -> Result<Vec<MulticastRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.zeta_db_grid.len());
    for (point, &zeta_db) in cfg.zeta_db_grid.iter().enumerate() {
        let alphabet = PamConstellation::with_power(cfg.power_at(zeta_db), cfg.q_s)?;
        let trials: Vec<MulticastTrial> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<MulticastTrial> {
                let mut rng = trial_rng(cfg.seed, point as u64, t as u64);
                let s: Vec<f64> = (0..3).map(|_| alphabet.sample(&mut rng)).collect();
                let h: Vec<f64> = (0..3).map(|_| rayleigh_gain(&mut rng)).collect();
                let frame = multicast_transmit(s[0], s[1], s[2], DEFAULT_ALPHA)?;
                let u1 = multicast_receive_decode(&frame, h[0], cfg.sigma2, &mut rng, &alphabet);
                let u2 = multicast_receive_decode(&frame, h[1], cfg.sigma2, &mut rng, &alphabet);
                let u3 = multicast_receive_decode(&frame, h[2], cfg.sigma2, &mut rng, &alphabet);
                let s3 = multicast_decode_s3(u3.y[0], h[2], u3.pair.0, u3.pair.1, DEFAULT_ALPHA, &alphabet);
                Ok(MulticastTrial {
                    e1: u1.pair.0 != s[0],
                    e2: u2.pair.1 != s[1],
                    e3: s3 != s[2],
                    pair3_wrong: u3.pair != (s[0], s[1]),
                })
            })
            .collect::<Result<_>>()?;
        let count = |f: &dyn Fn(&MulticastTrial) -> bool| trials.iter().filter(|t| f(t)).count();
        let n = cfg.trials;
        let wrong = count(&|t| t.pair3_wrong);
        let e3_wrong = count(&|t| t.pair3_wrong && t.e3);
        let e3_ok = count(&|t| !t.pair3_wrong && t.e3);
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        rows.push(MulticastRow {
            zeta_db,
            ser_user1: count(&|t| t.e1) as f64 / n as f64,
            ser_user2: count(&|t| t.e2) as f64 / n as f64,
            ser_user3: count(&|t| t.e3) as f64 / n as f64,
            ser_s3_pair_ok: ratio(e3_ok, n - wrong),
            ser_s3_pair_err: ratio(e3_wrong, wrong),
            throughput: multicast_throughput(),
            trials: n,
        });
    }
    Ok(rows)
}

/// Runs the configured experiment and returns its CSV. Also writes the CSV
/// to `output_path` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<String> {
    let plot = cfg.emit_plot_data;
    let csv = match cfg.experiment {
        ExperimentKind::Ser => csv_string(&run_ser_sweep(cfg)?, plot)?,
        ExperimentKind::Rate => csv_string(&run_rate_sweep(cfg)?, plot)?,
        ExperimentKind::Dmin => csv_string(&run_dmin_probe(cfg)?, plot)?,
        ExperimentKind::Dof => csv_string(&run_dof_sweep(cfg)?, plot)?,
        ExperimentKind::Multicast => csv_string(&run_multicast(cfg)?, plot)?,
    };
    if let Some(path) = &cfg.output_path {
        File::create(path)?.write_all(csv.as_bytes())?;
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: kind,
            zeta_db_grid: vec![0.0, 10.0, 20.0],
            trials: 500,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_grid("0:0.1:0.3").unwrap().len(), 4);
        assert_eq!(parse_grid("5").unwrap(), vec![5.0]);
        assert_eq!(parse_grid("0,10,30").unwrap(), vec![0.0, 10.0, 30.0]);
        for bad in ["", "a:1:2", "0:0:5", "5:1:0", "1:2", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn float_format_has_nine_digits() {
        assert_eq!(format_float(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(format_float(0.0), "0.00000000e0");
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        for cfg in [
            ExperimentConfig { trials: 0, ..Default::default() },
            ExperimentConfig { k: 1, ..Default::default() },
            ExperimentConfig { zeta_db_grid: vec![], ..Default::default() },
            ExperimentConfig { antennas: 1, ..Default::default() },
            ExperimentConfig { sigma2: -1.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn ser_rows_are_consistent() {
        let rows = run_ser_sweep(&small(ExperimentKind::Ser)).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            let ser = r.ser.unwrap();
            assert!((0.0..=1.0).contains(&ser));
            assert_eq!(r.ser_std_err.unwrap(), binomial_std_err(ser, r.trials_used));
        }
    }

    #[test]
    fn noiseless_ser_is_zero() {
        let cfg = ExperimentConfig { sigma2: 0.0, ..small(ExperimentKind::Ser) };
        let rows = run_ser_sweep(&cfg).unwrap();
        assert!(rows.iter().filter(|r| r.scheme == SCHEME_ID).all(|r| r.ser == Some(0.0)));
    }

    #[test]
    fn csv_is_reproducible_and_shaped() {
        let cfg = small(ExperimentKind::Multicast);
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a, run_experiment(&cfg).unwrap());
        let mut lines = a.lines();
        assert_eq!(lines.next().unwrap().split(',').count(), MulticastRow::header(false).len());
        assert_eq!(lines.count(), 3);
        let plot = run_experiment(&ExperimentConfig { emit_plot_data: true, ..cfg }).unwrap();
        assert_eq!(plot.lines().next().unwrap().split(',').count(), MulticastRow::header(true).len());
    }

    #[test]
    fn rate_rows_floor_is_exact() {
        let rows = run_rate_sweep(&small(ExperimentKind::Rate)).unwrap();
        for r in rows.iter().filter(|r| r.scheme == SCHEME_CAPACITY_FLOOR) {
            assert_eq!(r.normalized_rate, r.bound);
        }
    }

    #[test]
    fn rate_sweep_rejects_noiseless() {
        let cfg = ExperimentConfig { sigma2: 0.0, ..small(ExperimentKind::Rate) };
        assert!(run_rate_sweep(&cfg).is_err());
    }

    #[test]
    fn unwritable_output_is_an_error() {
        let cfg = ExperimentConfig {
            output_path: Some(PathBuf::from("/nonexistent-dir/out.csv")),
            ..small(ExperimentKind::Multicast)
        };
        assert!(matches!(run_experiment(&cfg), Err(crate::error::Error::Io(_))));
    }
}
