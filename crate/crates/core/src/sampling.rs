//! Irregular, asynchronous observation schemes on top of the dense grid, and
//! the tick CSV format shared with the command line estimator.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microstructure::NoisyPanel;
use crate::path_sim::DenseGrid;
use crate::rng;
use crate::scalar::Scalar;

/// One asset's observation times (seconds) and observed log-prices.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries<T = f64> {
    asset_id: usize,
    times: Vec<T>,
    log_prices: Vec<T>,
}

impl<T: Scalar> TickSeries<T> {
    /// Times must be finite and strictly increasing with at least two ticks.
    pub fn new(asset_id: usize, times: Vec<T>, log_prices: Vec<T>) -> Result<Self> {
        if times.len() != log_prices.len() {
            return Err(Error::arg(format!(
                "asset {asset_id}: {} times but {} prices",
                times.len(),
                log_prices.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::arg(format!("asset {asset_id}: need at least two ticks")));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::arg(format!(
                "asset {asset_id}: times not strictly increasing at tick {}",
                i + 1
            )));
        }
        if times.iter().chain(&log_prices).any(|v| !v.is_finite()) {
            return Err(Error::arg(format!("asset {asset_id}: non-finite tick value")));
        }
        Ok(Self {
            asset_id,
            times,
            log_prices,
        })
    }

    pub fn asset_id(&self) -> usize {
        self.asset_id
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn log_prices(&self) -> &[T] {
        &self.log_prices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of returns.
    pub fn n_increments(&self) -> usize {
        self.times.len() - 1
    }

    /// First and last observation time.
    pub fn window(&self) -> (T, T) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// Log-returns, each paired with the time of its right endpoint.
    pub fn increments(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times[1..]
            .iter()
            .zip(self.log_prices.windows(2))
            .map(|(&t, w)| (t, w[1] - w[0]))
    }

    pub fn with_asset_id(mut self, asset_id: usize) -> Self {
        self.asset_id = asset_id;
        self
    }

    /// Scale every log-price by `s`, so every increment scales by `s`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            asset_id: self.asset_id,
            times: self.times.clone(),
            log_prices: self.log_prices.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> TickSeries<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect();
        TickSeries {
            asset_id: self.asset_id,
            times: conv(&self.times),
            log_prices: conv(&self.log_prices),
        }
    }
}

/// Observation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingSpec {
    /// Independent Poisson arrivals per asset with mean gap in seconds.
    Poisson { mean_gap: f64 },
    /// Every `gap` seconds.
    Regular { gap: f64 },
    /// Two assets on i/n and (i + shift_fraction)/n of the window.
    ShiftedRegular { n: usize, shift_fraction: f64 },
}

impl SamplingSpec {
    /// Expected number of increments per asset over the grid window.
    pub fn expected_increments(&self, grid: &DenseGrid) -> f64 {
        let span = grid.t_end() - grid.t0;
        match *self {
            SamplingSpec::Poisson { mean_gap } => span / mean_gap,
            SamplingSpec::Regular { gap } => span / gap,
            SamplingSpec::ShiftedRegular { n, .. } => n as f64,
        }
    }
}

/// Sample `asset` of the panel at the given grid indices.
pub fn ticks_at_indices(panel: &NoisyPanel<'_>, asset: usize, indices: &[usize]) -> Result<TickSeries> {
    let grid = &panel.base.grid;
    let x = &panel.obs_log_prices[asset];
    TickSeries::new(
        asset,
        indices.iter().map(|&i| grid.time(i)).collect(),
        indices.iter().map(|&i| x[i]).collect(),
    )
}

/// Grid indices of Poisson arrivals with mean gap `mean_gap`, snapped to the
/// nearest grid point, de-duplicated, with both endpoints included.
///
/// The exponential rate is -ln(1 - step/g)/step, so each grid cell is hit
/// with probability step/g and the snapped ticks keep mean gap g.
pub fn poisson_indices<R: Rng>(grid: &DenseGrid, mean_gap: f64, rng: &mut R) -> Result<Vec<usize>> {
    let step = grid.step;
    if !(mean_gap.is_finite() && mean_gap >= step * (1.0 - 1e-12)) {
        return Err(Error::arg(format!(
            "mean gap {mean_gap} s is below the {step} s grid step"
        )));
    }
    let n = grid.n_steps;
    if mean_gap <= step * (1.0 + 1e-12) {
        return Ok((0..=n).collect());
    }
    let rate = -(1.0 - step / mean_gap).ln() / step;
    let exp = Exp::new(rate).map_err(|e| Error::arg(e.to_string()))?;
    let mut out = vec![0usize];
    let horizon = n as f64 + 0.5;
    let mut u = 0.0;
    loop {
        u += rng.sample(exp) / step;
        if u >= horizon {
            break;
        }
        let i = (u.round() as usize).min(n);
        if i > *out.last().expect("non-empty") {
            out.push(i);
        }
    }
    if *out.last().expect("non-empty") != n {
        out.push(n);
    }
    Ok(out)
}

/// Independent Poisson sampling of every asset of the panel.
pub fn sample_poisson(panel: &NoisyPanel<'_>, mean_gap: f64, seed: u64) -> Result<Vec<TickSeries>> {
    (0..panel.dim())
        .map(|j| {
            let mut rng = rng::stream(seed, &[rng::tag::SAMPLING, j as u64]);
            let idx = poisson_indices(&panel.base.grid, mean_gap, &mut rng)?;
            ticks_at_indices(panel, j, &idx)
        })
        .collect()
}

/// Normalized times of the shifted pair: asset 1 at i/n for i = 0..n, asset
/// 2 at (i + shift)/n for i = 1..n-1 with 0 and 1 added.
pub fn shifted_pair_times(n: usize, shift_fraction: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::arg(format!("shifted sampling needs n >= 2, got {n}")));
    }
    if !(0.0..1.0).contains(&shift_fraction) {
        return Err(Error::arg(format!("shift fraction {shift_fraction} outside [0, 1)")));
    }
    let nf = n as f64;
    let first: Vec<f64> = (0..=n).map(|i| i as f64 / nf).collect();
    let mut second = vec![0.0];
    second.extend((1..n).map(|i| (i as f64 + shift_fraction) / nf));
    second.push(1.0);
    Ok((first, second))
}

/// Assets 0 and 1 of the panel on the shifted pair of regular grids. The
/// normalized times must fall on dense grid points.
pub fn sample_shifted_pair(panel: &NoisyPanel<'_>, n: usize, shift_fraction: f64) -> Result<(TickSeries, TickSeries)> {
    if panel.dim() < 2 {
        return Err(Error::arg("shifted-pair sampling needs at least two assets"));
    }
    let (u1, u2) = shifted_pair_times(n, shift_fraction)?;
    let grid = &panel.base.grid;
    let to_idx = |us: &[f64]| -> Result<Vec<usize>> {
        us.iter()
            .map(|&u| {
                let k = u * grid.n_steps as f64;
                if (k - k.round()).abs() > 1e-7 {
                    return Err(Error::arg(format!(
                        "time {u} of the window is not on the {} step grid",
                        grid.n_steps
                    )));
                }
                Ok(k.round() as usize)
            })
            .collect()
    };
    Ok((
        ticks_at_indices(panel, 0, &to_idx(&u1)?)?,
        ticks_at_indices(panel, 1, &to_idx(&u2)?)?,
    ))
}

/// Every `gap` seconds; the last grid point is always kept.
pub fn resample_regular(panel: &NoisyPanel<'_>, gap: f64) -> Result<Vec<TickSeries>> {
    let grid = &panel.base.grid;
    let k = grid.steps_per_gap(gap)?;
    let mut idx: Vec<usize> = (0..=grid.n_steps).step_by(k).collect();
    if *idx.last().expect("non-empty") != grid.n_steps {
        idx.push(grid.n_steps);
    }
    (0..panel.dim()).map(|j| ticks_at_indices(panel, j, &idx)).collect()
}

/// Dispatch on the sampling scheme.
pub fn sample(panel: &NoisyPanel<'_>, spec: &SamplingSpec, seed: u64) -> Result<Vec<TickSeries>> {
    match *spec {
        SamplingSpec::Poisson { mean_gap } => sample_poisson(panel, mean_gap, seed),
        SamplingSpec::Regular { gap } => resample_regular(panel, gap),
        SamplingSpec::ShiftedRegular { n, shift_fraction } => {
            let (a, b) = sample_shifted_pair(panel, n, shift_fraction)?;
            Ok(vec![a, b])
        }
    }
}

/// Write `asset,time_s,log_price` rows sorted by asset then time.
pub fn write_ticks<W: Write>(out: W, series: &[TickSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["asset", "time_s", "log_price"]).map_err(ser)?;
    let mut order: Vec<&TickSeries> = series.iter().collect();
    order.sort_by_key(|s| s.asset_id());
    for s in order {
        for (t, x) in s.times().iter().zip(s.log_prices()) {
            w.write_record([s.asset_id().to_string(), format!("{t}"), format!("{x:.17e}")])
                .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| Error::Serde(format!("flushing tick csv: {e}")))
}

/// Read a tick file. `name` labels errors; rows are counted from 1 at the
/// header. Asset ids must be 0..d-1, rows sorted by (asset, time_s).
pub fn read_ticks<R: Read>(input: R, name: &str) -> Result<Vec<TickSeries>> {
    let bad = |row: usize, message: String| Error::Input {
        path: name.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let col = |h: &str| {
        headers
            .iter()
            .position(|x| x == h)
            .ok_or_else(|| bad(1, format!("missing column `{h}`")))
    };
    let (ca, ct, cx) = (col("asset")?, col("time_s")?, col("log_price")?);
    let mut groups: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| bad(row, e.to_string()))?;
        let field = |c: usize| rec.get(c).ok_or_else(|| bad(row, "short row".into()));
        let asset: usize = field(ca)?
            .parse()
            .map_err(|_| bad(row, format!("bad asset id `{}`", &rec[ca])))?;
        let num = |c: usize, what: &str| -> Result<f64> {
            let s = field(c)?;
            let v: f64 = s.parse().map_err(|_| bad(row, format!("bad {what} `{s}`")))?;
            if !v.is_finite() {
                return Err(bad(row, format!("non-finite {what}")));
            }
            Ok(v)
        };
        let (t, x) = (num(ct, "time")?, num(cx, "log-price")?);
        if asset == groups.len() {
            groups.push((Vec::new(), Vec::new(), row));
        } else if asset + 1 != groups.len() {
            return Err(bad(
                row,
                format!("asset {asset} out of order; expected ids 0..d-1 sorted"),
            ));
        }
        let g = groups.last_mut().expect("group exists");
        if let Some(&prev) = g.0.last() {
            if t <= prev {
                return Err(bad(row, format!("time {t} not after previous time {prev}")));
            }
        }
        g.0.push(t);
        g.1.push(x);
        g.2 = row;
    }
    if groups.is_empty() {
        return Err(bad(1, "no tick rows".into()));
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(j, (t, x, last_row))| {
            TickSeries::new(j, t, x).map_err(|e| bad(last_row, e.to_string()))
        })
        .collect()
}
