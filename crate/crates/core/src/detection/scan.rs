use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointer::{window_integral, Axis, BranchState};
use crate::rng::{self, domain};

/// Fibre scan geometry and count level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// First fibre position, µm.
    pub start: f64,
    pub step: f64,
    pub n_points: usize,
    pub repeats: usize,
    pub theta: f64,
    /// Fibre core diameter, µm.
    pub fiber_core: f64,
    /// Expected counts per dwell at the profile peak, per fibre. The 50:50
    /// split between the x and y fibres is folded into this number.
    pub mean_rate: f64,
    /// Seconds per reading; carried for bookkeeping only.
    pub dwell: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            start: -1500.0,
            step: 50.0,
            n_points: 61,
            repeats: 16,
            theta: 0.0,
            fiber_core: 50.0,
            mean_rate: 400.0,
            dwell: 1.0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("scan: {m}")));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("step must be > 0");
        }
        if self.n_points < 3 {
            return bad("n_points must be >= 3");
        }
        if self.repeats < 1 {
            return bad("repeats must be >= 1");
        }
        if !(self.fiber_core > 0.0) {
            return bad("fiber_core must be > 0");
        }
        if !(self.mean_rate >= 0.0) || !self.mean_rate.is_finite() {
            return bad("mean_rate must be finite and >= 0");
        }
        if !self.start.is_finite() || !self.theta.is_finite() {
            return bad("start and theta must be finite");
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points)
            .map(|i| self.start + self.step * i as f64)
            .collect()
    }

    pub fn span(&self) -> f64 {
        self.step * (self.n_points - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    None,
    RandomWalk,
}

/// Slow drift of the beam centre, one Gaussian step per profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftModel {
    pub kind: DriftKind,
    /// µm per profile.
    pub step_sigma: f64,
    pub initial_offset: f64,
}

impl Default for DriftModel {
    fn default() -> Self {
        DriftModel::none()
    }
}

impl DriftModel {
    pub fn none() -> Self {
        DriftModel {
            kind: DriftKind::None,
            step_sigma: 0.0,
            initial_offset: 0.0,
        }
    }

    pub fn random_walk(step_sigma: f64) -> Self {
        DriftModel {
            kind: DriftKind::RandomWalk,
            step_sigma,
            initial_offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_sigma >= 0.0)
            || !self.step_sigma.is_finite()
            || !self.initial_offset.is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "drift: step_sigma must be finite and >= 0, got {}",
                self.step_sigma
            )));
        }
        Ok(())
    }

    /// Beam-centre offsets for profiles `0..n`; profile 0 sits at the
    /// initial offset and each later profile adds one step.
    pub fn offsets(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut pos = self.initial_offset;
        for i in 0..n {
            if i > 0 && self.kind == DriftKind::RandomWalk && self.step_sigma > 0.0 {
                let mut r = rng::stream(seed, &[domain::DRIFT, i as u64]);
                let step = Normal::new(0.0, self.step_sigma).expect("validated sigma");
                pos += step.sample(&mut r);
            }
            out.push(pos);
        }
        out
    }
}

/// Counts from one scan, `counts[position][repeat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub theta: f64,
    pub axis: Axis,
    pub positions: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub seed: u64,
}

impl ScanRecord {
    pub fn n_points(&self) -> usize {
        self.positions.len()
    }

    pub fn repeats(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Counts of one repeat across all positions.
    pub fn profile(&self, repeat: usize) -> Vec<f64> {
        self.counts.iter().map(|row| row[repeat] as f64).collect()
    }

    /// Per-position mean over repeats.
    pub fn mean_profile(&self) -> Vec<f64> {
        let r = self.repeats() as f64;
        self.counts
            .iter()
            .map(|row| row.iter().sum::<u64>() as f64 / r)
            .collect()
    }

    fn check_shape(&self) -> Result<()> {
        let r = self.repeats();
        if self.counts.len() != self.positions.len()
            || r == 0
            || self.counts.iter().any(|row| row.len() != r)
        {
            return Err(Error::InvalidInput(
                "scan record has inconsistent dimensions".into(),
            ));
        }
        Ok(())
    }

    /// Rows `theta_deg,axis,position_um,repeat_idx,counts`, position-major.
    pub fn write_csv_rows(&self, out: &mut Vec<u8>) {
        for (p, row) in self.positions.iter().zip(&self.counts) {
            for (r, c) in row.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", self.theta, self.axis, p, r, c)
                    .expect("write to Vec");
            }
        }
    }
}

pub const SCAN_CSV_HEADER: &str = "theta_deg,axis,position_um,repeat_idx,counts";

pub fn write_scan_csv(path: &Path, records: &[ScanRecord]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{SCAN_CSV_HEADER}").expect("write to Vec");
    for r in records {
        r.check_shape()?;
        r.write_csv_rows(&mut out);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Deserialize)]
struct ScanRow {
    theta_deg: f64,
    axis: String,
    position_um: f64,
    repeat_idx: usize,
    counts: u64,
}

/// Reads a scan CSV; rows are grouped into one record per `(theta, axis)`
/// in order of first appearance. The seed is not stored in the CSV and is
/// left at 0.
pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e))?
        .clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SCAN_CSV_HEADER {
        return Err(Error::format(
            path,
            format!("expected header {SCAN_CSV_HEADER:?}"),
        ));
    }
    struct Acc {
        theta: f64,
        axis: Axis,
        positions: Vec<f64>,
        cells: Vec<(usize, usize, u64)>,
    }
    let mut groups: Vec<Acc> = Vec::new();
    for (line, row) in reader.deserialize::<ScanRow>().enumerate() {
        let row = row.map_err(|e| Error::format(path, format!("row {}: {e}", line + 2)))?;
        let axis: Axis = row
            .axis
            .parse()
            .map_err(|e: Error| Error::format(path, e))?;
        let g = match groups
            .iter_mut()
            .position(|g| g.theta == row.theta_deg && g.axis == axis)
        {
            Some(i) => &mut groups[i],
            None => {
                groups.push(Acc {
                    theta: row.theta_deg,
                    axis,
                    positions: Vec::new(),
                    cells: Vec::new(),
                });
                groups.last_mut().expect("just pushed")
            }
        };
        let pi = match g.positions.iter().position(|&p| p == row.position_um) {
            Some(i) => i,
            None => {
                g.positions.push(row.position_um);
                g.positions.len() - 1
            }
        };
        g.cells.push((pi, row.repeat_idx, row.counts));
    }
    groups
        .into_iter()
        .map(|g| {
            let repeats = g.cells.iter().map(|c| c.1).max().map_or(0, |m| m + 1);
            let mut counts = vec![vec![None; repeats]; g.positions.len()];
            for (p, r, c) in g.cells {
                if counts[p][r].replace(c).is_some() {
                    return Err(Error::format(
                        path,
                        format!("duplicate cell at position index {p}, repeat {r}"),
                    ));
                }
            }
            let counts = counts
                .into_iter()
                .map(|row| row.into_iter().collect::<Option<Vec<u64>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::format(path, "missing (position, repeat) cells"))?;
            Ok(ScanRecord {
                theta: g.theta,
                axis: g.axis,
                positions: g.positions,
                counts,
                seed: 0,
            })
        })
        .collect()
}

/// Maps fibre position to expected counts per dwell: the marginal intensity
/// integrated over the fibre core, scaled so its maximum equals
/// `mean_rate`.
#[derive(Debug, Clone)]
pub struct RateModel<'a> {
    state: &'a BranchState,
    axis: Axis,
    core: f64,
    scale: f64,
    peak_position: f64,
}

impl<'a> RateModel<'a> {
    pub fn new(state: &'a BranchState, axis: Axis, config: &ScanConfig) -> Result<Self> {
        config.validate()?;
        let core = config.fiber_core;
        let collect = |p: f64| window_integral(state, axis, p - 0.5 * core, p + 0.5 * core);
        let (peak_position, peak) = find_peak(state, axis, &collect)?;
        let scale = if config.mean_rate == 0.0 {
            0.0
        } else if peak > 0.0 {
            config.mean_rate / peak
        } else {
            return Err(Error::VanishingPostSelection { probability: peak });
        };
        Ok(RateModel {
            state,
            axis,
            core,
            scale,
            peak_position,
        })
    }

    pub fn peak_position(&self) -> f64 {
        self.peak_position
    }

    /// Expected counts with the fibre centred at `position`.
    pub fn rate(&self, position: f64) -> Result<f64> {
        if self.scale == 0.0 {
            return Ok(0.0);
        }
        Ok(self.scale
            * window_integral(
                self.state,
                self.axis,
                position - 0.5 * self.core,
                position + 0.5 * self.core,
            )?)
    }
}

fn find_peak(
    state: &BranchState,
    axis: Axis,
    f: &dyn Fn(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let s = state.mode_sigma;
    let shifts = state.branches.iter().map(|b| b.shift(axis));
    let lo = shifts.clone().fold(f64::INFINITY, f64::min) - 3.0 * s;
    let hi = shifts.fold(f64::NEG_INFINITY, f64::max) + 3.0 * s;
    let n = 400;
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo)?);
    for i in 1..=n {
        let u = lo + h * i as f64;
        let v = f(u)?;
        if v > best.1 {
            best = (u, v);
        }
    }
    // Golden-section refinement on the bracketing interval.
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
        if b - a < 1e-9 * s {
            break;
        }
    }
    let u = 0.5 * (a + b);
    let v = f(u)?;
    Ok(if v >= best.1 { (u, v) } else { best })
}

/// Expected counts per dwell at one fibre position.
pub fn expected_rate(
    state: &BranchState,
    axis: Axis,
    position: f64,
    config: &ScanConfig,
) -> Result<f64> {
    RateModel::new(state, axis, config)?.rate(position)
}

fn poisson_draw(mean: f64, seed: u64, path: &[u64]) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let mut r = rng::stream(seed, path);
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(&mut r) as u64
}

/// Scan where repeat `r` sees the beam displaced by `offsets[r]`.
fn scan_with_offsets(
    state: &BranchState,
    axis: Axis,
    config: &ScanConfig,
    offsets: &[f64],
    seed: u64,
) -> Result<ScanRecord> {
    let model = RateModel::new(state, axis, config)?;
    let positions = config.positions();
    let mut counts = vec![vec![0u64; offsets.len()]; positions.len()];
    for (pi, (&p, row)) in positions.iter().zip(counts.iter_mut()).enumerate() {
        for (ri, (&o, cell)) in offsets.iter().zip(row.iter_mut()).enumerate() {
            let mean = model.rate(p - o)?;
            *cell = poisson_draw(mean, seed, &[domain::SCAN_COUNTS, pi as u64, ri as u64]);
        }
    }
    Ok(ScanRecord {
        theta: config.theta,
        axis,
        positions,
        counts,
        seed,
    })
}

/// Poisson counts over the scan grid, `config.repeats` readings per
/// position, the beam drifting between repeats.
pub fn simulate_scan(
    state: &BranchState,
    axis: Axis,
    config: &ScanConfig,
    drift: &DriftModel,
    seed: u64,
) -> Result<ScanRecord> {
    config.validate()?;
    drift.validate()?;
    let offsets = drift.offsets(config.repeats, seed);
    scan_with_offsets(state, axis, config, &offsets, seed)
}

/// Repeated scans of one beam over time; drift accumulates from profile to
/// profile and all repeats inside a profile share its offset.
pub fn simulate_drift_run(
    beam: &BranchState,
    axis: Axis,
    config: &ScanConfig,
    drift: &DriftModel,
    n_profiles: usize,
    seed: u64,
) -> Result<Vec<ScanRecord>> {
    config.validate()?;
    drift.validate()?;
    let offsets = drift.offsets(n_profiles, seed);
    offsets
        .iter()
        .enumerate()
        .map(|(i, &o)| {
            let profile_seed = rng::derive_seed(seed, &[domain::DRIFT, i as u64]);
            scan_with_offsets(beam, axis, config, &vec![o; config.repeats], profile_seed)
        })
        .collect()
}

/// Concatenates records of one `(theta, axis)` into a single record whose
/// repeat index runs over all columns in order. Used to store a drift run
/// in the scan CSV layout.
pub fn concat_repeats(records: &[ScanRecord]) -> Result<ScanRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidInput("no records to concatenate".into()))?;
    let mut counts = vec![Vec::new(); first.n_points()];
    for r in records {
        if r.positions != first.positions || r.axis != first.axis || r.theta != first.theta {
            return Err(Error::InvalidInput(
                "records differ in grid, axis or theta".into(),
            ));
        }
        for (dst, src) in counts.iter_mut().zip(&r.counts) {
            dst.extend_from_slice(src);
        }
    }
    Ok(ScanRecord {
        counts,
        ..first.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::{Branch, SystemLabel};
    use crate::quantum::C64;
    use approx::assert_abs_diff_eq;

    fn centered(sigma: f64) -> BranchState {
        BranchState {
            branches: vec![Branch {
                coeff: C64::from(1.0),
                system: SystemLabel::PostSelected,
                dx: 0.0,
                dy: 0.0,
            }],
            mode_sigma: sigma,
            arm_phase: 0.0,
        }
    }

    #[test]
    fn defaults_span_three_mm() {
        let c = ScanConfig::default();
        assert_eq!(c.span(), 3000.0);
        assert_eq!(c.positions().len(), 61);
        assert_eq!(c.positions()[30], 0.0);
    }

    #[test]
    fn peak_and_tail_rates() {
        let s = centered(475.0);
        let c = ScanConfig {
            mean_rate: 1000.0,
            ..Default::default()
        };
        assert_abs_diff_eq!(
            expected_rate(&s, Axis::X, 0.0, &c).unwrap(),
            1000.0,
            epsilon = 1e-9
        );
        assert!(expected_rate(&s, Axis::X, 5.0 * 475.0, &c).unwrap() < 1e-4 * 1000.0);
    }

    #[test]
    fn grid_sum_matches_total_flux() {
        // Independent oracle: the un-windowed normal density has unit area,
        // the fibre window near the peak collects ≈ core·pdf(0).
        let sigma = 475.0;
        let s = centered(sigma);
        let c = ScanConfig {
            mean_rate: 1000.0,
            ..Default::default()
        };
        let model = RateModel::new(&s, Axis::X, &c).unwrap();
        let sum: f64 = c
            .positions()
            .iter()
            .map(|&p| model.rate(p).unwrap())
            .sum::<f64>()
            * c.step;
        let peak_window = libm::erf(25.0 / (sigma * std::f64::consts::SQRT_2));
        let analytic = 1000.0 * c.fiber_core / peak_window;
        assert!((sum / analytic - 1.0).abs() < 0.01, "{sum} vs {analytic}");
    }

    #[test]
    fn dark_scan_is_all_zero() {
        let c = ScanConfig {
            mean_rate: 0.0,
            repeats: 3,
            ..Default::default()
        };
        let r = simulate_scan(&centered(475.0), Axis::Y, &c, &DriftModel::none(), 1).unwrap();
        assert!(r.counts.iter().flatten().all(|&n| n == 0));
        assert_eq!(r.repeats(), 3);
    }

    #[test]
    fn counts_follow_expected_rate() {
        let s = centered(475.0);
        let c = ScanConfig {
            mean_rate: 1e5,
            repeats: 64,
            n_points: 7,
            start: -600.0,
            step: 200.0,
            ..Default::default()
        };
        let r = simulate_scan(&s, Axis::X, &c, &DriftModel::none(), 9).unwrap();
        let model = RateModel::new(&s, Axis::X, &c).unwrap();
        for (p, mean) in r.positions.iter().zip(r.mean_profile()) {
            let want = model.rate(*p).unwrap();
            let se = (want / r.repeats() as f64).sqrt();
            assert!((mean - want).abs() < 3.0 * se, "{p}: {mean} vs {want}");
        }
    }

    #[test]
    fn seeded_scans_are_identical() {
        let s = centered(475.0);
        let c = ScanConfig::default();
        let d = DriftModel::random_walk(3.0);
        assert_eq!(
            simulate_scan(&s, Axis::X, &c, &d, 42).unwrap(),
            simulate_scan(&s, Axis::X, &c, &d, 42).unwrap()
        );
        assert_ne!(
            simulate_scan(&s, Axis::X, &c, &d, 42).unwrap(),
            simulate_scan(&s, Axis::X, &c, &d, 43).unwrap()
        );
    }

    #[test]
    fn drift_offsets() {
        assert!(DriftModel::none().offsets(5, 1).iter().all(|&o| o == 0.0));
        let o = DriftModel {
            initial_offset: 7.0,
            ..DriftModel::random_walk(2.0)
        }
        .offsets(4, 1);
        assert_eq!(o[0], 7.0);
        assert!(o.windows(2).all(|w| w[0] != w[1]));
        assert!(DriftModel::random_walk(-1.0).validate().is_err());
    }

    #[test]
    fn random_walk_variance_grows_linearly() {
        // Var(o_n) = n·s² across independent seeds.
        let d = DriftModel::random_walk(2.0);
        let n_seeds = 2000;
        let walks: Vec<Vec<f64>> = (0..n_seeds).map(|s| d.offsets(101, s)).collect();
        for n in [25usize, 50, 100] {
            let var = walks.iter().map(|w| w[n] * w[n]).sum::<f64>() / n_seeds as f64;
            let want = n as f64 * 4.0;
            // Sample variance of a normal has relative sd sqrt(2/N) ≈ 3.2%.
            assert!((var / want - 1.0).abs() < 0.13, "n={n}: {var} vs {want}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = centered(475.0);
        let c = ScanConfig {
            repeats: 3,
            theta: 22.5,
            ..Default::default()
        };
        let a = simulate_scan(&s, Axis::X, &c, &DriftModel::none(), 5).unwrap();
        let b = simulate_scan(
            &s,
            Axis::Y,
            &ScanConfig {
                theta: 45.0,
                ..c.clone()
            },
            &DriftModel::none(),
            6,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.csv");
        write_scan_csv(&path, &[a.clone(), b.clone()]).unwrap();
        let back = read_scan_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], ScanRecord { seed: 0, ..a });
        assert_eq!(back[1], ScanRecord { seed: 0, ..b });
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("theta_deg,axis,position_um,repeat_idx,counts\n22.5,x,-1500,0,"));
    }

    #[test]
    fn csv_rejects_bad_header_and_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_scan_csv(&p).is_err());
        std::fs::write(
            &p,
            "theta_deg,axis,position_um,repeat_idx,counts\n0,x,0,0,1\n0,x,50,1,2\n",
        )
        .unwrap();
        assert!(read_scan_csv(&p).is_err());
    }

    #[test]
    fn concat_keeps_column_order() {
        let s = centered(475.0);
        let c = ScanConfig {
            repeats: 1,
            ..Default::default()
        };
        let run = simulate_drift_run(&s, Axis::X, &c, &DriftModel::random_walk(1.0), 4, 2).unwrap();
        let all = concat_repeats(&run).unwrap();
        assert_eq!(all.repeats(), 4);
        for (i, r) in run.iter().enumerate() {
            assert_eq!(all.profile(i), r.profile(0));
        }
    }
}
