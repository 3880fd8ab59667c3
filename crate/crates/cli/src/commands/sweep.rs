use std::fmt::Write as _;
use std::str::FromStr;

use mzweak::pointer::{centroid_exact, evolve_and_postselect, first_order_shift};
use mzweak::quantum::{
    observable, post_state, pre_state, weak_value, Arm, ObservableKind, PrePostPair,
};
use mzweak::Axis;

use super::{Context, AXES};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Theta,
    G,
    Sigma,
}

impl SweepParam {
    pub fn column(self) -> &'static str {
        match self {
            SweepParam::Theta => "theta_deg",
            SweepParam::G => "g_um",
            SweepParam::Sigma => "sigma_um",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Theta => "theta",
            SweepParam::G => "g",
            SweepParam::Sigma => "sigma",
        }
    }
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "theta" => Ok(SweepParam::Theta),
            "g" => Ok(SweepParam::G),
            "sigma" => Ok(SweepParam::Sigma),
            other => Err(CliError::Config(format!(
                "unknown sweep parameter {other:?} (theta | g | sigma)"
            ))),
        }
    }
}

/// Inclusive `start:stop:step` range with at least two points.
pub fn parse_range(spec: &str) -> CliResult<Vec<f64>> {
    let bad = |m: &str| CliError::Config(format!("range {spec:?}: {m}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| bad("expected start:stop:step"))
        })
        .collect::<CliResult<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step == 0.0 {
        return Err(bad("values must be finite and step nonzero"));
    }
    if (stop - start) * step < 0.0 {
        return Err(bad("step points away from stop"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n < 2 {
        return Err(bad("needs more than one point"));
    }
    if n > 1_000_000 {
        return Err(bad("too many points"));
    }
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub axis: Axis,
    pub weak_value_re: f64,
    pub weak_value_im: f64,
    pub centroid: f64,
    pub first_order: f64,
}

/// Observable read by each pointer axis, with its coupling strength.
fn axis_observable(cfg: &ExperimentConfig, axis: Axis) -> (ObservableKind, Arm, f64) {
    match axis {
        Axis::X => (ObservableKind::Diagonal, Arm::B, cfg.g_x),
        Axis::Y => (ObservableKind::Spatial, Arm::A, cfg.g_y),
    }
}

fn theta_of(cfg: &ExperimentConfig) -> f64 {
    cfg.theta_list[0]
}

/// Rows for one parameter value. Undefined quantities are NaN.
pub fn rows_at(cfg: &ExperimentConfig) -> CliResult<Vec<SweepRow>> {
    let theta = theta_of(cfg);
    let post = post_state(theta)?;
    let pair = PrePostPair::new(pre_state(), post);
    let state = evolve_and_postselect(
        &pre_state(),
        &cfg.couplers(),
        &post,
        cfg.blocked_arm.arm(),
        cfg.pointer_setup(),
    )?;
    AXES.iter()
        .map(|&axis| {
            let (kind, arm, g) = axis_observable(cfg, axis);
            let wv = weak_value(&observable(kind, arm), &pair).ok();
            Ok(SweepRow {
                value: f64::NAN,
                axis,
                weak_value_re: wv.map_or(f64::NAN, |w| w.re),
                weak_value_im: wv.map_or(f64::NAN, |w| w.im),
                centroid: centroid_exact(&state, axis).unwrap_or(f64::NAN),
                first_order: wv.map_or(f64::NAN, |w| first_order_shift(w, g)),
            })
        })
        .collect()
}

pub fn sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
) -> CliResult<Vec<SweepRow>> {
    let mut out = Vec::new();
    for &v in values {
        let mut c = cfg.clone();
        match param {
            SweepParam::Theta => c.theta_list = vec![v],
            SweepParam::G => {
                c.g_x = v;
                c.g_y = v;
            }
            SweepParam::Sigma => c.sigma = v,
        }
        c.validate()?;
        out.extend(rows_at(&c)?.into_iter().map(|r| SweepRow { value: v, ..r }));
    }
    Ok(out)
}

pub fn file_name(param: SweepParam) -> String {
    format!("sweep_{}.csv", param.name())
}

pub fn to_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = format!(
        "{},axis,weak_value_re,weak_value_im,centroid_um,first_order_um\n",
        param.column()
    );
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.value, r.axis, r.weak_value_re, r.weak_value_im, r.centroid, r.first_order
        )
        .expect("write to String");
    }
    s
}

pub fn run(ctx: &Context, param: SweepParam, range: &str) -> CliResult<Vec<SweepRow>> {
    let values = parse_range(range)?;
    let rows = sweep(&ctx.config, param, &values)?;
    let dir = ctx.ensure_out_dir()?;
    let path = dir.join(file_name(param));
    std::fs::write(&path, to_csv(param, &rows)).map_err(|e| {
        CliError::Io(mzweak::Error::Io {
            path: path.clone(),
            source: e,
        })
    })?;
    ctx.say(format!("wrote {} ({} rows)", path.display(), rows.len()));
    Ok(rows)
}
