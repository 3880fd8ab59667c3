use mzweak::quantum::{
    abl_conditional, observable, post_state, pre_state, weak_value, Arm, ObservableKind,
    PrePostPair, C64,
};
use serde::Serialize;

use super::{cell, write_json, Context};
use crate::error::CliResult;

pub const OUTPUT_FILE: &str = "weakvalue.json";
pub const UNDEFINED: &str = "undefined (orthogonal post-selection)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Complex { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueRow {
    pub theta_deg: f64,
    /// `"ok"` or the reason the row is undefined.
    pub status: String,
    pub spatial_a: Option<Complex>,
    pub spatial_b: Option<Complex>,
    pub diagonal_a: Option<Complex>,
    pub diagonal_b: Option<Complex>,
    pub p_spatial_a: Option<f64>,
    pub p_spatial_b: Option<f64>,
    pub p_diagonal_b_plus: Option<f64>,
    pub p_diagonal_b_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakValueReport {
    pub version: u32,
    pub rows: Vec<WeakValueRow>,
}

pub fn row(theta: f64) -> CliResult<WeakValueRow> {
    let pair = PrePostPair::new(pre_state(), post_state(theta)?);
    if pair.is_orthogonal() {
        return Ok(WeakValueRow {
            theta_deg: theta,
            status: UNDEFINED.into(),
            spatial_a: None,
            spatial_b: None,
            diagonal_a: None,
            diagonal_b: None,
            p_spatial_a: None,
            p_spatial_b: None,
            p_diagonal_b_plus: None,
            p_diagonal_b_minus: None,
        });
    }
    let wv = |k, a| weak_value(&observable(k, a), &pair).map(Complex::from);
    let abl = |k, a, v| abl_conditional(&observable(k, a), v, &pair);
    Ok(WeakValueRow {
        theta_deg: theta,
        status: "ok".into(),
        spatial_a: Some(wv(ObservableKind::Spatial, Arm::A)?),
        spatial_b: Some(wv(ObservableKind::Spatial, Arm::B)?),
        diagonal_a: Some(wv(ObservableKind::Diagonal, Arm::A)?),
        diagonal_b: Some(wv(ObservableKind::Diagonal, Arm::B)?),
        p_spatial_a: Some(abl(ObservableKind::Spatial, Arm::A, 1.0)?),
        p_spatial_b: Some(abl(ObservableKind::Spatial, Arm::B, 1.0)?),
        p_diagonal_b_plus: Some(abl(ObservableKind::Diagonal, Arm::B, 1.0)?),
        p_diagonal_b_minus: Some(abl(ObservableKind::Diagonal, Arm::B, -1.0)?),
    })
}

pub fn run(ctx: &Context) -> CliResult<WeakValueReport> {
    let rows = ctx
        .config
        .theta_list
        .iter()
        .map(|&t| row(t))
        .collect::<CliResult<Vec<_>>>()?;
    ctx.say(format!(
        "{:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "theta", "Y_A", "Y_B", "X_A", "X_B", "P(Y_A)", "P(Y_B)", "P(X_B+)", "P(X_B-)"
    ));
    for r in &rows {
        if r.status != "ok" {
            ctx.say(format!("{:>8} {}", r.theta_deg, r.status));
            continue;
        }
        let re = |c: Option<Complex>| cell(c.map(|c| c.re));
        ctx.say(format!(
            "{:>8} {} {} {} {} {} {} {} {}",
            r.theta_deg,
            re(r.spatial_a),
            re(r.spatial_b),
            re(r.diagonal_a),
            re(r.diagonal_b),
            cell(r.p_spatial_a),
            cell(r.p_spatial_b),
            cell(r.p_diagonal_b_plus),
            cell(r.p_diagonal_b_minus),
        ));
    }
    let report = WeakValueReport {
        version: mzweak::SCHEMA_VERSION,
        rows,
    };
    let dir = ctx.ensure_out_dir()?;
    write_json(&dir.join(OUTPUT_FILE), &report)?;
    Ok(report)
}
