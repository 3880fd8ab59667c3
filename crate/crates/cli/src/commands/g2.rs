use mzweak::detection::{g2_sigma, g2_statistic, simulate_heralded_counts, G2Report};

use super::{g2_seed, write_json, Context};
use crate::error::CliResult;

pub const OUTPUT_FILE: &str = "g2.json";

pub fn run(ctx: &Context) -> CliResult<G2Report> {
    let source = &ctx.config.source;
    let counts = simulate_heralded_counts(source, g2_seed(ctx.config.seed))?;
    let report = G2Report::new(source, counts, ctx.config.seed);
    let dir = ctx.ensure_out_dir()?;
    write_json(&dir.join(OUTPUT_FILE), &report)?;
    let g2 = g2_statistic(&counts)?;
    let sigma = g2_sigma(&counts)?;
    ctx.say(format!(
        "N(R) = {}  C(S1|R) = {}  C(S2|R) = {}  C(S1,S2|R) = {}",
        counts.n_reference, counts.c1, counts.c2, counts.triple
    ));
    ctx.say(format!("g2 = {g2:.4} +/- {sigma:.4}"));
    Ok(report)
}
