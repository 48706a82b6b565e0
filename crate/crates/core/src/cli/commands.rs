// SPDX-License-Identifier: Apache-2.0

use std::fs::File;

use serde_json::json;

use super::{
    finite_json, load_input, write_cloud, BetaArgs, BetaKind, BjcheckArgs, CapacityArgs, CliError, Command,
    ContentArgs, CubeArgs, DimensionArgs, GenerateArgs, Outcome, PbpArgs, Table, TstArgs,
};
use crate::beta::{beta_content_p, beta_inf, beta_measure_p};
use crate::cubes::{build_christ_david, finest_generation, CubeForest};
use crate::geometry::{hausdorff_content, Ball, PointCloud};
use crate::multiscale::{bj_sum_check, capacity_lower_bound, dimension_certificate, tst_sum, DimensionParams};
use crate::pbp::pbp_profile;

pub(crate) fn dispatch(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Content(a) => content(a),
        Command::Beta(a) => beta(a),
        Command::Tst(a) => tst(a),
        Command::Pbp(a) => pbp(a),
        Command::Dimension(a) => dimension(a),
        Command::Capacity(a) => capacity(a),
        Command::Bjcheck(a) => bjcheck(a),
    }
}

fn min_scale_or_resolution(given: Option<f64>, cloud: &PointCloud<f64>) -> f64 {
    given.unwrap_or_else(|| cloud.resolution())
}

fn generate(a: &GenerateArgs) -> Result<Outcome, CliError> {
    let spec = a.generator.to_spec()?;
    let cloud = spec.generate::<f64>()?;
    let f = File::create(&a.out).map_err(|e| CliError::Validation(format!("{}: {e}", a.out.display())))?;
    write_cloud(f, &cloud, Some(&spec)).map_err(|e| CliError::Validation(format!("{}: {e}", a.out.display())))?;
    let result = json!({
        "count": cloud.len(),
        "ambient_dim": cloud.dim(),
        "resolution": finite_json(&cloud.resolution())?,
        "ground_truth": finite_json(&spec.ground_truth())?,
    });
    Ok(Outcome { input: None, result, table: None })
}

fn content(a: &ContentArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let min_scale = min_scale_or_resolution(a.min_scale, &cloud);
    let est = hausdorff_content(&cloud, a.d, min_scale)?;
    let result = json!({ "min_scale": finite_json(&min_scale)?, "content": finite_json(&est)? });
    Ok(Outcome { input: Some(input), result, table: None })
}

fn beta(a: &BetaArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let ball = Ball::new(a.center.clone(), a.ball_radius)?;
    let min_scale = min_scale_or_resolution(a.min_scale, &cloud);
    let res = match a.beta {
        BetaKind::Inf => beta_inf(&cloud, &ball, a.d)?,
        BetaKind::Content => beta_content_p(&cloud, &ball, a.d, a.p, min_scale)?,
        BetaKind::Measure => beta_measure_p(&cloud, &ball, a.d, a.p)?,
    };
    let result = json!({ "min_scale": finite_json(&min_scale)?, "beta": finite_json(&res)? });
    Ok(Outcome { input: Some(input), result, table: None })
}

/// Forest and top cube id for `cubes`.
fn top_cube(cloud: &PointCloud<f64>, cubes: &CubeArgs) -> Result<(CubeForest<f64>, i32, usize), CliError> {
    let k_max = cubes.k_max.unwrap_or_else(|| finest_generation(cubes.rho, cloud.resolution()));
    let forest = build_christ_david(cloud, cubes.rho, k_max)?;
    let top = pick(&forest, cubes.top_generation, cubes.top_index)?;
    Ok((forest, k_max, top))
}

fn pick(forest: &CubeForest<f64>, generation: Option<i32>, index: usize) -> Result<usize, CliError> {
    let g = generation.unwrap_or(forest.first_generation);
    let ids = forest.generation(g);
    ids.get(index).copied().ok_or_else(|| {
        CliError::Validation(format!(
            "no cube {index} in generation {g} (generations {}..={}, {} cubes in {g})",
            forest.first_generation,
            forest.last_generation(),
            ids.len()
        ))
    })
}

fn cube_summary(forest: &CubeForest<f64>, id: usize) -> serde_json::Value {
    let q = forest.cube(id);
    json!({ "id": id, "generation": q.generation, "center": q.center, "side": q.side, "members": q.members.len() })
}

fn tst(a: &TstArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let (forest, k_max, top) = top_cube(&cloud, &a.cubes)?;
    let min_scale = min_scale_or_resolution(a.min_scale, &cloud);
    let report = tst_sum(&cloud, &forest, top, a.d, a.p, a.c0, min_scale)?;
    let table = Table {
        header: vec!["cube", "generation", "side", "beta", "contribution"],
        rows: report
            .ledger
            .iter()
            .map(|e| {
                vec![
                    e.cube.to_string(),
                    e.generation.to_string(),
                    e.side.to_string(),
                    e.beta.to_string(),
                    e.contribution.to_string(),
                ]
            })
            .collect(),
    };
    let result = json!({
        "k_max": k_max,
        "min_scale": finite_json(&min_scale)?,
        "top_cube": finite_json(&cube_summary(&forest, top))?,
        "report": finite_json(&report)?,
    });
    Ok(Outcome { input: Some(input), result, table: Some(table) })
}

fn parse_ball(s: &str, n: usize) -> Result<Ball<f64>, CliError> {
    let bad = || CliError::Validation(format!("--ball {s:?}: expected {} comma separated numbers", n + 1));
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    if v.len() != n + 1 {
        return Err(bad());
    }
    Ok(Ball::new(v[..n].to_vec(), v[n])?)
}

fn pbp(a: &PbpArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let balls: Vec<Ball<f64>> = if a.ball.is_empty() {
        vec![Ball::new(cloud.point(0).to_vec(), cloud.diameter())?]
    } else {
        a.ball.iter().map(|s| parse_ball(s, cloud.dim())).collect::<Result<_, _>>()?
    };
    let grid = min_scale_or_resolution(a.grid, &cloud);
    let profile = pbp_profile(&cloud, &balls, a.d, &a.eps, a.samples, a.pbp_seed, grid)?;
    let table = Table {
        header: vec!["eps", "delta_min"],
        rows: profile.eps.iter().zip(&profile.delta_min).map(|(e, d)| vec![e.to_string(), d.to_string()]).collect(),
    };
    let result = json!({ "grid": finite_json(&grid)?, "profile": finite_json(&profile)? });
    Ok(Outcome { input: Some(input), result, table: Some(table) })
}

fn dimension(a: &DimensionArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let k_max = a.top_generation.unwrap_or_else(|| finest_generation(a.rho, cloud.resolution()).min(0));
    let forest = build_christ_david(&cloud, a.rho, k_max)?;
    let r = pick(&forest, a.top_generation, a.top_index)?;
    let params = DimensionParams {
        d: a.d,
        kappa: a.kappa,
        levels: a.levels,
        c: a.c,
        scan_range: [a.scan_min, a.scan_max],
        ball_density: a.ball_density,
    };
    let (cert, _) = dimension_certificate(&cloud, forest.cube(r), &params)?;
    let table = Table {
        header: vec!["side", "count", "log2_inverse_side", "log2_count"],
        rows: cert
            .box_counts
            .iter()
            .map(|&(s, n)| vec![s.to_string(), n.to_string(), (-s.log2()).to_string(), (n as f64).log2().to_string()])
            .collect(),
    };
    let result = json!({
        "top_cube": finite_json(&cube_summary(&forest, r))?,
        "params": finite_json(&params)?,
        "certificate": finite_json(&cert)?,
    });
    Ok(Outcome { input: Some(input), result, table: Some(table) })
}

fn capacity(a: &CapacityArgs) -> Result<Outcome, CliError> {
    let bound = capacity_lower_bound(a.content, a.measure, a.gamma, a.c, a.d)?;
    Ok(Outcome { input: None, result: json!({ "lower_bound": finite_json(&bound)? }), table: None })
}

fn bjcheck(a: &BjcheckArgs) -> Result<Outcome, CliError> {
    let (input, cloud) = load_input(&a.input)?;
    let (forest, k_max, top) = top_cube(&cloud, &a.cubes)?;
    let min_scale = min_scale_or_resolution(a.min_scale, &cloud);
    let records = a
        .k
        .iter()
        .map(|&k| bj_sum_check(&cloud, &forest, top, k, a.c, a.d, min_scale))
        .collect::<Result<Vec<_>, _>>()?;
    let table = Table {
        header: vec!["k", "beta_terms", "top_term", "lhs", "skeleton_measure", "ratio"],
        rows: records
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.beta_terms.to_string(),
                    r.top_term.to_string(),
                    r.lhs.to_string(),
                    r.skeleton_measure.to_string(),
                    r.ratio.to_string(),
                ]
            })
            .collect(),
    };
    let result = json!({
        "k_max": k_max,
        "min_scale": finite_json(&min_scale)?,
        "top_cube": finite_json(&cube_summary(&forest, top))?,
        "records": finite_json(&records)?,
    });
    Ok(Outcome { input: Some(input), result, table: Some(table) })
}
