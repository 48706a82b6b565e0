// SPDX-License-Identifier: Apache-2.0

//! Exit-gate checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always appear in `cargo test` output.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rectifiability::beta::{beta_content_p, beta_inf, beta_measure_p};
use rectifiability::cubes::{build_christ_david, finest_generation, FrostmanTree};
use rectifiability::generators::{self, GeneratorSpec};
use rectifiability::geometry::{Ball, PointCloud};
use rectifiability::multiscale::{
    beta_square_function, bj_sum_check, box_dimension, dimension_certificate, frostman_dimension, frostman_subtree,
    nonflatness_scan, tst_sum, DimensionParams,
};
use rectifiability::pbp::pbp_profile;

type Outcome = (bool, String);
type Check = (&'static str, fn() -> Outcome);
type Cells = Vec<((i64, i64), Vec<[f64; 2]>)>;

fn main() {
    let checks: [Check; 10] = [
        ("oracle dimension loop", c1_box_dimension),
        ("brute-force beta equivalence", c2_brute_force_beta),
        ("flatness zero law", c3_flat_sets),
        ("multiscale sum comparability", c4_comparability),
        ("non-flatness monotonicity", c5_monotonicity),
        ("projection profile sanity", c6_projections),
        ("frostman bookkeeping", c7_frostman),
        ("dilation homogeneity", c8_homogeneity),
        ("cube axioms", c9_cube_axioms),
        ("cli determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match std::panic::catch_unwind(f) {
            Ok(o) => o,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !ok {
            failed += 1;
        }
        println!("{} {}. {name} ({:.1?}): {detail}", if ok { "PASS" } else { "FAIL" }, i + 1, t.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

// 1. box dimension of cantor4(lambda, 7) against log 4 / log(1/lambda), tolerance 0.07, < 30 s each
fn c1_box_dimension() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for lambda in [0.25, 0.3, 0.35] {
        let ((est, cloud_len), dt) = timed(|| {
            let c = generators::cantor4::<f64>(lambda, 7).unwrap();
            (box_dimension(&c, [c.resolution(), 0.25]).unwrap(), c.len())
        });
        let truth = 4f64.ln() / (1.0 / lambda).ln();
        let good = (est - truth).abs() <= 0.07 && dt < Duration::from_secs(30) && cloud_len == 4usize.pow(7);
        ok &= good;
        parts.push(format!("lambda {lambda}: {est:.4} vs {truth:.4} in {dt:.1?}"));
    }
    (ok, parts.join("; "))
}

// independent oracles for planar d = 1

fn strip_beta(pts: &[[f64; 2]], r: f64) -> f64 {
    // the narrowest strip has a side through two of the points
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (dx, dy) = (pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            let (nx, ny) = (-dy / len, dx / len);
            let proj: Vec<f64> = pts.iter().map(|p| p[0] * nx + p[1] * ny).collect();
            let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            best = best.min((hi - lo) / 2.0);
        }
    }
    if best.is_infinite() {
        0.0
    } else {
        best / r
    }
}

/// Minimum dyadic cover cost over cubes of side `2^e`, `e >= leaf`, by
/// direct recursion on point subsets.
fn dyadic_content(pts: &[[f64; 2]], leaf: i32) -> f64 {
    fn cost(pts: &[[f64; 2]], e: i32, leaf: i32) -> f64 {
        let w = 2f64.sqrt() * 2f64.powi(e);
        if e == leaf {
            return w;
        }
        let s = 2f64.powi(e - 1);
        let mut groups: Cells = Vec::new();
        for p in pts {
            let key = ((p[0] / s).floor() as i64, (p[1] / s).floor() as i64);
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => g.1.push(*p),
                None => groups.push((key, vec![*p])),
            }
        }
        let split: f64 = groups.iter().map(|g| cost(&g.1, e - 1, leaf)).sum();
        w.min(split)
    }
    if pts.is_empty() {
        return 0.0;
    }
    let top = leaf + 40;
    let s = 2f64.powi(top);
    let mut groups: Cells = Vec::new();
    for p in pts {
        let key = ((p[0] / s).floor() as i64, (p[1] / s).floor() as i64);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(*p),
            None => groups.push((key, vec![*p])),
        }
    }
    groups.iter().map(|g| cost(&g.1, top, leaf)).sum()
}

/// `int_0^inf H({f > t}) t^(p-1) dt` as a layer cake over the distinct
/// values of `f`.
fn choquet(pts: &[[f64; 2]], f: &[f64], p: f64, leaf: i32) -> f64 {
    let mut levels: Vec<f64> = f.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    let mut total = 0.0;
    for (k, &t) in levels.iter().enumerate() {
        let below = levels.get(k + 1).copied().unwrap_or(0.0);
        let sup: Vec<[f64; 2]> = pts.iter().zip(f).filter(|(_, &v)| v >= t).map(|(q, _)| *q).collect();
        total += (t.powf(p) - below.powf(p)) / p * dyadic_content(&sup, leaf);
    }
    total
}

fn pair_content_beta(pts: &[[f64; 2]], r: f64, p: f64, leaf: i32) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (dx, dy) = (pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            let (nx, ny) = (-dy / len, dx / len);
            let f: Vec<f64> = pts.iter().map(|q| ((q[0] - pts[i][0]) * nx + (q[1] - pts[i][1]) * ny).abs() / r).collect();
            best = best.min(choquet(pts, &f, p, leaf));
        }
    }
    (best / r).powf(1.0 / p)
}

// 2. 50 random planar instances with at most 12 points, tolerance 1e-6
fn c2_brute_force_beta() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0f64; 3];
    for _ in 0..50 {
        let m = rng.gen_range(2..=12);
        let pts: Vec<[f64; 2]> = (0..m)
            .map(|_| {
                let (a, rad): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), 0.95 * rng.gen::<f64>().sqrt());
                [rad * a.cos(), rad * a.sin()]
            })
            .collect();
        let h = 1.0 / 64.0;
        let cloud = PointCloud::new(pts.iter().map(|p| p.to_vec()).collect(), h).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        let leaf = h.log2().ceil() as i32;
        let got_inf = beta_inf(&cloud, &ball, 1).unwrap().value;
        worst[0] = worst[0].max((got_inf - strip_beta(&pts, 1.0)).abs());
        for (slot, p) in [(1, 1.0), (2, 2.0)] {
            let got = beta_content_p(&cloud, &ball, 1, p, h).unwrap().value;
            worst[slot] = worst[slot].max((got - pair_content_beta(&pts, 1.0, p, leaf)).abs());
        }
    }
    let ok = worst.iter().all(|&w| w <= 1e-6);
    (ok, format!("max |diff| inf {:.2e}, content p=1 {:.2e}, p=2 {:.2e}", worst[0], worst[1], worst[2]))
}

// 3. every beta operation and the multiscale sums vanish on flat sets, tolerance 1e-9
fn c3_flat_sets() -> Outcome {
    let tol = 1e-9;
    let mut worst = 0f64;
    let mut names = Vec::new();
    let mut note = |name: &str, v: f64, worst: &mut f64| {
        *worst = worst.max(v.abs());
        if v.abs() > tol {
            names.push(format!("{name} = {v:e}"));
        }
    };
    // segment in the plane, a tilted line in space, a tilted 2-plane patch in space
    let seg = generators::segment::<f64>(2, 257).unwrap();
    let (u, v) = ([0.6, 0.0, 0.8], [0.0, 1.0, 0.0]);
    let line3 = generators::segment::<f64>(3, 129).unwrap().map_points(|p| u.iter().map(|a| a * p[0]).collect()).unwrap();
    let n = 24;
    let patch: Vec<Vec<f64>> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i as f64 / n as f64, j as f64 / n as f64)))
        .map(|(s, t)| (0..3).map(|a| s * u[a] + t * v[a]).collect())
        .collect();
    let patch = PointCloud::new(patch, 1.0 / n as f64).unwrap();
    for (set, cloud, d) in [("segment", &seg, 1), ("line in R^3", &line3, 1), ("plane in R^3", &patch, 2)] {
        let h = cloud.resolution();
        let center = cloud.point(cloud.len() / 2).to_vec();
        let ball = Ball::new(center, 0.3).unwrap();
        note(&format!("{set} beta_inf"), beta_inf(cloud, &ball, d).unwrap().value, &mut worst);
        for p in [1.0, 2.0] {
            note(&format!("{set} beta_content p={p}"), beta_content_p(cloud, &ball, d, p, h).unwrap().value, &mut worst);
            note(&format!("{set} beta_measure p={p}"), beta_measure_p(cloud, &ball, d, p).unwrap().value, &mut worst);
        }
        let forest = build_christ_david(cloud, 0.25, finest_generation(0.25, h)).unwrap();
        let top = forest.roots()[0];
        note(&format!("{set} tst_sum"), tst_sum(cloud, &forest, top, d, 2.0, 2.0, h).unwrap().beta_sum, &mut worst);
        let scan = nonflatness_scan(cloud, d, [4.0 * h, 0.5], 1).unwrap();
        note(&format!("{set} nonflatness_scan"), scan.beta0, &mut worst);
        let weighted = cloud.clone().with_weights(vec![1.0 / cloud.len() as f64; cloud.len()]).unwrap();
        let b0 = Ball::new(cloud.point(0).to_vec(), 0.5).unwrap();
        note(&format!("{set} beta_square_function"), beta_square_function(&weighted, &forest, &b0, d).unwrap(), &mut worst);
    }
    let ok = names.is_empty();
    (ok, if ok { format!("max |value| {worst:.2e} over 3 sets x 9 statistics") } else { names.join(", ") })
}

// 4. (diam^d + beta sum) / content proxy within a factor 3 across depths 4..6, < 2 min per depth
fn c4_comparability() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut slowest = Duration::ZERO;
    for set in ["lipschitz_graph(0.5)", "koch(1/3)"] {
        let mut ratios = Vec::new();
        for depth in 4..=6u32 {
            let (ratio, dt) = timed(|| {
                let c = if set.starts_with("lip") {
                    generators::lipschitz_graph::<f64>(0.5, 4usize.pow(depth) + 1, 7).unwrap()
                } else {
                    generators::koch::<f64>(1.0 / 3.0, depth).unwrap()
                };
                let f = build_christ_david(&c, 0.25, finest_generation(0.25, c.resolution())).unwrap();
                tst_sum(&c, &f, f.roots()[0], 1, 2.0, 2.0, c.resolution()).unwrap().ratio_lower
            });
            slowest = slowest.max(dt);
            ok &= dt < Duration::from_secs(120);
            ratios.push(ratio);
        }
        let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= spread < 3.0;
        parts.push(format!("{set} ratios {:.3?} spread {spread:.3}", ratios));
    }
    parts.push(format!("slowest depth {slowest:.1?}"));
    (ok, parts.join("; "))
}

const KAPPA: u32 = 6;
const LEVELS: u32 = 2;

/// Smallest depth `>= 7` whose resolution reaches the finest tree side.
fn koch_member(ratio: f64) -> PointCloud<f64> {
    let finest = 2f64.powi(-((KAPPA * LEVELS) as i32));
    let mut depth = 7;
    while ratio.powi(depth as i32) > finest {
        depth += 1;
    }
    generators::koch::<f64>(ratio, depth).unwrap()
}

struct Member {
    beta0: f64,
    box_dim: f64,
    s_hat: f64,
    raw: f64,
    tree_box: f64,
    defect: f64,
    tree: FrostmanTree<f64>,
}

fn koch_certificate(ratio: f64) -> Member {
    let c = koch_member(ratio);
    let f = build_christ_david(&c, 0.25, 1).unwrap();
    let r = f.cube(f.roots()[0]);
    let params = DimensionParams { d: 1, kappa: KAPPA, levels: LEVELS, c: 1.0, scan_range: [0.05, 0.5], ball_density: 2 };
    let (cert, tree) = dimension_certificate(&c, r, &params).unwrap();
    Member {
        beta0: cert.beta0,
        box_dim: box_dimension(&c, [c.resolution(), 0.25]).unwrap(),
        s_hat: cert.frostman_exponent,
        raw: cert.raw_exponent,
        tree_box: cert.box_dimension,
        defect: cert.mass_defect,
        tree,
    }
}

fn koch_family() -> &'static [(f64, Member)] {
    static FAMILY: std::sync::OnceLock<Vec<(f64, Member)>> = std::sync::OnceLock::new();
    FAMILY.get_or_init(|| [1.0 / 3.8, 1.0 / 3.4, 1.0 / 3.0].into_iter().map(|r| (r, koch_certificate(r))).collect())
}

// 5. beta_0 and box dimension increase along the koch family; s_hat >= 1 + 0.25 beta_0^2
fn c5_monotonicity() -> Outcome {
    let fam = koch_family();
    let increasing = |f: &dyn Fn(&Member) -> f64| fam.windows(2).all(|w| f(&w[0].1) < f(&w[1].1));
    let mut ok = increasing(&|m| m.beta0) && increasing(&|m| m.box_dim - 1.0);
    let mut parts = Vec::new();
    for (ratio, m) in fam {
        let floor = 1.0 + 0.25 * m.beta0 * m.beta0;
        ok &= m.s_hat >= floor;
        parts.push(format!(
            "1/{:.1}: beta0 {:.4} box-1 {:.4} s_hat {:.4} (raw {:.4}) >= {floor:.4}",
            1.0 / ratio,
            m.beta0,
            m.box_dim - 1.0,
            m.s_hat,
            m.raw
        ));
    }
    (ok, parts.join("; "))
}

// 6. segment delta in [2 cos eps - 0.1, 2] for eps <= 0.3; cantor4(1/4) delta(0.1) decreasing over depths 2..6
fn c6_projections() -> Outcome {
    let seg = generators::segment::<f64>(2, 2049).unwrap().dilate(2.0).translate(&[-1.0, 0.0]);
    let eps = [0.05, 0.1, 0.2, 0.3];
    let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
    let prof = pbp_profile(&seg, &[ball], 1, &eps, 64, 1, seg.resolution()).unwrap();
    let mut ok = true;
    for (e, d) in prof.eps.iter().zip(&prof.delta_min) {
        ok &= *d >= 2.0 * e.cos() - 0.1 && *d <= 2.0;
    }
    let mut deltas = Vec::new();
    for depth in 2..=6 {
        let c = generators::cantor4::<f64>(0.25, depth).unwrap();
        let ball = Ball::new(c.point(0).to_vec(), c.diameter()).unwrap();
        deltas.push(pbp_profile(&c, &[ball], 1, &[0.1], 64, 1, c.resolution()).unwrap().delta_min[0]);
    }
    ok &= deltas.windows(2).all(|w| w[1] < w[0]);
    (ok, format!("segment delta {:.4?} at eps {eps:?}; cantor delta(0.1) {:.4?}", prof.delta_min, deltas))
}

// 7. mass additivity 1e-12 and s_hat <= box dimension + 0.1 on every generated tree
fn c7_frostman() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut check = |name: String, tree: &FrostmanTree<f64>, tree_box: f64, ok: &mut bool| {
        let (best, _, s) = frostman_subtree(tree).unwrap();
        let raw = frostman_dimension(tree).unwrap();
        let defect = tree.mass_defect().max(best.mass_defect());
        let good = defect <= 1e-12 && s <= tree_box + 0.1 && raw <= tree_box + 0.1;
        *ok &= good;
        parts.push(format!("{name}: defect {defect:.1e}, s_hat {s:.4}, raw {raw:.4}, box {tree_box:.4}"));
    };
    for (ratio, m) in koch_family() {
        ok &= m.defect <= 1e-12;
        check(format!("koch 1/{:.1}", 1.0 / ratio), &m.tree, m.tree_box, &mut ok);
    }
    for (lambda, kappa, levels) in [(0.25, 2u32, 4u32), (0.3, 3, 3), (0.35, 4, 2)] {
        let c = generators::cantor4::<f64>(lambda, 7).unwrap();
        let f = build_christ_david(&c, 0.25, 1).unwrap();
        let params = DimensionParams { d: 1, kappa, levels, c: 1.0, scan_range: [0.05, 0.5], ball_density: 1 };
        let (cert, tree) = dimension_certificate(&c, f.cube(f.roots()[0]), &params).unwrap();
        check(format!("cantor {lambda}"), &tree, cert.box_dimension, &mut ok);
    }
    (ok, parts.join("; "))
}

// 8. bj_sum_check ratio unchanged (1e-9) under dilation by 4 with k shifted by 2
fn c8_homogeneity() -> Outcome {
    let c = generators::koch::<f64>(1.0 / 3.0, 6).unwrap();
    let f = build_christ_david(&c, 0.25, finest_generation(0.25, c.resolution())).unwrap();
    let c4 = c.dilate(4.0);
    let f4 = build_christ_david(&c4, 0.25, finest_generation(0.25, c4.resolution())).unwrap();
    let r = f.generation(f.first_generation + 2)[0];
    let r4 = f4.generation(f4.first_generation + 2)[0];
    let mut worst = 0f64;
    let mut ratios = Vec::new();
    let mut ok = f.cube(r).members == f4.cube(r4).members;
    for k in [3, 5, 7, 9] {
        let a = bj_sum_check(&c, &f, r, k, 1.0, 1, c.resolution()).unwrap();
        let b = bj_sum_check(&c4, &f4, r4, k - 2, 1.0, 1, c4.resolution()).unwrap();
        worst = worst.max((a.ratio - b.ratio).abs());
        ratios.push(a.ratio);
    }
    ok &= worst <= 1e-9;
    (ok, format!("max |ratio diff| {worst:.2e}; ratios at k = 3, 5, 7, 9: {ratios:.3?}"))
}

// 9. partition, nesting and ball containment on every generator cloud and generation
fn c9_cube_axioms() -> Outcome {
    let specs = [
        GeneratorSpec::Cantor4 { lambda: 0.25, depth: 5 },
        GeneratorSpec::Cantor4 { lambda: 0.35, depth: 5 },
        GeneratorSpec::Koch { ratio: 1.0 / 3.0, depth: 5 },
        GeneratorSpec::Koch { ratio: 1.0 / 3.8, depth: 5 },
        GeneratorSpec::LipschitzGraph { lipschitz: 0.5, count: 1025, seed: 7 },
        GeneratorSpec::Segment { ambient_dim: 3, count: 513 },
        GeneratorSpec::Arc { radius: 1.0, span: 3.0, count: 800 },
        GeneratorSpec::Disk { radius: 1.0, spacing: 0.04 },
        GeneratorSpec::Product { base: Box::new(GeneratorSpec::Cantor4 { lambda: 0.25, depth: 3 }), samples: 9 },
    ];
    let mut failures = Vec::new();
    let mut generations = 0;
    for spec in &specs {
        let c: PointCloud<f64> = spec.generate().unwrap();
        let f = build_christ_david(&c, 0.25, finest_generation(0.25, c.resolution())).unwrap();
        generations += f.generations.len();
        if let Err(e) = f.verify(&c) {
            failures.push(format!("{spec:?}: {e}"));
        }
    }
    let ok = failures.is_empty();
    (ok, if ok { format!("{} clouds, {generations} generations verified", specs.len()) } else { failures.join("; ") })
}

// 10. identical CLI configs give byte-identical reports
fn c10_determinism() -> Outcome {
    use rectifiability::cli::run;
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["tst", "--kind", "koch", "--ratio", "0.3333333333333333", "--depth", "4"],
        &["pbp", "--kind", "cantor4", "--lambda", "0.25", "--depth", "4", "--eps", "0.05,0.1"],
        &["dimension", "--kind", "cantor4", "--lambda", "0.3", "--depth", "6", "--kappa", "2", "--levels", "4", "--ball-density", "1"],
        &["bjcheck", "--kind", "lipschitz-graph", "--lipschitz", "0.5", "--count", "257", "--seed", "3", "--k", "3,5"],
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for args in runs {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{}-{rep}.json", args[0]));
            let csv = dir.path().join(format!("{}-{rep}.csv", args[0]));
            let mut full = vec!["rectify"];
            full.extend_from_slice(args);
            let (o, c) = (out.to_str().unwrap().to_string(), csv.to_str().unwrap().to_string());
            full.extend_from_slice(&["--report", &o, "--csv", &c]);
            let code = run(full);
            ok &= code == 0;
            bytes.push((read(&out), read(&csv)));
        }
        let same = bytes[0] == bytes[1] && !bytes[0].0.is_empty();
        ok &= same;
        parts.push(format!("{} {}", args[0], if same { "identical" } else { "DIFFERENT" }));
    }
    (ok, parts.join(", "))
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_default()
}
