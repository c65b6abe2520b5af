//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use gapmaps_core::atlas::{
    self, CanonicalFamily, ContinuationOptions, CurveKind, SequenceLabel, StsFamily, Transect, Window,
};
use gapmaps_core::cherry::{self, CherryParams, IntegrationOptions};
use gapmaps_core::canonical::{f2_bifurcation_structure, CanonicalParams};
use gapmaps_core::roots;
use gapmaps_core::sts::{self, StsParams};
use gapmaps_core::Lift;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_sn_lines() -> Outcome {
    let fam = StsFamily { gamma: 0.5 };
    let window = Window::new([0.0, 0.05], [0.6, 0.45]);
    let opts = ContinuationOptions::default();
    let first = atlas::trace_sn_curve(&fam, 1, 1, &window, ([0.2, PI * (1.0 / 3.0 - 0.2)], 0.25), &opts)
        .map_err(|e| e.to_string())?;
    let second = atlas::trace_sn_curve(&fam, 1, 1, &window, ([1.0 / 3.0, 0.2], 0.75), &opts)
        .map_err(|e| e.to_string())?;
    let mut worst1: f64 = 0.0;
    for p in &first.points {
        worst1 = worst1.max((p.params[1] - PI * (1.0 / 3.0 - p.params[0])).abs());
    }
    let mut worst2: f64 = 0.0;
    for p in &second.points {
        worst2 = worst2.max((p.params[0] - 1.0 / 3.0).abs());
    }
    let span = |t: &atlas::CurveTrace| {
        let a: Vec<f64> = t.points.iter().map(|p| p.params[1]).collect();
        a.iter().cloned().fold(f64::INFINITY, f64::min)..a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let (s1, s2) = (span(&first), span(&second));
    ensure(worst1 < 1e-6 && worst2 < 1e-6, format!("max deviation {worst1:.2e}, {worst2:.2e}"))?;
    ensure(
        s1.start < 0.06 && s1.end > 0.44 && s2.start < 0.06 && s2.end > 0.44,
        format!("alpha coverage {s1:?} {s2:?}"),
    )?;
    Ok(format!(
        "{} + {} points, max deviation {worst1:.1e} / {worst2:.1e}",
        first.points.len(),
        second.points.len()
    ))
}

fn c2_type_one() -> Outcome {
    let gamma = 0.5;
    let gt = gamma / (1.0 + gamma);
    let fam = StsFamily { gamma };
    // D = γ̃ - β from α = 1 down to just above the minimum.
    let d_lo = {
        let f = |d: f64| (gamma * gamma + 4.0 * PI * PI * d * d) / (4.0 * PI * d) - 1.0;
        roots::bisect(f, 1e-3, gamma / (2.0 * PI), 1e-15).map_err(|e| e.to_string())?
    };
    let d_hi = gamma / (2.0 * PI);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = d_lo + (d_hi - d_lo) * (i as f64 + 1.0) / 21.0;
        let beta = gt - d;
        let closed = sts::bc_type1_p1(1, gamma, beta).map_err(|e| e.to_string())?;
        let pt = atlas::bc_point_on_line(&fam, 1, 1, CurveKind::BorderTypeI, 1, beta, (gamma * (1.0 + 1e-4), 1.0))
            .map_err(|e| format!("beta = {beta}: {e}"))?;
        worst = worst.max((pt.params[1] - closed).abs());
    }
    ensure(worst < 1e-6, format!("max |alpha_num - alpha_closed| = {worst:.2e}"))?;
    // Minimum: zero of dα/dD = (4π²D² - γ²)/(4πD²).
    let d_min = roots::bisect(|d| 4.0 * PI * PI * d * d - gamma * gamma, 1e-3, 1.0, 1e-16).map_err(|e| e.to_string())?;
    let b_min = gt - d_min;
    let a_min = sts::bc_type1_p1(1, gamma, b_min).map_err(|e| e.to_string())?;
    let want_b = 1.0 / 3.0 - 1.0 / (4.0 * PI);
    ensure(
        (b_min - want_b).abs() < 1e-8 && (a_min - 0.5).abs() < 1e-8,
        format!("minimum at ({b_min}, {a_min})"),
    )?;
    Ok(format!("20 samples, max deviation {worst:.1e}; minimum ({b_min:.10}, {a_min:.10})"))
}

fn c3_qstar() -> Outcome {
    let q = sts::qstar();
    ensure((q - 0.725).abs() < 1e-3, format!("q* = {q}"))?;
    let gamma = 0.5;
    let gt = gamma / (1.0 + gamma);
    let fam = StsFamily { gamma };
    // Trace the type II curve of (1, 1) and find where it meets the SN line.
    let a0 = 0.6;
    let seed_pt = sts::bc_type2_p1(1, gamma, a0).map_err(|e| e.to_string())?;
    let window = Window::new([0.0, 0.52], [0.6, 0.9]);
    let trace = atlas::trace_bc_curve(
        &fam,
        1,
        1,
        CurveKind::BorderTypeII,
        &window,
        [seed_pt.beta, a0],
        &ContinuationOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    // The type II curve touches the line β = γ̃ - α/π from one side, exactly
    // where the collision point reaches the threshold maximum x = 1/4.
    let dist = |p: &atlas::TonguePoint| p.params[0] - (gt - p.params[1] / PI);
    let mut meet = None;
    for w in trace.points.windows(2) {
        let (d0, d1) = (w[0].x - 0.25, w[1].x - 0.25);
        if d0.signum() != d1.signum() {
            let t = d0 / (d0 - d1);
            let a = w[0].params[1] + t * (w[1].params[1] - w[0].params[1]);
            let gap = dist(&w[0]).abs().max(dist(&w[1]).abs());
            meet = Some((a, gap));
        }
    }
    let (meet, sep) = meet.ok_or("traced type II curve does not reach the SN line")?;
    let want = gamma / q;
    ensure(
        (meet - want).abs() < 1e-3 && sep < 1e-4,
        format!("meets at alpha = {meet} (separation {sep:.1e}), gamma/q* = {want}"),
    )?;
    Ok(format!(
        "q* = {q:.12}; traced type II meets SN line at alpha = {meet:.6} (gamma/q* = {want:.6}, separation {sep:.1e})"
    ))
}

fn c4_f2_structure() -> Outcome {
    let b = 0.7;
    let fam = CanonicalFamily { n: 2, b };
    let bc2 = atlas::bc_point_on_line(&fam, 0, 1, CurveKind::BorderTypeII, 0, 0.5, (-0.1, 0.1)).map_err(|e| e.to_string())?;
    let bc1 = atlas::bc_point_on_line(&fam, 0, 1, CurveKind::BorderTypeI, 0, 0.5, (0.2, 0.33)).map_err(|e| e.to_string())?;
    ensure(bc2.params[0].abs() < 1e-8, format!("stable BC at a = {}", bc2.params[0]))?;
    ensure((bc1.params[0] - 0.3).abs() < 1e-8, format!("unstable BC at a = {}", bc1.params[0]))?;
    let mut worst: f64 = 0.0;
    for i in 0..=6 {
        let c = 0.1 * i as f64;
        let want = f2_bifurcation_structure(b, c).map_err(|e| e.to_string())?.sn_a;
        let pt = atlas::sn_point_on_line(&fam, 0, 1, 0, c, (want + 0.01, 0.5)).map_err(|e| format!("c = {c}: {e}"))?;
        worst = worst.max((pt.params[0] - want).abs());
    }
    ensure(worst < 1e-8, format!("SN deviation {worst:.2e}"))?;
    let t = Transect { from: [-0.1, 0.5], to: [0.45, 0.5], samples: 2000 };
    let label = atlas::classify_tongue_sequence(&fam, 0, 1, &t).map_err(|e| e.to_string())?;
    ensure(label == SequenceLabel::A, format!("sequence {label:?}"))?;
    Ok(format!(
        "BC at a = {:.1e}, {:.12}; SN max deviation {worst:.1e}; sequence (a)",
        bc2.params[0], bc1.params[0]
    ))
}

fn c5_gap_scaling() -> Outcome {
    let gamma = 0.5;
    let mus: Vec<f64> = (0..8).map(|i| 10f64.powf(-4.0 + 2.0 * i as f64 / 7.0)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &mu in &mus {
        let lift = StsParams::new(gamma + mu, 0.3, gamma).map_err(|e| e.to_string())?.lift();
        let gaps = lift.locate_gaps();
        ensure(gaps.len() == 1, format!("mu = {mu}: {} gaps", gaps.len()))?;
        xs.push(mu.ln());
        ys.push(gaps[0].size().ln());
    }
    let (slope, _) = roots::linear_fit(&xs, &ys);
    ensure((slope - 0.5).abs() <= 0.05, format!("slope {slope}"))?;
    Ok(format!("log-log slope {slope:.4} over mu in [1e-4, 1e-2]"))
}

fn c6_staircase() -> Outcome {
    let k = 10_000;
    let n = 2000;
    let mut prev = f64::NEG_INFINITY;
    let mut first = 0.0;
    let mut last = 0.0;
    for i in 0..n {
        let a = i as f64 / (n - 1) as f64;
        let lift = CanonicalParams::new(5, a, 0.9, 1.2).map_err(|e| e.to_string())?.lift();
        let r = lift.rotation_number(0.0, k).map_err(|e| e.to_string())?.value;
        ensure(r >= prev, format!("rho decreases at a = {a}: {prev} -> {r}"))?;
        if i == 0 {
            first = r;
        }
        last = r;
        prev = r;
    }
    ensure(first.abs() < 1e-4 && (last - 1.0).abs() < 1e-4, format!("rho(0) = {first}, rho(1) = {last}"))?;
    Ok(format!("{n} values non-decreasing, rho(0) = {first}, rho(1) = {last}"))
}

/// `β` with rotation number near the golden mean, by bisection.
fn golden_beta(alpha: f64, gamma: f64) -> Result<f64, String> {
    let target = (5f64.sqrt() - 1.0) / 2.0;
    let rho = |beta: f64| {
        StsParams::new(alpha, beta, gamma)
            .and_then(|p| p.lift().rotation_number(0.0, 20_000))
            .map(|r| r.value - target)
            .unwrap_or(f64::NAN)
    };
    roots::bisect(rho, 0.05, 0.33, 1e-13).map_err(|e| e.to_string())
}

fn c7_cantor_vs_dense() -> Outcome {
    let gamma = 0.5;
    let mut holes = Vec::new();
    for alpha in [0.6, 0.4] {
        let beta = golden_beta(alpha, gamma)?;
        let lift = StsParams::new(alpha, beta, gamma).map_err(|e| e.to_string())?.lift();
        let mut x = lift.iterate(0.0, 1000).map_err(|e| e.to_string())?;
        let mut pts = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            x = lift.eval(x).map_err(|e| e.to_string())?;
            pts.push(x);
        }
        holes.push((alpha, beta, atlas::max_hole(&pts)));
    }
    ensure(holes[0].2 > 0.01, format!("alpha = 0.6 max hole {}", holes[0].2))?;
    ensure(holes[1].2 < 0.001, format!("alpha = 0.4 max hole {}", holes[1].2))?;
    Ok(format!(
        "alpha = 0.6 (beta = {:.8}): max hole {:.4}; alpha = 0.4 (beta = {:.8}): max hole {:.2e}",
        holes[0].1, holes[0].2, holes[1].1, holes[1].2
    ))
}

fn c8_wedge() -> Outcome {
    let (l, r) = sts::wedge_boundaries(1.3, 0.5).map_err(|e| e.to_string())?;
    ensure((l - 0.3508).abs() <= 2e-3 && (r - 0.3653).abs() <= 2e-3, format!("edges ({l}, {r})"))?;
    let count = |beta: f64| StsParams::new(1.3, beta, 0.5).map(|p| p.lift().locate_gaps().len()).unwrap_or(0);
    let inside = [count(0.358), count(0.5 * (l + r))];
    let outside = [count(0.34), count(l - 0.005), count(r + 0.005)];
    ensure(inside.iter().all(|&c| c == 3), format!("inside counts {inside:?}"))?;
    ensure(outside.iter().all(|&c| c == 1), format!("outside counts {outside:?}"))?;
    Ok(format!("edges ({l:.6}, {r:.6}); gap counts inside {inside:?}, outside {outside:?}"))
}

fn c9_codim2() -> Outcome {
    let gamma = 0.5;
    let c = sts::codim2_locate(gamma).map_err(|e| e.to_string())?;
    let res = c.residuals();
    let worst = res.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    ensure(worst < 1e-8, format!("residuals {res:?}"))?;
    ensure(c.slope_product() < 0.0, format!("T_d'(c0) T_d'(c1) = {}", c.slope_product()))?;
    let w = sts::wedge_boundaries_near(c.alpha, gamma, Some(c.beta)).map_err(|e| e.to_string())?;
    ensure(
        c.beta > w.left.beta && c.beta < w.right.beta,
        format!("beta = {} outside wedge ({}, {})", c.beta, w.left.beta, w.right.beta),
    )?;
    Ok(format!(
        "(alpha, beta) = ({:.8}, {:.8}) in wedge ({:.6}, {:.6}); max residual {worst:.1e}; slope product {:.4}",
        c.alpha,
        c.beta,
        w.left.beta,
        w.right.beta,
        c.slope_product()
    ))
}

fn c12_universal() -> Outcome {
    use gapmaps_core::lift::SampledLift;
    use gapmaps_core::threshold::ThresholdSystemSpec;
    use gapmaps_core::Composition;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    let mut rng = rand::rngs::StdRng::seed_from_u64(20_240_917);
    let sts_p = StsParams::new(0.7, 0.15, 0.5).map_err(|e| e.to_string())?;
    let spec = Arc::new(ThresholdSystemSpec::sts(&sts_p).map_err(|e| e.to_string())?);
    let xs: Vec<f64> = (0..64).map(|i| i as f64 / 64.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x + 0.3 + 0.05 * (6.0 * x).sin()).collect();
    let lifts: Vec<(&str, Lift)> = vec![
        ("canonical", CanonicalParams::new(5, 0.5, 0.9, 1.2).map_err(|e| e.to_string())?.lift()),
        ("sts", sts_p.lift()),
        ("sts lower", Lift::Sts(sts_p, Composition::DownAfterUp)),
        ("threshold", spec.lift(Composition::UpAfterDown)),
        ("torus", Lift::TorusReturn(Arc::new(SampledLift::new(xs, ys).map_err(|e| e.to_string())?))),
        ("rotation", Lift::Rotation(0.3819)),
    ];
    let mut worst_period: f64 = 0.0;
    for (name, lift) in &lifts {
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let d = lift.eval(x + 1.0).map_err(|e| format!("{name}: {e}"))? - lift.eval(x).map_err(|e| e.to_string())?;
            worst_period = worst_period.max((d - 1.0).abs());
        }
    }
    ensure(worst_period < 1e-12, format!("periodicity defect {worst_period:.2e}"))?;

    // Derivatives against central differences, away from gaps.
    let mut checked = 0;
    for (name, lift) in &lifts[..4] {
        let gaps = lift.locate_gaps();
        for _ in 0..100 {
            let x: f64 = rng.gen_range(0.0..1.0);
            if gaps.iter().any(|g| {
                let d = (g.x_gap - x).abs();
                d.min(1.0 - d) < 1e-2
            }) {
                continue;
            }
            let h = 1e-6;
            let fd = (lift.eval(x + h).map_err(|e| e.to_string())? - lift.eval(x - h).map_err(|e| e.to_string())?) / (2.0 * h);
            let d = lift.eval_derivative(x).map_err(|e| format!("{name} at {x}: {e}"))?;
            ensure(
                (d - fd).abs() <= 1e-6f64.max(1e-4 * d.abs()),
                format!("{name}: F'({x}) = {d}, difference quotient {fd}"),
            )?;
            checked += 1;
        }
    }

    // Down-map pre-image counts.
    for (alpha, gamma) in [(0.5, 0.5), (4.0, 3.0)] {
        let spec = ThresholdSystemSpec::sts(&StsParams::new(alpha, 0.5, gamma).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let n = spec.preimage_count_down(x);
            ensure(n % 2 == 1, format!("alpha = {alpha}: {n} pre-images at x = {x}"))?;
        }
    }

    // Both composition orders have the same rotation number.
    let k = 100_000;
    let mut worst_rho: f64 = 0.0;
    for (alpha, beta) in [(0.4, 0.3), (0.7, 0.15), (0.6, 0.21)] {
        let p = StsParams::new(alpha, beta, 0.5).map_err(|e| e.to_string())?;
        let r1 = Lift::Sts(p, Composition::UpAfterDown).rotation_number(0.1, k).map_err(|e| e.to_string())?.value;
        let r2 = Lift::Sts(p, Composition::DownAfterUp).rotation_number(0.1, k).map_err(|e| e.to_string())?.value;
        worst_rho = worst_rho.max((r1 - r2).abs());
    }
    ensure(worst_rho <= 2.0 / k as f64, format!("rotation numbers differ by {worst_rho:.2e}"))?;
    Ok(format!(
        "periodicity {worst_period:.1e}; {checked} derivatives checked; pre-image counts odd; rotation difference {worst_rho:.1e}"
    ))
}

fn cherry_grid() -> Vec<f64> {
    (0..2000).map(|i| i as f64 / 2000.0).collect()
}

fn c10_cherry_gap() -> Outcome {
    let p = CherryParams::new(1.0, 45.0, 0.66 * 0.375, 0.25, -1.0 / 70.0).map_err(|e| e.to_string())?;
    let map = cherry::build_return_map(&p, &cherry_grid()).map_err(|e| e.to_string())?;
    let g = map.gap.ok_or("no gap found")?;
    ensure(
        (g.lower - 0.5200).abs() <= 0.01 && (g.upper - 0.6675).abs() <= 0.01,
        format!("gap ({}, {})", g.lower, g.upper),
    )?;
    let opts = IntegrationOptions::default();
    let d = 1e-9;
    let mut slopes = [0.0; 2];
    for (k, side) in [-1.0, 1.0].into_iter().enumerate() {
        let f1 = cherry::return_lifted(&p, g.at + side * d, &opts).map_err(|e| e.to_string())?;
        let f2 = cherry::return_lifted(&p, g.at + side * 2.0 * d, &opts).map_err(|e| e.to_string())?;
        slopes[k] = ((f2 - f1) / d).abs();
    }
    ensure(slopes.iter().all(|&s| s > 1e2), format!("edge slopes {slopes:?}"))?;
    Ok(format!("gap ({:.6}, {:.6}) at y = {:.8}; edge slopes ({:.3e}, {:.3e})", g.lower, g.upper, g.at, slopes[0], slopes[1]))
}

fn c11_cherry_slopes() -> Outcome {
    let p = CherryParams::new(1.0, 45.0, 0.66 * 0.375, 0.25, 1.0 / 70.0).map_err(|e| e.to_string())?;
    let mean = cherry::mean_slope(&p, 0.406245, 0.406255).map_err(|e| e.to_string())?;
    let report = cherry::scaling_analysis(&p, &[1.0 / 40.0, 1.0 / 70.0, 1.0 / 120.0]).map_err(|e| e.to_string())?;
    let k = report.kappa_normalized.ok_or("no slope fit")?;
    let detail = format!(
        "window mean slope {mean:.1}; fitted kappa/(lambda pi) = {k:.4}; per-mu {:?}",
        report.slopes.iter().map(|s| format!("{:.3}", s.normalized)).collect::<Vec<_>>()
    );
    ensure(mean >= 1e4, detail.clone())?;
    ensure((0.5..=2.0).contains(&k), detail.clone())?;
    Ok(detail)
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "STS (1,1) saddle-node lines", c1_sn_lines),
        (2, "type I border collision closed form", c2_type_one),
        (3, "q* and type II / saddle-node meeting", c3_qstar),
        (4, "F_2 border collisions, saddle-node and sequence (a)", c4_f2_structure),
        (5, "gap size scales like sqrt(mu)", c5_gap_scaling),
        (6, "rotation-number staircase", c6_staircase),
        (7, "Cantor versus dense orbits", c7_cantor_vs_dense),
        (8, "multi-gap wedge", c8_wedge),
        (9, "codimension-two crossing", c9_codim2),
        (10, "Cherry gap", c10_cherry_gap),
        (11, "Cherry steep window and slope scaling", c11_cherry_slopes),
        (12, "universal properties", c12_universal),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let t0 = Instant::now();
        let r = f();
        let dt = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg} [{dt:.1} s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg} [{dt:.1} s]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
