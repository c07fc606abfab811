//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are printed even when everything passes.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use icageo_core::dataset::Dataset;
use icageo_core::estimators::{mutual_information, negentropy_scalar, MiMethod};
use icageo_core::eval::{amari_index, diagnose};
use icageo_core::gaussian::{correlation, sample_covariance, verify_gaussian_pythagoras, whitener, Covariance};
use icageo_core::ica::{orthogonal_ica, relative_gradient_ica, stationarity_matrix, ScoreKind, ScoreModel, SolverConfig};
use icageo_core::linalg::{givens, off_diagonal_norm};
use icageo_core::model::{random_orthogonal, simulate, MixingModel};
use icageo_core::oracle::{
    gaussianity_invariance_check, kld_invariance_check, verify_four_point_identity, verify_product_pythagoras,
    AnalyticDensity2D, DiscreteJoint, Grid, Mat2, DEFAULT_STEP,
};
use icageo_core::rng::Rng;
use icageo_core::source::SourceSpec;
use nalgebra::{DMatrix, DVector};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_spd(n: usize, rng: &mut Rng) -> Covariance {
    let g = DMatrix::from_fn(n, n, |_, _| SourceSpec::Gaussian.sample(rng));
    Covariance::new(&g * g.transpose() + DMatrix::identity(n, n) * 0.05).unwrap()
}

fn random_probabilities(n: usize, rng: &mut Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.uniform()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

fn random_joint(rng: &mut Rng) -> DiscreteJoint {
    let r = 2 + (rng.uniform() * 5.0) as usize;
    let c = 2 + (rng.uniform() * 5.0) as usize;
    let mut m = DMatrix::from_fn(r, c, |_, _| if rng.uniform() < 0.2 { 0.0 } else { rng.uniform().powi(3) });
    // keep every row and column populated
    for k in 0..r.max(c) {
        let (i, j) = (k % r, k % c);
        if m.row(i).sum() == 0.0 || m.column(j).sum() == 0.0 {
            m[(i, j)] = 0.5;
        }
    }
    let total = m.sum();
    DiscreteJoint::new(m / total).unwrap()
}

/// `U diag(σ₁, σ₂) Vᵀ` with singular values in `[0.5, 2]`.
fn random_transform(rng: &mut Rng) -> Mat2 {
    let u = random_orthogonal(2, rng);
    let v = random_orthogonal(2, rng);
    let s = DVector::from_fn(2, |_, _| 0.5 * 4f64.powf(rng.uniform()));
    let a = u * DMatrix::from_diagonal(&s) * v.transpose();
    [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]]
}

fn criterion_1() -> Outcome {
    let mut rng = Rng::new(101);
    let mut worst_discrete: f64 = 0.0;
    for _ in 0..1000 {
        let joint = random_joint(&mut rng);
        let (r, c) = joint.shape();
        let a = random_probabilities(r, &mut rng);
        let b = random_probabilities(c, &mut rng);
        worst_discrete = worst_discrete.max(verify_product_pythagoras(&joint, (&a, &b)).unwrap().residual);
    }
    let mut worst_gaussian: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + (rng.uniform() * 5.0) as usize;
        let p = random_spd(n, &mut rng);
        let q = random_spd(n, &mut rng);
        worst_gaussian = worst_gaussian.max(verify_gaussian_pythagoras(&p, &q).unwrap());
    }
    outcome(
        worst_discrete < 1e-12 && worst_gaussian < 1e-10,
        format!("discrete worst {worst_discrete:.1e} (< 1e-12, 1000 joints); Gaussian worst {worst_gaussian:.1e} (< 1e-10, 100 pairs)"),
    )
}

fn criterion_2() -> Outcome {
    let densities = [
        ("gaussian_rho_0.5", AnalyticDensity2D::gaussian([[1.0, 0.5], [0.5, 1.0]])),
        ("uniform_x_laplace", AnalyticDensity2D::product(SourceSpec::Uniform, SourceSpec::Laplace)),
        ("rotated_laplace_30", AnalyticDensity2D::rotated(SourceSpec::Laplace, SourceSpec::Laplace, 30.0)),
    ];
    // the identities hold exactly for the discrete grid measure, so once a
    // residual reaches round-off it cannot shrink further
    const ROUND_OFF: f64 = 1e-12;
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, p) in &densities {
        let coarse = Grid::for_density(p, 2.0 * DEFAULT_STEP).unwrap();
        let r_coarse = verify_four_point_identity(p, &coarse).unwrap().worst_residual();
        let r_fine = verify_four_point_identity(p, &coarse.refined()).unwrap().worst_residual();
        let ok = r_fine < 1e-3 && r_fine <= r_coarse.max(ROUND_OFF);
        passed &= ok;
        parts.push(format!("{name} {r_coarse:.1e} -> {r_fine:.1e}"));
    }
    // a density whose boundary makes the grid terms converge visibly
    let tilted = AnalyticDensity2D::rotated(SourceSpec::Uniform, SourceSpec::Uniform, 30.0);
    let g = Grid::for_density(&tilted, 0.04).unwrap();
    let mut errors = Vec::new();
    let exact = 2.0 * SourceSpec::Uniform.negentropy();
    for grid in [g, g.refined(), g.refined().refined()] {
        let r = verify_four_point_identity(&tilted, &grid).unwrap();
        errors.push((r.terms["joint_negentropy"] - exact).abs());
    }
    let converging = errors.windows(2).all(|w| w[1] < w[0]);
    passed &= converging;
    parts.push(format!(
        "rotated uniform joint G error {:.1e} -> {:.1e} -> {:.1e}",
        errors[0], errors[1], errors[2]
    ));
    outcome(passed, format!("worst residual at steps 0.02 -> 0.01: {}", parts.join("; ")))
}

fn criterion_3() -> Outcome {
    let mut rng = Rng::new(303);
    let p = AnalyticDensity2D::product(SourceSpec::Uniform, SourceSpec::Laplace);
    let q = AnalyticDensity2D::gaussian([[1.5, 0.3], [0.3, 1.2]]);
    let (mut worst_g, mut worst_kld): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let a = random_transform(&mut rng);
        worst_g = worst_g.max(gaussianity_invariance_check(&p, &a, DEFAULT_STEP).unwrap().worst_residual());
        worst_kld = worst_kld.max(kld_invariance_check(&p, &q, &a, DEFAULT_STEP).unwrap().worst_residual());
    }
    let mut worst_c: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + (rng.uniform() * 5.0) as usize;
        let cov = random_spd(n, &mut rng);
        let d: Vec<f64> = (0..n).map(|_| 0.1 * 100f64.powf(rng.uniform())).collect();
        worst_c = worst_c.max((correlation(&cov.scaled(&d).unwrap()) - correlation(&cov)).abs());
    }
    outcome(
        worst_g < 1e-3 && worst_kld < 1e-3 && worst_c < 1e-10,
        format!("G invariance worst {worst_g:.1e}, KLD invariance worst {worst_kld:.1e} (20 transforms each, < 1e-3); C scaling worst {worst_c:.1e} (< 1e-10)"),
    )
}

fn draws(spec: SourceSpec, t: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    (0..t).map(|_| spec.sample(&mut rng)).collect()
}

fn correlated_gaussian(t: usize, seed: u64) -> Dataset {
    let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]);
    let model = MixingModel::new(l, vec![SourceSpec::Gaussian; 2]).unwrap();
    simulate(&model, t, &Rng::new(seed)).unwrap().0
}

fn criterion_4() -> Outcome {
    let sizes = [1_000, 10_000, 100_000];
    let reps = [40, 20, 10];
    let mi_exact = -0.5 * 0.75f64.ln();
    type Estimate = Box<dyn Fn(usize, u64) -> f64>;
    let cases: Vec<(&str, f64, Estimate)> = vec![
        (
            "uniform G",
            SourceSpec::Uniform.negentropy(),
            Box::new(|t, seed| negentropy_scalar(&draws(SourceSpec::Uniform, t, seed)).unwrap().value),
        ),
        (
            "laplace G",
            SourceSpec::Laplace.negentropy(),
            Box::new(|t, seed| negentropy_scalar(&draws(SourceSpec::Laplace, t, seed)).unwrap().value),
        ),
        (
            "gaussian rho=0.5 I",
            mi_exact,
            Box::new(|t, seed| mutual_information(&correlated_gaussian(t, seed), MiMethod::default()).unwrap().value),
        ),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, exact, estimate) in &cases {
        let at_1e5 = estimate(100_000, 4242);
        let calibrated = (at_1e5 - exact).abs() < 0.02;
        let rmse: Vec<f64> = sizes
            .iter()
            .zip(reps)
            .map(|(&t, r)| {
                let se: f64 = (0..r).map(|k| (estimate(t, 1000 + k as u64) - exact).powi(2)).sum();
                (se / r as f64).sqrt()
            })
            .collect();
        // a later RMSE may exceed an earlier one by at most two of its own standard errors
        let monotone = (1..3).all(|k| rmse[k] <= rmse[k - 1] + 2.0 * rmse[k] / (2.0 * reps[k] as f64).sqrt());
        passed &= calibrated && monotone;
        parts.push(format!(
            "{name} {at_1e5:.4} (exact {exact:.4}), RMSE {:.4}/{:.4}/{:.4}",
            rmse[0], rmse[1], rmse[2]
        ));
    }
    outcome(passed, format!("{} over T = 1e3/1e4/1e5", parts.join("; ")))
}

fn criterion_5() -> Outcome {
    let mut rng = Rng::new(505);
    let model = MixingModel::random(vec![SourceSpec::Uniform, SourceSpec::Laplace], 10.0, &mut rng).unwrap();
    let (x, _) = simulate(&model, 100_000, &rng.child(1)).unwrap();
    let w = whitener(&sample_covariance(&x).unwrap()).unwrap().matrix;
    let z = x.transform(&w).unwrap();
    // W A is a rotation (possibly with a reflection); R(θ) W A is a signed
    // permutation when θ undoes the angle of its first column
    let q = &w * model.mixing();
    let separating = (-q[(1, 0)].atan2(q[(0, 0)])).rem_euclid(FRAC_PI_2);

    let mut angles = Vec::new();
    let mut mi = Vec::new();
    let mut totals = Vec::new();
    for _ in 0..16 {
        let theta = rng.uniform() * FRAC_PI_2;
        let y = z.transform(&givens(2, 0, 1, theta)).unwrap();
        let i = mutual_information(&y, MiMethod::default()).unwrap().value;
        let g = negentropy_scalar(y.channel(0)).unwrap().value + negentropy_scalar(y.channel(1)).unwrap().value;
        angles.push(theta);
        mi.push(i);
        totals.push(i + g);
    }
    let mean = totals.iter().sum::<f64>() / 16.0;
    let spread = totals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);

    // Î(θ) is even about the separating angle and has period π/2; fit its
    // first two harmonics and minimize the fit
    let basis = |t: f64| [1.0, (4.0 * t).cos(), (4.0 * t).sin(), (8.0 * t).cos(), (8.0 * t).sin()];
    let design = DMatrix::from_fn(16, 5, |r, c| basis(angles[r])[c]);
    let coef = design.clone().svd(true, true).solve(&DVector::from_vec(mi.clone()), 1e-12).unwrap();
    let fitted = |t: f64| basis(t).iter().zip(coef.iter()).map(|(b, c)| b * c).sum::<f64>();
    let best = (0..9000)
        .map(|k| k as f64 * FRAC_PI_2 / 9000.0)
        .min_by(|a, b| fitted(*a).total_cmp(&fitted(*b)))
        .unwrap();
    let d = (best - separating).rem_euclid(FRAC_PI_2);
    let error_deg = d.min(FRAC_PI_2 - d) * 180.0 / PI;
    outcome(
        spread <= 0.03 && error_deg <= 5.0,
        format!(
            "I + sum G = {mean:.4}, max deviation {spread:.4} (<= 0.03); minimizer of I off the separating rotation by {error_deg:.2} deg (<= 5)"
        ),
    )
}

const SEPARATION_TRIALS: u64 = 20;

struct Trials {
    amari: Vec<f64>,
    correlation: Vec<f64>,
    slowest: f64,
}

fn trials(specs: &[SourceSpec], run: impl Fn(&Dataset, u64) -> icageo_core::error::Result<icageo_core::ica::SeparationResult>) -> Trials {
    let mut out = Trials {
        amari: Vec::new(),
        correlation: Vec::new(),
        slowest: 0.0,
    };
    for seed in 0..SEPARATION_TRIALS {
        let mut rng = Rng::new(600 + seed);
        let model = MixingModel::random(specs.to_vec(), 10.0, &mut rng).unwrap();
        let (x, _) = simulate(&model, 20_000, &rng.child(1)).unwrap();
        let start = Instant::now();
        let r = run(&x, seed).unwrap();
        out.slowest = out.slowest.max(start.elapsed().as_secs_f64());
        out.amari.push(amari_index(&(&r.demixing * model.mixing())).unwrap().value);
        out.correlation.push(correlation(&sample_covariance(&r.recovered).unwrap()));
    }
    out
}

fn count(values: &[f64], pred: impl Fn(f64) -> bool) -> usize {
    values.iter().filter(|&&v| pred(v)).count()
}

fn relative(kind: ScoreKind) -> impl Fn(&Dataset, u64) -> icageo_core::error::Result<icageo_core::ica::SeparationResult> {
    move |x, seed| relative_gradient_ica(x, &SolverConfig { seed, ..SolverConfig::with_score(kind) })
}

fn criterion_6() -> Outcome {
    use SourceSpec::{Laplace, Uniform};
    let n = SEPARATION_TRIALS as usize;
    let needed = (0.95 * n as f64).ceil() as usize;
    let adaptive = trials(&[Laplace, Laplace, Uniform, Uniform], relative(ScoreKind::Adaptive));
    let tanh_laplace = trials(&[Laplace; 4], relative(ScoreKind::Tanh));
    let tanh_uniform = trials(&[Uniform; 4], relative(ScoreKind::Tanh));
    let good_a = count(&adaptive.amari, |a| a < 0.05);
    let good_t = count(&tanh_laplace.amari, |a| a < 0.05);
    let failed_u = count(&tanh_uniform.amari, |a| a > 0.2);
    let slowest = adaptive.slowest.max(tanh_laplace.slowest).max(tanh_uniform.slowest);
    outcome(
        good_a >= needed && good_t >= needed && 2 * failed_u >= n && slowest < 30.0,
        format!(
            "adaptive on 2 laplace + 2 uniform: {good_a}/{n} below 0.05; tanh on 4 laplace: {good_t}/{n} below 0.05; \
             tanh on 4 uniform: {failed_u}/{n} above 0.2 (need >= half); slowest trial {slowest:.1}s"
        ),
    )
}

fn criterion_7() -> Outcome {
    use SourceSpec::{Laplace, Uniform};
    let n = SEPARATION_TRIALS as usize;
    let r = trials(&[Laplace, Laplace, Uniform, Uniform], |x, seed| {
        orthogonal_ica(x, &SolverConfig { seed, ..SolverConfig::default() })
    });
    let good = count(&r.amari, |a| a < 0.05);
    let white = count(&r.correlation, |c| c < 1e-10);
    let worst_c = r.correlation.iter().copied().fold(0.0, f64::max);
    outcome(
        good >= (0.95 * n as f64).ceil() as usize && white == n,
        format!("{good}/{n} below 0.05; {white}/{n} with C < 1e-10 (worst {worst_c:.1e}); slowest trial {:.1}s", r.slowest),
    )
}

fn worst_stationarity(specs: &[SourceSpec], kind: ScoreKind, t: usize) -> f64 {
    let scores = vec![ScoreModel::new(kind); specs.len()];
    let model = MixingModel::new(DMatrix::identity(specs.len(), specs.len()), specs.to_vec()).unwrap();
    (0..20)
        .map(|seed| {
            let s = simulate(&model, t, &Rng::new(800 + seed)).unwrap().1;
            off_diagonal_norm(&stationarity_matrix(&s, &scores).unwrap())
        })
        .fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let t = 100_000;
    let specs = [SourceSpec::Uniform; 4];
    let bound = 3.0 * specs.len() as f64 / (t as f64).sqrt();
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [ScoreKind::Tanh, ScoreKind::Cube, ScoreKind::Identity] {
        let worst = worst_stationarity(&specs, kind, t);
        passed &= worst < bound;
        parts.push(format!("{kind} {worst:.4}"));
    }
    // with Laplace sources the cube score's E{s⁶} = 90 puts the norm near
    // 24/√T, above the bound; shown for reference
    let mixed = [SourceSpec::Laplace, SourceSpec::Laplace, SourceSpec::Uniform, SourceSpec::Uniform];
    let reference: Vec<String> = [ScoreKind::Tanh, ScoreKind::Cube, ScoreKind::Identity]
        .into_iter()
        .map(|kind| format!("{kind} {:.4}", worst_stationarity(&mixed, kind, t)))
        .collect();
    outcome(
        passed,
        format!(
            "4 uniform sources, worst over 20 seeds: {} (bound 3N/sqrt(T) = {bound:.4}); 2 laplace + 2 uniform for reference: {}",
            parts.join(", "),
            reference.join(", ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let n = SEPARATION_TRIALS as usize;
    let mut flagged = 0;
    let mut worst_g = f64::NEG_INFINITY;
    let mut amari = Vec::new();
    for seed in 0..SEPARATION_TRIALS {
        let mut rng = Rng::new(900 + seed);
        let model = MixingModel::random(vec![SourceSpec::Gaussian; 3], 10.0, &mut rng).unwrap();
        let (x, _) = simulate(&model, 20_000, &rng.child(1)).unwrap();
        let r = orthogonal_ica(&x, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        flagged += usize::from(r.no_improvement);
        amari.push(amari_index(&(&r.demixing * model.mixing())).unwrap().value);
        worst_g = worst_g.max(diagnose(&r.recovered, seed).unwrap().negentropy_sum());
    }
    let median = {
        let mut a = amari.clone();
        a.sort_by(f64::total_cmp);
        a[n / 2]
    };
    outcome(
        flagged == n && worst_g < 0.02,
        format!("{flagged}/{n} runs flagged NoImprovement; worst sum of marginal G {worst_g:.4} (< 0.02); median Amari index {median:.2} (not required small)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact identities", criterion_1),
        ("quadrature identities", criterion_2),
        ("invariances", criterion_3),
        ("estimator calibration", criterion_4),
        ("rotation decomposition", criterion_5),
        ("relative-gradient separation", criterion_6),
        ("orthogonal separation", criterion_7),
        ("stationarity", criterion_8),
        ("Gaussian control", criterion_9),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        failures += usize::from(!o.passed);
        println!(
            "criterion {} [{name}] {}: {} ({secs:.1}s)",
            k + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{}/9 acceptance criteria pass", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
