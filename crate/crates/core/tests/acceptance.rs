//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use magpath_core::block::BlockOperator;
use magpath_core::cp::*;
use magpath_core::grid::{make_grid, pair, GridFunction};
use magpath_core::operator::{discretize, OperatorKind, OperatorMatrix};
use magpath_core::oracle::{adjudicate, time_sliced_propagator, AdjudicationSettings};
use magpath_core::scalar::{cexp, cplx, C};
use magpath_core::wn::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn ac1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for &(t, k) in &[(1.0f64, 1.0f64), (0.5, 2.0), (1.3, 0.7)] {
        let start = Instant::now();
        let m = m_matrix(t, k, Some(&make_grid(t, 4096).map_err(err)?)).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let num = m.numerical.ok_or("no numerical matrix")?;
        let scale = (k * t).tan().abs() / k;
        let rel = (0..4).map(|e| (num[(e / 2, e % 2)] - m.closed[(e / 2, e % 2)]).norm()).fold(0.0, f64::max) / scale;
        worst = (worst.0.max(rel), worst.1.max(secs));
    }
    verdict(worst.0 <= 1e-6 && worst.1 <= 60.0, format!("max rel err {:.2e}, slowest case {:.2} s", worst.0, worst.1))
}

fn ac2() -> Outcome {
    let r = spectrum_idlk(make_grid(1.0, 2048).map_err(err)?, 1.0, 5).map_err(err)?;
    let want: Vec<f64> = (1..=5).map(|n| 1.0 - (1.0 / ((n as f64 - 0.5) * PI)).powi(2)).collect();
    let rel = r.matched.iter().zip(&want).map(|(a, b)| (a - cplx(*b, 0.0)).norm() / b.abs()).fold(0.0, f64::max);
    let closed = r.closed_form.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-15);
    verdict(
        rel <= 1e-4 && closed && r.multiplicities == vec![2; 5],
        format!("max rel err {rel:.2e}, multiplicities {:?}", r.multiplicities),
    )
}

fn ac3() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for &kt in &[0.3f64, 1.0, 1.3] {
        let exact = kt.cos().powi(2);
        let p = det_idlk(1.0, kt, DetMethod::Product, 10_000).map_err(err)?;
        let d = det_idlk(1.0, kt, DetMethod::Dense, 1024).map_err(err)?;
        worst = (worst.0.max((p - cplx(exact, 0.0)).norm()), worst.1.max((d - cplx(exact, 0.0)).norm()));
    }
    verdict(worst.0 <= 1e-3 && worst.1 <= 1e-3, format!("max |product - cos^2| {:.2e}, max |dense - cos^2| {:.2e}", worst.0, worst.1))
}

fn ac4() -> Outcome {
    let mut res = Vec::new();
    for n in [512, 1024, 2048] {
        let g = make_grid(1.0, n).map_err(err)?;
        let ops = build_cp_operators(g, 1.0);
        let inv = n_inverse_closed(g, 1.0).map_err(err)?;
        res.push(ops.n.mul(&inv).sub(&BlockOperator::identity(g, 4)).norm_inf());
    }
    let ord = orders(&res);
    verdict(
        ord.iter().all(|&p| p >= 1.0) && res[2] <= 5e-3,
        format!("residuals {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2}", res[0], res[1], res[2], ord[0], ord[1]),
    )
}

fn ac5() -> Outcome {
    let q = CPQuery::new(0.5, 1.0, 0.3, -0.2);
    let closed = propagator(&q).map_err(err)?;
    let sliced = time_sliced_propagator(&q, 256, 1e-4).map_err(err)?;
    let rel = (closed - sliced.value).norm() / sliced.value.norm();
    let mut free_worst = 0.0f64;
    for n in [2, 3, 8, 32, 128, 256] {
        let fq = CPQuery::new(0.5, 0.0, 0.3, -0.2);
        let s = time_sliced_propagator(&fq, n, 1e-4).map_err(err)?;
        let c = propagator(&fq).map_err(err)?;
        free_worst = free_worst.max((s.value - c).norm() / c.norm());
    }
    verdict(rel <= 1e-2 && free_worst <= 1e-8, format!("magnetic rel diff {rel:.2e} at N = 256, free worst {free_worst:.2e}"))
}

fn ac6() -> Outcome {
    let queries = [(0.5, 1.0, 0.3, -0.2), (1.0, 0.7, 0.5, 0.1), (0.8, 1.5, -0.4, 0.6), (0.3, 2.0, 0.2, 0.2), (1.2, 0.5, 1.0, -0.5)];
    let mut selected = Vec::new();
    let mut ratio = f64::INFINITY;
    for &(t, k, y1, y2) in &queries {
        let r = adjudicate(&CPQuery::<f64>::new(t, k, y1, y2), &AdjudicationSettings::default()).map_err(err)?;
        let win = r.scores.iter().find(|s| s.variant == r.selected).ok_or("winner missing")?;
        let other_prefactor = match r.selected.prefactor_form {
            PrefactorForm::KOver => PrefactorForm::KtOver,
            PrefactorForm::KtOver => PrefactorForm::KOver,
        };
        let lose = r
            .scores
            .iter()
            .find(|s| s.variant == KernelVariant { prefactor_form: other_prefactor, phase_sign: r.selected.phase_sign })
            .ok_or("loser missing")?;
        ratio = ratio.min(lose.short_time_defect / win.short_time_defect.max(f64::MIN_POSITIVE));
        selected.push(r.selected);
    }
    let consistent = selected.iter().all(|v| *v == selected[0]);
    let stored = selected[0] == ADJUDICATED_VARIANT;
    verdict(
        consistent && stored && ratio >= 10.0,
        format!("unique winner {} on all {} queries, losing prefactor defect ratio >= {ratio:.1e}", selected[0], queries.len()),
    )
}

fn ac7() -> Outcome {
    let (t, y1) = (1.0, 1.0);
    let v = propagator(&CPQuery::new(t, 1e-4, y1, 0.0)).map_err(err)?;
    let free = cexp(cplx(0.0, y1 * y1 / (2.0 * t))) / cplx(0.0, 2.0 * PI * t);
    let rel = (v - free).norm() / free.norm();
    verdict(rel <= 1e-6, format!("rel err {rel:.2e}"))
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(4..40);
        let g = make_grid(rng.random_range(0.2..3.0), n).map_err(err)?;
        let eta = GridFunction::from_fn(g, 2, |_, _| cplx(rng.random_range(-1.0..1.0), 0.0));
        let f = GridFunction::from_fn(g, 2, |_, _| cplx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let y = rng.random_range(-2.0..2.0);
        let zero = BlockOperator::zeros(g, 2);
        let spec = PinnedGaussSpec { k: zero.clone(), l: zero, g: GridFunction::zeros(g, 2), pins: vec![Pin { eta: eta.clone(), y }] };
        let a = tt_pinned_gauss(&spec, &f).map_err(err)?.value;
        let b = tt_donsker(&eta, y, &f).map_err(err)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    let mut exact = true;
    for &(t, k, y1, y2) in &[(0.5, 1.0, 0.3, -0.2), (1.0, 0.0, 1.0, 0.5), (2.0, -0.4, -0.7, 0.1)] {
        let q = CPQuery::new(t, k, y1, y2);
        let gf = generating_functional(&q, &GridFunction::zeros(make_grid(t, 16).map_err(err)?, 4)).map_err(err)?;
        exact &= gf.value == propagator(&q).map_err(err)?;
    }
    verdict(worst <= 1e-12 && exact, format!("pinned vs Donsker max rel diff {worst:.2e}, G(q, 0) == propagator(q): {exact}"))
}

fn ac9() -> Outcome {
    let g = make_grid(1.0, 64).map_err(err)?;
    let n = g.n();
    let lambdas = [-0.02, -0.05, -0.08, -0.1, -0.12];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (j, lam) in lambdas.iter().enumerate() {
        // weighted-orthonormal sine modes sampled at the midpoints
        let u: Vec<f64> = (0..n).map(|i| (2.0f64).sqrt() * ((i as f64 + 0.5) * (j + 1) as f64 * PI / n as f64).sin()).collect();
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += lam * g.weight() * u[a] * u[b];
            }
        }
    }
    let k = BlockOperator::from_dense(g, 1, &OperatorMatrix::from_real(g, m).to_complex());
    let target: f64 = lambdas.iter().map(|l| (1.0 + 2.0 * l).powf(-0.5)).product();
    let (est, se) = mc_gauss_expectation(&k, 1_000_000, 7).map_err(err)?;
    verdict((est - target).abs() <= 3.0 * se, format!("estimate {est:.6} +- {se:.1e}, target {target:.6}"))
}

fn disk(radius: f64, count: usize) -> Vec<C<f64>> {
    (0..count)
        .map(|i| {
            let r = radius * ((i as f64 + 0.5) / count as f64).sqrt();
            let a = i as f64 * 2.399963229728653;
            cplx(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn ac10() -> Outcome {
    let samples = disk(4.0, 64);
    let g = make_grid(0.5, 12).map_err(err)?;
    let xi = GridFunction::from_fn(g, 4, |c, s| cplx((1.0 + c as f64) * 0.3 + s, 0.0));
    let eta = GridFunction::indicator(g, 4, 0).map_err(err)?;
    let donsker = |f: &GridFunction<f64>| tt_donsker(&eta, 0.2, f);
    let ops = build_cp_operators(g, 1.0);
    let nexp = |f: &GridFunction<f64>| tt_nexp_product(&ops.k, &ops.l, f).map(|v| v.value);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, r) in [("donsker", ufunc_probe(&donsker, &xi, &samples)), ("nexp", ufunc_probe(&nexp, &xi, &samples))] {
        let r = r.map_err(err)?;
        ok &= r.fitted_c.is_finite() && r.fitted_d.is_finite() && r.max_violation == 0.0;
        lines.push(format!("{name}: C = {:.3}, D = {:.3}, violation {}", r.fitted_c, r.fitted_d, r.max_violation));
    }
    verdict(ok, lines.join("; "))
}

fn ac11() -> Outcome {
    let (mut op_err, mut pair_err) = (Vec::new(), Vec::new());
    for n in [32, 64, 128, 256] {
        let g = make_grid(1.0, n).map_err(err)?;
        let a = discretize(OperatorKind::A, &g);
        let b = discretize(OperatorKind::B, &g);
        let bsb = discretize(OperatorKind::BStar, &g).mul(&b);
        op_err.push(a.sub(&bsb).row_abs_sums().into_iter().fold(0.0, f64::max));
        let f: Vec<C<f64>> = g.nodes().iter().map(|s| cplx(s.cos(), 0.3 * s)).collect();
        let h: Vec<C<f64>> = g.nodes().iter().map(|s| cplx(1.0 + s * s, -s)).collect();
        let wrap = |v: Vec<C<f64>>| GridFunction::new(g, 1, v.into()).map_err(err);
        let lhs = pair(&wrap(a.apply_slice(&h))?, &wrap(f.clone())?).map_err(err)?;
        let rhs = pair(&wrap(b.apply_slice(&h))?, &wrap(b.apply_slice(&f))?).map_err(err)?;
        pair_err.push((lhs - rhs).norm());
    }
    let (po, pp) = (orders(&op_err), orders(&pair_err));
    let min = po.iter().chain(&pp).copied().fold(f64::INFINITY, f64::min);
    verdict(min >= 1.9, format!("operator orders {po:.2?}, pairing orders {pp:.2?}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC-1", "M-matrix numerical vs closed form", ac1),
        ("AC-2", "spectrum of Id + L(Id+K)^-1", ac2),
        ("AC-3", "determinant equals cos^2(kt)", ac3),
        ("AC-4", "closed-form inverse residual", ac4),
        ("AC-5", "propagator vs time slicing", ac5),
        ("AC-6", "kernel variant adjudication", ac6),
        ("AC-7", "weak-field limit", ac7),
        ("AC-8", "reduction identities", ac8),
        ("AC-9", "Gaussian expectation by Monte Carlo", ac9),
        ("AC-10", "U-functional growth probe", ac10),
        ("AC-11", "A = B*B identities", ac11),
    ];
    let outcomes: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, _, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    (f(), start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| (Err("panicked".into()), 0.0))).collect()
    });
    let mut failed = 0;
    for ((id, name, _), (outcome, secs)) in criteria.iter().zip(outcomes) {
        match outcome {
            Ok(d) => println!("{id:<6} PASS  {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("{id:<6} FAIL  {name}: {d} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
