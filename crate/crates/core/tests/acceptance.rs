//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use bilinear_core::approx::{mollify, BernsteinOperator, MollifierParams};
use bilinear_core::control::{cancellation_control, hold_control, static_control};
use bilinear_core::pde::{resolvent_smooth, simulate, step_heat};
use bilinear_core::presets::{eigen_hold, example_2d, semilinear, sine_mode};
use bilinear_core::steer::{
    bernstein_pipeline_demo, convergence_study, steer_fixed_time, steer_theorem1, FixedTimeOptions,
    Outcome,
};
use bilinear_core::{ControlSchedule, Field, NonlinearitySpec, SpatialGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn eigenfunction_oracle() -> Verdict {
    let g = SpatialGrid::new(1, 199).unwrap();
    let y0 = sine_mode(g);
    let yd = y0.scaled(2.0);
    let zero = NonlinearitySpec::zero();
    let mut worst: f64 = 0.0;
    for t in [0.05, 0.02, 0.01] {
        let control = ControlSchedule::constant(Field::constant(g, LN_2 / t), t).unwrap();
        let tr = simulate(&g, &y0, &control, &zero, t, t / 500.0).unwrap();
        let measured = tr.final_state().distance(&yd).unwrap();
        let exact = 2f64.sqrt() * (1.0 - (-PI * PI * t).exp());
        worst = worst.max((measured - exact).abs() / exact);
    }
    verdict(
        worst < 0.02,
        format!("max relative deviation {worst:.3e} (< 2e-2)"),
    )
}

fn steering_rate() -> Verdict {
    let p = semilinear(199).unwrap();
    let table = convergence_study(&p, &[0.1, 0.05, 0.025, 0.0125]).unwrap();
    let s = table.slope;
    verdict(
        (0.8..=1.2).contains(&s),
        format!("fitted slope {s:.4} (in [0.8, 1.2])"),
    )
}

fn theorem1_example() -> Verdict {
    let p = example_2d(49).unwrap();
    let r = steer_theorem1(&p).unwrap();
    let err = r.final_error.unwrap_or(f64::NAN);
    let pass = r.outcome == Outcome::Success && err < 0.05 && r.attempts.len() <= 8;
    verdict(
        pass,
        format!(
            "outcome {:?}, error {err:.4e} (< 0.05), {} attempts (<= 8), T = {:?}",
            r.outcome,
            r.attempts.len(),
            r.chosen_time
        ),
    )
}

fn bernstein_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut quad: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=200usize);
        let t: f64 = rng.gen();
        let op = BernsteinOperator::from_fn(n, |s| s * s).unwrap();
        let expect = ((n as f64 - 1.0) * t * t + t) / n as f64;
        quad = quad.max((op.eval(t).unwrap() - expect).abs());
    }
    let mut linear: f64 = 0.0;
    for n in [1usize, 7, 50, 200] {
        let op = BernsteinOperator::from_fn(n, |s| 3.0 * s - 1.0).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            linear = linear.max((op.eval(t).unwrap() - (3.0 * t - 1.0)).abs());
        }
        let samples = op.samples();
        linear = linear.max((op.eval(0.0).unwrap() - samples[0]).abs());
        linear = linear.max((op.eval(1.0).unwrap() - samples[n]).abs());
    }
    let mut deriv: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=120usize);
        let mut v = 0.0;
        let samples: Vec<f64> = (0..=n)
            .map(|_| {
                v += rng.gen_range(-1.0..1.0) / n as f64;
                v
            })
            .collect();
        let op = BernsteinOperator::new(samples).unwrap();
        let t = rng.gen_range(1e-3..1.0 - 1e-3);
        let h = 1e-6;
        let fd = (op.eval(t + h).unwrap() - op.eval(t - h).unwrap()) / (2.0 * h);
        deriv = deriv.max((op.derivative(t).unwrap() - fd).abs());
    }
    verdict(
        quad < 1e-12 && linear < 1e-12 && deriv < 1e-5,
        format!("quadratic {quad:.1e}, linear/endpoint {linear:.1e} (< 1e-12), derivative {deriv:.1e} (< 1e-5)"),
    )
}

fn bernstein_bound() -> Verdict {
    let u = |t: f64| (t - 0.5).abs();
    let mut errors = Vec::new();
    let mut within = true;
    for n in [100usize, 400, 1600] {
        let op = BernsteinOperator::from_fn(n, u).unwrap();
        let err = (0..1000)
            .map(|i| {
                let t = i as f64 / 999.0;
                (op.eval(t).unwrap() - u(t)).abs()
            })
            .fold(0.0, f64::max);
        let eta = (n as f64).powf(-1.0 / 3.0);
        let bound = eta + 0.5 / (2.0 * eta * eta * n as f64);
        within &= err <= bound;
        errors.push(err);
    }
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        within && monotone,
        format!(
            "sup errors {}, within bound {within}, non-increasing {monotone}",
            list(&errors)
        ),
    )
}

fn mollifier_properties() -> Verdict {
    let g = SpatialGrid::new(1, 199).unwrap();
    let h = Field::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
    let mut bounded = true;
    let mut gaps = Vec::new();
    for r in [0.2, 0.1, 0.05] {
        let hr = mollify(&h, &MollifierParams::new(1, r).unwrap()).unwrap();
        bounded &= hr
            .values()
            .iter()
            .all(|&v| v >= r && v <= h.linf_norm() + r);
        gaps.push(hr.distance(&h).unwrap());
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let small = gaps[2] < 0.05;
    verdict(
        bounded && decreasing && small,
        format!(
            "bounds {bounded}, gaps {} strictly decreasing {decreasing}, gap at r = 0.05 below 0.05 {small}",
            list(&gaps)
        ),
    )
}

fn equilibrium_hold() -> Verdict {
    let g = SpatialGrid::new(1, 199).unwrap();
    let yd = sine_mode(g);
    let hold = hold_control(&yd, 1e-8).unwrap();
    let control = ControlSchedule::constant(hold.g, 0.5).unwrap();
    let tr = simulate(&g, &yd, &control, &NonlinearitySpec::zero(), 0.5, 1e-3).unwrap();
    let drift = tr
        .states()
        .iter()
        .map(|y| y.distance(&yd).unwrap() / yd.l2_norm())
        .fold(0.0, f64::max);
    verdict(
        drift < 1e-3,
        format!("max relative drift {drift:.3e} (< 1e-3)"),
    )
}

fn cancellation_exactness() -> Verdict {
    let g = SpatialGrid::new(1, 199).unwrap();
    let y0 = sine_mode(g).scaled(0.5);
    let t = 0.2;
    let a = Field::from_fn(g, |x| LN_2 + 0.3 * (PI * x[0]).cos());
    let q = static_control(&a, t).unwrap();
    let f = NonlinearitySpec::linear(0.3);
    let dt = t / 500.0;
    let phi = simulate(&g, &y0, &q, &NonlinearitySpec::zero(), t, dt).unwrap();
    let qc = cancellation_control(&q, &phi, &f, 1e-10).unwrap();
    let y = simulate(&g, &y0, &qc, &f, t, dt).unwrap();
    let direct = y
        .states()
        .iter()
        .zip(phi.states())
        .map(|(a, b)| a.distance(b).unwrap() / b.l2_norm().max(1.0))
        .fold(0.0, f64::max);
    let report =
        steer_fixed_time(&eigen_hold(199).unwrap(), 0.5, &FixedTimeOptions::default()).unwrap();
    let pipeline = report
        .fixed_time
        .as_ref()
        .and_then(|s| s.max_stepwise_gap)
        .unwrap_or(f64::NAN);
    verdict(
        direct <= 1e-9 && pipeline <= 1e-9 && report.outcome == Outcome::Success,
        format!(
            "stepwise gap {direct:.1e} (static q), {pipeline:.1e} (fixed-time pipeline, outcome {:?}); tolerance 1e-9",
            report.outcome
        ),
    )
}

fn contraction_contracts() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rounding = 1.0 + 8.0 * f64::EPSILON;
    let mut violations = 0;
    for i in 0..1000 {
        let g = if i % 2 == 0 {
            SpatialGrid::new(1, rng.gen_range(3..200)).unwrap()
        } else {
            SpatialGrid::new(2, rng.gen_range(3..24)).unwrap()
        };
        let u = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let dt = 10f64.powf(rng.gen_range(-6.0..0.0));
        let lambda = 10f64.powf(rng.gen_range(-2.0..4.0));
        let n = u.l2_norm();
        if step_heat(&u, dt).unwrap().l2_norm() > n * rounding {
            violations += 1;
        }
        if resolvent_smooth(&u, lambda).unwrap().l2_norm() > n * rounding {
            violations += 1;
        }
    }
    let g = SpatialGrid::new(1, 199).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let gaps: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&l| resolvent_smooth(&u, l).unwrap().distance(&u).unwrap())
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    verdict(
        violations == 0 && decreasing,
        format!("{violations} norm violations in 2000 checks, resolvent gaps {} decreasing {decreasing}", list(&gaps)),
    )
}

fn bernstein_gronwall() -> Verdict {
    let p = semilinear(199).unwrap();
    let mut pass = true;
    let mut gaps = Vec::new();
    let mut lines = Vec::new();
    for n in [25, 50, 100] {
        let r = bernstein_pipeline_demo(&p, 0.05, Some(n)).unwrap();
        pass &= r.trajectory_gap <= r.gronwall_bound + 1e-6;
        gaps.push(r.forcing_gap);
        lines.push(format!(
            "n={n}: {:.2e} <= {:.2e}",
            r.trajectory_gap, r.gronwall_bound
        ));
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        pass && monotone,
        format!(
            "{}; forcing gaps {} non-increasing {monotone}",
            lines.join(", "),
            list(&gaps)
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "eigenfunction steering oracle",
            Duration::from_secs(10),
            eigenfunction_oracle,
        ),
        ("O(T) steering rate", Duration::from_secs(30), steering_rate),
        (
            "log-ratio steering on the 2D example",
            Duration::from_secs(60),
            theorem1_example,
        ),
        (
            "Bernstein identities",
            Duration::from_secs(1),
            bernstein_identities,
        ),
        (
            "Bernstein uniform bound",
            Duration::from_secs(2),
            bernstein_bound,
        ),
        (
            "mollifier properties",
            Duration::from_secs(5),
            mollifier_properties,
        ),
        ("equilibrium hold", Duration::from_secs(5), equilibrium_hold),
        (
            "cancellation exactness",
            Duration::from_secs(10),
            cancellation_exactness,
        ),
        (
            "semigroup and resolvent contracts",
            Duration::from_secs(5),
            contraction_contracts,
        ),
        (
            "Bernstein pipeline Gronwall bound",
            Duration::from_secs(60),
            bernstein_gronwall,
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed < *budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {} [{:.2?} of {:?}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed,
            budget
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
