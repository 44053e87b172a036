use gamma_core::expansion::{analyze, Analysis};
use gamma_core::fem::{FeFunction, FeSpace};
use gamma_core::mesh::{build_half_disk, build_unit_disk, BoundaryTag, GradingSpec, JunctionFrame};
use gamma_core::problems::{solve_mixed_dirichlet, DirichletValues, ProblemData};
use gamma_core::singular::{
    b_from_profile, c_phi, default_radii, extract_coefficient, hardy_check, hardy_half_ball,
    singular_eval, singular_interpolant, verify_weak_identity, Cutoff,
};
use gamma_core::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

const R: BoundaryTag = BoundaryTag::RobinDirichlet;

fn half_disk(h: f64, beta: f64) -> Arc<FeSpace> {
    FeSpace::new(
        Arc::new(build_half_disk(GradingSpec::new(h, beta, 0.5)).unwrap()),
        1,
    )
    .unwrap()
}

fn origin() -> JunctionFrame {
    JunctionFrame::new([0.0, 0.0], 0.0, 1.0)
}

/// Discrete benchmark limit and its singular analysis at `h = 0.02`, `beta = 3`.
fn benchmark() -> &'static (FeFunction, Analysis) {
    static CELL: OnceLock<(FeFunction, Analysis)> = OnceLock::new();
    CELL.get_or_init(|| {
        let space = half_disk(0.02, 3.0);
        let data = ProblemData::half_disk_benchmark();
        let u0 =
            solve_mixed_dirichlet(&space, &*data.f, DirichletValues::Project(&*data.g)).unwrap();
        let an = analyze(&u0, &*data.f, &Cutoff::default()).unwrap();
        (u0, an)
    })
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

/// Closed-form regular flux of the benchmark along the positive axis.
fn benchmark_axis_flux(cutoff: &Cutoff, r: f64) -> f64 {
    -(1.0 - cutoff.phi(r)) / (2.0 * r.sqrt())
}

fn random_smooth(rng: &mut ChaCha8Rng) -> impl Fn(Point) -> f64 {
    let coef: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.0..PI),
            )
        })
        .collect();
    move |p: Point| {
        coef.iter()
            .map(|(a, kx, ky, s)| a * (kx * p[0] + ky * p[1] + s).cos())
            .sum()
    }
}

#[test]
fn singular_function_examples() {
    let (fr, cut) = (origin(), Cutoff::default());
    for r in [1e-6, 0.01, 0.2, 0.7] {
        assert_eq!(singular_eval(&fr, &cut, fr.point(r, 0.0)).value, 0.0);
    }
    let s = singular_eval(&fr, &cut, fr.point(cut.rho / 4.0, PI));
    assert!((s.value - (cut.rho / 4.0).sqrt()).abs() <= 1e-15);
    let edge = singular_eval(&fr, &cut, fr.point(cut.rho, 1.0));
    assert_eq!(edge.value, 0.0);
    let g = edge.grad.unwrap();
    assert!(g[0].abs() <= 1e-15 && g[1].abs() <= 1e-15);
    let centre = singular_eval(&fr, &cut, [0.0, 0.0]);
    assert_eq!(centre.value, 0.0);
    assert!(centre.grad.is_none());
}

#[test]
fn cutoff_invariants() {
    let cut = Cutoff::new(0.8).unwrap();
    let mut prev = 1.0;
    for k in 0..=400 {
        let r = 1.2 * k as f64 / 400.0;
        let p = cut.phi(r);
        if r <= 0.4 {
            assert_eq!(p, 1.0);
        }
        if r >= 0.8 {
            assert_eq!(p, 0.0);
        }
        assert!(p <= prev);
        assert!(cut.dphi(r).abs() <= 4.0 / cut.rho);
        prev = p;
    }
    assert!(Cutoff::new(0.0).is_err());
}

#[test]
fn extraction_examples() {
    let space = half_disk(0.02, 2.0);
    let (fr, cut) = (origin(), Cutoff::default());
    let radii = default_radii(&cut);
    let s = singular_interpolant(&space, &fr, &cut);
    let c = extract_coefficient(&s, &fr, &cut, &radii).unwrap().c;
    assert!((c - 1.0).abs() <= 0.02, "{c}");
    let x = FeFunction::interpolate(space.clone(), |p| p[0]);
    let c = extract_coefficient(&x, &fr, &cut, &radii).unwrap().c;
    assert!(c.abs() <= 2e-2, "{c}");
    let mix = FeFunction::interpolate(space, |p| 3.0 * singular_eval(&fr, &cut, p).value + p[0]);
    let c = extract_coefficient(&mix, &fr, &cut, &radii).unwrap().c;
    assert!((c - 3.0).abs() <= 0.06, "{c}");

    assert!(extract_coefficient(&x, &fr, &cut, &radii[..2]).is_err());
    assert!(extract_coefficient(&x, &fr, &cut, &[0.01, 0.1, 0.3]).is_err());
}

#[test]
fn regular_flux_of_benchmark() {
    let (_, an) = benchmark();
    let cut = Cutoff::default();
    assert!((an.constants.c[0] - 1.0).abs() <= 0.02);
    let flux = an.flux.trace.as_function();
    // L2 distance to the closed form on the straight part of the Robin boundary.
    let on_axis = |p: Point| p[1].abs() < 1e-12;
    let err = flux.boundary_integral(R, |p, v| {
        if on_axis(p) {
            (v - benchmark_axis_flux(&cut, p[0])).powi(2)
        } else {
            0.0
        }
    });
    let norm = simpson(cut.rho / 2.0, 1.0, 2000, |r| {
        benchmark_axis_flux(&cut, r).powi(2)
    });
    assert!(
        err.sqrt() <= 0.1 * norm.sqrt(),
        "{} vs {}",
        err.sqrt(),
        norm.sqrt()
    );
    let near = flux.boundary_integral(R, |p, v| {
        if on_axis(p) && p[0] < cut.rho / 2.0 {
            v * v
        } else {
            0.0
        }
    });
    assert!(near.sqrt() <= 0.1 * norm.sqrt(), "{}", near.sqrt());
    assert!(flux.coeffs.iter().all(|v| v.is_finite()));

    // Arc contributes int_0^pi (sin(t/2)/2)^2 = pi/8.
    let exact = PI / 8.0
        + simpson(cut.rho / 2.0, 1.0, 2000, |r| {
            benchmark_axis_flux(&cut, r).powi(2)
        });
    let got = an.constants.flux_norm_sq;
    assert!((got - exact).abs() <= 0.02 * exact, "{got} vs {exact}");
}

#[test]
fn regular_flux_of_constant_data() {
    let space = half_disk(0.05, 2.0);
    let u0 =
        solve_mixed_dirichlet(&space, &|_| 0.0, DirichletValues::Interpolate(&|_| 2.0)).unwrap();
    let an = analyze(&u0, &|_| 0.0, &Cutoff::default()).unwrap();
    assert!(an.constants.c[0].abs() <= 1e-9);
    assert!(an.flux.trace.coeffs.iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn b_matches_independent_quadrature() {
    for rho in [0.5, 0.3, 1.0] {
        let cut = Cutoff::new(rho).unwrap();
        let b = b_from_profile(&cut, &|r| benchmark_axis_flux(&cut, r));
        // The integrand phi (1 - phi) / r vanishes outside [rho/2, rho].
        let oracle = -0.25
            * simpson(rho / 2.0, rho, 4000, |r| {
                cut.phi(r) * (1.0 - cut.phi(r)) / r
            });
        assert!((b - oracle).abs() <= 1e-6, "rho = {rho}: {b} vs {oracle}");
    }
    let cut = Cutoff::default();
    let b = b_from_profile(&cut, &|_| 1.0);
    let oracle = 0.5 * (2.0 * (cut.rho / 2.0).sqrt())
        + 0.5 * simpson(cut.rho / 2.0, cut.rho, 4000, |r| cut.phi(r) / r.sqrt());
    assert!((b - oracle).abs() <= 1e-6, "{b} vs {oracle}");
}

#[test]
fn c_phi_examples() {
    assert_eq!(c_phi(&Cutoff::new(2.0).unwrap()), 0.0);
    let c = c_phi(&Cutoff::default());
    assert!(c > 0.125 * 2f64.ln() && c < 0.125 * 4f64.ln(), "{c}");
    let oracle = 0.125
        * (simpson(0.25, 0.5, 4000, |x| {
            (1.0 - Cutoff::default().phi(x).powi(2)) / x
        }) + 2f64.ln());
    assert!((c - oracle).abs() <= 1e-10);
    assert_eq!(c, c_phi(&Cutoff::default()));
}

#[test]
fn weak_identity() {
    let (u0, an) = benchmark();
    let cut = Cutoff::default();
    let check = |psi: &FeFunction| {
        verify_weak_identity(
            u0,
            &an.constants.c,
            &an.frames,
            &cut,
            &|_| 0.0,
            &an.flux.trace,
            psi,
        )
        .unwrap()
    };
    let zero = check(&FeFunction::zeros(u0.space.clone()));
    assert_eq!(zero.residual, 0.0);
    let one = check(&FeFunction::interpolate(u0.space.clone(), |_| 1.0));
    assert!(one.relative <= 0.01, "{one:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let psi = FeFunction::interpolate(u0.space.clone(), random_smooth(&mut rng));
        let w = check(&psi);
        assert!(w.relative <= 0.02, "{w:?}");
    }
    let other = FeFunction::zeros(half_disk(0.1, 1.0));
    assert!(verify_weak_identity(
        u0,
        &an.constants.c,
        &an.frames,
        &cut,
        &|_| 0.0,
        &an.flux.trace,
        &other
    )
    .is_err());
}

fn scaled_disk(radius: f64, h: f64) -> Arc<FeSpace> {
    let mut mesh = build_unit_disk(h).unwrap();
    for p in &mut mesh.vertices {
        p[0] *= radius;
        p[1] *= radius;
    }
    FeSpace::new(Arc::new(mesh), 1).unwrap()
}

#[test]
fn hardy_constant_is_sharp_equality() {
    for radius in [0.5, 1.0, 3.0] {
        let one = FeFunction::interpolate(scaled_disk(radius, 0.1), |_| 1.0);
        let rep = hardy_check(&one, radius);
        assert!((rep.lhs - (2.0 * PI).sqrt()).abs() <= 1e-6, "{rep:?}");
        assert!((rep.ratio - 1.0).abs() <= 1e-6, "{rep:?}");
    }
}

#[test]
fn half_ball_constants_are_finite() {
    let space = half_disk(0.05, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let h = FeFunction::interpolate(space.clone(), random_smooth(&mut rng));
        let q = hardy_half_ball(&h, 1.0);
        assert!(q.kappa_hat.is_finite() && q.kappa_hat > 0.0, "{q:?}");
        assert!(
            q.kappa_bar_hat.is_finite() && q.kappa_bar_hat > 0.0,
            "{q:?}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extraction_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        static SPACE: OnceLock<Arc<FeSpace>> = OnceLock::new();
        let space = SPACE.get_or_init(|| half_disk(0.05, 2.0));
        let (fr, cut) = (origin(), Cutoff::default());
        let radii = default_radii(&cut);
        let u = singular_interpolant(space, &fr, &cut);
        let v = FeFunction::interpolate(space.clone(), |p| p[0] * p[1] + (2.0 * p[0]).cos());
        let w = u.scaled(alpha).axpy(beta, &v).unwrap();
        let c = |f: &FeFunction| extract_coefficient(f, &fr, &cut, &radii).unwrap().c;
        prop_assert!((c(&w) - (alpha * c(&u) + beta * c(&v))).abs() <= 1e-8);
    }

    #[test]
    fn cutoff_is_inactive_near_junction(r in 1e-8f64..0.25, theta in 0.0f64..PI) {
        let (fr, cut) = (origin(), Cutoff::default());
        let p = fr.point(r, theta);
        let (rr, tt) = fr.polar(p);
        prop_assert_eq!(singular_eval(&fr, &cut, p).value, rr.sqrt() * (0.5 * tt).sin());
    }

    #[test]
    fn hardy_inequality_holds(seed in any::<u64>(), radius in 0.3f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = scaled_disk(radius, 0.1);
        let f = random_smooth(&mut rng);
        let h = FeFunction::interpolate(space, move |p| f([p[0] / radius, p[1] / radius]));
        let rep = hardy_check(&h, radius);
        prop_assert!(rep.lhs <= rep.rhs, "{:?}", rep);
    }
}
