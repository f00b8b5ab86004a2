use germlab::entropy::manning_bound;
use germlab::germ::{solve_gauss, solve_ray, validate, SolverOptions};
use germlab::group::build_octagon_group;
use germlab::mesh::{build_cotan, triangulate_domain, CotanOperator};
use germlab::quaddiff::{poincare_series, Seed, SeriesOptions};
use num_complex::Complex64 as C64;

fn setup(level: usize) -> (CotanOperator, Vec<f64>) {
    let rep = build_octagon_group().unwrap();
    let mesh = triangulate_domain(&rep, level).unwrap();
    let op = build_cotan(&mesh).unwrap();
    let opts = SeriesOptions {
        depth: 8,
        ..SeriesOptions::default()
    };
    let qd = poincare_series(&rep, &mesh, Seed::Pole { w0: C64::new(1.3, 0.0) }, &opts).unwrap();
    (op, qd.norm_sq_h(&mesh))
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn conformal_factor_is_quadratic_in_t() {
    let (op, q) = setup(1);
    let opts = SolverOptions::default();
    let ts = [0.01, 0.02, 0.04];
    let logs: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let g = solve_gauss(&op, &q, t, &opts).unwrap();
            (t.ln(), sup(&g.u).ln())
        })
        .collect();
    for w in logs.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        assert!((slope - 2.0).abs() < 0.02, "slope {slope}");
    }
}

#[test]
fn ray_is_monotone() {
    let (op, q) = setup(2);
    let ts: Vec<f64> = (0..=7).map(|k| 0.1 * k as f64).collect();
    let germs: Vec<_> = solve_ray(&op, &q, &ts, &SolverOptions::default())
        .into_iter()
        .map(|r| r.unwrap())
        .collect();
    for w in germs.windows(2) {
        assert!(w[1].u.iter().zip(&w[0].u).all(|(b, a)| b <= a));
        assert!(w[1].volume() < w[0].volume());
        assert!(manning_bound(&w[1]) > manning_bound(&w[0]));
    }
    for g in &germs {
        assert!(g.u.iter().all(|&x| x <= 0.0));
        for (l1, l2) in g.principal_curvatures() {
            assert!(l1 >= 0.0 && l1 + l2 == 0.0);
        }
    }
}

#[test]
fn gauss_equation_holds_pointwise() {
    let (op, q) = setup(2);
    let g = solve_gauss(&op, &q, 0.5, &SolverOptions::default()).unwrap();
    for ((l1, l2), k) in g.principal_curvatures().into_iter().zip(g.curvature()) {
        assert!((-1.0 + l1 * l2 - k).abs() <= 1e-8);
    }
}

#[test]
fn gauss_bonnet_at_level_three() {
    let (op, q) = setup(3);
    for t in [0.0, 0.3] {
        let g = solve_gauss(&op, &q, t, &SolverOptions::default()).unwrap();
        let v = validate(&g, &op, 1e-8);
        assert!(v.passed, "{v:?}");
        assert!(v.gauss_bonnet_rel_err <= 0.01);
    }
}

#[test]
fn scaling_moves_only_the_log_scale() {
    let (op, q) = setup(1);
    let g = solve_gauss(&op, &q, 0.3, &SolverOptions::default()).unwrap();
    let s = g.scaled(4.0);
    assert_eq!(s.u, g.u);
    assert!((s.volume() - 4.0 * g.volume()).abs() <= 1e-12 * g.volume());
    assert!((manning_bound(&s) * 2.0 - manning_bound(&g)).abs() <= 1e-12);
}
