//! Acceptance gate: one test per release criterion, each printing a
//! `[PASS]`/`[FAIL]` line with the measured quantities before asserting.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use schrotbc::convquad::{cq_weights, OneStepMethod};
use schrotbc::evolve::{DomainSpec, Evolution, GridSpec, SchemeSpec, TimeGrid};
use schrotbc::exact::{
    energy_content, profile_preset, ProfileEvaluator, ProfileFamily, ProfileVariant,
};
use schrotbc::galerkin::{build_basis, BandedLu};
use schrotbc::harness::{convergence_sweep, desk_sweep_nts, execute_run, ProfileConfig, RunConfig};
use schrotbc::ratapprox::{pade_sqrt_eval, PadeTable};
use schrotbc::specfun::{legendre_eval, LglGrid};
use schrotbc::tbc_maps::MapFamily;
use schrotbc::C64;

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("[{}] {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Desk-scale run description (default grids, final time 5).
fn desk_run(scheme: &str, method: &str, c0: f64, dim: usize, nt: usize) -> RunConfig {
    RunConfig {
        scheme: scheme.into(),
        method: method.into(),
        dim,
        domain: None,
        grid: None,
        tmax: 5.0,
        nt: Some(nt),
        nt_set: None,
        profile: ProfileConfig {
            family: "FCG".into(),
            variant: "I".into(),
            c0,
        },
        out_dir: None,
        snapshot_every: None,
    }
}

/// Exponential of a power series with zero constant term, term by term.
fn series_exp(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    for k in 1..n {
        let mut acc = 0.0;
        for j in 1..=k {
            acc += j as f64 * f[j] * e[k - j];
        }
        e[k] = acc / k as f64;
    }
    e
}

#[test]
fn criterion_1_convolution_weights_match_series_oracles() {
    let count = 64;
    let mut worst = 0.0f64;
    for nu in [0.5, -0.5] {
        // (1 - x)^nu = exp(nu ln(1 - x)), with ln(1 - x) = -sum x^k / k
        let mut log_term = vec![0.0; count + 1];
        for (k, slot) in log_term.iter_mut().enumerate().skip(1) {
            *slot = -nu / k as f64;
        }
        let oracle = series_exp(&log_term);
        let table = cq_weights(OneStepMethod::Bdf1, nu, count).unwrap();
        for (k, coeff) in oracle.iter().enumerate() {
            worst = worst.max((table.weight(k) - coeff).abs());
        }

        // ((1 - x)/(1 + x))^nu: odd log coefficients -2 nu / k, even ones cancel
        let mut log_term = vec![0.0; count + 1];
        for (k, slot) in log_term.iter_mut().enumerate().skip(1) {
            if k % 2 == 1 {
                *slot = -2.0 * nu / k as f64;
            }
        }
        let oracle = series_exp(&log_term);
        let table = cq_weights(OneStepMethod::Trapezoidal, nu, count).unwrap();
        for (k, coeff) in oracle.iter().enumerate() {
            worst = worst.max((table.weight(k) - coeff).abs());
        }
    }
    let ok = worst <= 1e-13;
    report(
        "criterion 1 (convolution weights vs series oracles)",
        ok,
        &format!("max deviation {worst:.3e} over k <= 64, both rules, nu = +/-1/2 (bound 1e-13)"),
    );
    assert!(ok, "weight deviation {worst:.3e} exceeds 1e-13");
}

#[test]
fn criterion_2_square_root_approximants_meet_stated_bounds() {
    let mut measured = Vec::new();
    for (order, bound) in [(50usize, 1e-8f64), (20, 1e-3)] {
        let table = PadeTable::new(order).unwrap();
        let mut worst = 0.0f64;
        for i in 0..200 {
            let z = 1e-2 * 1e6f64.powf(i as f64 / 199.0);
            let r = pade_sqrt_eval(&table, C64::new(z, 0.0)).unwrap();
            worst = worst.max((r / z.sqrt() - 1.0).norm());
        }
        measured.push((order, bound, worst));
    }
    let mut ok = true;
    for (order, bound, worst) in &measured {
        let this = worst <= bound;
        report(
            &format!("criterion 2 (order-{order} square-root approximant)"),
            this,
            &format!("max relative deviation {worst:.3e} on z in [1e-2, 1e4] (bound {bound:.0e})"),
        );
        ok &= this;
    }
    assert!(
        ok,
        "square-root approximant deviations exceed the stated bounds: {measured:?}"
    );
}

#[test]
fn criterion_3_robin_residuals_on_desk_runs() {
    let variants = [
        ("CQ", "BDF1"),
        ("CQ", "TR"),
        ("NP50", "BDF1"),
        ("NP50", "TR"),
        ("CP50", "BDF1"),
        ("CP50", "TR"),
        ("HF", "BDF1"),
        ("HF", "TR"),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (scheme, method) in variants {
        let result = execute_run(&desk_run(scheme, method, 4.0, 2, 257)).unwrap();
        ok &= result.robin_residual <= 1e-9;
        lines.push(format!("{scheme}-{method} {:.2e}", result.robin_residual));
    }
    report(
        "criterion 3 (Robin residual, desk runs)",
        ok,
        &format!("{} (bound 1e-9)", lines.join(", ")),
    );
    assert!(ok, "Robin residual above 1e-9: {}", lines.join(", "));
}

/// Dense LU solve with partial pivoting; `a` is row-major `n x n`.
fn dense_solve(mut a: Vec<C64>, rhs: &[C64], n: usize) -> Vec<C64> {
    let mut x = rhs.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].norm() > a[piv * n + col].norm() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / d;
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= factor * v;
            }
            let v = x[col];
            x[r] -= factor * v;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * x[c];
        }
        x[r] = acc / a[r * n + r];
    }
    x
}

#[test]
fn criterion_4_per_mode_solves_match_dense_kronecker_system() {
    // eight interior unknowns by eight transverse modes, shared-coefficient
    // family (unit Robin factor, so every mode sees the same basis)
    let order = 9;
    let n_modes = 8;
    let rho = 256.0f64;
    let alpha1 = rho.sqrt() * C64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
    let kappa = alpha1;
    let basis = build_basis(kappa, order).unwrap();
    let ops = basis.operators();
    let n = basis.interior_len();
    assert_eq!(n, 8);

    // independent quadrature assembly of the stiffness-plus-wall and mass
    // matrices in the adapted basis
    let quad = LglGrid::new(2 * order + 4).unwrap();
    let b = basis.b();
    let phi = |p: usize, y: f64| -> (C64, C64) {
        let (lp, dlp) = legendre_eval(p, y);
        let (lq, dlq) = legendre_eval(p + 2, y);
        (
            C64::new(lp, 0.0) + b[p] * lq,
            C64::new(dlp, 0.0) + b[p] * dlq,
        )
    };
    let mut stiff = vec![C64::new(0.0, 0.0); n * n];
    let mut mass = vec![C64::new(0.0, 0.0); n * n];
    for p in 0..n {
        for q in 0..n {
            let mut sv = C64::new(0.0, 0.0);
            let mut mv = C64::new(0.0, 0.0);
            for (&y, &w) in quad.nodes().iter().zip(quad.weights()) {
                let (fp, dfp) = phi(p, y);
                let (fq, dfq) = phi(q, y);
                sv += w * dfp * dfq;
                mv += w * fp * fq;
            }
            let (fp_r, _) = phi(p, 1.0);
            let (fq_r, _) = phi(q, 1.0);
            let (fp_l, _) = phi(p, -1.0);
            let (fq_l, _) = phi(q, -1.0);
            sv += kappa * (fp_r * fq_r + fp_l * fq_l);
            stiff[p * n + q] = sv;
            mass[p * n + q] = mv;
        }
    }

    // dense coupled operator: (1/alpha1^2) S (x) I + M (x) diag(D_m)
    let shifts: Vec<C64> = (0..n_modes)
        .map(|m| C64::new(1.0, (m * m) as f64 / 16.0))
        .collect();
    let total = n * n_modes;
    let inv_a2 = C64::new(1.0, 0.0) / (alpha1 * alpha1);
    let mut coupled = vec![C64::new(0.0, 0.0); total * total];
    for p in 0..n {
        for q in 0..n {
            for (m, d) in shifts.iter().enumerate() {
                let row = p * n_modes + m;
                let col = q * n_modes + m;
                coupled[row * total + col] = inv_a2 * stiff[p * n + q] + d * mass[p * n + q];
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(7);
    let rhs: Vec<C64> = (0..total)
        .map(|_| {
            C64::new(
                2.0 * rng.random::<f64>() - 1.0,
                2.0 * rng.random::<f64>() - 1.0,
            )
        })
        .collect();
    let dense = dense_solve(coupled, &rhs, total);

    let mut per_mode = vec![C64::new(0.0, 0.0); total];
    for (m, d) in shifts.iter().enumerate() {
        let mode_rhs: Vec<C64> = (0..n).map(|p| rhs[p * n_modes + m]).collect();
        let lu = BandedLu::factor(ops.system_matrix(alpha1, *d)).unwrap();
        let w = lu.solve(&mode_rhs).unwrap();
        for (p, value) in w.iter().enumerate() {
            per_mode[p * n_modes + m] = *value;
        }
    }

    let scale = dense.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let worst = dense
        .iter()
        .zip(&per_mode)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max)
        / scale;
    let ok = worst <= 1e-11;
    report(
        "criterion 4 (dense coupled system vs per-mode solves)",
        ok,
        &format!("max relative difference {worst:.3e} on an 8x8 instance (bound 1e-11)"),
    );
    assert!(ok, "Kronecker equivalence off by {worst:.3e}");
}

#[test]
fn criterion_5_convergence_slopes_match_one_step_orders() {
    let cases = [
        ("CQ", "BDF1", 0.7, 1.3),
        ("NP50", "BDF1", 0.7, 1.3),
        ("CQ", "TR", 1.6, 2.3),
        ("NP50", "TR", 1.6, 2.3),
    ];
    let mut ok = true;
    for (scheme, method, lo, hi) in cases {
        let mut config = desk_run(scheme, method, 4.0, 2, 257);
        config.nt = None;
        config.nt_set = Some(desk_sweep_nts());
        let sweep = convergence_sweep(&config).unwrap();
        let this = sweep.slope >= lo && sweep.slope <= hi;
        let maxima: Vec<String> = sweep
            .points
            .iter()
            .map(|p| format!("{:.2e}", p.max_error))
            .collect();
        report(
            &format!("criterion 5 ({scheme}-{method} convergence)"),
            this,
            &format!(
                "slope {:.3} (expected [{lo}, {hi}]), maxima [{}]",
                sweep.slope,
                maxima.join(", ")
            ),
        );
        ok &= this;
    }
    assert!(ok, "a fitted convergence slope fell outside its expected range");
}

#[test]
fn criterion_6_pade_and_quadrature_error_curves_agree() {
    let mut ok = true;
    for method in ["BDF1", "TR"] {
        let e_cq = execute_run(&desk_run("CQ", method, 4.0, 2, 257)).unwrap().errors;
        let e_np = execute_run(&desk_run("NP50", method, 4.0, 2, 257))
            .unwrap()
            .errors;
        let gap = e_cq
            .iter()
            .zip(&e_np)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let this = gap <= 1e-3;
        report(
            &format!("criterion 6 ({method} scheme agreement)"),
            this,
            &format!("max_t |e_NP50 - e_CQ| = {gap:.3e} (bound 1e-3)"),
        );
        ok &= this;
    }
    assert!(ok, "error curves of the localized and quadrature maps diverge");
}

#[test]
fn criterion_7_exiting_profile_leaves_matching_energy_content() {
    let result = execute_run(&desk_run("NP50", "TR", 8.0, 2, 257)).unwrap();
    let e_num = *result.energy.last().unwrap();
    let evaluator = profile_preset(ProfileFamily::ChirpedGaussian, ProfileVariant::TypeI, 8.0, 2)
        .unwrap()
        .evaluator(&[PI])
        .unwrap();
    let e_exact = energy_content(&evaluator, (-10.0, 10.0), &[PI], 400, &[256], 5.0).unwrap();
    let ok = (e_num - e_exact).abs() <= 1e-2 && e_num <= 0.05 && e_exact <= 0.05;
    report(
        "criterion 7 (transparency at speed 8)",
        ok,
        &format!(
            "numerical energy content {e_num:.4e}, exact {e_exact:.4e} \
             (difference bound 1e-2, both <= 0.05)"
        ),
    );
    assert!(
        ok,
        "energy content mismatch: numerical {e_num:.4e}, exact {e_exact:.4e}"
    );
}

/// Relative residual of the free equation at one point under central
/// differences with step `h`.
fn pde_residual(field: &ProfileEvaluator, x: &[f64], t: f64, h: f64) -> f64 {
    let dim = x.len();
    let u_t = (field.eval(x, t + h) - field.eval(x, t - h)) / (2.0 * h);
    let u0 = field.eval(x, t);
    let mut lap = C64::new(0.0, 0.0);
    for axis in 0..dim {
        let mut xp = x.to_vec();
        xp[axis] += h;
        let mut xm = x.to_vec();
        xm[axis] -= h;
        lap += (field.eval(&xp, t) + field.eval(&xm, t) - 2.0 * u0) / (h * h);
    }
    let residual = C64::new(0.0, 1.0) * u_t + lap;
    residual.norm() / (u_t.norm() + lap.norm() + 1e-30)
}

#[test]
fn criterion_8_exact_profiles_satisfy_the_equation() {
    let h = 5e-5;
    let families = [
        (ProfileFamily::ChirpedGaussian, ProfileVariant::TypeI, 2),
        (ProfileFamily::ChirpedGaussian, ProfileVariant::TypeII, 2),
        (ProfileFamily::HermiteGaussian, ProfileVariant::TypeI, 2),
        (ProfileFamily::HermiteGaussian, ProfileVariant::TypeII, 2),
        (ProfileFamily::ChirpedGaussian, ProfileVariant::TypeI, 3),
    ];
    let mut rng = StdRng::seed_from_u64(1234);
    let mut worst = 0.0f64;
    for (family, variant, dim) in families {
        let evaluator = profile_preset(family, variant, 4.0, dim)
            .unwrap()
            .evaluator(&vec![PI; dim - 1])
            .unwrap();
        for _ in 0..20 {
            let t = 0.05 + 0.4 * rng.random::<f64>();
            let mut x = vec![0.0; dim];
            for slot in x.iter_mut() {
                *slot = 4.0 * rng.random::<f64>() - 2.0;
            }
            worst = worst.max(pde_residual(&evaluator, &x, t, h));
        }
    }
    let ok = worst <= 1e-5;
    report(
        "criterion 8 (exact solutions under finite differences)",
        ok,
        &format!("max relative residual {worst:.3e} at 20 random points per profile (bound 1e-5)"),
    );
    assert!(ok, "finite-difference residual {worst:.3e} exceeds 1e-5");
}

#[test]
fn criterion_9_three_dimensional_runs_complete_with_trapezoidal_advantage() {
    let bdf = execute_run(&desk_run("NP50", "BDF1", 4.0, 3, 257)).unwrap();
    let tr = execute_run(&desk_run("NP50", "TR", 4.0, 3, 257)).unwrap();
    let ok_bdf = bdf.max_error <= 1e-1;
    let ok_tr = tr.max_error <= 1e-1;
    let ok_order = tr.max_error <= bdf.max_error;
    report(
        "criterion 9 (3D NP50-BDF1 error bound)",
        ok_bdf,
        &format!("max error {:.3e} (bound 1e-1)", bdf.max_error),
    );
    report(
        "criterion 9 (3D NP50-TR error bound)",
        ok_tr,
        &format!("max error {:.3e} (bound 1e-1)", tr.max_error),
    );
    report(
        "criterion 9 (3D method ordering)",
        ok_order,
        &format!(
            "TR max {:.3e} <= BDF1 max {:.3e}",
            tr.max_error, bdf.max_error
        ),
    );
    assert!(
        ok_bdf && ok_tr && ok_order,
        "3D desk runs: BDF1 max {:.3e}, TR max {:.3e}",
        bdf.max_error,
        tr.max_error
    );
}

#[test]
fn criterion_10_zero_data_remains_zero_for_every_variant() {
    let mut worst = 0.0f64;
    let methods = [OneStepMethod::Bdf1, OneStepMethod::Trapezoidal];
    let families = [
        MapFamily::Quadrature,
        MapFamily::SharedPade(50),
        MapFamily::PerModePade(50),
        MapFamily::HighFrequency,
    ];
    for family in families {
        for method in methods {
            let domain = DomainSpec::new(2, (-10.0, 10.0), vec![PI], 1.0).unwrap();
            let grid = GridSpec::new(16, vec![8]).unwrap();
            let time = TimeGrid::new(1.0, 17).unwrap();
            let mut evo = Evolution::new(domain, grid, time, SchemeSpec { family, method }, |_| {
                C64::new(0.0, 0.0)
            })
            .unwrap();
            for _ in 0..16 {
                evo.step().unwrap();
                worst = worst.max(evo.field().norm_proxy_sq().sqrt());
            }
        }
    }
    for method in methods {
        let domain = DomainSpec::new(3, (-10.0, 10.0), vec![PI, PI], 1.0).unwrap();
        let grid = GridSpec::new(16, vec![4, 4]).unwrap();
        let time = TimeGrid::new(1.0, 17).unwrap();
        let scheme = SchemeSpec {
            family: MapFamily::SharedPade(50),
            method,
        };
        let mut evo =
            Evolution::new(domain, grid, time, scheme, |_| C64::new(0.0, 0.0)).unwrap();
        for _ in 0..16 {
            evo.step().unwrap();
            worst = worst.max(evo.field().norm_proxy_sq().sqrt());
        }
    }
    let ok = worst <= 1e-14;
    report(
        "criterion 10 (homogeneous invariance)",
        ok,
        &format!("max norm {worst:.1e} across all 10 variants (bound 1e-14)"),
    );
    assert!(ok, "zero data grew to norm {worst:.1e}");
}
