//! End-to-end acceptance checks. Each test prints one `[PASS]`/`[FAIL]` line.

use std::io::Write;
use std::time::Instant;

use icfb::codec::{decode, ifs_compose, run_session, run_trial, CodeSchedule, SessionConfig};
use icfb::covariance::{eigencheck, recurse, recurse_matrix, CovarianceState};
use icfb::rates::{
    gdof_closed_form, gdof_numeric, kramer_equal_gain, kramer_equal_gain_residual, kramer_two_user,
    rate_no_interference, rate_two_user, theorem3_rate, verify_theorem2, QuarticCoefficients,
};
use icfb::ChannelParams;
use nalgebra::DMatrix;

fn report(criterion: &str, pass: bool, detail: String) {
    // written past the harness capture so every line reaches the log
    let line = format!("[{}] {criterion}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn no_interference_capacity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in [1.0f64, 3.0, 10.0, 100.0] {
        let oracle = 0.5 * (1.0 + p).log2();
        worst = worst.max((rate_no_interference(p).unwrap().r_sym - oracle).abs());
    }
    report(
        "no-interference capacity",
        worst <= 1e-12,
        format!("max |R - log2(1+P)/2| = {worst:.2e} (tol 1e-12), {:?}", start.elapsed()),
    )
}

#[test]
fn eigenstructure_over_100_steps() {
    let start = Instant::now();
    let mut worst_res: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    for m in [2usize, 4, 8] {
        for a in [0.3, 1.0, 2.0] {
            let params = ChannelParams::new(m, a, 10.0).unwrap();
            let sched = CodeSchedule::greedy(&params, 100).unwrap();
            let h = sched.hadamard();
            let mut power = sched.p1;
            let mut r = DMatrix::<f64>::identity(m, m);
            let mut state = CovarianceState::initial(sched.p1, m);
            for n in 1..=100 {
                let chk = eigencheck(&r, h);
                worst_res = worst_res.max(chk.residual);
                worst_trace = worst_trace.max((r.trace() - m as f64).abs());
                worst_trace = worst_trace.max((state.trace() - m as f64).abs());
                for (x, y) in chk.rotation_order(n).iter().zip(&state.lambdas) {
                    worst_lambda = worst_lambda.max((x - y).abs());
                }
                let st = sched.step(n);
                let (np, nr) = recurse_matrix(power, &r, n, st.b, st.beta, &params, h).unwrap();
                power = np;
                r = nr;
                state = recurse(&state, st.b, st.beta, &params).unwrap();
            }
        }
    }
    report(
        "eigenstructure",
        worst_res < 1e-10 && worst_trace <= 1e-12,
        format!(
            "max eigenvector residual {worst_res:.2e} (tol 1e-10), max |trace - M| {worst_trace:.2e} (tol 1e-12), \
             eigenvalue agreement {worst_lambda:.2e}, {:?}",
            start.elapsed()
        ),
    )
}

#[test]
fn monte_carlo_covariance() {
    let start = Instant::now();
    let params = ChannelParams::new(2, 0.5, 10.0).unwrap();
    let sol = rate_two_user(0.5, 10.0).unwrap();
    let sched = CodeSchedule::from_solution(&sol).unwrap();
    let horizon = 15;
    let trials = 100_000u64;
    let path = sched.covariance_path(&params, horizon).unwrap();
    let mut s1 = vec![[0.0f64; 4]; horizon];
    let mut s2 = vec![[0.0f64; 4]; horizon];
    for t in 0..trials {
        let tr = run_trial(&params, &sched, horizon, 2024, t).unwrap();
        for n in 0..horizon {
            for i in 0..2 {
                for j in 0..2 {
                    let v = tr.x[n][i] * tr.x[n][j];
                    s1[n][2 * i + j] += v;
                    s2[n][2 * i + j] += v * v;
                }
            }
        }
    }
    let tf = trials as f64;
    let mut worst_z: f64 = 0.0;
    for n in 0..horizon {
        let k = path[n].matrix(n + 1, sched.hadamard()) * path[n].power;
        for i in 0..2 {
            for j in 0..2 {
                let mean = s1[n][2 * i + j] / tf;
                let se = ((s2[n][2 * i + j] / tf - mean * mean) / tf).sqrt();
                worst_z = worst_z.max((mean - k[(i, j)]).abs() / se);
            }
        }
    }
    report(
        "Monte Carlo covariance",
        worst_z <= 5.0,
        format!("max |empirical - P_n R_n| = {worst_z:.2} SE over n <= 15 (tol 5), {:?}", start.elapsed()),
    )
}

#[test]
fn achievability_and_ifs_exactness() {
    let start = Instant::now();
    let params = ChannelParams::new(1, 0.0, 10.0).unwrap();
    let sched = CodeSchedule::no_interference(10.0, 1).unwrap();
    let cfg = SessionConfig {
        horizon: 60,
        rate_fraction: 0.8,
        trials: 10_000,
        seed: 1,
        retransmit: false,
    };
    let r1 = run_session(&params, &sched, &cfg).unwrap();
    let u = &r1.users[0];
    let pass1 = u.p_e < 1e-3 && (u.avg_power - 10.0).abs() <= 0.05 * 10.0;

    let params2 = ChannelParams::new(2, 0.5, 10.0).unwrap();
    let sched2 = CodeSchedule::from_solution(&rate_two_user(0.5, 10.0).unwrap()).unwrap();
    let cfg2 = SessionConfig {
        horizon: 80,
        rate_fraction: 0.7,
        trials: 10_000,
        seed: 1,
        retransmit: false,
    };
    let r2 = run_session(&params2, &sched2, &cfg2).unwrap();
    let pe2 = r2.users.iter().map(|u| u.p_e).fold(0.0, f64::max);
    let pass2 = pe2 < 1e-2;

    // direct composition of the window endpoints against the slope product
    let mut width_err: f64 = 0.0;
    for (prm, sch, rate) in [
        (&params, &sched, r1.rate),
        (&params2, &sched2, r2.rate),
    ] {
        for t in 0..1000 {
            let tr = run_trial(prm, sch, 8, 5, t).unwrap();
            for user in 0..prm.m {
                for n in 1..=8 {
                    let y = &tr.y[user][..n - 1];
                    let d = decode(user, y, sch, rate).unwrap();
                    let tm = d.window.t;
                    let direct = ifs_compose(tm, user, y, sch) - ifs_compose(-tm, user, y, sch);
                    let prod: f64 = (1..n).map(|k| sch.step(k).beta).product();
                    let exact = 2.0 * tm * prod;
                    width_err = width_err.max((direct - exact).abs() / exact);
                    width_err = width_err.max((d.pre_image_width() - exact).abs() / exact);
                }
            }
        }
    }
    let ifs = r1.max_ifs_error.max(r2.max_ifs_error);

    let elapsed = start.elapsed();
    let line1 = format!(
        "a=0 P=10 r=0.8 n=60 T=1e4: p_e {} (tol < 1e-3), avg power {:.4} (P=10, tol 5%); \
         M=2 a=0.5 P=10 r=0.7 n=80 T=1e4: max p_e {} (tol < 1e-2), {elapsed:?}",
        u.p_e, u.avg_power, pe2
    );
    let line2 = format!(
        "max relative |T_(n-1)(X_n) - X_1| = {ifs:.2e} (tol 1e-9); max relative width error {width_err:.2e} \
         against 2 t prod(beta)"
    );
    let pass_ifs = ifs <= 1e-9 && width_err <= 1e-9;
    let _ = std::io::stderr().write_all(
        format!("[{}] achievability: {line1}\n", if pass1 && pass2 { "PASS" } else { "FAIL" }).as_bytes(),
    );
    let _ = std::io::stderr()
        .write_all(format!("[{}] IFS exactness: {line2}\n", if pass_ifs { "PASS" } else { "FAIL" }).as_bytes());
    assert!(pass1 && pass2, "{line1}");
    assert!(pass_ifs, "{line2}");
}

#[test]
fn proposed_dominates_kramer() {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0.0);
    let mut infeasible = 0;
    for i in 0..10 {
        let a = 0.2 * 25f64.powf(i as f64 / 9.0);
        assert!((a - 1.0).abs() > 0.05);
        for j in 0..10 {
            let p = 10f64.powf(j as f64 / 3.0);
            let ours = rate_two_user(a, p).unwrap();
            let theirs = kramer_two_user(a, p).unwrap();
            infeasible += usize::from(!ours.feasible() || !theirs.feasible());
            let gap = ours.r_sym - theirs.r_sym;
            if gap < worst {
                worst = gap;
                at = (a, p);
            }
        }
    }
    report(
        "two-user dominance over Kramer",
        worst >= -1e-9 && infeasible == 0,
        format!(
            "min R_two_user - R_kramer = {worst:.3e} at a={:.3}, P={:.3} (tol -1e-9), infeasible solutions {infeasible}, {:?}",
            at.0,
            at.1,
            start.elapsed()
        ),
    )
}

#[test]
fn kramer_equal_gain_fixed_point() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut positive = true;
    let mut increasing = true;
    for m in [2usize, 4, 8, 16] {
        let mut prev = 0.0;
        for p in [1.0, 10.0, 100.0] {
            let s = kramer_equal_gain(m, p).unwrap();
            worst = worst.max(kramer_equal_gain_residual(s.lambda(), m, p));
            positive &= s.r_sym > 0.0;
            increasing &= s.r_sym > prev;
            prev = s.r_sym;
        }
    }
    report(
        "Kramer equal-gain fixed point",
        worst < 1e-9 && positive && increasing,
        format!(
            "max residual {worst:.2e} (tol 1e-9), rates positive {positive}, increasing in P {increasing}, {:?}",
            start.elapsed()
        ),
    )
}

#[test]
fn aligned_quartic_pipeline() {
    let start = Instant::now();
    let mut worst_res: f64 = 0.0;
    let mut all_range = true;
    let mut all_verified = true;
    for m in [2usize, 4] {
        for a in [0.3, 3.0] {
            for p in [1e2, 1e4] {
                let s = theorem3_rate(a, p, m).unwrap();
                let a_coef = s.a_coef.expect("quartic solution records A");
                let z = QuarticCoefficients::new(a_coef, a, p, m).z;
                let terms: Vec<f64> = z.iter().enumerate().map(|(i, c)| c * s.beta.powi(i as i32)).collect();
                let largest = terms.iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
                worst_res = worst_res.max(terms.iter().sum::<f64>().abs() / largest);
                let lam = s.lambda();
                all_range &= lam > 0.0 && lam < m as f64;
                all_verified &= verify_theorem2(s.b, s.beta, lam, a, p, m).feasible();
            }
        }
    }
    report(
        "aligned quartic pipeline",
        worst_res < 1e-8 && all_range && all_verified,
        format!(
            "max quartic residual {worst_res:.2e} relative to the largest term (tol 1e-8), lambda in (0, M) {all_range}, \
             verify passes {all_verified}, {:?}",
            start.elapsed()
        ),
    )
}

const LADDER: [f64; 3] = [1e3, 1e6, 1e9];

fn ladder(alpha: f64) -> Vec<f64> {
    gdof_numeric(alpha, 2, &LADDER).unwrap().into_iter().map(|(_, d)| d).collect()
}

#[test]
fn gdof_ladder_alpha_2_range() {
    let d = ladder(2.0);
    report(
        "GDoF alpha=2 range",
        (0.95..=1.05).contains(&d[2]),
        format!("d_hat(1e9) = {:.4} (target {}, window [0.95, 1.05])", d[2], gdof_closed_form(2.0).unwrap()),
    )
}

#[test]
fn gdof_ladder_alpha_half_range() {
    let d = ladder(0.5);
    report(
        "GDoF alpha=0.5 range",
        (0.70..=0.80).contains(&d[2]),
        format!("d_hat(1e9) = {:.4} (target {}, window [0.70, 0.80])", d[2], gdof_closed_form(0.5).unwrap()),
    )
}

fn monotone_approach(alpha: f64) {
    let target = gdof_closed_form(alpha).unwrap();
    let d = ladder(alpha);
    let gaps: Vec<f64> = d.iter().map(|v| (v - target).abs()).collect();
    report(
        &format!("GDoF alpha={alpha} monotone approach"),
        gaps.windows(2).all(|w| w[1] <= w[0]),
        format!(
            "d_hat at P=1e3,1e6,1e9: {:.4}, {:.4}, {:.4}; distance to {target}: {:.4}, {:.4}, {:.4}",
            d[0], d[1], d[2], gaps[0], gaps[1], gaps[2]
        ),
    )
}

#[test]
fn gdof_ladder_alpha_2_monotone() {
    monotone_approach(2.0);
}

#[test]
fn gdof_ladder_alpha_half_monotone() {
    monotone_approach(0.5);
}
