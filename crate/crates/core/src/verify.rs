//! Instance-level checks of the structural facts the convergence analysis
//! relies on. Every check records the measured quantity and its threshold.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::config::VerifyConfig;
use crate::error::Result;
use crate::linalg::{kernel_basis, max_principal_angle_sin};
use crate::mdp::TrajectorySampler;
use crate::oracle::{lambda_operators, x1_substitution_gap, Analysis, Instance, Setting};
use crate::sa::{
    average_reward_update_map, discounted_update_map, drift_probe, lipschitz_probe, mean_update_estimate,
    mixing_time, seeded_rng, stacked_target, AffineMap, MarkovDriver, TdDriver, TdSample,
};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable pass condition on `value`.
    pub condition: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<Check>,
}

impl VerifySummary {
    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, format!("<= {bound:e}"), value <= bound);
    }

    fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, format!(">= {bound:e}"), value >= bound);
    }

    fn positive(&mut self, name: impl Into<String>, value: f64) {
        self.push(name, value, "> 0".into(), value > 0.0);
    }

    fn push(&mut self, name: impl Into<String>, value: f64, condition: String, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            value,
            condition,
            passed,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(s, "{tag} {:<52} {:>13.6e}  (need {})", c.name, c.value, c.condition);
        }
        let failed = self.failures().count();
        let _ = writeln!(s, "{} checks, {failed} failed", self.checks.len());
        s
    }
}

/// Random test points `w* + N(0, s²)` with `s = max(1, |w*|)`.
fn probe_points(center: &DVector<f64>, count: usize, seed: u64) -> Vec<DVector<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = seeded_rng(seed);
    let scale = center.norm().max(1.0);
    (0..count)
        .map(|_| {
            center
                + DVector::from_fn(center.len(), |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
        })
        .collect()
}

fn collect_samples(driver: &mut TdDriver, count: usize, seed: u64) -> Vec<TdSample> {
    let mut rng = seeded_rng(seed);
    driver.reset(&mut rng);
    (0..count).map(|_| driver.advance(&mut rng).clone()).collect()
}

/// Runs every check for `(inst, setting, λ, c_β)`.
pub fn verify_instance(
    inst: &Instance,
    setting: Setting,
    lambda: f64,
    c_beta: f64,
    cfg: &VerifyConfig,
    cutoff: crate::linalg::RankCutoff,
) -> Result<VerifySummary> {
    let a = Analysis::new(inst, setting, lambda, c_beta, cutoff)?;
    let x = &inst.features;
    let dec = &a.decomposition;
    let mut out = VerifySummary::default();

    let check = dec.check(x);
    out.at_most("decomposition: X = X1 + 1 theta^T", check.reconstruction_error, 1e-10);
    out.push(
        "decomposition: rank(X1) = rank(X) - [1 in col X]",
        check.rank_x1 as f64,
        format!("= {}", check.expected_rank_x1),
        check.rank_x1 == check.expected_rank_x1,
    );
    out.push(
        "decomposition: 1 not in col(X1)",
        check.ones_residual_x1,
        format!("> {:e}", check.ones_residual_floor),
        check.ones_residual_x1 > check.ones_residual_floor,
    );

    let sys_name = if setting.is_average_reward() { "A_bar" } else { "A" };
    out.at_most(
        format!("solution set nonempty: |{sys_name} w* + b|"),
        a.consistency_residual(),
        1e-8,
    );

    match setting {
        Setting::Discounted { .. } => {
            let ker_x = kernel_basis(x.matrix(), cutoff);
            let angle = max_principal_angle_sin(a.solution.basis(), &ker_x).unwrap_or(f64::INFINITY);
            out.at_most("kernel: ker(A) = ker(X), principal angle sine", angle, 1e-8);
        }
        Setting::AverageReward => {
            let ops = lambda_operators(&a.chain, 1.0, lambda)?;
            let gap = x1_substitution_gap(&ops, &a.chain, x, &dec.x1, lambda);
            out.at_most("decomposition: A_bar, b_bar unchanged with X1 for X", gap, 1e-10);
            let raw = crate::oracle::solution_set(&a.system, cutoff)?;
            let angle = max_principal_angle_sin(raw.basis(), &dec.kernel_x1()).unwrap_or(f64::INFINITY);
            out.at_most("kernel: ker(A_bar) = ker(X1), principal angle sine", angle, 1e-8);
        }
    }

    let margin = a.margin();
    out.positive(format!("negative definite: {sys_name} on ker({sys_name})^perp"), margin);

    let p0 = a.chain.d.as_slice().to_vec();
    let sampler = TrajectorySampler::with_initial(&inst.mdp, &inst.policy, &p0)?;
    let c_x = x.max_row_norm();
    let points = probe_points(a.solution.particular(), cfg.mc_points, cfg.seed);

    match (setting, &a.tilde) {
        (Setting::Discounted { gamma }, _) => {
            let decay = gamma * lambda;
            let h = discounted_update_map(x.clone(), gamma);
            let mean_field = AffineMap::new(a.system.a.clone(), a.system.b.clone())?;
            let (drift, _) = drift_probe(&a.solution, |w| mean_field.apply(w), cfg.probe_points, cfg.seed);
            out.positive("drift: mean field points toward W*", drift);
            out.at_least("drift: probe >= 2 * margin", drift, 2.0 * margin - 1e-8);

            let mut driver = TdDriver::new(sampler, x.clone(), decay);
            let samples = collect_samples(&mut driver, 2000, cfg.seed);
            let c_e = c_x / (1.0 - decay);
            let lip = lipschitz_probe(&h, x.dim(), &samples, 20, cfg.seed);
            out.at_most("Lipschitz: H(., y) within 2 C_x C_e", lip, 2.0 * c_x * c_e + 1e-6);

            let est = mean_update_estimate(&mut driver, &h, &points, cfg.mc_steps, cfg.burn_in, cfg.batches, cfg.seed);
            let z = est
                .iter()
                .zip(&points)
                .map(|(e, w)| e.max_z(&mean_field.apply(w)))
                .fold(0.0, f64::max);
            out.at_most("mean field: E[H(w, Y)] = A w + b, max |z|", z, cfg.max_z);
        }
        (Setting::AverageReward, Some(tilde)) => {
            let t_margin = tilde.margin();
            out.positive(format!("negative definite: combined system, c_beta = {c_beta}"), t_margin);
            let target = tilde.solution(&a.solution);
            let resid = tilde.mean_field(target.particular()).norm();
            out.at_most("combined fixed point: A~ w~* + b~", resid, 1e-8);

            let stacked = stacked_target(a.chain.avg_reward, &a.solution)?;
            let d = x.dim();
            let mut m = DMatrix::zeros(d + 1, d + 1);
            m[(0, 0)] = -c_beta;
            m.view_mut((1, 0), (d, 1)).copy_from(&(-&tilde.trace_mean));
            m.view_mut((1, 1), (d, d)).copy_from(&a.system.a);
            let mut c = DVector::zeros(d + 1);
            c[0] = c_beta * a.chain.avg_reward;
            c.rows_mut(1, d).copy_from(&(&a.system.b + &tilde.trace_mean * a.chain.avg_reward));
            let mean_field = AffineMap::new(m, c)?;
            let (drift, _) = drift_probe(&stacked, |w| mean_field.apply(w), cfg.probe_points, cfg.seed);
            out.positive("drift: mean field points toward {J} x W_bar*", drift);
            out.at_least("drift: probe >= 2 * combined margin", drift, 2.0 * t_margin - 1e-8);

            let mut driver = TdDriver::new(sampler, x.clone(), lambda);
            let samples = collect_samples(&mut driver, 2000, cfg.seed);
            let c_e = c_x / (1.0 - lambda);
            let fixed_j = average_reward_update_map(x.clone(), c_beta);
            let w_only = |w: &DVector<f64>, y: &TdSample, out: &mut DVector<f64>| {
                let mut v = DVector::zeros(w.len() + 1);
                v.rows_mut(1, w.len()).copy_from(w);
                let mut full = DVector::zeros(w.len() + 1);
                fixed_j(&v, y, &mut full);
                out.copy_from(&full.rows(1, w.len()));
            };
            let lip = lipschitz_probe(&w_only, d, &samples, 20, cfg.seed);
            out.at_most("Lipschitz: H(., y) within 2 C_x C_e", lip, 2.0 * c_x * c_e + 1e-6);

            // Compare Π-projected increments with the combined mean field.
            let pi = tilde.pi.clone();
            let h = average_reward_update_map(x.clone(), c_beta);
            let projected = move |v: &DVector<f64>, y: &TdSample, out: &mut DVector<f64>| {
                h(v, y, out);
                let w_part = &pi * out.rows(1, d);
                out.rows_mut(1, d).copy_from(&w_part);
            };
            let mut rng = seeded_rng(cfg.seed ^ 0x5eed);
            let stacked_points: Vec<DVector<f64>> = points
                .iter()
                .map(|w| {
                    let mut v = DVector::zeros(d + 1);
                    v[0] = a.chain.avg_reward + rand::Rng::random_range(&mut rng, -1.0..1.0);
                    v.rows_mut(1, d).copy_from(w);
                    v
                })
                .collect();
            let est = mean_update_estimate(
                &mut driver,
                &projected,
                &stacked_points,
                cfg.mc_steps,
                cfg.burn_in,
                cfg.batches,
                cfg.seed,
            );
            let z = est
                .iter()
                .zip(&stacked_points)
                .map(|(e, v)| {
                    let w = v.rows(1, d).into_owned();
                    e.max_z(&tilde.mean_field(&tilde.combine(v[0], &w)))
                })
                .fold(0.0, f64::max);
            out.at_most("mean field: projected E[H] = A~ w~ + b~, max |z|", z, cfg.max_z);
        }
        (Setting::AverageReward, None) => unreachable!("average-reward analysis always has a combined system"),
    }

    match mixing_time(&a.chain.p, 0.01) {
        Ok(n) => out.push("mixing: TV distance <= 0.01 after n steps", n as f64, "finite".into(), true),
        Err(_) => out.push("mixing: TV distance <= 0.01 after n steps", f64::INFINITY, "finite".into(), false),
    }
    Ok(out)
}
