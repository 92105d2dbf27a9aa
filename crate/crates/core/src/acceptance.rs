//! The acceptance suite: twelve end-to-end checks with pinned parameters and
//! thresholds. Shared by the `acceptance` test target and `twincity verify`.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{
    calibrate_next_stage, closeness_diagnostic, estimate_beta, oscillation_experiment, Checkpoint,
    ExperimentConfig,
};
use crate::process::{draw_shift_indices, hat_index_map, ProcessSpec, Stage};
use crate::rng::{derive_seed, seeded, streams, DEFAULT_MASTER_SEED};
use crate::schedule::{rule2_epsilon, satisfies_rule2, CalibrationOptions, Schedule};
use crate::stats::{
    rectangle_discrepancy, uniformity_chi_square, DiscrepancyMode, LocalUniformityParams,
};
use crate::torus::Metric;
use crate::tsp::{solve_brute, solve_exact, solve_partition, PartitionOptions};

/// Stage-1 parameters for the recovery check. `ε₁√N₁ ≈ 0.16` keeps the twin
/// effect strong at `2N₁`; recovery needs `ε₁√n ≳ 1`, which happens at a few
/// tens of thousands of points.
pub const RECOVERY_STAGE1_EPS: f64 = 0.007;
pub const RECOVERY_STAGE1_N: u64 = 500;
/// Stage-1 dip counts as persisting when its ratio is below this fraction of
/// `β̂`.
pub const DIP_PERSISTS_BELOW: f64 = 0.85;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1}s / {:.0}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_secs,
            self.budget_secs
        )
    }
}

#[derive(Clone, Debug)]
pub struct AcceptanceOptions {
    pub master_seed: u64,
    /// Run only these criteria (all when empty).
    pub only: Vec<usize>,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        Self {
            master_seed: DEFAULT_MASTER_SEED,
            only: Vec::new(),
        }
    }
}

pub const CRITERIA: [(usize, &str, u64); 12] = [
    (1, "exact solver matches brute force", 30),
    (2, "metric sandwich", 30),
    (3, "twin identity", 1),
    (4, "path-estimate sandwich", 10),
    (5, "beta bracket and stability", 300),
    (6, "oscillation dip", 600),
    (7, "recovery checkpoint", 1800),
    (8, "closeness bound", 120),
    (9, "stitch bound", 120),
    (10, "discrepancy ordering", 60),
    (11, "uniform marginals", 60),
    (12, "parameter arithmetic", 1),
];

struct Suite {
    seed: u64,
    beta_hat: Option<f64>,
    rule2_stages: Vec<(f64, f64, usize, u64)>,
}

/// Run the selected criteria, calling `report` after each one.
pub fn run(
    opts: &AcceptanceOptions,
    mut report: impl FnMut(&CriterionOutcome),
) -> Vec<CriterionOutcome> {
    let mut suite = Suite {
        seed: opts.master_seed,
        beta_hat: None,
        rule2_stages: Vec::new(),
    };
    // 12 checks the stages calibrated in 7, so it runs last.
    let order = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];
    let mut out = Vec::new();
    for id in order {
        if !opts.only.is_empty() && !opts.only.contains(&id) {
            continue;
        }
        let (_, name, budget) = CRITERIA[id - 1];
        let start = Instant::now();
        let result = match id {
            1 => suite.oracle(),
            2 => suite.sandwich(),
            3 => suite.twin_identity(),
            4 => suite.path_estimate(),
            5 => suite.beta(),
            6 => suite.dip(),
            7 => suite.recovery(),
            8 => suite.closeness(),
            9 => suite.stitch(),
            10 => suite.discrepancy(),
            11 => suite.marginals(),
            _ => suite.arithmetic(),
        };
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_budget = elapsed <= Duration::from_secs(budget);
        let outcome = CriterionOutcome {
            id,
            name: name.to_string(),
            passed: passed && in_budget,
            detail: if in_budget {
                detail
            } else {
                format!("{detail}; over time budget")
            },
            elapsed_secs: elapsed.as_secs_f64(),
            budget_secs: budget as f64,
        };
        report(&outcome);
        out.push(outcome);
    }
    out
}

type Check = Result<(bool, String)>;

impl Suite {
    /// 200 instances per metric with `n` cycling through 2..=9.
    fn instances(&self) -> Vec<(Metric, Vec<crate::torus::TorusPoint>)> {
        let mut v = Vec::with_capacity(600);
        for (mi, &metric) in Metric::ALL.iter().enumerate() {
            for i in 0..200u64 {
                let n = 2 + (i % 8) as usize;
                let seed = derive_seed(self.seed, streams::BASE, 1000 * mi as u64 + i);
                v.push((
                    metric,
                    ProcessSpec::iid(seed).prefix(0, n).expect("iid prefix"),
                ));
            }
        }
        v
    }

    fn oracle(&mut self) -> Check {
        let inst = self.instances();
        let bad: Vec<String> = inst
            .par_iter()
            .enumerate()
            .filter_map(|(i, (metric, pts))| {
                let (e, b) = match (solve_exact(pts, *metric), solve_brute(pts, *metric)) {
                    (Ok(e), Ok(b)) => (e, b),
                    (Err(err), _) | (_, Err(err)) => return Some(format!("#{i} {metric}: {err}")),
                };
                let ok = (e.length - b.length).abs() <= 1e-9 && e.optimal && b.optimal;
                (!ok).then(|| {
                    format!(
                        "#{i} {metric} n={}: {} vs {}",
                        pts.len(),
                        e.length,
                        b.length
                    )
                })
            })
            .collect();
        Ok((
            bad.is_empty(),
            match bad.first() {
                None => format!("{} instances, 0 mismatches", inst.len()),
                Some(first) => format!(
                    "{} instances, {} mismatches, first {first}",
                    inst.len(),
                    bad.len()
                ),
            },
        ))
    }

    fn sandwich(&mut self) -> Check {
        let inst = self.instances();
        let failures = inst
            .par_iter()
            .filter(|(_, pts)| {
                let l = |m| solve_exact(pts, m).map(|s| s.length).unwrap_or(f64::NAN);
                let (lb, lt, le) = (
                    l(Metric::FreeBoundary),
                    l(Metric::Torus),
                    l(Metric::Euclidean),
                );
                !(lb <= lt + 1e-9 && lt <= le + 1e-9 && le <= lb + 4.0)
            })
            .count();
        Ok((
            failures == 0,
            format!("{} instances, {failures} violations", inst.len()),
        ))
    }

    fn twin_identity(&mut self) -> Check {
        let n = 50i64;
        let eps = 0.01;
        let spec = ProcessSpec::iid(derive_seed(self.seed, streams::BASE, 3))
            .with_stage(Stage::pinned(eps, n as u64)?);
        let mut checked = 0;
        let mut bad = 0;
        for k in -3..=3i64 {
            for r in 0..n {
                let twin = spec.eval(1, 2 * k * n + n + r)?;
                let orig = spec.eval(1, 2 * k * n + r)?.translate(eps);
                checked += 1;
                if twin.x().to_bits() != orig.x().to_bits()
                    || twin.y().to_bits() != orig.y().to_bits()
                {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{checked} indices, {bad} mismatches")))
    }

    fn path_estimate(&mut self) -> Check {
        let (n, eps) = (3u64, 0.01);
        let metric = Metric::Torus;
        let base = ProcessSpec::iid(0).with_stage(Stage::pinned(eps, n)?);
        let results: Vec<Result<bool>> = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let spec = draw_shift_indices(
                    &base.reseeded(derive_seed(self.seed, streams::BASE, r)),
                    derive_seed(self.seed, streams::SHIFTS, r),
                );
                let x1 = spec.prefix(1, 6)?;
                let x0 = spec.prefix(0, 6)?;
                let hat: Vec<_> = (0..12)
                    .map(|u| {
                        let (v, s) = hat_index_map(u, n);
                        let p = x0[v as usize];
                        if s {
                            p.translate(eps)
                        } else {
                            p
                        }
                    })
                    .collect();
                let l1 = solve_exact(&x1, metric)?.length;
                let lh = solve_exact(&hat, metric)?.length;
                let l0 = solve_exact(&x0, metric)?.length;
                Ok(l1 <= lh + 1e-12 && lh <= l0 + 2.0 * eps * 6.0 + 1e-12)
            })
            .collect();
        let mut ok = 0;
        for r in results {
            ok += r? as usize;
        }
        Ok((
            ok == 100,
            format!("{ok}/100 realizations inside the sandwich"),
        ))
    }

    fn beta_hat(&mut self) -> Result<f64> {
        if let Some(b) = self.beta_hat {
            return Ok(b);
        }
        let cfg = ExperimentConfig {
            name: "beta".into(),
            n_values: vec![5000],
            reps: 20,
            master_seed: self.seed,
            ..Default::default()
        };
        let b = estimate_beta(&cfg)?.beta_hat;
        self.beta_hat = Some(b);
        Ok(b)
    }

    fn beta(&mut self) -> Check {
        let cfg = ExperimentConfig {
            name: "beta".into(),
            n_values: vec![2000, 5000, 8000],
            reps: 20,
            master_seed: self.seed,
            ..Default::default()
        };
        let est = estimate_beta(&cfg)?;
        let (r2, r5, r8) = (
            est.records[0].mean_ratio,
            est.records[1].mean_ratio,
            est.records[2].mean_ratio,
        );
        self.beta_hat = Some(r5);
        let rel = (r2 - r8).abs() / r8;
        let ok = (0.625..=0.95).contains(&r5) && rel < 0.03;
        Ok((
            ok,
            format!(
                "beta_hat(5000) = {r5:.4}; ratio 2000 vs 8000: {r2:.4} vs {r8:.4} ({:.2}%)",
                100.0 * rel
            ),
        ))
    }

    fn dip(&mut self) -> Check {
        let cfg = ExperimentConfig {
            name: "dip".into(),
            spec: ProcessSpec::iid(0).with_stage(Stage::pinned(1e-4, 5000)?),
            reps: 20,
            master_seed: self.seed,
            pin_shifts: true,
            ..Default::default()
        };
        let recs = oscillation_experiment(&cfg, &[Checkpoint::recover(1), Checkpoint::dip(1)])?;
        let (a, b) = (&recs[0], &recs[1]);
        let q = b.mean_ratio / a.mean_ratio;
        let se = q * ((a.stderr / a.mean_ratio).powi(2) + (b.stderr / b.mean_ratio).powi(2)).sqrt();
        let ok = q + 2.0 * se >= 0.68 && q - 2.0 * se <= 0.75;
        // Companion run with random shift indices; reported, not asserted.
        let free = oscillation_experiment(
            &ExperimentConfig {
                pin_shifts: false,
                ..cfg
            },
            &[Checkpoint::recover(1), Checkpoint::dip(1)],
        )?;
        let q_free = free[1].mean_ratio / free[0].mean_ratio;
        Ok((
            ok,
            format!(
                "ratio(2N)/ratio(N) = {:.4}/{:.4} = {q:.4} ± {se:.4}, band [0.68, 0.75]; random shifts: {q_free:.4}",
                b.mean_ratio, a.mean_ratio
            ),
        ))
    }

    fn recovery(&mut self) -> Check {
        let beta_hat = self.beta_hat()?;
        let cfg = ExperimentConfig {
            name: "recovery".into(),
            reps: 20,
            master_seed: self.seed,
            pin_shifts: true,
            ..Default::default()
        };
        let mut schedule = Schedule::new(vec![0.5, 0.05])?;
        let stage1 = Stage::pinned(RECOVERY_STAGE1_EPS, RECOVERY_STAGE1_N)?;
        let spec1 = ProcessSpec::iid(0).with_stage(stage1);
        let (spec2, cal) = calibrate_next_stage(
            &cfg,
            &spec1,
            &mut schedule,
            beta_hat,
            &CalibrationOptions::default(),
        )?;
        self.rule2_stages
            .push((stage1.epsilon, 0.5, 1, stage1.block_len));
        self.rule2_stages
            .push((cal.epsilon, cal.eta, 2, cal.block_len));

        let cfg = ExperimentConfig { spec: spec2, ..cfg };
        let recs = oscillation_experiment(
            &cfg,
            &[Checkpoint::recover(2), Checkpoint::dip(1).sampled_from(2)],
        )?;
        let (rec, dip) = (&recs[0], &recs[1]);
        let rec_rel = (rec.mean_ratio - beta_hat).abs() / beta_hat;
        let dip_rel = dip.mean_ratio / beta_hat;
        let ok = rec_rel <= 0.07 && dip_rel < DIP_PERSISTS_BELOW;
        Ok((
            ok,
            format!(
                "N_2 = {} (eps_2 = {:.3e}, rejected {:?}); recover(2) at n={}: {:.4} ({:.2}% from beta_hat {beta_hat:.4}); dip(1) at n={}: {:.4} = {:.3}·beta_hat",
                cal.block_len,
                cal.epsilon,
                cal.rejected,
                rec.n,
                rec.mean_ratio,
                100.0 * rec_rel,
                dip.n,
                dip.mean_ratio,
                dip_rel
            ),
        ))
    }

    fn closeness(&mut self) -> Check {
        let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(1e-4, 1000)?);
        let rep = closeness_diagnostic(&spec, 1, 2, 4, 100_000, self.seed)?;
        Ok((
            rep.passes,
            format!(
                "distance {:.4} (noise floor {:.4}) <= {} + 3·{:.4}",
                rep.empirical_distance, rep.noise_floor, rep.bound, rep.mc_error
            ),
        ))
    }

    fn stitch(&mut self) -> Check {
        let jobs: Vec<(u64, usize)> = (0..50u64)
            .flat_map(|i| [4, 8, 16].map(|k| (i, k)))
            .collect();
        let results: Vec<Result<(bool, f64)>> = jobs
            .par_iter()
            .map(|&(i, k)| {
                let pts = ProcessSpec::iid(derive_seed(self.seed, streams::BASE, 9000 + i))
                    .prefix(0, 2000)?;
                let metric = Metric::ALL[(i % 3) as usize];
                let opts = PartitionOptions {
                    k,
                    ..Default::default()
                };
                let s = solve_partition(&pts, metric, &opts)?;
                Ok((
                    s.solution.length <= s.stitch_bound(),
                    s.stitch_cost / k as f64,
                ))
            })
            .collect();
        let mut ok = 0;
        let mut worst: f64 = 0.0;
        for r in results {
            let (pass, per_k) = r?;
            ok += pass as usize;
            worst = worst.max(per_k);
        }
        Ok((
            ok == jobs.len(),
            format!(
                "{ok}/{} invocations within the bound; largest stitch cost / k = {worst:.3}",
                jobs.len()
            ),
        ))
    }

    fn discrepancy(&mut self) -> Check {
        let n = 4096;
        let kron = rectangle_discrepancy(
            &crate::process::default_kronecker(n),
            DiscrepancyMode::GridApprox,
            64,
        )?
        .value;
        let mut iid: Vec<f64> = (0..20u64)
            .into_par_iter()
            .map(|i| {
                let pts = ProcessSpec::iid(derive_seed(self.seed, streams::BASE, 7000 + i))
                    .prefix(0, n)?;
                Ok(rectangle_discrepancy(&pts, DiscrepancyMode::GridApprox, 64)?.value)
            })
            .collect::<Result<_>>()?;
        iid.sort_by(f64::total_cmp);
        let median = 0.5 * (iid[9] + iid[10]);
        Ok((
            kron < median,
            format!("Kronecker {kron:.5} vs iid median {median:.5}"),
        ))
    }

    fn marginals(&mut self) -> Check {
        let spec = ProcessSpec::iid(0)
            .with_stage(Stage::pinned(0.1, 5)?)
            .with_stage(Stage::pinned(0.03, 40)?);
        let t = 17;
        let pts: Vec<_> = (0..100_000u64)
            .into_par_iter()
            .map(|r| {
                let s = draw_shift_indices(
                    &spec.reseeded(derive_seed(self.seed, streams::BASE, r)),
                    derive_seed(self.seed, streams::SHIFTS, r),
                );
                s.eval(2, t)
            })
            .collect::<Result<_>>()?;
        let c = uniformity_chi_square(&pts, 16)?;
        Ok((
            c.p_value > 0.001,
            format!(
                "chi2 = {:.1} on {} df, p = {:.4}",
                c.statistic, c.df, c.p_value
            ),
        ))
    }

    fn arithmetic(&mut self) -> Check {
        let mut rng = seeded(derive_seed(self.seed, streams::ESTIMATOR, 12));
        let mut bad = 0;
        for _ in 0..1000 {
            let alpha: f64 = rng.random_range(1e-3..=1.0);
            let eps = alpha * rng.random_range(0.001..0.999);
            let m: u64 = rng.random_range(0..1_000_000);
            let big_n: u64 = rng.random_range(1..1_000_000);
            let p = LocalUniformityParams::new(alpha, m)?;
            let h = p.hat_update(eps, big_n)?;
            let t = p.t_update(eps, big_n)?;
            let cap = eps.min(alpha - eps);
            let ok = h.m == m + 4 * big_n
                && t.m == m + 6 * big_n
                && h.alpha > 0.0
                && h.alpha < cap
                && t.alpha == h.alpha;
            bad += !ok as usize;
            // Rule 2 on an arbitrary stage.
            let j = rng.random_range(1..20usize);
            let eta = rng.random_range(1e-4..0.9);
            let e = rule2_epsilon(rng.random_range(1e-6..1.0), eta, j, big_n);
            bad += !satisfies_rule2(e, eta, j, big_n) as usize;
        }
        let calibrated = self.rule2_stages.len();
        for &(eps, eta, j, n) in &self.rule2_stages {
            bad += !satisfies_rule2(eps, eta, j, n) as usize;
        }
        Ok((
            bad == 0,
            format!("1000 parameter draws and {calibrated} calibrated stages, {bad} violations"),
        ))
    }
}
