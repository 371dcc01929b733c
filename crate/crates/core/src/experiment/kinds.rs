use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bec::{
    build_trial_state, geometric_cell_bound, hardcore_vanishing_criterion, partition_occupation_bound,
    rate_fixtures, soft_conditions_check, support_cell_count, trial_energy_density, PairKernel,
    PartitionSpec, RateFixture, ScalarField,
};
use crate::cluster::{
    estimate_critical_intensity, fit_tail_sizes, label_components, origin_cluster_trials,
    run_cluster_trial, scaling_study, survival_from_sizes, ClusterTrial,
};
use crate::error::{Error, Result};
use crate::free_balls::{check_free_ball_threshold, count_free_unit_balls, largest_clearing_ball};
use crate::params::ModelParams;
use crate::rng::trial_seed;
use crate::sampler::sample_configuration;
use crate::spatial::SpatialIndex;
use crate::stats::summarize;
use crate::vacancy::{discretize, estimate_vacancy_fraction};

use super::{num, Artifact, ExperimentConfig, ExperimentKind, Table};

type Outcome = Result<(Vec<Artifact>, Value)>;

pub(super) fn dispatch(c: &ExperimentConfig) -> Outcome {
    match c.kind {
        ExperimentKind::Vacancy => vacancy(c),
        ExperimentKind::Clusters => clusters(c),
        ExperimentKind::Tail => tail(c),
        ExperimentKind::Scaling => scaling(c),
        ExperimentKind::NuC => nu_c(c),
        ExperimentKind::FreeBalls => free_balls(c),
        ExperimentKind::Clearing => clearing(c),
        ExperimentKind::BecPartition => bec_partition(c),
        ExperimentKind::BecEnergy => bec_energy(c),
        ExperimentKind::BecConditions => bec_conditions(c),
    }
}

fn par_trials<T: Send>(n: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Standard score of `mean` against `target`; zero when both agree exactly.
fn zscore(mean: f64, target: f64, stderr: f64) -> f64 {
    if mean == target {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        (mean - target) / stderr
    }
}

fn regime_gate(c: &ExperimentConfig) -> Result<()> {
    match c.nu_c {
        Some(nc) if c.model.nu <= nc => Err(Error::Regime(format!(
            "nu = {} is not above the critical intensity {nc}; the vacant set may percolate",
            c.model.nu
        ))),
        _ => Ok(()),
    }
}

fn params_for(c: &ExperimentConfig, n: u64) -> Result<ModelParams> {
    let p = &c.model;
    ModelParams::from_density(p.d, p.nu, p.radius, n, c.rho)
}

fn vacancy(c: &ExperimentConfig) -> Outcome {
    let p = c.model;
    let runs = par_trials(c.trials, |t| {
        let ps = sample_configuration(&p, c.seed, t)?;
        let idx = SpatialIndex::new(&ps, p.radius)?;
        let est = estimate_vacancy_fraction(&idx, &p, c.samples, trial_seed(c.seed, t))?;
        Ok((ps.len(), est))
    })?;
    let mut table = Table::new(["trial", "seed", "L", "nu", "R", "n_points", "fraction", "stderr"]);
    for (t, (n, est)) in runs.iter().enumerate() {
        table.push(vec![
            t.to_string(),
            trial_seed(c.seed, t as u64).to_string(),
            num(p.side),
            num(p.nu),
            num(p.radius),
            n.to_string(),
            num(est.fraction),
            num(est.stderr),
        ]);
    }
    let fr: Vec<f64> = runs.iter().map(|(_, e)| e.fraction).collect();
    let s = summarize(&fr)?;
    let theory = p.vacancy_fraction_limit();
    let z = zscore(s.mean, theory, s.stderr);
    let summary = json!({
        "kind": "vacancy",
        "trials": c.trials,
        "samples_per_trial": c.samples,
        "theory": theory,
        "mean": s.mean,
        "stderr": s.stderr,
        "z": z,
        "within_3_sigma": z.abs() <= 3.0,
    });
    Ok((vec![table.into_artifact("trials.csv")], summary))
}

fn cluster_table(runs: &[ClusterTrial]) -> Table {
    let mut table = Table::new([
        "seed", "L", "nu", "R", "n_vacant", "n_clusters", "A_N", "origin_size", "spans",
    ]);
    for r in runs {
        table.push(vec![
            r.seed.to_string(),
            num(r.side),
            num(r.nu),
            num(r.radius),
            r.n_vacant.to_string(),
            r.n_clusters.to_string(),
            r.a_n.to_string(),
            r.origin_size.to_string(),
            r.spans.to_string(),
        ]);
    }
    table
}

fn clusters(c: &ExperimentConfig) -> Outcome {
    let runs = par_trials(c.trials, |t| run_cluster_trial(&c.model, c.seed, t))?;
    let a: Vec<f64> = runs.iter().map(|r| r.a_n as f64).collect();
    let spanning = runs.iter().filter(|r| r.spans).count();
    let summary = json!({
        "kind": "clusters",
        "trials": c.trials,
        "A_N": summarize(&a)?,
        "spanning_fraction": spanning as f64 / runs.len() as f64,
    });
    Ok((vec![cluster_table(&runs).into_artifact("trials.csv")], summary))
}

fn tail(c: &ExperimentConfig) -> Outcome {
    regime_gate(c)?;
    let runs = origin_cluster_trials(&c.model, c.trials, c.seed)?;
    let sizes: Vec<usize> = runs.iter().map(|r| r.origin_size).collect();
    let fit = fit_tail_sizes(&sizes, c.n_max, c.model.nu)?;
    let survival = survival_from_sizes(&sizes, c.n_max);
    let mut table = Table::new(["n", "survival", "ln_survival", "fitted"]);
    for (i, &s) in survival.iter().enumerate() {
        let n = i + 1;
        let used = fit.n_values.contains(&n);
        table.push(vec![
            n.to_string(),
            num(s),
            if s > 0.0 { num(s.ln()) } else { String::new() },
            if used {
                num(fit.intercept + fit.slope * n as f64)
            } else {
                String::new()
            },
        ]);
    }
    let summary = json!({
        "kind": "tail",
        "trials": c.trials,
        "nu": c.model.nu,
        "nu_c": c.nu_c,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "points": fit.n_values.len(),
    });
    Ok((
        vec![
            cluster_table(&runs).into_artifact("trials.csv"),
            table.into_artifact("tail.csv"),
        ],
        summary,
    ))
}

fn scaling(c: &ExperimentConfig) -> Outcome {
    regime_gate(c)?;
    let st = scaling_study(&c.model, &c.l_list, c.trials, c.seed)?;
    let mut table = Table::new(["L", "ln_L", "trials", "mean", "p50", "p90", "p99", "max"]);
    for r in &st.rows {
        table.push(vec![
            num(r.side),
            num(r.ln_side),
            r.a_n.n.to_string(),
            num(r.a_n.mean),
            num(r.a_n.p50),
            num(r.a_n.p90),
            num(r.a_n.p99),
            num(r.a_n.max),
        ]);
    }
    let summary = json!({
        "kind": "scaling",
        "trials_per_side": c.trials,
        "fit_p99": st.fit_p99,
        "fit_max": st.fit_max,
        "ratio_spread": st.ratio_spread,
    });
    Ok((
        vec![
            cluster_table(&st.trials).into_artifact("trials.csv"),
            table.into_artifact("scaling.csv"),
        ],
        summary,
    ))
}

fn nu_c(c: &ExperimentConfig) -> Outcome {
    let est = estimate_critical_intensity(c.model.d, c.model.radius, &c.l_list, &c.nu_grid, c.trials, c.seed)?;
    let mut table = Table::new(["nu", "L", "trials", "spanning", "probability", "stderr"]);
    for r in &est.rows {
        table.push(vec![
            num(r.nu),
            num(r.side),
            r.trials.to_string(),
            r.spanning.to_string(),
            num(r.probability),
            num(r.stderr),
        ]);
    }
    let summary = json!({
        "kind": "nu-c",
        "nu_c": est.nu_c,
        "uncertainty": est.uncertainty,
        "pairs": est.pairs,
        "warnings": est.warnings,
    });
    Ok((vec![table.into_artifact("spanning.csv")], summary))
}

fn free_balls(c: &ExperimentConfig) -> Outcome {
    let cases: Vec<ModelParams> = if c.n_seq.is_empty() {
        vec![c.model]
    } else {
        c.n_seq.iter().map(|&n| params_for(c, n)).collect::<Result<_>>()?
    };
    let mut table = Table::new([
        "trial", "L", "N", "nu", "candidates", "B_N", "threshold", "pass", "seed",
    ]);
    let mut per_n = Vec::new();
    for (ni, p) in cases.iter().enumerate() {
        let n = p.particles;
        let runs = par_trials(c.trials, |t| {
            let id = ((ni as u64) << 32) | t;
            let ps = sample_configuration(p, c.seed, id)?;
            let idx = SpatialIndex::new(&ps, 0.5)?;
            let mut rep = count_free_unit_balls(&idx, p)?;
            let pass = check_free_ball_threshold(&mut rep, c.c_n.eval(n), n)?;
            Ok((id, rep, pass))
        })?;
        for (t, (id, rep, pass)) in runs.iter().enumerate() {
            table.push(vec![
                t.to_string(),
                num(p.side),
                n.to_string(),
                num(p.nu),
                rep.candidates.to_string(),
                rep.b_n.to_string(),
                num(rep.free_ball_threshold.unwrap_or(f64::NAN)),
                pass.to_string(),
                trial_seed(c.seed, *id).to_string(),
            ]);
        }
        let fr: Vec<f64> = runs.iter().map(|(_, r, _)| r.fraction()).collect();
        let s = summarize(&fr)?;
        let c_theory = runs[0].1.c_theory;
        let passes = runs.iter().filter(|r| r.2).count();
        per_n.push(json!({
            "N": n,
            "L": p.side,
            "candidates": runs[0].1.candidates,
            "mean_fraction": s.mean,
            "stderr": s.stderr,
            "c_theory": c_theory,
            "z": zscore(s.mean, c_theory, s.stderr),
            "pass_rate": passes as f64 / runs.len() as f64,
        }));
    }
    let summary = json!({ "kind": "free-balls", "trials": c.trials, "c_n": c.c_n, "cases": per_n });
    Ok((vec![table.into_artifact("trials.csv")], summary))
}

fn clearing(c: &ExperimentConfig) -> Outcome {
    let p = c.model;
    let cell = (p.nu.powf(-1.0 / p.d as f64)).max(0.5);
    let runs = par_trials(c.trials, |t| {
        let ps = sample_configuration(&p, c.seed, t)?;
        let idx = SpatialIndex::new(&ps, cell)?;
        largest_clearing_ball(&idx, &p, c.probe_budget, trial_seed(c.seed, t))
    })?;
    let mut header = vec!["trial".to_string()];
    header.extend((1..=p.d).map(|k| format!("center_{k}")));
    header.extend(["radius", "theory_radius", "seed"].map(String::from));
    let mut table = Table::new(header);
    for (t, b) in runs.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(b.center.iter().map(|v| num(*v)));
        row.push(num(b.radius));
        row.push(num(b.theory_radius));
        row.push(trial_seed(c.seed, t as u64).to_string());
        table.push(row);
    }
    let radii: Vec<f64> = runs.iter().map(|b| b.radius).collect();
    let theory = runs[0].theory_radius;
    let hits = radii.iter().filter(|&&r| r >= 0.8 * theory).count();
    let summary = json!({
        "kind": "clearing",
        "trials": c.trials,
        "theory_radius": theory,
        "radius": summarize(&radii)?,
        "fraction_at_least_0_8_theory": hits as f64 / radii.len() as f64,
    });
    Ok((vec![table.into_artifact("clearing.csv")], summary))
}

fn bec_partition(c: &ExperimentConfig) -> Outcome {
    let p = c.model;
    let d = p.d;
    let part = PartitionSpec::new(c.cell_side.unwrap_or(c.interaction.a / (d as f64).sqrt()));
    let ln_n = (p.particles as f64).ln();
    let runs = par_trials(c.trials, |t| {
        let ps = sample_configuration(&p, c.seed, t)?;
        let idx = SpatialIndex::new(&ps, p.radius)?;
        let grid = discretize(&ps, &p, None)?;
        let lab = label_components(&grid);
        let Some(id) = lab.largest_id() else {
            return Ok(None);
        };
        let phi = match ScalarField::uniform_on_cluster(&lab, id, &idx, p.radius, c.subdivision) {
            Ok(f) => f,
            Err(Error::Unnormalized { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let a_n = lab.size_of_cluster(id);
        let bound = partition_occupation_bound(&phi, &part, p.side)?;
        let cells = support_cell_count(&phi, &part)?;
        let geo = geometric_cell_bound(a_n, grid.spacing(), part.cell_side, d);
        Ok(Some((a_n, cells, bound, geo)))
    })?;
    let mut table = Table::new([
        "trial",
        "seed",
        "L",
        "N",
        "A_N",
        "cells",
        "bound",
        "cell_bound",
        "geometric_cells",
        "chain_holds",
        "cells_per_log",
    ]);
    let mut chain_all = true;
    let mut bounds = Vec::new();
    let mut per_log = Vec::new();
    for (t, r) in runs.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            trial_seed(c.seed, t as u64).to_string(),
            num(p.side),
            p.particles.to_string(),
        ];
        match r {
            Some((a_n, cells, bound, geo)) => {
                let cell_bound = (*cells as f64).powi(2) / p.volume();
                let holds = *bound <= cell_bound * (1.0 + 1e-12) && *cells as f64 <= *geo;
                chain_all &= holds;
                bounds.push(*bound);
                per_log.push(*cells as f64 / ln_n);
                row.extend([
                    a_n.to_string(),
                    cells.to_string(),
                    num(*bound),
                    num(cell_bound),
                    num(*geo),
                    holds.to_string(),
                    num(*cells as f64 / ln_n),
                ]);
            }
            None => row.extend(["0", "", "", "", "", "", ""].map(String::from)),
        }
        table.push(row);
    }
    let summary = json!({
        "kind": "bec-partition",
        "trials": c.trials,
        "cell_side": part.cell_side,
        "trials_with_state": bounds.len(),
        "chain_holds": chain_all,
        "bound": if bounds.is_empty() { Value::Null } else { json!(summarize(&bounds)?) },
        "empirical_constant": per_log.iter().copied().fold(f64::NAN, f64::max),
        "empirical_constant_note": "max over trials of cells / ln N; a fitted stand-in, not a proven constant",
    });
    Ok((vec![table.into_artifact("trials.csv")], summary))
}

fn bec_energy(c: &ExperimentConfig) -> Outcome {
    let d = c.model.d;
    let base = PairKernel::new(&c.interaction, d)?;
    let mut table = Table::new([
        "trial",
        "seed",
        "N",
        "L",
        "B_N",
        "b",
        "w_l1",
        "ln2_w_l1",
        "kinetic_density",
        "interaction_density",
        "energy_density",
        "quadrature_error",
    ]);
    let mut per_n = Vec::new();
    let mut means = Vec::new();
    for (ni, &n) in c.n_seq.iter().enumerate() {
        let p = params_for(c, n)?;
        let ln = (n as f64).ln();
        let b = match c.b_decay {
            Some(eps) => c.interaction.b / ((n as f64).powf(eps) * ln * ln),
            None => c.interaction.b,
        };
        let kernel = base.with_floor(b)?;
        let runs = par_trials(c.trials, |t| {
            let id = ((ni as u64) << 32) | t;
            let ps = sample_configuration(&p, c.seed, id)?;
            let idx = SpatialIndex::new(&ps, 0.5)?;
            let rep = count_free_unit_balls(&idx, &p)?;
            let ts = build_trial_state(&rep)?;
            Ok((id, trial_energy_density(&ts, &kernel, n, p.side, c.beta)?))
        })?;
        for (t, (id, r)) in runs.iter().enumerate() {
            if r.quadrature_flag {
                return Err(Error::Quadrature {
                    estimate: r.quadrature_error,
                });
            }
            table.push(vec![
                t.to_string(),
                trial_seed(c.seed, *id).to_string(),
                n.to_string(),
                num(p.side),
                r.b_n.to_string(),
                num(b),
                num(r.w_l1),
                num(ln * ln * r.w_l1),
                num(r.kinetic_density),
                num(r.interaction_density),
                num(r.energy_density),
                num(r.quadrature_error),
            ]);
        }
        let e: Vec<f64> = runs.iter().map(|(_, r)| r.energy_density).collect();
        let s = summarize(&e)?;
        means.push(s.mean);
        per_n.push(json!({
            "N": n,
            "L": p.side,
            "b": b,
            "ln2_w_l1": ln * ln * c.interaction.l1_norm(d) * b / c.interaction.b,
            "energy_density": s,
        }));
    }
    let s = summarize(&means)?;
    let ratio = s.max / s.p50;
    let summary = json!({
        "kind": "bec-energy",
        "trials_per_N": c.trials,
        "beta": c.beta,
        "cases": per_n,
        "max_over_median": ratio,
        "bounded": ratio <= 1.2,
    });
    Ok((vec![table.into_artifact("trials.csv")], summary))
}

fn bec_conditions(c: &ExperimentConfig) -> Outcome {
    let fixtures: Vec<(RateFixture, bool)> = if c.fixtures.is_empty() {
        rate_fixtures(c.model.d).into_iter().map(|f| (f, true)).collect()
    } else {
        c.fixtures
            .iter()
            .map(|f| {
                (
                    RateFixture {
                        fixture: f.clone(),
                        expected: crate::bec::sequences::Expectation::Soft([None; 3]),
                    },
                    false,
                )
            })
            .collect()
    };
    let mut seq = Table::new(["fixture", "N", "L", "t_N", "u_N", "strength", "range", "weakness"]);
    let mut verdicts = Table::new([
        "fixture",
        "hardcore_slope",
        "hardcore_vanishing",
        "strength_slope",
        "strength_trend",
        "range_slope",
        "range_trend",
        "weakness_slope",
        "weakness_trend",
        "soft_satisfied",
        "expected_match",
    ]);
    let mut reports = Vec::new();
    let mut all_match = true;
    for (f, known) in &fixtures {
        let fx = &f.fixture;
        let hard = hardcore_vanishing_criterion(fx, &c.slope_test)?;
        let has_soft = fx.rows.iter().all(|r| r.b.is_some() && r.w_l1.is_some());
        let soft = if has_soft {
            Some(soft_conditions_check(fx, &c.slope_test)?)
        } else {
            None
        };
        for (i, h) in hard.rows.iter().enumerate() {
            let mut row = vec![fx.name.clone(), h.n.to_string(), num(h.side), num(h.t_n), num(h.u_n)];
            match &soft {
                Some(s) => row.extend([num(s.rows[i].strength), num(s.rows[i].range), num(s.rows[i].weakness)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
            seq.push(row);
        }
        let matched = if *known { Some(f.check(&c.slope_test)?) } else { None };
        all_match &= matched.unwrap_or(true);
        let mut row = vec![fx.name.clone(), num(hard.slope), hard.vanishing.to_string()];
        match &soft {
            Some(s) => {
                for k in 0..3 {
                    row.push(num(s.slopes[k]));
                    row.push(s.trends[k].as_str().to_string());
                }
                row.push(s.satisfied.to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        row.push(matched.map_or(String::new(), |m| m.to_string()));
        verdicts.push(row);
        reports.push(json!({
            "fixture": fx.name,
            "hardcore": { "slope": hard.slope, "vanishing": hard.vanishing },
            "soft": soft.as_ref().map(|s| json!({
                "slopes": s.slopes,
                "trends": s.trends,
                "satisfied": s.satisfied,
            })),
            "expected_match": matched,
        }));
    }
    let summary = json!({
        "kind": "bec-conditions",
        "slope_test": c.slope_test,
        "fixtures": reports,
        "all_expected_match": all_match,
    });
    Ok((
        vec![seq.into_artifact("sequences.csv"), verdicts.into_artifact("verdicts.csv")],
        summary,
    ))
}
