//! Executes a validated experiment into rows and a summary block.

use cdklab_core::error::Error as CoreError;
use cdklab_core::identity::{exponential_form, sinc_identity_check};
use cdklab_core::jacobi::{JacobiParameters, Stepper};
use cdklab_core::kernel::{
    diagonal_kernel, diagonal_trace, mixed_symmetrized_kernel, perturbed_kernel_expansion, point_mass_verdict,
    scaled_kernel_with_weight, second_kind_kernel_with_weight, PointMassVerdict, ScaleMode,
};
use cdklab_core::perturbation::{
    apply, l2_condition_partial, variation_of_parameters, PerturbationSpec, RandomDiagonal,
};
use cdklab_core::stieltjes::{boundary_f, eigenvalue_and_mass, eigenvector_norm_sq, weights, weights_from_boundary};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, Experiment, Mode, Perturbation};
use crate::output::{sort_rows, Row};

/// Rows, summary and the outcome of the mandatory numeric checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub summary: Value,
    /// Descriptions of failed mandatory checks; empty when all passed.
    pub failures: Vec<String>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn cnum(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

/// The core perturbation for one seed.
pub fn perturbation_spec(p: &Perturbation, seed: Option<u64>) -> Option<PerturbationSpec> {
    match p {
        Perturbation::None => None,
        Perturbation::RankOne { beta1 } => Some(PerturbationSpec::RankOne { beta1: *beta1 }),
        Perturbation::Diagonal { betas } => Some(PerturbationSpec::Diagonal { betas: betas.clone() }),
        Perturbation::PowerLaw { amplitude, exponent, horizon } => Some(PerturbationSpec::Diagonal {
            betas: (1..=*horizon).map(|k| amplitude * (k as f64).powf(-exponent)).collect(),
        }),
        Perturbation::Random { amplitude, exponent, distribution, horizon } => {
            Some(PerturbationSpec::RandomDiagonal(RandomDiagonal {
                amplitude: *amplitude,
                exponent: *exponent,
                distribution: *distribution,
                seed: seed.unwrap_or(1),
                horizon: *horizon,
            }))
        }
    }
}

/// Parameters of the measure under study for one seed.
pub fn study_params(exp: &Experiment, seed: Option<u64>) -> Result<JacobiParameters, CoreError> {
    match perturbation_spec(&exp.perturbation, seed) {
        None => Ok(exp.measure.params.clone()),
        Some(spec) => apply(&exp.measure.params, &spec),
    }
}

/// Weight of the studied measure at `x0`; rank-one perturbations use the
/// closed-form transform of the unperturbed weight.
fn study_weight(exp: &Experiment, params: &JacobiParameters, x0: f64) -> Result<f64, CoreError> {
    let w = match exp.perturbation {
        Perturbation::RankOne { beta1 } => weights(&exp.measure.params, x0, Some(beta1))?.w_beta.unwrap_or(0.0),
        _ => weights(params, x0, None)?.w,
    };
    if w > 0.0 {
        Ok(w)
    } else {
        Err(CoreError::NonPositiveWeight { x: x0, w })
    }
}

struct Ctx<'a> {
    exp: &'a Experiment,
    perturbation: String,
}

impl Ctx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn row(
        &self,
        seed: Option<u64>,
        x0: f64,
        n: usize,
        (a, b): (Complex64, Complex64),
        mode: Mode,
        value: Option<Complex64>,
        target: Option<Complex64>,
        abs_err: Option<f64>,
        status: String,
    ) -> Row {
        Row {
            experiment_id: self.exp.id.clone(),
            measure: self.exp.measure.name.clone(),
            perturbation: self.perturbation.clone(),
            seed,
            x0,
            n,
            a,
            b,
            mode: mode.name().into(),
            value,
            target,
            abs_err,
            status,
        }
    }

    fn error_row(
        &self,
        seed: Option<u64>,
        x0: f64,
        n: usize,
        ab: (Complex64, Complex64),
        mode: Mode,
        e: &CoreError,
    ) -> Row {
        self.row(seed, x0, n, ab, mode, None, None, None, format!("error: {e}"))
    }
}

pub fn run(exp: &Experiment) -> RunOutput {
    match exp.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run_inner(exp)),
            Err(_) => run_inner(exp),
        },
        None => run_inner(exp),
    }
}

fn run_inner(exp: &Experiment) -> RunOutput {
    let ctx = Ctx { exp, perturbation: exp.perturbation.label() };
    let (mut rows, entries, mut failures) = match exp.command {
        Command::Universality | Command::SecondKind | Command::Perturb | Command::RandomPerturb => kernel_runs(&ctx),
        Command::Stieltjes => stieltjes_run(&ctx),
        Command::Eigenvalue => eigenvalue_run(&ctx),
        Command::IdentityCheck => identity_run(&ctx),
        Command::Varpar => varpar_run(&ctx),
    };
    let extra = if exp.command == Command::RandomPerturb { l2_summary(exp) } else { Value::Null };
    sort_rows(&mut rows);
    let errors = rows.iter().filter(|r| r.is_error()).count();
    if exp.tolerance.is_some() && exp.command != Command::IdentityCheck && errors > 0 {
        failures.push(format!("{errors} row(s) carry numeric errors"));
    }
    let mut summary = json!({
        "experiment_id": exp.id,
        "command": exp.command.name(),
        "measure": exp.measure.name,
        "perturbation": ctx.perturbation,
        "mode": exp.mode.name(),
        "tolerance": opt_num(exp.tolerance),
        "entries": entries,
        "failures": failures,
    });
    if !extra.is_null() {
        summary["l2"] = extra;
    }
    RunOutput { rows, summary, failures }
}

type Outcome = (Vec<Row>, Vec<Value>, Vec<String>);

fn seeds(exp: &Experiment) -> Vec<Option<u64>> {
    if exp.seeds.is_empty() {
        vec![None]
    } else {
        exp.seeds.iter().copied().map(Some).collect()
    }
}

fn scale_mode(mode: Mode) -> ScaleMode {
    if mode == Mode::ByDiag {
        ScaleMode::ByDiag
    } else {
        ScaleMode::ByN
    }
}

struct KernelEntry {
    seed: Option<u64>,
    x0: f64,
    rows: Vec<Row>,
    summary: Value,
    sup_final: Option<f64>,
}

fn kernel_runs(ctx: &Ctx<'_>) -> Outcome {
    let exp = ctx.exp;
    let tasks: Vec<(Option<u64>, f64)> =
        seeds(exp).into_iter().flat_map(|s| exp.x0.iter().map(move |&x| (s, x))).collect();
    let entries: Vec<KernelEntry> = tasks.par_iter().map(|&(seed, x0)| kernel_task(ctx, seed, x0)).collect();

    let mut failures = Vec::new();
    if let Some(tol) = exp.tolerance {
        let n_max = *exp.n.last().expect("validated nonempty");
        for x0 in &exp.x0 {
            let group: Vec<&KernelEntry> = entries.iter().filter(|e| e.x0 == *x0).collect();
            let over: Vec<(Option<u64>, f64)> = group
                .iter()
                .map(|e| (e.seed, e.sup_final.unwrap_or(f64::INFINITY)))
                .filter(|(_, s)| !(*s <= tol))
                .collect();
            // Random runs tolerate one seed within twice the tolerance.
            let tolerated = exp.perturbation.is_random() && over.len() == 1 && over[0].1 <= 2.0 * tol;
            if !over.is_empty() && !tolerated {
                for (seed, s) in over {
                    let who = seed.map(|s| format!(" seed {s}")).unwrap_or_default();
                    failures.push(format!("x0={x0}{who} n={n_max}: sup abs_err {s:e} exceeds {tol:e}"));
                }
            }
        }
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for e in entries {
        rows.extend(e.rows);
        summaries.push(e.summary);
    }
    if let (Some(tol), true) = (exp.tolerance, exp.perturbation.is_random()) {
        let n_max = *exp.n.last().expect("validated nonempty");
        for r in rows.iter_mut().filter(|r| r.n == n_max && r.status == "ok") {
            if r.abs_err.is_some_and(|e| e > tol) {
                r.status = "flagged".into();
            }
        }
    }
    (rows, summaries, failures)
}

fn kernel_task(ctx: &Ctx<'_>, seed: Option<u64>, x0: f64) -> KernelEntry {
    let exp = ctx.exp;
    let mode = exp.mode;
    let params = match study_params(exp, seed) {
        Ok(p) => p,
        Err(e) => {
            let rows = exp
                .n
                .iter()
                .flat_map(|&n| exp.grid.iter().map(move |&ab| (n, ab)))
                .map(|(n, ab)| ctx.error_row(seed, x0, n, ab, mode, &e))
                .collect();
            let summary = json!({ "x0": num(x0), "seed": seed, "error": e.to_string() });
            return KernelEntry { seed, x0, rows, summary, sup_final: None };
        }
    };
    let weight = match mode {
        Mode::SecondKind => weights(&params, x0, None)
            .and_then(|wb| wb.w_tilde.filter(|w| *w > 0.0).ok_or(CoreError::UndefinedSecondKindWeight { x: x0 })),
        Mode::ByN | Mode::ByDiag => study_weight(exp, &params, x0),
        _ => Ok(f64::NAN),
    };

    let mut rows = Vec::new();
    let mut sup_err = Vec::new();
    for &n in &exp.n {
        let batch: Vec<Row> =
            exp.grid
                .par_iter()
                .map(|&(a, b)| {
                    let ab = (a, b);
                    // (value, target); a missing target means the weight is unavailable.
                    let sample: Result<(Complex64, Option<Complex64>), CoreError> =
                        match (mode, &weight) {
                            (Mode::ByN | Mode::ByDiag, Ok(w)) => {
                                scaled_kernel_with_weight(&params, x0, *w, a, b, n, scale_mode(mode))
                                    .map(|s| (s.value, Some(s.target)))
                            }
                            (Mode::ByN, Err(_)) => by_n_value(&params, x0, a, b, n).map(|v| (v, None)),
                            (Mode::SecondKind, Ok(w)) => second_kind_kernel_with_weight(&params, x0, *w, a, b, n)
                                .map(|s| (s.value, Some(s.target))),
                            (Mode::Mixed, _) => mixed_symmetrized_kernel(&params, x0, a, b, n)
                                .map(|m| (m.value, Some(m.predicted_limit))),
                            (Mode::Expansion, _) => {
                                let Perturbation::RankOne { beta1 } = exp.perturbation else {
                                    unreachable!("validated");
                                };
                                let nf = n as f64;
                                perturbed_kernel_expansion(&exp.measure.params, beta1, a / nf + x0, b / nf + x0, n)
                                    .map(|(lhs, rhs)| (lhs, Some(rhs)))
                            }
                            (_, Err(e)) => Err(e.clone()),
                            _ => unreachable!("mode validated per command"),
                        };
                    match (sample, &weight) {
                        (Ok((v, Some(t))), _) => {
                            ctx.row(seed, x0, n, ab, mode, Some(v), Some(t), Some((v - t).norm()), "ok".into())
                        }
                        (Ok((v, None)), Err(e)) => {
                            ctx.row(seed, x0, n, ab, mode, Some(v), None, None, format!("error: {e}"))
                        }
                        (Ok((v, None)), Ok(_)) => ctx.row(seed, x0, n, ab, mode, Some(v), None, None, "ok".into()),
                        (Err(e), _) => ctx.error_row(seed, x0, n, ab, mode, &e),
                    }
                })
                .collect();
        let sup = batch.iter().try_fold(0.0f64, |m, r| r.abs_err.filter(|e| !e.is_nan()).map(|e| m.max(e)));
        sup_err.push(sup);
        rows.extend(batch);
    }

    let summary = kernel_summary(exp, &params, x0, seed, &weight, &sup_err);
    KernelEntry { seed, x0, rows, summary, sup_final: *sup_err.last().expect("nonempty ladder") }
}

fn by_n_value(
    params: &JacobiParameters,
    x0: f64,
    a: Complex64,
    b: Complex64,
    n: usize,
) -> Result<Complex64, CoreError> {
    let nf = n as f64;
    Ok(cdklab_core::kernel::cd_kernel(params, a / nf + x0, b / nf + x0, n, cdklab_core::kernel::KernelMethod::Sum)?
        / nf)
}

fn kernel_summary(
    exp: &Experiment,
    params: &JacobiParameters,
    x0: f64,
    seed: Option<u64>,
    weight: &Result<f64, CoreError>,
    sup_err: &[Option<f64>],
) -> Value {
    let mut s = json!({
        "x0": num(x0),
        "seed": seed,
        "n": exp.n,
        "sup_err": sup_err.iter().map(|e| opt_num(*e)).collect::<Vec<_>>(),
    });
    match weight {
        Ok(w) if w.is_finite() => s["weight"] = num(*w),
        Ok(_) => {}
        Err(e) => s["weight_error"] = json!(e.to_string()),
    }
    match diagonal_trace(params, x0, &exp.n) {
        Ok(trace) => {
            if let Ok(w) = weight {
                if w.is_finite() && exp.mode != Mode::SecondKind {
                    let rho: Vec<Value> = trace.iter().zip(&exp.n).map(|(k, &n)| num(k * w / n as f64)).collect();
                    s["rho_hat"] = json!(rho);
                }
            }
            let n_max = *exp.n.last().expect("nonempty ladder");
            let doubled = diagonal_kernel(params, x0, 2 * n_max).ok();
            let verdict = doubled
                .map(|k2| point_mass_verdict(*trace.last().expect("nonempty"), k2))
                .unwrap_or(PointMassVerdict::Inconclusive);
            s["diag_trace"] = json!(trace.iter().map(|k| num(*k)).collect::<Vec<_>>());
            s["diag_doubled"] = opt_num(doubled);
            s["point_mass_verdict"] = json!(verdict.name());
            if let PointMassVerdict::Saturates(v) = verdict {
                s["saturation_value"] = num(v);
            }
        }
        Err(e) => s["diag_error"] = json!(e.to_string()),
    }
    if exp.mode == Mode::SecondKind {
        if let Ok(w_tilde) = weight {
            let rho: Vec<Value> = exp
                .n
                .iter()
                .map(|&n| {
                    let q = cdklab_core::jacobi::eval_pq_real(params, x0, n)
                        .map(|(_, q)| q.iter().map(|v| v * v).sum::<f64>());
                    opt_num(q.ok().map(|k| k * w_tilde / n as f64))
                })
                .collect();
            s["rho_hat_second_kind"] = json!(rho);
            s["weight_second_kind"] = num(*w_tilde);
            if let Ok(wb) = weights(params, x0, None) {
                let first: Vec<Value> = exp
                    .n
                    .iter()
                    .map(|&n| opt_num(diagonal_kernel(params, x0, n).ok().map(|k| k * wb.w / n as f64)))
                    .collect();
                s["rho_hat"] = json!(first);
                s["weight"] = num(wb.w);
            }
        }
    }
    s
}

fn stieltjes_run(ctx: &Ctx<'_>) -> Outcome {
    let exp = ctx.exp;
    let zero = (c(0.0), c(0.0));
    let params = match study_params(exp, exp.seeds.first().copied()) {
        Ok(p) => p,
        Err(e) => {
            let rows = exp.x0.iter().map(|&x| ctx.error_row(None, x, 0, zero, Mode::Boundary, &e)).collect();
            return (rows, Vec::new(), Vec::new());
        }
    };
    let seed = exp.seeds.first().copied();
    let results: Vec<(Vec<Row>, Value)> = exp
        .x0
        .par_iter()
        .map(|&x0| {
            let mut rows = Vec::new();
            let bv = boundary_f(&params, x0);
            let status = if bv.converged { "ok".to_string() } else { "error: boundary value did not converge".into() };
            rows.push(ctx.row(seed, x0, 0, zero, Mode::Boundary, Some(bv.f), None, Some(bv.err_estimate), status));
            let beta1 = match exp.perturbation {
                Perturbation::RankOne { beta1 } => Some(beta1),
                _ => None,
            };
            let mut s = json!({
                "x0": num(x0),
                "f": cnum(bv.f),
                "err_estimate": num(bv.err_estimate),
                "converged": bv.converged,
            });
            match weights_from_boundary(&bv, None) {
                Ok(wb) => {
                    s["w"] = num(wb.w);
                    s["w_tilde"] = opt_num(wb.w_tilde);
                }
                Err(e) => s["weight_error"] = json!(e.to_string()),
            }
            if let Some(b1) = beta1 {
                if let Ok(wb) = weights(&exp.measure.params, x0, Some(b1)) {
                    s["w_beta"] = opt_num(wb.w_beta);
                }
            }
            for &n in &exp.n {
                rows.push(match wronskian(&params, x0, n) {
                    Ok(w) => ctx.row(
                        seed,
                        x0,
                        n,
                        zero,
                        Mode::Wronskian,
                        Some(c(w)),
                        Some(c(1.0)),
                        Some((w - 1.0).abs()),
                        "ok".into(),
                    ),
                    Err(e) => ctx.error_row(seed, x0, n, zero, Mode::Wronskian, &e),
                });
            }
            (rows, s)
        })
        .collect();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (r, s) in results {
        if let Some(tol) = exp.tolerance {
            for row in r.iter().filter(|row| row.mode == Mode::Wronskian.name()) {
                if !row.abs_err.is_some_and(|e| e <= tol) {
                    failures.push(format!("x0={} n={}: Wronskian defect exceeds {tol:e}", row.x0, row.n));
                }
            }
        }
        rows.extend(r);
        entries.push(s);
    }
    (rows, entries, failures)
}

/// `a_n (q_n p_{n-1} - p_n q_{n-1})`.
fn wronskian(params: &JacobiParameters, x: f64, n: usize) -> Result<f64, CoreError> {
    let mut p = Stepper::first_kind(params, x);
    let mut q = Stepper::second_kind(params, x);
    for _ in 0..n {
        p.step()?;
        q.step()?;
    }
    Ok(q.value() * p.lagged() - p.value() * q.lagged())
}

fn eigenvalue_run(ctx: &Ctx<'_>) -> Outcome {
    let exp = ctx.exp;
    let base = &exp.measure.params;
    let beta1 = match exp.perturbation {
        Perturbation::RankOne { beta1 } => beta1,
        _ => unreachable!("validated"),
    };
    let (slo, shi) = base.essential_spectrum();
    let reach = beta1.abs() + 2.0 * base.sup_bound() + 1.0;
    let brackets = match exp.bracket {
        Some(b) => vec![b],
        None => {
            let gap = 1e-12 * (1.0 + shi.abs().max(slo.abs()));
            vec![(slo - reach, slo - gap), (shi + gap, shi + reach)]
        }
    };
    let perturbed = apply(base, &PerturbationSpec::RankOne { beta1 });
    let zero = (c(0.0), c(0.0));
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (lo, hi) in brackets {
        match eigenvalue_and_mass(base, beta1, (lo, hi)) {
            Ok(Some(pm)) => {
                let norm =
                    perturbed.as_ref().map_err(Clone::clone).and_then(|p| eigenvector_norm_sq(p, pm.energy, 1 << 20));
                let (target, err, status) = match &norm {
                    Ok(s) => (Some(c(1.0 / s)), Some((pm.mass - 1.0 / s).abs()), "ok".to_string()),
                    Err(e) => (None, None, format!("error: {e}")),
                };
                if let Some(tol) = exp.tolerance {
                    if !err.is_some_and(|e| e <= tol) {
                        failures.push(format!("eigenvalue {}: mass cross-check exceeds {tol:e}", pm.energy));
                    }
                }
                rows.push(ctx.row(None, pm.energy, 0, zero, Mode::Eigenvalue, Some(c(pm.mass)), target, err, status));
                entries.push(json!({
                    "bracket": [num(lo), num(hi)],
                    "energy": num(pm.energy),
                    "mass": num(pm.mass),
                    "residual": num(pm.residual),
                    "eigenvector_norm_sq": opt_num(norm.ok()),
                }));
            }
            Ok(None) => entries.push(json!({ "bracket": [num(lo), num(hi)], "energy": Value::Null })),
            Err(e) => {
                entries.push(json!({ "bracket": [num(lo), num(hi)], "error": e.to_string() }));
                if exp.tolerance.is_some() {
                    failures.push(format!("bracket [{lo}, {hi}]: {e}"));
                }
            }
        }
    }
    (rows, entries, failures)
}

fn identity_run(ctx: &Ctx<'_>) -> Outcome {
    let exp = ctx.exp;
    let (rho, a, b) = (exp.rho.expect("validated"), exp.a.expect("validated"), exp.b.expect("validated"));
    let tol = exp.tolerance.unwrap_or(exp.quad_tol);
    match sinc_identity_check(rho, a, b, exp.quad_tol) {
        Ok(r) => {
            let status = if r.max_dev <= tol { "ok" } else { "fail" };
            let row = ctx.row(
                None,
                0.0,
                0,
                (a, b),
                Mode::Identity,
                Some(r.lhs),
                Some(-r.rhs),
                Some(r.max_dev),
                status.into(),
            );
            let third = exponential_form(rho, a, b, exp.quad_tol);
            let summary = json!({
                "rho": num(rho),
                "a": cnum(a),
                "b": cnum(b),
                "quad_tol": num(exp.quad_tol),
                "lhs": cnum(r.lhs),
                "rhs": cnum(r.rhs),
                "max_dev": num(r.max_dev),
                "radius": num(r.radius),
                "lhs_error": num(r.lhs_error),
                "rhs_error": num(r.rhs_error),
                "exponential_form": third.as_ref().map(|v| cnum(*v)).unwrap_or(Value::Null),
            });
            let failures = if r.max_dev <= tol {
                Vec::new()
            } else {
                vec![format!("|lhs + rhs| = {:e} exceeds {tol:e}", r.max_dev)]
            };
            (vec![row], vec![summary], failures)
        }
        Err(e) => {
            let row = ctx.error_row(None, 0.0, 0, (a, b), Mode::Identity, &e);
            (vec![row], vec![json!({ "error": e.to_string() })], vec![e.to_string()])
        }
    }
}

fn varpar_run(ctx: &Ctx<'_>) -> Outcome {
    let exp = ctx.exp;
    let zero = (c(0.0), c(0.0));
    let tasks: Vec<(Option<u64>, f64, usize)> = seeds(exp)
        .into_iter()
        .flat_map(|s| exp.x0.iter().flat_map(move |&x| exp.n.iter().map(move |&n| (s, x, n))))
        .collect();
    let results: Vec<(Row, Value)> = tasks
        .par_iter()
        .map(|&(seed, x0, n)| {
            let spec = perturbation_spec(&exp.perturbation, seed).expect("validated");
            match variation_of_parameters(&exp.measure.params, &spec, x0, n) {
                Ok(t) => {
                    let (u, v) = (t.u[n - 1], t.v[n - 1]);
                    let converged = t.converged_u && t.converged_v;
                    let inc = t.last_increment_u.max(t.last_increment_v);
                    let row = ctx.row(
                        seed,
                        x0,
                        n,
                        zero,
                        Mode::Varpar,
                        Some(Complex64::new(u[0], u[1])),
                        Some(Complex64::new(v[0], v[1])),
                        Some(inc),
                        if converged { "ok".into() } else { "not_converged".into() },
                    );
                    let s = json!({
                        "x0": num(x0),
                        "seed": seed,
                        "n": n,
                        "u": [num(u[0]), num(u[1])],
                        "v": [num(v[0]), num(v[1])],
                        "converged_u": t.converged_u,
                        "converged_v": t.converged_v,
                        "last_increment_u": num(t.last_increment_u),
                        "last_increment_v": num(t.last_increment_v),
                        "max_residual": num(t.max_residual),
                    });
                    (row, s)
                }
                Err(e) => (
                    ctx.error_row(seed, x0, n, zero, Mode::Varpar, &e),
                    json!({ "x0": num(x0), "n": n, "error": e.to_string() }),
                ),
            }
        })
        .collect();
    let mut failures = Vec::new();
    if let Some(tol) = exp.tolerance {
        for (row, _) in &results {
            if !row.abs_err.is_some_and(|e| e <= tol) {
                failures.push(format!("x0={} n={}: coefficient increments exceed {tol:e}", row.x0, row.n));
            }
        }
    }
    let (rows, entries) = results.into_iter().unzip();
    (rows, entries, failures)
}

fn l2_summary(exp: &Experiment) -> Value {
    let Perturbation::Random { amplitude, exponent, .. } = exp.perturbation else {
        return Value::Null;
    };
    let variance = move |k: usize| amplitude * amplitude * (k as f64).powf(-2.0 * exponent);
    let entries: Vec<Value> = exp
        .x0
        .iter()
        .map(|&x0| match l2_condition_partial(&exp.measure.params, x0, variance, exp.l2_n, exp.l2_rel_tol) {
            Ok(l2) => json!({
                "x0": num(x0),
                "n": l2.n,
                "s_n": num(l2.s_n),
                "s_2n": num(l2.s_2n),
                "increment": num(l2.increment),
                "ratio": num(l2.increment / l2.s_n),
                "rel_tol": num(exp.l2_rel_tol),
                "bounded": l2.bounded,
            }),
            Err(e) => json!({ "x0": num(x0), "error": e.to_string() }),
        })
        .collect();
    json!(entries)
}
