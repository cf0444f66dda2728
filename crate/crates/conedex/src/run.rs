//! Command implementations. Every number in a report comes from an engine call; independent jobs
//! run on the rayon pool and are merged in input order.

use conedex_core::index::{
    self, boundary_index_point, callias_index_fullrank, channel_index, free_dirac_channels, hybrid_index,
    indicial_flip_check, tf_model, ChiSpec, IndexError,
};
use conedex_core::index::transition::plan_transition;
use conedex_core::indicial;
use conedex_core::model::{self, EndData, RadialOperator, Side};
use conedex_core::models;
use conedex_core::spectral::{
    self, check_weight, collect_sweep, kernel_fits, numerical_index, shooting_oracle, IndexReport, Prepared,
    ShootingReport, SpectralError, WeightSpec,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, WeightMode, DEFAULT_KMAX};
use crate::report::{CheckOutcome, RunReport};
use crate::table::{num, Table};
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Bspec,
    Defect,
    Index,
    Sweep,
    Nullspace,
    Verify,
    Transition,
    Channels,
    Models,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bspec => "bspec",
            Command::Defect => "defect",
            Command::Index => "index",
            Command::Sweep => "sweep",
            Command::Nullspace => "nullspace",
            Command::Verify => "verify",
            Command::Transition => "transition",
            Command::Channels => "channels",
            Command::Models => "models",
        }
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    match cmd {
        Command::Bspec => bspec(cfg),
        Command::Defect => defect(cfg),
        Command::Index => index_cmd(cfg),
        Command::Sweep => sweep(cfg),
        Command::Nullspace => nullspace(cfg),
        Command::Verify => verify(cfg),
        Command::Transition => transition(cfg),
        Command::Channels => channels(cfg),
        Command::Models => Ok(catalog(cfg)),
    }
}

fn side_name(s: Side) -> &'static str {
    s.name()
}

fn require_assumptions(p: &RadialOperator) -> Result<(), RunError> {
    let v = model::validate_assumptions(p);
    if v.passed() {
        return Ok(());
    }
    let list: Vec<String> = v.failures().map(|c| format!("{:?} at {:?}", c.assumption, c.side)).collect();
    Err(RunError::Config(format!("model {} violates: {}", p.name, list.join(", "))))
}

/// Prepares the operator and checks every weight against the root margin.
fn prepare(p: &RadialOperator, alphas: &[f64]) -> Result<Prepared, RunError> {
    let prep = Prepared::new(p)?;
    for &a in alphas {
        check_weight(&prep, a)?;
    }
    Ok(prep)
}

fn natural_weights(p: &RadialOperator, alpha: f64) -> WeightSpec {
    if model::is_fully_elliptic(p) {
        WeightSpec::scattering(alpha)
    } else {
        WeightSpec::hybrid(alpha)
    }
}

fn weights(p: &RadialOperator, mode: WeightMode, alpha: f64) -> WeightSpec {
    match mode {
        WeightMode::Auto => natural_weights(p, alpha),
        WeightMode::Hybrid => WeightSpec::hybrid(alpha),
        WeightMode::Scattering => WeightSpec::scattering(alpha),
    }
}

/// Index formula for the operator: the boundary sum when fully elliptic, otherwise boundary plus
/// defect.
fn formula(p: &RadialOperator, alpha: f64) -> Result<(Value, i64), RunError> {
    if model::is_fully_elliptic(p) {
        let i = callias_index_fullrank(p)?;
        Ok((json!({"kind": "callias", "boundary": i, "defect": 0, "total": i}), i))
    } else {
        let b = hybrid_index(p, alpha)?;
        Ok((json!({"kind": "hybrid", "boundary": b.boundary, "defect": b.defect, "total": b.total}), b.total))
    }
}

fn index_json(r: &IndexReport) -> Value {
    let history: Vec<Value> = r
        .history
        .iter()
        .map(|h| {
            json!({
                "nodes": h.grid.nodes,
                "decades": h.grid.decades,
                "dim_ker": h.dim_ker,
                "dim_coker": h.dim_coker,
                "gap_ratio": h.gap_ratio,
                "coker_gap_ratio": h.coker_gap_ratio,
                "discrete_index": h.discrete_index,
                "converged": h.converged,
                "sigma_low": h.sigma_low,
                "coker_sigma_low": h.coker_sigma_low,
            })
        })
        .collect();
    json!({
        "alpha": r.weights.alpha,
        "beta": r.weights.beta,
        "dim_ker": r.dim_ker,
        "dim_coker": r.dim_coker,
        "index": r.index,
        "gap_ratio": r.gap_ratio,
        "history": history,
    })
}

fn shooting_json(s: &ShootingReport) -> Value {
    json!({
        "dim_ker": s.dim_ker,
        "dim_coker": s.dim_coker,
        "index": s.index(),
        "flagged": s.flagged(),
        "start_radius": s.primal.start_radius,
        "matching_sigmas": s.primal.sigmas,
        "adjoint_matching_sigmas": s.adjoint.sigmas,
    })
}

fn agreement(label: String, num: &IndexReport, sh: &ShootingReport) -> CheckOutcome {
    let ok = !sh.flagged() && (num.dim_ker, num.dim_coker) == (sh.dim_ker, sh.dim_coker);
    CheckOutcome::new(
        label,
        ok,
        format!("matrix ({}, {}), shooting ({}, {}){}", num.dim_ker, num.dim_coker, sh.dim_ker, sh.dim_coker, if sh.flagged() { ", shooting flagged" } else { "" }),
    )
}

fn bspec(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    let prep = Prepared::new(&p)?;
    let mut table = Table::new(&["side", "lambda", "imag", "order", "multiplicity", "nullity"]);
    let mut ends = Vec::new();
    for side in Side::ALL {
        let s = prep.spectrum(side);
        let roots: Vec<Value> = s
            .roots
            .iter()
            .map(|r| {
                table.push(vec![
                    side_name(side).into(),
                    num(r.lambda),
                    num(r.imag),
                    r.order.to_string(),
                    r.multiplicity.to_string(),
                    r.nullity().to_string(),
                ]);
                json!({"lambda": r.lambda, "imag": r.imag, "order": r.order, "multiplicity": r.multiplicity, "nullity": r.nullity()})
            })
            .collect();
        ends.push(json!({
            "side": side_name(side),
            "v0_dim": prep.split.end(side).v0.ncols(),
            "roots": roots,
            "symmetric": s.is_symmetric(1e-10),
            "nonreal": s.nonreal,
        }));
    }
    Ok(RunReport::new("bspec", cfg, json!({"model": p.name, "ends": ends}), Vec::new(), Some(table)))
}

fn defect(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    let alphas = cfg.alpha_list()?;
    let prep = prepare(&p, &alphas)?;
    let mut table = Table::new(&["alpha", "defect", "defect_at_minus_alpha"]);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut values = Vec::new();
    for &a in &alphas {
        let d = indicial::defect(&prep.spectra, a)?;
        let dm = indicial::defect(&prep.spectra, -a)?;
        checks.push(CheckOutcome::new(format!("antisymmetry at alpha={a}"), d == -dm, format!("defect {d}, at -alpha {dm}")));
        table.push(vec![num(a), d.to_string(), dm.to_string()]);
        rows.push(json!({"alpha": a, "defect": d}));
        values.push(d);
    }
    let mut jumps = Vec::new();
    for i in 1..alphas.len() {
        let ledger = spectral::ledger_between(&prep, alphas[i - 1], alphas[i])?;
        let jump = values[i] - values[i - 1];
        checks.push(CheckOutcome::new(
            format!("jump law {} -> {}", alphas[i - 1], alphas[i]),
            jump == -ledger,
            format!("defect jump {jump}, ledger {ledger}"),
        ));
        jumps.push(json!({"from": alphas[i - 1], "to": alphas[i], "jump": jump, "ledger": ledger}));
    }
    Ok(RunReport::new("defect", cfg, json!({"model": p.name, "rows": rows, "jumps": jumps}), checks, Some(table)))
}

fn index_cmd(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    require_assumptions(&p)?;
    let alpha = cfg.single_alpha()?;
    prepare(&p, &[alpha])?;
    let mode = cfg.weights.unwrap_or_default();
    let ws = weights(&p, mode, alpha);
    let (grid, tol) = (cfg.grid(), cfg.tol());
    let (num_r, sh_r) = rayon::join(|| numerical_index(&p, &grid, ws, &tol), || shooting_oracle(&p, alpha));
    let (numr, sh) = (num_r?, sh_r?);
    let mut checks = vec![agreement("matrix index equals shooting index".into(), &numr, &sh)];
    let mut results = json!({"model": p.name, "numerical": index_json(&numr), "shooting": shooting_json(&sh)});
    if ws == natural_weights(&p, alpha) {
        let (f, total) = formula(&p, alpha)?;
        checks.push(CheckOutcome::new("matrix index equals index formula", numr.index == total, format!("matrix {}, formula {total}", numr.index)));
        results["formula"] = f;
    }
    let mut table = Table::new(&["nodes", "decades", "dim_ker", "dim_coker", "gap_ratio", "coker_gap_ratio"]);
    for h in &numr.history {
        table.push(vec![
            h.grid.nodes.to_string(),
            num(h.grid.decades),
            h.dim_ker.to_string(),
            h.dim_coker.to_string(),
            num(h.gap_ratio),
            num(h.coker_gap_ratio),
        ]);
    }
    Ok(RunReport::new("index", cfg, results, checks, Some(table)))
}

fn sweep(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    require_assumptions(&p)?;
    let alphas = cfg.alpha_list()?;
    prepare(&p, &alphas)?;
    let mode = cfg.weights.unwrap_or_default();
    let (grid, tol) = (cfg.grid(), cfg.tol());
    let jobs: Vec<(Result<IndexReport, SpectralError>, Result<ShootingReport, SpectralError>)> = alphas
        .par_iter()
        .map(|&a| rayon::join(|| numerical_index(&p, &grid, weights(&p, mode, a), &tol), || shooting_oracle(&p, a)))
        .collect();
    let mut numerics = Vec::with_capacity(jobs.len());
    let mut shots = Vec::with_capacity(jobs.len());
    for (n, s) in jobs {
        numerics.push(n);
        shots.push(s?);
    }
    let sw = collect_sweep(&p, numerics.clone());
    if let Some(e) = sw.error.clone() {
        return Err(e.into());
    }
    let reports: Vec<IndexReport> = numerics.into_iter().map(|r| r.expect("sweep without error")).collect();
    let mut checks = vec![
        CheckOutcome::new("index jumps equal the relative-index ledger", sw.ledger_holds(), format!("{:?}", sw.jumps)),
        CheckOutcome::new("index is antisymmetric in alpha", sw.antisymmetric(), String::new()),
    ];
    let mut table = Table::new(&["alpha", "dim_ker", "dim_coker", "index", "shooting_index", "jump_to_next", "ledger_to_next", "gap_ratio"]);
    let mut rows = Vec::new();
    for (i, (r, sh)) in reports.iter().zip(&shots).enumerate() {
        checks.push(agreement(format!("matrix equals shooting at alpha={}", alphas[i]), r, sh));
        let (jump, ledger) = sw.jumps.get(i).map_or((String::new(), String::new()), |(j, l)| (j.to_string(), l.to_string()));
        table.push(vec![
            num(alphas[i]),
            r.dim_ker.to_string(),
            r.dim_coker.to_string(),
            r.index.to_string(),
            sh.index().to_string(),
            jump,
            ledger,
            num(r.gap_ratio),
        ]);
        rows.push(json!({"numerical": index_json(r), "shooting": shooting_json(sh)}));
    }
    let jumps: Vec<Value> = sw.jumps.iter().map(|(j, l)| json!({"jump": j, "ledger": l})).collect();
    Ok(RunReport::new("sweep", cfg, json!({"model": p.name, "rows": rows, "jumps": jumps}), checks, Some(table)))
}

fn nullspace(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    require_assumptions(&p)?;
    let alpha = cfg.single_alpha()?;
    let prep = prepare(&p, &[alpha])?;
    let ws = weights(&p, cfg.weights.unwrap_or_default(), alpha);
    let rep = numerical_index(&p, &cfg.grid(), ws, &cfg.tol())?;
    let fits = kernel_fits(&p, &rep)?;
    let mut checks = Vec::new();
    let mut table = Table::new(&["side", "v0_component", "exponent", "log_power", "residual", "superpolynomial", "low_confidence", "window_inner", "window_outer"]);
    let mut out = Vec::new();
    for f in &fits {
        match (f.v0_component, f.exponent) {
            (true, Some(z)) => {
                // leading orders of kernel elements are roots above the weight
                let roots: Vec<f64> = prep.spectrum(f.side).roots.iter().map(|r| r.lambda).filter(|&r| r > alpha).collect();
                let near = roots.iter().copied().min_by(|a, b| (a - z).abs().total_cmp(&(b - z).abs()));
                let ok = near.is_some_and(|r| (r - z).abs() <= 0.02 * r.abs().max(0.05));
                checks.push(CheckOutcome::new(
                    format!("{} exponent {z:.4} is a root above alpha", side_name(f.side)),
                    ok,
                    format!("nearest root {near:?}"),
                ));
            }
            (false, _) => checks.push(CheckOutcome::new(
                format!("{} kernel decays faster than any power", side_name(f.side)),
                f.superpolynomial,
                format!("window exponents {:?}", f.window_exponents),
            )),
            (true, None) => {}
        }
        table.push(vec![
            side_name(f.side).into(),
            f.v0_component.to_string(),
            f.exponent.map_or(String::new(), num),
            f.log_power.to_string(),
            num(f.residual),
            f.superpolynomial.to_string(),
            f.low_confidence.to_string(),
            num(f.window_exponents.0),
            num(f.window_exponents.1),
        ]);
        out.push(json!({
            "side": side_name(f.side),
            "v0_component": f.v0_component,
            "exponent": f.exponent,
            "log_power": f.log_power,
            "residual": f.residual,
            "superpolynomial": f.superpolynomial,
            "low_confidence": f.low_confidence,
            "window_exponents": [f.window_exponents.0, f.window_exponents.1],
        }));
    }
    Ok(RunReport::new("nullspace", cfg, json!({"model": p.name, "numerical": index_json(&rep), "fits": out}), checks, Some(table)))
}

fn conjugated_end(end: &EndData, u: &conedex_core::linalg::CMat) -> EndData {
    EndData { phi_infinity: u * &end.phi_infinity * u.adjoint(), b_term: u * &end.b_term * u.adjoint(), ..end.clone() }
}

fn verify(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    let full = model::is_fully_elliptic(&p);
    let alphas = match cfg.alpha_list() {
        Ok(a) => a,
        Err(_) if full => vec![0.0],
        Err(e) => return Err(e),
    };
    prepare(&p, &alphas)?;
    let mut checks = Vec::new();
    let validation = model::validate_assumptions(&p);
    let failures: Vec<String> = validation.failures().map(|c| format!("{:?} at {:?}", c.assumption, c.side)).collect();
    checks.push(CheckOutcome::new("structural assumptions", validation.passed(), failures.join(", ")));
    if !validation.passed() {
        return Ok(RunReport::new("verify", cfg, json!({"model": p.name}), checks, None));
    }

    let (grid, tol) = (cfg.grid(), cfg.tol());
    let jobs: Vec<(Result<IndexReport, SpectralError>, Result<ShootingReport, SpectralError>)> = alphas
        .par_iter()
        .map(|&a| rayon::join(|| numerical_index(&p, &grid, natural_weights(&p, a), &tol), || shooting_oracle(&p, a)))
        .collect();
    let mut table = Table::new(&["alpha", "boundary", "defect", "formula", "numerical", "shooting"]);
    let mut per_alpha = Vec::new();
    for (&a, (n, s)) in alphas.iter().zip(jobs) {
        let (numr, sh) = (n?, s?);
        let (f, total) = formula(&p, a)?;
        checks.push(CheckOutcome::new(format!("index formula at alpha={a}"), numr.index == total, format!("formula {total}, matrix {}", numr.index)));
        checks.push(agreement(format!("matrix equals shooting at alpha={a}"), &numr, &sh));
        table.push(vec![
            num(a),
            f["boundary"].to_string(),
            f["defect"].to_string(),
            total.to_string(),
            numr.index.to_string(),
            sh.index().to_string(),
        ]);
        per_alpha.push(json!({"alpha": a, "formula": f, "numerical": index_json(&numr), "shooting": shooting_json(&sh)}));
    }

    // the boundary count does not see a unitary change of basis
    let u = models::random_unitary(cfg.seed(), p.dim());
    let a_u = &u * &p.clifford * u.adjoint();
    for side in Side::ALL {
        let base = boundary_index_point(&p.clifford, p.end(side))?;
        let moved = boundary_index_point(&a_u, &conjugated_end(p.end(side), &u))?;
        checks.push(CheckOutcome::new(format!("boundary count basis invariance ({})", side_name(side)), base == moved, format!("{base} vs {moved}")));
    }

    let flip = match tf_model(&p, cfg.theta()) {
        Ok(m) => {
            let f = indicial_flip_check(&m)?;
            checks.push(CheckOutcome::new("indicial flip identity", f.holds, format!("coefficient differences {:?}", f.diffs)));
            json!({"diffs": f.diffs, "holds": f.holds})
        }
        Err(IndexError::Unsupported(why)) => json!({"skipped": why}),
        Err(e) => return Err(e.into()),
    };
    let results = json!({"model": p.name, "fully_elliptic": full, "per_alpha": per_alpha, "flip": flip, "seed": cfg.seed()});
    Ok(RunReport::new("verify", cfg, results, checks, Some(table)))
}

fn transition(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let p = cfg.resolve_model()?;
    require_assumptions(&p)?;
    let alpha = cfg.single_alpha()?;
    let taus = cfg.taus();
    let plan = plan_transition(&p, alpha, &taus, ChiSpec::default(), cfg.theta())?;
    prepare(&plan.model.zf, &[alpha])?;
    let (grid, tol) = (cfg.grid(), cfg.tol());
    let results: Vec<_> = plan.jobs.par_iter().map(|j| j.run(&grid, &tol)).collect();
    let jobs: Vec<Value> = plan
        .jobs
        .iter()
        .zip(&results)
        .map(|(j, r)| {
            json!({
                "label": j.label,
                "alpha": j.weights.alpha,
                "beta": j.weights.beta,
                "index": r.as_ref().ok().map(|r| r.index),
                "gap_ratio": r.as_ref().ok().map(|r| r.gap_ratio),
            })
        })
        .collect();
    let rep = plan.finish(results)?;
    let sum = rep.zf_index + rep.tf_total();
    let mut table = Table::new(&["tau", "deformed_index", "zf_index", "tf_index_minus", "tf_index_plus", "components_sum"]);
    for &(tau, i) in &rep.deformed {
        table.push(vec![
            num(tau),
            i.to_string(),
            rep.zf_index.to_string(),
            rep.tf_index[0].to_string(),
            rep.tf_index[1].to_string(),
            sum.to_string(),
        ]);
    }
    let checks = vec![
        CheckOutcome::new("deformed index independent of tau", rep.tau_constant, format!("{:?}", rep.deformed)),
        CheckOutcome::new("deformed index equals zf plus tf indices", rep.additive, format!("zf {}, tf {:?}", rep.zf_index, rep.tf_index)),
        CheckOutcome::new("zf and tf indices cancel", rep.components_cancel, format!("sum {sum}")),
        CheckOutcome::new(
            "tf index jump across the root equals -dim F",
            rep.jump.holds,
            format!("below {}, above {}, dim F {}", rep.jump.below, rep.jump.above, rep.jump.dim_f),
        ),
        CheckOutcome::new("indicial flip identity", rep.flip.holds, format!("{:?}", rep.flip.diffs)),
    ];
    let results = json!({
        "model": p.name,
        "alpha": rep.alpha,
        "deformed": rep.deformed.iter().map(|&(t, i)| json!({"tau": t, "index": i})).collect::<Vec<_>>(),
        "zf_index": rep.zf_index,
        "tf_index": rep.tf_index,
        "jump": {"root": rep.jump.root, "eps": rep.jump.eps, "dim_f": rep.jump.dim_f, "below": rep.jump.below, "above": rep.jump.above},
        "flip": {"diffs": rep.flip.diffs, "holds": rep.flip.holds},
        "jobs": jobs,
    });
    Ok(RunReport::new("transition", cfg, results, checks, Some(table)))
}

fn channels(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let c_ = cfg.channel_c.unwrap_or(1.0);
    if !(c_.abs() > 0.0) || !c_.is_finite() {
        return Err(RunError::Config("channel potential strength must be nonzero".into()));
    }
    let mut fam = free_dirac_channels(cfg.kmax.unwrap_or(DEFAULT_KMAX), c_);
    if let Some(n) = cfg.grid_nodes {
        fam.nodes = n;
    }
    fam.gap = cfg.tol().gap;
    let reports = fam.channels.par_iter().map(|ch| channel_index(ch, &fam)).collect::<Result<Vec<_>, _>>()?;
    let sum = index::channels::collect_channels(reports);
    // the abelian potential i c tanh(r) leaves the boundary bundle untwisted
    let untwisted = 0;
    let mut table = Table::new(&["channel", "degeneracy", "dim_ker", "dim_coker", "index", "gap_ratio"]);
    for ch in &sum.channels {
        table.push(vec![
            ch.label.clone(),
            ch.degeneracy.to_string(),
            ch.dim_ker.to_string(),
            ch.dim_coker.to_string(),
            ch.index.to_string(),
            num(ch.gap_ratio),
        ]);
    }
    let checks = vec![
        CheckOutcome::new("every channel index vanishes", sum.channels.iter().all(|c| c.index == 0), String::new()),
        CheckOutcome::new("weighted channel sum equals the untwisted boundary index", sum.weighted == untwisted, format!("sum {}", sum.weighted)),
    ];
    let results = json!({
        "c": c_,
        "kmax": cfg.kmax.unwrap_or(DEFAULT_KMAX),
        "nodes": fam.nodes,
        "cutoff": fam.cutoff,
        "channels": sum.channels.iter().map(|c| json!({
            "label": c.label, "degeneracy": c.degeneracy, "dim_ker": c.dim_ker, "dim_coker": c.dim_coker,
            "index": c.index, "gap_ratio": c.gap_ratio, "admissible": c.admissible,
        })).collect::<Vec<_>>(),
        "weighted_sum": sum.weighted,
    });
    Ok(RunReport::new("channels", cfg, results, checks, Some(table)))
}

fn catalog(cfg: &ExperimentConfig) -> RunReport {
    let mut table = Table::new(&["name", "params", "summary"]);
    let mut list = Vec::new();
    for d in models::CATALOG {
        table.push(vec![d.name.into(), d.params.into(), d.summary.into()]);
        list.push(json!({"name": d.name, "params": d.params, "summary": d.summary}));
    }
    let random = ("RANDOM", "--seed", "m = 4 full-rank model with random Clifford-commuting end values, seeded");
    table.push(vec![random.0.into(), random.1.into(), random.2.into()]);
    list.push(json!({"name": random.0, "params": random.1, "summary": random.2}));
    RunReport::new("models", cfg, json!({"models": list}), Vec::new(), Some(table))
}
