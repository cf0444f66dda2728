//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use conedex_core::index::{
    boundary_index_point, callias_index_fullrank, channel_index, free_dirac_channels, hybrid_index, indicial_flip_check,
    tf_model, ChiSpec, IndexError,
};
use conedex_core::index::channels::collect_channels;
use conedex_core::index::transition::plan_transition;
use conedex_core::indicial::{boundary_pairing, formal_nullspace, spectrum_of, IndicialFamily};
use conedex_core::model::{self, conjugate_to_b, split_end, Side, TfTheta};
use conedex_core::models;
use conedex_core::phg::{extended_union, mellin_pole_probe, CutoffSpec, IndexSet};
use conedex_core::spectral::{
    collect_sweep, kernel_fits, numerical_index, shooting_oracle, GridSpec, Prepared, TolPolicy,
    WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Criterion = (u32, &'static str, f64, fn() -> Result<Outcome, String>);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn b_spectrum_exact() -> Result<Outcome, String> {
    let p = models::model_b(0.75);
    let prep = Prepared::new(&p).map_err(err)?;
    let mut ok = true;
    let mut seen = Vec::new();
    for side in Side::ALL {
        let s = prep.spectrum(side);
        let l: Vec<f64> = s.roots.iter().map(|r| r.lambda).collect();
        ok &= l.len() == 2
            && (l[0] + 0.75).abs() <= 1e-10
            && (l[1] - 0.75).abs() <= 1e-10
            && s.roots.iter().all(|r| r.order == 1 && r.multiplicity == 1)
            && s.is_symmetric(1e-10);
        seen.push(format!("{}: {l:?}", side.name()));
    }
    Ok(outcome(ok, seen.join("; ")))
}

fn staircase() -> Result<Outcome, String> {
    let p = models::model_b(0.75);
    let alphas = [-1.0, -0.2, 0.2, 1.0];
    let grid = GridSpec::new(1200, 4.0);
    let tol = TolPolicy::default();
    let jobs: Vec<_> = alphas
        .par_iter()
        .map(|&a| rayon::join(|| numerical_index(&p, &grid, WeightSpec::hybrid(a), &tol), || shooting_oracle(&p, a)))
        .collect();
    let mut numerics = Vec::new();
    let mut shots = Vec::new();
    for (n, s) in jobs {
        numerics.push(n);
        shots.push(s.map_err(err)?);
    }
    let sweep = collect_sweep(&p, numerics);
    if let Some(e) = &sweep.error {
        return Err(err(e));
    }
    let idx: Vec<i64> = sweep.rows.iter().map(|r| r.index).collect();
    let sh: Vec<i64> = shots.iter().map(|s| s.index()).collect();
    let agree = sweep.rows.iter().zip(&shots).all(|(r, s)| !s.flagged() && (r.dim_ker, r.dim_coker) == (s.dim_ker, s.dim_coker));
    let ok = idx == [2, 0, 0, -2] && sweep.ledger_holds() && sweep.antisymmetric() && agree;
    Ok(outcome(ok, format!("indices {idx:?}, shooting {sh:?}, jumps vs ledger {:?}", sweep.jumps)))
}

fn callias_model_a() -> Result<Outcome, String> {
    let p = models::model_a(1.0);
    let rep = numerical_index(&p, &GridSpec::default(), WeightSpec::scattering(0.0), &TolPolicy::default()).map_err(err)?;
    let boundary = callias_index_fullrank(&p).map_err(err)?;
    let stable = rep.history.len() == 3 && rep.history.iter().all(|h| (h.dim_ker, h.dim_coker) == (1, 1));
    let fits = kernel_fits(&p, &rep).map_err(err)?;
    let superpoly = !fits.is_empty() && fits.iter().all(|f| f.superpolynomial);
    let ok = (rep.dim_ker, rep.dim_coker, rep.index) == (1, 1, 0) && boundary == 0 && stable && superpoly;
    Ok(outcome(
        ok,
        format!(
            "(ker, coker, index) = ({}, {}, {}), boundary sum {boundary}, refinements {:?}, superpolynomial {superpoly}",
            rep.dim_ker,
            rep.dim_coker,
            rep.index,
            rep.history.iter().map(|h| (h.grid.nodes, h.dim_ker, h.dim_coker)).collect::<Vec<_>>()
        ),
    ))
}

fn hybrid_model_c() -> Result<Outcome, String> {
    let p = models::model_c(&Default::default());
    let cases = [(0.2, 0), (-0.2, 0), (1.0, -2), (-1.0, 2)];
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(a, _)| numerical_index(&p, &GridSpec::default(), WeightSpec::hybrid(a), &TolPolicy::default()))
        .collect();
    let mut ok = true;
    let mut lines = Vec::new();
    for (&(a, d), r) in cases.iter().zip(results) {
        let num = r.map_err(err)?.index;
        let h = hybrid_index(&p, a).map_err(err)?;
        ok &= (h.boundary, h.defect, h.total) == (0, d, d) && num == h.total;
        lines.push(format!("α={a}: {{{}, {}, {}}} vs {num}", h.boundary, h.defect, h.total));
    }
    Ok(outcome(ok, lines.join("; ")))
}

fn nullspace_order() -> Result<Outcome, String> {
    let p = models::model_b(0.75);
    let rep = numerical_index(&p, &GridSpec::default(), WeightSpec::hybrid(-1.0), &TolPolicy::default()).map_err(err)?;
    let fits = kernel_fits(&p, &rep).map_err(err)?;
    let mut ok = rep.dim_ker == 2;
    let mut lines = Vec::new();
    for side in Side::ALL {
        let mut ex: Vec<(f64, u32)> = fits.iter().filter(|f| f.side == side).filter_map(|f| f.exponent.map(|z| (z, f.log_power))).collect();
        ex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let has_075 = ex.iter().any(|&(z, k)| (z - 0.75).abs() <= 0.02 * 0.75 && k == 0);
        let leading = ex.first().is_some_and(|&(z, k)| (z + 0.75).abs() <= 0.02 * 0.75 && k == 0);
        ok &= has_075 && leading;
        lines.push(format!("{}: {:?}", side.name(), ex));
    }
    Ok(outcome(ok, format!("(exponent, log power) per end {}", lines.join("; "))))
}

fn flip_identity() -> Result<Outcome, String> {
    let mut ok = true;
    let mut lines = Vec::new();
    for doc in models::CATALOG {
        let p = models::by_name(doc.name).expect("catalog name");
        for theta in [TfTheta::Rational, TfTheta::Tanh] {
            match tf_model(&p, theta) {
                Ok(m) => {
                    let f = indicial_flip_check(&m).map_err(err)?;
                    ok &= f.holds && f.diffs == [0.0, 0.0];
                    if theta == TfTheta::Rational {
                        lines.push(format!("{} exact", doc.name));
                    }
                }
                Err(IndexError::Unsupported(_)) => {
                    if theta == TfTheta::Rational {
                        lines.push(format!("{} (V0 trivial)", doc.name));
                    }
                }
                Err(e) => return Err(err(e)),
            }
        }
    }
    Ok(outcome(ok, lines.join(", ")))
}

fn transition() -> Result<Outcome, String> {
    let p = models::model_b(0.75);
    let taus = [1e-3, 1e-2, 1e-1, 0.5];
    let plan = plan_transition(&p, 1.0, &taus, ChiSpec::default(), TfTheta::Rational).map_err(err)?;
    let (grid, tol) = (GridSpec::default(), TolPolicy::default());
    let results = plan.jobs.par_iter().map(|j| j.run(&grid, &tol)).collect();
    let rep = plan.finish(results).map_err(err)?;
    let ok = rep.holds()
        && rep.deformed.iter().all(|&(_, i)| i == 0)
        && (rep.zf_index, rep.tf_total()) == (-2, 2)
        && rep.jump.below - rep.jump.above == -(rep.jump.dim_f as i64);
    Ok(outcome(
        ok,
        format!(
            "deformed {:?}, components ({}, {}), jump {} - {} vs -dim F = -{}",
            rep.deformed.iter().map(|d| d.1).collect::<Vec<_>>(),
            rep.zf_index,
            rep.tf_total(),
            rep.jump.below,
            rep.jump.above,
            rep.jump.dim_f
        ),
    ))
}

fn family(side: Side) -> IndicialFamily {
    let p = models::model_b(0.75);
    IndicialFamily::from_fragment(&conjugate_to_b(&p, &split_end(&p, side).expect("split")).expect("b-form"))
}

fn pairing() -> Result<Outcome, String> {
    let mut ok = true;
    let mut lines = Vec::new();
    for side in Side::ALL {
        let fam = family(side);
        let fu = formal_nullspace(&spectrum_of(&fam).map_err(err)?, 0.75);
        let fv = formal_nullspace(&spectrum_of(&fam.adjoint()).map_err(err)?, -0.75);
        if fu.len() != 1 || fv.len() != 1 {
            return Ok(outcome(false, format!("dim F = {}, dim F* = {}", fu.len(), fv.len())));
        }
        let vals: Vec<_> = CutoffSpec::builtins()
            .iter()
            .map(|c| boundary_pairing(&fam, &fu[0], &fv[0], c))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let spread = vals.iter().map(|v| (v.value - vals[0].value).norm()).fold(0.0, f64::max);
        let closed = vals.iter().map(|v| (v.value - v.closed_form).norm()).fold(0.0, f64::max);
        ok &= spread <= 1e-8 && closed <= 1e-8 && vals[0].value.norm() > 1e-6;
        lines.push(format!("{}: B = {:.6}, spread {spread:.1e}, vs closed form {closed:.1e}", side.name(), vals[0].value));
    }
    Ok(outcome(ok, lines.join("; ")))
}

fn random_set(rng: &mut ChaCha8Rng) -> IndexSet {
    let n = rng.gen_range(0..5);
    IndexSet::new((0..n).map(|_| (rng.gen_range(-6i32..6) as f64 * 0.25, rng.gen_range(0..3u32))))
}

fn combinatorics() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    for _ in 0..200 {
        let (e, f, g) = (random_set(&mut rng), random_set(&mut rng), random_set(&mut rng));
        let ef = extended_union(&e, &f);
        let comm = ef == extended_union(&f, &e);
        let assoc = extended_union(&ef, &g) == extended_union(&e, &extended_union(&f, &g));
        let lead = match (e.leading(), f.leading()) {
            (Some((z, k)), Some((w, l))) if z == w => ef.leading() == Some((z, k + l + 1)),
            (Some(a), Some(b)) => ef.leading() == Some(if a.0 < b.0 { a } else { b }),
            (a, b) => ef.leading() == a.or(b),
        };
        // membership against the pairwise definition
        let code = |s: &IndexSet| s.entries().iter().map(|&(z, k)| ((z * 4.0).round() as i64, k)).collect::<BTreeSet<_>>();
        let mut brute = code(&e);
        brute.extend(code(&f));
        for &(z, k) in e.entries() {
            for &(w, l) in f.entries() {
                if z == w {
                    brute.insert(((z * 4.0).round() as i64, k + l + 1));
                }
            }
        }
        if !(comm && assoc && lead && code(&ef) == brute) {
            failures += 1;
        }
    }
    let mut poles = Vec::new();
    let mut pole_ok = true;
    for cutoff in CutoffSpec::builtins() {
        for k in 0..=2u32 {
            let probe = mellin_pole_probe(0.5, k, &cutoff).map_err(err)?;
            pole_ok &= probe.order == k + 1;
            poles.push(probe.order);
        }
    }
    Ok(outcome(failures == 0 && pole_ok, format!("200 triples, {failures} failures; pole orders for k = 0, 1, 2 over 3 cutoffs {poles:?}")))
}

fn channels() -> Result<Outcome, String> {
    let fam = free_dirac_channels(6, 1.0);
    let reports = fam.channels.par_iter().map(|ch| channel_index(ch, &fam)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let sum = collect_channels(reports);
    // graded count of the untwisted end value i c I on the fiber
    let end = model::EndData::new(Side::Plus, conedex_core::linalg::identity(2) * conedex_core::linalg::c(0.0, 1.0), conedex_core::linalg::CMat::zeros(2, 2));
    let boundary = boundary_index_point(&conedex_core::linalg::i_sigma2(), &end).map_err(err)?;
    let all_zero = sum.channels.iter().all(|c| c.index == 0);
    Ok(outcome(
        all_zero && sum.weighted == 0 && boundary == 0,
        format!("{} channels, indices all zero {all_zero}, weighted sum {}, boundary count {boundary}", sum.channels.len(), sum.weighted),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "b-spectrum exactness", 1.0, b_spectrum_exact),
        (2, "relative index staircase", 60.0, staircase),
        (3, "classical Callias identity", 30.0, callias_model_a),
        (4, "hybrid index formula", 120.0, hybrid_model_c),
        (5, "nullspace leading order", f64::INFINITY, nullspace_order),
        (6, "indicial flip", f64::INFINITY, flip_identity),
        (7, "transition additivity", 180.0, transition),
        (8, "boundary pairing", f64::INFINITY, pairing),
        (9, "index-set combinatorics", f64::INFINITY, combinatorics),
        (10, "free channel sanity", 120.0, channels),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match res {
            Ok(o) => (o.passed && secs < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_note = if budget.is_finite() { format!(" / {budget:.0} s") } else { String::new() };
        println!("[{}] {n:>2} {name}: {detail} ({secs:.2} s{budget_note})", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
