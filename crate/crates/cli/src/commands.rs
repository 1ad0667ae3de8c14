//! The five experiment commands. Each reads its keys from the config and
//! returns a [`Report`].

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::RngCore;
use tracespace::dyadic::WeightAlpha;
use tracespace::instances::{rng, InstanceModel};
use tracespace::interpolation::{
    certify_besov_interpolation, certify_seq_interpolation, k_curve, theta_r_norm_with, BesovForm,
    BesovInterpolation, CertReport, CurveOptions, Envelope, Instance, LatticeCouple, SeqInterpolation,
    STABILITY_FACTOR,
};
use tracespace::norms::{besov_seq_norm, f_seq_norm, fqLpr_norm, lambda_s_lorentz_fast};
use tracespace::par::par_map;
use tracespace::textio::{parse_coeff_seq, parse_flat_seq};
use tracespace::trace_ext::{ext_coefficients, ext_function, trace_function, ExtensionSetup};
use tracespace::wavelets::{build_system, GridSpec};
use tracespace::{CoeffSeq, FlatSeq, SpaceParams};

use crate::config::Config;
use crate::report::{num, Report};

fn model(cfg: &Config) -> Result<InstanceModel> {
    let d = InstanceModel::default();
    let m = InstanceModel {
        window: cfg.get("window", d.window)?,
        max_slots: cfg.get("max_slots", d.max_slots)?,
        density: cfg.get("density", d.density)?,
        log2_min: cfg.get("log2_min", d.log2_min)?,
        log2_max: cfg.get("log2_max", d.log2_max)?,
    };
    if m.window < 1 || !(m.density > 0.0 && m.density <= 1.0) || !(m.log2_min <= m.log2_max) {
        bail!("instance model needs window >= 1, density in (0, 1] and log2_min <= log2_max");
    }
    Ok(m)
}

/// `(J, instance seed)` pairs: `count` per `J`, drawn from the base seed.
fn instance_seeds(base: u64, js: (u32, u32), count: usize) -> Vec<(u32, u64)> {
    let mut g = rng(base);
    (js.0..=js.1)
        .flat_map(|j| (0..count).map(move |_| j))
        .map(|j| (j, g.next_u64()))
        .collect()
}

fn curve_options(cfg: &Config) -> Result<CurveOptions> {
    let d = CurveOptions::default();
    Ok(CurveOptions {
        points_per_octave: cfg.get("points_per_octave", d.points_per_octave)?,
        tail_tol: cfg.positive("tail_tol", d.tail_tol)?,
        ..d
    })
}

fn read_input(path: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading coefficients from {path}"))
}

pub fn norm(cfg: &Config, seed: u64) -> Result<Report> {
    let which = cfg.string("norm").unwrap_or_else(|| "besov".into());
    let (s, p, q) = (cfg.get("s", 1.0)?, cfg.get("p", 2.0)?, cfg.get("q", 2.0)?);
    let r = cfg.get("r", p)?;
    let alpha = cfg.get("alpha", 0.0)?;
    let input = cfg.string("input");
    let (d, j, count) = (cfg.get("d", 1usize)?, cfg.get("j", 4u32)?, cfg.get("instances", 1usize)?);
    let m = model(cfg)?;
    let flat = match which.as_str() {
        "besov" | "lambda" => false,
        "f" | "fqlpr" => true,
        other => bail!("unknown norm '{other}' (expected besov, lambda, f or fqlpr)"),
    };
    let eval_coeff = |lam: &CoeffSeq| -> Result<f64> {
        Ok(match which.as_str() {
            "besov" => besov_seq_norm(lam, s, p, q)?,
            _ => lambda_s_lorentz_fast(lam, s, p, r, alpha)?,
        })
    };
    let eval_flat = |lam: &FlatSeq| -> Result<f64> {
        let w = WeightAlpha::new(alpha)?;
        Ok(match which.as_str() {
            "f" => f_seq_norm(lam, p, q, &w)?,
            _ => fqLpr_norm(lam, p, r, q, &w)?,
        })
    };
    let mut rep = Report::new(&["source", "J", "norm", "s", "p", "q", "r", "alpha", "value"]);
    let push = |rep: &mut Report, source: String, j: u32, v: f64| {
        rep.row(vec![source, j.to_string(), which.clone(), num(s), num(p), num(q), num(r), num(alpha), num(v)]);
    };
    match input {
        Some(path) => {
            let text = read_input(&path)?;
            if flat {
                let lam = parse_flat_seq(&text).with_context(|| path.clone())?;
                let v = eval_flat(&lam)?;
                push(&mut rep, path, lam.max_j().unwrap_or(0), v);
            } else {
                let lam = parse_coeff_seq(&text).with_context(|| path.clone())?;
                let v = eval_coeff(&lam)?;
                push(&mut rep, path, lam.j_max(), v);
            }
        }
        None => {
            for (j, sd) in instance_seeds(seed, (j, j), count) {
                let v = if flat {
                    eval_flat(&m.flat_seq(&mut rng(sd), d, j))?
                } else {
                    eval_coeff(&m.coeff_seq(&mut rng(sd), d, j))?
                };
                push(&mut rep, sd.to_string(), j, v);
            }
        }
    }
    Ok(rep)
}

/// Config for the Besov couple: `form = trace` (needs `alpha, n, k`) or
/// `form = boundary` (needs `alpha, d`).
fn besov_config(cfg: &Config) -> Result<(BesovInterpolation, usize)> {
    let alpha = cfg.get("alpha", 0.0)?;
    let (form, d) = match cfg.string("form").as_deref().unwrap_or("trace") {
        "trace" => {
            let (n, k) = (cfg.get("n", 2usize)?, cfg.get("k", 1usize)?);
            if k < 1 || k >= n {
                bail!("codimension must satisfy 1 <= k <= n - 1, got k = {k}, n = {n}");
            }
            (BesovForm::Trace { alpha, n, k }, n - k)
        }
        "boundary" => (BesovForm::Boundary { alpha }, cfg.get("d", 1usize)?),
        other => bail!("unknown form '{other}' (expected trace or boundary)"),
    };
    let c = BesovInterpolation {
        s: cfg.get("s", 3.0)?,
        p1: cfg.get("p1", 1.0)?,
        p2: cfg.get("p2", 2.0)?,
        theta: cfg.get("theta", 0.5)?,
        r: cfg.get("r", 1.0)?,
        form,
    };
    c.validate()?;
    Ok((c, d))
}

fn seq_config(cfg: &Config) -> Result<SeqInterpolation> {
    let c = SeqInterpolation {
        p1: cfg.get("p1", 1.0)?,
        p2: cfg.get("p2", 2.0)?,
        theta: cfg.get("theta", 0.5)?,
        r: cfg.get("r", 1.0)?,
        q: cfg.get("q", 1.0)?,
        alpha: cfg.get("alpha", 0.0)?,
    };
    c.validate()?;
    Ok(c)
}

pub fn kcurve(cfg: &Config, seed: u64) -> Result<Report> {
    let input = cfg.string("input");
    let j = cfg.get("j", 4u32)?;
    let m = model(cfg)?;
    let opts = curve_options(cfg)?;
    let shape_tol = cfg.positive("shape_tol", 1e-10)?;
    let (couple, a, j) = match cfg.string("couple").as_deref().unwrap_or("f") {
        "f" => {
            let c = seq_config(cfg)?;
            let d = cfg.get("d", 1usize)?;
            let lam = match &input {
                Some(path) => parse_flat_seq(&read_input(path)?).with_context(|| path.clone())?,
                None => m.flat_seq(&mut rng(seed), d, j),
            };
            let (couple, a) = LatticeCouple::f_couple(&lam, c.p1, c.p2, c.q, &WeightAlpha::new(c.alpha)?)?;
            (couple, a, lam.max_j().unwrap_or(0))
        }
        "besov" => {
            let (c, d) = besov_config(cfg)?;
            let lam = match &input {
                Some(path) => parse_coeff_seq(&read_input(path)?).with_context(|| path.clone())?,
                None => m.coeff_seq(&mut rng(seed), d, j),
            };
            let e = |p: f64| (c.endpoint_smoothness(p), p, p);
            let (couple, a) = LatticeCouple::besov_couple(&lam, e(c.p1), e(c.p2))?;
            (couple, a, lam.j_max())
        }
        other => bail!("unknown couple '{other}' (expected f or besov)"),
    };
    let curve = k_curve(&a, &couple, &opts)?;
    let mut rep = Report::new(&["t", "K"]);
    for (t, k) in curve.t.iter().zip(&curve.k) {
        rep.row(vec![num(*t), num(*k)]);
    }
    rep.note(format!(
        "source={} J={j} couple=({}, {}) N1={} N2={} max_gap={}",
        input.unwrap_or_else(|| seed.to_string()),
        couple.labels.0,
        couple.labels.1,
        num(curve.n1),
        num(curve.n2),
        num(curve.gap)
    ));
    let v = curve.shape_violation();
    rep.verdict("shape", v <= shape_tol, format!("violation {} (tolerance {})", num(v), num(shape_tol)));
    Ok(rep)
}

/// Width growth check between the coarsest and the finest `J`.
fn stability(rep: &mut Report, label: &str, envs: &[Envelope], factor: f64) {
    rep.envelopes(label, envs);
    if let (Some(a), Some(b)) = (envs.first(), envs.last()) {
        let ok = b.width <= factor * a.width;
        rep.verdict(
            &format!("{label} stability"),
            ok,
            format!(
                "width J={} {} vs J={} {} (allowed factor {})",
                b.j_max,
                num(b.width),
                a.j_max,
                num(a.width),
                num(factor)
            ),
        );
    }
}

fn dump_curves(dir: &Path, items: &[(u64, LatticeCouple, Vec<f64>)], opts: &CurveOptions) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let curves = par_map(items, |(_, c, a)| k_curve(a, c, opts))?;
    for ((seed, _, _), curve) in items.iter().zip(curves) {
        let path = dir.join(format!("kcurve_{seed}.txt"));
        std::fs::write(&path, curve.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn push_cert_rows(rep: &mut Report, experiment: &str, params: &[f64], cert: &CertReport) {
    for r in &cert.rows {
        let mut cells = vec![experiment.to_string(), r.seed.to_string(), r.j_max.to_string()];
        cells.extend(params.iter().map(|v| num(*v)));
        cells.extend([num(r.lhs), num(r.rhs), num(r.ratio), num(r.gap)]);
        rep.row(cells);
    }
}

pub fn interp_check(cfg: &Config, seed: u64) -> Result<Report> {
    let space = cfg.string("space").unwrap_or_else(|| "seq".into());
    let js = cfg.range("j", 2, 6)?;
    let count = cfg.get("instances", 10usize)?;
    let factor = cfg.positive("stability_factor", STABILITY_FACTOR)?;
    let opts = curve_options(cfg)?;
    let dump = cfg.string("kcurve_dir");
    let m = model(cfg)?;
    let seeds = instance_seeds(seed, js, count);
    let tail = ["lhs", "rhs", "ratio", "optimality_gap"];
    match space.as_str() {
        "seq" => {
            let c = seq_config(cfg)?;
            let d = cfg.get("d", 1usize)?;
            let instances: Vec<Instance<FlatSeq>> = seeds
                .iter()
                .map(|&(j, sd)| Instance { seed: sd, j_max: j, seq: m.flat_seq(&mut rng(sd), d, j) })
                .collect();
            let cert = certify_seq_interpolation(&c, &instances, &opts)?;
            let mut cols = vec!["experiment", "seed", "J", "p1", "p2", "theta", "r", "q", "alpha"];
            cols.extend(tail);
            let mut rep = Report::new(&cols);
            push_cert_rows(&mut rep, "seq", &[c.p1, c.p2, c.theta, c.r, c.q, c.alpha], &cert);
            stability(&mut rep, "seq", &cert.envelopes, factor);
            rep.note(format!("seq max_gap={}", num(cert.max_gap())));
            if let Some(dir) = dump {
                let w = WeightAlpha::new(c.alpha)?;
                let items = instances
                    .iter()
                    .map(|i| {
                        let (couple, a) = LatticeCouple::f_couple(&i.seq, c.p1, c.p2, c.q, &w)?;
                        Ok((i.seed, couple, a))
                    })
                    .collect::<Result<Vec<_>>>()?;
                dump_curves(Path::new(&dir), &items, &opts)?;
            }
            Ok(rep)
        }
        "besov" => {
            let (c, d) = besov_config(cfg)?;
            let instances: Vec<Instance<CoeffSeq>> = seeds
                .iter()
                .map(|&(j, sd)| Instance { seed: sd, j_max: j, seq: m.coeff_seq(&mut rng(sd), d, j) })
                .collect();
            let oracle_tol = cfg.positive("oracle_tol", tracespace::interpolation::ORACLE_TOL)?;
            let res = certify_besov_interpolation(&c, &instances, &opts)?;
            let (alpha, n, k) = match c.form {
                BesovForm::Trace { alpha, n, k } => (alpha, n as f64, k as f64),
                BesovForm::Boundary { alpha } => (alpha, d as f64 + 1.0, 1.0),
            };
            let mut cols = vec!["experiment", "seed", "J", "s", "p1", "p2", "theta", "r", "alpha", "n", "k"];
            cols.extend(tail);
            let mut rep = Report::new(&cols);
            let params = [c.s, c.p1, c.p2, c.theta, c.r, alpha, n, k];
            push_cert_rows(&mut rep, "besov", &params, &res.main);
            if let Some(diag) = &res.diagonal {
                push_cert_rows(&mut rep, "besov-diagonal", &params, diag);
            }
            rep.note(format!("p={} (1/p = (1-theta)/p1 + theta/p2)", num(c.p())));
            stability(&mut rep, "besov", &res.main.envelopes, factor);
            if let Some(diag) = &res.diagonal {
                stability(&mut rep, "besov-diagonal", &diag.envelopes, factor);
            }
            rep.verdict(
                "lorentz oracle",
                res.oracle_max_rel_diff <= oracle_tol,
                format!("max rel diff {} (tolerance {})", num(res.oracle_max_rel_diff), num(oracle_tol)),
            );
            rep.note(format!("besov max_gap={}", num(res.main.max_gap())));
            if let Some(dir) = dump {
                let e = |p: f64| (c.endpoint_smoothness(p), p, p);
                let items = instances
                    .iter()
                    .map(|i| {
                        let (couple, a) = LatticeCouple::besov_couple(&i.seq, e(c.p1), e(c.p2))?;
                        Ok((i.seed, couple, a))
                    })
                    .collect::<Result<Vec<_>>>()?;
                dump_curves(Path::new(&dir), &items, &opts)?;
            }
            Ok(rep)
        }
        "diagonal" => diagonal_check(cfg, &m, &seeds, &opts, dump.as_deref()),
        other => bail!("unknown space '{other}' (expected seq, besov or diagonal)"),
    }
}

/// `(A, A)_{theta,r} = (theta (1 - theta) r)^{-1/r} A` with
/// `A = f_{p,q}(w_alpha)`.
fn diagonal_check(
    cfg: &Config,
    m: &InstanceModel,
    seeds: &[(u32, u64)],
    opts: &CurveOptions,
    dump: Option<&str>,
) -> Result<Report> {
    let (p, q, alpha) = (cfg.get("p", 2.0)?, cfg.get("q", 2.0)?, cfg.get("alpha", 0.0)?);
    let (theta, r) = (cfg.get("theta", 0.5)?, cfg.get("r", 1.0)?);
    let d = cfg.get("d", 1usize)?;
    let tol = cfg.positive("diagonal_tol", 1e-6)?;
    if !(theta > 0.0 && theta < 1.0) {
        bail!("theta = {theta} must lie in (0, 1)");
    }
    let w = WeightAlpha::new(alpha)?;
    let c = if r == f64::INFINITY { 1.0 } else { (theta * (1.0 - theta) * r).powf(-1.0 / r) };
    let items = seeds
        .iter()
        .map(|&(j, sd)| {
            let lam = m.flat_seq(&mut rng(sd), d, j);
            let (fc, a) = LatticeCouple::f_couple(&lam, p, p, q, &w)?;
            Ok((sd, LatticeCouple::diagonal(fc.n1.clone(), &fc.labels.0), a))
        })
        .collect::<Result<Vec<_>>>()?;
    let evals = par_map(&items, |(_, couple, a)| {
        let v = theta_r_norm_with(a, couple, theta, r, opts)?;
        Ok::<_, anyhow::Error>((v.value, couple.n1.norm(a), v.gap))
    })?;
    let mut rep = Report::new(&[
        "experiment", "seed", "J", "p", "q", "theta", "r", "alpha", "lhs", "rhs", "ratio", "optimality_gap",
    ]);
    let mut worst: f64 = 0.0;
    for (&(j, sd), (lhs, rhs, gap)) in seeds.iter().zip(evals) {
        let ratio = lhs / rhs;
        worst = worst.max((ratio - c).abs() / c);
        rep.row(vec![
            "diagonal".into(),
            sd.to_string(),
            j.to_string(),
            num(p),
            num(q),
            num(theta),
            num(r),
            num(alpha),
            num(lhs),
            num(rhs),
            num(ratio),
            num(gap),
        ]);
    }
    rep.verdict(
        "diagonal constant",
        worst <= tol,
        format!("ratio vs {} max rel diff {} (tolerance {})", num(c), num(worst), num(tol)),
    );
    if let Some(dir) = dump {
        dump_curves(Path::new(dir), &items, opts)?;
    }
    Ok(rep)
}

fn space_params(cfg: &Config) -> Result<SpaceParams> {
    let p = SpaceParams::new(
        cfg.get("s", 3.0)?,
        cfg.get("p", 2.0)?,
        cfg.get("q", 2.0)?,
        cfg.get("alpha", 0.0)?,
        cfg.get("n", 2usize)?,
        cfg.get("k", 1usize)?,
    );
    p.check_trace_admissible()?;
    Ok(p)
}

fn param_cells(seed: u64, j: u32, p: &SpaceParams) -> Vec<String> {
    vec![seed.to_string(), j.to_string(), num(p.s), num(p.p), num(p.q), num(p.alpha), p.k.to_string()]
}

/// Tangential grid over `[0, W + L - 1]^d` with the normal axes cut at 0.
fn slice_grid(d: usize, k: usize, g: u32, extent: i64) -> Result<GridSpec> {
    let lo = vec![0; d + k];
    let mut len = vec![(extent << g) as usize + 1; d];
    len.extend(std::iter::repeat(1).take(k));
    Ok(GridSpec::new(g, lo, len)?)
}

pub fn trace_ext_check(cfg: &Config, seed: u64) -> Result<Report> {
    let params = space_params(cfg)?;
    let js = cfg.range("j", 2, 8)?;
    let count = cfg.get("instances", 100usize)?;
    let growth = cfg.positive("growth_factor", 1.25)?;
    let rt_count = cfg.get("roundtrip_instances", 2usize)?;
    let rt_j = cfg.get("roundtrip_j_max", 3u32)?;
    let extra = cfg.get("grid_extra", 6u32)?;
    let rt_tol = cfg.positive("roundtrip_tol", 1e-6)?;
    let rt_order = cfg.get("roundtrip_order", 6u32)?;
    let setup = ExtensionSetup::new(params, cfg.get("u_floor", 2u32)?)?;
    let m = model(cfg)?;
    let d = params.n - params.k;
    let seeds = instance_seeds(seed, js, count);
    let ratios = par_map(&seeds, |&(j, sd)| setup.ext_norm_ratio(&m.coeff_seq(&mut rng(sd), d, j)))?;
    let mut rep = Report::new(&["seed", "J", "s", "p", "q", "alpha", "k", "num", "den", "ratio"]);
    for (&(j, sd), r) in seeds.iter().zip(&ratios) {
        let mut cells = param_cells(sd, j, &params);
        cells.extend([num(r.num), num(r.den), num(r.ratio)]);
        rep.row(cells);
    }
    let mut maxima = Vec::new();
    for j in js.0..=js.1 {
        let mx = seeds
            .iter()
            .zip(&ratios)
            .filter(|((jj, _), _)| *jj == j)
            .map(|(_, r)| r.ratio)
            .fold(0.0, f64::max);
        rep.note(format!("ext ratio J={j} max={}", num(mx)));
        maxima.push(mx);
    }
    if let (Some(a), Some(b)) = (maxima.first(), maxima.last()) {
        rep.verdict(
            "extension boundedness",
            *b <= growth * a,
            format!("max J={} / max J={} = {} (allowed {})", js.1, js.0, num(b / a), num(growth)),
        );
    }
    // Tr(Ext lambda) sampled on the hyperplane, then analyzed again; the
    // identity does not depend on the wavelet order, the sampling error does
    let rt_model = InstanceModel { window: 1, ..m };
    let sys = &build_system(rt_order, d)?;
    let extent = sys.filter_len();
    let mut worst: f64 = 0.0;
    for (j, sd) in instance_seeds(seed ^ 0x5452_4558, (0, rt_j), rt_count) {
        let lam = rt_model.coeff_seq(&mut rng(sd), d, j);
        let top = lam.entries().into_iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
        if top == 0.0 {
            continue;
        }
        let grid = slice_grid(d, params.k, j + extra, extent)?;
        let tr = trace_function(&ext_function(&lam, sys, &setup.chi, &grid)?, params.k)?;
        let back = sys.analyze(&tr, j, &vec![0; d], &vec![1; d])?;
        worst = worst.max(back.max_abs_diff(&lam) / top);
    }
    rep.verdict(
        "trace of extension",
        worst <= rt_tol,
        format!("max relative coefficient error {} (tolerance {})", num(worst), num(rt_tol)),
    );
    Ok(rep)
}

pub fn atoms_check(cfg: &Config, seed: u64) -> Result<Report> {
    let params = space_params(cfg)?;
    let js = cfg.range("j", 2, 8)?;
    let count = cfg.get("instances", 3usize)?;
    let setup = ExtensionSetup::new(params, cfg.get("u_floor", 2u32)?)?;
    let m = model(cfg)?;
    let d = params.n - params.k;
    let mut rep = Report::new(&[
        "seed",
        "J",
        "s",
        "p",
        "q",
        "alpha",
        "k",
        "ell",
        "j",
        "m",
        "support_ok",
        "derivative_ok",
        "moments_ok",
        "derivative_ratio",
        "moment_ratio",
    ]);
    let mut seen = BTreeSet::new();
    let mut todo = Vec::new();
    for (j, sd) in instance_seeds(seed, js, count) {
        for a in ext_coefficients(&m.coeff_seq(&mut rng(sd), d, j), &params)?.atoms() {
            if seen.insert((a.ell, a.j, a.m.clone())) {
                todo.push((j, sd, a));
            }
        }
    }
    let reports = par_map(&todo, |(_, _, a)| setup.validate(&setup.atom(a)))?;
    let mut failed = 0;
    for ((j, sd, a), r) in todo.iter().zip(&reports) {
        failed += usize::from(!r.pass());
        let mut cells = param_cells(*sd, *j, &params);
        let pos: Vec<String> = a.m.iter().map(|v| v.to_string()).collect();
        cells.extend([
            a.ell.to_string(),
            a.j.to_string(),
            pos.join(" "),
            r.support_ok.to_string(),
            r.derivative_ok.to_string(),
            r.moments_ok.map_or("n/a".into(), |b| b.to_string()),
            num(r.max_derivative_ratio),
            num(r.max_moment_ratio),
        ]);
        rep.row(cells);
    }
    rep.note(format!(
        "K_min={} L_min={} u={} b={}",
        setup.k_order, setup.l_order, setup.sys.u, setup.b
    ));
    rep.verdict("atoms", failed == 0, format!("{} distinct atoms, {failed} failed", todo.len()));
    Ok(rep)
}
