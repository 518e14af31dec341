use std::path::Path;

use nalgebra::DVector;
use serde_json::json;

use symou::gramian::{self, GramianSet, GramianSummary};
use symou::linalg::{expm_scaled, spectral_norm};
use symou::mehler::{self, Method, TransitionKernel};
use symou::model::{validate_hypothesis, Example2Params};
use symou::polynomial::{ObservableDocument, Polynomial, DEFAULT_DEGREE_CAP};
use symou::presets::{self, Example2Options};
use symou::simulate::{self, StartLaw};
use symou::spaces;
use symou::symmetry::{self, ConjugatedGenerator, OperatorBundle};
use symou::{chaos, Error, ModelKind, OUModel};

use crate::output::{num, Check, Outcome, Table};

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
    pub tol: f64,
}

/// Lyapunov residual relative to `‖A‖‖Q_∞‖ + ‖Q‖`.
const LYAPUNOV_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-9;

fn model_summary(m: &OUModel) -> serde_json::Value {
    json!({
        "kind": m.kind(),
        "dim": m.dim(),
        "hash": m.hash(),
        "norm_a": m.norm_a(),
        "norm_q": m.norm_q(),
    })
}

fn start(m: &OUModel) -> Outcome {
    let mut o = Outcome {
        model_hash: Some(m.hash()),
        ..Default::default()
    };
    o.insert("model", model_summary(m));
    o
}

pub fn parse_list(s: &str) -> symou::Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("`{x}` is not a number")))
        })
        .collect()
}

fn read(path: &Path) -> symou::Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn load_observable(path: &Path, dim: usize) -> symou::Result<Polynomial> {
    let doc: ObservableDocument =
        serde_json::from_str(&read(path)?).map_err(|e| Error::Schema(e.to_string()))?;
    Polynomial::from_document(&doc, dim, DEFAULT_DEGREE_CAP)
}

/// A corpus is a list of observable documents; a single document is
/// accepted as a one-element corpus.
pub fn load_corpus(path: &Path, dim: usize) -> symou::Result<Vec<Polynomial>> {
    let text = read(path)?;
    let docs: Vec<ObservableDocument> = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(_) => vec![serde_json::from_str(&text).map_err(|e| Error::Schema(e.to_string()))?],
    };
    docs.iter()
        .map(|d| Polynomial::from_document(d, dim, DEFAULT_DEGREE_CAP))
        .collect()
}

fn bundle(m: &OUModel, g: &GramianSet, ctx: Ctx) -> symou::Result<OperatorBundle> {
    if m.kind() == ModelKind::Example2 {
        return Err(Error::InvalidArgument(
            "the Example 2 discretisation has no well-conditioned Q_∞^{1/2}; use `example2` or `gap`".into(),
        ));
    }
    OperatorBundle::new(m, g, ctx.tol)
}

fn stationary_points(m: &OUModel, g: &GramianSet, n: usize, seed: u64) -> symou::Result<Vec<DVector<f64>>> {
    let ens = simulate::simulate_paths(m, g, &StartLaw::Stationary, 1.0, 0, n, seed)?;
    Ok((0..n).map(|s| DVector::from_column_slice(ens.state(s, 0))).collect())
}

pub fn check(m: &OUModel, ctx: Ctx, expect_symmetric: bool) -> symou::Result<Outcome> {
    let mut o = start(m);
    let verdict = validate_hypothesis(m);
    o.insert("hypothesis", verdict);
    o.checks.push(Check::flag("invariant measure exists and is nondegenerate", verdict.holds));
    let sym = symmetry::check_reversibility(m, ctx.tol);
    o.checks.push(Check::flag(
        "matrix and semigroup criteria agree",
        sym.is_symmetric == sym.semigroup_symmetric,
    ));
    if expect_symmetric {
        o.checks.push(Check::flag("expected symmetric", sym.is_symmetric));
    }
    if let Some(margin) = sym.contraction_margin.filter(|_| sym.is_symmetric) {
        o.checks.push(Check::at_least("contraction margin", margin, -1e-12));
    }
    o.insert("is_symmetric", sym.is_symmetric);
    o.insert("symmetry", &sym);
    if !verdict.holds {
        return Ok(o);
    }
    let g = GramianSet::new(m)?;
    o.checks.push(Check::at_most("Lyapunov relative residual", g.relative_residual(), LYAPUNOV_TOL));
    if sym.is_symmetric {
        if m.kind() == ModelKind::Example2 {
            o.insert("spectral_gap", ConjugatedGenerator::new(m)?.gap());
        } else {
            let b = bundle(m, &g, ctx)?;
            let inv = b.invariants(&symmetry::default_grid(m));
            o.checks.push(Check::at_most("derived operator identities", inv.max_residual(), 1e-8));
            o.insert("spectral_gap", b.gap());
            o.insert("betas", b.betas());
            o.insert("operator_identities", inv);
        }
    }
    Ok(o)
}

pub fn gramian(m: &OUModel, _ctx: Ctx, times: Option<Vec<f64>>) -> symou::Result<Outcome> {
    let mut o = start(m);
    let verdict = validate_hypothesis(m);
    o.insert("hypothesis", verdict);
    o.checks.push(Check::flag("invariant measure exists and is nondegenerate", verdict.holds));
    if !verdict.holds {
        return Ok(o);
    }
    let times = times.unwrap_or_else(|| gramian::default_times(m));
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be nonnegative".into()));
    }
    let g = GramianSet::with_times(m, &times)?;
    let summary = GramianSummary::new(m, &g);
    o.checks.push(Check::at_most("Lyapunov relative residual", summary.relative_residual, LYAPUNOV_TOL));
    o.checks.push(Check::at_least("monotonicity of Q_t", summary.monotonicity_margin, -1e-12));
    o.checks.push(Check::at_most("Q_t = Q_∞ − S Q_∞ S*", summary.identity_residual, IDENTITY_TOL));
    o.checks.push(Check::at_most("ker Q_∞ ⊆ ker Q", summary.kernel_inclusion_defect, 1e-8));
    // ‖Q_t − Q_∞‖ ≤ ‖S(t)‖²‖Q_∞‖
    let qn = spectral_norm(&g.q_inf);
    let worst = g
        .times
        .iter()
        .zip(&g.q_t)
        .map(|(&t, qt)| {
            let s = spectral_norm(&expm_scaled(m.a(), t));
            (spectral_norm(&(qt - &g.q_inf)) - s * s * qn) / qn
        })
        .fold(f64::NEG_INFINITY, f64::max);
    o.checks.push(Check::at_most("‖Q_t − Q_∞‖ ≤ ‖S(t)‖²‖Q_∞‖", worst, 1e-12));
    if symmetry::check_reversibility(m, 1e-10).is_symmetric {
        let r = (m.a() * &g.q_inf + m.q() * 0.5).amax() / m.q().amax().max(f64::MIN_POSITIVE);
        o.checks.push(Check::at_most("AQ_∞ = −Q/2", r, LYAPUNOV_TOL));
    }
    o.insert("summary", &summary);
    o.insert("times", &g.times);
    if m.dim() <= 32 {
        let rows: Vec<Vec<f64>> = (0..m.dim()).map(|i| g.q_inf.row(i).iter().copied().collect()).collect();
        o.insert("q_inf", rows);
    }
    let mut t = Table::new(
        "qt_eigenvalues",
        std::iter::once("t".to_string())
            .chain((1..=m.dim()).map(|k| format!("lambda_{k}")))
            .collect(),
    );
    for (time, ev) in g.eigenvalue_table() {
        t.push(std::iter::once(num(time)).chain(ev.into_iter().map(num)).collect());
    }
    o.tables.push(t);
    Ok(o)
}

pub fn gap(m: &OUModel, ctx: Ctx, degree: usize) -> symou::Result<Outcome> {
    let mut o = start(m);
    if m.kind() == ModelKind::Example2 {
        let gen = ConjugatedGenerator::new(m)?;
        o.insert("spectral_gap", gen.gap());
        o.insert("betas_lowest", gen.eig.values.iter().take(16).collect::<Vec<_>>());
        return Ok(o);
    }
    let g = GramianSet::new(m)?;
    let b = bundle(m, &g, ctx)?;
    let spectrum = chaos::generator_spectrum(&b, degree);
    // the bottom eigenfunction is the first whitened coordinate
    let w = b.whitening();
    let phi = Polynomial::linear(w.row(0).transpose().as_slice());
    let fit = simulate::estimate_decay_rate(&b, &phi, &[0.0, 0.5, 1.0, 2.0], 1)?;
    o.checks.push(Check::at_most("decay rate of the bottom eigenfunction", (fit.rate - b.gap()).abs(), 1e-6));
    o.insert("spectral_gap", b.gap());
    o.insert("betas", b.betas());
    o.insert("generator_spectrum", spectrum.iter().take(64).collect::<Vec<_>>());
    o.insert("decay_fit", fit);
    if let Some(laws) = m.laws() {
        o.insert("analytic", spaces::analytic_predicates(&laws));
    }
    Ok(o)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    All,
    Spectral,
    GaussHermite,
    MonteCarlo,
}

pub struct MehlerArgs<'a> {
    pub observable: &'a Path,
    pub point: Option<Vec<f64>>,
    pub time: f64,
    pub method: MethodArg,
    pub nodes: usize,
    pub samples: usize,
    pub q: f64,
}

pub fn mehler(m: &OUModel, ctx: Ctx, a: MehlerArgs) -> symou::Result<Outcome> {
    let mut o = start(m);
    let d = m.dim();
    let phi = load_observable(a.observable, d)?;
    let x = a.point.unwrap_or_else(|| vec![0.0; d]);
    if x.len() != d {
        return Err(Error::Dimension(format!("point has length {}, model {d}", x.len())));
    }
    if !(a.time >= 0.0) {
        return Err(Error::InvalidArgument("time must be nonnegative".into()));
    }
    let g = GramianSet::with_times(m, &[a.time])?;
    let k = TransitionKernel::new(m, &g, a.time);
    let want = |w: MethodArg| a.method == MethodArg::All || a.method == w;
    let symmetric = symmetry::check_reversibility(m, ctx.tol).is_symmetric;
    let b = if symmetric && m.kind() != ModelKind::Example2 {
        Some(bundle(m, &g, ctx)?)
    } else {
        None
    };

    let spectral = match (&b, want(MethodArg::Spectral)) {
        (Some(b), true) => Some(mehler::rt_polynomial(&phi, b, a.time, DEFAULT_DEGREE_CAP)?.eval(&x)),
        (None, true) if a.method == MethodArg::Spectral => {
            return Err(Error::InvalidArgument("the spectral route needs a symmetric model".into()))
        }
        _ => None,
    };
    let gh = if want(MethodArg::GaussHermite) && (a.method != MethodArg::All || d <= 4) {
        Some(mehler::evaluate_rt(&k, &phi, &x, Method::GaussHermite { nodes: a.nodes })?.value)
    } else {
        None
    };
    let mc = if want(MethodArg::MonteCarlo) {
        Some(mehler::evaluate_rt(
            &k,
            &phi,
            &x,
            Method::MonteCarlo {
                samples: a.samples,
                seed: ctx.seed,
            },
        )?)
    } else {
        None
    };
    let reference = spectral.or(gh);
    if let (Some(s), Some(q)) = (spectral, gh) {
        o.checks.push(Check::at_most("quadrature against spectral", (q - s).abs(), 1e-8 * s.abs().max(1.0)));
    }
    if let (Some(r), Some(mc)) = (reference, mc) {
        let se = mc.stderr.unwrap_or(0.0);
        o.checks.push(Check::at_most("Monte Carlo within 4 standard errors", (mc.value - r).abs(), 4.0 * se));
    }
    o.insert(
        "rt",
        json!({
            "t": a.time,
            "x": x,
            "spectral": spectral,
            "gauss_hermite": gh.map(|v| json!({"value": v, "nodes": a.nodes})),
            "monte_carlo": mc.map(|e| json!({"value": e.value, "stderr": e.stderr, "samples": a.samples, "seed": ctx.seed})),
        }),
    );

    if let Some(b) = &b {
        let h = mehler::check_hypercontractivity_at(b, &phi, 2.0, a.q, DEFAULT_DEGREE_CAP, 1e-10)?;
        o.checks.push(Check::at_least("hypercontractivity margin", h.margin, -1e-12 * h.rhs.max(1.0)));
        o.checks.push(Check::at_least(
            "log-Sobolev margin minus quadrature change",
            h.lsi.margin - h.lsi.quadrature_change,
            -1e-9,
        ));
        o.insert("hypercontractivity", &h);
        let kol = mehler::kolmogorov_residual(m, b, &phi, a.time, &[DVector::from_column_slice(&x)], DEFAULT_DEGREE_CAP)?;
        o.checks.push(Check::at_most("Kolmogorov residual", kol.residual.max(kol.residual_conjugated), 1e-8));
        o.insert("kolmogorov", kol);
        if a.time > 0.0 {
            let grad = mehler::check_gradient_bound(m, &g, None, &[a.time], &[])?;
            o.checks.push(Check::flag("gradient operator bound", grad.pass));
            o.insert("gradient", grad);
        }
        let c = chaos::expand(&phi, b, DEFAULT_DEGREE_CAP)?;
        let mut t = Table::new("chaos", ["multi_index", "order", "eigenvalue", "coefficient"].map(String::from).to_vec());
        for r in c.table() {
            t.push(vec![r.index, r.order.to_string(), num(r.eigenvalue), num(r.coefficient)]);
        }
        o.tables.push(t);
    }
    Ok(o)
}

pub fn sobolev(m: &OUModel, ctx: Ctx, corpus: &Path, p: f64, points: usize) -> symou::Result<Outcome> {
    let mut o = start(m);
    let corpus = load_corpus(corpus, m.dim())?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty observable corpus".into()));
    }
    let g = GramianSet::new(m)?;
    let b = bundle(m, &g, ctx)?;
    let env = spaces::meyer_ratio(&corpus, m, &g, &b, p, DEFAULT_DEGREE_CAP)?;
    let pts = stationary_points(m, &g, points, ctx.seed)?;
    let mut t = Table::new(
        "sobolev",
        [
            "observable", "lp", "grad_q", "hess_q", "grad_aq", "w1p_q", "w2p_q", "w1p_aq", "meyer_first",
            "meyer_second", "exact", "converged",
        ]
        .map(String::from)
        .to_vec(),
    );
    let mut p2: f64 = 0.0;
    let mut pointwise = Vec::new();
    let (mut first, mut second, mut mixed): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut reports = Vec::new();
    for (i, phi) in corpus.iter().enumerate() {
        let r = spaces::sobolev_norms(phi, m, &g, &b, p, DEFAULT_DEGREE_CAP)?;
        t.push(vec![
            i.to_string(),
            num(r.lp),
            num(r.grad_q),
            num(r.hess_q),
            num(r.grad_aq),
            num(r.w1p_q),
            num(r.w2p_q),
            num(r.w1p_aq),
            num(r.meyer_ratio_first),
            num(r.meyer_ratio_second),
            r.exact.to_string(),
            r.converged.to_string(),
        ]);
        p2 = p2.max(spaces::meyer_p2_defect(phi, m, &g, &b, DEFAULT_DEGREE_CAP)?);
        let pw = spaces::pointwise_identities(m, &b, phi, &pts);
        first = first.max(pw.first_order);
        second = second.max(pw.second_order);
        mixed = mixed.max(pw.mixed);
        pointwise.push(pw);
        reports.push(r);
    }
    o.checks.push(Check::at_most("p = 2 norm identity", p2, 1e-9));
    o.checks.push(Check::at_most("pointwise first-order identity", first, 1e-9));
    o.checks.push(Check::at_most("pointwise second-order identity", second, 1e-9));
    o.checks.push(Check::at_most("pointwise mixed identity", mixed, 1e-9));
    o.checks.push(Check::flag("L^p quadrature converged", env.converged));
    o.insert("envelope", &env);
    o.insert("observables", reports);
    o.insert("pointwise", pointwise);
    o.tables.push(t);
    Ok(o)
}

pub struct SimulateArgs {
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub start: Option<Vec<f64>>,
    pub expect_symmetric: bool,
}

pub fn simulate(m: &OUModel, ctx: Ctx, a: SimulateArgs) -> symou::Result<Outcome> {
    let mut o = start(m);
    let d = m.dim();
    let g = GramianSet::with_times(m, &[a.dt])?;
    let law = match &a.start {
        Some(x) => StartLaw::Point(DVector::from_column_slice(x)),
        None => StartLaw::Stationary,
    };
    let ens = simulate::simulate_paths(m, &g, &law, a.dt, a.steps, a.samples, ctx.seed)?;
    let defect = simulate::composition_defect(m, &g, a.dt, a.steps.max(1));
    o.checks.push(Check::at_most("composed one-step moments", defect, 1e-8));
    if a.start.is_none() && a.steps >= 1 && a.samples >= 2 {
        let phi = Polynomial::from_terms(d, [(power(d, 0, 2), 1.0), (power(d, d - 1, 1), 1.0)])?;
        let mut pair = power(d, 0, 1);
        pair[d - 1] += 1;
        let psi = Polynomial::from_terms(d, [(pair, 1.0), (power(d, 0, 1), 0.5)])?;
        let db = simulate::test_detailed_balance(&ens, &phi, &psi)?;
        if a.expect_symmetric {
            o.checks.push(Check::at_most("detailed balance |z|", db.z.abs(), 4.0));
        }
        o.insert("detailed_balance", db);
        let c = ens.cross_moment(1, 0);
        let analytic = simulate::analytic_cross_covariance(m, &g, a.dt);
        o.insert(
            "lag_covariance",
            json!({
                "empirical_asymmetry": (&c - c.transpose()).amax(),
                "analytic_asymmetry": (&analytic - analytic.transpose()).amax(),
            }),
        );
    }
    o.insert(
        "ensemble",
        json!({"dt": a.dt, "steps": a.steps, "samples": a.samples, "seed": ctx.seed, "stationary_start": ens.stationary_start}),
    );
    let mut t = Table::new(
        "ensemble",
        ["sample", "step", "t"]
            .map(String::from)
            .into_iter()
            .chain((1..=d).map(|k| format!("x_{k}")))
            .collect(),
    );
    t.preamble = vec![
        ("seed".into(), ctx.seed.to_string()),
        ("dt".into(), num(a.dt)),
        ("steps".into(), a.steps.to_string()),
        ("samples".into(), a.samples.to_string()),
        ("model_hash".into(), m.hash()),
    ];
    for s in 0..ens.samples {
        for k in 0..=ens.steps {
            let mut row = vec![s.to_string(), k.to_string(), num(k as f64 * a.dt)];
            row.extend(ens.state(s, k).iter().map(|&v| num(v)));
            t.push(row);
        }
    }
    o.tables.push(t);
    Ok(o)
}

fn power(d: usize, i: usize, p: u32) -> Vec<u32> {
    let mut v = vec![0; d];
    v[i] = p;
    v
}

pub fn diagnostics(m: &OUModel, ctx: Ctx) -> symou::Result<Outcome> {
    let mut o = start(m);
    let g = GramianSet::new(m)?;
    let b = bundle(m, &g, ctx)?;
    let r = spaces::semigroup_diagnostics(m, &g, &b);
    o.checks.push(Check::at_most("Hilbert-Schmidt trace identity", r.trace_identity_residual, 1e-6));
    o.checks.push(Check::at_most("conjugated covariance identity", r.covariance_identity_residual, IDENTITY_TOL));
    let scale = 1.0 / m.norm_a();
    let times: Vec<f64> = (0..10).map(|k| scale * 10f64.powf(-2.0 + k as f64 / 3.0)).collect();
    let grad = mehler::check_gradient_bound(m, &g, None, &times, &[])?;
    o.checks.push(Check::flag("gradient operator bound on the time grid", grad.pass));
    if let Some(diag) = &r.diagonal {
        let mut t = Table::new(
            "range",
            ["t", "graph_ratio_min", "graph_ratio_max", "invariant_ratio_min", "invariant_ratio_max"]
                .map(String::from)
                .to_vec(),
        );
        for row in &diag.range {
            t.push(vec![
                num(row.t),
                num(row.graph_ratio_min),
                num(row.graph_ratio_max),
                num(row.invariant_ratio_min),
                num(row.invariant_ratio_max),
            ]);
        }
        o.tables.push(t);
    }
    o.insert("diagnostics", &r);
    o.insert("gradient", grad);
    Ok(o)
}

pub fn report(m: &OUModel, ctx: Ctx, corpus: Option<&Path>, expect_symmetric: bool) -> symou::Result<Outcome> {
    let mut o = Outcome {
        model_hash: Some(m.hash()),
        ..Default::default()
    };
    o.insert("model", model_summary(m));
    let c = check(m, ctx, expect_symmetric)?;
    let symmetric = c.body.get("is_symmetric").and_then(|v| v.as_bool()).unwrap_or(false);
    let holds = c.checks.first().is_some_and(|x| x.pass);
    o.nest("check", c);
    if !holds {
        return Ok(o);
    }
    o.nest("gramian", gramian(m, ctx, None)?);
    if symmetric && m.kind() != ModelKind::Example2 {
        o.nest("gap", gap(m, ctx, 2)?);
        o.nest("diagnostics", diagnostics(m, ctx)?);
        if let Some(path) = corpus {
            o.nest("sobolev", sobolev(m, ctx, path, 2.0, 100)?);
        }
    }
    Ok(o)
}

pub fn example1(n: usize, ctx: Ctx) -> symou::Result<Outcome> {
    let m = presets::example1(n)?;
    let mut o = start(&m);
    let facts = presets::example1_facts(n)?;
    o.checks.push(Check::at_most("Q_∞ = A²/2", facts.q_inf_vs_half_a_squared, 1e-15));
    o.checks.push(Check::at_most("A_Q = A", facts.a_q_vs_a, 1e-15));
    o.checks.push(Check::flag("spectral gap equals 1/N", facts.gap == facts.expected_gap));
    o.insert("facts", &facts);
    o.nest("diagnostics", diagnostics(&m, ctx)?);
    let doc = serde_json::to_string_pretty(&m.to_document()).map_err(|e| Error::Schema(e.to_string()))?;
    o.files.push(("model.json".into(), doc + "\n"));
    Ok(o)
}

pub struct Example2Args {
    pub kappa: f64,
    pub m: f64,
    pub n: usize,
    pub halfwidth: Option<f64>,
    pub samples: usize,
    pub refinement_base: usize,
    pub doublings: usize,
}

pub fn example2(a: Example2Args, ctx: Ctx) -> symou::Result<Outcome> {
    if !(a.kappa > 0.0 && a.m > 0.0) {
        return Err(Error::InvalidArgument("kappa and m must be positive".into()));
    }
    let mut params = Example2Params::new(a.kappa, a.m, a.n);
    if let Some(l) = a.halfwidth {
        params.halfwidth = l;
    }
    let model = presets::example2(params)?;
    let mut o = start(&model);
    let opts = Example2Options {
        samples: a.samples,
        seed: ctx.seed,
        refinement_base: a.refinement_base,
        doublings: a.doublings,
        ..Default::default()
    };
    let r = presets::example2_checks(params, opts)?;
    o.checks.push(Check::at_most("symmetry residual", r.symmetry_residual, 1e-8));
    o.checks.push(Check::at_most("‖S_Q(t)‖ against e^{−mt} on [0.1, 2]", r.max_norm_gap, 0.02));
    if r.below_threshold {
        if let Some(order) = r.observed_order {
            o.checks.push(Check::at_most("harmonic residual order − 2", (order - 2.0).abs(), 0.1));
        }
        if let Some(s) = &r.shifted_measure {
            o.checks.push(Check::flag("shifted-measure transition", s.pass));
        }
        if let Some(s) = &r.shift_conjugation {
            o.checks.push(Check::flag("shift conjugation", s.pass));
        }
    } else {
        o.checks.push(Check::flag("discrete spectrum uniformly negative", r.uniformly_negative));
    }
    let mut norms = Table::new("example2_norms", ["t", "norm", "target", "relative_gap"].map(String::from).to_vec());
    for row in &r.norm_rows {
        norms.push(vec![num(row.t), num(row.norm), num(row.target), num(row.relative_gap)]);
    }
    let mut refine = Table::new(
        "example2_refinement",
        ["n", "h", "harmonic_residual", "dirichlet_residual", "max_eigenvalue"].map(String::from).to_vec(),
    );
    for row in &r.refinements {
        refine.push(vec![
            row.n.to_string(),
            num(row.h),
            num(row.harmonic_residual),
            num(row.dirichlet_residual),
            num(row.max_eigenvalue),
        ]);
    }
    o.tables.push(norms);
    o.tables.push(refine);
    o.insert("example2", &r);
    let doc = serde_json::to_string_pretty(&model.to_document()).map_err(|e| Error::Schema(e.to_string()))?;
    o.files.push(("model.json".into(), doc + "\n"));
    Ok(o)
}
