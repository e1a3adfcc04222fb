use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use riesz_core::dichotomy::{
    affinity_sequence_refined, bourgain_l1_refined, guenais_test, phase_grid, rn_sqrt_grid,
    rn_sqrt_increments, singularity_hint, support_upper_bound,
};
use riesz_core::flatness::{
    barker_catalog, cluster_count_check, flatness_metrics, gaussian_l1_experiment, r_form,
    sign_polynomial, verify_barker, zero_annulus_check, zero_one_annulus_check, AnnulusCheck,
    GaussianOptions, SpacerLaw,
};
use riesz_core::polynomial::default_grid;
use riesz_core::products::{
    all_stage_diagnostics, factor_summaries, mahler_of_products, select_corollary25_indices,
    RieszSpec,
};
use riesz_core::rankone::{dissociate_lift_with, flat_lift_schedule, is_dynamical_origin, reconstruct_params};
use riesz_core::specfile::{validate, Built, Severity, SpecFile};
use riesz_core::TrigPolynomial;

use crate::output::{emit, Cell, Format, Meta, Report};
use crate::{
    Cli, Command, FlatnessAction, Io, PolyArg, RankoneAction, SpacerLawArg, SpecArg, StageArg,
    StagesArg, ZeroKind,
};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(riesz_core::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "{s}"),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

type R<T> = Result<T, CliError>;

fn num<T>(r: riesz_core::Result<T>) -> R<T> {
    r.map_err(CliError::Numeric)
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

struct Loaded {
    text: String,
    built: Built,
}

fn read(path: &Path) -> R<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load(arg: &SpecArg) -> R<Loaded> {
    let text = read(&arg.spec)?;
    let built = SpecFile::from_json(&text)
        .and_then(|f| f.build())
        .map_err(|e| CliError::Config(format!("{}: {e}", arg.spec.display())))?;
    Ok(Loaded { text, built })
}

fn format_of(io: &Io) -> Format {
    if let Some(f) = io.format {
        return f;
    }
    match io.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    }
}

fn finish(report: Report, io: &Io) -> R<()> {
    emit(&report.render(format_of(io)), io.out.as_deref())
        .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
}

fn meta(cli: &Cli, name: &str, inputs: &[&str]) -> Meta {
    Meta::new(name, &json!({ "args": cli, "inputs": inputs }))
}

fn single_stage(spec: &RieszSpec, arg: &StageArg) -> R<usize> {
    let n = arg.stage.unwrap_or(spec.stage_count());
    spec.check_stage(n)
        .map_err(|e| CliError::Config(format!("--stage: {e}")))?;
    Ok(n)
}

fn range(spec: &RieszSpec, arg: &StagesArg) -> R<(usize, usize)> {
    let k = spec.stage_count();
    match arg.stages {
        None => Ok((1, k)),
        Some(r) if r.last <= k => Ok((r.first, r.last)),
        Some(r) => Err(CliError::Config(format!(
            "--stages {}..{} outside 1..{k}",
            r.first, r.last
        ))),
    }
}

fn grid_for(io: &Io, degree: u64) -> R<usize> {
    match io.grid {
        Some(n) => Ok(n),
        None => num(default_grid(degree)),
    }
}

fn spec_file(spec: &RieszSpec) -> Value {
    json!({ "label": spec.label(), "factors": spec.factors() })
}

fn parse_poly(arg: &PolyArg) -> R<TrigPolynomial> {
    if let Some(c) = &arg.coeffs {
        return Ok(TrigPolynomial::from_real(c));
    }
    let Some(src) = &arg.poly else {
        return Err(CliError::Config("need --poly or --coeffs".into()));
    };
    let text = if src.trim_start().starts_with('{') {
        src.clone()
    } else {
        read(Path::new(src))?
    };
    let p: TrigPolynomial = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("--poly: line {} column {}: {e}", e.line(), e.column()))
    })?;
    if p.is_zero() {
        return Err(CliError::Config("--poly: zero polynomial".into()));
    }
    Ok(p)
}

fn poly_input(arg: &PolyArg) -> String {
    serde_json::to_string(arg).expect("args serialize")
}

pub fn run(cli: &Cli) -> R<()> {
    match &cli.command {
        Command::Density { spec, stage, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let n = single_stage(s, stage)?;
            let grid = grid_for(io, num(s.partial_degree(n))?)?;
            let d = num(s.density_grid(n, grid))?;
            let mean = d.mean();
            let check = if (mean - 1.0).abs() <= 1e-10 { "pass" } else { "fail" };
            let mut m = meta(cli, "density", &[&l.text]);
            m.grid = Some(grid);
            m.truncated_at = Some(n);
            let rows = d
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| vec![k.into(), d.angle(k).into(), v.into()])
                .collect();
            let report = Report::new(
                m,
                json!({ "stage": n, "grid": grid, "mean": mean, "mean_check": check, "values": d.values }),
            )
            .table(vec!["k", "theta", "density"], rows)
            .footer("mean", crate::output::float(mean))
            .footer("mean_check", check);
            finish(report, io)
        }
        Command::Fourier { spec, stage, kmax, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let n = single_stage(s, stage)?;
            let c = num(s.fourier_coefficients(n, *kmax))?;
            let mut m = meta(cli, "fourier", &[&l.text]);
            m.truncated_at = Some(n);
            let rows = c
                .iter()
                .enumerate()
                .map(|(j, z)| vec![j.into(), z.re.into(), z.im.into(), z.norm().into()])
                .collect();
            let report = Report::new(m, json!({ "stage": n, "coefficients": c }))
                .table(vec!["j", "re", "im", "abs"], rows);
            finish(report, io)
        }
        Command::Diagnostics { spec, stages, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let (a, b) = range(s, stages)?;
            let d = num(all_stage_diagnostics(s))?;
            let d = &d[a - 1..b];
            let schedule = match select_corollary25_indices(s) {
                Ok(sch) => to_json(&sch),
                Err(e) => json!({ "error": e.to_string() }),
            };
            let mut m = meta(cli, "diagnostics", &[&l.text]);
            m.truncated_at = Some(b);
            let rows = d
                .iter()
                .map(|x| {
                    vec![
                        x.stage.into(),
                        x.b0.into(),
                        x.beta.into(),
                        x.tail_c0.into(),
                        x.degree.into(),
                        x.margin.into(),
                        x.mahler_product.into(),
                        x.l1_of_sn.into(),
                    ]
                })
                .collect();
            let report = Report::new(
                m,
                json!({
                    "stages": d,
                    "factors": num(factor_summaries(s))?,
                    "schedule": schedule,
                    "classical_riesz": l.built.classical.as_ref().map(|c| json!({
                        "verdict": c.verdict,
                        "cos2sin2_partial_sum": c.cos2sin2_partial_sum,
                        "l2_partial_sum": c.l2_partial_sum,
                        "lacunarity_warnings": c.lacunarity_warnings,
                        "truncated": c.truncated,
                    })),
                }),
            )
            .table(
                vec!["stage", "b0", "beta", "tail_c0", "degree", "margin", "mahler_product", "l1_of_sn"],
                rows,
            );
            finish(report, io)
        }
        Command::Mahler { spec, stages, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let (a, b) = range(s, stages)?;
            let head = num(s.subproduct(&(1..=b).collect::<Vec<_>>()))?;
            let v = num(mahler_of_products(&head))?;
            let mut m = meta(cli, "mahler", &[&l.text]);
            m.truncated_at = Some(b);
            let rows = (a..=b).map(|n| vec![n.into(), v[n - 1].into()]).collect();
            let out: Vec<Value> = (a..=b)
                .map(|n| json!({ "stage": n, "mahler": v[n - 1] }))
                .collect();
            finish(
                Report::new(m, json!({ "stages": out })).table(vec!["stage", "mahler"], rows),
                io,
            )
        }
        Command::Affinity { spec, against, stages, io } => {
            let l = load(spec)?;
            let other = load(&SpecArg { spec: against.clone() })?;
            let (a, b) = range(&l.built.spec, stages)?;
            if b > other.built.spec.stage_count() {
                return Err(CliError::Config(format!(
                    "--against has {} stages, need {b}",
                    other.built.spec.stage_count()
                )));
            }
            let r = num(affinity_sequence_refined(&l.built.spec, &other.built.spec, b, io.grid))?;
            sequence_report(cli, "affinity", &[&l.text, &other.text], a, b, &r.values, "affinity", r.grid, r.quadrature_error, json!({}), io)
        }
        Command::Bourgain { spec, stages, hint_threshold, hint_window, io } => {
            let l = load(spec)?;
            let (a, b) = range(&l.built.spec, stages)?;
            let r = num(bourgain_l1_refined(&l.built.spec, b, io.grid))?;
            let hint = singularity_hint(&r.values, *hint_threshold, *hint_window);
            sequence_report(cli, "bourgain", &[&l.text], a, b, &r.values, "l1", r.grid, r.quadrature_error, json!({ "singularity_hint": hint }), io)
        }
        Command::Guenais { spec, stages, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let (a, b) = range(s, stages)?;
            let grid = grid_for(io, num(s.partial_degree(b))?)?;
            let g = num(guenais_test(s, b, grid))?;
            let mut m = meta(cli, "guenais", &[&l.text]);
            m.grid = Some(grid);
            m.truncated_at = Some(b);
            let rows = (a..=b)
                .map(|n| {
                    let i = n - 1;
                    vec![
                        n.into(),
                        g.factor_l1[i].into(),
                        g.v[i].into(),
                        g.partial_sums[i].into(),
                        g.product_l1[i].into(),
                        g.product_of_norms[i].into(),
                        g.slack[i].into(),
                        g.lower_bound[i].into(),
                    ]
                })
                .collect();
            let report = Report::new(m, to_json(&g)).table(
                vec!["stage", "factor_l1", "v", "partial_sum", "product_l1", "product_of_norms", "slack", "lower_bound"],
                rows,
            );
            finish(report, io)
        }
        Command::RnSqrt { spec, stage, class_l, increments, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let n = single_stage(s, stage)?;
            let grid = grid_for(io, num(s.partial_degree(n))?)?;
            let mut m = meta(cli, "rn-sqrt", &[&l.text]);
            m.grid = Some(grid);
            m.truncated_at = Some(n);
            let report = if *increments {
                let inc = num(rn_sqrt_increments(s, n, grid))?;
                let rows = inc
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| vec![(i + 1).into(), v.into()])
                    .collect();
                Report::new(m, json!({ "stage": n, "increments": inc, "class_l_asserted": class_l }))
                    .table(vec!["n", "increment"], rows)
            } else {
                let r = num(rn_sqrt_grid(s, n, grid, *class_l))?;
                let rows = r
                    .values
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| vec![k.into(), r.values.angle(k).into(), v.into()])
                    .collect();
                Report::new(m, to_json(&r)).table(vec!["k", "theta", "value"], rows)
            };
            finish(report, io)
        }
        Command::Phase { spec, stage, floor, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let n = single_stage(s, stage)?;
            let grid = grid_for(io, num(s.partial_degree(n))?)?;
            let p = num(phase_grid(s, n, grid, *floor))?;
            let mut m = meta(cli, "phase", &[&l.text]);
            m.grid = Some(grid);
            m.truncated_at = Some(n);
            let rows = p
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let t = std::f64::consts::TAU * k as f64 / grid as f64;
                    match v {
                        Some(z) => vec![k.into(), t.into(), z.re.into(), z.im.into()],
                        None => vec![k.into(), t.into(), Cell::Empty, Cell::Empty],
                    }
                })
                .collect();
            let report = Report::new(m, to_json(&p))
                .table(vec!["k", "theta", "re", "im"], rows)
                .footer("undefined", p.undefined.to_string());
            finish(report, io)
        }
        Command::SupportBound { spec, budget, seed, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let grid = grid_for(io, num(s.partial_degree(s.stage_count()))?)?;
            let b = num(support_upper_bound(s, *budget, grid, *seed))?;
            let mut m = meta(cli, "support-bound", &[&l.text]);
            m.grid = Some(grid);
            m.truncated_at = Some(s.stage_count());
            let rows = b
                .evaluated
                .iter()
                .map(|(set, v)| {
                    let names: Vec<String> = set.iter().map(|j| j.to_string()).collect();
                    vec![Cell::Text(names.join(";")), (*v).into()]
                })
                .collect();
            let report = Report::new(m, to_json(&b))
                .table(vec!["subset", "l1"], rows)
                .footer("d_hat", crate::output::float(b.d_hat));
            finish(report, io)
        }
        Command::Rankone { action } => rankone(cli, action),
        Command::Flatness { action } => flatness(cli, action),
        Command::Contract { spec, q, io } => {
            let l = load(spec)?;
            let c = num(l.built.spec.contract(*q))?;
            let report = Report::new(meta(cli, "contract", &[&l.text]), json!({ "q": q, "spec": spec_file(&c) }));
            finish(report, io)
        }
        Command::Validate { spec, stages, io } => {
            let text = read(&spec.spec)?;
            let range = stages.stages.map(|r| (r.first, r.last));
            let d = validate(&text, io.grid, range);
            let errors = d.iter().filter(|x| x.severity == Severity::Error).count();
            let rows = d
                .iter()
                .map(|x| {
                    let sev = match x.severity {
                        Severity::Error => "error",
                        Severity::Warning => "warning",
                    };
                    vec![sev.into(), Cell::Text(x.field.clone()), Cell::Text(format!("{:?}", x.message))]
                })
                .collect();
            let report = Report::new(meta(cli, "validate", &[&text]), json!({ "diagnostics": d }))
                .table(vec!["severity", "field", "message"], rows);
            finish(report, io)?;
            if errors > 0 {
                return Err(CliError::Config(format!("{errors} validation error(s)")));
            }
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sequence_report(
    cli: &Cli,
    name: &str,
    inputs: &[&str],
    a: usize,
    b: usize,
    values: &[f64],
    column: &'static str,
    grid: usize,
    quadrature_error: f64,
    extra: Value,
    io: &Io,
) -> R<()> {
    let mut m = meta(cli, name, inputs);
    m.grid = Some(grid);
    m.truncated_at = Some(b);
    let rows = (a..=b).map(|n| vec![n.into(), values[n - 1].into()]).collect();
    let mut result = json!({
        "first_stage": a,
        "values": &values[a - 1..b],
        "grid": grid,
        "quadrature_error": quadrature_error,
    });
    if let (Value::Object(r), Value::Object(e)) = (&mut result, extra) {
        r.extend(e);
    }
    let report = Report::new(m, result)
        .table(vec!["stage", column], rows)
        .footer("quadrature_error", crate::output::float(quadrature_error));
    finish(report, io)
}

fn rankone(cli: &Cli, action: &RankoneAction) -> R<()> {
    match action {
        RankoneAction::Build { spec, io } => {
            let l = load(spec)?;
            let Some(r) = &l.built.rankone else {
                return Err(CliError::Config(format!(
                    "{}: rankone build needs a rankone stanza",
                    spec.spec.display()
                )));
            };
            let params = num(reconstruct_params(&r.spec))?;
            let mut m = meta(cli, "rankone build", &[&l.text]);
            m.truncated_at = Some(r.spec.stage_count());
            let rows = r
                .table
                .returns
                .iter()
                .enumerate()
                .map(|(k, row)| {
                    let rs: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                    vec![(k + 1).into(), r.table.heights[k + 1].into(), Cell::Text(rs.join(";"))]
                })
                .collect();
            let report = Report::new(
                m,
                json!({
                    "spec": spec_file(&l.built.spec),
                    "heights": r.table.heights,
                    "returns": r.table.returns,
                    "reflected": r.reflected,
                    "dissipativity_product": params.dissipativity_product(),
                }),
            )
            .table(vec!["stage", "height", "returns"], rows);
            finish(report, io)
        }
        RankoneAction::Check { spec, io } => {
            let l = load(spec)?;
            let s = &l.built.spec;
            let d = is_dynamical_origin(s);
            let params = if d.dynamical {
                Some(num(reconstruct_params(s))?)
            } else {
                None
            };
            let report = Report::new(
                meta(cli, "rankone check", &[&l.text]),
                json!({ "check": d, "params": params }),
            )
            .table(
                vec!["dynamical", "purely", "violation"],
                vec![vec![
                    d.dynamical.into(),
                    d.purely.into(),
                    d.violation.as_deref().map_or(Cell::Empty, |v| Cell::Text(format!("{v:?}"))),
                ]],
            );
            finish(report, io)
        }
        RankoneAction::Lift { spec, multiplier, flat, io } => {
            let l = load(spec)?;
            let ps = l.built.spec.factors();
            let mut m = meta(cli, "rankone lift", &[&l.text]);
            let result = match flat {
                Some(count) => {
                    let max_deg = ps.iter().map(|p| p.degree()).max().unwrap_or(0);
                    let grid = grid_for(io, max_deg)?;
                    m.grid = Some(grid);
                    let f = num(flat_lift_schedule(ps, *count, grid))?;
                    json!({
                        "selected": f.selected,
                        "fractions": f.fractions,
                        "n": f.lift.n,
                        "h_bounds": f.lift.h_bounds,
                        "dissociated": f.lift.dissociated,
                        "dynamical": f.lift.dynamical,
                        "spec": spec_file(&f.lift.spec),
                    })
                }
                None => {
                    let lift = num(dissociate_lift_with(ps, *multiplier))?;
                    json!({
                        "n": lift.n,
                        "h_bounds": lift.h_bounds,
                        "dissociated": lift.dissociated,
                        "dynamical": lift.dynamical,
                        "spec": spec_file(&lift.spec),
                    })
                }
            };
            finish(Report::new(m, result), io)
        }
    }
}

fn annulus_rows(c: &AnnulusCheck) -> Vec<Vec<Cell>> {
    c.roots
        .iter()
        .map(|r| {
            vec![
                r.location.re.into(),
                r.location.im.into(),
                r.modulus().into(),
                (r.multiplicity as u64).into(),
            ]
        })
        .collect()
}

fn flatness(cli: &Cli, action: &FlatnessAction) -> R<()> {
    match action {
        FlatnessAction::Metrics { poly, io } => {
            let p = parse_poly(poly)?;
            let grid = grid_for(io, p.degree())?;
            let f = num(flatness_metrics(&p, grid))?;
            let mut m = meta(cli, "flatness metrics", &[&poly_input(poly)]);
            m.grid = Some(grid);
            let report = Report::new(m, to_json(&f)).table(
                vec!["l1_over_l2", "mahler_over_l2", "sup_deviation"],
                vec![vec![f.l1_over_l2.into(), f.mahler_over_l2.into(), f.sup_deviation.into()]],
            );
            finish(report, io)
        }
        FlatnessAction::Barker { seq, io } => {
            let seqs: Vec<Vec<i8>> = match seq {
                Some(s) => vec![s
                    .iter()
                    .map(|t| match t.trim() {
                        "+" | "1" | "+1" => Ok(1),
                        "-" | "-1" => Ok(-1),
                        other => Err(CliError::Config(format!("--seq: bad sign {other:?}"))),
                    })
                    .collect::<R<_>>()?],
                None => barker_catalog().into_iter().map(|(_, s)| s).collect(),
            };
            let mut rows = Vec::new();
            let mut out = Vec::new();
            for s in &seqs {
                let c = num(verify_barker(s))?;
                let n = s.len();
                let f = num(flatness_metrics(&sign_polynomial(s), num(default_grid(n as u64))?))?;
                let bound = 1.0 - 1.0 / n as f64;
                let text: String = s.iter().map(|&e| if e > 0 { '+' } else { '-' }).collect();
                rows.push(vec![
                    n.into(),
                    Cell::Text(text.clone()),
                    c.barker.into(),
                    c.max_correlation.into(),
                    f.mahler_over_l2.into(),
                    bound.into(),
                    (f.mahler_over_l2 > bound).into(),
                ]);
                out.push(json!({
                    "length": n,
                    "sequence": text,
                    "check": c,
                    "mahler_over_l2": f.mahler_over_l2,
                    "bound": bound,
                    "bound_holds": f.mahler_over_l2 > bound,
                }));
            }
            let report = Report::new(meta(cli, "flatness barker", &[]), json!({ "sequences": out }))
                .table(
                    vec!["length", "sequence", "barker", "max_correlation", "mahler_over_l2", "bound", "bound_holds"],
                    rows,
                );
            finish(report, io)
        }
        FlatnessAction::Gaussian { m, trials, seed, height, spacer_law, spacer_upper, spacer_value, io } => {
            let mut o = GaussianOptions::new(*m, *trials, *seed);
            o.height = *height;
            o.grid = io.grid;
            o.spacers = match spacer_law {
                SpacerLawArg::Uniform => SpacerLaw::Uniform { upper: spacer_upper.unwrap_or(0) },
                SpacerLawArg::Constant => SpacerLaw::Constant { value: *spacer_value },
            };
            let e = num(gaussian_l1_experiment(&o))?;
            let mut meta = meta(cli, "flatness gaussian", &[]);
            meta.grid = Some(e.grid);
            let rows = e
                .values
                .iter()
                .enumerate()
                .map(|(t, &v)| vec![t.into(), v.into()])
                .collect();
            let report = Report::new(meta, to_json(&e))
                .table(vec!["trial", "value"], rows)
                .footer("mean", crate::output::float(e.mean))
                .footer("stddev", crate::output::float(e.stddev))
                .footer("target", crate::output::float(e.target))
                .footer("deviation", crate::output::float(e.deviation));
            finish(report, io)
        }
        FlatnessAction::Zeros { kind, poly, h, spacers, angle, io } => {
            let p = match (kind, spacers) {
                (ZeroKind::RForm, Some(a)) => {
                    let h = h.ok_or_else(|| CliError::Config("--spacers needs --h".into()))?;
                    r_form(h, a)
                }
                _ => parse_poly(poly)?,
            };
            let input = serde_json::to_string(&p).expect("polynomial serializes");
            let m = meta(cli, "flatness zeros", &[&input]);
            let report = match kind {
                ZeroKind::RForm => {
                    let h = h.ok_or_else(|| CliError::Config("r-form needs --h".into()))?;
                    let c = num(zero_annulus_check(&p, h))?;
                    Report::new(m, to_json(&c)).table(vec!["re", "im", "modulus", "multiplicity"], annulus_rows(&c))
                }
                ZeroKind::ZeroOne => {
                    let c = num(zero_one_annulus_check(&p))?;
                    Report::new(m, to_json(&c)).table(vec!["re", "im", "modulus", "multiplicity"], annulus_rows(&c))
                }
                ZeroKind::Cluster => {
                    let c = num(cluster_count_check(&p, *angle))?;
                    Report::new(m, to_json(&c)).table(
                        vec!["n", "delta", "count", "threshold", "pass"],
                        vec![vec![c.n.into(), c.delta.into(), c.count.into(), c.threshold.into(), c.pass.into()]],
                    )
                }
            };
            finish(report, io)
        }
    }
}
