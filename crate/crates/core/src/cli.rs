//! Command dispatch behind the `splitjet` binary.
//!
//! Every command returns a [`Report`] with a JSON body, a text rendering
//! and a `verified` flag recomputed from the result's own certificate.

use num_rational::BigRational;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::field::{Field, FieldError, Valuation};
use crate::ift::{ift_solve, IftError, ImplicitSystem};
use crate::jacobian::{determinacy, milnor_number, TruncatedIdeal};
use crate::jet::{CoordinateChange, Jet, JetError, NormQuery};
use crate::quadform::{
    arf_normal_form, arf_reduce_solvable, canonical_form_char2, diagonalize_ne2, normalize_squares, quad_extract,
    NormalKind, QuadError, QuadNormalForm, SquareNormalization,
};
use crate::split::{split, verify_split, SplitError};
use crate::text::{parse_poly, ParseError};
use crate::transport::{transport, TransportError, TransportProblem};

pub const SCHEMA_VERSION: u32 = 1;

/// Precision used for inputs read as exact polynomials.
const POLYNOMIAL_PRECISION: u32 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Split,
    Quadform,
    Milnor,
    Determinacy,
    Transport,
    Ift,
    Norm,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Split => "split",
            Command::Quadform => "quadform",
            Command::Milnor => "milnor",
            Command::Determinacy => "determinacy",
            Command::Transport => "transport",
            Command::Ift => "ift",
            Command::Norm => "norm",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub field: Field,
    pub vars: Vec<String>,
    pub precision: u32,
    pub max_degree: u32,
    pub split_vars: Vec<String>,
    pub valuation: Valuation,
    pub epsilon: Option<Vec<BigRational>>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Ift(#[from] IftError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl CliError {
    /// Hypothesis failures of `transport` count as failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Transport(TransportError::Hypothesis(_) | TransportError::Verification) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    pub body: Map<String, Value>,
    pub text: Vec<String>,
    pub verified: bool,
}

impl Report {
    pub fn to_json(&self) -> Value {
        let mut m = self.body.clone();
        m.insert("schema".into(), json!(SCHEMA_VERSION));
        m.insert("command".into(), json!(self.command.name()));
        m.insert("verified".into(), json!(self.verified));
        Value::Object(m)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => serde_json::to_string_pretty(&self.to_json()).unwrap() + "\n",
            OutputFormat::Text => {
                let mut out = self.text.join("\n");
                out.push_str(&format!("\nverified: {}\n", self.verified));
                out
            }
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.verified {
            0
        } else {
            1
        }
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn expect_inputs(inputs: &[String], n: usize, what: &str) -> Result<(), CliError> {
    if inputs.len() != n {
        return Err(CliError::Input(format!("expected {what}, got {} argument(s)", inputs.len())));
    }
    Ok(())
}

fn change_lines(c: &CoordinateChange, vars: &[String]) -> Vec<String> {
    c.components().iter().zip(vars).map(|(comp, v)| format!("  {v} -> {}", comp.to_text(vars))).collect()
}

fn parse_change(text: &str, cfg: &RunConfig) -> Result<CoordinateChange, CliError> {
    let comps: Vec<Jet> = text
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|c| parse_poly(c, &cfg.vars, cfg.field, cfg.precision))
        .collect::<Result<_, _>>()?;
    if comps.len() != cfg.vars.len() {
        return Err(CliError::Input(format!(
            "a coordinate change needs {} `;`-separated components, got {}",
            cfg.vars.len(),
            comps.len()
        )));
    }
    Ok(CoordinateChange::new(comps)?)
}

pub fn run_command(cmd: Command, cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    match cmd {
        Command::Split => run_split(cfg, inputs),
        Command::Quadform => run_quadform(cfg, inputs),
        Command::Milnor => run_milnor(cfg, inputs),
        Command::Determinacy => run_determinacy(cfg, inputs),
        Command::Transport => run_transport(cfg, inputs),
        Command::Ift => run_ift(cfg, inputs),
        Command::Norm => run_norm(cfg, inputs),
        Command::Verify => run_verify(cfg, inputs),
    }
}

fn require_quadratic_precision(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.precision < 2 {
        return Err(CliError::Input("precision must be at least 2".into()));
    }
    Ok(())
}

fn run_split(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 1, "one expression")?;
    require_quadratic_precision(cfg)?;
    let f = parse_poly(&inputs[0], &cfg.vars, cfg.field, cfg.precision)?;
    let r = split(&f, f.precision())?;
    let verified = verify_split(&f, &r)?.is_zero();
    let tail = &cfg.vars[r.rank..];
    let mut text = vec![
        format!("rank: {}", r.rank),
        format!("quadratic: {}", r.head_jet().to_text(&cfg.vars)),
        format!("residual: {}", r.residual.to_text(tail)),
        "change:".to_string(),
    ];
    text.extend(change_lines(&r.change, &cfg.vars));
    Ok(Report { command: Command::Split, body: object(r.to_json(&cfg.vars)), text, verified })
}

fn describe_normal_form(nf: &QuadNormalForm, vars: &[String]) -> Vec<String> {
    let mut out = vec![
        format!("variant: {}", nf.variant_name()),
        format!("rank: {}", nf.rank()),
        format!("form: {}", nf.form().to_jet(2).to_text(vars)),
    ];
    match nf.kind() {
        NormalKind::Diagonal { coeffs } => {
            out.push(format!("coefficients: ({})", coeffs.iter().map(|c| c.to_literal()).collect::<Vec<_>>().join(", ")))
        }
        NormalKind::Arf { pairs, tail } => {
            out.push(format!("l: {}", pairs.len()));
            let p: Vec<String> = pairs.iter().map(|(a, b)| format!("({}, {})", a.to_literal(), b.to_literal())).collect();
            out.push(format!("pairs: [{}]", p.join(", ")));
            out.push(format!("d: ({})", tail.iter().map(|c| c.to_literal()).collect::<Vec<_>>().join(", ")));
        }
        NormalKind::UnitDiagonal { .. } | NormalKind::Char2Solvable { .. } => {}
    }
    out
}

fn run_quadform(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 1, "one expression")?;
    require_quadratic_precision(cfg)?;
    let f = parse_poly(&inputs[0], &cfg.vars, cfg.field, cfg.precision)?;
    let q = quad_extract(&f)?;
    let mut body = Map::new();
    let mut text = Vec::new();
    let mut verified;
    if cfg.field.is_char2() {
        let nf = arf_normal_form(&q)?;
        verified = nf.verify(&q);
        text.extend(describe_normal_form(&nf, &cfg.vars));
        body.insert("normal_form".into(), nf.descriptor());
        match arf_reduce_solvable(&nf)? {
            Some(red) => {
                verified &= red.verify(&q);
                text.push(format!("solvable reduction: {} ({})", red.form().to_jet(2).to_text(&cfg.vars), red.variant_name()));
                body.insert("solvable_reduction".into(), red.descriptor());
            }
            None => {
                text.push("solvable reduction: absent".into());
                body.insert("solvable_reduction".into(), Value::Null);
            }
        }
        if cfg.field.order().is_some() {
            let canon = canonical_form_char2(&q)?;
            verified &= canon.verify(&q);
            text.push(format!("canonical: {}", canon.form().to_jet(2).to_text(&cfg.vars)));
            body.insert("canonical".into(), canon.descriptor());
        }
    } else {
        let nf = diagonalize_ne2(&q)?;
        verified = nf.verify(&q);
        text.extend(describe_normal_form(&nf, &cfg.vars));
        body.insert("normal_form".into(), nf.descriptor());
        match normalize_squares(&nf)? {
            SquareNormalization::Unit(u) => {
                verified &= u.verify(&q);
                text.push(format!("square normalization: {}", u.form().to_jet(2).to_text(&cfg.vars)));
                body.insert("square_normalization".into(), u.descriptor());
            }
            SquareNormalization::Absent { signs } => {
                text.push("square normalization: absent".into());
                if let Some(s) = &signs {
                    let pos = s.iter().filter(|s| **s == crate::quadform::Sign::Positive).count();
                    text.push(format!("signature: ({pos}, {})", s.len() - pos));
                }
                body.insert("square_normalization".into(), json!({ "absent": true, "signs": signs }));
            }
        }
    }
    body.insert("field".into(), json!(cfg.field.to_string()));
    body.insert("rank".into(), json!(q.hessian_rank()));
    Ok(Report { command: Command::Quadform, body, text, verified })
}

/// Polynomials parse exactly; an `O(deg k)` term marks a truncated jet.
fn parse_polynomial_or_jet(text: &str, cfg: &RunConfig) -> Result<(Jet, bool), CliError> {
    let f = parse_poly(text, &cfg.vars, cfg.field, POLYNOMIAL_PRECISION)?;
    let is_jet = f.precision() < POLYNOMIAL_PRECISION;
    Ok((f, is_jet))
}

fn run_milnor(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 1, "one expression")?;
    let (mut f, is_jet) = parse_polynomial_or_jet(&inputs[0], cfg)?;
    let mut text = Vec::new();
    let mut truncated_at = None;
    if is_jet {
        // a jet determines mu only once it is known to be determined
        let prec = f.precision();
        let d = determinacy(&f, cfg.max_degree.min(prec));
        let b = match d.bound {
            Some(b) if b <= prec as u64 => b as u32,
            _ => {
                return Err(CliError::Input(format!(
                    "jet of precision {prec} is not certified to be finitely determined within it"
                )))
            }
        };
        f = f.truncate(b)?;
        truncated_at = Some(b);
        text.push(format!("truncated at determinacy bound: {b}"));
    }
    let r = milnor_number(&f, cfg.max_degree);
    let verified = match r.stabilization_degree {
        Some(s) => TruncatedIdeal::jacobian(&f, cfg.max_degree).contains_max_power(s),
        None => false,
    };
    text.push(format!("mu: {}", r.mu.map_or("unknown".to_string(), |m| m.to_string())));
    text.push(format!("stabilization degree: {}", opt(r.stabilization_degree)));
    text.push(format!("determinacy bound: {}", opt(r.determinacy_bound)));
    text.push(format!("order: {}", opt(r.order)));
    text.push(format!("max degree searched: {}", r.max_degree));
    let mut body = object(r.to_json());
    body.insert("truncated_at".into(), json!(truncated_at));
    Ok(Report { command: Command::Milnor, body, text, verified })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or("none".to_string(), |x| x.to_string())
}

fn run_determinacy(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 1, "one expression")?;
    let (f, is_jet) = parse_polynomial_or_jet(&inputs[0], cfg)?;
    let max_degree = if is_jet { cfg.max_degree.min(f.precision()) } else { cfg.max_degree };
    let d = determinacy(&f, max_degree);
    let verified = match d.k {
        Some(k) => TruncatedIdeal::jacobian(&f, max_degree).times_max_power(2).contains_max_power(k + 2),
        None => false,
    };
    let text = vec![
        format!("k: {}", opt(d.k)),
        format!("bound: {}", opt(d.bound)),
        format!("order: {}", opt(d.order)),
        format!("max degree searched: {}", d.max_degree),
    ];
    Ok(Report { command: Command::Determinacy, body: object(d.to_json()), text, verified })
}

/// Reads `f = q + g` with `q` already in normal form and `g` free of the
/// head variables.
fn read_split_form(f: &Jet, field: Field) -> Result<(QuadNormalForm, Jet), CliError> {
    let q = quad_extract(f)?;
    let nf = if field.is_char2() { arf_normal_form(&q)? } else { diagonalize_ne2(&q)? };
    let n = f.nvars();
    let h = nf.rank();
    let head = nf.head_form().to_jet(f.precision());
    let g = f - &head;
    if nf.form() != q || !g.involves_only(&(h..n).collect::<Vec<_>>()) {
        return Err(CliError::Input("input is not a split form q + g(tail) with q in normal form".into()));
    }
    Ok((nf, g.restrict(&(h..n).collect::<Vec<_>>())?))
}

fn run_transport(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 3, "f0, f1 and a `;`-separated change phi")?;
    require_quadratic_precision(cfg)?;
    let f0 = parse_poly(&inputs[0], &cfg.vars, cfg.field, cfg.precision)?;
    let f1 = parse_poly(&inputs[1], &cfg.vars, cfg.field, cfg.precision)?;
    let phi = parse_change(&inputs[2], cfg)?;
    let (q0, g0) = read_split_form(&f0, cfg.field)?;
    let (q1, g1) = read_split_form(&f1, cfg.field)?;
    if q0.form() != q1.form() {
        return Err(CliError::Input("f0 and f1 have different quadratic parts".into()));
    }
    let prec = f0.precision().min(f1.precision()).min(phi.precision());
    let problem = TransportProblem::new(q0, g0.clone(), g1.clone(), phi, prec)?;
    let r = transport(&problem)?;
    let verified = g0.compose(&r.phi_prime)? == g1 && r.phi_prime.is_automorphism();
    let tail = &cfg.vars[problem.quad().rank()..];
    let mut text = vec![format!("linearization: {}", r.linearization.name()), "phi':".to_string()];
    text.extend(change_lines(&r.phi_prime, tail));
    let mut body = object(r.to_json(tail));
    body.insert("precision".into(), json!(prec));
    body.insert("tail_vars".into(), json!(tail));
    Ok(Report { command: Command::Transport, body, text, verified })
}

fn run_ift(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    if cfg.split_vars.is_empty() {
        return Err(CliError::Input("--split-vars must name the unknowns".into()));
    }
    if inputs.len() != cfg.split_vars.len() {
        return Err(CliError::Input(format!(
            "expected {} equations for {} unknowns",
            cfg.split_vars.len(),
            cfg.split_vars.len()
        )));
    }
    let mut ys = Vec::new();
    for y in &cfg.split_vars {
        let i = cfg.vars.iter().position(|v| v == y).ok_or_else(|| CliError::Input(format!("unknown split variable `{y}`")))?;
        if ys.contains(&i) {
            return Err(CliError::Input(format!("`{y}` listed twice in --split-vars")));
        }
        ys.push(i);
    }
    let xs: Vec<usize> = (0..cfg.vars.len()).filter(|i| !ys.contains(i)).collect();
    let n = cfg.vars.len();
    let mut positions = vec![0; n];
    for (k, &i) in xs.iter().chain(&ys).enumerate() {
        positions[i] = k;
    }
    let eqs = inputs
        .iter()
        .map(|e| Ok(parse_poly(e, &cfg.vars, cfg.field, cfg.precision)?.embed(n, &positions)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let prec = eqs.iter().map(Jet::precision).min().unwrap();
    let sys = ImplicitSystem::new(xs.len(), eqs)?;
    let y = ift_solve(&sys, prec)?;
    let verified = sys.residual(&y)?.iter().all(Jet::is_zero);
    let xnames: Vec<String> = xs.iter().map(|&i| cfg.vars[i].clone()).collect();
    let text = cfg.split_vars.iter().zip(&y).map(|(v, s)| format!("{v} = {}", s.to_annotated_text(&xnames))).collect();
    let body = object(json!({
        "precision": prec,
        "parameters": xnames,
        "solution": cfg.split_vars.iter().zip(&y).map(|(v, s)| (v.clone(), json!(s.to_text(&xnames)))).collect::<Map<_, _>>(),
    }));
    Ok(Report { command: Command::Ift, body, text, verified })
}

fn run_norm(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 1, "one expression")?;
    let f = parse_poly(&inputs[0], &cfg.vars, cfg.field, cfg.precision)?;
    let eps = cfg.epsilon.clone().unwrap_or_else(|| vec![BigRational::from_integer(1.into()); cfg.vars.len()]);
    let query = NormQuery::new(cfg.valuation, eps)?;
    if !cfg.valuation.applies_to(&cfg.field) {
        return Err(CliError::Input(format!("valuation {} does not apply to {}", cfg.valuation, cfg.field)));
    }
    let value = f.norm_eps(&query)?;
    let text = vec![format!("norm: {value}")];
    let body = object(json!({ "norm": value.to_string(), "valuation": cfg.valuation.to_string() }));
    Ok(Report { command: Command::Norm, body, text, verified: true })
}

fn run_verify(cfg: &RunConfig, inputs: &[String]) -> Result<Report, CliError> {
    expect_inputs(inputs, 3, "f, g and a `;`-separated change phi")?;
    let f = parse_poly(&inputs[0], &cfg.vars, cfg.field, cfg.precision)?;
    let g = parse_poly(&inputs[1], &cfg.vars, cfg.field, cfg.precision)?;
    let phi = parse_change(&inputs[2], cfg)?;
    let prec = f.precision().min(g.precision()).min(phi.precision());
    let diff = &f.with_precision(prec).compose(&phi)? - &g.with_precision(prec);
    let verified = diff.is_zero() && phi.is_automorphism();
    let text = vec![
        format!("precision: {prec}"),
        format!("automorphism: {}", phi.is_automorphism()),
        format!("difference: {}", diff.to_text(&cfg.vars)),
    ];
    let body = object(json!({
        "precision": prec,
        "automorphism": phi.is_automorphism(),
        "difference": diff.to_text(&cfg.vars),
    }));
    Ok(Report { command: Command::Verify, body, text, verified })
}
