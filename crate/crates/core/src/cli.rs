//! Command-line front end. Every subcommand prints one [`VerdictReport`]
//! as a JSON line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! mathematical precondition does not hold, 2 for malformed input.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::classify::{self, block_levels, relation_levels, RELATION_WORD_CAP};
use crate::dilation::{self, compress_pair, odometer_lift, poisson_kernel, verify_pair};
use crate::gallery::{self, GalleryParams};
use crate::io;
use crate::linalg;
use crate::odometer::{self, build_odometer, build_odometer_at, verify_fock_representation};
use crate::report::{Check, Payload, VerdictReport};
use crate::subspace::induced_symbol;
use crate::symbol::Symbol;
use crate::{Error, Result, TruncatedFockSpace, Word, DEFAULT_TOL};

pub const TOL_ENV: &str = "ODOFOCK_TOL";

#[derive(Debug, Parser)]
#[command(name = "odofock", version, about = "Odometer maps on truncated Fock spaces")]
pub struct Cli {
    /// Tolerance for every check [default: $ODOFOCK_TOL or 1e-10]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized checks and generators
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the constructed object (symbol, operator, pair) to this file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a gallery example
    GenExample(GenArgs),
    /// Build W_L from a symbol and verify the odometer relations
    BuildW(SymbolArgs),
    /// Closed-form adjoint of an isometric W_L
    Adjoint(SymbolArgs),
    /// Run one classification check
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        #[command(flatten)]
        args: SymbolArgs,
    },
    /// Poisson-kernel dilation of the row contraction in a pair
    Dilate(PairArgs),
    /// Odometer lift of a contractive pair
    Lift(PairArgs),
    /// Beurling factorization of an invariant subspace and its induced symbol
    Factor {
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long)]
        symbol: PathBuf,
    },
    /// Per-level spectrum of a unitary W_L
    Spectrum {
        #[arg(long)]
        symbol: PathBuf,
        #[arg(long)]
        level: usize,
        /// Number of histogram bins in the angle histogram
        #[arg(long, default_value_t = 16)]
        bins: usize,
    },
    /// Canonical index of a word
    WordIndex {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        level: usize,
        /// Letters of the word, each in 1..=n
        letters: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Representation,
    Isometry,
    Nica,
    Unitary,
}

#[derive(Debug, Args)]
pub struct SymbolArgs {
    #[arg(long)]
    pub symbol: PathBuf,
    /// Analysis level; defaults to the symbol's truncation level
    #[arg(long)]
    pub level: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub pair: PathBuf,
    #[arg(long)]
    pub level: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// adding-machine, weak-bishift, golden-ratio, shift, phase or compressed-pair
    pub name: String,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub level: usize,
    #[arg(long, default_value_t = 60)]
    pub terms: usize,
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    /// Argument of q in the adding machine
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q_angle: f64,
    /// Phase of the constant symbol in the phase example
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Compression level for compressed-pair
    #[arg(long, default_value_t = 2)]
    pub compress: usize,
}

struct Ctx {
    tol: f64,
    seed: u64,
    out: Option<PathBuf>,
}

struct Outcome {
    parameters: Map<String, Value>,
    payload: Payload,
}

fn outcome(parameters: Value, checks: Vec<Check>, windows: &[(&str, usize)], data: Value) -> Outcome {
    let windows: BTreeMap<String, usize> = windows.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let parameters = match parameters {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    Outcome { parameters, payload: Payload::new(checks, windows, data) }
}

fn resolve_tol(flag: Option<f64>) -> Result<f64> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{TOL_ENV}={s} is not a number")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be positive and finite")));
    }
    Ok(tol)
}

fn load_symbol(path: &Path) -> Result<Symbol> {
    io::symbol_from_json(&io::read_text(path)?)
}

fn value_of(text: &str) -> Result<Value> {
    Ok(serde_json::from_str(text)?)
}

fn save(ctx: &Ctx, text: &str) -> Result<()> {
    if let Some(path) = &ctx.out {
        io::write_text(path, text)?;
    }
    Ok(())
}

fn command_name(c: &Command) -> String {
    match c {
        Command::GenExample(_) => "gen-example".into(),
        Command::BuildW(_) => "build-w".into(),
        Command::Adjoint(_) => "adjoint".into(),
        Command::Check { kind, .. } => format!(
            "check {}",
            kind.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
        ),
        Command::Dilate(_) => "dilate".into(),
        Command::Lift(_) => "lift".into(),
        Command::Factor { .. } => "factor".into(),
        Command::Spectrum { .. } => "spectrum".into(),
        Command::WordIndex { .. } => "word-index".into(),
    }
}

fn gen_example(ctx: &Ctx, a: &GenArgs) -> Result<Outcome> {
    let params = json!({
        "name": a.name, "n": a.n, "d": a.d, "level": a.level, "terms": a.terms,
        "size": a.size, "q_angle": a.q_angle, "theta": a.theta, "compress": a.compress,
    });
    if a.name == "compressed-pair" {
        let space = TruncatedFockSpace::new(a.n, a.level, a.d)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let degree = a.level.saturating_sub(a.compress);
        let symbol = crate::random::isometric_symbol(space, degree, &mut rng)?;
        let pair = compress_pair(&symbol, a.compress)?;
        let verdict = verify_pair(&pair, ctx.tol, 4 * a.compress + 16);
        let text = io::pair_to_json(&pair)?;
        save(ctx, &text)?;
        let checks = vec![Check::at_most("pair relations", verdict.max_residual(), ctx.tol)];
        let data = json!({ "pair": value_of(&text)?, "symbol": value_of(&io::symbol_to_json(&symbol)?)? });
        return Ok(outcome(params, checks, &[("compression_level", a.compress)], data));
    }
    let gp = GalleryParams {
        n: a.n,
        d: a.d,
        max_level: a.level,
        terms: a.terms,
        size: a.size,
        q_angle: a.q_angle,
        theta: a.theta,
        tol: ctx.tol,
    };
    let entry = gallery::gallery_by_name(&a.name, &gp)?;
    let mut data = Map::new();
    data.insert("entry".into(), Value::String(entry.name.clone()));
    data.insert("parameters".into(), entry.parameters.clone());
    data.insert("expected".into(), serde_json::to_value(entry.expected)?);
    let mut windows = Vec::new();
    if let Some(symbol) = &entry.symbol {
        let text = io::symbol_to_json(symbol)?;
        save(ctx, &text)?;
        data.insert("symbol".into(), value_of(&text)?);
        windows.push(("max_level", symbol.max_level()));
    } else {
        let mut ops = Map::new();
        for (name, op) in &entry.operators {
            ops.insert(name.clone(), value_of(&io::operator_to_json(op)?)?);
        }
        let value = Value::Object(ops);
        save(ctx, &format!("{}\n", serde_json::to_string(&value)?))?;
        data.insert("operators".into(), value);
        if let Some(w) = entry.parameters.get("window").and_then(Value::as_u64) {
            windows.push(("relation_columns", w as usize));
        }
    }
    Ok(outcome(params, entry.checks, &windows, Value::Object(data)))
}

fn build_w(ctx: &Ctx, a: &SymbolArgs) -> Result<Outcome> {
    let symbol = load_symbol(&a.symbol)?;
    let map = match a.level {
        Some(k) => build_odometer_at(&symbol, k)?,
        None => build_odometer(&symbol)?,
    };
    let space = map.space();
    let verdict = verify_fock_representation(map.operator(), &space, ctx.tol)?;
    let text = io::operator_to_json(map.operator())?;
    save(ctx, &text)?;
    let mut checks: Vec<Check> = verdict
        .relations
        .iter()
        .map(|r| Check::at_most(r.relation.clone(), r.residual, ctx.tol))
        .collect();
    let recovered = match &verdict.symbol {
        Some(s) => (0..symbol.coeff_dim())
            .flat_map(|q| (0..space.dim()).map(move |r| (r, q)))
            .map(|(r, q)| (s.entry(r, q) - map.symbol().entry(r, q)).norm())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    checks.push(Check::at_most("symbol recovered from W(Ω ⊗ ·)", recovered, ctx.tol));
    let bounds = odometer::norm_bounds(&map);
    let data = json!({
        "dim": space.dim(),
        "symbol_norm": bounds.symbol_norm,
        "odometer_norm": bounds.odometer_norm,
        "norm_lower_bound_holds": bounds.lower_holds,
        "norm_upper_bound_holds": bounds.upper_holds,
    });
    Ok(outcome(
        json!({ "symbol": a.symbol, "level": space.max_level() }),
        checks,
        &[("exact_below", map.exact_below()), ("relation_window", verdict.window)],
        data,
    ))
}

fn adjoint(ctx: &Ctx, a: &SymbolArgs) -> Result<Outcome> {
    let symbol = load_symbol(&a.symbol)?;
    let map = match a.level {
        Some(k) => build_odometer_at(&symbol, k)?,
        None => build_odometer(&symbol)?,
    };
    let adj = odometer::adjoint_isometric(&map, ctx.tol)?;
    let text = io::operator_to_json(&adj)?;
    save(ctx, &text)?;
    let formula_residual = linalg::max_abs(&(adj.matrix() - map.operator().truncated_adjoint()));
    let d = symbol.coeff_dim();
    let cols: Vec<usize> = (0..map.operator().window_dim())
        .filter(|c| !symbol.boundary_columns().contains(&(c % d)))
        .collect();
    let w = map.matrix().select_columns(&cols);
    let isometry = linalg::identity_defect(&(w.adjoint() * &w));
    let checks = vec![
        Check::at_most("formula = conjugate transpose", formula_residual, ctx.tol),
        Check::at_most("W^*W = I on interior window", isometry, ctx.tol),
    ];
    Ok(outcome(
        json!({ "symbol": a.symbol, "level": map.space().max_level() }),
        checks,
        &[("exact_below", map.exact_below())],
        json!({ "dim": map.space().dim() }),
    ))
}

fn check(ctx: &Ctx, kind: CheckKind, a: &SymbolArgs) -> Result<Outcome> {
    let symbol = load_symbol(&a.symbol)?;
    let tol = ctx.tol;
    let level = a.level.unwrap_or(symbol.max_level());
    let params = json!({ "symbol": a.symbol, "level": level });
    match kind {
        CheckKind::Representation => {
            let map = build_odometer_at(&symbol, level.min(symbol.max_level()))?;
            let verdict = verify_fock_representation(map.operator(), &map.space(), tol)?;
            let checks = verdict
                .relations
                .iter()
                .map(|r| Check::at_most(r.relation.clone(), r.residual, tol))
                .collect();
            Ok(outcome(params, checks, &[("relation_window", verdict.window)], json!({})))
        }
        CheckKind::Isometry => {
            let iso = classify::check_isometric(&symbol, level, tol, ctx.seed)?;
            let checks = vec![
                Check::at_most("L^*L = I", iso.isometry_residual, tol),
                Check::at_most("e_1 support", iso.e1_support_residual, tol),
                Check::at_most("shifted Gram sums", iso.gram_residual, tol),
                Check::at_most("overflow columns orthonormal", iso.column_residual, tol),
                Check::at_most("random norm defect", iso.random_norm_residual, tol),
            ];
            let data = json!({
                "verdict": iso.verdict,
                "cross_check_agrees": iso.cross_check_agrees,
                "interior_columns": iso.interior_columns,
            });
            Ok(outcome(params, checks, &[("analysis_window", iso.window)], data))
        }
        CheckKind::Nica => {
            let levels = relation_levels(symbol.n(), level, RELATION_WORD_CAP);
            let nica = classify::check_nica(&symbol, tol, levels)?;
            let checks = vec![
                Check::at_most("constant symbol", nica.constant_residual, tol),
                Check::at_most("W^*(S_1 ⊗ I) = (S_n ⊗ I)W^*", nica.relation_residual, tol),
            ];
            let data = json!({
                "verdict": nica.verdict,
                "nica_residual": nica.relation_residual,
                "constant_residual": nica.constant_residual,
                "cross_check_agrees": nica.relation_agrees,
            });
            Ok(outcome(params, checks, &[("relation_levels", levels)], data))
        }
        CheckKind::Unitary => {
            let levels = block_levels(symbol.n(), symbol.coeff_dim(), level, 256);
            let u = classify::check_unitary(&symbol, tol, levels)?;
            let checks = vec![
                Check::at_most("constant symbol", u.constant_residual, tol),
                Check::at_most("level-0 block unitary", u.unitarity_residual, tol),
                Check::at_most("level blocks unitary", u.block_residual, tol),
            ];
            let data = json!({
                "verdict": u.verdict,
                "surjectivity_defect": u.surjectivity_defect,
                "cross_check_agrees": u.block_agrees,
            });
            Ok(outcome(params, checks, &[("block_levels", levels)], data))
        }
    }
}

fn dilate(ctx: &Ctx, a: &PairArgs) -> Result<Outcome> {
    let pair = io::pair_from_json(&io::read_text(&a.pair)?)?;
    let dil = poisson_kernel(&pair.t, a.level, ctx.tol)?;
    let k = dilation::kernel_residuals(&pair.t, &dil);
    let verdict = verify_pair(&pair, ctx.tol, 4 * (a.level + 1) + 64);
    let checks = vec![
        Check::at_most("purity residual", dil.purity_residual, ctx.tol),
        Check::at_most("Π^*Π = I", dil.isometry_defect(), ctx.tol),
        Check::at_most("Π T_i^* = (S_i ⊗ I)^* Π", k.intertwining, ctx.tol),
        Check::at_most("telescoping identity", k.telescoping, ctx.tol),
    ];
    let data = json!({
        "defect_dim": dil.defect_dim(),
        "dim": dil.space.dim(),
        "tail": dil.tail,
        "pair_relations": verdict.max_residual(),
        "pure": verdict.purity.pure,
    });
    Ok(outcome(json!({ "pair": a.pair, "level": a.level }), checks, &[("max_level", a.level)], data))
}

fn lift(ctx: &Ctx, a: &PairArgs) -> Result<Outcome> {
    let pair = io::pair_from_json(&io::read_text(&a.pair)?)?;
    let lift = odometer_lift(&pair, a.level, ctx.tol)?;
    let text = io::symbol_to_json(&lift.symbol)?;
    save(ctx, &text)?;
    let checks = vec![
        Check::at_most("purity residual", lift.dilation.purity_residual, ctx.tol),
        Check::at_most("Π W^* = W_{L'}^* Π", lift.residual, ctx.tol),
    ];
    let data = json!({
        "symbol": value_of(&text)?,
        "pair_norm": lift.pair_norm,
        "lift_norm": lift.lift_norm,
        "defect_dim": lift.dilation.defect_dim(),
    });
    Ok(outcome(json!({ "pair": a.pair, "level": a.level }), checks, &[("lift_window", lift.window)], data))
}

fn factor(ctx: &Ctx, subspace: &Path, symbol: &Path) -> Result<Outcome> {
    let s = io::subspace_from_json(&io::read_text(subspace)?, ctx.tol)?;
    let sym = load_symbol(symbol)?;
    if sym.space() != s.ambient() {
        return Err(Error::DimensionMismatch("symbol and subspace live in different spaces".into()));
    }
    let map = build_odometer(&sym)?;
    let ind = induced_symbol(&s, &map, ctx.tol)?;
    let text = io::symbol_to_json(&ind.symbol)?;
    save(ctx, &text)?;
    let f = &ind.factorization;
    let tol = ctx.tol;
    let checks = vec![
        Check::at_most("S invariant under W_L on window", ind.invariance_residual, tol),
        Check::at_most("Φ^*Φ = I", f.inner_residual, tol),
        Check::at_most("Φ multi-analytic", f.multi_analytic_residual, tol),
        Check::at_most("Φ = i_S Π", f.factor_residual, tol),
        Check::at_most("range Φ covers S", f.coverage_residual, tol),
        Check::at_most("W_L Φ = Φ W_{L_*}", ind.residual, tol),
        Check::at_most("Φ^* W_L Φ = W_{L_*}", ind.compression_residual, tol),
    ];
    let data = json!({
        "subspace_dim": s.dim(),
        "wandering_dim": f.wandering_dim(),
        "wandering_level": f.wandering_level,
        "induced_symbol": value_of(&text)?,
    });
    Ok(outcome(
        json!({ "subspace": subspace, "symbol": symbol }),
        checks,
        &[("budget", f.budget), ("induced_window", ind.window)],
        data,
    ))
}

fn spectrum(ctx: &Ctx, path: &Path, level: usize, bins: usize) -> Result<Outcome> {
    let symbol = load_symbol(path)?;
    let rep = gallery::spectrum_per_level(&symbol, level, ctx.tol)?;
    let mut checks = Vec::new();
    for l in &rep.per_level {
        checks.push(Check::at_most(format!("level {} Hausdorff distance", l.level), l.hausdorff, ctx.tol));
        checks.push(Check::at_most(format!("level {} |λ| = 1", l.level), l.modulus_residual, ctx.tol));
        checks.push(Check::at_most(format!("level {} power identity", l.level), l.power_residual, ctx.tol));
    }
    let data = json!({
        "spectrum": serde_json::to_value(&rep)?,
        "histogram": rep.histogram(bins),
    });
    Ok(outcome(json!({ "symbol": path, "level": level, "bins": bins }), checks, &[("max_level", level)], data))
}

fn word_index(n: usize, level: usize, letters: &[usize]) -> Result<Outcome> {
    let space = TruncatedFockSpace::new(n, level, 1)?;
    let word = Word::new(n, letters.to_vec())?;
    let index = space.word_index(&word)?;
    Ok(outcome(
        json!({ "n": n, "level": level, "letters": letters }),
        Vec::new(),
        &[],
        json!({ "index": index, "word": word.to_string() }),
    ))
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::GenExample(a) => gen_example(ctx, a),
        Command::BuildW(a) => build_w(ctx, a),
        Command::Adjoint(a) => adjoint(ctx, a),
        Command::Check { kind, args } => check(ctx, *kind, args),
        Command::Dilate(a) => dilate(ctx, a),
        Command::Lift(a) => lift(ctx, a),
        Command::Factor { subspace, symbol } => factor(ctx, subspace, symbol),
        Command::Spectrum { symbol, level, bins } => spectrum(ctx, symbol, *level, *bins),
        Command::WordIndex { n, level, letters } => word_index(*n, *level, letters),
    }
}

/// Parses `args`, runs the subcommand and writes the report to `out`.
/// Diagnostics for malformed input go to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let tol = match resolve_tol(cli.tol) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let ctx = Ctx { tol, seed: cli.seed, out: cli.out.clone() };
    let start = Instant::now();
    let result = dispatch(&ctx, &cli.command);
    let (mut parameters, payload) = match result {
        Ok(o) => (o.parameters, o.payload),
        Err(e) if e.is_input_error() => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
        Err(e) => {
            let check = Check::verdict(e.to_string(), false, f64::INFINITY, tol);
            (Map::new(), Payload::new(vec![check], BTreeMap::new(), json!({ "error": e.to_string() })))
        }
    };
    parameters.insert("tol".into(), json!(tol));
    parameters.insert("seed".into(), json!(ctx.seed));
    let report = VerdictReport {
        command: command_name(&cli.command),
        parameters,
        payload,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    match serde_json::to_string(&report) {
        Ok(s) => {
            let _ = writeln!(out, "{s}");
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    }
    if report.passed() { 0 } else { 1 }
}

