use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qsd_core::design::{
    admissible, check_parallelism, derived_design, parallelism_pg3, spread_field_reduction, verify_steiner, VerifyMode,
};
use qsd_core::io::{
    design_to_string, load_design, load_parallelism, parallelism_to_string, save_design, save_parallelism,
};
use qsd_core::punctured::{
    build_equation_system, check_solution, construct_s237_5_parts, export_lp, export_rows, parse_rows, Assignment,
    PuncturedParams, UniformSolution,
};
use qsd_core::search::{
    build_ab_candidates, count_zero_column_blocks, extend_packing, load_checkpoint, save_checkpoint,
    search_punctured_6, PackingState, Strategy,
};
use qsd_core::structure::{
    audit_formulas, classify_blocks, no_double_special, normalize_z1_z2, normalize_z1_z3, prefix_distribution_check,
    spread_through_point_check, ForcedBlocks,
};
use qsd_core::subspace::{gaussian_binomial, parse_vector, Grassmannian};
use qsd_core::{DesignMultiset, Error, Field, Subspace};

const SCHEMA: &str = "qsd-report-1";

#[derive(Parser)]
#[command(
    name = "qsd",
    version,
    about = "Subspace designs and q-Steiner systems over small finite fields"
)]
struct Cli {
    /// Report format; JSON is the stable interface.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads for parallel library calls (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian binomial coefficient [n k]_q.
    Gauss {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        q: u32,
    },
    /// Streams every k-subspace of F_q^n in canonical order.
    Enum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: u32,
    },
    /// Divisibility conditions for S_q(t, k, n).
    Admissible {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        q: u32,
    },
    /// Field-reduction spread of F_q^n into k-subspaces.
    Spread {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A parallelism of PG(3, q), written as QSP1.
    Parallelism {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks that every t-subspace lies in exactly (or at most) one block.
    Verify {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Derived design at a point.
    Derive {
        #[arg(long)]
        file: PathBuf,
        /// A nonzero vector, e.g. 0000001.
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Punctured designs and their coverage equations.
    Punctured {
        #[command(subcommand)]
        command: PuncturedCommand,
    },
    /// Explicit constructions.
    Construct {
        #[command(subcommand)]
        command: ConstructCommand,
    },
    /// Closed-form class sizes of an S_q(2,3,7).
    Audit {
        #[arg(long)]
        q: u32,
    },
    /// Block classes and structural checks of a design over F_q^7.
    Classify {
        #[arg(long)]
        file: PathBuf,
    },
    /// Column substitutions moving a design containing Z1 to one containing Z2 or Z3.
    Normalize {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        out: PathBuf,
    },
    /// Packing and punctured-system searches.
    Search {
        #[arg(value_enum)]
        kind: SearchKind,
        #[arg(long, default_value_t = 2)]
        q: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        budget_nodes: u64,
        #[arg(long, default_value = "greedy")]
        strategy: String,
        /// Resume a packing search from a checkpoint.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PuncturedCommand {
    /// Builds the coverage equations of S_q(t, t+1, n) punctured p times.
    BuildEq {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        /// Write an LP model instead of the row format.
        #[arg(long)]
        lp: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluates an equation system on a design or a uniform assignment.
    Check {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, conflicts_with = "uniform", required_unless_present = "uniform")]
        design: Option<PathBuf>,
        /// Multiplicities by dimension, e.g. 1,0,4,16.
        #[arg(long, value_delimiter = ',')]
        uniform: Option<Vec<u64>>,
    },
}

#[derive(Subcommand)]
enum ConstructCommand {
    /// S_q(2,3,7) punctured twice, from a parallelism of PG(3, q).
    #[command(name = "s237-5")]
    S2375 {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        parallelism: Option<PathBuf>,
        /// The q^2 spreads used as A (default 0..q^2).
        #[arg(long, value_delimiter = ',')]
        a_indices: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Z2,
    Z3,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchKind {
    Pack,
    Ab,
    P6,
}

enum CliError {
    Core(Error),
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Capacity { .. }) => 3,
            CliError::Core(Error::SearchFailed(_)) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                Error::UnsupportedField(_) => "unsupported-field",
                Error::InvalidElement { .. } => "invalid-element",
                Error::DivisionByZero(_) => "division-by-zero",
                Error::AmbientMismatch { .. } => "ambient-mismatch",
                Error::Dimension(_) => "dimension",
                Error::Precondition(_) => "precondition",
                Error::Capacity { .. } => "capacity",
                Error::Parse { .. } => "parse",
                Error::SearchFailed(_) => "search-failed",
                Error::Io(_) => "io",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// What a command produced: a JSON report, its text rendering, and whether
/// the checked property held.
struct Outcome {
    command: &'static str,
    report: Value,
    text: String,
    ok: bool,
}

impl Outcome {
    fn new(command: &'static str, report: Value, text: String) -> Self {
        Outcome {
            command,
            report,
            text,
            ok: true,
        }
    }

    fn ok(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }
}

fn envelope(command: &str, report: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), json!(SCHEMA));
    map.insert("command".into(), json!(command));
    match report {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Value::Object(map)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn field(q: u32) -> CliResult<&'static Field> {
    Ok(Field::shared(q)?)
}

fn write_or_return(out: &Option<PathBuf>, content: String) -> CliResult<(Value, String)> {
    match out {
        Some(path) => {
            std::fs::write(path, &content)?;
            Ok((json!({ "out": path }), format!("wrote {}\n", path.display())))
        }
        None => Ok((json!({ "content": content }), content)),
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut a, b) {
        a.extend(b);
    }
    a
}

fn gauss(n: u32, k: u32, q: u32) -> CliResult<Outcome> {
    field(q)?;
    let v = gaussian_binomial(n, k, q);
    let value = match u64::try_from(&v) {
        Ok(x) => json!(x),
        Err(_) => json!(v.to_string()),
    };
    Ok(Outcome::new(
        "gauss",
        json!({ "n": n, "k": k, "q": q, "value": value }),
        format!("{v}\n"),
    ))
}

fn enumerate(n: usize, k: usize, q: u32, format: Format) -> CliResult<()> {
    let f = field(q)?;
    let iter = Grassmannian::new(f, n, k)?;
    let stdout = io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    let result = (|| -> io::Result<()> {
        if format == Format::Json {
            write!(
                w,
                "{{\"schema\":\"{SCHEMA}\",\"command\":\"enum\",\"n\":{n},\"k\":{k},\"q\":{q},\"subspaces\":["
            )?;
            let mut count = 0u64;
            for s in iter {
                if count > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "\"{}\"", s.key())?;
                count += 1;
            }
            writeln!(w, "],\"count\":{count}}}")?;
        } else {
            for s in iter {
                writeln!(w, "{}", s.key())?;
            }
        }
        w.flush()
    })();
    match result {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn admissible_cmd(t: u32, k: u32, n: u32, q: u32) -> CliResult<Outcome> {
    let a = admissible(t, k, n, q)?;
    let ratios: Vec<String> = a.ratios.iter().map(|r| r.to_string()).collect();
    let text = format!(
        "S_{q}({t},{k},{n}): {}\nratios: {}\n",
        if a.admissible { "admissible" } else { "not admissible" },
        ratios.join(" ")
    );
    let report = merge(json!({ "t": t, "k": k, "n": n, "q": q }), to_value(&a));
    Ok(Outcome::new("admissible", report, text).ok(a.admissible))
}

fn spread(q: u32, k: usize, n: usize, out: &Option<PathBuf>) -> CliResult<Outcome> {
    let d = spread_field_reduction(q, k, n)?;
    let check = verify_steiner(&d, 1, k, VerifyMode::Exact)?;
    let (written, text) = write_or_return(out, design_to_string(&d))?;
    let report = merge(
        json!({ "q": q, "k": k, "n": n, "blocks": d.total_size(), "verdict": check.verdict }),
        written,
    );
    Ok(Outcome::new("spread", report, text).ok(check.passes()))
}

fn parallelism(q: u32, out: &Option<PathBuf>) -> CliResult<Outcome> {
    let p = parallelism_pg3(q)?;
    let valid = check_parallelism(q, &p)?;
    let sizes: Vec<u64> = p.iter().map(|s| s.total_size()).collect();
    let (written, text) = match out {
        Some(path) => {
            save_parallelism(path, &p)?;
            (
                json!({ "out": path }),
                format!("wrote {} spreads to {}\n", p.len(), path.display()),
            )
        }
        None => {
            let s = parallelism_to_string(&p);
            (json!({ "content": s }), s)
        }
    };
    let report = merge(
        json!({ "q": q, "spreads": p.len(), "spread_sizes": sizes, "valid": valid }),
        written,
    );
    Ok(Outcome::new("parallelism", report, text).ok(valid))
}

fn verify(file: &Path, t: usize, k: usize, mode: &str) -> CliResult<Outcome> {
    let mode: VerifyMode = mode
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown mode {mode:?} (exact|packing)")))?;
    let d = load_design(file)?;
    let r = verify_steiner(&d, t, k, mode)?;
    let mut text = format!(
        "verdict: {}\nblocks: {}\ncovered: {} of {}\nuncovered: {}\nmultiply covered: {}\ndimension violations: {}\n",
        to_value(&r.verdict).as_str().unwrap_or_default(),
        r.blocks,
        r.covered,
        r.total,
        r.uncovered.len(),
        r.multiply_covered.len(),
        r.dimension_violations.len()
    );
    for m in r.multiply_covered.iter().take(5) {
        text.push_str(&format!("  {} covered {} times\n", m.subspace.key(), m.count));
    }
    let ok = r.passes();
    Ok(Outcome::new("verify", to_value(&r), text).ok(ok))
}

fn derive(file: &Path, point: &str, t: usize, out: &Option<PathBuf>) -> CliResult<Outcome> {
    let d = load_design(file)?;
    let v = parse_vector(point, d.q())?;
    if v.len() != d.ambient_dim() {
        return Err(CliError::Usage(format!(
            "point {point:?} has length {}, not {}",
            v.len(),
            d.ambient_dim()
        )));
    }
    let p = Subspace::span(d.field(), d.ambient_dim(), &[v])?;
    let derived = derived_design(&d, t, &p)?;
    let (written, text) = write_or_return(out, design_to_string(&derived))?;
    let report = merge(
        json!({ "point": p.key(), "blocks": derived.total_size(), "ambient": derived.ambient_dim() }),
        written,
    );
    Ok(Outcome::new("derive", report, text))
}

fn build_eq(q: u32, n: usize, p: usize, t: usize, lp: bool, out: &Option<PathBuf>) -> CliResult<Outcome> {
    let params = PuncturedParams::new(q, t, n, p)?;
    let sys = build_equation_system(&params)?;
    let content = if lp { export_lp(&sys) } else { export_rows(&sys) };
    let (written, text) = write_or_return(out, content)?;
    let report = merge(
        json!({
            "params": params,
            "equations": sys.equations.len(),
            "variables": sys.variables.len(),
        }),
        written,
    );
    Ok(Outcome::new("punctured-build-eq", report, text))
}

fn check(system: &Path, design: &Option<PathBuf>, uniform: &Option<Vec<u64>>) -> CliResult<Outcome> {
    let sys = parse_rows(&std::fs::read_to_string(system)?)?;
    let r = match (design, uniform) {
        (Some(path), _) => check_solution(&sys, Assignment::Design(&load_design(path)?))?,
        (None, Some(values)) => check_solution(
            &sys,
            Assignment::Uniform(&UniformSolution::new(sys.params.m, values.clone())),
        )?,
        (None, None) => return Err(CliError::Usage("one of --design or --uniform is required".into())),
    };
    let mut text = format!(
        "{}\nsatisfied: {} of {} equations\n",
        if r.consistent { "consistent" } else { "inconsistent" },
        r.satisfied,
        r.equations
    );
    for v in r.violations.iter().take(5) {
        text.push_str(&format!("  X={} lhs={} rhs={}\n", v.x.key(), v.lhs, v.rhs));
    }
    if !r.stray_blocks.is_empty() {
        text.push_str(&format!("stray blocks: {}\n", r.stray_blocks.len()));
    }
    let ok = r.consistent;
    Ok(Outcome::new("punctured-check", to_value(&r), text).ok(ok))
}

fn construct(q: u32, parallelism: &Option<PathBuf>, a_indices: &Option<Vec<usize>>, out: &Path) -> CliResult<Outcome> {
    field(q)?;
    let p = match parallelism {
        Some(path) => load_parallelism(path)?,
        None => parallelism_pg3(q)?,
    };
    let a: Vec<usize> = a_indices.clone().unwrap_or_else(|| (0..(q * q) as usize).collect());
    let parts = construct_s237_5_parts(q, &p, &a)?;
    let d = parts.union();
    save_design(out, &d)?;
    let sizes = [
        parts.planes.total_size(),
        parts.a_lines.total_size(),
        parts.b_lines.total_size(),
        parts.zero.total_size(),
    ];
    let text = format!(
        "blocks: {} = {} + {} + {} + {}\nwrote {}\n",
        d.total_size(),
        sizes[0],
        sizes[1],
        sizes[2],
        sizes[3],
        out.display()
    );
    let report = json!({
        "q": q,
        "a_indices": a,
        "blocks": d.total_size(),
        "parts": { "planes": sizes[0], "a_lines": sizes[1], "b_lines": sizes[2], "zero": sizes[3] },
        "out": out,
    });
    Ok(Outcome::new("construct-s237-5", report, text))
}

fn audit(q: u32) -> CliResult<Outcome> {
    field(q)?;
    let a = audit_formulas(q);
    let holds = a.identity_holds();
    let text = format!(
        "sizeA: {}\nsizeB: {}\nsizeAB: {}\nsizeAonly: {}\nresidual: {}\ntotal: {}\nidentity: {}\n",
        a.size_a,
        a.size_b,
        a.size_ab,
        a.size_a_only,
        a.residual,
        a.total,
        if holds { "holds" } else { "fails" }
    );
    let report = merge(to_value(&a), json!({ "identity_holds": holds }));
    Ok(Outcome::new("audit", report, text).ok(holds))
}

fn classify(file: &Path) -> CliResult<Outcome> {
    let d = load_design(file)?;
    let counts = classify_blocks(&d)?.counts();
    let audit = audit_formulas(d.q() as u32);
    let within = counts.within(&audit);
    let double = no_double_special(&d)?;
    let z = ForcedBlocks::new(d.q());
    let prefix = if d.contains(&z.z1) {
        Some(prefix_distribution_check(&d)?)
    } else {
        None
    };
    let mut spreads = Vec::new();
    for i in 1..=7 {
        let r = spread_through_point_check(&d, i)?;
        spreads.push(json!({ "point": i, "verdict": r.verdict, "passes": r.passes() }));
    }
    let spreads_ok = spreads.iter().all(|s| s["passes"] == json!(true));
    let over = prefix.as_ref().map_or(0, |p| p.over_bound);
    let ok = within && double.is_empty() && over == 0 && spreads_ok;
    let mut text = format!(
        "Z: {}\nA only: {}\nB only: {}\nA and B: {}\nrest: {}\ntotal: {}\nwithin full-system sizes: {}\ndouble-special blocks: {}\n",
        counts.z,
        counts.a_only,
        counts.b_only,
        counts.ab,
        counts.rest,
        counts.total,
        within,
        double.len()
    );
    if let Some(p) = &prefix {
        text.push_str(&format!(
            "prefix tallies: complete={} over bound={}\n",
            p.complete, p.over_bound
        ));
    }
    text.push_str(&format!(
        "spreads through e1..e7: {}\n",
        if spreads_ok { "ok" } else { "violated" }
    ));
    let report = json!({
        "q": d.q(),
        "counts": counts,
        "audit": audit,
        "within": within,
        "double_special": double,
        "prefix": prefix,
        "spreads_through_points": spreads,
    });
    Ok(Outcome::new("classify", report, text).ok(ok))
}

fn normalize(file: &Path, target: Target, out: &Path) -> CliResult<Outcome> {
    let d = load_design(file)?;
    let n = match target {
        Target::Z2 => normalize_z1_z2(&d)?,
        Target::Z3 => normalize_z1_z3(&d)?,
    };
    save_design(out, &n)?;
    let before = verify_steiner(&d, 2, 3, VerifyMode::Packing)?.verdict;
    let after = verify_steiner(&n, 2, 3, VerifyMode::Packing)?.verdict;
    let name = match target {
        Target::Z2 => "z2",
        Target::Z3 => "z3",
    };
    let text = format!("normalized to Z1, {}\nwrote {}\n", name.to_uppercase(), out.display());
    let report = json!({
        "target": name,
        "blocks": n.total_size(),
        "verdict_before": before,
        "verdict_after": after,
        "out": out,
    });
    Ok(Outcome::new("normalize", report, text).ok(before == after))
}

fn packing_report(state: &PackingState, d: &DesignMultiset) -> Value {
    json!({
        "q": state.q,
        "seed": state.seed,
        "blocks": state.blocks.len(),
        "free_blocks": state.free_count(),
        "nodes": state.stats.nodes,
        "wall_ms": state.stats.wall_ms,
        "zero_column_blocks": count_zero_column_blocks(d).len(),
    })
}

#[allow(clippy::too_many_arguments)]
fn search(
    kind: SearchKind,
    q: u8,
    seed: u64,
    budget: u64,
    strategy: &str,
    from: &Option<PathBuf>,
    out: &Path,
) -> CliResult<Outcome> {
    let strategy: Strategy = strategy
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown strategy {strategy:?} (greedy|dlx-first|dlx-best)")))?;
    match kind {
        SearchKind::Pack => {
            let state = match from {
                Some(path) => {
                    let (mut s, _) = load_checkpoint(path)?;
                    s.seed = seed;
                    s
                }
                None => PackingState::z1_z2(q, seed)?,
            };
            let res = extend_packing(&state, budget, strategy)?;
            save_checkpoint(out, &res, budget, strategy)?;
            let d = res.design();
            let report = merge(
                packing_report(&res, &d),
                json!({ "strategy": strategy, "budget_nodes": budget, "out": out }),
            );
            let text = format!(
                "packing of {} blocks after {} nodes\nwrote {}\n",
                res.blocks.len(),
                res.stats.nodes,
                out.display()
            );
            Ok(Outcome::new("search-pack", report, text))
        }
        SearchKind::Ab => {
            let (res, ab) = build_ab_candidates(q, seed, budget, strategy)?;
            save_checkpoint(out, &res, budget, strategy)?;
            let d = res.design();
            let report = merge(
                packing_report(&res, &d),
                json!({ "strategy": strategy, "budget_nodes": budget, "ab": ab, "out": out }),
            );
            let text = format!(
                "A/B blocks: {} of {} (A and B: {} of {})\nwrote {}\n",
                ab.size,
                ab.target,
                ab.ab_class,
                ab.ab_target,
                out.display()
            );
            Ok(Outcome::new("search-ab", report, text))
        }
        SearchKind::P6 => {
            let (d, r, rows) = search_punctured_6(q as u32, budget)?;
            save_design(out, &d)?;
            let mut eq_path = out.as_os_str().to_owned();
            eq_path.push(".eq");
            let eq_path = PathBuf::from(eq_path);
            std::fs::write(&eq_path, rows)?;
            let text = format!(
                "{} of {} equations satisfied after {} nodes{}\nwrote {} and {}\n",
                r.max_satisfied,
                r.equations,
                r.nodes,
                if r.solved { " (solved)" } else { "" },
                out.display(),
                eq_path.display()
            );
            let report = merge(to_value(&r), json!({ "out": out, "system": eq_path }));
            Ok(Outcome::new("search-p6", report, text))
        }
    }
}

fn run(cli: &Cli) -> CliResult<Option<Outcome>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let outcome = match &cli.command {
        Command::Gauss { n, k, q } => gauss(*n, *k, *q)?,
        Command::Enum { n, k, q } => {
            enumerate(*n, *k, *q, cli.format)?;
            return Ok(None);
        }
        Command::Admissible { t, k, n, q } => admissible_cmd(*t, *k, *n, *q)?,
        Command::Spread { q, k, n, out } => spread(*q, *k, *n, out)?,
        Command::Parallelism { q, out } => parallelism(*q, out)?,
        Command::Verify { file, t, k, mode } => verify(file, *t, *k, mode)?,
        Command::Derive { file, point, t, out } => derive(file, point, *t, out)?,
        Command::Punctured { command } => match command {
            PuncturedCommand::BuildEq { q, n, p, t, lp, out } => build_eq(*q, *n, *p, *t, *lp, out)?,
            PuncturedCommand::Check {
                system,
                design,
                uniform,
            } => check(system, design, uniform)?,
        },
        Command::Construct { command } => match command {
            ConstructCommand::S2375 {
                q,
                parallelism,
                a_indices,
                out,
            } => construct(*q, parallelism, a_indices, out)?,
        },
        Command::Audit { q } => audit(*q)?,
        Command::Classify { file } => classify(file)?,
        Command::Normalize { file, target, out } => normalize(file, *target, out)?,
        Command::Search {
            kind,
            q,
            seed,
            budget_nodes,
            strategy,
            from,
            out,
        } => search(*kind, *q, *seed, *budget_nodes, strategy, from, out)?,
    };
    Ok(Some(outcome))
}

fn report_error(e: &CliError, json: bool) -> ExitCode {
    let code = e.exit_code();
    if json {
        let v = json!({
            "schema": SCHEMA,
            "error": { "kind": e.kind(), "message": e.message(), "exit_code": code },
        });
        eprintln!("{v}");
    } else {
        eprintln!("qsd: {}", e.message());
    }
    ExitCode::from(code)
}

fn wants_json() -> bool {
    let args: Vec<String> = std::env::args().collect();
    args.windows(2).any(|w| w[0] == "--format" && w[1] == "json") || args.iter().any(|a| a == "--format=json")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) if wants_json() => {
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let text = text.join(" ");
            return report_error(&CliError::Usage(text.trim_start_matches("error: ").to_string()), true);
        }
        Err(e) => e.exit(),
    };
    let json = cli.format == Format::Json;
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(o)) => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let written = if json {
                writeln!(w, "{}", envelope(o.command, merge(o.report, json!({ "ok": o.ok }))))
            } else {
                w.write_all(o.text.as_bytes())
            };
            if let Err(e) = written.and_then(|_| w.flush()) {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    return report_error(&e.into(), json);
                }
            }
            ExitCode::from(if o.ok { 0 } else { 1 })
        }
        Err(e) => report_error(&e, json),
    }
}
