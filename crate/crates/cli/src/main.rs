//! Command-line front end: classify diagrams, list roots, compare
//! bicharacters, build simple chains and run the catalog checks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use weylgroupoid::catalog::{
    cross_row_pairs, CatalogError, exhaustive_sweep, verify_appendix, verify_cross_pair, verify_row, Catalog, Table, VerifyOptions,
};
use weylgroupoid::diagram::{build_simple_chain, DiagramError, cartan_type_name, detect_cartan_type, format_diagram_file, parse_diagram_file, SimpleChainSpec};
use weylgroupoid::groupoid::{format_vector, weyl_equivalent, GroupoidError};
use weylgroupoid::scalar::ScalarError;
use weylgroupoid::{explore, BicharacterMatrix, Caps, Execution, TorsionConfig, Verdict};

#[derive(Parser)]
#[command(name = "weylgroupoid", version, about = "Weyl groupoids and root systems of diagonal bicharacters")]
struct Cli {
    /// Order of the group of roots of unity scalars live in.
    #[arg(long, global = true, env = "WEYLGROUPOID_TORSION", default_value_t = 2520)]
    torsion: u32,
    /// Stop exploring after this many bases.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap_bases: usize,
    /// Stop exploring once a coordinate exceeds this in absolute value.
    #[arg(long, global = true, default_value_t = 10_000)]
    cap_coeff: i64,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Do not use the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide fullness and finiteness of a diagram file.
    Classify { file: PathBuf },
    /// Print the positive roots of a finite diagram.
    Roots { file: PathBuf },
    /// Decide Weyl equivalence of two diagrams.
    Equiv { a: PathBuf, b: PathBuf },
    /// Build the simple chain C(d, q; i_1, ..., i_j).
    Chain {
        d: usize,
        q: String,
        indices: Vec<usize>,
    },
    /// Check the built-in classification data.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Subcommand)]
enum Verify {
    /// Explore every table row and compare rows with each other.
    Tables {
        /// rank4 or rank_ge5
        #[arg(long)]
        table: Option<Table>,
        #[arg(long, requires = "table")]
        row: Option<u32>,
        /// Ranks to check family rows at.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
    },
    /// Replay the reflection words certifying finiteness.
    Appendix,
    /// Explore all connected diagrams of rank D with labels in mu_N.
    Sweep { d: usize, n: u32 },
}

/// Failure of a command: bad input (status 2) or a failed check (status 1).
enum Failure {
    Input(String),
    Check(String),
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Input(e.to_string())
            }
        }
    )*};
}

input_error!(ScalarError, DiagramError, GroupoidError, CatalogError);

struct Ctx {
    torsion: TorsionConfig,
    caps: Caps,
    exec: Execution,
    json: bool,
}

impl Ctx {
    fn read(&self, path: &Path) -> Result<BicharacterMatrix, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let file = parse_diagram_file(&text, self.torsion).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        file.matrix().map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn catalog(&self) -> Result<Catalog, Failure> {
        Ok(Catalog::load(self.torsion)?)
    }

    fn emit(&self, value: Value, text: String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
        } else {
            print!("{text}");
        }
    }

    fn opts(&self) -> VerifyOptions {
        VerifyOptions { caps: self.caps, exec: self.exec }
    }
}

fn cartan_name(m: &BicharacterMatrix) -> Option<String> {
    detect_cartan_type(m).ok().flatten().and_then(|a| cartan_type_name(&a))
}

fn classify(ctx: &Ctx, file: &Path) -> Result<(), Failure> {
    let m = ctx.read(file)?;
    let r = explore(&m, ctx.caps);
    let cartan = cartan_name(&m);
    let diagram = m.to_dynkin();
    let mut summary = r.verdict().name().to_string();
    match r.verdict() {
        Verdict::FullFinite => {
            let pos = r.num_roots() / 2;
            summary.push_str(&format!(", {pos} positive roots, {} bases", r.num_bases()));
        }
        Verdict::NotFull { basis, index, other } => {
            summary.push_str(&format!(", a_{},{} undefined at {}", index + 1, other + 1, basis.to_compressed()));
        }
        Verdict::CapExceeded(reason) => summary.push_str(&format!(", {reason:?} cap reached").to_lowercase()),
    }
    if let Some(name) = &cartan {
        summary.push_str(&format!(", Cartan type {name}"));
    }
    let mut value = r.to_json();
    value["cartan_type"] = json!(cartan);
    value["diagram"] = json!(diagram.to_json());
    ctx.emit(value, format!("{summary}\n{diagram}\n"));
    Ok(())
}

fn roots(ctx: &Ctx, file: &Path) -> Result<(), Failure> {
    let m = ctx.read(file)?;
    let r = explore(&m, ctx.caps);
    let pos = r.positive_roots().map_err(|e| Failure::Check(e.to_string()))?;
    let printed: Vec<String> = pos.iter().map(|v| format_vector(v)).collect();
    let mut text = String::new();
    for p in &printed {
        text.push_str(p);
        text.push('\n');
    }
    ctx.emit(json!({ "count": pos.len(), "positive_roots": printed }), text);
    Ok(())
}

fn equiv(ctx: &Ctx, a: &Path, b: &Path) -> Result<(), Failure> {
    let (ma, mb) = (ctx.read(a)?, ctx.read(b)?);
    let eq = match weyl_equivalent(&ma, &mb, ctx.caps) {
        Ok(eq) => eq,
        Err(e @ GroupoidError::NotFinite(_)) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let shared = eq.shared.map(|c| c.to_dynkin());
    let mut text = format!("equivalent: {}\n", eq.equivalent);
    if let Some(g) = &shared {
        text.push_str(&format!("shared diagram: {g}\n"));
    }
    ctx.emit(json!({ "equivalent": eq.equivalent, "shared_diagram": shared.map(|g| g.to_json()) }), text);
    Ok(())
}

fn chain(ctx: &Ctx, d: usize, q: &str, indices: Vec<usize>) -> Result<(), Failure> {
    let q = ctx.torsion.parse(q)?;
    let g = build_simple_chain(&SimpleChainSpec { d, q, indices })?;
    ctx.emit(json!(g.to_json()), format_diagram_file(&g));
    Ok(())
}

fn verify_tables(ctx: &Ctx, table: Option<Table>, row: Option<u32>, dims: &[usize]) -> Result<(), Failure> {
    let cat = ctx.catalog()?;
    let selected: Vec<_> = match (table, row) {
        (Some(t), Some(r)) => vec![cat.row(t, r)?],
        (Some(t), None) => cat.table(t).collect(),
        _ => cat.rows().iter().collect(),
    };
    let mut text = String::new();
    let mut reports = Vec::new();
    let mut failed = 0;
    for r in selected {
        let report = verify_row(&cat, r, dims, &[], ctx.opts());
        let failures: Vec<&String> = report.failures().collect();
        if failures.is_empty() {
            text.push_str(&format!("{} row {}: ok ({} checks)\n", r.table, r.row, report.checks.len()));
        } else {
            failed += 1;
            text.push_str(&format!("{} row {}: FAILED\n", r.table, r.row));
            for f in &failures {
                text.push_str(&format!("  {f}\n"));
            }
        }
        reports.push(report);
    }
    let mut crosses = Vec::new();
    if table.is_none() {
        for pair in cross_row_pairs(&cat, 20) {
            let c = verify_cross_pair(&cat, &pair);
            let ok = c.distinct && c.failure.is_none();
            failed += !ok as usize;
            let l = format!("{} row {} vs {} row {} at d={} {}", pair.left.0, pair.left.1, pair.right.0, pair.right.1, pair.dim, pair.param);
            text.push_str(&format!("{l}: {}\n", if ok { "distinct" } else { "NOT DISTINCT" }));
            crosses.push(c);
        }
    }
    text.push_str(&format!("{failed} failures\n"));
    ctx.emit(json!({ "rows": reports, "cross_pairs": crosses, "failures": failed }), text);
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} table checks failed")));
    }
    Ok(())
}

fn verify_words(ctx: &Ctx) -> Result<(), Failure> {
    let cat = ctx.catalog()?;
    let mut text = String::new();
    let mut all = Vec::new();
    let mut failed = 0;
    for entry in cat.appendix() {
        let checks = verify_appendix(&cat, entry, ctx.opts());
        let bad: Vec<_> = checks.iter().filter(|c| !c.failures.is_empty()).collect();
        failed += bad.len();
        let rows: Vec<String> = entry.rows.iter().map(|r| r.to_string()).collect();
        text.push_str(&format!("{} rows {}: {} of {} ok\n", entry.table, rows.join(","), checks.len() - bad.len(), checks.len()));
        for c in bad {
            text.push_str(&format!("  row {} d={} {} S={:?}: {}\n", c.row, c.dim, c.param, c.indices, c.failures.join("; ")));
        }
        all.extend(checks);
    }
    text.push_str(&format!("{failed} failures\n"));
    ctx.emit(json!({ "checks": all, "failures": failed }), text);
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} reflection word checks failed")));
    }
    Ok(())
}

fn verify_sweep(ctx: &Ctx, d: usize, n: u32) -> Result<(), Failure> {
    let cat = ctx.catalog()?;
    let r = exhaustive_sweep(&cat, d, n, ctx.caps, ctx.exec)?;
    let mut text = format!(
        "rank {d}, labels in mu_{n}\nlabeled diagrams  {}\nconnected classes {}\npruned            {}\nexplored          {}\nfull and finite   {}\nnot full          {}\ncap reached       {}\n",
        r.labeled, r.classes, r.pruned, r.explored, r.survivors, r.not_full, r.cap_exceeded
    );
    if let Some(t) = r.table {
        text.push_str(&format!("{t} classes    {}\nmatched           {}\n", r.table_classes, r.matched));
    }
    text.push_str(&format!("predicate checks  {}\n", r.predicate_checks));
    for x in &r.discrepancies {
        text.push_str(&format!("discrepancy: {x}\n"));
    }
    ctx.emit(serde_json::to_value(&r).expect("serializable"), text);
    if !r.passed() {
        return Err(Failure::Check(format!("{} discrepancies", r.discrepancies.len())));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let torsion = TorsionConfig::new(cli.torsion)?;
    if cli.cap_bases == 0 || cli.cap_coeff <= 0 {
        return Err(Failure::Input("caps must be positive".into()));
    }
    let ctx = Ctx {
        torsion,
        caps: Caps { max_bases: cli.cap_bases, max_coeff: cli.cap_coeff },
        exec: if cli.sequential { Execution::Sequential } else { Execution::default() },
        json: cli.json,
    };
    match cli.command {
        Command::Classify { file } => classify(&ctx, &file),
        Command::Roots { file } => roots(&ctx, &file),
        Command::Equiv { a, b } => equiv(&ctx, &a, &b),
        Command::Chain { d, q, indices } => chain(&ctx, d, &q, indices),
        Command::Verify(Verify::Tables { table, row, dims }) => verify_tables(&ctx, table, row, &dims),
        Command::Verify(Verify::Appendix) => verify_words(&ctx),
        Command::Verify(Verify::Sweep { d, n }) => verify_sweep(&ctx, d, n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
