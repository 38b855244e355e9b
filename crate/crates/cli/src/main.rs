use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use toeplitz::density::{d_exact, regularity_verdict};
use toeplitz::factor::{fiber_profile, pi_by_membership, pi_of_orbit};
use toeplitz::measures::{a_counts, limit_01, mu_cylinder, Pattern, PeriodicMeasure};
use toeplitz::periods::{essential_check, partitions_c_check, per1_structure_check, per_eq_check, per_set, PeriodTable};
use toeplitz::scalar::{decimal_string, fraction_string, rational_json};
use toeplitz::skeleton::{SkeletonFile, SymbolWindow};
use toeplitz::tower::validate_domains;
use toeplitz::verify::{check_names, run_all, run_check, CheckParams};
use toeplitz::{presets, Budget, CheckResult, GroupElement, QuotientTower, Rational, ToeplitzSkeleton, TowerConfig};

#[derive(Parser)]
#[command(name = "toeplitz", version, about = "Irregular Toeplitz arrays over group towers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tower configuration.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Construction of η.
    #[command(subcommand)]
    Eta(EtaCmd),
    /// Period sets.
    #[command(subcommand)]
    Periods(PeriodsCmd),
    /// Density and periodic measures.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// The odometer factor map.
    #[command(subcommand)]
    Factor(FactorCmd),
    /// Run one named check, or `all`.
    Verify {
        name: String,
        #[command(flatten)]
        src: Source,
        /// Upper level of the checked range.
        #[arg(long)]
        level: Option<usize>,
        /// CSV window (as written by `eta window`) replacing η for window-based checks.
        #[arg(long)]
        window: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

/// Where the tower (and the construction depth) come from.
#[derive(Args, Clone)]
struct Source {
    /// Preset name: threeadic, threeadic-centered, irregular-demo.
    #[arg(long, conflicts_with_all = ["config", "skeleton"])]
    preset: Option<String>,
    /// Tower config JSON file.
    #[arg(long, conflicts_with = "skeleton")]
    config: Option<PathBuf>,
    /// Saved skeleton JSON (from `eta build`).
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// Construction depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Seed for sampled checks (also TOEPLITZ_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct Output {
    /// Write a JSON report to this path (`-` for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Check the decomposition axioms of the fundamental domains.
    Validate {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        max_level: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowFormat {
    Csv,
    Bits,
    Pgm,
}

#[derive(Subcommand)]
enum EtaCmd {
    /// Run the construction and save its step records.
    Build {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        report: Output,
    },
    /// Evaluate η at one group element, e.g. `-g 14` or `-g "(1,2)"`.
    Eval {
        #[command(flatten)]
        src: Source,
        #[arg(short = 'g', long = "element", allow_hyphen_values = true)]
        g: String,
        #[command(flatten)]
        out: Output,
    },
    /// Export η on D_level.
    Window {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: WindowFormat,
        /// Output file; csv goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PeriodsCmd {
    /// List Per(η, Γ_level, symbol) by coset representatives.
    Show {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        symbol: u8,
        /// Write the coset set as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// One of per-eq, essential, periodo1, partitions-c.
    Check {
        name: String,
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        level: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Density sequence, the series L and the regularity verdict.
    Density {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        levels: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Cylinder frequencies under μ_n, a-counts and the limits of μ_n([0]), μ_n([1]).
    Measures {
        #[command(flatten)]
        src: Source,
        /// Levels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Pattern file: `{"support": [...], "values": [...]}` or an array of them.
        #[arg(long)]
        cylinders: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum FactorCmd {
    /// π(σ^{v⁻¹}η) as its sequence of cosets.
    Pi {
        #[command(flatten)]
        src: Source,
        #[arg(short = 'v', long = "element", allow_hyphen_values = true)]
        v: String,
        /// Also derive π from C_n membership and compare.
        #[arg(long)]
        cross_check: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Distinct D_level windows over each coset of Γ_level.
    Fibers {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

/// Failure of a check, as opposed to a usage or configuration error.
#[derive(Debug)]
struct CheckFailed;

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn env_u64(key: &str) -> Result<Option<u64>> {
    match std::env::var(key) {
        Ok(v) => {
            let x: u64 = v.trim().parse().with_context(|| format!("{key}={v:?} is not a positive integer"))?;
            if x == 0 {
                bail!("{key} must be positive");
            }
            Ok(Some(x))
        }
        Err(_) => Ok(None),
    }
}

/// Budget from the defaults, `TOEPLITZ_ENUMERATION`, `TOEPLITZ_WINDOW_CELLS`,
/// `TOEPLITZ_SAMPLES`, `TOEPLITZ_SEED`, then `--seed`.
fn budget(src: &Source) -> Result<Budget> {
    let mut b = Budget::default();
    if let Some(x) = env_u64("TOEPLITZ_ENUMERATION")? {
        b.enumeration = x;
    }
    if let Some(x) = env_u64("TOEPLITZ_WINDOW_CELLS")? {
        b.window_cells = x;
    }
    if let Some(x) = env_u64("TOEPLITZ_SAMPLES")? {
        b.samples = x as usize;
    }
    if let Ok(v) = std::env::var("TOEPLITZ_SEED") {
        b.seed = v.trim().parse().with_context(|| format!("TOEPLITZ_SEED={v:?}"))?;
    }
    if let Some(s) = src.seed {
        b.seed = s;
    }
    Ok(b)
}

fn tower_config(src: &Source) -> Result<TowerConfig> {
    match (&src.preset, &src.config) {
        (Some(p), _) => Ok(presets::by_name(p)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(TowerConfig::from_json(&text)?)
        }
        (None, None) => bail!("give --preset, --config or --skeleton"),
    }
}

fn skeleton(src: &Source, default_depth: usize) -> Result<ToeplitzSkeleton> {
    if let Some(path) = &src.skeleton {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: SkeletonFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(ToeplitzSkeleton::from_file(&file)?);
    }
    let config = tower_config(src)?;
    Ok(ToeplitzSkeleton::from_config(&config, src.depth.unwrap_or(default_depth))?)
}

/// Reads a CSV window; its level is the one whose domain has as many rows.
fn read_window(sk: &ToeplitzSkeleton, path: &Path) -> Result<SymbolWindow> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
    let t = sk.tower();
    let level = (0..=t.depth())
        .find(|&n| *t.size(n) == num_bigint::BigUint::from(rows))
        .with_context(|| format!("{} rows match no domain size", rows))?;
    Ok(SymbolWindow::from_csv(t, level, &text)?)
}

fn emit(out: &Output, value: serde_json::Value) -> Result<()> {
    let Some(path) = &out.json else { return Ok(()) };
    let text = serde_json::to_string_pretty(&value)? + "\n";
    if path == Path::new("-") {
        print!("{text}");
    } else {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn quiet(out: &Output) -> bool {
    out.json.as_deref() == Some(Path::new("-"))
}

fn show(r: &Rational) -> String {
    format!("{} ≈ {}", fraction_string(r), decimal_string(r, 12))
}

fn finish_check(result: CheckResult, out: &Output) -> Result<()> {
    if !quiet(out) {
        println!("{result}");
        for w in &result.witnesses {
            println!("  {w}");
        }
    }
    emit(out, serde_json::to_value(&result)?)?;
    if result.is_fail() {
        return Err(CheckFailed.into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Tower(TowerCmd::Validate { src, max_level, out }) => {
            let b = budget(&src)?;
            let tower = QuotientTower::build(&tower_config(&src)?)?;
            let max = max_level.unwrap_or(tower.depth()).min(tower.depth());
            let mut domains = Vec::new();
            for n in 0..=max {
                domains.push(tower.enumerate(n, &b)?);
            }
            finish_check(validate_domains(&tower, &domains), &out)
        }
        Command::Eta(cmd) => eta(cmd),
        Command::Periods(cmd) => periods(cmd),
        Command::Analyze(cmd) => analyze(cmd),
        Command::Factor(cmd) => factor(cmd),
        Command::Verify { name, src, level, window, out } => {
            let b = budget(&src)?;
            let sk = skeleton(&src, 5)?;
            let window = match window {
                Some(path) => Some(read_window(&sk, &path)?),
                None => None,
            };
            if name == "all" && window.is_some() {
                bail!("--window applies to a single check");
            }
            if name == "all" {
                let report = run_all(&sk, &b);
                if !quiet(&out) {
                    print!("{}", report.render());
                }
                emit(&out, report.to_json())?;
                if report.any_fail() {
                    return Err(CheckFailed.into());
                }
                return Ok(());
            }
            if !check_names().contains(&name.as_str()) {
                bail!("unknown check {name:?}; known: all, {}", check_names().join(", "));
            }
            let result = run_check(&sk, &name, &CheckParams { level, window }, &b)?;
            finish_check(result, &out)
        }
    }
}

fn eta(cmd: EtaCmd) -> Result<()> {
    match cmd {
        EtaCmd::Build { src, out, report } => {
            let sk = skeleton(&src, 4)?;
            let file = sk.to_file();
            let text = serde_json::to_string_pretty(&file)? + "\n";
            if let Some(path) = &out {
                fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            if !quiet(&report) {
                println!("depth {}", sk.depth());
                for r in sk.h_records() {
                    println!("step {}: h = {} (block {}, slot {})", r.step, r.h, r.block, r.slot);
                }
                for v in sk.linking() {
                    println!("block {} linking: {}", v.block, if v.ok { "ok" } else { "fails" });
                }
                println!("closing levels M ∩ [1, {}] = {:?}", sk.depth(), sk.m_levels(sk.depth()));
            }
            emit(&report, serde_json::to_value(&file)?)
        }
        EtaCmd::Eval { src, g, out } => {
            let sk = skeleton(&src, 4)?;
            let g = GroupElement::parse(&g)?;
            let value = sk.eval(&g)?;
            let level = sk.level_of(&g)?;
            match value {
                Some(v) if !quiet(&out) => println!("{v}"),
                Some(_) => {}
                None => bail!("η({g}) is not determined at depth {}", sk.depth()),
            }
            emit(&out, json!({"element": g.to_string(), "value": value, "level": level}))
        }
        EtaCmd::Window { src, level, format, out } => {
            let b = budget(&src)?;
            let sk = skeleton(&src, level.max(1))?;
            let w = sk.materialize_window(level, &b)?;
            let bytes = match format {
                WindowFormat::Csv => w.to_csv(sk.tower())?.into_bytes(),
                WindowFormat::Bits => w.to_bits(),
                WindowFormat::Pgm => w.to_pgm(sk.tower())?,
            };
            match out {
                Some(path) => fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                }
            }
            Ok(())
        }
    }
}

fn periods(cmd: PeriodsCmd) -> Result<()> {
    match cmd {
        PeriodsCmd::Show { src, level, symbol, csv, out } => {
            if symbol > 1 {
                bail!("--symbol must be 0 or 1");
            }
            let b = budget(&src)?;
            let sk = skeleton(&src, level.max(1))?;
            let set = per_set(&sk, level, symbol, &b)?;
            let elements = set.elements(sk.tower())?;
            if !quiet(&out) {
                println!("Per(η, Γ_{level}, {symbol}): {} cosets", elements.len());
                let list: Vec<String> = elements.iter().map(|e| e.to_string()).collect();
                println!("{}", list.join(" "));
            }
            if let Some(path) = csv {
                fs::write(&path, set.to_csv(sk.tower())?).with_context(|| format!("writing {}", path.display()))?;
            }
            emit(
                &out,
                json!({"level": level, "symbol": symbol, "cosets": elements.iter().map(|e| e.to_string()).collect::<Vec<_>>()}),
            )
        }
        PeriodsCmd::Check { name, src, level, out } => {
            let b = budget(&src)?;
            let sk = skeleton(&src, 5)?;
            let n = level.unwrap_or(sk.depth());
            let result = match name.as_str() {
                "per-eq" => per_eq_check(&sk, n, &b),
                "essential" => {
                    let table = PeriodTable::from_skeleton(&sk, n, &b)?;
                    essential_check(sk.tower(), &table)?
                }
                "periodo1" => per1_structure_check(&sk, n, &b),
                "partitions-c" => partitions_c_check(&sk, level.unwrap_or(3), b.samples, b.seed, &b),
                other => bail!("unknown period check {other:?}; known: per-eq, essential, periodo1, partitions-c"),
            };
            finish_check(result, &out)
        }
    }
}

fn analyze(cmd: AnalyzeCmd) -> Result<()> {
    match cmd {
        AnalyzeCmd::Density { src, levels, out } => {
            let b = budget(&src)?;
            let config = tower_config(&src)?;
            let tower = QuotientTower::build(&config)?;
            let report = regularity_verdict(&tower, levels)?;
            let mut value = report.to_json();
            // The enumeration route needs the construction itself, so only where it is cheap.
            let depth = src.depth.unwrap_or(levels).min(levels).min(tower.depth());
            if depth >= 1 && b.enumerable(tower.size(depth)) {
                let sk = ToeplitzSkeleton::from_config(&config, depth)?;
                let triples: Vec<_> = (1..=depth)
                    .map(|n| d_exact(&sk, n, &b).map(|t| json!({"level": n, "d": rational_json(t.value()), "routes_agree": true})))
                    .collect::<toeplitz::Result<_>>()?;
                value["triples"] = json!(triples);
            }
            if !quiet(&out) {
                print!("{}", report.render());
            }
            emit(&out, value)
        }
        AnalyzeCmd::Measures { src, levels, cylinders, out } => {
            let b = budget(&src)?;
            let max = levels.iter().copied().max().unwrap_or(1);
            let sk = skeleton(&src, max + 1)?;
            let t = sk.tower();
            let patterns = match &cylinders {
                Some(path) => Pattern::list_from_json(
                    &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => Vec::new(),
            };
            let mut rows = Vec::new();
            for &n in &levels {
                let counts = a_counts(&sk, n)?;
                let mut row = json!({
                    "level": n,
                    "a0": counts.a0.to_string(),
                    "a1": counts.a1.to_string(),
                    "j": counts.j.to_string(),
                    "det": counts.det().to_string(),
                });
                if !quiet(&out) {
                    println!("n = {n}: a_0 = {}, a_1 = {}, |J| = {}, det A_n = {}", counts.a0, counts.a1, counts.j, counts.det());
                }
                if !patterns.is_empty() {
                    let m = PeriodicMeasure::new(&sk, n, &b)?;
                    let mut freqs = Vec::new();
                    for p in &patterns {
                        let mu = mu_cylinder(&m, t, p)?;
                        if !quiet(&out) {
                            println!("  μ_{n}({p}) = {}", show(&mu));
                        }
                        freqs.push(json!({"pattern": p.to_string(), "mu": rational_json(&mu)}));
                    }
                    row["cylinders"] = json!(freqs);
                }
                rows.push(row);
            }
            let mut value = json!({"levels": rows});
            if let Ok(lim) = limit_01(&sk, sk.depth()) {
                let enc = |e: &toeplitz::measures::Enclosure| json!({"lo": rational_json(&e.lo), "hi": rational_json(&e.hi)});
                if !quiet(&out) {
                    println!("lim μ_n([0]) ∈ [{}, {}]", show(&lim.mu0.lo), show(&lim.mu0.hi));
                    println!("lim μ_n([1]) ∈ [{}, {}]", show(&lim.mu1.lo), show(&lim.mu1.hi));
                }
                value["limit"] = json!({"mu0": enc(&lim.mu0), "mu1": enc(&lim.mu1)});
            }
            emit(&out, value)
        }
    }
}

fn factor(cmd: FactorCmd) -> Result<()> {
    match cmd {
        FactorCmd::Pi { src, v, cross_check, out } => {
            let b = budget(&src)?;
            let sk = skeleton(&src, 4)?;
            let v = GroupElement::parse(&v)?;
            let p = pi_of_orbit(&sk, &v, sk.depth())?;
            if cross_check {
                let q = pi_by_membership(&sk, &v, sk.depth(), &b)?;
                if q != p {
                    eprintln!("reduction {p} and membership {q} disagree");
                    return Err(CheckFailed.into());
                }
            }
            if !quiet(&out) {
                println!("{p}");
            }
            emit(&out, json!({"v": v.to_string(), "depth": p.depth, "cosets": p.cosets.iter().map(|c| c.to_string()).collect::<Vec<_>>()}))
        }
        FactorCmd::Fibers { src, level, csv, out } => {
            let b = budget(&src)?;
            let sk = skeleton(&src, level + 1)?;
            let q = sk.tower().quotient(level)?;
            let profile = fiber_profile(&sk, level, &b)?;
            let mut text = String::from("coset,windows\n");
            for (c, k) in &profile {
                text.push_str(&format!("{},{k}\n", q.element(*c)));
            }
            match csv {
                Some(path) => fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?,
                None if !quiet(&out) => print!("{text}"),
                None => {}
            }
            emit(
                &out,
                json!({"level": level, "fibers": profile.iter().map(|(c, k)| json!({"coset": q.element(*c).to_string(), "windows": k})).collect::<Vec<_>>()}),
            )
        }
    }
}
