//! Command-line front end: solve, decompose, verify, gen, bench.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 parse error, 3 resource
//! budget exceeded.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use splitmatch::decomp::{decompose_minimal, VertKind};
use splitmatch::graph::{validate_bmatching, BMatching, CapacityMap, Graph};
use splitmatch::io::{parse_graph, parse_result, result_doc, serialize_graph, serialize_result};
use splitmatch::solver::{solve_bmatching_with, SolveConfig, SolveMode};
use splitmatch::testkit::{gen_bounded_splitwidth, gen_distance_hereditary};
use splitmatch::Error;

#[derive(Parser)]
#[command(
    name = "splitmatch",
    version,
    about = "b-matching on bounded split-width graphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve b-matching (or maximum matching) for a graph file.
    Solve(SolveArgs),
    /// Print the minimal split decomposition of a graph file.
    Decompose(DecomposeArgs),
    /// Check a result document against a graph file.
    Verify(VerifyArgs),
    /// Generate a random instance and write it in graph-file format.
    Gen(GenArgs),
    /// Time the solver across instance sizes and fit a scaling slope.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Kernel,
    Splitdp,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> SolveMode {
        match m {
            ModeArg::Auto => SolveMode::Auto,
            ModeArg::Kernel => SolveMode::Kernel,
            ModeArg::Splitdp => SolveMode::SplitDp,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Graph file.
    path: PathBuf,
    /// Solver dispatch: auto picks by order.
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    /// Ignore capacities in the file and solve maximum matching.
    #[arg(long)]
    maxmatching: bool,
    /// Write the result document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    path: PathBuf,
    /// Emit graphviz dot instead of the line format.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct VerifyArgs {
    graph: PathBuf,
    result: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Dh,
    Swk,
}

#[derive(Args)]
struct GenArgs {
    /// Instance family: dh (distance-hereditary) or swk (bounded width).
    #[arg(long, value_enum, default_value = "dh")]
    family: Family,
    /// Vertex count target.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Width bound for the swk family.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "dh")]
    family: Family,
    /// Comma-separated instance sizes.
    #[arg(long, default_value = "1024,2048,4096,8192")]
    sizes: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Decompose(a) => cmd_decompose(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } => ExitCode::from(2),
                Error::KernelBudget(_) => ExitCode::from(3),
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn read_graph(path: &PathBuf) -> Result<(Graph, CapacityMap), Error> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text)
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode, Error> {
    let (g, mut b) = read_graph(&a.path)?;
    if a.maxmatching {
        b = CapacityMap::uniform(g.n(), 1);
    }
    let cfg = SolveConfig {
        mode: a.mode.into(),
        ..SolveConfig::default()
    };
    let r = solve_bmatching_with(&g, &b, &cfg)?;
    let doc = result_doc(&g, &r.matching, Some(r.stats));
    let text = serialize_result(&doc);
    match a.out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decompose(a: DecomposeArgs) -> Result<ExitCode, Error> {
    let (g, _) = read_graph(&a.path)?;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let tree = decompose_minimal(&g)?;
    let name = |ci: usize, vi: usize| -> String {
        let v = &tree.components[ci].verts[vi];
        match v.kind {
            VertKind::Original => v.gid.to_string(),
            VertKind::Marker { edge, .. } => format!("s{edge}"),
        }
    };
    if a.dot {
        println!("graph splitdecomp {{");
        for (ci, comp) in tree.components.iter().enumerate() {
            println!("  subgraph cluster_{ci} {{ label=\"c{ci}\";");
            for (vi, _) in comp.verts.iter().enumerate() {
                println!("    \"{ci}_{}\" [label=\"{}\"];", vi, name(ci, vi));
            }
            for e in &comp.edges {
                println!("    \"{ci}_{}\" -- \"{ci}_{}\";", e.a, e.b);
            }
            println!("  }}");
        }
        for te in &tree.tree_edges {
            println!(
                "  \"{}_{}\" -- \"{}_{}\" [style=dashed];",
                te.comp_a, te.local_a, te.comp_b, te.local_b
            );
        }
        println!("}}");
        return Ok(ExitCode::SUCCESS);
    }
    let rooted = tree.rooted();
    for (ci, comp) in tree.components.iter().enumerate() {
        let verts: Vec<String> = (0..comp.verts.len()).map(|vi| name(ci, vi)).collect();
        println!("c {ci} {} {}", comp.order(), verts.join(" "));
    }
    for (ei, te) in tree.tree_edges.iter().enumerate() {
        // Orient parent -> child from the root.
        let (parent, child, pm, cm) = if rooted.parent_edge[te.comp_b] == ei {
            (te.comp_a, te.comp_b, te.marker_a_gid, te.marker_b_gid)
        } else {
            (te.comp_b, te.comp_a, te.marker_b_gid, te.marker_a_gid)
        };
        println!("t {parent} {child} {pm} {cm}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode, Error> {
    let (g, b) = read_graph(&a.graph)?;
    let doc = parse_result(&fs::read_to_string(&a.result)?)?;
    let mut x = BMatching::zero(g.m());
    for &[u, v, w] in &doc.edges {
        if u < 0 || v < 0 || w < 0 {
            println!("verify: FAIL negative entry in result");
            return Ok(ExitCode::from(1));
        }
        let (u, v) = (u as usize, v as usize);
        match (u < g.n() && v < g.n()).then(|| g.edge_id(u, v)).flatten() {
            Some(eid) => x.add(eid, w),
            None => {
                println!("verify: FAIL unknown edge ({u}, {v})");
                return Ok(ExitCode::from(1));
            }
        }
    }
    match validate_bmatching(&g, &b, &x) {
        Err(v) => {
            println!("verify: FAIL {v}");
            Ok(ExitCode::from(1))
        }
        Ok(card) if card != doc.cardinality => {
            println!(
                "verify: FAIL cardinality mismatch: document says {}, weights sum to {card}",
                doc.cardinality
            );
            Ok(ExitCode::from(1))
        }
        Ok(card) => {
            println!("verify: OK cardinality {card}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn gen_instance(family: Family, n: usize, k: usize, seed: u64) -> Graph {
    match family {
        Family::Dh => gen_distance_hereditary(n.max(2), seed),
        Family::Swk => gen_bounded_splitwidth(k.max(3), n, seed),
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode, Error> {
    let g = gen_instance(a.family, a.n, a.k, a.seed);
    let text = serialize_graph(&g, &CapacityMap::uniform(g.n(), 1));
    match a.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode, Error> {
    let sizes: Vec<usize> = a
        .sizes
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("bad size '{s}'"),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from(
        "family,n,m,k,rep,decomp_ms,phase1_ms,phase2_ms,total_ms,kernel_calls,cardinality\n",
    );
    let mut points: Vec<(f64, f64)> = Vec::new();
    let fam_name = match a.family {
        Family::Dh => "dh",
        Family::Swk => "swk",
    };
    for &n in &sizes {
        let mut best_total = f64::INFINITY;
        let mut size_nm = 0usize;
        for rep in 0..a.reps.max(1) {
            // Reps re-run the same instance; they exist for timing noise.
            let g = gen_instance(a.family, n, a.k, a.seed);
            let b = CapacityMap::uniform(g.n(), 1);
            let cfg = SolveConfig::default();
            let t = Instant::now();
            let r = solve_bmatching_with(&g, &b, &cfg)?;
            let total_ms = t.elapsed().as_secs_f64() * 1e3;
            // Re-validate before emitting the row.
            let card = validate_bmatching(&g, &b, &r.matching)
                .map_err(|v| Error::Internal(v.to_string()))?;
            csv.push_str(&format!(
                "{fam_name},{},{},{},{rep},{:.3},{:.3},{:.3},{:.3},{},{card}\n",
                g.n(),
                g.m(),
                r.stats.split_width,
                r.stats.decomp_ms,
                r.stats.phase1_ms,
                r.stats.phase2_ms,
                total_ms,
                r.stats.phase1_kernel_calls + r.stats.phase2_kernel_calls,
            ));
            best_total = best_total.min(total_ms);
            size_nm = g.n() + g.m();
        }
        points.push(((size_nm as f64).ln(), best_total.max(1e-3).ln()));
    }
    let slope = fit_slope(&points);
    csv.push_str(&format!("# loglog_slope {slope:.4}\n"));
    match a.out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
