use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use twistlab::enumeration::{count_dfs, count_tm, for_each_tiling, sample_tilings};
use twistlab::generators::probe::{regularity_probe, ProbeOptions, Verdict};
use twistlab::generators::reduce::{check_parts, Reducer, ReduceOptions};
use twistlab::generators::{FluxTarget, Generators};
use twistlab::grid::{parse_annotated_disk, Disk, Domino, Square, SquareSet};
use twistlab::hamilton::{find_hamilton, HamiltonCycle};
use twistlab::io::{
    cycle_from_json, cycle_to_json, disk_points, render, tiling_from_str, tiling_to_json, word_from_json,
    word_to_json, Point, RenderMode, RenderSpec, SymbolJson,
};
use twistlab::moves::{components, enumerate_flips, equiv_bounded, Equivalence, Flip, SearchBudget};
use twistlab::tiling::Tiling;
use twistlab::twist::twist;

/// Three-dimensional domino tilings of cylinders: counting, flips, twist and
/// generator words.
#[derive(Parser)]
#[command(name = "twistlab", version)]
struct Cli {
    /// Worker threads for parallel searches.
    #[arg(long, global = true, env = "TWISTLAB_THREADS")]
    threads: Option<usize>,
    /// Seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Exit with status 2 when a search ends without a verdict.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find a hamiltonian path or cycle.
    Hamilton {
        disk: String,
        #[arg(long)]
        cycle: bool,
        #[arg(long)]
        start_sw: bool,
    },
    /// Exact number of tilings of the cylinder.
    Count {
        disk: String,
        #[arg(short = 'N')]
        n: usize,
        /// Count by depth-first enumeration instead of the transfer matrix.
        #[arg(long)]
        dfs: bool,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Stream tilings as JSON lines.
    Enum {
        disk: String,
        #[arg(short = 'N')]
        n: usize,
        #[arg(long)]
        limit: Option<u64>,
        /// Draw this many uniform samples (see --seed) instead.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// List the flips available in a tiling.
    Flips { tiling: String },
    /// Flip components of all tilings of the cylinder.
    Components {
        disk: String,
        #[arg(short = 'N')]
        n: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        #[arg(long)]
        csv: bool,
    },
    /// Twist of each tiling in a JSON or JSON-lines file.
    Twist { tiling: String },
    /// Flux triple of a domino and plug along a cycle.
    Flux {
        disk: String,
        cycle: String,
        /// x1,y1,x2,y2
        #[arg(long)]
        domino: String,
        /// x,y;x,y;...
        #[arg(long, default_value = "")]
        plug: String,
    },
    /// Generator tilings t_{d,p} for the dominoes that do not respect the cycle.
    Generators {
        disk: String,
        #[arg(long)]
        cycle: Option<String>,
        #[arg(long)]
        domino: Option<String>,
        /// Target flux_0 of the canonical plug.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        flux: i64,
        /// Include the generator tilings.
        #[arg(long)]
        tilings: bool,
    },
    /// Generator word of an even-height tiling.
    Decompose {
        tiling: String,
        #[arg(long)]
        cycle: Option<String>,
    },
    /// Rewrite a generator word to a power of the base generator.
    Reduce {
        word: String,
        /// Disk file; digits annotate the parts of a disk with bottlenecks.
        #[arg(long)]
        disk: String,
        #[arg(long)]
        cycle: Option<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Bounded search for a flip path after vertical padding.
    Equiv {
        t1: String,
        t2: String,
        #[arg(long, default_value_t = 4)]
        pad_max: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Join same-twist tilings by bounded searches, for each even height.
    ProbeRegularity {
        disk: String,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        pad_max: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Draw a tiling floor by floor.
    Render {
        tiling: String,
        #[arg(long)]
        svg: bool,
        #[arg(long, default_value_t = 8)]
        floors_per_row: usize,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Maximum stored states per padding level.
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

/// `WxH` names a rectangle; anything else is a disk file.
fn load_disk(arg: &str) -> Result<(Arc<Disk>, Vec<u8>)> {
    if let Some((w, h)) = arg.split_once('x') {
        if let (Ok(w), Ok(h)) = (w.parse::<i32>(), h.parse::<i32>()) {
            let d = Disk::rectangle(w, h)?;
            let n = d.len();
            return Ok((Arc::new(d), vec![0; n]));
        }
    }
    let (d, labels) = parse_annotated_disk(&read_input(arg)?)?;
    Ok((Arc::new(d), labels))
}

/// Tilings from a single JSON document or from JSON lines.
fn load_tilings(path: &str) -> Result<Vec<Tiling>> {
    let text = read_input(path)?;
    if let Ok(t) = tiling_from_str(&text, None) {
        return Ok(vec![t]);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        out.push(tiling_from_str(line, None).with_context(|| format!("{path}: line {}", i + 1))?);
    }
    Ok(out)
}

fn load_tiling(path: &str) -> Result<Tiling> {
    let mut ts = load_tilings(path)?;
    if ts.len() != 1 {
        bail!("{path}: expected one tiling, found {}", ts.len());
    }
    Ok(ts.remove(0))
}

fn load_cycle(disk: &Disk, path: Option<&str>) -> Result<HamiltonCycle> {
    match path {
        Some(p) => {
            let pts: Vec<Point> = serde_json::from_str(&read_input(p)?)?;
            Ok(cycle_from_json(disk, &pts)?)
        }
        None => find_hamilton(disk, true, true).ok_or_else(|| anyhow!("disk has no hamiltonian cycle from its south-west corner")),
    }
}

fn parse_ints(s: &str) -> Result<Vec<i32>> {
    s.split(',').map(|x| x.trim().parse::<i32>().with_context(|| format!("bad integer {x:?}"))).collect()
}

fn parse_domino(disk: &Disk, s: &str) -> Result<Domino> {
    let v = parse_ints(s)?;
    if v.len() != 4 {
        bail!("domino must be x1,y1,x2,y2");
    }
    disk.domino(Square::new(v[0], v[1]), Square::new(v[2], v[3])).ok_or_else(|| anyhow!("{s} is not a domino of the disk"))
}

fn parse_plug(disk: &Disk, s: &str) -> Result<SquareSet> {
    let mut p = SquareSet::EMPTY;
    for part in s.split(';').filter(|x| !x.trim().is_empty()) {
        let v = parse_ints(part)?;
        if v.len() != 2 {
            bail!("plug squares are x,y");
        }
        p.insert(disk.index_of(Square::new(v[0], v[1])).ok_or_else(|| anyhow!("({part}) is not in the disk"))?);
    }
    Ok(p)
}

fn domino_json(disk: &Disk, d: Domino) -> [Point; 2] {
    let (a, b) = disk.domino_squares(d);
    [[a.x, a.y], [b.x, b.y]]
}

fn flip_json(disk: &Disk, f: Flip) -> serde_json::Value {
    match f {
        Flip::InFloor { floor, sw } => {
            let q = disk.square(sw);
            json!({"kind": "in-floor", "floor": floor, "sw": [q.x, q.y]})
        }
        Flip::HorizToVert { floor, d } => json!({"kind": "horiz-to-vert", "floor": floor, "d": domino_json(disk, d)}),
        Flip::VertToHoriz { floor, d } => json!({"kind": "vert-to-horiz", "floor": floor, "d": domino_json(disk, d)}),
    }
}

struct Run {
    strict: bool,
    seed: u64,
    out: BufWriter<io::Stdout>,
    unknown: bool,
}

impl Run {
    fn emit(&mut self, v: &impl serde::Serialize) -> Result<()> {
        serde_json::to_writer(&mut self.out, v)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    fn line(&mut self, s: &str) -> Result<()> {
        self.out.write_all(s.as_bytes())?;
        if !s.ends_with('\n') {
            self.out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn exec(&mut self, cmd: Cmd) -> Result<()> {
        match cmd {
            Cmd::Hamilton { disk, cycle, start_sw } => {
                let (disk, _) = load_disk(&disk)?;
                let g = find_hamilton(&disk, cycle, start_sw).ok_or_else(|| anyhow!("no hamiltonian {}", if cycle { "cycle" } else { "path" }))?;
                self.emit(&cycle_to_json(&disk, &g))
            }
            Cmd::Count { disk, n, dfs, budget } => {
                let (disk, _) = load_disk(&disk)?;
                let c = if dfs { count_dfs(disk, n, budget)?.to_string() } else { count_tm(&disk, n)?.to_string() };
                self.line(&c)
            }
            Cmd::Enum { disk, n, limit, sample } => {
                let (disk, _) = load_disk(&disk)?;
                if let Some(k) = sample {
                    for t in sample_tilings(disk, n, k, self.seed)? {
                        self.emit(&tiling_to_json(&t))?;
                    }
                    return Ok(());
                }
                let mut left = limit.unwrap_or(u64::MAX);
                let mut err = None;
                for_each_tiling(disk, n, |t| {
                    if left == 0 {
                        return false;
                    }
                    left -= 1;
                    match self.emit(&tiling_to_json(&t)) {
                        Ok(()) => true,
                        Err(e) => {
                            err = Some(e);
                            false
                        }
                    }
                })?;
                err.map_or(Ok(()), Err)
            }
            Cmd::Flips { tiling } => {
                let t = load_tiling(&tiling)?;
                let fl: Vec<_> = enumerate_flips(&t).into_iter().map(|f| flip_json(t.disk(), f)).collect();
                self.emit(&fl)
            }
            Cmd::Components { disk, n, budget, csv } => {
                let (disk, _) = load_disk(&disk)?;
                let rep = components(disk, n, budget)?;
                if !rep.exhaustive {
                    eprintln!("warning: more than {budget} tilings, report covers the first {budget}");
                    self.unknown = true;
                }
                if csv {
                    self.line(&rep.to_csv())
                } else {
                    let v = json!({
                        "n": rep.n,
                        "total_tilings": rep.total_tilings,
                        "exhaustive": rep.exhaustive,
                        "largest_fraction": rep.largest_fraction(),
                        "components": rep.components.iter().enumerate()
                            .map(|(i, c)| json!({"id": i, "size": c.size, "twist": c.twist}))
                            .collect::<Vec<_>>(),
                    });
                    self.emit(&v)
                }
            }
            Cmd::Twist { tiling } => {
                for t in load_tilings(&tiling)? {
                    let k = twist(&t)?;
                    self.line(&k.to_string())?;
                }
                Ok(())
            }
            Cmd::Flux { disk, cycle, domino, plug } => {
                let (disk, _) = load_disk(&disk)?;
                let g = load_cycle(&disk, Some(&cycle))?;
                let d = parse_domino(&disk, &domino)?;
                let p = parse_plug(&disk, &plug)?;
                let f = twistlab::twist::flux(&g, d, p)?;
                self.emit(&f)
            }
            Cmd::Generators { disk, cycle, domino, flux, tilings } => {
                let (disk, _) = load_disk(&disk)?;
                let g = load_cycle(&disk, cycle.as_deref())?;
                let gens = Generators::new(disk.clone(), g.clone());
                let ds = match domino {
                    Some(s) => vec![parse_domino(&disk, &s)?],
                    None => g.d_gamma(&disk),
                };
                let mut out = Vec::new();
                for d in ds {
                    let p = match gens.canonical_plug(d, FluxTarget::Zero(flux)) {
                        Ok(p) => p,
                        Err(e) => {
                            eprintln!("{:?}: {e}", domino_json(&disk, d));
                            continue;
                        }
                    };
                    let t = gens.t_dp(d, p)?;
                    let sym = gens.symbol(d, p, 1)?;
                    let mut v = json!({
                        "d": domino_json(&disk, d),
                        "flux": sym.flux,
                        "plug": p.iter().map(|i| { let q = disk.square(i); [q.x, q.y] }).collect::<Vec<_>>(),
                        "height": t.height(),
                        "twist": twist(&t)?,
                    });
                    if tilings {
                        v["tiling"] = serde_json::to_value(tiling_to_json(&t))?;
                    }
                    out.push(v);
                }
                self.emit(&out)
            }
            Cmd::Decompose { tiling, cycle } => {
                let t = load_tiling(&tiling)?;
                let disk = t.disk_arc().clone();
                let g = load_cycle(&disk, cycle.as_deref())?;
                let w = Generators::new(disk.clone(), g).decompose(&t)?;
                self.emit(&word_to_json(&disk, &w))
            }
            Cmd::Reduce { word, disk, cycle, search } => {
                let (disk, labels) = load_disk(&disk)?;
                let g = load_cycle(&disk, cycle.as_deref())?;
                let parts = if labels.iter().any(|&l| l != 0) { Some(check_parts(&disk, &labels)?) } else { None };
                let js: Vec<SymbolJson> = serde_json::from_str(&read_input(&word)?)?;
                let w = word_from_json(&disk, &js)?;
                let opts = ReduceOptions { search: SearchBudget { states: search.budget }, ..Default::default() };
                let mut r = Reducer::new(Generators::new(disk.clone(), g), parts, opts)?;
                let red = r.reduce(&w)?;
                let tau = r.tau();
                let v = json!({
                    "k": red.k,
                    "tau": twistlab::io::symbol_to_json(&disk, &tau),
                    "word": word_to_json(&disk, &red.word),
                    "rules": r.log().len(),
                });
                self.emit(&v)
            }
            Cmd::Equiv { t1, t2, pad_max, search } => {
                let a = load_tiling(&t1)?;
                let b = load_tiling(&t2)?;
                let v = match equiv_bounded(&a, &b, pad_max, SearchBudget { states: search.budget })? {
                    Equivalence::Connected { m1, m2, path } => json!({
                        "verdict": "connected", "m1": m1, "m2": m2,
                        "flips": path.iter().map(|&f| flip_json(a.disk(), f)).collect::<Vec<_>>(),
                    }),
                    Equivalence::Unknown { pad_max, states } => {
                        self.unknown = true;
                        json!({"verdict": "unknown", "pad_max": pad_max, "states": states})
                    }
                };
                self.emit(&v)
            }
            Cmd::ProbeRegularity { disk, n_max, pad_max, search } => {
                let (disk, _) = load_disk(&disk)?;
                let opts = ProbeOptions { n_max, pad_max, search: SearchBudget { states: search.budget }, ..Default::default() };
                let rep = regularity_probe(disk.clone(), opts)?;
                if rep.levels.iter().any(|l| !l.exhaustive || l.classes.iter().any(|c| c.verdict == Verdict::Unknown)) {
                    self.unknown = true;
                }
                let v = json!({"disk": disk_points(&disk), "report": rep});
                self.emit(&v)
            }
            Cmd::Render { tiling, svg, floors_per_row } => {
                if floors_per_row == 0 {
                    bail!("--floors-per-row must be positive");
                }
                let t = load_tiling(&tiling)?;
                let mode = if svg { RenderMode::Svg } else { RenderMode::Ascii };
                self.line(&render(&t, RenderSpec { mode, floors_per_row }))
            }
        }
    }
}

fn main() -> ExitCode {
    // usage errors exit with 1 so that 2 keeps meaning an unknown verdict
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut run = Run { strict: cli.strict, seed: cli.seed, out: BufWriter::new(io::stdout()), unknown: false };
    let res = run.exec(cli.cmd).and_then(|()| Ok(run.out.flush()?));
    match res {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(()) if run.strict && run.unknown => {
            eprintln!("unknown verdict under --strict");
            ExitCode::from(2)
        }
        Ok(()) => ExitCode::SUCCESS,
    }
}
