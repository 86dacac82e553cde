use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use msheaf::bmp::build_bmp;
use msheaf::coxeter::{word_name, CoxeterSystem, MAX_ORBIT};
use msheaf::graph::MomentGraph;
use msheaf::io::{parse_vertex_list, GraphJson, SheafJson, ZModuleJson};
use msheaf::kl::{compare_bmp_kl, kl_polynomials};
use msheaf::poly::parse_scalar;
use msheaf::zmod::ZModule;
use msheaf::Error;

const THREADS_VAR: &str = "MSHEAF_THREADS";

#[derive(Parser)]
#[command(name = "msheaf", version, about = "Sheaves and modules on moment graphs")]
struct Cli {
    /// Record wall time in the report (reports are then no longer byte-stable).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or transform moment graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Structure algebra of a graph.
    Zalg {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 14)]
        max_degree: i32,
        /// Write the module as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sections of a sheaf over a vertex set.
    Sections {
        #[arg(long)]
        sheaf: PathBuf,
        /// Comma separated vertex names; all vertices when omitted.
        #[arg(long)]
        open: Option<String>,
        /// Defaults to the cap stored in the sheaf file.
        #[arg(long)]
        max_degree: Option<i32>,
    },
    /// Localization of a module.
    Localize {
        #[arg(long)]
        module: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_degree: i32,
        /// Write the sheaf as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verma flag and flabbiness of a module.
    Flags {
        #[arg(long)]
        module: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_degree: i32,
    },
    /// Build the sheaf B(v).
    Bmp {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: String,
        /// Defaults to twice the number of vertices above `vertex`.
        #[arg(long)]
        max_degree: Option<i32>,
        /// Write the sheaf as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-checks against independent computations.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Bruhat graph of a Weyl group or one of its parabolic quotients.
    Coxeter {
        #[arg(long = "type")]
        kind: String,
        /// Simple reflections generating the parabolic subgroup, e.g. "s1 s3".
        #[arg(long, default_value = "")]
        parabolic: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A small named graph.
    Builtin {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reverse the order.
    Tilt {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep the edges with label proportional to gamma.
    Reduce {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare stalk characters of B(w) with Kazhdan-Lusztig polynomials.
    Kl {
        #[arg(long = "type")]
        kind: String,
        /// Top element; every element of the group when omitted.
        #[arg(long)]
        w: Option<String>,
        #[arg(long, default_value_t = 12)]
        max_degree: i32,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    input_digest: String,
    cap: i32,
    modes: BTreeMap<String, String>,
    result: Value,
    version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u128>,
}

enum Failure {
    Engine(Error),
    Io(String),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Engine(Error::CapExceeded { .. } | Error::CapTooSmall { .. }) => 3,
            Failure::Engine(_) | Failure::Io(_) => 2,
            Failure::Mismatch => 4,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Self { hasher }
    }

    fn read(&mut self, path: &Path) -> Outcome<String> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.hasher.update([0]);
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    fn param(&mut self, key: &str, value: &str) {
        self.hasher.update([0]);
        self.hasher.update(key.as_bytes());
        self.hasher.update(b"=");
        self.hasher.update(value.as_bytes());
    }

    fn digest(self) -> String {
        self.hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Outcome<T> {
    serde_json::from_str(text).map_err(|e| Failure::Engine(Error::Json(e)))
}

fn read_graph(inputs: &mut Inputs, path: &Path) -> Outcome<MomentGraph> {
    let g: GraphJson = parse_json(&inputs.read(path)?)?;
    let g = g.to_graph()?;
    g.ensure_valid()?;
    Ok(g)
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Outcome<()> {
    if let Some(p) = path {
        fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn emit_graph(g: &MomentGraph, out: &Option<PathBuf>) -> Outcome<()> {
    let text = to_pretty(&GraphJson::from_graph(g));
    write_out(out, &text)?;
    print!("{text}");
    eprintln!("graph: {} vertices, {} edges", g.vertex_count(), g.edges().len());
    Ok(())
}

fn run_graph(cmd: GraphCommand) -> Outcome<()> {
    match cmd {
        GraphCommand::Coxeter { kind, parabolic, out } => {
            let c = CoxeterSystem::from_type(&kind)?;
            let par = c.parse_word(&parabolic.replace(',', " "))?;
            let g = c.bruhat_moment_graph(&par)?;
            g.ensure_valid()?;
            emit_graph(&g, &out)
        }
        GraphCommand::Builtin { name, out } => {
            let g = match name.as_str() {
                "subgeneric" => MomentGraph::subgeneric(msheaf::graph::ivec(&[1, 0])),
                "generic" => MomentGraph::generic(2),
                "diamond" => MomentGraph::diamond(msheaf::graph::ivec(&[1, 0]), msheaf::graph::ivec(&[0, 1])),
                other => return Err(Failure::Io(format!("unknown builtin graph `{other}`"))),
            };
            emit_graph(&g, &out)
        }
        GraphCommand::Tilt { graph, out } => {
            let g = read_graph(&mut Inputs::new("graph tilt"), &graph)?;
            emit_graph(&g.tilt(), &out)
        }
        GraphCommand::Reduce { graph, gamma, out } => {
            let g = read_graph(&mut Inputs::new("graph reduce"), &graph)?;
            let gamma = gamma
                .split(',')
                .map(|s| parse_scalar(s.trim()))
                .collect::<msheaf::Result<Vec<_>>>()?;
            emit_graph(&g.gamma_reduction(&gamma)?, &out)
        }
    }
}

fn hilbert(m: &msheaf::module::GradedSubmodule) -> Vec<usize> {
    m.hilbert_function().into_values().collect()
}

struct Run {
    command: String,
    inputs: Inputs,
    cap: i32,
    modes: BTreeMap<String, String>,
}

impl Run {
    fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            inputs: Inputs::new(command),
            cap: 0,
            modes: BTreeMap::new(),
        }
    }

    fn mode(&mut self, key: &str, value: impl Into<String>) {
        self.modes.insert(key.into(), value.into());
    }

    fn finish(mut self, result: Value, started: Option<Instant>) -> RunReport {
        let cap = self.cap.to_string();
        self.inputs.param("cap", &cap);
        for (k, v) in &self.modes {
            self.inputs.param(k, v);
        }
        RunReport {
            command: self.command,
            input_digest: self.inputs.digest(),
            cap: self.cap,
            modes: self.modes,
            result,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_ms: started.map(|t| t.elapsed().as_millis()),
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let started = cli.timing.then(Instant::now);
    let (report, failed) = match cli.command {
        Command::Graph(cmd) => return run_graph(cmd),
        Command::Zalg { graph, max_degree, out } => {
            let mut r = Run::new("zalg");
            let g = read_graph(&mut r.inputs, &graph)?;
            r.cap = max_degree;
            let z = ZModule::structure_algebra(&g, max_degree)?;
            write_out(&out, &to_pretty(&ZModuleJson::from_module(&z)))?;
            let degrees = z.module().generator_degrees();
            eprintln!("zalg: generator degrees {degrees:?} (cap {max_degree})");
            let result = json!({
                "vertices": g.vertex_count(),
                "generator_degrees": degrees,
                "hilbert_function": hilbert(z.module()),
            });
            (r.finish(result, started), false)
        }
        Command::Sections {
            sheaf,
            open,
            max_degree,
        } => {
            let mut r = Run::new("sections");
            let sj: SheafJson = parse_json(&r.inputs.read(&sheaf)?)?;
            let m = sj.to_sheaf()?;
            let g = m.graph();
            let set = match &open {
                Some(text) => parse_vertex_list(g, text)?,
                None => g.all_vertices(),
            };
            r.cap = max_degree.unwrap_or(sj.cap);
            r.mode("open", set.iter().map(|x| g.name(*x)).collect::<Vec<_>>().join(","));
            let s = m.sections(&set, r.cap)?;
            let degrees = s.module().generator_degrees();
            eprintln!("sections: generator degrees {degrees:?} (cap {})", r.cap);
            let result = json!({
                "is_open": g.is_open(&set),
                "generator_degrees": degrees,
                "hilbert_function": hilbert(s.module()),
            });
            (r.finish(result, started), false)
        }
        Command::Localize {
            module,
            max_degree,
            out,
        } => {
            let mut r = Run::new("localize");
            let mj: ZModuleJson = parse_json(&r.inputs.read(&module)?)?;
            r.cap = max_degree;
            let z = mj.to_module(max_degree)?;
            let l = z.localize()?;
            write_out(&out, &to_pretty(&SheafJson::from_sheaf(&l, max_degree)))?;
            let g = z.graph();
            let degrees = |f: &dyn Fn(i32) -> usize| (0..=max_degree).step_by(2).map(f).collect::<Vec<_>>();
            let vertex_hilbert: BTreeMap<&str, Vec<usize>> = (0..g.vertex_count())
                .map(|x| (g.name(x), degrees(&|d| l.vertex_stalk(x).dim_at(d))))
                .collect();
            let edge_hilbert: BTreeMap<String, Vec<usize>> = g
                .edges()
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    (
                        format!("{}-{}", g.name(e.u), g.name(e.v)),
                        degrees(&|d| l.edge_stalk(i).dim_at(d)),
                    )
                })
                .collect();
            let freeness: BTreeMap<&str, _> = z.stalk_freeness().into_iter().map(|(x, v)| (g.name(x), v)).collect();
            let support: Vec<&str> = vertex_hilbert
                .iter()
                .filter(|(_, h)| h.iter().any(|d| *d > 0))
                .map(|(k, _)| *k)
                .collect();
            eprintln!("localize: stalks nonzero at {support:?} (cap {max_degree})");
            let result = json!({
                "stalk_hilbert": vertex_hilbert,
                "edge_hilbert": edge_hilbert,
                "stalk_freeness": freeness,
                "support": support,
            });
            (r.finish(result, started), false)
        }
        Command::Flags { module, max_degree } => {
            let mut r = Run::new("flags");
            let mj: ZModuleJson = parse_json(&r.inputs.read(&module)?)?;
            r.cap = max_degree;
            let z = mj.to_module(max_degree)?;
            let flag = z.verma_flag();
            let flabby = z.is_flabby_module()?;
            r.mode("flabby", flabby.mode.clone());
            eprintln!(
                "flags: verma flag {}, flabby {} (cap {max_degree})",
                flag.has_flag, flabby.flabby
            );
            let result = json!({ "verma_flag": flag, "flabby": flabby });
            (r.finish(result, started), false)
        }
        Command::Bmp {
            graph,
            vertex,
            max_degree,
            out,
        } => {
            let mut r = Run::new("bmp");
            let g = read_graph(&mut r.inputs, &graph)?;
            let v = g.vertex(&vertex)?;
            r.cap = max_degree.unwrap_or(2 * g.greater_eq(v).len() as i32);
            r.mode("vertex", vertex.clone());
            let b = build_bmp(&g, v, r.cap)?;
            write_out(&out, &to_pretty(&SheafJson::from_sheaf(b.sheaf(), r.cap)))?;
            let characters: BTreeMap<&str, String> =
                b.character().iter().map(|(x, c)| (g.name(*x), c.to_string())).collect();
            let flag = b.verma_flag()?;
            eprintln!(
                "bmp: support of {} vertices, verma flag {} (cap {})",
                characters.len(),
                flag.has_flag,
                r.cap
            );
            let result = json!({
                "characters": characters,
                "order": b.order().iter().map(|x| g.name(*x)).collect::<Vec<_>>(),
                "trace": b.trace(),
                "verma_flag": flag,
            });
            (r.finish(result, started), false)
        }
        Command::Verify(VerifyCommand::Kl { kind, w, max_degree }) => {
            let mut r = Run::new("verify kl");
            r.cap = max_degree;
            r.mode("type", kind.clone());
            let c = CoxeterSystem::from_type(&kind)?;
            let words = match &w {
                Some(text) => {
                    r.mode("w", text.clone());
                    vec![c.parse_word(text)?]
                }
                None => {
                    r.mode("w", "all");
                    c.orbit(&c.parabolic_weight(&[]), MAX_ORBIT)?.words
                }
            };
            let mut comparisons = Vec::new();
            let mut all_match = true;
            for word in &words {
                let cmp = compare_bmp_kl(&c, word, max_degree)?;
                all_match &= cmp.all_match;
                eprintln!(
                    "verify kl: {} w = {}: {}",
                    kind,
                    word_name(word),
                    if cmp.all_match { "match" } else { "MISMATCH" }
                );
                comparisons.push(cmp);
            }
            let mut result = json!({ "all_match": all_match, "comparisons": comparisons });
            if let [word] = words.as_slice() {
                result["kl_table"] = kl_polynomials(&c, word)?.to_json();
            }
            (r.finish(result, started), !all_match)
        }
    };
    print!("{}", to_pretty(&report));
    if failed {
        return Err(Failure::Mismatch);
    }
    Ok(())
}

fn configure_threads() -> Outcome<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Io(format!("{THREADS_VAR} must be a number, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Engine(e) => eprintln!("error: {e}"),
                Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Mismatch => eprintln!("error: stalk characters differ from the KL polynomials"),
            }
            ExitCode::from(f.code())
        }
    }
}
