use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mrta::comm_graph::{parse_edge_list, CommGraph, TopologySpec};
use mrta::engine::{write_trace_jsonl, Simulation};
use mrta::experiment::{efficiency_ratios, write_csv_path};
use mrta::metrics::{Summary, TrialRecord};
use mrta::policies::parse_policy_list;
use mrta::{PolicyKind, ScenarioConfig, SweepSpec, TopologyStudySpec};

/// Seeded multi-robot task allocation experiments.
#[derive(Parser)]
#[command(name = "mrta", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write one CSV row per trial.
    RunSweep {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run the communication-topology study.
    RunTopology {
        spec: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a scenario config, sweep spec or topology spec.
    ValidateConfig { file: PathBuf },
    /// Print the information group number of a graph.
    Gamma {
        /// Directed edges such as `0>1,1>0`, or a named topology.
        edges: String,
        /// Number of hubs; defaults to one past the largest id.
        #[arg(long)]
        hubs: Option<usize>,
    },
    /// Run a single trial and optionally dump its step trace.
    RunTrial {
        config: PathBuf,
        #[arg(long, default_value = "ibr")]
        policy: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write one JSON object per step.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    trials: Option<usize>,
    /// First trial seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated policy names.
    #[arg(long)]
    policies: Option<String>,
}

impl RunOpts {
    fn apply(
        &self,
        trials: &mut usize,
        seed: &mut Option<u64>,
        policies: &mut Vec<PolicyKind>,
        output: &mut Option<PathBuf>,
    ) -> Result<()> {
        if let Some(t) = self.trials {
            *trials = t;
        }
        if self.seed.is_some() {
            *seed = self.seed;
        }
        if let Some(p) = &self.policies {
            *policies = parse_policy_list(p)?;
        }
        if self.out.is_some() {
            output.clone_from(&self.out);
        }
        if self.workers == Some(0) {
            bail!("--workers must be at least 1");
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunSweep { spec, opts } => {
            let mut s = SweepSpec::from_path(&spec).with_context(|| format!("loading {}", spec.display()))?;
            opts.apply(&mut s.trials, &mut s.seed, &mut s.policies, &mut s.output)?;
            let records = mrta::run_sweep(&s, opts.workers)?;
            let out = s.output.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
            write_csv_path(&records, &out).with_context(|| format!("writing {}", out.display()))?;
            let labels: Vec<String> = s.values.iter().map(|v| format!("{}={v}", s.axis)).collect();
            print_summary(&records, &labels, s.policies.len() * s.trials);
            println!("wrote {} rows to {}", records.len(), out.display());
        }
        Command::RunTopology { spec, opts } => {
            let mut s =
                TopologyStudySpec::from_path(&spec).with_context(|| format!("loading {}", spec.display()))?;
            opts.apply(&mut s.trials, &mut s.seed, &mut s.policies, &mut s.output)?;
            let records = mrta::run_topology_study(&s, opts.workers)?;
            let out = s.output.clone().unwrap_or_else(|| PathBuf::from("topology.csv"));
            write_csv_path(&records, &out).with_context(|| format!("writing {}", out.display()))?;
            let labels: Vec<String> = s.topology_configs()?.iter().map(|t| t.label()).collect();
            print_summary(&records, &labels, s.policies.len() * s.trials);
            println!("\nefficiency ratio vs complete graph");
            for p in efficiency_ratios(&records)? {
                println!("  {:<10} {:<14} gamma={} {:.4}", p.policy, p.topology, p.gamma, p.ratio);
            }
            println!("wrote {} rows to {}", records.len(), out.display());
        }
        Command::ValidateConfig { file } => println!("{}", validate(&file)?),
        Command::Gamma { edges, hubs } => {
            let graph = gamma_graph(&edges, hubs)?;
            println!("{}", graph.information_group_number());
        }
        Command::RunTrial { config, policy, seed, trace } => {
            let mut cfg = ScenarioConfig::from_path(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let kind: PolicyKind = policy.parse()?;
            let outcome = Simulation::new(&cfg, kind.build(&cfg)?)?.record_agents(trace.is_some()).run();
            if let Some(path) = trace {
                write_trace_jsonl(&outcome.trace, BufWriter::new(File::create(&path)?))?;
            }
            let r = &outcome.record;
            println!(
                "policy={} topology={} gamma={} seed={} tasks={} completed={} fraction_late={:.4}",
                r.policy, r.topology, r.gamma, r.seed, r.n_tasks, r.n_completed, r.fraction_late
            );
        }
    }
    Ok(())
}

fn validate(file: &Path) -> Result<String> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", file.display()))?;
    if table.contains_key("axis") {
        let s = SweepSpec::from_toml_str(&text)?;
        Ok(format!(
            "ok: sweep over {} with {} values, {} policies, {} trials",
            s.axis,
            s.values.len(),
            s.policies.len(),
            s.trials
        ))
    } else if table.contains_key("base") {
        let s = TopologyStudySpec::from_toml_str(&text)?;
        Ok(format!("ok: topology study over {} graphs, {} trials", s.topology_configs()?.len(), s.trials))
    } else {
        let cfg = ScenarioConfig::from_toml_str(&text)?;
        Ok(format!(
            "ok: scenario with {} depots, {} agents, topology {} (gamma {})",
            cfg.n_depots,
            cfg.n_agents,
            cfg.topology.label(),
            cfg.comm_graph()?.information_group_number()
        ))
    }
}

fn gamma_graph(edges: &str, hubs: Option<usize>) -> Result<CommGraph> {
    if let Ok(spec) = edges.parse::<TopologySpec>() {
        if !matches!(spec, TopologySpec::Explicit { .. } | TopologySpec::EdgeRemoval { .. }) {
            let n = hubs.context("--hubs is required for a named topology")?;
            return Ok(spec.build(n)?);
        }
        return Ok(spec.build(hubs.unwrap_or(5))?);
    }
    let list = parse_edge_list(edges)?;
    let n = hubs.unwrap_or_else(|| list.iter().map(|&(a, b)| a.0.max(b.0) + 1).max().unwrap_or(0));
    Ok(CommGraph::from_edges(n, &list)?)
}

/// Mean fraction late per scenario block and policy.
fn print_summary(records: &[TrialRecord], labels: &[String], block: usize) {
    println!("{:<24} {:<10} {:>8} {:>8} {:>12}", "scenario", "policy", "late", "median", "plan_ms");
    for (label, chunk) in labels.iter().zip(records.chunks(block.max(1))) {
        let mut by_policy: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
        let mut order = Vec::new();
        for r in chunk {
            if !by_policy.contains_key(r.policy.as_str()) {
                order.push(r.policy.as_str());
            }
            by_policy.entry(&r.policy).or_default().push(r);
        }
        for p in order {
            let rs = &by_policy[p];
            let late: Vec<f64> = rs.iter().map(|r| r.fraction_late).collect();
            let s = Summary::of(&late).expect("non-empty block");
            let plan = rs.iter().map(|r| r.mean_planning_time).sum::<f64>() / rs.len() as f64;
            println!("{label:<24} {p:<10} {:>8.4} {:>8.4} {:>12.4}", s.mean, s.median, plan * 1e3);
        }
    }
}
