//! The `corridor` command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors (bad flags, unreadable
//! or inconsistent configuration and checkpoint files), 3 for failures while
//! running.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use super::att::{att_eval, att_line, write_att_csv};
use super::capacity::capacity_sweep;
use super::config::{parse_grid, RunConfig};
use super::greenwave::{green_wave_demand, green_wave_study, green_wave_svg, write_green_wave_csv};
use super::{seed_list, ControllerSpec};
use crate::mdp::ArchitectureKind;
use crate::net::{build_corridor, CorridorNetwork, CorridorSpec, DemandConfig};
use crate::ppo::{train, PolicyCheckpoint, PpoConfig, TrainLogRow};
use crate::sim::export::{write_backup, write_decisions, write_lanes, write_vehicles};
use crate::sim::SimConfig;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CORRIDOR_OUT";

#[derive(Debug, Parser)]
#[command(name = "corridor", version, about = "Signalized corridor simulation and signal-control experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a learned controller with PPO.
    Train(Common),
    /// Sweep a grid of demands and judge queue stability.
    Capacity(Common),
    /// Average travel time along a fixed-total demand line.
    Att(Common),
    /// Zero-stop ratio of eastbound traffic against link length.
    Greenwave(Common),
    /// Run one simulation and export per-vehicle, lane, backup and decision logs.
    Simulate(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Number of junctions.
    #[arg(long)]
    pub n: Option<usize>,
    /// Length of every link in meters.
    #[arg(long)]
    pub link_length: Option<f64>,
    #[arg(long)]
    pub demand_ns: Option<f64>,
    #[arg(long)]
    pub demand_sn: Option<f64>,
    #[arg(long)]
    pub demand_we: Option<f64>,
    #[arg(long)]
    pub demand_ew: Option<f64>,
    /// maxpressure, centralized, fd or ps.
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Base seed; multi-seed commands use consecutive seeds from here.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeds per demand point.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Simulated seconds per run (per episode for `train`).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Seconds excluded from travel-time and ratio statistics.
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Output directory. Defaults to $CORRIDOR_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Side-road rates for `capacity` (`start:stop:step` or a comma list).
    #[arg(long)]
    pub grid_ns: Option<String>,
    /// Main-road rates for `capacity`.
    #[arg(long)]
    pub grid_we: Option<String>,
    /// Link lengths for `greenwave`.
    #[arg(long)]
    pub lengths: Option<String>,
    /// Step along the demand line for `att`.
    #[arg(long)]
    pub att_step: Option<f64>,
    /// Training episodes.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Episodes between evaluations during training.
    #[arg(long)]
    pub eval_every: Option<usize>,
}

impl Common {
    fn as_run_config(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            link_length: self.link_length,
            demand_ns: self.demand_ns,
            demand_sn: self.demand_sn,
            demand_we: self.demand_we,
            demand_ew: self.demand_ew,
            arch: self.arch.clone(),
            checkpoint: self.checkpoint.clone(),
            seed: self.seed,
            seeds: self.seeds,
            duration: self.duration,
            warmup: self.warmup,
            out: self.out.clone(),
            grid_ns: self.grid_ns.clone(),
            grid_we: self.grid_we.clone(),
            lengths: self.lengths.clone(),
            att_step: self.att_step,
            episodes: self.episodes,
            eval_every: self.eval_every,
            ppo: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Train,
    Capacity,
    Att,
    Greenwave,
    Simulate,
}

impl Kind {
    fn default_n(self) -> usize {
        match self {
            Kind::Train | Kind::Simulate => 1,
            Kind::Capacity | Kind::Att => 3,
            Kind::Greenwave => 13,
        }
    }

    fn default_seeds(self) -> usize {
        match self {
            Kind::Capacity | Kind::Att => 5,
            _ => 1,
        }
    }
}

/// Fully resolved inputs of one command.
struct Plan {
    kind: Kind,
    cfg: RunConfig,
    out: PathBuf,
    network: Arc<CorridorNetwork>,
    controller: ControllerSpec,
    arch: ArchitectureKind,
    demand: DemandConfig,
    sim: SimConfig,
    seeds: Vec<u64>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn resolve(kind: Kind, common: &Common) -> Result<Plan> {
    let file = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = file.overlay(common.as_run_config());
    let out = cfg
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let requested = cfg.arch.as_deref().map(ArchitectureKind::parse).transpose()?;
    let checkpoint = match &cfg.checkpoint {
        Some(path) if kind != Kind::Train => Some(Arc::new(PolicyCheckpoint::load(path)?)),
        Some(_) => return Err(config_error("train does not take --checkpoint")),
        None => None,
    };
    let arch = match (requested, &checkpoint) {
        (Some(a), Some(c)) if a != c.architecture => {
            return Err(config_error(format!(
                "--arch {a} disagrees with the checkpoint architecture {}",
                c.architecture
            )))
        }
        (_, Some(c)) => c.architecture,
        (Some(a), None) => a,
        (None, None) if kind == Kind::Train => ArchitectureKind::ParameterSharing,
        (None, None) => ArchitectureKind::MaxPressure,
    };
    if kind == Kind::Train && !arch.is_learned() {
        return Err(config_error("train needs a learned architecture (centralized, fd or ps)"));
    }
    let controller = match (&checkpoint, arch.is_learned()) {
        (Some(c), _) => ControllerSpec::Learned(c.clone()),
        (None, false) => ControllerSpec::MaxPressure,
        (None, true) if kind == Kind::Train => ControllerSpec::MaxPressure,
        (None, true) => return Err(config_error(format!("--arch {arch} requires --checkpoint"))),
    };

    let n = match (cfg.n, &checkpoint) {
        (Some(n), _) => n,
        (None, Some(c)) if c.architecture != ArchitectureKind::ParameterSharing => c.n,
        _ => kind.default_n(),
    };
    let link_length = cfg.link_length.unwrap_or(700.0);
    let network = Arc::new(build_corridor(CorridorSpec::new(n, link_length))?);
    controller.check(n)?;

    let base = if kind == Kind::Greenwave {
        green_wave_demand()
    } else {
        DemandConfig::symmetric(700.0, 700.0)
    };
    let demand = DemandConfig::new(
        cfg.demand_we.unwrap_or(base.lambda_we),
        cfg.demand_ew.unwrap_or(base.lambda_ew),
        cfg.demand_ns.unwrap_or(base.lambda_ns),
        cfg.demand_sn.unwrap_or(base.lambda_sn),
    );
    demand.validate()?;

    let mut sim = SimConfig::default().with_duration(cfg.duration.unwrap_or(10_000.0));
    if let Some(w) = cfg.warmup {
        sim.warmup_s = w;
    }
    if !(sim.warmup_s >= 0.0 && sim.warmup_s < sim.duration_s) {
        return Err(config_error("warm-up must be non-negative and shorter than the duration"));
    }
    sim.seed = cfg.seed.unwrap_or(0);
    sim.validate()?;
    let count = cfg.seeds.unwrap_or(kind.default_seeds());
    if count == 0 {
        return Err(config_error("--seeds must be at least 1"));
    }
    let seeds = seed_list(sim.seed, count);
    Ok(Plan {
        kind,
        cfg,
        out,
        network,
        controller,
        arch,
        demand,
        sim,
        seeds,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Columns: `episode,mean_reward,loss,eval_return,wall_s`.
pub fn write_train_log<W: std::io::Write>(rows: &[TrainLogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "mean_reward", "loss", "eval_return", "wall_s"])?;
    for r in rows {
        w.write_record([
            r.episode.to_string(),
            r.mean_reward.to_string(),
            r.loss.to_string(),
            r.eval_return.map(|v| v.to_string()).unwrap_or_default(),
            format!("{:.3}", r.wall_s),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn ppo_config(plan: &Plan) -> Result<PpoConfig> {
    let cfg = &plan.cfg;
    let mut ppo = cfg.ppo.clone().unwrap_or_default();
    if let Some(e) = cfg.episodes {
        ppo.episodes = e;
    }
    if let Some(e) = cfg.eval_every {
        ppo.eval_every = e;
    }
    if let Some(d) = cfg.duration {
        ppo.episode_duration_s = d;
    }
    if let Some(s) = cfg.seed {
        ppo.train_seed = s;
    }
    if cfg.warmup.is_some() {
        ppo.sim.warmup_s = plan.sim.warmup_s;
    }
    if cfg.demand_ns.is_some() || cfg.demand_sn.is_some() || cfg.demand_we.is_some() || cfg.demand_ew.is_some() {
        ppo.demand = plan.demand;
    }
    ppo.validate()?;
    Ok(ppo)
}

fn execute(plan: &Plan) -> Result<()> {
    std::fs::create_dir_all(&plan.out).map_err(|e| Error::io(&plan.out, e))?;
    let out = |name: &str| plan.out.join(name);
    let n = plan.network.n();
    match plan.kind {
        Kind::Simulate => {
            let result = plan.controller.run(plan.network.clone(), plan.demand, plan.sim.clone())?;
            write_vehicles(&result, create(&out("vehicles.csv"))?)?;
            write_lanes(&result, create(&out("lanes.csv"))?)?;
            write_backup(&result, create(&out("backup.csv"))?)?;
            write_decisions(&result, create(&out("decisions.csv"))?)?;
            match result.average_travel_time() {
                Some((att, count)) => println!("{} vehicles completed, ATT {att:.2} s", count),
                None => println!("no vehicles completed after warm-up"),
            }
        }
        Kind::Capacity => {
            let grid_ns = parse_grid(plan.cfg.grid_ns.as_deref().unwrap_or("100:1500:100"))?;
            let grid_we = parse_grid(plan.cfg.grid_we.as_deref().unwrap_or("100:1500:100"))?;
            let points: Vec<(f64, f64)> = grid_ns
                .iter()
                .flat_map(|&ns| grid_we.iter().map(move |&we| (ns, we)))
                .collect();
            let sweep = capacity_sweep(&plan.controller, plan.network.clone(), &points, &plan.sim, &plan.seeds)?;
            sweep.write_csv(create(&out("capacity.csv"))?)?;
            let title = format!("Capacity region, {} on {n} junction(s)", plan.controller.label());
            write_text(&out("capacity.svg"), &sweep.svg(&title))?;
            for w in &sweep.warnings {
                eprintln!("warning: {w}");
            }
            let stable = sweep.verdicts.iter().filter(|v| v.stable).count();
            println!("{stable} of {} demand points stable", sweep.verdicts.len());
        }
        Kind::Att => {
            let points = att_line(1400.0, plan.cfg.att_step.unwrap_or(100.0));
            let records = att_eval(&plan.controller, plan.network.clone(), &points, &plan.sim, &plan.seeds)?;
            write_att_csv(&records, create(&out("att.csv"))?)?;
            for r in &records {
                println!("WE {:>6} NS {:>6}  ATT {:.2} s", r.lambda_we, r.lambda_ns, r.att_s);
            }
        }
        Kind::Greenwave => {
            let lengths = parse_grid(plan.cfg.lengths.as_deref().unwrap_or("200:2000:100"))?;
            let records = green_wave_study(&plan.controller, n, &lengths, plan.demand, &plan.sim, &plan.seeds)?;
            write_green_wave_csv(&records, create(&out("greenwave.csv"))?)?;
            let title = format!("Zero-stop ratio, {} on {n} junctions", plan.controller.label());
            write_text(&out("greenwave.svg"), &green_wave_svg(&records, &title))?;
            for r in &records {
                println!("l = {:>6} m  zero-stop ratio {:.3}", r.link_length_m, r.ratio);
            }
        }
        Kind::Train => {
            let ppo = ppo_config(plan)?;
            let outcome = train(plan.network.clone(), plan.arch, ppo)?;
            write_train_log(&outcome.log, create(&out("train_log.csv"))?)?;
            for c in &outcome.evaluated {
                c.save(&out(&format!("checkpoint_ep{:04}.json", c.episode)))?;
            }
            outcome.best.save(&out("checkpoint.json"))?;
            println!(
                "best checkpoint from episode {} (evaluation return {:.1})",
                outcome.best.episode, outcome.best.eval_return
            );
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, common) = match &cli.command {
        Command::Train(c) => (Kind::Train, c),
        Command::Capacity(c) => (Kind::Capacity, c),
        Command::Att(c) => (Kind::Att, c),
        Command::Greenwave(c) => (Kind::Greenwave, c),
        Command::Simulate(c) => (Kind::Simulate, c),
    };
    let plan = match resolve(kind, common) {
        Ok(plan) => plan,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&plan) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<String> {
        std::iter::once("corridor").chain(list.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn learned_arch_without_checkpoint_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(args(&["att", "--arch", "fd", "--out", out])), EXIT_CONFIG);
        assert_eq!(run(args(&["simulate", "--arch", "bogus", "--out", out])), EXIT_CONFIG);
        assert_eq!(run(args(&["simulate", "--n", "0", "--out", out])), EXIT_CONFIG);
        assert_eq!(run(args(&["simulate", "--checkpoint", "/nonexistent.json", "--out", out])), EXIT_CONFIG);
        assert_eq!(run(args(&["train", "--arch", "maxpressure", "--out", out])), EXIT_CONFIG);
        assert_eq!(run(args(&["simulate", "--no-such-flag"])), EXIT_CONFIG);
        assert_eq!(run(args(&["capacity", "--grid-ns", "5:1:1", "--duration", "200", "--out", out])), EXIT_CONFIG);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n = 4\nlink_length = 300.0\nduration = 500.0\n").unwrap();
        let common = Common {
            config: Some(path),
            n: Some(2),
            out: Some(dir.path().to_path_buf()),
            ..Common::default()
        };
        let plan = resolve(Kind::Simulate, &common).unwrap();
        assert_eq!(plan.network.n(), 2);
        assert_eq!(plan.network.link_length_m(), 300.0);
        assert_eq!(plan.sim.duration_s, 500.0);
        assert_eq!(plan.sim.warmup_s, 0.0);
    }

    #[test]
    fn simulate_writes_logs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run(args(&["simulate", "--arch", "maxpressure", "--n", "1", "--duration", "1000", "--out", out]));
        assert_eq!(code, EXIT_OK);
        for f in ["vehicles.csv", "lanes.csv", "backup.csv", "decisions.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let vehicles = std::fs::read_to_string(dir.path().join("vehicles.csv")).unwrap();
        assert!(vehicles.starts_with("id,route,generated_at,entered_at,exited_at,stop_count\n"));
        assert!(vehicles.lines().count() > 100);
    }
}
