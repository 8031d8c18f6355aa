//! Orchestration of the command-line studies.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::checkpoint::Checkpoint;
use super::config::RunConfig;
use super::export::{export_fields, fmt, write_energy_curve};
use crate::continuation::{
    assess_stability, make_initial_guess, problem_at, refine_and_resolve, solve_point, track_branch, BranchLoss,
    BranchPoint,
};
use crate::discretization::{Model, Problem};
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Track,
    Stability,
    Refine,
    Export,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub output: PathBuf,
    pub continue_on_failure: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidSpace(_) => RunError::Config(e.to_string()),
            Error::Io(_) | Error::Checkpoint(_) => RunError::Io(e.to_string()),
            _ => RunError::Solver(e.to_string()),
        }
    }
}

/// Files written and solver failures tolerated under `continue_on_failure`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub files: Vec<String>,
    pub failures: Vec<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    opts: &'a RunOptions,
    hash: String,
    summary: RunSummary,
}

impl Ctx<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.opts.output.join(name)
    }

    fn record(&mut self, name: &str) {
        self.summary.files.push(name.to_string());
    }

    fn fail(&mut self, msg: String) -> Result<(), RunError> {
        if self.opts.continue_on_failure {
            log::warn!("continuing after failure: {msg}");
            self.summary.failures.push(msg);
            Ok(())
        } else {
            Err(RunError::Solver(msg))
        }
    }

    fn checkpoint(&mut self, name: &str, point: &BranchPoint) -> Result<(), RunError> {
        Checkpoint::from_point(point, &self.hash).save(&self.path(name))?;
        self.record(name);
        Ok(())
    }

    fn text(&mut self, name: &str, text: String) -> Result<(), RunError> {
        std::fs::write(self.path(name), text).map_err(|e| RunError::Io(format!("{name}: {e}")))?;
        self.record(name);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), RunError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(e.to_string()))?;
        self.text(name, text + "\n")
    }

    fn energy(&mut self, name: &str, points: &[BranchPoint]) -> Result<(), RunError> {
        write_energy_curve(&self.path(name), points)?;
        self.record(name);
        Ok(())
    }

    fn fields(&mut self, stem: &str, base: &Problem, point: &BranchPoint, force: bool) -> Result<(), RunError> {
        let e = &self.cfg.export;
        if !(e.fields || force) {
            return Ok(());
        }
        let p = problem_at(base, point.b5, point.l)?;
        let params = match p.model() {
            Model::ThreeD(m) => Some(*m),
            Model::OneD(_) => None,
        };
        let n = e.samples_for(p.space().dim());
        let files = export_fields(&self.opts.output, stem, &point.coeffs, params.as_ref(), n, e.strain_scatter)?;
        self.summary.files.extend(files);
        Ok(())
    }

    /// Starting state: the resumed checkpoint, or a Newton solve from the
    /// configured initial guess (re-solved at the checkpoint parameters).
    fn start(&mut self, base: &Problem) -> Result<BranchPoint, RunError> {
        let newton = self.cfg.newton_settings();
        let (problem, initial) = match &self.cfg.resume {
            Some(path) => {
                let ck = Checkpoint::load(path)?;
                ck.check_hash(&self.hash, self.cfg.ignore_config_hash).map_err(|e| RunError::Config(e.to_string()))?;
                if ck.coeffs.space != *base.space() {
                    return Err(RunError::Config(format!(
                        "checkpoint {} was written on a different spline space",
                        path.display()
                    )));
                }
                let h = &ck.header;
                (problem_at(base, h.b5, h.l)?, ck.coeffs)
            }
            None => (base.clone(), make_initial_guess(base, &self.cfg.initial_guess)?),
        };
        let point = solve_point(&problem, &initial, &newton)?;
        log::info!(
            "start: {:?} after {} iterations, |r| = {:e}, energy {}",
            point.report.status,
            point.report.iterations,
            point.report.residual_norm,
            point.energy
        );
        if !point.converged() {
            self.fail(format!(
                "Newton {:?} at b5 {:?}, l {} with |r| = {:e}",
                point.report.status, point.b5, point.l, point.report.residual_norm
            ))?;
        }
        Ok(point)
    }

    fn stability(&mut self, base: &Problem, point: BranchPoint) -> Result<BranchPoint, RunError> {
        match self.cfg.eigen {
            Some(eig) => match assess_stability(base, &point, &eig) {
                Ok(p) => Ok(p),
                Err(e) => {
                    self.fail(e.to_string())?;
                    Ok(point)
                }
            },
            None => Ok(point),
        }
    }
}

#[derive(Serialize)]
struct TrackSummary<'a> {
    points: usize,
    legs: &'a [Option<usize>],
    jumps: &'a [usize],
    lost: &'a Option<BranchLoss>,
    config_hash: &'a str,
}

/// Executes one study and writes its artifacts into `opts.output`.
pub fn run(command: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(&opts.output)
        .map_err(|e| RunError::Io(format!("cannot create {}: {e}", opts.output.display())))?;
    let base = cfg.problem()?;
    let mut ctx = Ctx { cfg, opts, hash: cfg.problem_hash(), summary: RunSummary::default() };
    match command {
        Command::Solve => {
            let point = ctx.start(&base)?;
            let point = ctx.stability(&base, point)?;
            ctx.checkpoint("solution.ckpt", &point)?;
            ctx.energy("energy.csv", std::slice::from_ref(&point))?;
            ctx.json("report.json", &point.report)?;
            ctx.fields("solution", &base, &point, false)?;
        }
        Command::Stability => {
            if cfg.eigen.is_none() {
                return Err(RunError::Config("stability needs an \"eigen\" section".into()));
            }
            let point = ctx.start(&base)?;
            let point = ctx.stability(&base, point)?;
            let mut s = String::from("index,eigenvalue\n");
            for (i, v) in point.smallest_eigs.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", fmt(*v));
            }
            ctx.text("stability.csv", s)?;
            ctx.checkpoint("solution.ckpt", &point)?;
            ctx.energy("energy.csv", std::slice::from_ref(&point))?;
        }
        Command::Track => {
            if cfg.track.is_none() {
                return Err(RunError::Config("track needs a \"track\" section".into()));
            }
            let start = ctx.start(&base)?;
            let schedule = cfg.schedule_from((start.b5, start.l))?;
            let along = cfg.track.as_ref().is_some_and(|t| t.stability_along);
            let curve = track_branch(&base, start, &schedule, &cfg.track_settings(along), Some(cfg.initial_guess))?;
            let last = curve.last().clone();
            let last = if along { last } else { ctx.stability(&base, last)? };
            let mut points = curve.points.clone();
            *points.last_mut().expect("nonempty curve") = last.clone();
            ctx.energy("energy_curve.csv", &points)?;
            let summary = TrackSummary {
                points: points.len(),
                legs: &curve.legs,
                jumps: &curve.jumps,
                lost: &curve.lost,
                config_hash: &ctx.hash.clone(),
            };
            ctx.json("track_summary.json", &summary)?;
            ctx.checkpoint("final.ckpt", &last)?;
            ctx.fields("final", &base, &last, false)?;
            if let Some(loss) = &curve.lost {
                ctx.fail(format!("branch lost on leg {} at {}: {}", loss.leg, loss.at, loss.reason))?;
            }
        }
        Command::Refine => {
            let start = ctx.start(&base)?;
            let start = if cfg.refine.stability { ctx.stability(&base, start)? } else { start };
            let mut s = String::from("level,elements,energy_transferred,energy_resolved,relative_change,min_eig,converged\n");
            let _ = writeln!(
                s,
                "0,{},,{},,{},{}",
                base.space().elements_per_direction(),
                fmt(start.energy),
                start.min_eig().map(fmt).unwrap_or_default(),
                start.converged()
            );
            let newton = cfg.newton_settings();
            let mut problem = base.clone();
            let mut point = start;
            for level in 1..=cfg.refine.levels {
                let (fine, r) = refine_and_resolve(&problem, &point, 1, &newton)?;
                let mut resolved = r.resolved;
                if cfg.refine.stability {
                    resolved = ctx.stability(&fine, resolved)?;
                }
                let rel = (r.energy_after - point.energy).abs() / point.energy.abs().max(f64::MIN_POSITIVE);
                let _ = writeln!(
                    s,
                    "{level},{},{},{},{},{},{}",
                    fine.space().elements_per_direction(),
                    fmt(r.energy_before),
                    fmt(r.energy_after),
                    fmt(rel),
                    resolved.min_eig().map(fmt).unwrap_or_default(),
                    resolved.converged()
                );
                if !resolved.converged() {
                    ctx.fail(format!("re-solve on refinement level {level} did not converge"))?;
                }
                // fine checkpoints carry the hash of the coarse problem they came from
                ctx.checkpoint(&format!("refined_{level}.ckpt"), &resolved)?;
                problem = fine;
                point = resolved;
            }
            ctx.text("refinement.csv", s)?;
        }
        Command::Export => {
            let point = match &cfg.resume {
                Some(path) => {
                    let ck = Checkpoint::load(path)?;
                    ck.check_hash(&ctx.hash, cfg.ignore_config_hash).map_err(|e| RunError::Config(e.to_string()))?;
                    ck.to_point()
                }
                None => ctx.start(&base)?,
            };
            let base = Problem::new(point.coeffs.space.clone(), *base.model(), *base.bcs())?;
            ctx.fields("state", &base, &point, true)?;
            ctx.energy("energy.csv", std::slice::from_ref(&point))?;
        }
    }
    Ok(ctx.summary)
}

/// Loads a configuration file, mapping read and parse failures to exit 2.
pub fn load_config(path: &Path) -> Result<RunConfig, RunError> {
    RunConfig::load(path).map_err(|e| RunError::Config(e.to_string()))
}
