use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use defect_lattice::experiments::{self, Context, ExperimentConfig, ExperimentParams, PhaseFamily};
use defect_lattice::grammar::{parse_range, LatticeSpec, ObjectiveSpec};
use defect_lattice::optimize::{minimize2d, phase_rows_csv, phase_strip_svg, GridSpec, Sense};
use defect_lattice::{json, sums, DefectSpec, Error, Lattice, Potential, SumConfig};
use serde::{Deserialize, Serialize};

/// Lattice energies with periodic vacancies and substitutional defects.
#[derive(Parser)]
#[command(name = "latdef", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Global {
    /// Target absolute truncation error of every lattice sum.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cap on enumerated lattice points per sum.
    #[arg(long, global = true)]
    max_points: Option<usize>,
    /// Threads for grid scans; 0 uses all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random lattices in `verify`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON, CSV and SVG outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// E_f[L], or E_f^κ[L] with --defects.
    Energy(EnergyArgs),
    /// θ_L(α), θ_{L+c_L}(α) or θ^±_L(α).
    Theta(ThetaArgs),
    /// Epstein zeta ζ_L(2s).
    Zeta(ZetaArgs),
    /// Optimize over two-dimensional lattices of fixed volume.
    Minimize(MinimizeArgs),
    /// Minimizer shape along a one-parameter family.
    Scan(ScanArgs),
    /// Run a named experiment; exit 1 when a check fails.
    Verify(VerifyArgs),
    /// SVG of the charged patch of a lattice.
    Render(RenderArgs),
    /// Run a command from a run-config JSON file.
    #[serde(skip)]
    Run(RunArgs),
}

fn build_lattice(lattice: &str, volume: Option<f64>) -> Result<Lattice, Error> {
    lattice.parse::<LatticeSpec>()?.build(volume)
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyArgs {
    /// Named lattice (Z2, A2, Z3, D3, D3Star), `basis:1,0;0.5,0.866` or `param:x=0.5,y=0.866`.
    #[arg(long)]
    lattice: String,
    #[arg(long)]
    #[serde(default)]
    volume: Option<f64>,
    /// `ip:s=2`, `lj:c1=1,c2=1,x1=3,x2=6`, `gauss:alpha=0.5` or `yuk:sigma=1,s=2`.
    #[arg(long)]
    potential: String,
    /// Defect spec JSON file.
    #[arg(long)]
    #[serde(default)]
    defects: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaArgs {
    /// Named lattice (Z2, A2, Z3, D3, D3Star), `basis:1,0;0.5,0.866` or `param:x=0.5,y=0.866`.
    #[arg(long)]
    lattice: String,
    #[arg(long)]
    #[serde(default)]
    volume: Option<f64>,
    #[arg(long)]
    alpha: f64,
    /// Shift by the centre of the reduced cell.
    #[arg(long, conflicts_with = "alternating")]
    #[serde(default)]
    center: bool,
    /// Signs (−1)^{m₁+…+m_d}.
    #[arg(long)]
    #[serde(default)]
    alternating: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZetaArgs {
    /// Named lattice (Z2, A2, Z3, D3, D3Star), `basis:1,0;0.5,0.866` or `param:x=0.5,y=0.866`.
    #[arg(long)]
    lattice: String,
    #[arg(long)]
    #[serde(default)]
    volume: Option<f64>,
    /// Exponent `s`; the sum is over |p|^{−2s}.
    #[arg(long)]
    s: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinimizeArgs {
    /// `theta:alpha=1`, `theta-alt:alpha=1`, `theta-center:alpha=1`, `zeta:s=2`.
    #[arg(long, required_unless_present = "potential", conflicts_with = "potential")]
    #[serde(default)]
    objective: Option<String>,
    /// Potential of the energy to optimize.
    #[arg(long)]
    #[serde(default)]
    potential: Option<String>,
    /// Defect spec JSON file, used with --potential.
    #[arg(long, requires = "potential")]
    #[serde(default)]
    defects: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    volume: f64,
    /// Maximize instead of minimize.
    #[arg(long)]
    #[serde(default)]
    max: bool,
    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    #[serde(default = "grid_default")]
    grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanArgs {
    /// `gauss-two-term:a=0.1,factor=2`, `gauss-defect:k=2,a=0.1` or `shifted-theta:a=-0.1`.
    #[arg(long)]
    family: String,
    /// `start:stop:count`.
    #[arg(long, default_value = "0.1:4:64")]
    #[serde(default = "alphas_default")]
    alphas: String,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    volume: f64,
    /// Start every refinement from the grid optimum only.
    #[arg(long)]
    #[serde(default)]
    cold: bool,
    #[arg(long, default_value_t = 64)]
    #[serde(default = "grid_default")]
    grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyArgs {
    /// thm0, thm02, thm2ip, thm3lj, kagome, ionic, jacobi, laplace or phase.
    experiment: String,
    /// JSON file with the full experiment parameters.
    #[arg(long)]
    #[serde(default)]
    params: Option<PathBuf>,
    /// Defect spec JSON file for the `spec` parameter.
    #[arg(long)]
    #[serde(default)]
    spec: Option<PathBuf>,
    /// Value of the `s` parameter.
    #[arg(long)]
    #[serde(default)]
    s: Option<f64>,
    /// Override one parameter, `key=<json value>`; repeatable.
    #[arg(long = "set")]
    #[serde(default)]
    set: Vec<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderArgs {
    /// Named lattice (Z2, A2, Z3, D3, D3Star), `basis:1,0;0.5,0.866` or `param:x=0.5,y=0.866`.
    #[arg(long)]
    lattice: String,
    #[arg(long)]
    #[serde(default)]
    volume: Option<f64>,
    /// Defect spec JSON file; without it the plain lattice is drawn.
    #[arg(long)]
    #[serde(default)]
    defects: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    #[serde(default = "radius_default")]
    radius: f64,
}

#[derive(Args, Debug, Clone, PartialEq)]
struct RunArgs {
    config: PathBuf,
}

/// A command together with the global options, as read by `latdef run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    command: Command,
    #[serde(default)]
    options: Global,
}

fn one() -> f64 {
    1.0
}

fn grid_default() -> usize {
    64
}

fn alphas_default() -> String {
    "0.1:4:64".into()
}

fn radius_default() -> f64 {
    5.0
}

enum Failure {
    Lib(Error),
    Usage(String),
    Checks(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Lib(Error::CapExceeded { .. }) => 3,
            Failure::Lib(Error::ObjectiveFailure { reason, .. }) if reason.starts_with("point cap") => 3,
            Failure::Lib(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Usage(m) | Failure::Checks(m) => m.clone(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn defects(path: &Option<PathBuf>) -> Result<Option<DefectSpec>, Failure> {
    match path {
        None => Ok(None),
        Some(p) => DefectSpec::from_json(&read(p)?)
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
    }
}

struct Runner {
    global: Global,
    command: Command,
}

impl Runner {
    fn sums(&self) -> SumConfig {
        let mut cfg = SumConfig::default();
        if let Some(t) = self.global.tol {
            cfg.tol = t;
        }
        if let Some(m) = self.global.max_points {
            cfg.max_points = m;
        }
        cfg
    }

    fn grid(&self, n: usize) -> GridSpec {
        let mut g = GridSpec::with_size(n, n);
        g.workers = self.global.workers.unwrap_or(0);
        g
    }

    fn emit<T: Serialize>(&self, name: &str, value: &T) -> Outcome {
        let s = json::to_string_17(value)?;
        println!("{s}");
        self.save(&format!("{name}.json"), &s)
    }

    fn save(&self, file: &str, contents: &str) -> Outcome {
        if let Some(dir) = &self.global.out {
            fs::create_dir_all(dir).map_err(Error::from)?;
            fs::write(dir.join(file), contents).map_err(Error::from)?;
        }
        Ok(())
    }

    fn echo_config(&self) -> Outcome {
        if self.global.out.is_none() {
            return Ok(());
        }
        let cfg = RunConfig {
            command: self.command.clone(),
            options: Global {
                out: None,
                ..self.global.clone()
            },
        };
        self.save("run_config.json", &json::to_string_17(&cfg)?)
    }

    fn run(&self) -> Outcome {
        self.sums().validate()?;
        match &self.command {
            Command::Energy(a) => self.energy(a),
            Command::Theta(a) => self.theta(a),
            Command::Zeta(a) => self.zeta(a),
            Command::Minimize(a) => self.minimize(a),
            Command::Scan(a) => self.scan(a),
            Command::Verify(a) => self.verify(a),
            Command::Render(a) => self.render(a),
            Command::Run(a) => run_config(&a.config, &self.global),
        }
    }

    fn energy(&self, a: &EnergyArgs) -> Outcome {
        let l = build_lattice(&a.lattice, a.volume)?;
        let f: Potential = a.potential.parse()?;
        let v = match defects(&a.defects)? {
            Some(spec) => sums::energy_defect(&l, &f, &spec, &self.sums())?,
            None => sums::energy(&l, &f, &self.sums())?,
        };
        self.echo_config()?;
        self.emit("energy", &v)
    }

    fn theta(&self, a: &ThetaArgs) -> Outcome {
        let l = build_lattice(&a.lattice, a.volume)?;
        let cfg = self.sums();
        let v = if a.center {
            sums::theta_centered(&l, a.alpha, &cfg)?
        } else if a.alternating {
            sums::theta_alternating(&l, a.alpha, &cfg)?
        } else {
            sums::theta(&l, a.alpha, &cfg)?
        };
        self.echo_config()?;
        self.emit("theta", &v)
    }

    fn zeta(&self, a: &ZetaArgs) -> Outcome {
        let l = build_lattice(&a.lattice, a.volume)?;
        let v = sums::epstein_zeta(&l, 2.0 * a.s, &self.sums())?;
        self.echo_config()?;
        self.emit("zeta", &v)
    }

    fn minimize(&self, a: &MinimizeArgs) -> Outcome {
        let spec = match (&a.objective, &a.potential) {
            (Some(o), None) => o.parse::<ObjectiveSpec>()?,
            (None, Some(p)) => ObjectiveSpec::Energy {
                potential: p.parse()?,
                defects: defects(&a.defects)?,
            },
            _ => return Err(Failure::Usage("give exactly one of --objective and --potential".into())),
        };
        let sense = if a.max { Sense::Max } else { Sense::Min };
        let grid = self.grid(a.grid);
        grid.validate()?;
        let r = minimize2d(&spec.build(self.sums()), a.volume, &grid, sense)?;
        self.echo_config()?;
        self.save("minimize.csv", &r.to_csv())?;
        self.emit("minimize", &r)
    }

    fn scan(&self, a: &ScanArgs) -> Outcome {
        let family: PhaseFamily = a.family.parse()?;
        let alphas = parse_range(&a.alphas)?;
        let grid = self.grid(a.grid);
        grid.validate()?;
        let rows = family.scan(&alphas, a.volume, &grid, self.sums(), !a.cold)?;
        let csv = phase_rows_csv(&rows);
        print!("{csv}");
        self.echo_config()?;
        self.save("scan.csv", &csv)?;
        self.save("scan.svg", &phase_strip_svg(&rows, &family.label()))?;
        self.save("scan.json", &json::to_string_17(&rows)?)
    }

    fn verify(&self, a: &VerifyArgs) -> Outcome {
        let params = self.verify_params(a)?;
        let mut context = Context::default();
        context.sums = self.sums();
        context.grid.workers = self.global.workers.unwrap_or(0);
        if let Some(seed) = self.global.seed {
            context.seed = seed;
        }
        let report = experiments::run(&ExperimentConfig { params, context })?;
        if let Some(dir) = &self.global.out {
            report.write(dir)?;
        }
        self.echo_config()?;
        println!("{}", json::to_string_17(&report)?);
        if report.passed {
            Ok(())
        } else {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.description.as_str())
                .collect();
            Err(Failure::Checks(format!("{}: failed checks: {}", report.name, failed.join("; "))))
        }
    }

    fn verify_params(&self, a: &VerifyArgs) -> Result<ExperimentParams, Failure> {
        let mut value = match &a.params {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
            None => {
                let d = ExperimentParams::default_for(&a.experiment).ok_or_else(|| {
                    Failure::Usage(format!(
                        "unknown experiment `{}`; expected one of {}",
                        a.experiment,
                        ExperimentParams::NAMES.join(", ")
                    ))
                })?;
                serde_json::to_value(d).map_err(Error::from)?
            }
        };
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Failure::Usage("parameters must be a JSON object".into()))?;
        obj.insert("experiment".into(), serde_json::Value::String(a.experiment.clone()));
        if let Some(p) = &a.spec {
            let spec: serde_json::Value =
                serde_json::from_str(&read(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            obj.insert("spec".into(), spec);
        }
        if let Some(s) = a.s {
            obj.insert("s".into(), serde_json::json!(s));
        }
        for kv in &a.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got `{kv}`")))?;
            let v = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
            obj.insert(k.to_string(), v);
        }
        serde_json::from_value(value).map_err(|e| Failure::Usage(format!("parameters of `{}`: {e}", a.experiment)))
    }

    fn render(&self, a: &RenderArgs) -> Outcome {
        let l = build_lattice(&a.lattice, a.volume)?;
        let spec = defects(&a.defects)?.unwrap_or_else(DefectSpec::empty);
        let patch = sums::materialize(&l, &spec, a.radius, self.sums().max_points)?;
        let svg = patch.to_svg()?;
        self.echo_config()?;
        self.save("patch.csv", &patch.to_csv())?;
        self.save("patch.svg", &svg)?;
        if self.global.out.is_none() {
            print!("{svg}");
        }
        Ok(())
    }
}

fn run_config(path: &Path, outer: &Global) -> Outcome {
    let text = read(path)?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let merged = Global {
        tol: outer.tol.or(cfg.options.tol),
        max_points: outer.max_points.or(cfg.options.max_points),
        workers: outer.workers.or(cfg.options.workers),
        seed: outer.seed.or(cfg.options.seed),
        out: outer.out.clone().or(cfg.options.out),
    };
    Runner {
        global: merged,
        command: cfg.command,
    }
    .run()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let runner = Runner {
        global: cli.global,
        command: cli.command,
    };
    match runner.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
