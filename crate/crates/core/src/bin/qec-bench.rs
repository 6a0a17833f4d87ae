use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qec_bench::bench::{run_to_csv, write_csv, ExperimentConfig};
use qec_bench::circuit::{parse_text, Circuit};
use qec_bench::decoder::{Decoder, DecoderMode};
use qec_bench::dem::{build_dem, DetectorErrorModel};
use qec_bench::framesim::{CompiledCircuit, DetectionTable};
use qec_bench::noise::{apply_noise, make_builtin_family, CircuitContext, Family, FamilyConfig};
use qec_bench::primitives::{
    spacetime_volume, HadamardSpec, LatticeSurgerySpec, MemorySpec, Parity, PatchGeometry, PhaseGateSpec,
    PrimitiveSpec,
};
use qec_bench::Basis;

/// Surface-code primitive benchmarks under structured noise.
#[derive(Parser)]
#[command(name = "qec-bench", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a primitive circuit, noisy when a family is given.
    Gen {
        #[command(flatten)]
        prim: PrimArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the detector error model of a noisy circuit.
    Dem {
        /// Circuit text; generated from the primitive flags when omitted.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[command(flatten)]
        prim: PrimArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sample detection events into a packed dump.
    Sample {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode a dump against a DEM and report logical errors.
    Decode {
        #[arg(long)]
        dem: PathBuf,
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Uncorrelated)]
        mode: ModeArg,
        /// Side decoded first in correlated mode.
        #[arg(long, value_enum, default_value_t = BasisArg::Z)]
        first: BasisArg,
        /// Score one observable instead of all.
        #[arg(long)]
        observable: Option<usize>,
    },
    /// Run a sweep described by a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output; printed to stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write a JSON sidecar next to the CSV.
        #[arg(long)]
        json: bool,
    },
    /// Print the spacetime volume of a primitive.
    Volume {
        #[command(flatten)]
        prim: PrimArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrimKind {
    Memory,
    Hadamard,
    LatticeSurgery,
    PhaseGate,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    X,
    Z,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Basis {
        match b {
            BasisArg::X => Basis::X,
            BasisArg::Z => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Xx,
    Zz,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uncorrelated,
    Correlated,
}

#[derive(Args)]
struct PrimArgs {
    #[arg(long, value_enum, default_value_t = PrimKind::Memory)]
    primitive: PrimKind,
    #[arg(long, default_value_t = 3)]
    dx: usize,
    #[arg(long, default_value_t = 3)]
    dz: usize,
    /// Memory rounds.
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    #[arg(long, value_enum, default_value_t = BasisArg::Z)]
    basis: BasisArg,
    #[arg(long, value_enum, default_value_t = ParityArg::Zz)]
    parity: ParityArg,
    #[arg(long = "bridge", default_value_t = 1)]
    bridge_length: usize,
    #[arg(long, default_value_t = 3)]
    t_pre: usize,
    #[arg(long, default_value_t = 3)]
    t_merge: usize,
    #[arg(long, default_value_t = 3)]
    t_post: usize,
    #[arg(long, default_value_t = 2)]
    t_boundary: usize,
}

impl PrimArgs {
    fn spec(&self) -> PrimitiveSpec {
        let geometry = PatchGeometry::new(self.dx, self.dz);
        match self.primitive {
            PrimKind::Memory => PrimitiveSpec::Memory(MemorySpec { geometry, rounds: self.rounds, basis: self.basis.into() }),
            PrimKind::Hadamard => PrimitiveSpec::Hadamard(HadamardSpec {
                geometry,
                t_pre: self.t_pre,
                t_post: self.t_post,
                basis: self.basis.into(),
            }),
            PrimKind::LatticeSurgery => PrimitiveSpec::LatticeSurgery(LatticeSurgerySpec {
                geometry,
                bridge_length: self.bridge_length,
                t_pre: self.t_pre,
                t_merge: self.t_merge,
                t_post: self.t_post,
                parity: match self.parity {
                    ParityArg::Xx => Parity::XX,
                    ParityArg::Zz => Parity::ZZ,
                },
            }),
            PrimKind::PhaseGate => PrimitiveSpec::PhaseGate(PhaseGateSpec {
                d: self.dx.min(self.dz),
                bridge_length: self.bridge_length,
                t_merge: self.t_merge,
                t_boundary: self.t_boundary,
            }),
        }
    }
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    axis: Option<BasisArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "noise-seed")]
    noise_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Uniform,
    Biased,
    MeasurementBiased,
    NonUniformSpatial,
    NonUniformSpatioTemporal,
}

impl NoiseArgs {
    fn config(&self) -> Result<Option<FamilyConfig>> {
        let family = match (self.family, self.p) {
            (None, None) => return Ok(None),
            (Some(f), Some(_)) => f,
            (None, Some(_)) => FamilyArg::Uniform,
            (Some(_), None) => bail!("--family requires --p"),
        };
        let family = match family {
            FamilyArg::Uniform => Family::Uniform,
            FamilyArg::Biased => Family::Biased,
            FamilyArg::MeasurementBiased => Family::MeasurementBiased,
            FamilyArg::NonUniformSpatial => Family::NonUniformSpatial,
            FamilyArg::NonUniformSpatioTemporal => Family::NonUniformSpatioTemporal,
        };
        let c = FamilyConfig {
            family,
            p: self.p.unwrap(),
            eta: self.eta,
            axis: self.axis.map(Basis::from),
            sigma: self.sigma,
            seed: self.noise_seed,
        };
        c.validate()?;
        Ok(Some(c))
    }
}

fn build_circuit(prim: &PrimArgs, noise: &NoiseArgs) -> Result<Circuit> {
    let c = prim.spec().generate()?;
    match noise.config()? {
        None => Ok(c),
        Some(f) => {
            let a = make_builtin_family(&f, &CircuitContext::from_circuit(&c))?;
            Ok(apply_noise(&c, &a)?)
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

fn read_circuit(path: &PathBuf) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_text(&text)?)
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var("QEC_BENCH_WORKERS") {
        let n: usize = v.parse().with_context(|| format!("QEC_BENCH_WORKERS must be an integer, got {:?}", v))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    match cli.cmd {
        Cmd::Gen { prim, noise, out } => emit(&out, build_circuit(&prim, &noise)?.to_text().as_bytes()),
        Cmd::Dem { circuit, prim, noise, out } => {
            let c = match circuit {
                Some(p) => read_circuit(&p)?,
                None => build_circuit(&prim, &noise)?,
            };
            emit(&out, build_dem(&c)?.to_text().as_bytes())
        }
        Cmd::Sample { circuit, shots, seed, out } => {
            let c = read_circuit(&circuit)?;
            let table = CompiledCircuit::new(&c)?.sample_range(0, shots, seed);
            fs::write(&out, table.to_b8())?;
            eprintln!("{} shots, {} detectors, {} observables", shots, table.num_detectors, table.num_observables);
            Ok(())
        }
        Cmd::Decode { dem, dump, mode, first, observable } => {
            let dem = DetectorErrorModel::parse(&fs::read_to_string(&dem)?)?;
            let bytes = fs::read(&dump)?;
            let table = DetectionTable::from_b8(&bytes, dem.detectors.len(), dem.num_observables);
            let mode = match mode {
                ModeArg::Uncorrelated => DecoderMode::Uncorrelated,
                ModeArg::Correlated => DecoderMode::Correlated,
            };
            let mut decoder = Decoder::new(&dem, mode)?;
            decoder.first = first.into();
            let pred = decoder.decode_batch(&table)?;
            let errors = pred
                .iter()
                .enumerate()
                .filter(|&(s, &m)| match observable {
                    Some(k) => (m >> k & 1 == 1) != table.observable(s, k),
                    None => m != table.observable_mask(s),
                })
                .count();
            let ler = if table.shots == 0 { 0.0 } else { errors as f64 / table.shots as f64 };
            println!("shots {}\nerrors {}\nler {:e}", table.shots, errors, ler);
            Ok(())
        }
        Cmd::Bench { config, seed, out, json } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            match out {
                Some(p) => {
                    run_to_csv(&cfg, &p, json)?;
                }
                None => {
                    let results = qec_bench::bench::run_experiment(&cfg)?;
                    write_csv(std::io::stdout(), &results)?;
                }
            }
            Ok(())
        }
        Cmd::Volume { prim } => {
            println!("{}", spacetime_volume(&prim.spec())?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
