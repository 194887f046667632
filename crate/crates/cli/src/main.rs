//! `porcupine`: batch runner over the fiber-map toolkit.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use porcupine_core::domains::{self, classify_fiber, domain_at_depth, nontrivial_family, width_profile};
use porcupine_core::error::Error;
use porcupine_core::fiber_maps::{build_pair, FamilySpec, FiberMapPair, DEFAULT_RESOLUTION};
use porcupine_core::itinerary::{image, periodic_point_near, sweep, Interval};
use porcupine_core::skew3d::{self, HorseshoeModel, Point3};
use porcupine_core::spectrum::{self, Symbols};
use porcupine_core::symbolic::{SeqSpec, Word};
use porcupine_core::thermo::{self, PhaseControls};
use serde::Serialize;
use serde_json::json;

use output::{emit, render, Artifact, Format};

/// Longest word length accepted for full enumeration.
const MAX_ENUM: usize = 20;

#[derive(Parser, Debug)]
#[command(name = "porcupine", version, about = "Fiber maps, spectra, pressure and spines of a porcupine-like skew product")]
struct Cli {
    /// Family JSON: a file path or an inline object. Defaults to the built-in canonical family.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Horseshoe contraction rate.
    #[arg(long, global = true, default_value_t = skew3d::DEFAULT_SIGMA_S)]
    sigma_s: f64,
    /// Horseshoe expansion rate.
    #[arg(long, global = true, default_value_t = skew3d::DEFAULT_SIGMA_U)]
    sigma_u: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "PORCUPINE_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the family conditions on a grid.
    Validate {
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: f64,
    },
    /// Finite-time fiber exponent along a periodic word or a sequence.
    Lyap {
        #[command(flatten)]
        symbols: SymbolArgs,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: usize,
    },
    /// Periodic orbits of one word, or of every word of length n.
    FixedPoints {
        #[arg(long, conflicts_with = "n")]
        word: Option<Word>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = spectrum::DEFAULT_SCAN)]
        scan: usize,
    },
    /// Domain of a finite left word, or the width profile of a sequence.
    Domain {
        #[arg(long, conflicts_with = "seq")]
        left: Option<Word>,
        #[arg(long, requires = "depths")]
        seq: Option<SeqSpec>,
        #[arg(long, value_delimiter = ',')]
        depths: Vec<usize>,
    },
    /// Classify the fiber over a sequence.
    Fiber {
        #[arg(long)]
        seq: SeqSpec,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        #[arg(long, default_value_t = 1e-8)]
        width_tol: f64,
    },
    /// Sequences whose fibers contain a given interval.
    Family {
        #[arg(long)]
        j_lo: f64,
        #[arg(long)]
        j_hi: f64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Right half of the sequences, e.g. ". 1 [0*]".
        #[arg(long, default_value = ". [0*]")]
        plus: SeqSpec,
    },
    /// Word whose image of H covers the fundamental domain.
    Sweep {
        #[arg(long)]
        h_lo: f64,
        #[arg(long)]
        h_hi: f64,
    },
    /// Periodic orbit with exponent in (-eps, 0) or (0, eps).
    NearZero {
        #[arg(long, value_enum)]
        sign: Sign,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Spectral gap from periodic orbits of length up to nmax.
    Gap {
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Exponents of all periodic orbits of length up to nmax.
    Spectrum {
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Pressure curve, or a subgradient check at one t.
    Pressure {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t_hi: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, allow_hyphen_values = true)]
        subgradient: Option<f64>,
    },
    /// Locate the phase transition t_Q.
    Transition {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        t_lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_hi: Option<f64>,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Base point and fiber enclosure over a sequence.
    Spine {
        #[arg(long)]
        seq: SeqSpec,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        #[arg(long, default_value_t = 1e-8)]
        width_tol: f64,
    },
    /// Heterodimensional cycle checks between P and Q.
    Cycle,
    /// Expanding periodic point near x, lifted to the skew product.
    PeriodicNear {
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Forward trajectory of a point of the cube.
    Orbit {
        #[arg(long)]
        xs: f64,
        #[arg(long)]
        xu: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct SymbolArgs {
    /// Repeated periodically.
    #[arg(long)]
    word: Option<Word>,
    /// Read from xi_0 onwards.
    #[arg(long)]
    seq: Option<SeqSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Sign {
    Neg,
    Pos,
}

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(m: impl Into<String>) -> Failure {
        Failure { code: 2, message: m.into() }
    }

    pub fn internal(m: impl Into<String>) -> Failure {
        Failure { code: 1, message: m.into() }
    }

    /// Bad inputs are usage errors; everything else is a negative analysis outcome.
    pub fn analysis(e: Error) -> Failure {
        let code = match e {
            Error::Parameter(_) | Error::Parse(_) | Error::Domain(_) | Error::Precondition(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::analysis(e)
    }
}

fn load_family(arg: Option<&str>) -> Result<FamilySpec, Failure> {
    let Some(a) = arg else { return Ok(FamilySpec::canonical()) };
    let text = if a.trim_start().starts_with('{') {
        a.to_string()
    } else {
        std::fs::read_to_string(Path::new(a)).map_err(|e| Failure::usage(format!("cannot read family file {a}: {e}")))?
    };
    FamilySpec::from_json(&text).map_err(|e| Failure::usage(e.to_string()))
}

fn enum_limit(n: usize, name: &str) -> Result<(), Failure> {
    if (1..=MAX_ENUM).contains(&n) {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must lie in 1..={MAX_ENUM}")))
    }
}

fn progress(msg: &str) {
    eprintln!("porcupine: {msg}");
}

/// Runs one command. The flag says whether the analysis came out positive.
fn run(cli: &Cli, pair: &FiberMapPair) -> Result<(Artifact, bool), Failure> {
    let model = || HorseshoeModel::new(cli.sigma_s, cli.sigma_u, pair).map_err(Failure::analysis);
    Ok(match &cli.command {
        Command::Validate { resolution } => {
            if !(*resolution > 0.0 && *resolution < 0.5) {
                return Err(Failure::usage("--resolution must lie in (0, 0.5)"));
            }
            let r = pair.validate(*resolution);
            let rows: Vec<_> = r
                .conditions
                .iter()
                .chain(&r.optional)
                .map(|c| json!({"name": c.name, "passed": c.passed, "margin": c.margin, "witness": c.witness}))
                .collect();
            (Artifact::with_rows(&r, &rows)?, r.all_pass)
        }
        Command::Lyap { symbols, x, n } => {
            if !(0.0..=1.0).contains(x) {
                return Err(Failure::usage("--x must lie in [0,1]"));
            }
            let (src, label) = match (&symbols.word, &symbols.seq) {
                (Some(w), _) if !w.is_empty() => (Symbols::Word(w.clone()), w.to_string()),
                (Some(_), _) => return Err(Failure::usage("--word must be nonempty")),
                (None, Some(s)) => (Symbols::Seq(s.clone()), s.to_string()),
                (None, None) => unreachable!("clap enforces the group"),
            };
            let e = spectrum::finite_time_exponent(pair, &src, *x, *n)?;
            (Artifact::json(&json!({"symbols": label, "x": x, "n": n, "exponent": e}))?, true)
        }
        Command::FixedPoints { word, n, scan } => {
            let orbits = match (word, n) {
                (Some(w), _) => spectrum::fixed_points_with(pair, w, *scan)?,
                (None, Some(n)) => {
                    enum_limit(*n, "n")?;
                    spectrum::enumerate_orbits(pair, *n..=*n)
                }
                (None, None) => return Err(Failure::usage("give --word or --n")),
            };
            let rows: Vec<_> = orbits.iter().map(spectrum::SpectrumEntry::from).collect();
            (Artifact::with_rows(&rows, &rows)?, true)
        }
        Command::Domain { left, seq, depths } => match (left, seq) {
            (Some(w), _) => {
                let i = domain_at_depth(pair, w);
                (Artifact::json(&json!({"left": w, "lo": i.lo, "hi": i.hi, "width": i.width()}))?, true)
            }
            (None, Some(s)) => {
                let widths = width_profile(pair, s, depths)?;
                let rows: Vec<_> = depths.iter().zip(&widths).map(|(d, w)| json!({"depth": d, "width": w})).collect();
                (Artifact::with_rows(&json!({"seq": s, "depths": depths, "widths": widths}), &rows)?, true)
            }
            (None, None) => return Err(Failure::usage("give --left or --seq with --depths")),
        },
        Command::Fiber { seq, max_depth, width_tol } => {
            let d = classify_fiber(pair, seq, *max_depth, *width_tol)?;
            let rows = domains::domain_rows(pair, seq, &d);
            (Artifact::with_rows(&json!({"seq": seq, "domain": d}), &rows)?, true)
        }
        Command::Family { j_lo, j_hi, count, plus } => {
            let fam = nontrivial_family(pair, Interval::new(*j_lo, *j_hi), plus, *count)?;
            let rows: Vec<_> = fam
                .iter()
                .map(|m| {
                    let k: Vec<String> = m.k.iter().map(|k| k.to_string()).collect();
                    json!({"seq": m.seq, "k": k.join(" "), "depth": m.depth, "lo": m.domain.lo, "hi": m.domain.hi})
                })
                .collect();
            (Artifact::with_rows(&fam, &rows)?, true)
        }
        Command::Sweep { h_lo, h_hi } => {
            let h = Interval::new(*h_lo, *h_hi);
            let w = sweep(pair, h)?;
            let img = image(pair, &w, h);
            (Artifact::json(&json!({"h": h, "word": w, "length": w.len(), "image": img}))?, true)
        }
        Command::NearZero { sign, eps } => {
            let o = match sign {
                Sign::Neg => spectrum::near_zero_negative(pair, *eps)?,
                Sign::Pos => spectrum::near_zero_positive(pair, *eps)?,
            };
            let residual = o.residual(pair);
            let grid_max = spectrum::max_grid_deriv(pair, &o.word, 1001);
            (
                Artifact::json(&json!({"sign": sign, "eps": eps, "orbit": o, "residual": residual, "grid_max_derivative": grid_max}))?,
                true,
            )
        }
        Command::Gap { nmax } => {
            enum_limit(*nmax, "nmax")?;
            progress(&format!("enumerating periodic orbits up to length {nmax}"));
            let g = spectrum::gap_estimate(pair, *nmax)?;
            let ok = g.margin > 0.0;
            (Artifact::with_rows(&g, &g.levels)?, ok)
        }
        Command::Spectrum { nmax } => {
            enum_limit(*nmax, "nmax")?;
            progress(&format!("enumerating periodic orbits up to length {nmax}"));
            let s = spectrum::spectrum_sample(pair, *nmax)?;
            (Artifact::with_rows(&s, &s)?, true)
        }
        Command::Pressure { n, t_lo, t_hi, steps, subgradient } => {
            enum_limit(*n, "n")?;
            progress(&format!("enumerating periodic orbits up to length {n}"));
            if let Some(t) = subgradient {
                let r = thermo::subgradient_check(pair, *t, *n)?;
                let ok = r.all_hold;
                return Ok((Artifact::with_rows(&r, &r.cases)?, ok));
            }
            let orbits = spectrum::enumerate_orbits(pair, 1..=*n);
            let gap = spectrum::gap_from_orbits(pair, &orbits, *n);
            let table = thermo::OrbitTable::from_orbits(*n, orbits);
            let c = thermo::curve_from_table(&table, gap.log_beta, *t_lo, *t_hi, *steps, thermo::default_theta(&gap))?;
            let kink = c.kink.as_ref().map(|k| json!({"t_Q": k.t_q, "D_minus": k.d_minus, "D_plus": k.d_plus}));
            let doc = json!({
                "n": c.n,
                "t_grid": c.t_grid,
                "values": c.values,
                "slopes": c.slopes,
                "envelope": c.envelope,
                "envelope_slopes": c.envelope_slopes,
                "theta": c.theta,
                "kink": kink,
                "gap": {"beta_tilde_n": gap.beta_tilde_n},
                "entropy_note": thermo::ENTROPY_NOTE,
            });
            let rows: Vec<_> = (0..c.t_grid.len())
                .map(|i| json!({"t": c.t_grid[i], "pressure": c.values[i], "envelope": c.envelope[i]}))
                .collect();
            (Artifact::with_rows(&doc, &rows)?, true)
        }
        Command::Transition { n, t_lo, t_hi, steps, theta } => {
            enum_limit(*n, "n")?;
            let window = match (t_lo, t_hi) {
                (Some(a), Some(b)) => Some((*a, *b)),
                (None, None) => None,
                _ => return Err(Failure::usage("give both --t-lo and --t-hi or neither")),
            };
            progress(&format!("enumerating periodic orbits up to length {n}"));
            let controls = PhaseControls { window, steps: *steps, theta: *theta, ..PhaseControls::default() };
            let r = thermo::phase_transition(pair, *n, &controls)?;
            let ok = r.detected;
            (Artifact::json(&r)?, ok)
        }
        Command::Spine { seq, max_depth, width_tol } => {
            let s = skew3d::spine(&model()?, pair, seq, *max_depth, *width_tol)?;
            let rec = s.record();
            (Artifact::with_rows(&rec, std::slice::from_ref(&rec))?, true)
        }
        Command::Cycle => {
            let r = skew3d::verify_cycle(&model()?, pair)?;
            let ok = r.all_pass;
            (Artifact::with_rows(&r, &r.checks)?, ok)
        }
        Command::PeriodicNear { x, eps } => {
            let m = model()?;
            let o = periodic_point_near(pair, *x, *eps)?;
            let lifted = skew3d::lift_periodic(&m, pair, &o)?;
            (Artifact::json(&json!({"x": x, "eps": eps, "residual": o.residual(pair), "lifted": lifted}))?, true)
        }
        Command::Orbit { xs, xu, x, steps } => {
            let m = model()?;
            let start = Point3::new(*xs, *xu, *x)?;
            let tr = skew3d::trajectory(&m, pair, start, *steps);
            (Artifact::with_rows(&tr, &tr.records)?, true)
        }
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Lyap { .. } => "lyap",
        Command::FixedPoints { .. } => "fixed-points",
        Command::Domain { .. } => "domain",
        Command::Fiber { .. } => "fiber",
        Command::Family { .. } => "family",
        Command::Sweep { .. } => "sweep",
        Command::NearZero { .. } => "near-zero",
        Command::Gap { .. } => "gap",
        Command::Spectrum { .. } => "spectrum",
        Command::Pressure { .. } => "pressure",
        Command::Transition { .. } => "transition",
        Command::Spine { .. } => "spine",
        Command::Cycle => "cycle",
        Command::PeriodicNear { .. } => "periodic-near",
        Command::Orbit { .. } => "orbit",
    }
}

fn main_inner(cli: &Cli) -> Result<bool, Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    let spec = load_family(cli.family.as_deref())?;
    let pair = build_pair(&spec).map_err(|e| Failure::usage(format!("family does not build: {e}")))?;
    let (artifact, ok) = run(cli, &pair)?;
    let text = render(&artifact, cli.format, command_name(&cli.command))?;
    emit(&text, cli.out.as_deref())?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("porcupine: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
