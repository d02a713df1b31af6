use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use neurocap::io::{
    self, kkt_csv, read_channel, read_joint, read_pmf, read_solution, staircase_csv, tuning_csv,
    Provenance, SolutionDocument,
};
use neurocap::{
    blahut_arimoto, bsc_capacity, bsc_mutual_information, build_tuning_curve_directed, entropy,
    grid_capacity, hard_decoder, kl_divergence, monte_carlo_mi, mutual_information,
    particle_capacity, verify_tuning_mi, CapacitySolution, Coding, CountChannelConfig, DiscretePmf,
    Error, GammaChannel, JointPmf, MonotoneDirection, NeuronChannel, Result, SolverOptions,
    StimulusDistribution,
};

use crate::args::{
    CapacityArgs, Cli, CodingArg, Command, DecodeArgs, DirectionArg, ItOp, McCheckArgs, SolverArg,
    TuningArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::It { op } => run_it(op, &config),
        Command::Capacity(args) => run_capacity(args, &config),
        Command::Tuning(args) => run_tuning(args, &config),
        Command::Decode(args) => run_decode(args, &config),
        Command::McCheck(args) => run_mc_check(args, &config),
    }
}

// ---------------------------------------------------------------------------
// Config-file merging: flags win, then config values, then defaults.
// ---------------------------------------------------------------------------

fn load_config(path: Option<&Path>) -> Result<Map<String, Value>> {
    match path {
        None => Ok(Map::new()),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let value: Value = serde_json::from_str(&text)?;
            value.as_object().cloned().ok_or_else(|| {
                Error::Parse(format!("{}: config must be a JSON object", path.display()))
            })
        }
    }
}

fn cfg_f64(config: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("config field `{key}` must be a number"))),
    }
}

fn cfg_usize(config: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| Error::Parse(format!("config field `{key}` must be an integer"))),
    }
}

fn cfg_u64(config: &Map<String, Value>, key: &str) -> Result<Option<u64>> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("config field `{key}` must be an integer"))),
    }
}

fn cfg_string(config: &Map<String, Value>, key: &str) -> Result<Option<String>> {
    match config.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_str()
            .map(|s| Some(s.to_string()))
            .ok_or_else(|| Error::Parse(format!("config field `{key}` must be a string"))),
    }
}

fn cfg_path(config: &Map<String, Value>, key: &str) -> Result<Option<PathBuf>> {
    Ok(cfg_string(config, key)?.map(PathBuf::from))
}

fn required<T>(value: Option<T>, field: &'static str) -> Result<T> {
    value.ok_or(Error::InvalidParameter {
        name: field,
        reason: "missing; pass the flag or set it in the config file".into(),
    })
}

// ---------------------------------------------------------------------------
// it: finite-alphabet primitives.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ItReport {
    provenance: Provenance,
    operation: String,
    value_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<Value>,
}

fn write_it_report(
    out: Option<&Path>,
    operation: &str,
    value_bits: f64,
    config: Value,
    extra: Option<Value>,
) -> Result<()> {
    if let Some(path) = out {
        let report = ItReport {
            provenance: Provenance::new(config, None),
            operation: operation.to_string(),
            value_bits,
            extra,
        };
        io::write_json(path, &report)?;
    }
    Ok(())
}

fn run_it(op: ItOp, config: &Map<String, Value>) -> Result<()> {
    match op {
        ItOp::Entropy {
            pmf,
            probs,
            labels,
            out,
        } => {
            let pmf_path = pmf.map(Some).unwrap_or(cfg_path(config, "pmf")?);
            let p = match (&pmf_path, probs) {
                (Some(path), None) => read_pmf(path)?,
                (None, Some(probs)) => match labels {
                    Some(labels) => DiscretePmf::new(labels, probs)?,
                    None => DiscretePmf::from_probs(probs)?,
                },
                _ => {
                    return Err(Error::InvalidParameter {
                        name: "pmf/probs",
                        reason: "pass exactly one of --pmf or --probs".into(),
                    })
                }
            };
            let h = entropy(&p);
            println!("entropy: {h} bits per symbol");
            write_it_report(
                out.as_deref(),
                "entropy",
                h,
                json!({"pmf": pmf_path, "n_symbols": p.len()}),
                None,
            )
        }
        ItOp::Mi {
            joint,
            channel,
            input,
            out,
        } => {
            let joint_doc = match (&joint, &channel, &input) {
                (Some(path), None, None) => read_joint(path)?,
                (None, Some(ch), Some(inp)) => {
                    JointPmf::from_input_and_channel(&read_pmf(inp)?, &read_channel(ch)?)?
                }
                _ => {
                    return Err(Error::InvalidParameter {
                        name: "joint",
                        reason: "pass --joint, or --channel together with --input".into(),
                    })
                }
            };
            let mi = mutual_information(&joint_doc);
            println!("mutual information: {mi} bits");
            write_it_report(
                out.as_deref(),
                "mutual_information",
                mi,
                json!({"joint": joint, "channel": channel, "input": input}),
                None,
            )
        }
        ItOp::Kl { p, q, out } => {
            let d = kl_divergence(&read_pmf(&p)?, &read_pmf(&q)?)?;
            if d.is_infinite() {
                println!("kl divergence: infinite (support violation)");
            } else {
                println!("kl divergence: {d} bits");
            }
            write_it_report(
                out.as_deref(),
                "kl_divergence",
                d,
                json!({"p": p, "q": q}),
                None,
            )
        }
        ItOp::Bsc { p, q, out } => {
            let capacity = bsc_capacity(p)?;
            println!("bsc capacity (p = {p}): {capacity} bits per use");
            println!(
                "encoded symbols per 1000 source symbols: {:.1}",
                1000.0 / capacity
            );
            let mi = match q {
                Some(q) => {
                    let mi = bsc_mutual_information(q, p)?;
                    println!("I(X;Y) at P(X=1) = {q}: {mi} bits");
                    Some(mi)
                }
                None => None,
            };
            write_it_report(
                out.as_deref(),
                "bsc_capacity",
                capacity,
                json!({"p": p, "q": q}),
                mi.map(|m| json!({"mutual_information_bits": m})),
            )
        }
        ItOp::Ba {
            channel,
            tol,
            max_iter,
            out,
        } => {
            let matrix = read_channel(&channel)?;
            let (capacity, input) = blahut_arimoto(&matrix, tol, max_iter)?;
            println!("capacity: {capacity} bits per use (certified within {tol} bits)");
            println!("optimal input:");
            for (label, prob) in input.labels().iter().zip(input.probs()) {
                println!("  {label}: {prob}");
            }
            write_it_report(
                out.as_deref(),
                "blahut_arimoto",
                capacity,
                json!({"channel": channel, "tol": tol, "max_iter": max_iter}),
                Some(json!({
                    "input_labels": input.labels(),
                    "input_probs": input.probs(),
                })),
            )
        }
    }
}

// ---------------------------------------------------------------------------
// capacity
// ---------------------------------------------------------------------------

struct ResolvedCapacity {
    coding: Coding,
    kappa: f64,
    a0: f64,
    b0: f64,
    delta: f64,
    tail_tol: f64,
    tol: f64,
    probe_n: usize,
    init_grid: usize,
    grid_n: usize,
    solver: SolverArg,
    out: Option<PathBuf>,
    kkt_csv: Option<PathBuf>,
}

impl ResolvedCapacity {
    fn from(args: CapacityArgs, config: &Map<String, Value>) -> Result<Self> {
        let solver = match (args.solver, cfg_string(config, "solver")?) {
            (Some(s), _) => s,
            (None, Some(name)) => match name.as_str() {
                "particle" => SolverArg::Particle,
                "grid" => SolverArg::Grid,
                other => {
                    return Err(Error::Parse(format!(
                        "config field `solver` must be particle or grid, got {other:?}"
                    )))
                }
            },
            (None, None) => SolverArg::Particle,
        };
        Ok(ResolvedCapacity {
            coding: match args.coding {
                CodingArg::Temporal => Coding::Temporal,
                CodingArg::Rate => Coding::Rate,
            },
            kappa: required(args.kappa.or(cfg_f64(config, "kappa")?), "kappa")?,
            a0: args.a0.or(cfg_f64(config, "a0")?).unwrap_or(0.003),
            b0: args.b0.or(cfg_f64(config, "b0")?).unwrap_or(0.03),
            delta: args.delta.or(cfg_f64(config, "delta")?).unwrap_or(0.1),
            tail_tol: args
                .tail_tol
                .or(cfg_f64(config, "tail-tol")?)
                .unwrap_or(1e-12),
            tol: args.tol.or(cfg_f64(config, "tol")?).unwrap_or(1e-4),
            probe_n: args
                .probe_n
                .or(cfg_usize(config, "probe-n")?)
                .unwrap_or(2001),
            init_grid: args
                .init_grid
                .or(cfg_usize(config, "init-grid")?)
                .unwrap_or(101),
            grid_n: args.grid_n.or(cfg_usize(config, "grid-n")?).unwrap_or(201),
            solver,
            out: args.out.map(Some).unwrap_or(cfg_path(config, "out")?),
            kkt_csv: args
                .kkt_csv
                .map(Some)
                .unwrap_or(cfg_path(config, "kkt-csv")?),
        })
    }

    fn channel(&self) -> Result<NeuronChannel> {
        let gamma = GammaChannel::new(self.kappa, self.a0, self.b0)?;
        Ok(match self.coding {
            Coding::Temporal => NeuronChannel::temporal(gamma),
            Coding::Rate => {
                NeuronChannel::rate(CountChannelConfig::new(gamma, self.delta, self.tail_tol)?)
            }
        })
    }

    fn as_json(&self) -> Value {
        json!({
            "coding": self.coding,
            "kappa": self.kappa,
            "a0": self.a0,
            "b0": self.b0,
            "delta": if self.coding == Coding::Rate { Some(self.delta) } else { None },
            "tail-tol": if self.coding == Coding::Rate { Some(self.tail_tol) } else { None },
            "tol": self.tol,
            "probe-n": self.probe_n,
            "init-grid": self.init_grid,
            "grid-n": self.grid_n,
            "solver": match self.solver {
                SolverArg::Particle => "particle",
                SolverArg::Grid => "grid",
            },
        })
    }
}

fn write_solution_artifacts(
    solution: &CapacitySolution,
    provenance: &Provenance,
    out: Option<&Path>,
    kkt_path: Option<&Path>,
) -> Result<()> {
    if let Some(path) = out {
        let doc = SolutionDocument::from_solution(solution, Some(provenance.clone()));
        io::write_json(path, &doc)?;
    }
    if let Some(path) = kkt_path {
        std::fs::write(path, kkt_csv(&solution.certificate, Some(provenance)))?;
    }
    Ok(())
}

fn run_capacity(args: CapacityArgs, config: &Map<String, Value>) -> Result<()> {
    let resolved = ResolvedCapacity::from(args, config)?;
    let channel = resolved.channel()?;
    let provenance = Provenance::new(resolved.as_json(), None);
    let solved = match resolved.solver {
        SolverArg::Particle => {
            let opts = SolverOptions {
                tol: resolved.tol,
                probe_n: resolved.probe_n,
                init_grid: resolved.init_grid,
                ..SolverOptions::default()
            };
            particle_capacity(&channel, None, &opts)
        }
        SolverArg::Grid => grid_capacity(&channel, resolved.grid_n, resolved.tol),
    };
    match solved {
        Ok(solution) => {
            println!(
                "capacity: {} bits per {}",
                solution.capacity_per_use,
                match solution.coding() {
                    Coding::Temporal => "spike",
                    Coding::Rate => "window",
                }
            );
            println!("capacity: {} bits per second", solution.capacity_bps);
            println!("support points: {}", solution.ensemble.len());
            for (p, w) in solution
                .ensemble
                .points()
                .iter()
                .zip(solution.ensemble.weights())
            {
                println!("  theta = {p} s, weight = {w}");
            }
            println!(
                "certificate: passed = {}, max violation = {} bits, support gap = {} bits",
                solution.certificate.passed,
                solution.certificate.max_violation,
                solution.certificate.at_support_gap
            );
            write_solution_artifacts(
                &solution,
                &provenance,
                resolved.out.as_deref(),
                resolved.kkt_csv.as_deref(),
            )
        }
        Err(Error::SolverNonConvergence {
            iterations,
            best_bits,
            max_violation,
            best,
        }) => {
            // Still emit the best certified attempt, flagged uncertified.
            eprintln!("warning: solution is uncertified; artifacts flagged accordingly");
            write_solution_artifacts(
                &best,
                &provenance,
                resolved.out.as_deref(),
                resolved.kkt_csv.as_deref(),
            )?;
            Err(Error::SolverNonConvergence {
                iterations,
                best_bits,
                max_violation,
                best,
            })
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// tuning
// ---------------------------------------------------------------------------

fn parse_stimulus(spec: &str) -> Result<StimulusDistribution> {
    let bad = |why: String| Error::InvalidParameter {
        name: "stimulus",
        reason: why,
    };
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| bad(format!("expected kind:parameters, got {spec:?}")))?;
    let parse_pair = |text: &str| -> Result<(f64, f64)> {
        let (a, b) = text.split_once(',').ok_or_else(|| {
            bad(format!(
                "expected two comma-separated numbers, got {text:?}"
            ))
        })?;
        Ok((
            a.trim()
                .parse()
                .map_err(|e| bad(format!("bad number {a:?}: {e}")))?,
            b.trim()
                .parse()
                .map_err(|e| bad(format!("bad number {b:?}: {e}")))?,
        ))
    };
    match kind {
        "uniform" => {
            let (lo, hi) = parse_pair(rest)?;
            StimulusDistribution::uniform(lo, hi)
        }
        "beta" => match rest.split_once(':') {
            Some((shapes, support)) => {
                let (alpha, beta) = parse_pair(shapes)?;
                let (lo, hi) = parse_pair(support)?;
                StimulusDistribution::beta(alpha, beta, lo, hi)
            }
            None => {
                let (alpha, beta) = parse_pair(rest)?;
                StimulusDistribution::beta(alpha, beta, 0.0, 1.0)
            }
        },
        "pwl" => {
            #[derive(serde::Deserialize)]
            struct Pwl {
                xs: Vec<f64>,
                densities: Vec<f64>,
            }
            let doc: Pwl = serde_json::from_str(&std::fs::read_to_string(rest)?)?;
            StimulusDistribution::piecewise_linear(doc.xs, doc.densities)
        }
        other => Err(bad(format!("unknown stimulus kind {other:?}"))),
    }
}

#[derive(Serialize)]
struct TuningDocument {
    provenance: Provenance,
    coding: Coding,
    direction: &'static str,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    interval_masses: Vec<f64>,
    mi_bits: f64,
    gap_to_capacity_bits: f64,
}

fn run_tuning(args: TuningArgs, config: &Map<String, Value>) -> Result<()> {
    let solution_path = required(
        args.solution
            .map(Some)
            .unwrap_or(cfg_path(config, "solution")?),
        "solution",
    )?;
    let stimulus_spec = required(
        args.stimulus.or(cfg_string(config, "stimulus")?),
        "stimulus",
    )?;
    let direction = match (args.direction, cfg_string(config, "direction")?) {
        (Some(DirectionArg::Increasing), _) => MonotoneDirection::Increasing,
        (Some(DirectionArg::Decreasing), _) => MonotoneDirection::Decreasing,
        (None, Some(name)) => match name.as_str() {
            "increasing" => MonotoneDirection::Increasing,
            "decreasing" => MonotoneDirection::Decreasing,
            other => {
                return Err(Error::Parse(format!(
                    "config field `direction` must be increasing or decreasing, got {other:?}"
                )))
            }
        },
        (None, None) => MonotoneDirection::Increasing,
    };
    let staircase_n = args
        .staircase_n
        .or(cfg_usize(config, "staircase-n")?)
        .unwrap_or(400);
    let out = args.out.map(Some).unwrap_or(cfg_path(config, "out")?);
    let csv = args.csv.map(Some).unwrap_or(cfg_path(config, "csv")?);
    let staircase_path = args
        .staircase_csv
        .map(Some)
        .unwrap_or(cfg_path(config, "staircase-csv")?);

    let doc = read_solution(&solution_path)?;
    if !doc.certificate.passed {
        return Err(Error::Uncertified(format!(
            "{}: solution's KKT certificate did not pass; rerun `capacity`",
            solution_path.display()
        )));
    }
    let solution = doc.to_solution()?;
    let stimulus = parse_stimulus(&stimulus_spec)?;
    let curve = build_tuning_curve_directed(&solution, &stimulus, direction)?;
    let (mi, gap) = verify_tuning_mi(&curve, &stimulus, &solution)?;
    println!("tuning curve with {} levels", curve.n_levels());
    println!("composed-channel MI: {mi} bits");
    println!("gap to capacity: {gap} bits");

    let provenance = Provenance::new(
        json!({
            "solution": solution_path,
            "stimulus": stimulus_spec,
            "direction": match direction {
                MonotoneDirection::Increasing => "increasing",
                MonotoneDirection::Decreasing => "decreasing",
            },
            "staircase-n": staircase_n,
        }),
        None,
    );
    let kappa = solution.channel.gamma().kappa;
    let delta = solution.channel.delta();
    if let Some(path) = out {
        let masses: Vec<f64> = curve
            .levels()
            .iter()
            .enumerate()
            .map(|(m, _)| {
                stimulus.cdf(curve.breakpoints()[m + 1]) - stimulus.cdf(curve.breakpoints()[m])
            })
            .collect();
        let doc = TuningDocument {
            provenance: provenance.clone(),
            coding: curve.coding(),
            direction: match direction {
                MonotoneDirection::Increasing => "increasing",
                MonotoneDirection::Decreasing => "decreasing",
            },
            breakpoints: curve.breakpoints().to_vec(),
            levels: curve.levels().to_vec(),
            interval_masses: masses,
            mi_bits: mi,
            gap_to_capacity_bits: gap,
        };
        io::write_json(path, &doc)?;
    }
    if let Some(path) = csv {
        std::fs::write(path, tuning_csv(&curve, kappa, delta, Some(&provenance))?)?;
    }
    if let Some(path) = staircase_path {
        std::fs::write(
            path,
            staircase_csv(&curve, kappa, delta, staircase_n, Some(&provenance))?,
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DecodeDocument {
    provenance: Provenance,
    coding: Coding,
    boundaries: Vec<f64>,
    owners: Vec<usize>,
    degenerate: Vec<usize>,
    induced_rows: Vec<Vec<f64>>,
    hard_rate_bits: f64,
    soft_capacity_bits: f64,
}

fn run_decode(args: DecodeArgs, config: &Map<String, Value>) -> Result<()> {
    let solution_path = required(
        args.solution
            .map(Some)
            .unwrap_or(cfg_path(config, "solution")?),
        "solution",
    )?;
    let out = args.out.map(Some).unwrap_or(cfg_path(config, "out")?);
    let solution = read_solution(&solution_path)?.to_solution()?;
    let partition = hard_decoder(&solution)?;
    println!(
        "hard decoder: {} regions over {} support points",
        partition.owners.len(),
        solution.ensemble.len()
    );
    println!("region boundaries: {:?}", partition.boundaries);
    println!("hard rate: {} bits per use", partition.hard_rate);
    println!("soft capacity: {} bits per use", solution.capacity_per_use);
    if !partition.degenerate.is_empty() {
        println!(
            "degenerate support points (own no region): {:?}",
            partition.degenerate
        );
    }
    if let Some(path) = out {
        let doc = DecodeDocument {
            provenance: Provenance::new(json!({"solution": solution_path}), None),
            coding: partition.coding,
            boundaries: partition.boundaries.clone(),
            owners: partition.owners.clone(),
            degenerate: partition.degenerate.clone(),
            induced_rows: partition.induced_channel.rows().to_vec(),
            hard_rate_bits: partition.hard_rate,
            soft_capacity_bits: solution.capacity_per_use,
        };
        io::write_json(path, &doc)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// mc-check
// ---------------------------------------------------------------------------

fn run_mc_check(args: McCheckArgs, config: &Map<String, Value>) -> Result<()> {
    let solution_path = required(
        args.solution
            .map(Some)
            .unwrap_or(cfg_path(config, "solution")?),
        "solution",
    )?;
    let samples = args
        .samples
        .or(cfg_usize(config, "samples")?)
        .unwrap_or(1_000_000);
    let seed = args.seed.or(cfg_u64(config, "seed")?).unwrap_or(42);
    let solution = read_solution(&solution_path)?.to_solution()?;
    let (estimate, se) = monte_carlo_mi(&solution.ensemble, &solution.channel, samples, seed)?;
    let reference = solution.capacity_per_use;
    let sigmas = (estimate - reference).abs() / se;
    println!("monte-carlo MI: {estimate} bits (standard error {se})");
    println!("solution capacity: {reference} bits");
    println!("difference: {sigmas:.2} standard errors");
    Ok(())
}
