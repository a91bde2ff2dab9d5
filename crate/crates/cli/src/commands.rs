use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use lsd_core::codes::{
    code_capacity_model, hypergraph_product, parse_dense_matrix, phenomenological_model, random_regular_seed,
    repetition_code, surface_code, BivariateBicycleConfig, CssCode, WindowLayout,
};
use lsd_core::experiments::{
    bethe_avg_cluster, run_point, write_csv, write_jsonl, RunReport, RunSettings, WindowedDecoder,
};
use lsd_core::model::DetectorModel;
use lsd_core::{Decoder, Model, Syndrome};
use rayon::prelude::*;
use thiserror::Error;

use crate::args::{CodeArgs, DecodeArgs, Family, GenArgs, SourceArgs, StatsArgs, SweepArgs, VerifyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Decode(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Decode(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes to the file at `path`, or to standard output.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io {
        path: "<output>".into(),
        source,
    }
}

fn open_model(path: &Path) -> Result<Model, CliError> {
    // Distinguish a missing file from a malformed one.
    let text = read(path)?;
    Model::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

struct Generated {
    code: CssCode,
    model: Model,
    layout: Option<WindowLayout>,
    echo: Vec<(String, String)>,
}

fn build_code(args: &CodeArgs) -> Result<(CssCode, Vec<(String, String)>), CliError> {
    let family = args.family.ok_or_else(|| usage("a code family or --model is required"))?;
    let mut echo = vec![("family".to_string(), crate::args::value_name(&family))];
    let code = match family {
        Family::Surface => {
            let d = args.d.ok_or_else(|| usage("surface codes need --d"))?;
            echo.push(("d".into(), d.to_string()));
            surface_code(d).map_err(usage)?
        }
        Family::Repetition => {
            let n = args.n.ok_or_else(|| usage("repetition codes need --n"))?;
            echo.push(("n".into(), n.to_string()));
            repetition_code(n).map_err(usage)?
        }
        Family::Hgp => {
            let seed = match (&args.seed_file, args.regular) {
                (Some(path), None) => {
                    echo.push(("seed_file".into(), path.display().to_string()));
                    parse_dense_matrix(&read(path)?).map_err(usage)?
                }
                (None, Some((checks, bits))) => {
                    echo.push(("regular".into(), format!("{checks},{bits}")));
                    echo.push(("graph_seed".into(), args.graph_seed.to_string()));
                    random_regular_seed(checks, bits, 3, 4, args.graph_seed).map_err(usage)?
                }
                _ => return Err(usage("hgp needs exactly one of --seed-file and --regular")),
            };
            hypergraph_product(&seed, &seed).map_err(usage)?
        }
        Family::Bb => {
            let path = args.bb_config.as_ref().ok_or_else(|| usage("bb codes need --bb-config"))?;
            echo.push(("bb_config".into(), path.display().to_string()));
            let cfg: BivariateBicycleConfig =
                serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            cfg.build().map_err(usage)?
        }
    };
    echo.push(("side".into(), args.side.to_string()));
    Ok((code, echo))
}

fn generate(args: &CodeArgs, p: f64) -> Result<Generated, CliError> {
    let (code, mut echo) = build_code(args)?;
    let (model, layout) = match args.rounds {
        Some(rounds) => {
            echo.push(("rounds".into(), rounds.to_string()));
            let (m, l) = phenomenological_model::<f64>(&code, args.side, p, rounds).map_err(usage)?;
            (m, Some(l))
        }
        None => (code_capacity_model::<f64>(&code, args.side, p).map_err(usage)?, None),
    };
    Ok(Generated {
        code,
        model,
        layout,
        echo,
    })
}

pub fn gen(args: &GenArgs) -> Result<(), CliError> {
    let g = generate(&args.code, args.p)?;
    eprintln!(
        "[[{},{}]] code: {} faults, {} detectors, {} observables",
        g.code.n(),
        g.code.k(),
        g.model.num_faults(),
        g.model.num_detectors(),
        g.model.num_observables()
    );
    let mut out = output(args.out.as_deref())?;
    out.write_all(g.model.to_dem_text().as_bytes()).map_err(stdout_err)?;
    out.flush().map_err(stdout_err)?;
    if let Some(path) = &args.layout {
        let layout = g.layout.as_ref().ok_or_else(|| usage("--layout needs --rounds"))?;
        let json = serde_json::to_string(layout).map_err(usage)?;
        fs::write(path, json + "\n").map_err(io_err(path))?;
    }
    Ok(())
}

/// One syndrome per line; blank lines are empty syndromes.
fn parse_syndromes(text: &str, path: &Path, model: &Model) -> Result<Vec<Syndrome>, CliError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let bits = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
            Syndrome::checked(bits, model.num_detectors())
                .map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn join(bits: &[usize]) -> String {
    bits.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn decode(args: &DecodeArgs) -> Result<(), CliError> {
    let model = open_model(&args.model)?;
    let syndromes = parse_syndromes(&read(&args.syndromes)?, &args.syndromes, &model)?;
    let decoder = Decoder::new(&model, args.decoder.spec()).map_err(usage)?;
    let lines: Vec<Result<String, String>> = syndromes
        .par_iter()
        .map(|s| match decoder.decode(s) {
            Ok(out) => Ok(join(&out.correction)),
            Err(e) if e.is_unsatisfiable() => Err("ERROR unsatisfiable".to_string()),
            Err(e) => Err(format!("ERROR {e}")),
        })
        .collect();
    let mut out = output(None)?;
    let mut failed = 0;
    for line in &lines {
        let text = line.as_ref().unwrap_or_else(|e| {
            failed += 1;
            e
        });
        writeln!(out, "{text}").map_err(stdout_err)?;
    }
    out.flush().map_err(stdout_err)?;
    if failed > 0 {
        return Err(CliError::Decode(format!("{failed} of {} shots failed to decode", lines.len())));
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let model = open_model(&args.model)?;
    let syndromes = parse_syndromes(&read(&args.syndromes)?, &args.syndromes, &model)?;
    let text = read(&args.corrections)?;
    let corrections: Vec<&str> = text.lines().collect();
    if corrections.len() != syndromes.len() {
        return Err(usage(format!(
            "{} syndromes but {} correction lines",
            syndromes.len(),
            corrections.len()
        )));
    }
    let mut bad = Vec::new();
    for (i, (s, line)) in syndromes.iter().zip(&corrections).enumerate() {
        if line.starts_with("ERROR") {
            bad.push(i + 1);
            continue;
        }
        let faults = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().ok().filter(|&f| f < model.num_faults()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| usage(format!("{}:{}: malformed correction", args.corrections.display(), i + 1)))?;
        if model.syndrome_of(&faults) != *s {
            bad.push(i + 1);
        }
    }
    println!("{} of {} corrections reproduce their syndrome", syndromes.len() - bad.len(), syndromes.len());
    if !bad.is_empty() {
        return Err(CliError::Decode(format!("corrections fail on lines {bad:?}")));
    }
    Ok(())
}

/// A model source resolved for Monte-Carlo runs.
struct Source {
    model: Model,
    layout: Option<WindowLayout>,
    echo: Vec<(String, String)>,
}

fn resolve_source(args: &SourceArgs) -> Result<Source, CliError> {
    if let Some(path) = &args.model {
        let model = open_model(path)?;
        let layout = match &args.layout {
            Some(lp) => Some(serde_json::from_str(&read(lp)?).map_err(|e| usage(format!("{}: {e}", lp.display())))?),
            None => None,
        };
        let mut echo = vec![("model".to_string(), path.display().to_string())];
        if let Some(lp) = &args.layout {
            echo.push(("layout".into(), lp.display().to_string()));
        }
        return Ok(Source { model, layout, echo });
    }
    // Priors are replaced at every grid point, so any valid rate works here.
    let g = generate(&args.code, 0.01)?;
    let mut echo = g.echo;
    echo.push(("code".into(), format!("[[{},{}]]", g.code.n(), g.code.k())));
    Ok(Source {
        model: g.model,
        layout: g.layout,
        echo,
    })
}

fn with_rate(model: &Model, p: f64) -> Result<Model, CliError> {
    model.with_priors(vec![p; model.num_faults()]).map_err(usage)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let source = resolve_source(&args.source)?;
    let spec = args.decoder.spec();
    let cycles = source.layout.as_ref().map_or(1, |l| l.rounds);
    let settings = RunSettings {
        shots: args.shots,
        seed: args.seed,
        cycles,
        parallel: true,
    };

    let mut echo = source.echo.clone();
    echo.extend(args.decoder.echo());
    echo.push(("p".into(), args.p.iter().map(f64::to_string).collect::<Vec<_>>().join(",")));
    echo.push(("shots".into(), args.shots.to_string()));
    echo.push(("seed".into(), args.seed.to_string()));
    echo.push(("cycles".into(), cycles.to_string()));
    if let Some((w, c)) = args.window {
        echo.push(("window".into(), format!("{w},{c}")));
    }

    let mut reports = Vec::new();
    let mut all_records = Vec::new();
    // With no shots there is nothing to report, only the header.
    let grid: &[f64] = if args.shots == 0 { &[] } else { &args.p };
    for (i, &p) in grid.iter().enumerate() {
        let model = with_rate(&source.model, p)?;
        let records = match args.window {
            Some((w, c)) => {
                let layout = source
                    .layout
                    .as_ref()
                    .ok_or_else(|| usage("--window needs --rounds or --layout"))?;
                let decoder = WindowedDecoder::new(&model, layout, w, c, spec).map_err(usage)?;
                run_point(&model, &decoder, i as u64, &settings)
            }
            None => {
                let decoder = Decoder::new(&model, spec).map_err(usage)?;
                run_point(&model, &decoder, i as u64, &settings)
            }
        };
        let report = RunReport::from_records(p, cycles, &records);
        eprintln!(
            "p = {p}: {} / {} failures, p_l = {:.3e}",
            report.failures, report.shots, report.p_l
        );
        if report.invalid_corrections > 0 {
            return Err(CliError::Decode(format!(
                "{} corrections at p = {p} do not reproduce their syndrome",
                report.invalid_corrections
            )));
        }
        reports.push(report);
        all_records.extend(records);
    }

    let mut out = output(args.out.as_deref())?;
    write_csv(&mut out, &echo, &reports).map_err(stdout_err)?;
    out.flush().map_err(stdout_err)?;
    if let Some(path) = &args.jsonl {
        let mut w = output(Some(path))?;
        write_jsonl(&mut w, &all_records).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    Ok(())
}

pub fn stats(args: &StatsArgs) -> Result<(), CliError> {
    let source = resolve_source(&args.source)?;
    let model: DetectorModel<f64> = with_rate(&source.model, args.p)?;
    let settings = RunSettings {
        shots: args.shots,
        seed: args.seed,
        cycles: 1,
        parallel: true,
    };
    let decoder = Decoder::new(&model, args.decoder.spec()).map_err(usage)?;
    let records = run_point(&model, &decoder, 0, &settings);
    let report = RunReport::from_records(args.p, 1, &records);
    let mut summary = serde_json::json!({
        "p": args.p,
        "shots": args.shots,
        "seed": args.seed,
        "failures": report.failures,
        "decoder": report.decoder,
        "optimal": report.optimal,
    });
    if let Some(theta) = args.theta {
        let bound = bethe_avg_cluster(args.p, theta).map_err(usage)?;
        summary["bethe_kappa_alpha"] = serde_json::json!({ "theta": theta, "value": bound });
    }
    let mut out = output(None)?;
    writeln!(out, "{summary}").map_err(stdout_err)?;
    out.flush().map_err(stdout_err)?;
    if let Some(path) = &args.jsonl {
        let mut w = output(Some(path))?;
        write_jsonl(&mut w, &records).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    Ok(())
}
