use std::error::Error;
use std::fs::File;
use std::io::{BufReader, Write};

use dyasim::bench::{range_sum_scaling, scaling_slope, time_splits};
use dyasim::sketch::{oracle_norms, parse_stream, MAX_EXACT_UNIVERSE_LOG};
use dyasim::verify::{
    bonferroni, check_ideal_equivalence, check_kwise_theorem, check_marginal_theorem, check_split_theorem,
    run_with_retry, Report,
};
use dyasim::{
    collision_curve, dyadic_cover_ranges, Distribution, ExactCounters, HashFamily, LpSketch, Norm, SketchConfig,
};
use serde_json::{json, Value};

use crate::{Cli, Command, Format, HashArg, NormArg, Suite};

type CliResult<T> = std::result::Result<T, Box<dyn Error>>;

/// Largest slope of range-sum latency against `log U` still accepted as
/// linear growth.
const MAX_SCALING_SLOPE: f64 = 1.25;

fn ulog(cli: &Cli) -> u32 {
    cli.ulog.unwrap_or(match cli.command {
        Command::Verify { .. } => 6,
        _ => 20,
    })
}

fn hash(cli: &Cli) -> HashArg {
    cli.hash.unwrap_or(match cli.command {
        Command::Verify { .. } => HashArg::Poly4,
        _ => HashArg::Fast,
    })
}

fn trials(cli: &Cli) -> u64 {
    cli.trials.unwrap_or(10_000)
}

fn format(cli: &Cli) -> Format {
    cli.format.unwrap_or(match cli.command {
        Command::LshCollision { .. } | Command::Cover { .. } => Format::Csv,
        _ => Format::Json,
    })
}

fn distributions(cli: &Cli) -> Vec<Distribution> {
    match cli.dist {
        Some(d) => vec![d.into()],
        None => Distribution::ALL.to_vec(),
    }
}

fn resolved_config(cli: &Cli) -> Value {
    json!({
        "command": cli.command,
        "ulog": ulog(cli),
        "dist": cli.dist,
        "hash": hash(cli),
        "seed": cli.seed,
        "r": cli.r,
        "W": cli.width,
        "m": cli.m,
        "trials": trials(cli),
        "format": format(cli),
        "out": cli.out,
    })
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn csv_reports(reports: &[Report]) -> String {
    let mut s = String::from("test,statistic,critical,pass\n");
    for r in reports {
        s.push_str(&format!("{},{},{},{}\n", r.test, r.statistic, r.critical, r.pass));
    }
    s
}

pub fn run(cli: &Cli) -> CliResult<bool> {
    let config = resolved_config(cli);
    eprintln!("config {config}");
    match &cli.command {
        Command::Bench {
            splits,
            scale_from,
            scale_to,
            queries,
        } => bench(cli, config, *splits, *scale_from, *scale_to, *queries),
        Command::Verify { suite, alpha } => verify(cli, config, *suite, *alpha),
        Command::Stream { file, norm, export } => stream(cli, config, file, *norm, export.as_deref()),
        Command::LshCollision { distances } => lsh_collision(cli, config, distances),
        Command::Cover { a, b } => cover(cli, *a, *b),
    }
}

fn bench(cli: &Cli, config: Value, splits: u64, from: u32, to: u32, queries: usize) -> CliResult<bool> {
    let ulog = ulog(cli);
    let timings = Distribution::ALL
        .iter()
        .map(|&d| time_splits(d, ulog, splits, cli.seed))
        .collect::<dyasim::Result<Vec<_>>>()?;
    let scaled: Distribution = cli.dist.map_or(Distribution::Gaussian, Into::into);
    let ulogs: Vec<u32> = (from..=to).collect();
    let scaling = range_sum_scaling(scaled, &ulogs, queries, cli.seed)?;
    let slope = scaling_slope(&scaling);
    let g = timings[0].ns_per_split;
    let gaussian_fastest = timings[1..].iter().all(|t| g < t.ns_per_split);
    let linear = slope <= MAX_SCALING_SLOPE;
    let pass = gaussian_fastest && linear;

    let text = match format(cli) {
        Format::Json => {
            let v = json!({
                "config": config,
                "timings": timings,
                "scaling": {"distribution": scaled, "points": scaling, "slope": slope},
                "checks": {"gaussian_fastest": gaussian_fastest, "linear_in_log_u": linear},
                "pass": pass,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let mut s = String::from("distribution,universe_log,ns_per_split,ns_per_range_sum\n");
            for t in &timings {
                s.push_str(&format!(
                    "{},{},{:.3},{:.3}\n",
                    t.distribution, t.universe_log, t.ns_per_split, t.ns_per_range_sum
                ));
            }
            s.push_str("\nuniverse_log,ns_per_range_sum\n");
            for p in &scaling {
                s.push_str(&format!("{},{:.3}\n", p.universe_log, p.ns_per_range_sum));
            }
            s
        }
    };
    emit(cli, &text)?;
    Ok(pass)
}

fn verify(cli: &Cli, config: Value, suite: Suite, alpha: f64) -> CliResult<bool> {
    let ulog = ulog(cli);
    let trials = trials(cli) as usize;
    let hash: HashFamily = hash(cli).into();
    let dists = distributions(cli);
    let u = 1u64 << ulog;
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let four_nodes = ulog >= 2 && hash != HashFamily::PolyKWise(2);
    let checks_per_dist = [
        wants(Suite::Split),
        wants(Suite::Marginal),
        wants(Suite::Kwise),
        wants(Suite::Ideal),
    ]
    .iter()
    .filter(|&&w| w)
    .count();
    let a = bonferroni(alpha, checks_per_dist * dists.len());

    let run_suite = |seed: u64| -> dyasim::Result<Vec<Report>> {
        let mut out = Vec::new();
        for &d in &dists {
            if wants(Suite::Split) {
                out.extend(check_split_theorem(d, 1 << (ulog - 1), trials, a, seed)?);
            }
            if wants(Suite::Marginal) {
                out.push(check_marginal_theorem(d, hash, ulog, u / 3, 2 * u / 3 + 1, trials, a, seed)?);
            }
            if wants(Suite::Kwise) {
                out.extend(check_kwise_theorem(d, hash, ulog, 1, &[0, 1], trials, seed)?);
                if four_nodes {
                    out.extend(check_kwise_theorem(d, hash, ulog, 2, &[0, 1, 2, 3], trials, seed)?);
                }
            }
            if wants(Suite::Ideal) {
                out.extend(check_ideal_equivalence(d, ulog.clamp(2, 8), trials, a, seed)?);
            }
        }
        Ok(out)
    };
    let outcome = run_with_retry(cli.seed, run_suite)?;
    let text = match format(cli) {
        Format::Json => {
            let v = json!({
                "config": config,
                "pass": outcome.pass,
                "failed": outcome.failed,
                "reports": outcome.first,
                "retry": outcome.retry,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let mut s = csv_reports(&outcome.first);
            if let Some(retry) = &outcome.retry {
                s.push_str("\n# retry\n");
                s.push_str(&csv_reports(retry));
            }
            s
        }
    };
    emit(cli, &text)?;
    Ok(outcome.pass)
}

fn stream(
    cli: &Cli,
    config: Value,
    file: &std::path::Path,
    norm: Option<NormArg>,
    export: Option<&std::path::Path>,
) -> CliResult<bool> {
    let ulog = ulog(cli);
    let norm = match (norm, cli.dist.map(Distribution::from)) {
        (Some(NormArg::L1), _) | (None, Some(Distribution::Cauchy)) => Norm::L1,
        (Some(NormArg::L2), _) | (None, _) => Norm::L2,
    };
    let updates = parse_stream(BufReader::new(File::open(file)?))?;
    let mut sketch = LpSketch::new(SketchConfig::new(norm, cli.r, ulog, cli.seed).with_hash(hash(cli).into()))?;
    sketch.apply(&updates)?;
    if let Some(path) = export {
        std::fs::write(path, sketch.export())?;
    }
    let estimate = sketch.estimate_norm();
    let exact = if ulog <= MAX_EXACT_UNIVERSE_LOG {
        let mut c = ExactCounters::new(ulog)?;
        c.apply(&updates)?;
        let (d1, d2) = oracle_norms(&c);
        Some(match norm {
            Norm::L1 => d1,
            Norm::L2 => d2,
        })
    } else {
        None
    };
    let ratio = exact.filter(|&e| e > 0.0).map(|e| estimate / e);
    let text = match format(cli) {
        Format::Json => {
            let v = json!({
                "config": config,
                "norm": norm,
                "updates": updates.len(),
                "estimate": estimate,
                "exact": exact,
                "ratio": ratio,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
            format!(
                "norm,updates,estimate,exact,ratio\n{norm},{},{estimate},{},{}\n",
                updates.len(),
                opt(exact),
                opt(ratio)
            )
        }
    };
    emit(cli, &text)?;
    Ok(true)
}

fn lsh_collision(cli: &Cli, config: Value, distances: &[u64]) -> CliResult<bool> {
    let curve = collision_curve(ulog(cli), cli.width, distances, trials(cli), cli.seed)?;
    let monotone = curve.windows(2).all(|w| {
        w[0].distance > w[1].distance || {
            let noise = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].probability <= w[0].probability + 3.0 * noise
        }
    });
    let text = match format(cli) {
        Format::Csv => {
            let mut s = String::from("D,probability,stderr\n");
            for p in &curve {
                s.push_str(&format!("{},{},{}\n", p.distance, p.probability, p.stderr));
            }
            s
        }
        Format::Json => {
            let v = json!({"config": config, "curve": curve, "monotone": monotone});
            serde_json::to_string_pretty(&v)? + "\n"
        }
    };
    emit(cli, &text)?;
    Ok(monotone)
}

fn cover(cli: &Cli, a: u64, b: u64) -> CliResult<bool> {
    let ranges = dyadic_cover_ranges(a, b, ulog(cli))?;
    let text = match format(cli) {
        Format::Csv => {
            let parts: Vec<String> = ranges.iter().map(|r| r.to_string()).collect();
            parts.join(" ") + "\n"
        }
        Format::Json => {
            let v: Vec<Value> = ranges
                .iter()
                .map(|r| json!({"lo": r.lo, "hi": r.hi, "level": r.prefix.level, "index": r.prefix.index}))
                .collect();
            serde_json::to_string(&v)? + "\n"
        }
    };
    emit(cli, &text)?;
    Ok(true)
}
