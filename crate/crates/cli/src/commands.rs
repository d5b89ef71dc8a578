use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use csmbench::comparison::{
    all_pairs, crossover_threshold, fractional_wins, regime_report, svg, write_comparison_csv,
    write_crossover_csv, write_design_space_csv, write_wins_csv, PairedComparison,
};
use csmbench::dataset::{
    build_grid, diagnose_instance, generate_instance, write_split_csv, DatasetReader,
    DatasetWriter, GridConfig, InstanceFilter, InstanceKey, SplitCounts,
};
use csmbench::evaluation::{
    evaluate_instance, read_results_csv, summarize, write_detail_csv, write_results_csv,
    InstanceInput, ResultRow, RolloutConfig, VALIDITY_THRESHOLD,
};
use csmbench::forecasters::ModelSpec;
use csmbench::indicators::{
    read_diagnostics_csv, regime_stats, write_diagnostics_csv, DiagnosticsRecord,
};
use csmbench::par::Execution;
use csmbench::{Error, Result};

use crate::{Command, GridArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            grid,
            filter,
            out,
            diagnostics,
        } => generate(&grid, &filter, &out, diagnostics),
        Command::Diagnose {
            grid,
            data,
            filter,
            out,
        } => diagnose(&grid, data.as_deref(), &filter, out.as_deref()),
        Command::Split { grid, data, out } => split(&grid, data.as_deref(), out.as_deref()),
        Command::Evaluate {
            data,
            models,
            filter,
            seeds,
            cap,
            timeout,
            out,
            detail,
        } => evaluate(&EvaluateArgs {
            data,
            models,
            filter,
            seeds,
            cap,
            timeout,
            out,
            detail,
        }),
        Command::Compare {
            results,
            pairs,
            out,
            wins,
            crossover,
            graph_models,
        } => compare(
            &results,
            &pairs,
            out.as_deref(),
            wins.as_deref(),
            crossover.as_deref(),
            &graph_models,
        ),
        Command::Report {
            diagnostics,
            results,
            out_dir,
        } => report(&diagnostics, &results, &out_dir),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(path)
        .map_err(|e| Error::Missing(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Missing(format!("{}: {e}", path.display())))
}

/// A file, or stdout when no path is given.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn grid_config(args: &GridArgs) -> Result<GridConfig> {
    let mut config = match (&args.config, args.full) {
        (Some(path), _) => GridConfig::load(path)?,
        (None, true) => GridConfig::full(),
        (None, false) => GridConfig::desk(),
    };
    if let Some(seed) = args.master_seed {
        config.grid.master_seed = seed;
    }
    if let Some(record) = args.record {
        config.record = record;
    }
    if let Some(ics) = args.ics {
        config.grid.ics_per_instance = ics;
        config.split = SplitCounts::proportional(ics);
    }
    config.validate()?;
    Ok(config)
}

fn select(keys: Vec<InstanceKey>, filter: &str) -> Result<Vec<InstanceKey>> {
    let f = InstanceFilter::parse(filter)?;
    let keys: Vec<InstanceKey> = keys.into_iter().filter(|k| f.matches(k)).collect();
    if keys.is_empty() {
        return Err(Error::Config {
            key: "filter".into(),
            reason: format!("`{filter}` matches no instance"),
        });
    }
    Ok(keys)
}

fn records(
    key: &InstanceKey,
    diags: impl IntoIterator<Item = (usize, csmbench::indicators::OrbitDiagnostics)>,
) -> Vec<DiagnosticsRecord> {
    diags
        .into_iter()
        .map(|(ic_index, d)| DiagnosticsRecord {
            k: key.k,
            rho: key.rho,
            n: key.n,
            ic_index,
            lambda_max: d.lambda_max,
            sali_final: d.sali_final,
            orbit_class: d.orbit_class,
        })
        .collect()
}

fn generate(grid: &GridArgs, filter: &str, out: &Path, diagnostics: Option<PathBuf>) -> Result<()> {
    let config = grid_config(grid)?;
    let keys = select(build_grid(&config.grid)?, filter)?;
    let generation = config.generation(true);
    let ics: Vec<usize> = (0..config.grid.ics_per_instance).collect();
    let writer = DatasetWriter::create(out, &config)?;
    let mut all = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let data = generate_instance(key, &ics, &generation, Execution::available())?;
        for item in &data.trajectories {
            writer.write(key, item)?;
        }
        all.extend(records(
            key,
            data.trajectories
                .iter()
                .filter_map(|g| g.diagnostics.map(|d| (g.trajectory.ic_index, d))),
        ));
        eprintln!("[{}/{}] {key}", i + 1, keys.len());
    }
    writer.flush()?;
    let diag_path = diagnostics.unwrap_or_else(|| out.with_file_name("diagnostics.csv"));
    write_diagnostics_csv(create(&diag_path)?, &all)?;
    eprintln!(
        "wrote {} trajectories to {} and diagnostics to {}",
        keys.len() * ics.len(),
        out.display(),
        diag_path.display()
    );
    Ok(())
}

fn diagnose(grid: &GridArgs, data: Option<&Path>, filter: &str, out: Option<&Path>) -> Result<()> {
    let mut all = Vec::new();
    if let Some(path) = data {
        let reader = DatasetReader::open(path)?;
        for key in select(reader.instances()?, filter)? {
            let diags = reader
                .ic_indices(&key)?
                .into_iter()
                .map(|ic| {
                    let d = reader.read(&key, ic)?.diagnostics;
                    d.map(|d| (ic, d))
                        .ok_or_else(|| Error::Missing(format!("diagnostics for {key} ic{ic}")))
                })
                .collect::<Result<Vec<_>>>()?;
            all.extend(records(&key, diags));
        }
    } else {
        let config = grid_config(grid)?;
        let generation = config.generation(true);
        let ics: Vec<usize> = (0..config.grid.ics_per_instance).collect();
        for key in select(build_grid(&config.grid)?, filter)? {
            let diags = diagnose_instance(&key, &ics, &generation, Execution::available())?;
            all.extend(records(&key, diags));
        }
    }
    if let Some(path) = out {
        write_diagnostics_csv(create(path)?, &all)?;
    }
    print_regimes(&all)
}

fn print_regimes(records: &[DiagnosticsRecord]) -> Result<()> {
    let mut groups: BTreeMap<[u64; 3], Vec<&DiagnosticsRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry(InstanceKey::new(r.k, r.rho, r.n).sort_bits())
            .or_default()
            .push(r);
    }
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:>6} {:>6} {:>4} {:>5} {:>8} {:>10} {:>8}",
        "K", "rho", "N", "ICs", "chaotic", "lambda_max", "T_L"
    )?;
    for rs in groups.values() {
        let s = regime_stats(&rs.iter().map(|r| r.diagnostics()).collect::<Vec<_>>())?;
        let r = rs[0];
        writeln!(
            out,
            "{:>6} {:>6} {:>4} {:>5} {:>7.0}% {:>10.3} {:>8.3}",
            r.k,
            r.rho,
            r.n,
            s.orbits,
            100.0 * s.chaos_fraction,
            s.mean_lambda_max,
            s.lyapunov_time
        )?;
    }
    Ok(())
}

fn split(grid: &GridArgs, data: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let config = match data {
        Some(path) => {
            let mut config = DatasetReader::open(path)?.config().clone();
            if let Some(seed) = grid.master_seed {
                config.grid.master_seed = seed;
            }
            config
        }
        None => grid_config(grid)?,
    };
    write_split_csv(output(out)?, &config.split_spec()?)
}

struct EvaluateArgs {
    data: PathBuf,
    models: Vec<String>,
    filter: String,
    seeds: Vec<u64>,
    cap: usize,
    timeout: Option<f64>,
    out: Option<PathBuf>,
    detail: Option<PathBuf>,
}

fn model_spec(spec: &str, timeout: Option<f64>) -> Result<ModelSpec> {
    let mut model = ModelSpec::parse(spec)?;
    if let (ModelSpec::External { timeout: t, .. }, Some(secs)) = (&mut model, timeout) {
        *t = Duration::try_from_secs_f64(secs)
            .ok()
            .filter(|d| !d.is_zero())
            .ok_or_else(|| Error::Config {
                key: "timeout".into(),
                reason: format!("`{secs}` is not a positive number of seconds"),
            })?;
    }
    Ok(model)
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let models = args
        .models
        .iter()
        .map(|m| model_spec(m, args.timeout))
        .collect::<Result<Vec<_>>>()?;
    let config = RolloutConfig::with_cap(args.cap);
    config.validate()?;
    let reader = DatasetReader::open(&args.data)?;
    let split = reader.config().split_spec()?;
    let keys = select(reader.instances()?, &args.filter)?;

    let mut results = Vec::new();
    for key in &keys {
        let input = InstanceInput::load(&reader, key, &split)?;
        for model in &models {
            let rows = evaluate_instance(
                &|| model.build(),
                &input,
                &args.seeds,
                &config,
                Execution::available(),
            )?;
            let valid = rows.iter().filter(|r| r.valid).count();
            let vpt = rows.iter().map(|r| r.mean_vpt).sum::<f64>() / rows.len() as f64;
            eprintln!(
                "{key} {}: valid {valid}/{} mean VPT {vpt:.2}",
                model.name(),
                rows.len()
            );
            results.extend(rows);
        }
    }
    if let Some(path) = &args.detail {
        write_detail_csv(create(path)?, &results)?;
    }
    write_results_csv(output(args.out.as_deref())?, &results)
}

fn load_results(paths: &[PathBuf]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for path in paths {
        rows.extend(read_results_csv(open(path)?)?);
    }
    Ok(rows)
}

fn parse_pair(spec: &str) -> Result<(String, String)> {
    match spec.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
            Ok((a.trim().into(), b.trim().into()))
        }
        _ => Err(Error::Config {
            key: "pair".into(),
            reason: format!("expected `A,B`, got `{spec}`"),
        }),
    }
}

fn compare(
    results: &[PathBuf],
    pairs: &[String],
    out: Option<&Path>,
    wins: Option<&Path>,
    crossover: Option<&Path>,
    graph_models: &[String],
) -> Result<()> {
    let summaries = summarize(&load_results(results)?, VALIDITY_THRESHOLD);
    let present: BTreeSet<&str> = summaries.iter().map(|s| s.model.as_str()).collect();
    let pairs = if pairs.is_empty() {
        all_pairs(&summaries)
    } else {
        pairs.iter().map(|p| parse_pair(p)).collect::<Result<_>>()?
    };
    for (a, b) in &pairs {
        for m in [a, b] {
            if !present.contains(m.as_str()) {
                return Err(Error::Config {
                    key: "pair".into(),
                    reason: format!("model `{m}` not found in the results"),
                });
            }
        }
    }
    let rows: Vec<_> = pairs
        .iter()
        .map(|(a, b)| PairedComparison::new(&summaries, a, b).report())
        .collect();
    write_comparison_csv(output(out)?, &rows)?;
    if let Some(path) = wins {
        write_wins_csv(create(path)?, &fractional_wins(&summaries))?;
    }
    if let Some(path) = crossover {
        let graph: BTreeSet<String> = graph_models.iter().cloned().collect();
        write_crossover_csv(create(path)?, &crossover_threshold(&summaries, &graph))?;
    }
    Ok(())
}

fn report(diagnostics: &Path, results: &[PathBuf], out_dir: &Path) -> Result<()> {
    let diags = read_diagnostics_csv(open(diagnostics)?)?;
    let summaries = summarize(&load_results(results)?, VALIDITY_THRESHOLD);
    let cells = regime_report(&diags, &summaries)?;
    std::fs::create_dir_all(out_dir)?;
    write_design_space_csv(create(&out_dir.join("design_space.csv"))?, &cells)?;
    let sizes: BTreeSet<usize> = cells.iter().map(|c| c.n).collect();
    for n in sizes {
        if let Some(text) = svg::design_space_svg(&cells, n) {
            std::fs::write(out_dir.join(format!("design_space_N{n}.svg")), text)?;
        }
        if let Some(text) = svg::winner_map_svg(&cells, n) {
            std::fs::write(out_dir.join(format!("winners_N{n}.svg")), text)?;
        }
    }
    Ok(())
}
