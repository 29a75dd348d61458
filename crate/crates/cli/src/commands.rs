use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use prost_core::evaluate::{
    compare_modes, evaluate_sequence, format_sig, measures_csv_header, measures_csv_row,
    mode_medians, roc_sweep, verdict, Aggregation, CategoryReport, SequenceReport, SweepMode,
    SweepOptions,
};
use prost_core::imageio::{load_snapshot, save_snapshot, write_frame, write_mask};
use prost_core::pipeline::{run_sequence, upsample_mask};
use prost_core::{Error, SequenceSpec, SyntheticStreamSpec, TrackerState};

use crate::config::{
    describe_sequence, ConfigFile, Defaults, RunConfig, SequenceArgs, TrackerArgs,
};
use crate::error::{usage, CliResult};
use crate::{
    Command, EvaluateCmd, SnapshotCmd, SnapshotLoadCmd, SnapshotSaveCmd, SweepCmd, SynthCmd,
    TrackCmd,
};

pub(crate) fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Track(cmd) => track(cmd),
        Command::Evaluate(cmd) => evaluate(cmd),
        Command::Sweep(cmd) => sweep(cmd),
        Command::Synth(cmd) => synth(cmd),
        Command::Snapshot(SnapshotCmd::Save(cmd)) => snapshot_save(cmd),
        Command::Snapshot(SnapshotCmd::Load(cmd)) => snapshot_load(cmd),
    }
}

fn echo(command: &str, run: &RunConfig, extra: &str) {
    if extra.is_empty() {
        eprintln!("config[{command}]: {}", run.describe());
    } else {
        eprintln!("config[{command}]: {} {extra}", run.describe());
    }
}

/// Sequence plus tracker settings, with `i_init` defaulting to the frames
/// read before evaluation starts.
fn resolve_sequence_run(
    sequence: &SequenceArgs,
    tracker: &TrackerArgs,
    file: &ConfigFile,
) -> CliResult<(SequenceSpec, RunConfig)> {
    let spec = sequence.resolve(file)?;
    let run = tracker.resolve(file, Defaults::benchmark(spec.training_frames()))?;
    Ok((spec, run))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_err(Path::new("<stdout>"), e).into())
        }
    }
}

fn load_resume(path: &Path, run: &RunConfig) -> CliResult<TrackerState> {
    let snapshot = load_snapshot(path)?;
    if !snapshot.matches(&run.params) {
        return Err(Error::InvalidParameter(format!(
            "snapshot {} was produced with different tracker parameters",
            path.display()
        ))
        .into());
    }
    Ok(snapshot.state)
}

fn track(cmd: TrackCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let (spec, run) = resolve_sequence_run(&cmd.sequence, &cmd.tracker, &file)?;
    let output = file
        .pick(cmd.output.clone(), "output")?
        .ok_or_else(|| usage("--output is required"))?;
    let emit_backgrounds = cmd.emit_backgrounds || file.get("emit-backgrounds")?.unwrap_or(false);
    file.reject_unknown()?;
    echo(
        "track",
        &run,
        &format!(
            "{} output={} emit_backgrounds={emit_backgrounds}",
            describe_sequence(&spec),
            output.display()
        ),
    );

    let resume = cmd
        .resume
        .as_deref()
        .map(|p| load_resume(p, &run))
        .transpose()?;
    fs::create_dir_all(&output).map_err(|e| io_err(&output, e))?;

    let summary = run_sequence(
        &spec,
        &run.pipeline,
        &run.params,
        resume,
        |item, result, sub| {
            let full = upsample_mask(&result.mask, item.frame.width(), item.frame.height())?;
            write_mask(&full, output.join(format!("bin{:06}.pgm", item.index)))?;
            if emit_backgrounds {
                let bg = sub.background()?;
                let ext = if bg.channels() == 1 { "pgm" } else { "ppm" };
                write_frame(&bg, output.join(format!("bg{:06}.{ext}", item.index)))?;
            }
            Ok(())
        },
    )?;

    if let (Some(path), Some(state)) = (&cmd.save_snapshot, &summary.state) {
        save_snapshot(path, state, &run.params)?;
    }
    println!(
        "processed {} frames in {:.3} s ({:.1} frames/second)",
        summary.frames,
        summary.elapsed.as_secs_f64(),
        summary.frames_per_second()
    );
    Ok(())
}

fn category_sequences(
    dir: &Path,
    args: &SequenceArgs,
    file: &ConfigFile,
) -> CliResult<Vec<SequenceSpec>> {
    if !dir.is_dir() {
        return Err(Error::InvalidParameter(format!(
            "category directory {} does not exist",
            dir.display()
        ))
        .into());
    }
    let mut roots: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("input").is_dir())
        .collect();
    roots.sort();
    if roots.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "category directory {} holds no sequences (subdirectories with input/)",
            dir.display()
        ))
        .into());
    }
    roots.iter().map(|r| args.resolve_at(r, file)).collect()
}

fn evaluate(cmd: EvaluateCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let category = file.pick(cmd.category.clone(), "category")?;
    let (name, specs) = match &category {
        Some(dir) => {
            let name = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            (name, category_sequences(dir, &cmd.sequence, &file)?)
        }
        None => {
            let spec = cmd.sequence.resolve(&file)?;
            (spec.name(), vec![spec])
        }
    };
    let runs: Vec<RunConfig> = specs
        .iter()
        .map(|s| {
            cmd.tracker
                .resolve(&file, Defaults::benchmark(s.training_frames()))
        })
        .collect::<CliResult<_>>()?;
    let csv_path = file.pick(cmd.csv.clone(), "csv")?;
    file.reject_unknown()?;

    for (spec, run) in specs.iter().zip(&runs) {
        if spec.groundtruth_dir.is_none() {
            return Err(Error::InvalidParameter(format!(
                "sequence {} has no ground truth; pass --groundtruth",
                spec.name()
            ))
            .into());
        }
        echo("evaluate", run, &describe_sequence(spec));
    }

    let results: Vec<prost_core::Result<SequenceReport>> = specs
        .par_iter()
        .zip(runs.par_iter())
        .map(|(spec, run)| {
            let (counts, _) = evaluate_sequence(spec, &run.pipeline, &run.params, None)?;
            Ok(SequenceReport {
                name: spec.name(),
                delta: run.params.delta,
                counts,
            })
        })
        .collect();
    let sequences = results
        .into_iter()
        .collect::<prost_core::Result<Vec<_>>>()?;
    let report = CategoryReport {
        name,
        delta: runs[0].params.delta,
        sequences,
    };
    eprint!("{}", report.to_table());
    write_output(csv_path.as_deref(), &report.to_csv())
}

fn sweep(cmd: SweepCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let deltas = match (&cmd.deltas, &cmd.delta_range) {
        (Some(list), _) => list.0.clone(),
        (None, Some(range)) => range.0.clone(),
        (None, None) => match file.get::<crate::config::NumberList>("deltas")? {
            Some(list) => list.0,
            None => Vec::new(),
        },
    };
    if deltas.is_empty() {
        return Err(usage(
            "sweep needs at least one threshold (--deltas or --delta-range)",
        ));
    }
    let (spec, run) = resolve_sequence_run(&cmd.sequence, &cmd.tracker, &file)?;
    let replay = cmd.replay || file.get("replay")?.unwrap_or(false);
    let csv_path = file.pick(cmd.csv.clone(), "csv")?;
    file.reject_unknown()?;
    let listed: Vec<String> = deltas.iter().map(|d| format_sig(*d)).collect();
    echo(
        "sweep",
        &run,
        &format!(
            "{} deltas={} replay={replay}",
            describe_sequence(&spec),
            listed.join(",")
        ),
    );

    let options = SweepOptions {
        mode: if replay {
            SweepMode::Replay
        } else {
            SweepMode::Independent
        },
        couple_mu: run.mu == crate::config::MuSetting::Auto,
    };
    let points = roc_sweep(&spec, &run.pipeline, &run.params, &deltas, &options)?;
    let name = spec.name();
    let mut csv = String::from(measures_csv_header());
    csv.push('\n');
    for p in &points {
        csv.push_str(&measures_csv_row(
            &name,
            p.delta,
            Aggregation::Pooled,
            &p.counts,
            &p.measures,
        ));
        csv.push('\n');
    }
    write_output(csv_path.as_deref(), &csv)
}

fn synth(cmd: SynthCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let defaults = Defaults {
        k: 5,
        p: 0.5,
        t_init: 1e-2,
        t_min: 1e-4,
        i_init: 500,
        mu_reference_p: Some(0.5),
    };
    let run = cmd.tracker.resolve(&file, defaults)?;
    let first_seed = run.pipeline.seed;
    let seed_count = file.pick(cmd.seeds, "seeds")?.unwrap_or(10);
    let spec = SyntheticStreamSpec {
        m: file.pick(cmd.m, "m")?.unwrap_or(100),
        k: run.params.k,
        n_frames: file.pick(cmd.frames, "frames")?.unwrap_or(2000),
        outlier_fraction: file
            .pick(cmd.outlier_fraction, "outlier-fraction")?
            .unwrap_or(0.1),
        outlier_magnitude: file
            .pick(cmd.outlier_magnitude, "outlier-magnitude")?
            .unwrap_or(1.0),
        noise_sigma: file.pick(cmd.noise_sigma, "noise-sigma")?.unwrap_or(1e-3),
        seed: first_seed,
    };
    let p_values = file
        .pick(cmd.p_values.clone(), "p-values")?
        .map(|l| l.0)
        .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0]);
    let csv_path = file.pick(cmd.csv.clone(), "csv")?;
    file.reject_unknown()?;
    spec.validate()?;
    if p_values.is_empty() || seed_count == 0 {
        return Err(usage("synth needs at least one p value and one seed"));
    }
    let listed: Vec<String> = p_values.iter().map(|p| format_sig(*p)).collect();
    echo(
        "synth",
        &run,
        &format!(
            "m={} frames={} outlier_fraction={} outlier_magnitude={} noise_sigma={} seeds={}..{} p_values={}",
            spec.m,
            spec.n_frames,
            spec.outlier_fraction,
            spec.outlier_magnitude,
            spec.noise_sigma,
            first_seed,
            first_seed + seed_count - 1,
            listed.join(",")
        ),
    );

    let seeds: Vec<u64> = (first_seed..first_seed + seed_count).collect();
    let runs = compare_modes(&spec, &run.params, &p_values, &seeds)?;
    let mut csv = String::from("p,seed,error\n");
    for r in &runs {
        csv.push_str(&format!(
            "{},{},{}\n",
            format_sig(r.p),
            r.seed,
            format_sig(r.error)
        ));
    }
    for (p, m) in mode_medians(&runs) {
        eprintln!("median error p={}: {}", format_sig(p), format_sig(m));
    }
    eprintln!("verdict: {}", verdict(&runs));
    write_output(csv_path.as_deref(), &csv)
}

fn snapshot_save(cmd: SnapshotSaveCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let (spec, run) = resolve_sequence_run(&cmd.sequence, &cmd.tracker, &file)?;
    file.reject_unknown()?;
    echo(
        "snapshot save",
        &run,
        &format!("{} file={}", describe_sequence(&spec), cmd.file.display()),
    );
    let summary = run_sequence(&spec, &run.pipeline, &run.params, None, |_, _, _| Ok(()))?;
    let state = summary
        .state
        .ok_or_else(|| Error::State("the sequence produced no frames".into()))?;
    save_snapshot(&cmd.file, &state, &run.params)?;
    println!(
        "saved {} after {} frames (m={}, k={})",
        cmd.file.display(),
        state.frame_index,
        state.ambient_dim(),
        state.basis.dim()
    );
    Ok(())
}

fn snapshot_load(cmd: SnapshotLoadCmd) -> CliResult<()> {
    let file = ConfigFile::load(cmd.tracker.config.as_deref())?;
    let run = cmd.tracker.resolve(&file, Defaults::benchmark(1))?;
    file.reject_unknown()?;
    echo(
        "snapshot load",
        &run,
        &format!("file={}", cmd.file.display()),
    );
    let snapshot = load_snapshot(&cmd.file)?;
    let state = &snapshot.state;
    println!("m={}", state.ambient_dim());
    println!("k={}", state.basis.dim());
    println!("channels={}", state.channels);
    println!("frame_index={}", state.frame_index);
    println!("params_hash={:016x}", snapshot.params_hash);
    println!(
        "orthonormality_defect={}",
        format_sig(state.basis.orthonormality_defect())
    );
    println!(
        "normalization={}",
        match &state.preproc {
            Some(p) if p.is_frozen() => "frozen",
            Some(_) => "accumulating",
            None => "none",
        }
    );
    println!("matches_config={}", snapshot.matches(&run.params));
    Ok(())
}
