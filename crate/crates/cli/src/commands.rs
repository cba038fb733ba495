use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mclift::container::{decode_container, encode_container, read_container, write_container};
use mclift::fixtures::{generate, FixtureSpec};
use mclift::io::{encode_raw_sequence, read_dataset, write_dataset, write_heatmap, write_pgm, write_pgm16, HeatSource, PgmMap, Sidecar};
use mclift::lifting::{analyze_sequence_detailed, synthesize_sequence, PairAnalysis, SequenceBands};
use mclift::metrics::{sequence_metrics, SequenceMetrics};
use mclift::{FseParams, LiftConfig, Sequence, UpdateField};

use crate::manifest::{sha256_hex, Manifest};
use crate::{AnalyzeArgs, CliError, CliResult, CompareArgs, FseArgs, GenFixtureArgs, SynthesizeArgs, VerifyArgs};

pub const METRICS_HEADER: &str =
    "sequence,mode,total_bytes,lowpass_bytes,highpass_bytes,motion_bytes,mean_lowpass_psnr_db,boundary_step";
pub const COMPARE_HEADER: &str = "mode,total_bytes,lowpass_bytes,highpass_bytes,motion_bytes,mean_lp_psnr_db,boundary_step";

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .unwrap_or("sequence")
        .to_string()
}

fn load_dataset(path: &Path) -> CliResult<Sequence> {
    read_dataset(path)
        .map(|(_, seq)| seq)
        .map_err(|e| CliError::DataMsg(format!("{}: {e}", path.display())))
}

fn load_container(path: &Path) -> CliResult<SequenceBands> {
    read_container(path).map_err(|e| CliError::DataMsg(format!("{}: {e}", path.display())))
}

fn checked(cfg: LiftConfig) -> CliResult<LiftConfig> {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn metrics_columns(m: &SequenceMetrics) -> String {
    format!(
        "{},{},{},{},{},{:.6}",
        m.rate.total_bytes(),
        m.rate.lowpass_bytes,
        m.rate.highpass_bytes,
        m.rate.motion_bytes,
        m.mean_lowpass_psnr,
        m.boundary_step
    )
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let cfg = checked(args.lift.config(args.mode))?;
    let seq = load_dataset(&args.input)?;
    let (bands, analyses) = analyze_sequence_detailed(&seq, &cfg)?;
    let metrics = sequence_metrics(&seq, &bands, &analyses)?;

    let out = &args.output;
    fs::create_dir_all(out)?;
    let name = stem_of(&args.input);
    let container = format!("{name}.mclf");
    write_container(&bands, out.join(&container))?;

    let mut motion_files = Vec::new();
    for (t, pair) in bands.pairs.iter().enumerate() {
        let file = format!("motion_{t:04}.bin");
        fs::write(out.join(&file), pair.motion.to_bytes()?)?;
        motion_files.push(file);
    }

    let csv = format!("{METRICS_HEADER}\n{name},{},{}\n", cfg.update_mode, metrics_columns(&metrics));
    fs::write(out.join("metrics.csv"), csv)?;

    Manifest {
        sequence: name.clone(),
        input: args.input.clone(),
        width: seq.width(),
        height: seq.height(),
        bit_depth: seq.bit_depth(),
        frames: seq.len(),
        axis: seq.axis_label().to_string(),
        config: cfg.clone(),
        container: container.clone(),
        motion_files,
        raw_sha256: sha256_hex(&encode_raw_sequence(&seq)?),
    }
    .write(out)?;

    if args.dump_diagnostics {
        dump_diagnostics(&out.join("diagnostics"), &bands, &analyses)?;
    }
    println!(
        "{}: {} pairs, mode {}, {} bytes, lowpass PSNR {} dB, boundary step {:.4}, {} unconnected pixels",
        out.join(&container).display(),
        bands.pairs.len(),
        cfg.update_mode,
        metrics.rate.total_bytes(),
        metrics.mean_lowpass_psnr,
        metrics.boundary_step,
        metrics.unconnected_pixels
    );
    Ok(())
}

fn dump_diagnostics(dir: &Path, bands: &SequenceBands, analyses: &[PairAnalysis]) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let max = ((1i64 << bands.bit_depth) - 1) as f64;
    let mut tiles = String::from("pair,tile_x,tile_y,tile_width,tile_height,iterations,degenerate,final_energy\n");
    let mut residuals = String::from("pair,tile_x,tile_y,iteration,energy\n");
    for (t, a) in analyses.iter().enumerate() {
        let lp_map = PgmMap::Range { lo: 0.0, hi: max };
        if bands.bit_depth <= 8 {
            write_pgm(&a.bands.lowpass, dir.join(format!("lowpass_{t:04}.pgm")), lp_map)?;
        } else {
            write_pgm16(&a.bands.lowpass, dir.join(format!("lowpass_{t:04}.pgm")), lp_map)?;
        }
        write_pgm(
            &a.bands.highpass,
            dir.join(format!("highpass_{t:04}.pgm")),
            PgmMap::Symmetric { half_range: max + 1.0 },
        )?;
        write_heatmap(HeatSource::Connectivity(&a.connectivity), dir.join(format!("conn_{t:04}.ppm")))?;
        write_heatmap(HeatSource::Update(&a.weighted_update), dir.join(format!("update_{t:04}.ppm")))?;
        let applied = match a.fse_report {
            // Show the extrapolated values instead of hole markers.
            Some(_) => UpdateField {
                hole_mask: vec![false; a.applied_update.values.len()],
                ..a.applied_update.clone()
            },
            None => a.applied_update.clone(),
        };
        write_heatmap(HeatSource::Update(&applied), dir.join(format!("update_applied_{t:04}.ppm")))?;
        for r in a.fse_report.iter().flat_map(|r| &r.tiles) {
            let last = r.energy_trace.last().copied().unwrap_or(0.0);
            let _ = writeln!(
                tiles,
                "{t},{},{},{},{},{},{},{last:e}",
                r.tile.x, r.tile.y, r.tile.width, r.tile.height, r.iterations, r.degenerate
            );
            for (i, e) in r.energy_trace.iter().enumerate() {
                let _ = writeln!(residuals, "{t},{},{},{i},{e:e}", r.tile.x, r.tile.y);
            }
        }
    }
    fs::write(dir.join("fse_tiles.csv"), tiles)?;
    fs::write(dir.join("fse_residuals.csv"), residuals)?;
    Ok(())
}

/// Extrapolation parameters for decoding: the analysis manifest if one sits
/// next to the container, overridden by explicit flags.
fn decode_fse(manifest: Option<&Manifest>, flags: &FseArgs) -> FseParams {
    let base = manifest.map(|m| m.config.fse.clone()).unwrap_or_default();
    if flags.is_set() {
        flags.apply(base)
    } else {
        base
    }
}

fn decode_config(bands: &SequenceBands, fse: FseParams) -> CliResult<LiftConfig> {
    let cfg = LiftConfig {
        update_mode: bands.update_mode,
        fse,
        ..LiftConfig::default()
    };
    checked(cfg)
}

pub fn synthesize(args: &SynthesizeArgs) -> CliResult<()> {
    let bands = load_container(&args.input)?;
    let manifest = Manifest::beside(&args.input)?;
    let cfg = decode_config(&bands, decode_fse(manifest.as_ref(), &args.fse))?;
    let axis = manifest.as_ref().map(|m| m.axis.as_str()).unwrap_or("time");
    let seq = synthesize_sequence(&bands, &cfg, axis)?;
    let raw = encode_raw_sequence(&seq)?;
    let hash = sha256_hex(&raw);

    if let Some(dir) = args.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&args.output, &raw)?;
    let file_name = args.output.file_name().and_then(|n| n.to_str()).unwrap_or("out.raw").to_string();
    fs::write(with_suffix(&args.output, ".sha256"), format!("{hash}  {file_name}\n"))?;
    Sidecar {
        width: seq.width(),
        height: seq.height(),
        bit_depth: seq.bit_depth(),
        frames: seq.len(),
        axis: axis.to_string(),
        raw: PathBuf::from(&file_name),
    }
    .write(args.output.with_extension("json"))?;

    println!("{hash}  {}", args.output.display());
    if let Some(m) = manifest {
        if m.raw_sha256 != hash {
            return Err(CliError::Verify(format!("reconstruction hash {hash} differs from input hash {}", m.raw_sha256)));
        }
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn first_difference(a: &Sequence, b: &Sequence) -> Option<String> {
    if a.len() != b.len() || a.width() != b.width() || a.height() != b.height() {
        return Some(format!(
            "shape {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.len(),
            b.width(),
            b.height(),
            b.len()
        ));
    }
    for (t, (fa, fb)) in a.frames().iter().zip(b.frames()).enumerate() {
        if let Some(i) = fa.samples().iter().zip(fb.samples()).position(|(x, y)| x != y) {
            return Some(format!(
                "frame {t} pixel ({}, {}): {} vs {}",
                i % fa.width(),
                i / fa.width(),
                fa.samples()[i],
                fb.samples()[i]
            ));
        }
    }
    None
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let seq = load_dataset(&args.input)?;
    let back = match &args.container {
        Some(path) => {
            let bands = load_container(path)?;
            let manifest = Manifest::beside(path)?;
            let cfg = decode_config(&bands, decode_fse(manifest.as_ref(), &args.lift.fse))?;
            synthesize_sequence(&bands, &cfg, seq.axis_label())?
        }
        None => {
            let cfg = checked(args.lift.config(args.mode))?;
            let (bands, _) = analyze_sequence_detailed(&seq, &cfg)?;
            let decoded = decode_container(&encode_container(&bands)?)?;
            synthesize_sequence(&decoded, &cfg, seq.axis_label())?
        }
    };
    if let Some(diff) = first_difference(&seq, &back) {
        return Err(CliError::Verify(diff));
    }
    println!("ok {}  {}", sha256_hex(&encode_raw_sequence(&back)?), args.input.display());
    Ok(())
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    if args.modes.len() < 2 {
        return Err(CliError::Usage("compare needs at least two modes".into()));
    }
    for mode in &args.modes {
        checked(args.lift.config(*mode))?;
    }
    let seq = load_dataset(&args.input)?;
    let mut csv = format!("{COMPARE_HEADER}\n");
    for &mode in &args.modes {
        let cfg = args.lift.config(mode);
        let (bands, analyses) = analyze_sequence_detailed(&seq, &cfg)?;
        let m = sequence_metrics(&seq, &bands, &analyses)?;
        let _ = writeln!(csv, "{mode},{}", metrics_columns(&m));
    }
    match &args.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, &csv)?;
            print!("{csv}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn gen_fixture(args: &GenFixtureArgs) -> CliResult<()> {
    let spec = FixtureSpec {
        kind: args.kind,
        seed: args.seed,
        width: args.width,
        height: args.height,
        frames: args.frames,
        bit_depth: args.bit_depth,
    };
    let seq = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&args.output)?;
    let name = args.name.clone().unwrap_or_else(|| args.kind.name().to_string());
    let sidecar = write_dataset(&seq, &args.output, &name)?;
    println!("{}", sidecar.display());
    Ok(())
}
