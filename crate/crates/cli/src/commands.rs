use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use log::info;

use imgts::evalkit::{run_benchmark, BenchmarkConfig, EvalConfig, PerturbationSpec, DEFAULT_HORIZONS, DEFAULT_RESCALE};
use imgts::forecast::Registry;
use imgts::imgspace::pgm::{image_files, load_image, AnyImage, ImageMeta};
use imgts::imgspace::{
    decode_with_missing, denormalize, encode, encode_masked, normalize, preprocess, resample_linear, soft_decode,
    BlurSpec, ImagePipeline, SpaceParams,
};
use imgts::realts::{generate_batch, write_manifest, AugmentConfig, Behavior, GeneratorConfig, NoiseLevel};
use imgts::se_theory::{grid_csv, solve_grid, Scaling, REFERENCE_H, REFERENCE_K};
use imgts::series::{read_csv_file, write_csv, MissingMask, TimeSeries};
use imgts::{Exec, RngStream};

use crate::config::{List, Noise, Resolver, ScalingArg, Spec};
use crate::output::{ensure_dir, slug, write_atomic};
use crate::{Cli, Command, DecodeArgs, EncodeArgs, EvaluateArgs, GenerateArgs, PerturbArgs, SolveMsArgs, SpaceArgs};

/// Settings shared by every subcommand.
struct Run {
    seed: u64,
    out: PathBuf,
    exec: Exec,
    section: &'static str,
}

impl Run {
    /// Records the fully resolved configuration next to the outputs.
    fn snapshot(&self, r: &Resolver) -> Result<()> {
        let path = self.out.join(format!("{}.resolved.ini", self.section));
        write_atomic(&path, r.snapshot().as_bytes())?;
        info!("resolved config written to {}", path.display());
        Ok(())
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, bytes)?;
        Ok(path)
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

pub fn run(cli: Cli) -> Result<()> {
    let mut r = Resolver::new(cli.config.as_deref())?;
    let seed = r.get_or_auto("run", "seed", cli.seed, clock_seed)?;
    let out_dir: String = r.get("run", "out_dir", cli.out_dir, "out".to_string())?;
    let threads: usize = r.get("run", "threads", cli.threads, 0)?;
    if threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let run = Run {
        seed,
        out: ensure_dir(Path::new(&out_dir))?,
        exec: if threads == 1 { Exec::Sequential } else { Exec::default() },
        section: cli.command.name(),
    };
    match cli.command {
        Command::Generate(a) => generate(&mut r, &run, a),
        Command::Encode(a) => encode_cmd(&mut r, &run, a),
        Command::Decode(a) => decode_cmd(&mut r, &run, a),
        Command::SolveMs(a) => solve_ms(&mut r, &run, a),
        Command::Evaluate(a) => evaluate(&mut r, &run, a),
        Command::Perturb(a) => perturb_cmd(&mut r, &run, a),
        Command::ListModels(a) => list_models(&mut r, &run, a),
    }
}

fn space(r: &mut Resolver, section: &str, a: SpaceArgs) -> Result<SpaceParams> {
    let d = SpaceParams::default();
    let h = r.get(section, "h", a.h, d.h)?;
    let ms = r.get(section, "ms", a.ms, d.ms)?;
    Ok(SpaceParams::new(h, ms)?)
}

fn parse_behaviors(s: &str) -> Result<Option<Vec<Behavior>>> {
    if s.trim() == "all" {
        return Ok(None);
    }
    let list = s
        .split(',')
        .map(|b| Behavior::parse(b.trim()).with_context(|| format!("unknown behaviour '{}'", b.trim())))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        bail!("behaviour list is empty");
    }
    Ok(Some(list))
}

fn generate(r: &mut Resolver, run: &Run, a: GenerateArgs) -> Result<()> {
    let s = run.section;
    let d = GeneratorConfig::default();
    let n: usize = r.get(s, "n", a.n, 10)?;
    let first: u64 = r.get(s, "first_index", a.first_index, 0)?;
    let behaviors: String = r.get(s, "behaviors", a.behaviors, "all".to_string())?;
    let augment = r.get(s, "augment", a.augment, true)?;
    let cfg = GeneratorConfig {
        length: r.get(s, "length", a.length, d.length)?,
        alpha: r.get(s, "alpha", a.alpha, d.alpha)?,
        noise: r.get(s, "noise", a.noise, Noise(NoiseLevel::RelativeToSignal(0.05)))?.0,
        pwb_k_max: r.get(s, "pwb_k_max", a.pwb_k_max, d.pwb_k_max)?,
        rwb_sigma: r.get(s, "rwb_sigma", a.rwb_sigma, d.rwb_sigma)?,
        augment: if augment { d.augment.clone() } else { AugmentConfig::disabled() },
        behaviors: parse_behaviors(&behaviors)?,
        ..d
    };
    cfg.validate()?;
    run.snapshot(r)?;

    info!("generating {n} series of length {}", cfg.length);
    let items = generate_batch(&cfg, run.seed, first, n, run.exec)?;
    let ids: Vec<String> = (0..n as u64).map(|i| format!("series_{:06}", first + i)).collect();
    for (id, g) in ids.iter().zip(&items) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &g.series, None)?;
        run.write(&format!("{id}.csv"), &buf)?;
    }
    let mut manifest = Vec::new();
    write_manifest(&mut manifest, &ids, &items)?;
    let path = run.write("manifest.csv", &manifest)?;
    println!("wrote {n} series and {}", path.display());
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string())
}

fn encode_cmd(r: &mut Resolver, run: &Run, a: EncodeArgs) -> Result<()> {
    let s = run.section;
    let input: String = r.require(s, "input", a.input)?;
    let input = PathBuf::from(input);
    let name: String = r.get(s, "name", a.name, file_stem(&input))?;
    let params = space(r, s, a.space)?;
    let do_norm = r.get(s, "normalize", a.normalize, false)?;
    let interpolate = r.get(s, "interpolate", a.interpolate, false)?;
    let blur = r.get(s, "blur", a.blur, false)?;
    let blur_size: usize = r.get(s, "blur_size", a.blur_size, 31)?;
    let spec = BlurSpec::new(blur_size, blur_size);
    if blur {
        spec.validate()?;
    }
    run.snapshot(r)?;

    let obs = read_csv_file(&input)?;
    if obs.missing.is_some() && (interpolate || blur) {
        bail!(
            "{} has missing values; interpolation and blur need a complete series",
            input.display()
        );
    }
    let source_len = obs.series.len();
    let (series, norm) = if do_norm {
        let (z, stats) = normalize(&obs.series, source_len)?;
        (z, Some(stats))
    } else {
        (obs.series, None)
    };
    let series = ImagePipeline::new(params).with_interpolation(interpolate).upsample(&series)?;
    let binary = match &obs.missing {
        Some(m) => encode_masked(&series, m, params)?,
        None => encode(&series, params)?,
    };
    let image = if blur {
        AnyImage::Soft(preprocess(&binary, &spec)?)
    } else {
        AnyImage::Binary(binary)
    };
    let mut meta = ImageMeta::for_image(&image);
    meta.interpolated = interpolate;
    meta.source_len = source_len;
    meta.norm = norm;
    let stem = run.out.join(&name);
    for (path, bytes) in image_files(&stem, &image, &meta) {
        write_atomic(&path, &bytes)?;
        info!("wrote {}", path.display());
    }
    println!(
        "encoded {} ({} channels x {} columns, h = {}) to {}",
        input.display(),
        image.n_channels(),
        image.len(),
        params.h,
        stem.display()
    );
    Ok(())
}

/// Strips `.meta` or `.ch<i>.pgm` so any file of an image names its stem.
fn image_stem(input: &str) -> PathBuf {
    if let Some(s) = input.strip_suffix(".meta") {
        return PathBuf::from(s);
    }
    if let Some(s) = input.strip_suffix(".pgm") {
        if let Some((base, ch)) = s.rsplit_once(".ch") {
            if !ch.is_empty() && ch.bytes().all(|b| b.is_ascii_digit()) {
                return PathBuf::from(base);
            }
        }
    }
    PathBuf::from(input)
}

fn decode_cmd(r: &mut Resolver, run: &Run, a: DecodeArgs) -> Result<()> {
    let s = run.section;
    let input: String = r.require(s, "input", a.input)?;
    let stem = image_stem(&input);
    let default_name = format!("{}.decoded.csv", stem.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
    let name: String = r.get(s, "name", a.name, default_name)?;
    run.snapshot(r)?;

    let (image, meta) = load_image(&stem)?;
    let (mut series, mut missing) = match &image {
        AnyImage::Binary(b) => decode_with_missing(b)?,
        AnyImage::Soft(img) => (soft_decode(img), None),
    };
    if meta.interpolated {
        let channels = series
            .channels()
            .iter()
            .map(|ch| resample_linear(ch, meta.source_len))
            .collect();
        series = TimeSeries::from_channels(channels)?;
        missing = None;
    }
    if let Some(stats) = &meta.norm {
        series = denormalize(&series, stats)?;
    }
    let missing: Option<MissingMask> = missing.filter(|m| m.any());
    let mut buf = Vec::new();
    write_csv(&mut buf, &series, missing.as_ref())?;
    let path = run.write(&name, &buf)?;
    println!("decoded {} to {}", stem.display(), path.display());
    Ok(())
}

fn solve_ms(r: &mut Resolver, run: &Run, a: SolveMsArgs) -> Result<()> {
    let s = run.section;
    let h: List<usize> = r.get(s, "h", a.h, List(REFERENCE_H.to_vec()))?;
    let k: List<f64> = r.get(s, "k", a.k, List(REFERENCE_K.to_vec()))?;
    let scaling = r.get(s, "scaling", a.scaling, ScalingArg(Scaling::default()))?.0;
    run.snapshot(r)?;

    let rows = solve_grid(&h.0, &k.0, scaling)?;
    let csv = grid_csv(&rows);
    run.write("optimal_ms.csv", csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn evaluate(r: &mut Resolver, run: &Run, a: EvaluateArgs) -> Result<()> {
    let s = run.section;
    let dataset: String = r.require(s, "dataset", a.dataset)?;
    let model: String = r.get(s, "model", a.model, "persistence".to_string())?;
    let lookback = r.get(s, "lookback", a.lookback, 512)?;
    let horizons: List<usize> = r.get(s, "horizons", a.horizons, List(DEFAULT_HORIZONS.to_vec()))?;
    let rescale: List<f64> = r.get(s, "rescale", a.rescale, List(DEFAULT_RESCALE.to_vec()))?;
    let stride: usize = r.get(s, "stride", a.stride, 0)?;
    let perturb: List<Spec> = r.get(s, "perturb", a.perturb, List(vec![Spec(PerturbationSpec::None)]))?;
    let standardize = r.get(s, "standardize", a.standardize, true)?;
    let params = space(r, s, a.space)?;
    run.snapshot(r)?;

    let cfg = BenchmarkConfig {
        eval: EvalConfig {
            lookback,
            horizons: horizons.0,
            rescale: rescale.0,
            stride: (stride > 0).then_some(stride),
        },
        perturbations: perturb.0.into_iter().map(|p| p.0).collect(),
        standardize,
        seed: run.seed,
    };
    let registry = Registry::new(params);
    let dataset = PathBuf::from(dataset);
    let report = run_benchmark(&dataset, &model, &registry, &cfg, run.exec)?;
    let path = run.write(&format!("{}.{}.report.csv", report.dataset, slug(&model)), report.to_csv().as_bytes())?;
    print!("{}", report.summary());
    info!("report written to {}", path.display());
    Ok(())
}

fn perturb_cmd(r: &mut Resolver, run: &Run, a: PerturbArgs) -> Result<()> {
    let s = run.section;
    let input: String = r.require(s, "input", a.input)?;
    let input = PathBuf::from(input);
    let spec: Spec = r.require(s, "spec", a.spec)?;
    let name: String = r.get(s, "name", a.name, format!("{}.{}.csv", file_stem(&input), slug(&spec.to_string())))?;
    run.snapshot(r)?;

    let obs = read_csv_file(&input)?;
    let out = imgts::evalkit::perturb(&obs.series, &spec.0, RngStream::new(run.seed, 0))?;
    // gaps already in the input stay gaps
    let missing = match (obs.missing, out.missing) {
        (Some(a), Some(b)) => Some(MissingMask::new(
            (0..a.n_channels())
                .map(|c| a.channel(c).iter().zip(b.channel(c)).map(|(x, y)| *x || *y).collect())
                .collect(),
        )),
        (a, b) => a.or(b),
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.series, missing.as_ref())?;
    let path = run.write(&name, &buf)?;
    println!("applied {} to {} -> {}", spec, input.display(), path.display());
    Ok(())
}

fn list_models(r: &mut Resolver, run: &Run, a: SpaceArgs) -> Result<()> {
    let params = space(r, run.section, a)?;
    run.snapshot(r)?;
    print!("{}", Registry::new(params).table());
    Ok(())
}
