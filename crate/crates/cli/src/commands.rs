use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ldrp_core::corpus_store::{with_workers, write_csv};
use ldrp_core::{
    cmc, extract_all, ingest, load_store, rank1_accuracy, retrieval_curves, roc, save_store,
    CmcCurve, Corpus, DescriptorConfig, FeatureStore, LabeledStore, LbpParams, LdrpParams,
    MetricCurves, RocCurve,
};
use serde_json::json;

use crate::error::CliError;
use crate::{
    CompareArgs, DescriptorArgs, DescriptorKind, EvaluateArgs, ExtractArgs, Format, RecognizeArgs,
    SourceArgs,
};

impl DescriptorArgs {
    /// Configuration from the flags, filling unset values with defaults.
    pub fn config(&self, default_kind: DescriptorKind) -> DescriptorConfig {
        match self.descriptor.unwrap_or(default_kind) {
            DescriptorKind::Ldrp => {
                let d = LdrpParams::default();
                DescriptorConfig::Ldrp(LdrpParams {
                    directions: self.directions.unwrap_or(d.directions),
                    min_scale: self.m1.unwrap_or(d.min_scale),
                    max_scale: self.m2.unwrap_or(d.max_scale),
                    bit_depth: d.bit_depth,
                    sampling: self.sampling.unwrap_or(d.sampling),
                })
            }
            DescriptorKind::Lbp => {
                let d = LbpParams::default();
                DescriptorConfig::Lbp(LbpParams {
                    neighbors: self.neighbors.unwrap_or(d.neighbors),
                    radius: self.radius.unwrap_or(d.radius),
                    sampling: self.sampling.unwrap_or(d.sampling),
                })
            }
        }
    }

    /// Rejects explicitly given flags that disagree with a stored configuration.
    fn check_store(&self, stored: &DescriptorConfig) -> Result<(), CliError> {
        let mismatch = |flag: &str, given: String, recorded: String| {
            Err(CliError::Config(format!(
                "store was built with {flag} {recorded}, but {flag} {given} was given"
            )))
        };
        let kind = match stored {
            DescriptorConfig::Ldrp(_) => DescriptorKind::Ldrp,
            DescriptorConfig::Lbp(_) => DescriptorKind::Lbp,
        };
        if let Some(d) = self.descriptor {
            if d != kind {
                return mismatch("--descriptor", format!("{d:?}"), format!("{kind:?}"));
            }
        }
        let checks: Vec<(&str, Option<String>, Option<String>)> = match stored {
            DescriptorConfig::Ldrp(p) => vec![
                (
                    "--directions",
                    self.directions.map(|v| v.to_string()),
                    Some(p.directions.to_string()),
                ),
                (
                    "--m1",
                    self.m1.map(|v| v.to_string()),
                    Some(p.min_scale.to_string()),
                ),
                (
                    "--m2",
                    self.m2.map(|v| v.to_string()),
                    Some(p.max_scale.to_string()),
                ),
                (
                    "--sampling",
                    self.sampling.map(|v| v.to_string()),
                    Some(p.sampling.to_string()),
                ),
                ("--neighbors", self.neighbors.map(|v| v.to_string()), None),
                ("--radius", self.radius.map(|v| v.to_string()), None),
            ],
            DescriptorConfig::Lbp(p) => vec![
                (
                    "--neighbors",
                    self.neighbors.map(|v| v.to_string()),
                    Some(p.neighbors.to_string()),
                ),
                (
                    "--radius",
                    self.radius.map(|v| v.to_string()),
                    Some(p.radius.to_string()),
                ),
                (
                    "--sampling",
                    self.sampling.map(|v| v.to_string()),
                    Some(p.sampling.to_string()),
                ),
                ("--directions", self.directions.map(|v| v.to_string()), None),
                ("--m1", self.m1.map(|v| v.to_string()), None),
                ("--m2", self.m2.map(|v| v.to_string()), None),
            ],
        };
        for (flag, given, recorded) in checks {
            match (given, recorded) {
                (Some(g), Some(r)) if g != r => return mismatch(flag, g, r),
                (Some(_), None) => {
                    return Err(CliError::Config(format!(
                        "{flag} does not apply to a {} store",
                        stored.name()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn load_corpus(root: &Path, args: &DescriptorArgs) -> Result<Corpus, CliError> {
    let corpus = ingest(root, args.resize.0)?;
    for s in &corpus.skipped {
        eprintln!("warning: skipped {}: {}", s.path.display(), s.reason);
    }
    Ok(corpus)
}

fn describe(
    corpus: &Corpus,
    config: &DescriptorConfig,
    workers: usize,
) -> Result<LabeledStore, CliError> {
    config.validate()?;
    Ok(extract_all(corpus, config, workers)?)
}

/// Store from `--store`, or extracted on the fly from `--root`.
fn open_source(source: &SourceArgs) -> Result<FeatureStore, CliError> {
    match (&source.store, &source.root) {
        (Some(path), _) => {
            let fs = load_store(path)?;
            source.descriptor.check_store(&fs.config)?;
            Ok(fs)
        }
        (None, Some(root)) => {
            let config = source.descriptor.config(DescriptorKind::Ldrp);
            let corpus = load_corpus(root, &source.descriptor)?;
            let store = describe(&corpus, &config, source.descriptor.workers)?;
            Ok(FeatureStore::new(config, store)?)
        }
        (None, None) => Err(CliError::Config(
            "one of --store or --root is required".into(),
        )),
    }
}

fn in_pool<R: Send>(
    workers: usize,
    f: impl FnOnce() -> Result<R, CliError> + Send,
) -> Result<R, CliError> {
    with_workers(workers, f)?
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display(), e))
}

/// Sends `write` to `out`, or to standard output.
fn emit(
    out: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)?;
            w.flush().map_err(|e| CliError::io(path.display(), e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush().map_err(|e| CliError::io("standard output", e))
        }
    }
}

fn write_json(w: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w).map_err(|e| CliError::io("output", e))
}

fn metrics_csv(w: &mut dyn Write, curves: &MetricCurves) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["n", "arp", "arr", "f_score", "anmrr"])?;
    for r in &curves.rows {
        csv.write_record([
            r.n.to_string(),
            r.arp.to_string(),
            r.arr.to_string(),
            r.f_score.to_string(),
            r.anmrr.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| CliError::io("output", e))
}

fn cmc_csv(w: &mut dyn Write, curve: &CmcCurve) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["rank", "rate"])?;
    for (i, rate) in curve.rates.iter().enumerate() {
        csv.write_record([(i + 1).to_string(), rate.to_string()])?;
    }
    csv.flush().map_err(|e| CliError::io("output", e))
}

fn roc_csv(w: &mut dyn Write, curve: &RocCurve) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["fpr", "tpr"])?;
    for (f, t) in curve.fpr.iter().zip(&curve.tpr) {
        csv.write_record([f.to_string(), t.to_string()])?;
    }
    csv.flush().map_err(|e| CliError::io("output", e))
}

pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let config = args.descriptor.config(DescriptorKind::Ldrp);
    config.validate()?;
    let corpus = load_corpus(&args.root, &args.descriptor)?;
    let store = describe(&corpus, &config, args.descriptor.workers)?;
    let (records, dimension) = (store.len(), config.dimension());
    match args.format {
        Some(Format::Csv) => {
            let mut w = create(&args.out)?;
            write_csv(&store, &mut w)?;
            w.flush().map_err(|e| CliError::io(args.out.display(), e))?;
        }
        Some(Format::Json) => {
            let value = json!({
                "descriptor": config.name(),
                "dimension": dimension,
                "records": store.records(),
            });
            emit(Some(&args.out), |w| write_json(w, &value))?;
        }
        None => save_store(&FeatureStore::new(config, store)?, &args.out)?,
    }
    println!("images: {records}");
    println!("skipped: {}", corpus.skipped.len());
    println!("descriptor: {}", config.name());
    println!("dimension: {dimension}");
    println!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let workers = args.source.descriptor.workers;
    let fs = in_pool(workers, || open_source(&args.source))?;
    let curves = in_pool(workers, || {
        Ok(retrieval_curves(
            &fs.store,
            args.output.distance,
            &args.n.0,
        )?)
    })?;
    emit(args.output.out.as_deref(), |w| match args.output.format {
        Format::Csv => metrics_csv(w, &curves),
        Format::Json => write_json(
            w,
            &json!({
                "descriptor": fs.config.name(),
                "dimension": fs.config.dimension(),
                "distance": args.output.distance.name(),
                "rows": curves.rows,
            }),
        ),
    })
}

/// Indices of the store records named in a list file, one path per line.
fn read_list(path: &Path, store: &LabeledStore) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let index: HashMap<&str, usize> = store
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        match index.get(entry) {
            Some(&i) => out.push(i),
            None => {
                return Err(CliError::Config(format!(
                    "{}:{}: unknown image path `{entry}`",
                    path.display(),
                    line_no + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Config(format!(
            "{}: list is empty",
            path.display()
        )));
    }
    Ok(out)
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn recognize(args: &RecognizeArgs) -> Result<(), CliError> {
    let workers = args.source.descriptor.workers;
    let fs = in_pool(workers, || open_source(&args.source))?;
    let kind = args.output.distance;
    let out = args.output.out.as_deref();

    if let (Some(gallery), Some(probe)) = (&args.gallery_list, &args.probe_list) {
        let gallery = fs.store.subset(&read_list(gallery, &fs.store)?);
        let probe = fs.store.subset(&read_list(probe, &fs.store)?);
        let accuracy = in_pool(workers, || Ok(rank1_accuracy(&gallery, &probe, kind)?))?;
        return emit(out, |w| match args.output.format {
            Format::Csv => {
                writeln!(w, "rank1_accuracy\n{accuracy}").map_err(|e| CliError::io("output", e))
            }
            Format::Json => write_json(
                w,
                &json!({"gallery": gallery.len(), "probe": probe.len(), "rank1_accuracy": accuracy}),
            ),
        });
    }

    let (cmc_curve, roc_curve) = in_pool(workers, || {
        Ok((cmc(&fs.store, kind, args.max_rank)?, roc(&fs.store, kind)?))
    })?;
    match (args.output.format, out) {
        (Format::Json, _) => emit(out, |w| {
            write_json(w, &json!({"cmc": cmc_curve, "roc": roc_curve}))
        }),
        (Format::Csv, Some(prefix)) => {
            emit(Some(&suffixed(prefix, ".cmc.csv")), |w| {
                cmc_csv(w, &cmc_curve)
            })?;
            emit(Some(&suffixed(prefix, ".roc.csv")), |w| {
                roc_csv(w, &roc_curve)
            })
        }
        (Format::Csv, None) => emit(None, |w| {
            cmc_csv(w, &cmc_curve)?;
            writeln!(w).map_err(|e| CliError::io("output", e))?;
            roc_csv(w, &roc_curve)
        }),
    }
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    if args.descriptor.descriptor.is_some() {
        return Err(CliError::Config(
            "compare always runs both ldrp and lbp; drop --descriptor".into(),
        ));
    }
    let configs = [
        args.descriptor.config(DescriptorKind::Ldrp),
        args.descriptor.config(DescriptorKind::Lbp),
    ];
    for c in &configs {
        c.validate()?;
    }
    let corpus = load_corpus(&args.root, &args.descriptor)?;
    let workers = args.descriptor.workers;
    let mut sections = Vec::new();
    for config in configs {
        let store = describe(&corpus, &config, workers)?;
        let curves = in_pool(workers, || {
            Ok(retrieval_curves(&store, args.output.distance, &args.n.0)?)
        })?;
        sections.push((config, curves));
    }
    emit(args.output.out.as_deref(), |w| match args.output.format {
        Format::Csv => {
            for (i, (config, curves)) in sections.iter().enumerate() {
                if i > 0 {
                    writeln!(w).map_err(|e| CliError::io("output", e))?;
                }
                writeln!(
                    w,
                    "# {} dimension={} distance={}",
                    config.name(),
                    config.dimension(),
                    args.output.distance
                )
                .map_err(|e| CliError::io("output", e))?;
                metrics_csv(w, curves)?;
            }
            Ok(())
        }
        Format::Json => {
            let value: Vec<_> = sections
                .iter()
                .map(|(config, curves)| {
                    json!({
                        "descriptor": config.name(),
                        "dimension": config.dimension(),
                        "distance": args.output.distance.name(),
                        "rows": curves.rows,
                    })
                })
                .collect();
            write_json(w, &serde_json::Value::Array(value))
        }
    })
}
