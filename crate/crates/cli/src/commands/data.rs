use std::path::Path;

use anyhow::Result;
use fnirs_bnn::dsp::read_recording;
use fnirs_bnn::pipeline;
use fnirs_bnn::synth::{generate, write_dataset};
use rayon::prelude::*;

use super::{create_dir, discover, write, write_features, Global};
use crate::config::Stream;

pub fn synth(g: &Global) -> Result<()> {
    let mut cfg = g.cfg.synth;
    cfg.seed = g.cfg.stream_seed(Stream::Synth, 0);
    let recordings = generate(&cfg)?;
    create_dir(&g.out)?;
    write_dataset(&recordings, &g.out)?;
    g.cfg.write_effective(&g.out)?;
    println!(
        "wrote {} volunteers to {}",
        recordings.len(),
        g.out.display()
    );
    Ok(())
}

pub fn preprocess(g: &Global, input: &Path) -> Result<()> {
    let units = discover(input, "recording.csv")?;
    let results = units
        .par_iter()
        .map(|u| -> Result<(usize, Vec<String>)> {
            let ts = read_recording(&u.dir.join("recording.csv"), &u.dir.join("markers.csv"))?;
            let out = pipeline::preprocess(&ts, &g.cfg.preprocess)?;
            let dir = u.out_dir(&g.out);
            create_dir(&dir)?;
            write_features(&out.features, &dir.join("features.csv"))?;
            let mut warnings = out.warnings.join("\n");
            if !warnings.is_empty() {
                warnings.push('\n');
            }
            write(&dir.join("warnings.txt"), warnings)?;
            Ok((out.features.len(), out.warnings))
        })
        .collect::<Vec<_>>();
    for (u, r) in units.iter().zip(results) {
        let (rows, warnings) = r?;
        for w in &warnings {
            log::warn!("{}: {w}", u.label());
        }
        println!(
            "{}: {rows} feature rows, {} markers skipped",
            u.label(),
            warnings.len()
        );
    }
    g.cfg.write_effective(&g.out)
}
