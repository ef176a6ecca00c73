use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use toonforge::edit::{apply_edits, EditOp};
use toonforge::pipeline::{generate, Resources};
use toonforge::server::router;
use toonforge::service::Service;
use toonforge::store::{DirStore, STORE_ENV};
use toonforge::vectors::golden_vectors;
use toonforge_core::canonical;
use toonforge_core::modelio::{load_clip, load_model, save_model};
use toonforge_core::raster::{render_clip_with, RenderOptions};
use toonforge_core::rig::{timeline_to_clip, VisemeTimeline};
use toonforge_core::textparse::{evaluate_parser, generate_corpus};

#[derive(Parser)]
#[command(name = "toonforge", version, about = "Text to rigged 2D character, with lip-sync rendering")]
struct Cli {
    #[command(flatten)]
    data: DataArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct DataArgs {
    /// Component catalog directory.
    #[arg(long, global = true, env = "TOONFORGE_CATALOG")]
    catalog: Option<PathBuf>,
    /// Lexicon file.
    #[arg(long, global = true, env = "TOONFORGE_LEXICON")]
    lexicon: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Resources> {
        let data = toonforge_core::default_data_dir();
        let catalog = self.catalog.clone().unwrap_or_else(|| data.join("catalog"));
        let lexicon = self.lexicon.clone().unwrap_or_else(|| data.join("lexicon.txt"));
        Ok(Resources::load(&catalog, &lexicon)?)
    }
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').unwrap_or((s, s));
    let p = |v: &str| v.parse::<u32>().map_err(|_| format!("bad size {s:?}, expected WxH"));
    Ok((p(w)?, p(h)?))
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a character bundle from a description.
    Generate {
        text: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a clip (or a viseme timeline) of a saved character to PNG frames.
    Render {
        model: PathBuf,
        #[arg(long, conflicts_with = "visemes", required_unless_present = "visemes")]
        clip: Option<PathBuf>,
        #[arg(long)]
        visemes: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        #[arg(long)]
        out: PathBuf,
        /// Output size, WxH or N; defaults to the canvas size.
        #[arg(long, value_parser = parse_size)]
        size: Option<(u32, u32)>,
    },
    /// Apply edits to a saved character and write a new bundle.
    ///
    /// Ops run in order: `swap:SLOT=VARIANT`, `recolor:SLOT=#rrggbb`,
    /// `mask:MASK.png=#rrggbb`.
    Edit {
        model: PathBuf,
        #[arg(required = true)]
        ops: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a corpus and report parser accuracy.
    EvalParser {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Canonical phrasing only, no synonyms or distractors.
        #[arg(long)]
        clean: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = STORE_ENV)]
        store: Option<PathBuf>,
    },
    /// Export golden posing vectors for a saved character.
    Vectors {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_op(s: &str) -> Result<EditOp> {
    let (kind, rest) = s.split_once(':').with_context(|| format!("op {s:?}: expected KIND:ARG=VALUE"))?;
    let (arg, value) = rest.split_once('=').with_context(|| format!("op {s:?}: expected KIND:ARG=VALUE"))?;
    Ok(match kind {
        "swap" => EditOp::Swap { slot: arg.into(), variant: value.into() },
        "recolor" => EditOp::Recolor { slot: arg.into(), rgb: value.parse()? },
        "mask" => {
            use base64::Engine;
            let png = std::fs::read(arg).with_context(|| format!("reading mask {arg}"))?;
            EditOp::MaskRecolor { mask: base64::engine::general_purpose::STANDARD.encode(png), rgb: value.parse()? }
        }
        _ => bail!("unknown op kind {kind:?}"),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Generate { text, out, seed } => {
            let res = cli.data.load()?;
            let generated = generate(&res, &text, seed)?;
            let start = Instant::now();
            save_model(&generated.model, &out).context("save stage")?;
            let mut timings = generated.timings.0;
            timings.push((toonforge::pipeline::Stage::Save, start.elapsed()));
            for (stage, d) in &timings {
                eprintln!("{stage:>9} {:>9.1} ms", d.as_secs_f64() * 1e3);
            }
            let total: f64 = timings.iter().map(|(_, d)| d.as_secs_f64()).sum();
            eprintln!("{:>9} {:>9.1} ms", "total", total * 1e3);
            if !generated.parsed.unmatched_tokens.is_empty() {
                eprintln!("unmatched: {}", generated.parsed.unmatched_tokens.join(" "));
            }
            println!("{}", out.display());
        }
        Cmd::Render { model, clip, visemes, fps, out, size } => {
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let clip = match (clip, visemes) {
                (Some(p), _) => load_clip(&p, Some(&m.parameters)).with_context(|| format!("loading {}", p.display()))?,
                (None, Some(p)) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    timeline_to_clip(&VisemeTimeline::parse(&text)?)
                }
                (None, None) => bail!("need --clip or --visemes"),
            };
            let opts = RenderOptions { viewport: size, ..Default::default() };
            let start = Instant::now();
            let n = render_clip_with(&m, &clip, fps, &out, &opts)?;
            eprintln!("rendered {n} frames in {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
            println!("{n}");
        }
        Cmd::Edit { model, ops, out } => {
            let res = cli.data.load()?;
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let ops = ops.iter().map(|s| parse_op(s)).collect::<Result<Vec<_>>>()?;
            let edited = apply_edits(&res, &m, &ops)?;
            save_model(&edited, &out)?;
            println!("{}", out.display());
        }
        Cmd::EvalParser { n, seed, clean } => {
            let res = cli.data.load()?;
            let start = Instant::now();
            let corpus = generate_corpus(&res.catalog, &res.lexicon, n, seed, !clean)?;
            let report = evaluate_parser(&corpus, &res.lexicon, &res.catalog)?;
            print!("{}", canonical::to_string(&report)?);
            eprintln!("{n} pairs in {:.2} s", start.elapsed().as_secs_f64());
        }
        Cmd::Serve { port, store } => {
            let res = Arc::new(cli.data.load()?);
            let store = DirStore::open(store.unwrap_or_else(DirStore::default_root))?;
            eprintln!("store at {}", store.root().display());
            let app = router(Service::new(res, Arc::new(store)));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, app).await?;
                anyhow::Ok(())
            })?;
        }
        Cmd::Vectors { model, out } => {
            let m = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            let v = golden_vectors(&m)?;
            std::fs::write(&out, canonical::to_string(&v)?).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", out.display());
        }
    }
    Ok(())
}
