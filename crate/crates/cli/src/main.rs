//! `loomtex` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 validation failure,
//! 3 endpoint failure.

mod config;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use loomtex::baking::{bake_maps, check_resolution, write_manifest, write_maps, BakeError, BakeOptions};
use loomtex::designer::{
    default_params, design, params_for, DesignError, DesignOptions, DesignRequest, EndpointConfig,
};
use loomtex::draft::{
    generate_pattern, parse_draft, serialize_draft, validate_draft, DraftError, Family, PatternSpec, WeavingDraft,
};
use loomtex::params::FabricParams;
use loomtex::render::{load_albedo, render_plane, AlbedoImage, RenderError, RenderOptions, ShadingParams};
use loomtex::scene::FabricScene;

use config::{ConfigFile, DraftSource, ParamsSource, DEFAULT_RES, DEFAULT_SEED};

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(1, message)
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        Self::new(1, format!("{}: {e}", path.display()))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<BakeError> for Failure {
    fn from(e: BakeError) -> Self {
        match e {
            BakeError::InvalidScene(_) => Failure::invalid(e.to_string()),
            BakeError::Format(_) => Failure::invalid(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<RenderError> for Failure {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::InvalidShading(_) | RenderError::InvalidAlbedo(_) => Failure::invalid(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "loomtex", version, about = "Procedural woven-fabric microstructure tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, parse, validate and display weaving drafts
    #[command(subcommand)]
    Draft(DraftCmd),
    /// Bake normal, orientation, height and coverage maps
    Bake(BakeArgs),
    /// Render a shaded preview of the fabric plane
    Render(RenderArgs),
    /// Design a draft and parameters from a text prompt
    Design(DesignArgs),
}

#[derive(Subcommand)]
enum DraftCmd {
    /// Generate a draft for a weave family
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        /// Write the draft file here instead of printing rows
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a draft file and print it in canonical form
    Parse { file: PathBuf },
    /// Check a draft file against the weaving rules
    Validate { file: PathBuf },
    /// Print a draft as block art
    Show { file: PathBuf },
}

#[derive(Args, Clone, Default)]
struct FamilyArgs {
    /// plain, twill, satin, basket or herringbone
    #[arg(long)]
    family: Option<String>,
    /// Twill and herringbone: warp-over count
    #[arg(long)]
    m: Option<usize>,
    /// Twill and herringbone: warp-under count
    #[arg(long)]
    n: Option<usize>,
    /// Satin: shafts per repeat
    #[arg(long)]
    size: Option<usize>,
    /// Satin: step between successive interlacings
    #[arg(long)]
    counter: Option<usize>,
    /// Basket: block size
    #[arg(long)]
    block: Option<usize>,
    /// Herringbone: band width
    #[arg(long)]
    width: Option<usize>,
    /// Repeat rows (a multiple of the natural size)
    #[arg(long)]
    rows: Option<usize>,
    /// Repeat columns (a multiple of the natural size)
    #[arg(long)]
    cols: Option<usize>,
}

impl FamilyArgs {
    fn is_parameterised(&self) -> bool {
        [self.m, self.n, self.size, self.counter, self.block, self.width, self.rows, self.cols]
            .iter()
            .any(Option::is_some)
    }

    fn spec(&self, name: &str) -> Result<PatternSpec, Failure> {
        let base = Family::by_name(name).ok_or_else(|| Failure::usage(format!("unknown family {name:?}")))?;
        let family = match base {
            Family::Plain => Family::Plain,
            Family::Twill { over, under } => Family::Twill { over: self.m.unwrap_or(over), under: self.n.unwrap_or(under) },
            Family::Satin { size, counter } => {
                Family::Satin { size: self.size.unwrap_or(size), counter: self.counter.unwrap_or(counter) }
            }
            Family::Basket { block } => Family::Basket { block: self.block.unwrap_or(block) },
            Family::Herringbone { over, under, width } => Family::Herringbone {
                over: self.m.unwrap_or(over),
                under: self.n.unwrap_or(under),
                width: self.width.unwrap_or(width),
            },
        };
        Ok(PatternSpec { family, rows: self.rows, cols: self.cols })
    }
}

#[derive(Args, Clone, Default)]
struct SceneArgs {
    /// Draft file
    #[arg(long, conflicts_with = "family")]
    draft: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Parameter document (JSON)
    #[arg(long)]
    params: Option<PathBuf>,
    /// JSON config file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sliding strength override
    #[arg(long)]
    k_sliding: Option<f64>,
    /// Enable the flyaway fiber layer
    #[arg(long)]
    flyaway: bool,
    /// Draft repeats per map edge
    #[arg(long)]
    repeat: Option<u32>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BakeArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Map edge length in pixels (power of two)
    #[arg(long)]
    res: Option<u32>,
    /// Average four samples per pixel
    #[arg(long)]
    supersample: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// scene.json written by `bake`
    #[arg(long, conflicts_with_all = ["draft", "family", "params"])]
    scene_file: Option<PathBuf>,
    #[command(flatten)]
    scene: SceneArgs,
    /// Albedo PNG
    #[arg(long, conflicts_with = "albedo_solid")]
    albedo: Option<PathBuf>,
    /// Solid albedo as sRGB hex, e.g. 808080
    #[arg(long)]
    albedo_solid: Option<String>,
    /// Light azimuth and elevation in degrees, e.g. 30,50
    #[arg(long, value_parser = parse_light, allow_hyphen_values = true)]
    light: Option<[f64; 2]>,
    #[arg(long)]
    exposure: Option<f64>,
    #[arg(long)]
    res: Option<u32>,
    /// Output PNG
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    prompt: String,
    /// Chat-completions URL
    #[arg(long, conflicts_with = "offline")]
    endpoint: Option<String>,
    #[arg(long, default_value = "weaving-designer")]
    model: String,
    /// Environment variable holding the API key
    #[arg(long, default_value = loomtex::designer::DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    /// Repair retries per stage
    #[arg(long, default_value_t = 3)]
    retries: usize,
    /// Use the keyword fallback only
    #[arg(long)]
    offline: bool,
    /// Fail instead of falling back when the endpoint cannot produce a valid design
    #[arg(long)]
    no_fallback: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn parse_light(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, e] => Ok([
            a.trim().parse().map_err(|_| format!("bad azimuth {a:?}"))?,
            e.trim().parse().map_err(|_| format!("bad elevation {e:?}"))?,
        ]),
        _ => Err("expected AZIMUTH,ELEVATION".into()),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|e| Failure::io(path, e))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn load_draft(path: &Path) -> Result<WeavingDraft, Failure> {
    let text = read_text(path)?;
    parse_draft(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn load_params(path: &Path) -> Result<FabricParams, Failure> {
    let text = read_text(path)?;
    FabricParams::from_json(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn draft_error(e: DraftError) -> Failure {
    match e {
        DraftError::InvalidSpec(_) => Failure::usage(e.to_string()),
        _ => Failure::invalid(e.to_string()),
    }
}

fn block_art(d: &WeavingDraft) -> String {
    let mut s = String::new();
    for row in d.to_rows() {
        s.extend(row.iter().map(|&c| if c == 1 { '█' } else { '·' }));
        s.push('\n');
    }
    s
}

fn cmd_draft(cmd: DraftCmd) -> CmdResult {
    match cmd {
        DraftCmd::Gen { family, out } => {
            let name = family.family.clone().unwrap_or_else(|| "plain".into());
            let d = generate_pattern(&family.spec(&name)?).map_err(draft_error)?;
            match out {
                Some(p) => write_text(&p, &serialize_draft(&d)),
                None => {
                    for row in d.to_rows() {
                        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
                        println!("{}", cells.join(" "));
                    }
                    Ok(())
                }
            }
        }
        DraftCmd::Parse { file } => {
            let d = load_draft(&file)?;
            print!("{}", serialize_draft(&d));
            Ok(())
        }
        DraftCmd::Validate { file } => {
            let d = load_draft(&file)?;
            let report = validate_draft(&d);
            if report.is_valid() {
                println!("valid {}x{} draft", d.rows(), d.cols());
                Ok(())
            } else {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                Err(Failure::invalid(format!("{}: {} violation(s)", file.display(), report.violations.len())))
            }
        }
        DraftCmd::Show { file } => {
            print!("{}", block_art(&load_draft(&file)?));
            Ok(())
        }
    }
}

/// Everything needed to rebuild a scene, with all sources resolved.
#[derive(Serialize, Deserialize)]
struct SceneFile {
    draft: WeavingDraft,
    params: FabricParams,
    seed: u64,
}

struct Resolved {
    draft: WeavingDraft,
    params: FabricParams,
    seed: u64,
    threads: usize,
    file: ConfigFile,
}

fn resolve_scene(args: &SceneArgs, file: &ConfigFile) -> Result<Resolved, Failure> {
    let flag_family = args.family.family.clone();
    let family_name = flag_family.clone().or_else(|| file.family.clone());
    let draft_flag = args.draft.clone().map(DraftSource::File);
    let draft_source = if flag_family.is_some() || args.family.is_parameterised() {
        None
    } else {
        draft_flag.or_else(|| file.draft.clone())
    };
    let name = family_name.clone().unwrap_or_else(|| "plain".into());
    let draft = match draft_source {
        Some(DraftSource::File(p)) => load_draft(&p)?,
        Some(DraftSource::Inline(d)) => d,
        None => generate_pattern(&args.family.spec(&name)?).map_err(draft_error)?,
    };
    let params_source = args.params.clone().map(ParamsSource::File).or_else(|| file.params.clone());
    let mut params = match params_source {
        Some(ParamsSource::File(p)) => load_params(&p)?,
        Some(ParamsSource::Inline(p)) => *p,
        None => match &family_name {
            Some(n) => default_params(n).map_err(|e| Failure::usage(e.to_string()))?,
            None => params_for(&Family::Plain),
        },
    };
    if let Some(k) = args.k_sliding.or(file.k_sliding) {
        params.sliding.k_sliding = k;
    }
    if args.flyaway || file.flyaway == Some(true) {
        params.flyaway.enabled = true;
    }
    if let Some(r) = args.repeat.or(file.repeat) {
        params.repeat = r;
    }
    if let Err(e) = params.validate() {
        return Err(Failure::invalid(e.to_string()));
    }
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let threads = args.threads.or(file.threads).unwrap_or(0);
    let effective = ConfigFile {
        draft: Some(DraftSource::Inline(draft.clone())),
        params: Some(ParamsSource::Inline(Box::new(params.clone()))),
        seed: Some(seed),
        threads: Some(threads),
        ..ConfigFile::default()
    };
    Ok(Resolved { draft, params, seed, threads, file: effective })
}

fn build_scene(r: &Resolved) -> Result<FabricScene, Failure> {
    FabricScene::new(r.draft.clone(), r.params.clone(), r.seed).map_err(|e| Failure::invalid(e.to_string()))
}

const SCENE_FILE: &str = "scene.json";

fn cmd_bake(args: BakeArgs) -> CmdResult {
    let file = ConfigFile::load(args.scene.config.as_deref())?;
    let mut r = resolve_scene(&args.scene, &file)?;
    let res = args.res.or(file.res).unwrap_or(DEFAULT_RES);
    let supersample = args.supersample || file.supersample == Some(true);
    let scene = build_scene(&r)?;
    check_resolution(&scene, res).map_err(|e| Failure::usage(e.to_string()))?;
    let maps = bake_maps(&scene, res, &BakeOptions { supersample, threads: r.threads })?;
    create_dir(&args.out)?;
    let mut manifest = write_maps(&maps, &args.out)?;
    let doc = SceneFile { draft: r.draft.clone(), params: r.params.clone(), seed: r.seed };
    write_text(&args.out.join(SCENE_FILE), &json(&doc))?;
    r.file.command = Some("bake".into());
    r.file.res = Some(res);
    r.file.supersample = Some(supersample);
    let config = serde_json::to_value(&r.file).expect("config serializes");
    let mut names: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    names.push(SCENE_FILE.into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    manifest = write_manifest(&args.out, &refs, Some(config))?;
    println!(
        "baked {res}x{res} maps for scene {} into {} ({} files)",
        scene.hash(),
        args.out.display(),
        manifest.files.len()
    );
    Ok(())
}

fn cmd_render(args: RenderArgs) -> CmdResult {
    let file = ConfigFile::load(args.scene.config.as_deref())?;
    let mut r = match &args.scene_file {
        Some(p) => {
            let doc: SceneFile = serde_json::from_str(&read_text(p)?)
                .map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?;
            let mut args = args.scene.clone();
            args.draft = None;
            let inline = ConfigFile {
                draft: Some(DraftSource::Inline(doc.draft)),
                params: Some(ParamsSource::Inline(Box::new(doc.params))),
                seed: Some(args.seed.unwrap_or(doc.seed)),
                ..file.clone()
            };
            resolve_scene(&args, &inline)?
        }
        None => resolve_scene(&args.scene, &file)?,
    };
    let res = args.res.or(file.res).unwrap_or(DEFAULT_RES);
    let scene = build_scene(&r)?;

    let albedo_path = args.albedo.clone().or_else(|| file.albedo.clone());
    let solid = args.albedo_solid.clone().or_else(|| file.albedo_solid.clone());
    let albedo = match (&albedo_path, &solid) {
        (Some(p), _) if args.albedo_solid.is_none() => load_albedo(p)?,
        (_, Some(hex)) => AlbedoImage::from_hex(hex)?,
        _ => AlbedoImage::from_hex("808080")?,
    };
    let light = args.light.or(file.light).unwrap_or([
        loomtex::render::DEFAULT_LIGHT_AZIMUTH_DEG,
        loomtex::render::DEFAULT_LIGHT_ELEVATION_DEG,
    ]);
    let mut sp = ShadingParams::from_params(scene.params()).with_light(light[0], light[1]);
    sp.exposure = args.exposure.or(file.exposure).unwrap_or(1.0);
    let img = render_plane(&scene, &albedo, &sp, res, &RenderOptions { threads: r.threads })?;

    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    img.write_png(&args.out)?;
    let name = args.out.file_name().and_then(|n| n.to_str()).ok_or_else(|| Failure::usage("bad output path"))?;
    r.file.command = Some("render".into());
    r.file.res = Some(res);
    r.file.light = Some(light);
    r.file.exposure = Some(sp.exposure);
    match &albedo_path {
        Some(p) if args.albedo_solid.is_none() => r.file.albedo = Some(p.clone()),
        _ => r.file.albedo_solid = Some(solid.unwrap_or_else(|| "808080".into())),
    }
    let config = serde_json::to_value(&r.file).expect("config serializes");
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("render");
    let manifest_name = format!("{stem}.manifest.json");
    let m = write_manifest(&dir, &[name], Some(config))?;
    // write_manifest uses the default name; move it next to the image under its own name
    let default = dir.join(loomtex::baking::MANIFEST_FILE);
    fs::rename(&default, dir.join(&manifest_name)).map_err(|e| Failure::io(&default, e))?;
    println!("rendered {res}x{res} preview to {} ({})", args.out.display(), &m.files[0].sha256[..16]);
    Ok(())
}

fn cmd_design(args: DesignArgs) -> CmdResult {
    let endpoint = if args.offline {
        None
    } else {
        args.endpoint.as_ref().map(|url| EndpointConfig {
            api_key_env: args.api_key_env.clone(),
            timeout_secs: args.timeout,
            ..EndpointConfig::new(url.clone(), args.model.clone())
        })
    };
    let req = DesignRequest::FreeText { prompt: args.prompt.clone(), endpoint };
    let opts = DesignOptions { max_retries: args.retries, fallback: !args.no_fallback };
    let result = design(&req, &opts).map_err(|e| match e {
        DesignError::Endpoint(_) => Failure::new(3, e.to_string()),
        DesignError::Rejected(_) => Failure::invalid(e.to_string()),
        _ => Failure::usage(e.to_string()),
    })?;
    create_dir(&args.out)?;
    write_text(&args.out.join("draft.txt"), &serialize_draft(&result.draft))?;
    write_text(&args.out.join("params.json"), &(result.params.to_json() + "\n"))?;
    let provenance = serde_json::json!({
        "prompt": args.prompt,
        "provenance": result.provenance,
        "repair_log": result.repair_log,
    });
    write_text(&args.out.join("provenance.json"), &json(&provenance))?;
    let config = serde_json::json!({
        "command": "design",
        "prompt": args.prompt,
        "endpoint": if args.offline { None } else { args.endpoint.clone() },
        "model": args.model,
        "retries": args.retries,
        "fallback": !args.no_fallback,
    });
    write_manifest(&args.out, &["draft.txt", "params.json", "provenance.json"], Some(config))?;
    let source = serde_json::to_value(&result.provenance).expect("provenance serializes");
    println!(
        "designed {}x{} draft ({}) into {}",
        result.draft.rows(),
        result.draft.cols(),
        source["source"].as_str().unwrap_or("unknown"),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Draft(c) => cmd_draft(c),
        Command::Bake(a) => cmd_bake(a),
        Command::Render(a) => cmd_render(a),
        Command::Design(a) => cmd_design(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
