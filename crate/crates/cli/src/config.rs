//! Flag and config-file merging into a resolved [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use oum_core::QueueDiscipline;

/// Flags shared by every subcommand. Flags a command does not use are ignored.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// Structured grid on the unit square.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"], conflicts_with_all = ["mesh", "image"])]
    pub grid: Option<Vec<usize>>,
    /// Triangulation in JSON (`{"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}`).
    #[arg(long, value_name = "FILE", conflicts_with = "image")]
    pub mesh: Option<PathBuf>,
    /// Grayscale PGM; one vertex per pixel.
    #[arg(long, visible_alias = "in", value_name = "FILE")]
    pub image: Option<PathBuf>,
    /// constant_isotropic | elliptic_anisotropic | position_varying | image_derived
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Preset parameter, repeatable.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Constant terminal cost.
    #[arg(long, value_name = "V", allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// exact | slf-lll
    #[arg(long, value_name = "NAME")]
    pub discipline: Option<String>,
    /// Multiplier on the near-front radius.
    #[arg(long, value_name = "R")]
    pub radius_scale: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Grid sizes for the convergence study.
    #[arg(long, value_delimiter = ',', value_name = "N1,N2,...")]
    pub sizes: Option<Vec<usize>>,
    /// Trajectory start point.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
    pub from: Option<Vec<f64>>,
    /// Trajectory step length (default h/2).
    #[arg(long, value_name = "S")]
    pub step: Option<f64>,
    /// Graph-oracle radius in units of h.
    #[arg(long, value_name = "K")]
    pub oracle_k: Option<f64>,
    /// CSV raster of speeds for the position_varying preset.
    #[arg(long, value_name = "FILE")]
    pub speed_grid: Option<PathBuf>,
    /// Map bright pixels to slow speeds.
    #[arg(long)]
    pub invert: bool,
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    grid: Option<[usize; 2]>,
    mesh: Option<PathBuf>,
    image: Option<PathBuf>,
    preset: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    q: Option<f64>,
    discipline: Option<String>,
    radius_scale: Option<f64>,
    out: Option<PathBuf>,
    sizes: Option<Vec<usize>>,
    from: Option<[f64; 2]>,
    step: Option<f64>,
    oracle_k: Option<f64>,
    speed_grid: Option<PathBuf>,
    invert: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    Grid { nx: usize, ny: usize },
    File(PathBuf),
    Image(PathBuf),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub source: Option<MeshSource>,
    pub preset: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub q: f64,
    #[serde(serialize_with = "ser_discipline")]
    pub discipline: QueueDiscipline,
    pub radius_scale: f64,
    #[serde(skip)]
    pub out: PathBuf,
    pub sizes: Vec<usize>,
    pub from: Option<[f64; 2]>,
    pub step: Option<f64>,
    pub oracle_k: f64,
    pub speed_grid: Option<PathBuf>,
    pub invert: bool,
}

fn ser_discipline<S: serde::Serializer>(d: &QueueDiscipline, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(d.as_str())
}

fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("--param expects K=V, got `{s}`"))?;
    let v: f64 = v.trim().parse().with_context(|| format!("parameter `{k}` is not a number: `{v}`"))?;
    if !v.is_finite() {
        bail!("parameter `{k}` must be finite");
    }
    Ok((k.trim().to_string(), v))
}

fn load_config_file(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: ConfigFile =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    // Relative paths in a config file are relative to the file itself.
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.mesh, &mut cfg.image, &mut cfg.out, &mut cfg.speed_grid].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn resolve(command: &str, args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => load_config_file(p)?,
            None => ConfigFile::default(),
        };

        let flag_source = match (&args.grid, &args.mesh, &args.image) {
            (Some(g), None, None) => Some(MeshSource::Grid { nx: g[0], ny: g[1] }),
            (None, Some(m), None) => Some(MeshSource::File(m.clone())),
            (None, None, Some(i)) => Some(MeshSource::Image(i.clone())),
            (None, None, None) => None,
            _ => bail!("give exactly one of --grid, --mesh, --image"),
        };
        let file_source = match (file.grid, file.mesh, file.image) {
            (Some([nx, ny]), None, None) => Some(MeshSource::Grid { nx, ny }),
            (None, Some(m), None) => Some(MeshSource::File(m)),
            (None, None, Some(i)) => Some(MeshSource::Image(i)),
            (None, None, None) => None,
            _ => bail!("config file gives more than one of grid, mesh, image"),
        };
        let source = flag_source.or(file_source);

        let mut params = file.params;
        for p in &args.params {
            let (k, v) = parse_param(p)?;
            params.insert(k, v);
        }

        let discipline = match args.discipline.as_deref().or(file.discipline.as_deref()) {
            Some(d) => d.parse::<QueueDiscipline>().map_err(|e| anyhow!("{e}"))?,
            None => QueueDiscipline::default(),
        };

        let from = match &args.from {
            Some(v) => Some([v[0], v[1]]),
            None => file.from,
        };

        let cfg = RunConfig {
            command: command.to_string(),
            source,
            preset: args.preset.clone().or(file.preset),
            params,
            q: args.q.or(file.q).unwrap_or(0.0),
            discipline,
            radius_scale: args.radius_scale.or(file.radius_scale).unwrap_or(1.0),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            sizes: args.sizes.clone().or(file.sizes).unwrap_or_default(),
            from,
            step: args.step.or(file.step),
            oracle_k: args.oracle_k.or(file.oracle_k).unwrap_or(3.0),
            speed_grid: args.speed_grid.clone().or(file.speed_grid),
            invert: args.invert || file.invert.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(MeshSource::Grid { nx, ny }) = self.source {
            if nx < 2 || ny < 2 {
                bail!("--grid needs at least 2 x 2 vertices");
            }
        }
        if !(self.q.is_finite() && self.q >= 0.0) {
            bail!("--q must be finite and non-negative");
        }
        if !(self.radius_scale.is_finite() && self.radius_scale > 0.0) {
            bail!("--radius-scale must be positive");
        }
        if !(self.oracle_k.is_finite() && self.oracle_k >= 1.0) {
            bail!("--oracle-k must be at least 1");
        }
        if let Some(s) = self.step {
            if !(s.is_finite() && s > 0.0) {
                bail!("--step must be positive");
            }
        }
        if let Some([x, y]) = self.from {
            if !(x.is_finite() && y.is_finite()) {
                bail!("--from must be finite");
            }
        }
        Ok(())
    }

    /// SHA-256 over the resolved configuration and the bytes of every input file.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self)?);
        let inputs = [
            match &self.source {
                Some(MeshSource::File(p)) | Some(MeshSource::Image(p)) => Some(p),
                _ => None,
            },
            self.speed_grid.as_ref(),
        ];
        for p in inputs.into_iter().flatten() {
            h.update(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
        }
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_parsing() {
        assert_eq!(parse_param("A=2.5").unwrap(), ("A".to_string(), 2.5));
        assert!(parse_param("A").is_err());
        assert!(parse_param("A=x").is_err());
        assert!(parse_param("A=inf").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"grid": [9, 9], "q": 2, "params": {"A": 3, "B": 1}, "discipline": "slf-lll", "out": "o"}"#,
        )
        .unwrap();
        let args = RunArgs { config: Some(path), q: Some(1.0), params: vec!["A=4".into()], ..Default::default() };
        let cfg = RunConfig::resolve("solve", &args).unwrap();
        assert_eq!(cfg.source, Some(MeshSource::Grid { nx: 9, ny: 9 }));
        assert_eq!(cfg.q, 1.0);
        assert_eq!(cfg.params["A"], 4.0);
        assert_eq!(cfg.params["B"], 1.0);
        assert_eq!(cfg.discipline, QueueDiscipline::SlfLll);
        assert_eq!(cfg.out, dir.path().join("o"));
    }

    #[test]
    fn flag_source_replaces_config_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"mesh": "m.json"}"#).unwrap();
        let args = RunArgs { config: Some(path), grid: Some(vec![5, 6]), ..Default::default() };
        let cfg = RunConfig::resolve("solve", &args).unwrap();
        assert_eq!(cfg.source, Some(MeshSource::Grid { nx: 5, ny: 6 }));
    }

    #[test]
    fn rejects_bad_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"grid": [9, 9], "mesh": "x.json"}"#).unwrap();
        assert!(RunConfig::resolve("solve", &RunArgs { config: Some(path.clone()), ..Default::default() }).is_err());
        std::fs::write(&path, r#"{"gird": [9, 9]}"#).unwrap();
        assert!(RunConfig::resolve("solve", &RunArgs { config: Some(path), ..Default::default() }).is_err());
        let bad_q = RunArgs { q: Some(-1.0), ..Default::default() };
        assert!(RunConfig::resolve("solve", &bad_q).is_err());
    }

    #[test]
    fn hash_is_stable_and_ignores_out() {
        let a = RunArgs { grid: Some(vec![9, 9]), out: Some("a".into()), ..Default::default() };
        let b = RunArgs { grid: Some(vec![9, 9]), out: Some("b".into()), ..Default::default() };
        let c = RunArgs { grid: Some(vec![9, 9]), q: Some(1.0), ..Default::default() };
        let h = |args: &RunArgs| RunConfig::resolve("solve", args).unwrap().hash().unwrap();
        assert_eq!(h(&a), h(&b));
        assert_ne!(h(&a), h(&c));
        assert_eq!(h(&a).len(), 64);
    }
}
