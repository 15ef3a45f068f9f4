//! Line-oriented `key = value` run configuration.

use elastic_np::geometry::{GeometryError, Harmonic, Surface, SurfaceKind};
use elastic_np::nystrom::QuadratureOptions;
use elastic_np::LameParameters;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { key: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "config key '{k}': {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Every accepted key with its default.
const DEFAULTS: &[(&str, &str)] = &[
    ("surface", "sphere"),
    ("ellipsoid_a", "1"),
    ("ellipsoid_b", "1"),
    ("ellipsoid_c", "2"),
    ("star_epsilon", "0.1"),
    ("star_degree", "3"),
    ("star_order", "2"),
    ("lambda", "1"),
    ("mu", "1"),
    ("resolutions", "16,24,32"),
    ("radial_nodes", "24"),
    ("angular_nodes", "80"),
    ("patch_factor", "8"),
    ("regularized", "false"),
    ("seed", "20240611"),
    ("out", "enp-out"),
    ("probe", "true"),
    ("probe_index", "20"),
    ("lanczos_steps", "90"),
    ("probe_fraction", "0.1"),
    ("cross_check", "false"),
    ("delta", "auto"),
    ("max_unknowns", "6000"),
    ("export_matrices", "false"),
    ("kernel_pairs", "10000"),
    ("singularity_samples", "400"),
    ("riesz_grid", "256"),
    ("composition_grids", "64,128,256"),
    ("symbol_pairs", "100"),
    ("identity_samples", "10000"),
    ("direct_grids", "128,256"),
    ("trace_grid", "128"),
    ("trace_vectors", "16"),
];

/// Raw key/value pairs in a fixed key order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        if !self.values.contains_key(key) {
            return Err(ConfigError::at(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse_into(&mut self, text: &str) -> Result<(), ConfigError> {
        for (number, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::general(format!("line {}: expected 'key = value', got '{line}'", number + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn get(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key).parse().map_err(|e: T::Err| ConfigError::at(key, format!("cannot parse '{}': {e}", self.get(key))))
    }

    fn list(&self, key: &str) -> Result<Vec<usize>, ConfigError> {
        self.get(key)
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| ConfigError::at(key, format!("'{s}' is not a non-negative integer"))))
            .collect()
    }

    fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key) {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            other => Err(ConfigError::at(key, format!("expected a boolean, got '{other}'"))),
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub surface: Surface,
    pub params: LameParameters,
    pub resolutions: Vec<usize>,
    pub quadrature: QuadratureOptions,
    pub seed: u64,
    pub out: PathBuf,
    pub probe: bool,
    pub probe_index: usize,
    pub lanczos_steps: usize,
    pub probe_fraction: f64,
    pub cross_check: bool,
    pub delta: Option<f64>,
    pub max_unknowns: usize,
    pub export_matrices: bool,
    pub kernel_pairs: usize,
    pub singularity_samples: usize,
    pub riesz_grid: usize,
    pub composition_grids: Vec<usize>,
    pub symbol_pairs: usize,
    pub identity_samples: usize,
    pub direct_grids: Vec<usize>,
    pub trace_grid: usize,
    pub trace_vectors: usize,
}

fn geometry(key: &str) -> impl Fn(GeometryError) -> ConfigError + '_ {
    move |e| ConfigError::at(key, e.to_string())
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let surface = match raw.get("surface") {
            "sphere" => Surface::unit_sphere(),
            "ellipsoid" => Surface::new(SurfaceKind::Ellipsoid {
                a: raw.parse("ellipsoid_a")?,
                b: raw.parse("ellipsoid_b")?,
                c: raw.parse("ellipsoid_c")?,
            })
            .map_err(geometry("ellipsoid_a"))?,
            "star" => {
                let harmonic = Harmonic::new(raw.parse("star_degree")?, raw.parse("star_order")?).map_err(geometry("star_degree"))?;
                Surface::new(SurfaceKind::StarPerturbed { epsilon: raw.parse("star_epsilon")?, harmonic }).map_err(geometry("star_epsilon"))?
            }
            other => return Err(ConfigError::at("surface", format!("unknown surface kind '{other}' (expected sphere, ellipsoid or star)"))),
        };
        let params = LameParameters::new(raw.parse("lambda")?, raw.parse("mu")?).map_err(|e| ConfigError::at("mu", e.to_string()))?;
        let resolutions = raw.list("resolutions")?;
        if resolutions.is_empty() {
            return Err(ConfigError::at("resolutions", "at least one resolution is required"));
        }
        if let Some(&n) = resolutions.iter().find(|&&n| n < elastic_np::nystrom::MIN_RESOLUTION) {
            return Err(ConfigError::at("resolutions", format!("resolution {n} is below the minimum {}", elastic_np::nystrom::MIN_RESOLUTION)));
        }
        let quadrature = QuadratureOptions {
            radial_nodes: raw.parse("radial_nodes")?,
            angular_nodes: raw.parse("angular_nodes")?,
            patch_factor: raw.parse("patch_factor")?,
            regularized: raw.flag("regularized")?,
        };
        if quadrature.radial_nodes == 0 {
            return Err(ConfigError::at("radial_nodes", "must be positive"));
        }
        if quadrature.angular_nodes < 2 || !quadrature.angular_nodes.is_multiple_of(2) {
            return Err(ConfigError::at("angular_nodes", "must be even and at least 2"));
        }
        if !(quadrature.patch_factor > 0.0) {
            return Err(ConfigError::at("patch_factor", "must be positive"));
        }
        let delta = match raw.get("delta") {
            "auto" => None,
            _ => {
                let d: f64 = raw.parse("delta")?;
                if !(d > 0.0) {
                    return Err(ConfigError::at("delta", "must be positive"));
                }
                Some(d)
            }
        };
        let probe_index: usize = raw.parse("probe_index")?;
        if probe_index == 0 {
            return Err(ConfigError::at("probe_index", "is 1-based and must be positive"));
        }
        let probe_fraction: f64 = raw.parse("probe_fraction")?;
        if !(probe_fraction > 0.0 && probe_fraction <= 1.0) {
            return Err(ConfigError::at("probe_fraction", "must lie in (0, 1]"));
        }
        let pow2 = |key: &str, n: usize| {
            if n < 8 || !n.is_power_of_two() {
                Err(ConfigError::at(key, format!("grid size {n} must be a power of two >= 8")))
            } else {
                Ok(n)
            }
        };
        let grids = |key: &str| -> Result<Vec<usize>, ConfigError> { raw.list(key)?.into_iter().map(|n| pow2(key, n)).collect() };
        let composition_grids = grids("composition_grids")?;
        if composition_grids.len() < 2 {
            return Err(ConfigError::at("composition_grids", "a fitted order needs at least two grids"));
        }
        Ok(Self {
            surface,
            params,
            resolutions,
            quadrature,
            seed: raw.parse("seed")?,
            out: PathBuf::from(raw.get("out")),
            probe: raw.flag("probe")?,
            probe_index,
            lanczos_steps: raw.parse("lanczos_steps")?,
            probe_fraction,
            cross_check: raw.flag("cross_check")?,
            delta,
            max_unknowns: raw.parse("max_unknowns")?,
            export_matrices: raw.flag("export_matrices")?,
            kernel_pairs: raw.parse("kernel_pairs")?,
            singularity_samples: raw.parse("singularity_samples")?,
            riesz_grid: pow2("riesz_grid", raw.parse("riesz_grid")?)?,
            composition_grids,
            symbol_pairs: raw.parse("symbol_pairs")?,
            identity_samples: raw.parse("identity_samples")?,
            direct_grids: grids("direct_grids")?,
            trace_grid: pow2("trace_grid", raw.parse("trace_grid")?)?,
            trace_vectors: raw.parse("trace_vectors")?,
            raw,
        })
    }

    /// The compactness probe needs three resolutions.
    pub fn require_probe_resolutions(&self) -> Result<(), ConfigError> {
        if self.probe && self.resolutions.len() < 3 {
            return Err(ConfigError::at(
                "resolutions",
                format!("the compactness probe needs at least 3 resolutions, got {}", self.resolutions.len()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<RunConfig, ConfigError> {
        let mut raw = RawConfig::default();
        raw.parse_into(text)?;
        RunConfig::from_raw(raw)
    }

    #[test]
    fn defaults_are_valid() {
        let c = build("").unwrap();
        assert_eq!(c.resolutions, vec![16, 24, 32]);
        assert!((c.params.k0() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.surface, Surface::unit_sphere());
    }

    #[test]
    fn comments_and_whitespace() {
        let c = build("# run\n surface = ellipsoid  # prolate\n\nresolutions=8, 12,16\nlambda = 2.5\n").unwrap();
        assert_eq!(c.resolutions, vec![8, 12, 16]);
        assert_eq!(c.params.lambda(), 2.5);
        assert!(matches!(c.surface.kind(), SurfaceKind::Ellipsoid { c, .. } if c == 2.0));
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(build("colour = red").unwrap_err().key.as_deref(), Some("colour"));
        assert_eq!(build("surface = torus").unwrap_err().key.as_deref(), Some("surface"));
        assert_eq!(build("mu = -1").unwrap_err().key.as_deref(), Some("mu"));
        assert_eq!(build("resolutions = 4").unwrap_err().key.as_deref(), Some("resolutions"));
        assert_eq!(build("angular_nodes = 7").unwrap_err().key.as_deref(), Some("angular_nodes"));
        assert_eq!(build("riesz_grid = 100").unwrap_err().key.as_deref(), Some("riesz_grid"));
        assert_eq!(build("probe = maybe").unwrap_err().key.as_deref(), Some("probe"));
        assert!(build("no equals sign").unwrap_err().key.is_none());
    }

    #[test]
    fn probe_needs_three_resolutions() {
        let c = build("resolutions = 16").unwrap();
        assert_eq!(c.require_probe_resolutions().unwrap_err().key.as_deref(), Some("resolutions"));
        let c = build("resolutions = 16\nprobe = false").unwrap();
        assert!(c.require_probe_resolutions().is_ok());
    }
}
