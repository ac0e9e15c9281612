//! Experiment configuration: per-command defaults, flat key=value config
//! files, flag overrides, and the derived-parameter rules. Every output
//! carries the FNV-1a fingerprint of the resolved config so artifacts can be
//! traced back to exact settings.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Build,
    Jackson,
    Bernstein,
    Bmo,
    FrameCheck,
    AtomsDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Jackson => "jackson",
            Command::Bernstein => "bernstein",
            Command::Bmo => "bmo",
            Command::FrameCheck => "frame-check",
            Command::AtomsDemo => "atoms-demo",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub d: u8,
    pub b: u32,
    pub betaw: f64,
    pub gamma: f64,
    pub j: u32,
    pub tau: f64,
    pub s: f64,
    pub q: f64,
    pub n_grid: Vec<usize>,
    pub trials: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Atoms per selected frame element in the demo pipeline (the budget
    /// multiplier; not fixed by theory, so it is a config input).
    pub atoms_per_element: u32,
    /// Scale applied to the driven input; 0 exercises the zero-input edge.
    pub amplitude: f64,
}

/// Unresolved overrides: `None` means "not given", so file and flag layers
/// can be merged before validation.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub d: Option<u8>,
    pub b: Option<u32>,
    pub betaw: Option<f64>,
    pub gamma: Option<f64>,
    pub j: Option<u32>,
    pub tau: Option<f64>,
    pub s: Option<f64>,
    pub q: Option<f64>,
    pub n_grid: Option<Vec<usize>>,
    pub trials: Option<u32>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub atoms_per_element: Option<u32>,
    pub amplitude: Option<f64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ConfigOverrides {
    /// Parses a flat key=value file: one pair per line, `#` starts a
    /// comment, keys match the flag names. Unknown keys are errors.
    pub fn from_file(text: &str) -> Result<Self, ConfigError> {
        let mut o = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected key=value, got {raw:?}", lineno + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                ConfigError(format!("line {}: {key} must be {what}, got {value:?}", lineno + 1))
            };
            match key {
                "d" => o.d = Some(value.parse().map_err(|_| bad("2 or 3"))?),
                "b" => o.b = Some(value.parse().map_err(|_| bad("an integer"))?),
                "betaw" => o.betaw = Some(value.parse().map_err(|_| bad("a number"))?),
                "gamma" => o.gamma = Some(value.parse().map_err(|_| bad("a number"))?),
                "J" | "j" => o.j = Some(value.parse().map_err(|_| bad("an integer"))?),
                "tau" => o.tau = Some(value.parse().map_err(|_| bad("a number"))?),
                "s" => o.s = Some(value.parse().map_err(|_| bad("a number"))?),
                "q" => o.q = Some(value.parse().map_err(|_| bad("a number"))?),
                "n_grid" => o.n_grid = Some(parse_n_grid(value).map_err(ConfigError)?),
                "trials" => o.trials = Some(value.parse().map_err(|_| bad("an integer"))?),
                "seed" => o.seed = Some(value.parse().map_err(|_| bad("an integer"))?),
                "output_dir" => o.output_dir = Some(PathBuf::from(value)),
                "atoms_per_element" => {
                    o.atoms_per_element = Some(value.parse().map_err(|_| bad("an integer"))?)
                }
                "amplitude" => o.amplitude = Some(value.parse().map_err(|_| bad("a number"))?),
                _ => return err(format!("line {}: unknown key {key:?}", lineno + 1)),
            }
        }
        Ok(o)
    }

    /// Later layers win field-by-field.
    pub fn layered_over(self, base: Self) -> Self {
        Self {
            d: self.d.or(base.d),
            b: self.b.or(base.b),
            betaw: self.betaw.or(base.betaw),
            gamma: self.gamma.or(base.gamma),
            j: self.j.or(base.j),
            tau: self.tau.or(base.tau),
            s: self.s.or(base.s),
            q: self.q.or(base.q),
            n_grid: self.n_grid.or(base.n_grid),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            output_dir: self.output_dir.or(base.output_dir),
            atoms_per_element: self.atoms_per_element.or(base.atoms_per_element),
            amplitude: self.amplitude.or(base.amplitude),
        }
    }
}

pub fn parse_n_grid(value: &str) -> Result<Vec<usize>, String> {
    let grid: Vec<usize> = value
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("n_grid entries must be integers, got {t:?}"))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err("n_grid must not be empty".into());
    }
    if grid.contains(&0) {
        return Err("n_grid entries must be >= 1".into());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err("n_grid must be strictly increasing".into());
    }
    Ok(grid)
}

impl ExperimentConfig {
    /// Commands that carry cubature rules need the fine mesh (gamma = 0.5 on
    /// the circle); the structure-only commands default to the coarse tree
    /// on S², where deep full-degree rules are not affordable.
    fn defaults(cmd: Command) -> Self {
        let (d, gamma, j) = match cmd {
            Command::Build | Command::Jackson => (3, 2.0, 4),
            Command::Bernstein | Command::Bmo | Command::FrameCheck | Command::AtomsDemo => {
                (2, 0.5, 3)
            }
        };
        Self {
            d,
            b: 4,
            betaw: 1.0 / 12.0,
            gamma,
            j,
            tau: 1.0,
            s: f64::NAN, // derived in resolve()
            q: 2.0,
            n_grid: vec![1, 2, 4, 8, 16, 32, 64],
            trials: 20,
            seed: 42,
            output_dir: PathBuf::from("out"),
            atoms_per_element: 3,
            amplitude: 1.0,
        }
    }

    /// Defaults ← file ← flags, then derivation and validation. The rate
    /// identity 1/τ = s/(d−1) fills in whichever of (τ, s) is missing and
    /// rejects inconsistent pairs.
    pub fn resolve(cmd: Command, o: ConfigOverrides) -> Result<Self, ConfigError> {
        let mut c = Self::defaults(cmd);
        if let Some(v) = o.d {
            c.d = v;
        }
        if let Some(v) = o.b {
            c.b = v;
        }
        if let Some(v) = o.betaw {
            c.betaw = v;
        }
        if let Some(v) = o.gamma {
            c.gamma = v;
        }
        if let Some(v) = o.j {
            c.j = v;
        }
        if let Some(v) = o.q {
            c.q = v;
        }
        if let Some(v) = o.n_grid {
            c.n_grid = v;
        }
        if let Some(v) = o.trials {
            c.trials = v;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = o.output_dir {
            c.output_dir = v;
        }
        if let Some(v) = o.atoms_per_element {
            c.atoms_per_element = v;
        }
        if let Some(v) = o.amplitude {
            c.amplitude = v;
        }

        if c.d != 2 && c.d != 3 {
            return err(format!("d must be 2 or 3, got {}", c.d));
        }
        let nu = (c.d - 1) as f64;
        match (o.tau, o.s) {
            (Some(tau), Some(s)) => {
                if (1.0 / tau - s / nu).abs() > 1e-9 {
                    return err(format!(
                        "tau and s are coupled by 1/tau = s/(d-1): got 1/{tau} vs {s}/{nu}"
                    ));
                }
                c.tau = tau;
                c.s = s;
            }
            (Some(tau), None) => {
                c.tau = tau;
                c.s = nu / tau;
            }
            (None, Some(s)) => {
                c.s = s;
                c.tau = nu / s;
            }
            (None, None) => {
                c.s = nu / c.tau;
            }
        }
        if !(c.tau > 0.0 && c.tau.is_finite()) {
            return err(format!("tau must be a positive finite number, got {}", c.tau));
        }
        if !(c.q > 0.0) {
            return err(format!("q must be positive, got {}", c.q));
        }
        if c.b < 2 {
            return err(format!("b must be >= 2, got {}", c.b));
        }
        if c.j < 1 {
            return err("J must be >= 1".to_string());
        }
        if !(c.gamma > 0.0) {
            return err(format!("gamma must be positive, got {}", c.gamma));
        }
        // Mesh-ratio admissibility for the nested construction: the core
        // caps plus the inter-sibling gaps must fit inside a parent cell.
        let slack = 1.0 / (c.b as f64 - 1.0) + 2.0 * c.betaw;
        if slack > 0.5 + 1e-12 {
            return err(format!(
                "mesh-ratio constraint violated: 1/(b-1) + 2*betaw = {slack} > 1/2 \
                 (b = {}, betaw = {})",
                c.b, c.betaw
            ));
        }
        if !(c.amplitude.is_finite() && c.amplitude >= 0.0) {
            return err(format!("amplitude must be finite and >= 0, got {}", c.amplitude));
        }
        if c.atoms_per_element == 0 {
            return err("atoms_per_element must be >= 1".to_string());
        }
        Ok(c)
    }

    /// Canonical key=value rendering: the fingerprint input and the config
    /// echo embedded in artifacts. Field order is fixed.
    pub fn canonical(&self) -> String {
        let grid = self
            .n_grid
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "d={}\nb={}\nbetaw={}\ngamma={}\nJ={}\ntau={}\ns={}\nq={}\nn_grid={}\ntrials={}\nseed={}\natoms_per_element={}\namplitude={}\n",
            self.d,
            self.b,
            self.betaw,
            self.gamma,
            self.j,
            self.tau,
            self.s,
            self.q,
            grid,
            self.trials,
            self.seed,
            self.atoms_per_element,
            self.amplitude,
        )
    }

    pub fn fingerprint(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical().as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_and_derive_s() {
        let c = ExperimentConfig::resolve(Command::Build, ConfigOverrides::default()).unwrap();
        assert_eq!((c.d, c.b, c.j), (3, 4, 4));
        assert!((c.s - 2.0).abs() < 1e-15); // tau = 1, d = 3
        let c = ExperimentConfig::resolve(Command::Bmo, ConfigOverrides::default()).unwrap();
        assert_eq!((c.d, c.j), (2, 3));
        assert!((c.s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_s_coupling() {
        let o = ConfigOverrides {
            s: Some(4.0),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(Command::Build, o).unwrap();
        assert!((c.tau - 0.5).abs() < 1e-15);

        let o = ConfigOverrides {
            tau: Some(1.0),
            s: Some(3.0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Command::Build, o).is_err());

        let o = ConfigOverrides {
            tau: Some(2.0),
            s: Some(1.0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(Command::Build, o).is_ok());
    }

    #[test]
    fn mesh_ratio_gate() {
        let o = ConfigOverrides {
            betaw: Some(0.3),
            ..Default::default()
        };
        let e = ExperimentConfig::resolve(Command::Build, o).unwrap_err();
        assert!(e.0.contains("mesh-ratio"));
        // b = 4, betaw = 1/12 sits exactly on the boundary and is legal.
        assert!(ExperimentConfig::resolve(Command::Build, ConfigOverrides::default()).is_ok());
    }

    #[test]
    fn file_parsing_layering_and_fingerprint() {
        let file = ConfigOverrides::from_file("tau = 2\nseed=7 # comment\n\n# full line\n").unwrap();
        let flags = ConfigOverrides {
            seed: Some(9),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(Command::Jackson, flags.layered_over(file)).unwrap();
        assert_eq!(c.seed, 9);
        assert!((c.tau - 2.0).abs() < 1e-15);

        let c2 = ExperimentConfig::resolve(Command::Jackson, ConfigOverrides::default()).unwrap();
        assert_ne!(c.fingerprint(), c2.fingerprint());
        assert_eq!(c2.fingerprint(), c2.fingerprint());

        assert!(ConfigOverrides::from_file("nope=1").is_err());
        assert!(ConfigOverrides::from_file("tau 2").is_err());
    }

    #[test]
    fn n_grid_parsing() {
        assert_eq!(parse_n_grid("1,2,4").unwrap(), vec![1, 2, 4]);
        assert!(parse_n_grid("").is_err());
        assert!(parse_n_grid("2,1").is_err());
        assert!(parse_n_grid("0,1").is_err());
    }
}
