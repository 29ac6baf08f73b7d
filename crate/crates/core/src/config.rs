//! Experiment configuration: a single TOML file with flat sections. All
//! run state flows through the file and command-line flags; nothing is read
//! from the environment, so a config plus a seed reproduces a report
//! byte-for-byte.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use serde::{Deserialize, Serialize};

use crate::carrier::{PadicCarrier, RealCarrier};
use crate::certify::TheoremId;
use crate::direct::{recommend_direction_padic, recommend_direction_real, Direction};
use crate::error::{Error, Result};
use crate::exact::Exponent;
use crate::funceq::ControlFamily;
use crate::spaces::SettingKind;

pub fn parse_exponent(s: &str) -> Result<Exponent> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let numer: i64 = n
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let denom: i64 = d
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if denom == 0 {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Ratio::new(numer, denom))
}

pub fn parse_big_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let numer: BigInt = n
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let denom: BigInt = d
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if denom == num_traits::Zero::zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(BigRational::new(numer, denom))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    FixedPoint,
    Both,
}

impl Method {
    pub fn runs_direct(&self) -> bool {
        matches!(self, Method::Direct | Method::Both)
    }
    pub fn runs_fixed_point(&self) -> bool {
        matches!(self, Method::FixedPoint | Method::Both)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// "down", "up" or "auto" (derived from the control family).
    #[serde(default = "default_auto")]
    pub direction: String,
    pub theorems: Vec<String>,
}

fn default_seed() -> u64 {
    42
}
fn default_method() -> Method {
    Method::Both
}
fn default_auto() -> String {
    "auto".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SettingSection {
    pub kind: SettingKind,
    #[serde(default = "default_dim")]
    pub dimension: usize,
    #[serde(default = "default_prime")]
    pub prime: u32,
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default = "default_tnorm")]
    pub tnorm: crate::spaces::TNorm,
    #[serde(default = "default_one_f64")]
    pub anchor_norm: f64,
    #[serde(default = "default_one_f64")]
    pub fuzzy_alpha: f64,
    #[serde(default = "default_one_f64")]
    pub fuzzy_beta: f64,
}

fn default_dim() -> usize {
    1
}
fn default_prime() -> u32 {
    2
}
fn default_precision() -> usize {
    64
}
fn default_tnorm() -> crate::spaces::TNorm {
    crate::spaces::TNorm::Minimum
}
fn default_one_f64() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FunctionSection {
    /// Linear coefficient a of f(x) = a·x + δ(x), as a rational string.
    #[serde(default = "default_one_str")]
    pub linear: String,
    /// none | power | offset | valuation-shift
    #[serde(default = "default_none")]
    pub perturbation: String,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_one_str")]
    pub shift_scale: String,
    #[serde(default)]
    pub shift_base: i64,
    #[serde(default = "default_half_str")]
    pub shift_rate: String,
}

fn default_one_str() -> String {
    "1".into()
}
fn default_none() -> String {
    "none".into()
}
fn default_half_str() -> String {
    "1/2".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ControlSection {
    /// power-sum | power-product | xi-sum | xi-product | constant
    pub family: String,
    /// "fit" or a rational string.
    #[serde(default = "default_fit")]
    pub coefficient: String,
    #[serde(default = "default_one_str")]
    pub r: String,
    #[serde(default = "default_one_str")]
    pub p1: String,
    #[serde(default = "default_one_str")]
    pub p2: String,
    #[serde(default = "default_one_str")]
    pub p3: String,
    #[serde(default = "default_one_str")]
    pub xi: String,
    #[serde(default = "default_zero_str")]
    pub delta: String,
    /// Contraction parameter of the certificate (α, L or |r|):
    /// "auto" derives it from the family's homogeneity degree.
    #[serde(default = "default_auto")]
    pub contraction: String,
}

fn default_fit() -> String {
    "fit".into()
}
fn default_zero_str() -> String {
    "0".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridsSection {
    pub seeds: Vec<String>,
    #[serde(default = "default_levels")]
    pub levels: i64,
    #[serde(default = "default_depth")]
    pub depth: i64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_floor")]
    pub valuation_floor: i64,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_triples")]
    pub triples: usize,
}

fn default_levels() -> i64 {
    1
}
fn default_depth() -> i64 {
    120
}
fn default_n_max() -> usize {
    40
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_floor() -> i64 {
    20
}
fn default_t_min() -> f64 {
    1e-6
}
fn default_t_max() -> f64 {
    1e3
}
fn default_t_points() -> usize {
    100
}
fn default_triples() -> usize {
    120
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_json_name")]
    pub json: String,
    #[serde(default = "default_csv_name")]
    pub csv: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { json: default_json_name(), csv: default_csv_name() }
    }
}

fn default_json_name() -> String {
    "report.json".into()
}
fn default_csv_name() -> String {
    "summary.csv".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub setting: SettingSection,
    pub function: FunctionSection,
    pub control: ControlSection,
    pub grids: GridsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn theorems(&self) -> Result<Vec<TheoremId>> {
        self.experiment
            .theorems
            .iter()
            .map(|s| TheoremId::parse(s))
            .collect()
    }

    /// Control family with the coefficient left at 0 when fitting is
    /// requested (the runner installs the fitted value).
    pub fn control_family(&self) -> Result<ControlFamily> {
        let coeff = if self.fit_coefficient() {
            BigRational::new(BigInt::from(0), BigInt::from(1))
        } else {
            parse_big_rational(&self.control.coefficient)
                .map_err(|_| Error::Config(format!("control.coefficient: bad value `{}`", self.control.coefficient)))?
        };
        let fam = match self.control.family.as_str() {
            "power-sum" => ControlFamily::PowerSum { theta: coeff, r: parse_exponent(&self.control.r)? },
            "power-product" => ControlFamily::PowerProduct {
                theta: coeff,
                p1: parse_exponent(&self.control.p1)?,
                p2: parse_exponent(&self.control.p2)?,
                p3: parse_exponent(&self.control.p3)?,
            },
            "xi-sum" => ControlFamily::XiSum { kappa: coeff, s: parse_exponent(&self.control.xi)? },
            "xi-product" => ControlFamily::XiProduct { kappa: coeff, s: parse_exponent(&self.control.xi)? },
            "constant" => ControlFamily::Constant { delta: parse_big_rational(&self.control.delta)? },
            other => return Err(Error::Config(format!("control.family: unknown family `{other}`"))),
        };
        if !self.fit_coefficient() {
            fam.validate()?;
        }
        Ok(fam)
    }

    pub fn fit_coefficient(&self) -> bool {
        self.control.coefficient.trim() == "fit"
    }

    pub fn resolve_direction(&self) -> Result<Direction> {
        let theorems = self.theorems()?;
        let from_theorems = theorems.first().map(|t| t.direction());
        match self.experiment.direction.as_str() {
            "down" => Ok(Direction::Down),
            "up" => Ok(Direction::Up),
            "auto" => {
                if let Some(d) = from_theorems {
                    return Ok(d);
                }
                let family = self.control_family()?;
                let rec = match self.setting.kind {
                    SettingKind::NonArchimedean => recommend_direction_padic(
                        &PadicCarrier::new(self.setting.prime, self.setting.precision),
                        &family,
                    ),
                    _ => {
                        let _ = RealCarrier::new(self.setting.dimension);
                        recommend_direction_real(&family)
                    }
                };
                rec.ok_or_else(|| {
                    Error::Config("experiment.direction: no direction recommended; set one explicitly".into())
                })
            }
            other => Err(Error::Config(format!("experiment.direction: unknown `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.name.is_empty() {
            return Err(Error::Config("experiment.name: must not be empty".into()));
        }
        if self.experiment.theorems.is_empty() {
            return Err(Error::Config("experiment.theorems: at least one theorem id".into()));
        }
        let theorems = self.theorems()?;
        for t in &theorems {
            if t.setting() != self.setting.kind {
                return Err(Error::Config(format!(
                    "experiment.theorems: {} belongs to the {} setting, config says {}",
                    t.as_str(),
                    t.setting().as_str(),
                    self.setting.kind.as_str()
                )));
            }
        }
        let dir = self.resolve_direction()?;
        for t in &theorems {
            if t.direction() != dir {
                return Err(Error::Config(format!(
                    "experiment.theorems: {} is a {}-direction theorem but the run extracts {}",
                    t.as_str(),
                    t.direction().as_str(),
                    dir.as_str()
                )));
            }
        }
        if self.grids.seeds.is_empty() {
            return Err(Error::Config("grids.seeds: must not be empty".into()));
        }
        if (self.grids.n_max as i64) + self.grids.levels > self.grids.depth {
            return Err(Error::Config(
                "grids.depth: must cover n-max plus the report levels".into(),
            ));
        }
        match self.function.perturbation.as_str() {
            "none" | "power" | "offset" | "valuation-shift" => {}
            other => {
                return Err(Error::Config(format!(
                    "function.perturbation: unknown `{other}`"
                )))
            }
        }
        if self.setting.kind == SettingKind::NonArchimedean {
            if self.function.perturbation == "power" || self.function.perturbation == "offset" {
                return Err(Error::Config(
                    "function.perturbation: power/offset are real-carrier perturbations".into(),
                ));
            }
        } else if self.function.perturbation == "valuation-shift" {
            return Err(Error::Config(
                "function.perturbation: valuation-shift needs the non-archimedean setting".into(),
            ));
        }
        let _ = self.control_family()?;
        if self.setting.kind == SettingKind::Fuzzy
            && (self.setting.fuzzy_alpha <= 0.0 || self.setting.fuzzy_beta <= 0.0)
        {
            return Err(Error::Config("setting.fuzzy-alpha/beta: must be positive".into()));
        }
        Ok(())
    }
}

/// The default experiment matrix: one synthesized in-hypothesis instance
/// per theorem plus degenerate additive baselines. Every configuration
/// passes, so a full-matrix run exits 0.
pub fn default_matrix() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for (name, text) in default_matrix_toml() {
        let cfg = ExperimentConfig::from_toml(&text)
            .unwrap_or_else(|e| panic!("built-in config {name}: {e}"));
        out.push(cfg);
    }
    out
}

/// Probe configurations that violate a hypothesis on purpose; they must be
/// rejected with hypothesis-violated status (nonzero exit), never a pass.
pub fn probe_configs() -> Vec<ExperimentConfig> {
    vec![
        ExperimentConfig::from_toml(&na_fp_r1_probe_toml()).expect("probe config"),
        ExperimentConfig::from_toml(&fz_product_p_half_probe_toml()).expect("probe config"),
    ]
}

fn real_grid_20() -> String {
    r#"seeds = ["1/4","-1/4","1/2","-1/2","3/4","-3/4","1","-1","5/4","-5/4","7/4","-7/4","9/4","-9/4","11/4","-11/4","13/4","-13/4","15/4","-15/4"]
levels = 0
depth = 130
n-max = 120
tolerance = 1e-11"#
        .to_string()
}

fn na_grid() -> String {
    r#"seeds = ["1","2","3","-1","-2","-3","1/3","-1/3"]
levels = 1
depth = 48
n-max = 32
triples = 60"#
        .to_string()
}

fn default_matrix_toml() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = Vec::new();

    v.push((
        "cl-rassias-p-half".into(),
        format!(
            r#"[experiment]
name = "cl-rassias-p-half"
theorems = ["CL-RASSIAS"]

[setting]
kind = "classical"

[function]
perturbation = "power"
epsilon = 0.03125
rho = 0.5

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
            real_grid_20()
        ),
    ));

    v.push((
        "na-fp-down-r-half".into(),
        format!(
            r#"[experiment]
name = "na-fp-down-r-half"
theorems = ["NA-FP-down"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "valuation-shift"
shift-scale = "1"
shift-base = 6
shift-rate = "1/2"

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
            na_grid()
        ),
    ));

    v.push((
        "na-fp-up-r2".into(),
        format!(
            r#"[experiment]
name = "na-fp-up-r2"
theorems = ["NA-FP-up"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "valuation-shift"
shift-scale = "1"
shift-base = 6
shift-rate = "2"

[control]
family = "power-sum"
r = "2"

[grids]
{}
"#,
            na_grid()
        ),
    ));

    v.push((
        "na-d-down-xi-half".into(),
        format!(
            r#"[experiment]
name = "na-d-down-xi-half"
theorems = ["NA-D-down"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "valuation-shift"
shift-scale = "1"
shift-base = 6
shift-rate = "1/2"

[control]
family = "xi-sum"
xi = "1/2"

[grids]
{}
"#,
            na_grid()
        ),
    ));

    // Direct method only: the degree-6 product control is not commensurate
    // with the degree-2 perturbation, so the generalized metric d(f, Jf)
    // grows without bound along the orbit and the fixed-point route does
    // not apply to this pairing. The direct theorem it exercises does.
    v.push((
        "na-d-up-xi-prod-2".into(),
        format!(
            r#"[experiment]
name = "na-d-up-xi-prod-2"
method = "direct"
theorems = ["NA-D-up"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "valuation-shift"
shift-scale = "1"
shift-base = 8
shift-rate = "2"

[control]
family = "xi-product"
xi = "2"

[grids]
{}
"#,
            na_grid()
        ),
    ));

    for (name, theorem) in [
        ("rn-d-down-r2", "RN-D-down"),
        ("rn-fp-down-r2", "RN-FP-down"),
    ] {
        v.push((
            name.into(),
            format!(
                r#"[experiment]
name = "{name}"
theorems = ["{theorem}"]

[setting]
kind = "random"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 2.0

[control]
family = "power-sum"
r = "2"

[grids]
{}
"#,
                real_grid_20()
            ),
        ));
    }

    for (name, theorem) in [
        ("rn-d-up-r-half", "RN-D-up"),
        ("rn-fp-up-r-half", "RN-FP-up"),
    ] {
        v.push((
            name.into(),
            format!(
                r#"[experiment]
name = "{name}"
theorems = ["{theorem}"]

[setting]
kind = "random"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 0.5

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
                real_grid_20()
            ),
        ));
    }

    for (name, theorem) in [
        ("fz-d-down-p2", "FZ-D-down"),
        ("fz-fp-down-p2", "FZ-FP-down"),
    ] {
        v.push((
            name.into(),
            format!(
                r#"[experiment]
name = "{name}"
theorems = ["{theorem}"]

[setting]
kind = "fuzzy"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 2.0

[control]
family = "power-sum"
r = "2"

[grids]
{}
"#,
                real_grid_20()
            ),
        ));
    }

    for (name, theorem) in [
        ("fz-d-up-p-half", "FZ-D-up"),
        ("fz-fp-up-p-half", "FZ-FP-up"),
    ] {
        v.push((
            name.into(),
            format!(
                r#"[experiment]
name = "{name}"
theorems = ["{theorem}"]

[setting]
kind = "fuzzy"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 0.5

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
                real_grid_20()
            ),
        ));
    }

    v.push((
        "fz-fp-up-product-p8".into(),
        format!(
            r#"[experiment]
name = "fz-fp-up-product-p8"
theorems = ["FZ-FP-up"]

[setting]
kind = "fuzzy"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 0.375

[control]
family = "power-product"
p1 = "1/8"
p2 = "1/8"
p3 = "1/8"

[grids]
{}
"#,
            real_grid_20()
        ),
    ));

    v.push((
        "degenerate-additive-classical".into(),
        format!(
            r#"[experiment]
name = "degenerate-additive-classical"
theorems = ["CL-RASSIAS"]

[setting]
kind = "classical"

[function]
perturbation = "none"

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
            real_grid_20()
        ),
    ));

    v.push((
        "degenerate-additive-na".into(),
        format!(
            r#"[experiment]
name = "degenerate-additive-na"
theorems = ["NA-D-down", "NA-FP-down"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "none"

[control]
family = "power-sum"
r = "1/2"

[grids]
{}
"#,
            na_grid()
        ),
    ));

    v
}

fn na_fp_r1_probe_toml() -> String {
    format!(
        r#"[experiment]
name = "probe-na-fp-r1"
theorems = ["NA-FP-down"]

[setting]
kind = "non-archimedean"

[function]
perturbation = "valuation-shift"
shift-scale = "1"
shift-base = 6
shift-rate = "1"

[control]
family = "power-sum"
r = "1"

[grids]
{}
"#,
        na_grid()
    )
}

fn fz_product_p_half_probe_toml() -> String {
    format!(
        r#"[experiment]
name = "probe-fz-product-p-half"
theorems = ["FZ-FP-up"]

[setting]
kind = "fuzzy"

[function]
perturbation = "power"
epsilon = 0.015625
rho = 0.375

[control]
family = "power-product"
p1 = "1/2"
p2 = "1/2"
p3 = "1/2"

[grids]
{}
"#,
        real_grid_20()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_parses_and_validates() {
        let matrix = default_matrix();
        assert!(matrix.len() >= 12, "default matrix has {} configs", matrix.len());
        let settings: std::collections::HashSet<_> =
            matrix.iter().map(|c| c.setting.kind.as_str()).collect();
        assert_eq!(settings.len(), 4, "matrix must span all four settings");
    }

    #[test]
    fn probes_parse() {
        let probes = probe_configs();
        assert_eq!(probes.len(), 2);
    }

    #[test]
    fn bad_configs_name_the_offending_field() {
        let base = &default_matrix_toml()[0].1;
        let bad = base.replace("kind = \"classical\"", "kind = \"random\"");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("theorems"), "{err}");

        let bad = base.replace("theorems = [\"CL-RASSIAS\"]", "theorems = [\"NOPE\"]");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("NOPE"), "{err}");

        let bad = base.replace("epsilon = 0.03125", "epsilonn = 0.03125");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(err.to_string().contains("epsilonn") || err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn direction_resolution() {
        let cfg = &default_matrix()[1]; // na-fp-down-r-half
        assert_eq!(cfg.resolve_direction().unwrap(), Direction::Down);
        let cfg = &default_matrix()[2]; // na-fp-up-r2
        assert_eq!(cfg.resolve_direction().unwrap(), Direction::Up);
    }

    #[test]
    fn rational_parsers() {
        assert_eq!(parse_exponent("3/4").unwrap(), Ratio::new(3, 4));
        assert_eq!(parse_exponent(" 2 ").unwrap(), Ratio::new(2, 1));
        assert!(parse_exponent("1/0").is_err());
        assert!(parse_big_rational("x").is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        for cfg in default_matrix() {
            let text = cfg.to_toml();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back.experiment.name, cfg.experiment.name);
            assert_eq!(back.grids.seeds, cfg.grids.seeds);
        }
    }
}
