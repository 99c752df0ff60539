//! Run configuration: a TOML file with a `[model]` section, optional support
//! and distribution sections, and one optional section per experiment.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use displace_core::discretize::GridSpec;
use displace_core::geometry::SupportSet;
use displace_core::potentials::{Descriptor, PeriodicPotential, SingleSitePotential};
use displace_core::randomfields::{DisplacementDistribution, RadialFamily};

/// Largest operator assembled at all.
pub const MAX_SPARSE: usize = 2_000_000;
/// Largest operator handled densely (projectors, operator sandwich).
pub const MAX_DENSE: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub family: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, Param>,
}

impl PotentialConfig {
    pub fn descriptor(&self) -> Descriptor {
        self.params.iter().fold(Descriptor::new(&self.family), |d, (k, v)| match v {
            Param::Scalar(x) => d.with(k, &[*x]),
            Param::List(xs) => d.with(k, xs),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub m: usize,
    pub lambda: f64,
    pub p: PotentialConfig,
    pub q: PotentialConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SupportConfig {
    Interval { lo: f64, hi: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Sphere { center: Vec<f64>, radius: f64 },
    Ellipsoid { center: Vec<f64>, axes: Vec<f64> },
    Cuboid { lo: Vec<f64>, hi: Vec<f64> },
    Polytope { vertices: Vec<Vec<f64>> },
}

impl SupportConfig {
    pub fn build(&self) -> SupportSet {
        match self {
            SupportConfig::Interval { lo, hi } => SupportSet::interval(*lo, *hi),
            SupportConfig::Ball { center, radius } => SupportSet::ball(center, *radius),
            SupportConfig::Sphere { center, radius } => SupportSet::sphere(center, *radius),
            SupportConfig::Ellipsoid { center, axes } => {
                SupportSet::Ellipsoid { center: center.clone(), axes: axes.clone() }
            }
            SupportConfig::Cuboid { lo, hi } => SupportSet::cuboid(lo, hi),
            SupportConfig::Polytope { vertices } => SupportSet::Polytope { vertices: vertices.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionConfig {
    UniformBall { center: Vec<f64>, radius: f64 },
    UniformSphere { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    PolarPower { dim: usize, k: u32, radius: f64 },
    PolarParabolic { dim: usize, radius: f64 },
}

impl DistributionConfig {
    pub fn build(&self) -> DisplacementDistribution {
        match self {
            DistributionConfig::UniformBall { center, radius } => {
                DisplacementDistribution::UniformBall { center: center.clone(), radius: *radius }
            }
            DistributionConfig::UniformSphere { center, radius } => {
                DisplacementDistribution::UniformSphere { center: center.clone(), radius: *radius }
            }
            DistributionConfig::Box { lo, hi } => {
                DisplacementDistribution::ProductBox { lo: lo.clone(), hi: hi.clone() }
            }
            DistributionConfig::PolarPower { dim, k, radius } => {
                DisplacementDistribution::Polar { dim: *dim, radial: RadialFamily::Power { k: *k, radius: *radius } }
            }
            DistributionConfig::PolarParabolic { dim, radius } => {
                DisplacementDistribution::Polar { dim: *dim, radial: RadialFamily::Parabolic { radius: *radius } }
            }
        }
    }
}

/// `points` energies from `start` to `stop`, log-spaced when `log` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl GridConfig {
    pub fn energies(&self) -> Vec<f64> {
        if self.log {
            displace_core::spectral_stats::log_grid(self.start, self.stop, self.points)
        } else if self.points == 1 {
            vec![self.start]
        } else {
            (0..self.points)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
                .collect()
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.points == 0 || !(self.start < self.stop) || (self.log && self.start <= 0.0) {
            bail!("{what}: need points ≥ 1, start < stop and start > 0 on a log grid");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandConfig {
    pub samples: usize,
    pub levels: usize,
    pub zeta: Option<Vec<f64>>,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig { samples: 65, levels: 3, zeta: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeConfig {
    pub restarts: usize,
    pub lambdas: Vec<f64>,
    pub growth_samples: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig { restarts: 16, lambdas: vec![0.05, 0.1, 0.2], growth_samples: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantFieldConfig {
    pub ns: Vec<usize>,
    pub restarts: usize,
    /// Points per site of the exhaustive scan at `n = 1`; 0 skips it.
    pub scan_points: usize,
}

impl Default for ConstantFieldConfig {
    fn default() -> Self {
        ConstantFieldConfig { ns: vec![0, 1, 2], restarts: 16, scan_points: 11 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Continuum,
    ReducedPlus,
    ReducedMinus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdsConfig {
    pub family: FamilyKind,
    pub n: usize,
    pub samples: usize,
    pub energies: GridConfig,
    /// Continuum energies are offsets from `E(λ,ζ(λ))`.
    pub relative: bool,
}

impl Default for IdsConfig {
    fn default() -> Self {
        IdsConfig {
            family: FamilyKind::Continuum,
            n: 2,
            samples: 100,
            energies: GridConfig { start: 0.0, stop: 1.0, points: 21, log: false },
            relative: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifshitzConfig {
    pub family: FamilyKind,
    pub n: usize,
    pub samples: usize,
    /// Coarse grid locating the tail; relative to the spectral bottom.
    pub coarse: GridConfig,
    pub refine_points: usize,
    /// The tail window starts once this many eigenvalues are seen in total.
    pub min_counts: usize,
    pub n_max: f64,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for LifshitzConfig {
    fn default() -> Self {
        LifshitzConfig {
            family: FamilyKind::ReducedPlus,
            n: 1000,
            samples: 200,
            coarse: GridConfig { start: 1e-4, stop: 10.0, points: 60, log: true },
            refine_points: 30,
            min_counts: 20,
            n_max: 1e-2,
            slope_min: -0.9,
            slope_max: -0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WegnerConfig {
    pub ns: Vec<usize>,
    pub samples: usize,
    /// First `ε` as a fraction of the window width `E₀ - E_λ`.
    pub eps_start: f64,
    pub eps_decades: f64,
    pub eps_points: usize,
    /// Defaults to the middle of the window.
    pub energy: Option<f64>,
    pub restarts: usize,
    pub audit: usize,
    pub audit_n: usize,
    pub nu_min: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for WegnerConfig {
    fn default() -> Self {
        WegnerConfig {
            ns: vec![1, 2, 3],
            samples: 400,
            eps_start: 3e-3,
            eps_decades: 1.5,
            eps_points: 7,
            energy: None,
            restarts: 8,
            audit: 50,
            audit_n: 1,
            nu_min: 0.8,
            d_min: 0.5,
            d_max: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub n: usize,
    /// Random fields for the operator sandwich.
    pub fields: usize,
    pub trials: usize,
    pub c0_max: f64,
    pub restarts: usize,
    pub growth_samples: usize,
    pub lambdas: Vec<f64>,
    pub theta_points: usize,
    pub max_spread: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            n: 1,
            fields: 10,
            trials: 100,
            c0_max: 128.0,
            restarts: 8,
            growth_samples: 400,
            lambdas: vec![0.05, 0.1, 0.2],
            theta_points: 16,
            max_spread: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichConfig {
    pub n: usize,
    pub samples: usize,
    pub points: usize,
    /// Fixed `C₀`; calibrated on the operator sandwich when absent.
    pub c0: Option<f64>,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        SandwichConfig { n: 2, samples: 100, points: 12, c0: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide. Never affects results.
    #[serde(default, skip_serializing)]
    pub threads: usize,
    pub model: ModelConfig,
    pub support: Option<SupportConfig>,
    pub distribution: Option<DistributionConfig>,
    #[serde(default)]
    pub band: BandConfig,
    #[serde(default)]
    pub minimize: MinimizeConfig,
    #[serde(default)]
    #[serde(rename = "theorem1")]
    pub constant_field: ConstantFieldConfig,
    #[serde(default)]
    pub ids: IdsConfig,
    #[serde(default)]
    pub lifshitz: LifshitzConfig,
    #[serde(default)]
    pub wegner: WegnerConfig,
    #[serde(default)]
    pub reduce: ReduceConfig,
    #[serde(default)]
    pub sandwich: SandwichConfig,
}

/// The validated objects a run works with.
#[derive(Clone, Debug)]
pub struct Setup {
    pub p: PeriodicPotential,
    pub q: SingleSitePotential,
    pub k: SupportSet,
    pub dist: DisplacementDistribution,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Canonical text: equal configurations give equal strings.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<Setup> {
        let md = &self.model;
        let d = md.dim;
        GridSpec::new(d, 0, md.m).context("[model]")?;
        if !(md.lambda >= 0.0 && md.lambda.is_finite()) {
            bail!("[model] lambda = {} must be a finite non-negative number", md.lambda);
        }
        let p = PeriodicPotential::from_descriptor(d, &md.p.descriptor()).context("[model.p]")?;
        let q = SingleSitePotential::from_descriptor(d, &md.q.descriptor()).context("[model.q]")?;
        let dist = match &self.distribution {
            Some(c) => c.build(),
            None => DisplacementDistribution::uniform_ball(d, 1.0),
        };
        dist.validate().context("[distribution]")?;
        if dist.dim() != d {
            bail!("[distribution] has dimension {} but the model has {d}", dist.dim());
        }
        let k = match &self.support {
            Some(c) => c.build(),
            None => dist.support(),
        };
        k.validate().context("[support]")?;
        if k.dim() != d {
            bail!("[support] has dimension {} but the model has {d}", k.dim());
        }
        let cells = |n: usize| (2 * n + 1).pow(d as u32);
        let points = |n: usize| cells(n) * md.m.pow(d as u32);
        let check = |what: &str, n: usize, limit: usize| -> Result<()> {
            let size = points(n);
            if size > limit {
                bail!(
                    "{what}: n = {n} needs a {size}-point operator (about {} MB), above the limit of {limit} points",
                    size * 8 * (2 * d + 1) / 1_000_000
                );
            }
            Ok(())
        };
        let ids = &self.ids;
        ids.energies.validate("[ids] energies")?;
        if ids.samples == 0 {
            bail!("[ids] samples must be at least 1");
        }
        if ids.family == FamilyKind::Continuum {
            check("[ids]", ids.n, MAX_SPARSE)?;
        }
        let lf = &self.lifshitz;
        lf.coarse.validate("[lifshitz] coarse")?;
        if lf.samples == 0 || lf.refine_points < 6 || !(lf.slope_min < lf.slope_max) {
            bail!("[lifshitz] needs samples ≥ 1, refine_points ≥ 6 and slope_min < slope_max");
        }
        if lf.family == FamilyKind::Continuum {
            check("[lifshitz]", lf.n, MAX_SPARSE)?;
        }
        let wg = &self.wegner;
        if wg.ns.is_empty() || wg.samples == 0 || wg.eps_points < 2 || !(wg.eps_start > 0.0 && wg.eps_decades > 0.0) {
            bail!("[wegner] needs ns, samples ≥ 1, eps_points ≥ 2 and positive eps_start, eps_decades");
        }
        for &n in &wg.ns {
            check("[wegner]", n, MAX_SPARSE)?;
        }
        check("[wegner] audit", wg.audit_n, MAX_DENSE)?;
        let rd = &self.reduce;
        check("[reduce]", rd.n, MAX_DENSE)?;
        if rd.c0_max < 2.0 || rd.fields == 0 || rd.theta_points < 2 {
            bail!("[reduce] needs c0_max ≥ 2, fields ≥ 1 and theta_points ≥ 2");
        }
        let sw = &self.sandwich;
        check("[sandwich]", sw.n, MAX_SPARSE)?;
        if sw.samples == 0 || sw.points == 0 || sw.c0.is_some_and(|c| c < 1.0) {
            bail!("[sandwich] needs samples ≥ 1, points ≥ 1 and c0 ≥ 1");
        }
        if self.band.samples < 2 || self.band.levels == 0 {
            bail!("[band] needs samples ≥ 2 and levels ≥ 1");
        }
        if self.band.zeta.as_ref().is_some_and(|z| z.len() != d) {
            bail!("[band] zeta must have {d} entries");
        }
        if self.minimize.restarts == 0 || self.constant_field.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        Ok(Setup { p, q, k, dist })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        dim = 1
        m = 16
        lambda = 0.1
        [model.p]
        family = "cosine"
        coeffs = [1.0]
        [model.q]
        family = "asym-bump"
        eps = 2
    "#;

    #[test]
    fn canonical_round_trip() {
        let c = Config::parse(MINIMAL).unwrap();
        let again = Config::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical(), again.canonical());
        c.validate().unwrap();
    }

    #[test]
    fn integer_parameters_become_reals() {
        let c = Config::parse(MINIMAL).unwrap();
        assert_eq!(c.model.q.params["eps"], Param::Scalar(2.0));
    }

    #[test]
    fn rejects_bad_values() {
        let neg = MINIMAL.replace("m = 16", "m = -3");
        assert!(Config::parse(&neg).is_err());
        let small = MINIMAL.replace("m = 16", "m = 2");
        assert!(Config::parse(&small).unwrap().validate().is_err());
        let typo = format!("{MINIMAL}\n[ids]\nsampels = 3\n");
        assert!(Config::parse(&typo).is_err());
        let huge = format!("{MINIMAL}\n[reduce]\nn = 200\n");
        let err = Config::parse(&huge).unwrap().validate().unwrap_err();
        assert!(format!("{err:#}").contains("point operator"));
    }
}
