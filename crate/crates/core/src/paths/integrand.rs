use serde::{Deserialize, Serialize};

use super::{lanes, FbmGenerator, FbmMethod, RandomStream, SamplePath, TimeGrid};
use crate::{Error, Result};

/// Built-in bounded continuous functions applied to an fBm path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiTag {
    /// `Φ(z) = exp(−z²)`
    Gauss,
    /// `Φ(z) = 1 + exp(−z²)`
    ShiftedGauss,
}

impl PhiTag {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            PhiTag::Gauss => (-z * z).exp(),
            PhiTag::ShiftedGauss => 1.0 + (-z * z).exp(),
        }
    }

    pub fn sup(self) -> f64 {
        match self {
            PhiTag::Gauss => 1.0,
            PhiTag::ShiftedGauss => 2.0,
        }
    }

    /// Value of `|Φ|` at `±∞`.
    pub fn limit_at_infinity(self) -> f64 {
        match self {
            PhiTag::Gauss => 0.0,
            PhiTag::ShiftedGauss => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhiTag::Gauss => "gauss",
            PhiTag::ShiftedGauss => "shifted-gauss",
        }
    }
}

impl std::str::FromStr for PhiTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(PhiTag::Gauss),
            "shifted-gauss" => Ok(PhiTag::ShiftedGauss),
            other => Err(Error::constraint(format!(
                "unknown phi tag `{other}` (expected gauss or shifted-gauss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum IntegrandKind {
    Constant {
        value: f64,
    },
    PhiOfFbm {
        hurst: f64,
        phi: PhiTag,
    },
    /// Values at every grid point `t_0..t_n`.
    Table {
        values: Vec<f64>,
    },
}

/// Description of the integrand process ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrandSpec {
    pub kind: IntegrandKind,
    /// Declared almost-sure bound `c_∞` on `|ξ|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl IntegrandSpec {
    pub fn constant(value: f64) -> Self {
        IntegrandSpec {
            kind: IntegrandKind::Constant { value },
            bound: None,
        }
    }

    pub fn phi_of_fbm(hurst: f64, phi: PhiTag) -> Self {
        IntegrandSpec {
            kind: IntegrandKind::PhiOfFbm { hurst, phi },
            bound: None,
        }
    }

    pub fn table(values: Vec<f64>) -> Self {
        IntegrandSpec {
            kind: IntegrandKind::Table { values },
            bound: None,
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Intrinsic supremum of `|ξ|` implied by the kind.
    pub fn intrinsic_sup(&self) -> f64 {
        match &self.kind {
            IntegrandKind::Constant { value } => value.abs(),
            IntegrandKind::PhiOfFbm { phi, .. } => phi.sup(),
            IntegrandKind::Table { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// The bound `c_∞`: declared if set, otherwise intrinsic.
    pub fn sup_bound(&self) -> f64 {
        self.bound.unwrap_or_else(|| self.intrinsic_sup())
    }

    pub fn label(&self) -> String {
        match &self.kind {
            IntegrandKind::Constant { value } => format!("constant({value})"),
            IntegrandKind::PhiOfFbm { hurst, phi } => format!("{}(fbm H={hurst})", phi.name()),
            IntegrandKind::Table { values } => format!("table({})", values.len()),
        }
    }

    fn validate(&self, grid: &TimeGrid) -> Result<()> {
        if let IntegrandKind::Table { values } = &self.kind {
            if values.len() != grid.cells() + 1 {
                return Err(Error::GridMismatch(format!(
                    "integrand table has {} values, grid needs {}",
                    values.len(),
                    grid.cells() + 1
                )));
            }
        }
        if let Some(b) = self.bound {
            if !(b > 0.0) {
                return Err(Error::constraint(format!("c_inf must be positive, got {b}")));
            }
            let sup = self.intrinsic_sup();
            if sup > b {
                return Err(Error::constraint(format!(
                    "integrand {} exceeds declared bound c_inf = {b} (sup |xi| = {sup})",
                    self.label()
                )));
            }
        }
        Ok(())
    }
}

/// Integrand sampler prepared for one grid.
#[derive(Debug)]
pub struct IntegrandSampler {
    spec: IntegrandSpec,
    grid: TimeGrid,
    fbm: Option<FbmGenerator>,
}

impl IntegrandSampler {
    pub fn new(spec: &IntegrandSpec, grid: &TimeGrid) -> Result<Self> {
        spec.validate(grid)?;
        let fbm = match spec.kind {
            IntegrandKind::PhiOfFbm { hurst, .. } => {
                Some(FbmGenerator::new(*grid, hurst, FbmMethod::auto(grid.cells()))?)
            }
            _ => None,
        };
        Ok(IntegrandSampler {
            spec: spec.clone(),
            grid: *grid,
            fbm,
        })
    }

    pub fn spec(&self) -> &IntegrandSpec {
        &self.spec
    }

    /// True when ξ does not depend on the random stream.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self.spec.kind, IntegrandKind::PhiOfFbm { .. })
    }

    /// ξ at the grid points. An fBm-driven integrand reads the
    /// [`lanes::INTEGRAND`] lane of `stream`, so it is independent of the
    /// Brownian driver on the default lane.
    pub fn sample(&self, stream: &RandomStream) -> SamplePath {
        self.sample_on(&stream.lane(lanes::INTEGRAND))
    }

    /// ξ driven by `stream` exactly as given, without switching lanes.
    pub fn sample_on(&self, stream: &RandomStream) -> SamplePath {
        let n = self.grid.cells();
        let values = match &self.spec.kind {
            IntegrandKind::Constant { value } => vec![*value; n + 1],
            IntegrandKind::Table { values } => values.clone(),
            IntegrandKind::PhiOfFbm { phi, .. } => {
                let fbm = self.fbm.as_ref().expect("fbm generator prepared");
                let b = fbm.sample(stream);
                b.values().iter().map(|&z| phi.eval(z)).collect()
            }
        };
        SamplePath::new(self.grid, values).expect("length validated")
    }
}

pub fn integrand_path(spec: &IntegrandSpec, grid: &TimeGrid, stream: &RandomStream) -> Result<SamplePath> {
    Ok(IntegrandSampler::new(spec, grid)?.sample(stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 256).unwrap()
    }

    #[test]
    fn constant_integrand() {
        let p = integrand_path(&IntegrandSpec::constant(1.0), &grid(), &RandomStream::new(1, 0)).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn gauss_range() {
        for r in 0..20 {
            let p = integrand_path(
                &IntegrandSpec::phi_of_fbm(0.75, PhiTag::Gauss),
                &grid(),
                &RandomStream::new(2, r),
            )
            .unwrap();
            assert!(p.values().iter().all(|&v| v > 0.0 && v <= 1.0));
            assert_eq!(p.values()[0], 1.0);
        }
    }

    #[test]
    fn shifted_gauss_range_and_bound() {
        let spec = IntegrandSpec::phi_of_fbm(0.75, PhiTag::ShiftedGauss).with_bound(2.0);
        let sampler = IntegrandSampler::new(&spec, &grid()).unwrap();
        for r in 0..20 {
            let p = sampler.sample(&RandomStream::new(3, r));
            assert!(p.values().iter().all(|&v| v > 1.0 && v <= 2.0));
        }
        assert_eq!(spec.sup_bound(), 2.0);
    }

    #[test]
    fn bound_smaller_than_range_is_rejected() {
        let spec = IntegrandSpec::phi_of_fbm(0.75, PhiTag::ShiftedGauss).with_bound(1.5);
        assert!(IntegrandSampler::new(&spec, &grid()).is_err());
        let spec = IntegrandSpec::constant(3.0).with_bound(2.0);
        assert!(IntegrandSampler::new(&spec, &grid()).is_err());
    }

    #[test]
    fn table_length_checked() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(integrand_path(&IntegrandSpec::table(vec![1.0; 4]), &g, &RandomStream::new(0, 0)).is_err());
        let p = integrand_path(
            &IntegrandSpec::table(vec![1.0, 2.0, 3.0, 4.0, 5.0]),
            &g,
            &RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(p.values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn integrand_fbm_is_independent_of_driver_lane() {
        let g = grid();
        let s = RandomStream::new(5, 5);
        let spec = IntegrandSpec::phi_of_fbm(0.5, PhiTag::Gauss);
        let xi = integrand_path(&spec, &g, &s).unwrap();
        let direct = FbmGenerator::new(g, 0.5, FbmMethod::Exact).unwrap().sample(&s);
        let from_lane = FbmGenerator::new(g, 0.5, FbmMethod::Exact)
            .unwrap()
            .sample(&s.lane(lanes::INTEGRAND));
        let expect: Vec<f64> = from_lane.values().iter().map(|&z| (-z * z).exp()).collect();
        assert_eq!(xi.values(), expect.as_slice());
        assert_ne!(direct.values(), from_lane.values());
    }

    #[test]
    fn spec_roundtrips_through_json() {
        let spec = IntegrandSpec::phi_of_fbm(0.75, PhiTag::ShiftedGauss).with_bound(2.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<IntegrandSpec>(&json).unwrap(), spec);
    }
}
