//! Probability vector fields: rules `mu -> V[mu]` assigning to every
//! measure a lifted measure whose position marginal is `mu` itself.

use std::fmt;
use std::sync::Arc;

use crate::error::{MdeError, Result};
use crate::measure::{DiscreteMeasure, LiftedMeasure};

/// Tolerance used when comparing cumulative masses against one half.
pub const CDF_TOL: f64 = 1e-12;

pub type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type CustomEval = Arc<dyn Fn(&DiscreteMeasure) -> Result<LiftedMeasure> + Send + Sync>;

/// Built-in closed-form velocity fields for graph PVFs.
#[derive(Clone)]
pub enum GraphField {
    Zero,
    /// `v(x) = slope * x`
    Linear { slope: f64 },
    /// `v(x) = velocity`
    Constant { velocity: Vec<f64> },
    /// `v(x) = 2 sqrt(|x|)`, componentwise.
    Peano,
    Custom(PointMap),
}

impl GraphField {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            GraphField::Zero => vec![0.0; x.len()],
            GraphField::Linear { slope } => x.iter().map(|c| slope * c).collect(),
            GraphField::Constant { velocity } => velocity.clone(),
            GraphField::Peano => x.iter().map(|c| 2.0 * c.abs().sqrt()).collect(),
            GraphField::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for GraphField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphField::Zero => write!(f, "Zero"),
            GraphField::Linear { slope } => write!(f, "Linear({slope})"),
            GraphField::Constant { velocity } => write!(f, "Constant({velocity:?})"),
            GraphField::Peano => write!(f, "Peano"),
            GraphField::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone)]
pub enum PvfKind {
    /// `V[mu] = mu (x) delta_{v(x)}`
    Graph(GraphField),
    /// `V[mu] = mu (x) omega`
    ConstantFiber(DiscreteMeasure),
    /// One-dimensional splitting at the weighted median.
    SplittingParticle,
    Custom(CustomEval),
}

impl fmt::Debug for PvfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PvfKind::Graph(g) => write!(f, "Graph({g:?})"),
            PvfKind::ConstantFiber(w) => write!(f, "ConstantFiber({} atoms)", w.len()),
            PvfKind::SplittingParticle => write!(f, "SplittingParticle"),
            PvfKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A named probability vector field.
#[derive(Debug, Clone)]
pub struct PvfSpec {
    pub name: String,
    pub kind: PvfKind,
}

/// The splitting point of a 1-D measure and the masses around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianData {
    /// `B(mu)`: the smallest atom whose CDF exceeds one half.
    pub split: f64,
    /// `mu(]-inf, B]) - 1/2`
    pub eta: f64,
    pub mass_at_split: f64,
    /// `mu(]-inf, B[)`
    pub cdf_left: f64,
    /// Index of the splitting atom in the canonical measure.
    pub index: usize,
}

/// Position-indexed mean velocity of a PVF evaluated at a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricField {
    pub base: DiscreteMeasure,
    velocities: Vec<f64>,
}

impl BarycentricField {
    pub fn velocity(&self, i: usize) -> &[f64] {
        let d = self.base.dim();
        &self.velocities[i * d..(i + 1) * d]
    }

    /// Mean velocity at the base atom within `tol` of `x`.
    pub fn at(&self, x: &[f64], tol: f64) -> Option<&[f64]> {
        self.base.find_atom(x, tol).map(|i| self.velocity(i))
    }

    pub fn velocities(&self) -> Vec<Vec<f64>> {
        (0..self.base.len()).map(|i| self.velocity(i).to_vec()).collect()
    }

    /// `mu (x) delta_{w(x)}`.
    pub fn to_lifted(&self) -> Result<LiftedMeasure> {
        LiftedMeasure::graph(&self.base, &self.velocities())
    }
}

pub fn median_data(mu: &DiscreteMeasure) -> Result<MedianData> {
    if mu.dim() != 1 {
        return Err(MdeError::DimMismatch {
            expected: 1,
            found: mu.dim(),
        });
    }
    let mut cdf_left = 0.0;
    for (i, (x, w)) in mu.iter().enumerate() {
        let cdf = cdf_left + w;
        if cdf > 0.5 + CDF_TOL || i + 1 == mu.len() {
            return Ok(MedianData {
                split: x[0],
                eta: (cdf - 0.5).max(0.0),
                mass_at_split: w,
                cdf_left,
                index: i,
            });
        }
        cdf_left = cdf;
    }
    unreachable!("canonical measures are nonempty")
}

fn splitting_lift(mu: &DiscreteMeasure) -> Result<LiftedMeasure> {
    let md = median_data(mu)?;
    let mut coords = Vec::with_capacity(2 * (mu.len() + 1));
    let mut weights = Vec::with_capacity(mu.len() + 1);
    for (i, (x, w)) in mu.iter().enumerate() {
        if i < md.index {
            coords.extend([x[0], -1.0]);
            weights.push(w);
        } else if i > md.index {
            coords.extend([x[0], 1.0]);
            weights.push(w);
        } else {
            let right = md.eta;
            let left = (0.5 - md.cdf_left).max(0.0);
            let fiber_total = right + left;
            // fiber weights eta/m and (1/2 - F(B-))/m sum to one up to rounding
            coords.extend([x[0], 1.0, x[0], -1.0]);
            weights.push(w * right / fiber_total);
            weights.push(w * left / fiber_total);
        }
    }
    LiftedMeasure::new(1, coords, weights)
}

impl PvfSpec {
    pub fn new(name: impl Into<String>, kind: PvfKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn graph(name: impl Into<String>, field: GraphField) -> Self {
        Self::new(name, PvfKind::Graph(field))
    }

    pub fn constant_fiber(name: impl Into<String>, omega: DiscreteMeasure) -> Self {
        Self::new(name, PvfKind::ConstantFiber(omega))
    }

    pub fn splitting() -> Self {
        Self::new("splitting", PvfKind::SplittingParticle)
    }

    /// In-process extension point: any rule returning a lifted measure over
    /// its input.
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&DiscreteMeasure) -> Result<LiftedMeasure> + Send + Sync + 'static,
    {
        Self::new(name, PvfKind::Custom(Arc::new(f)))
    }

    /// `V[mu]`.
    pub fn eval(&self, mu: &DiscreteMeasure) -> Result<LiftedMeasure> {
        match &self.kind {
            PvfKind::Graph(field) => {
                let vs: Vec<Vec<f64>> = mu.iter().map(|(x, _)| field.eval(x)).collect();
                LiftedMeasure::graph(mu, &vs)
            }
            PvfKind::ConstantFiber(omega) => LiftedMeasure::product(mu, omega),
            PvfKind::SplittingParticle => splitting_lift(mu),
            PvfKind::Custom(f) => {
                let v = f(mu)?;
                if v.dim() != mu.dim() {
                    return Err(MdeError::DimMismatch {
                        expected: mu.dim(),
                        found: v.dim(),
                    });
                }
                Ok(v)
            }
        }
    }

    /// Fiber means `w[mu](x)` over the atoms of `mu`.
    pub fn barycentric_field(&self, mu: &DiscreteMeasure) -> Result<BarycentricField> {
        let velocities = match &self.kind {
            PvfKind::Graph(field) => {
                let mut out = Vec::with_capacity(mu.coords().len());
                for (x, _) in mu.iter() {
                    let v = field.eval(x);
                    if v.len() != mu.dim() {
                        return Err(MdeError::DimMismatch {
                            expected: mu.dim(),
                            found: v.len(),
                        });
                    }
                    out.extend(v);
                }
                out
            }
            _ => {
                let dis = self.eval(mu)?.disintegrate();
                let mut out = Vec::with_capacity(mu.coords().len());
                for (x, _) in mu.iter() {
                    let fiber = dis.fiber_at(x).ok_or_else(|| MdeError::InvalidMeasure(format!(
                        "PVF '{}' has no fiber over atom {x:?}",
                        self.name
                    )))?;
                    out.extend(fiber.mean());
                }
                out
            }
        };
        Ok(BarycentricField {
            base: mu.clone(),
            velocities,
        })
    }

    /// `max over samples of sup |v| / (1 + sup |x|)`: an empirical estimate of
    /// the sublinear growth constant.
    pub fn sublinearity_bound(&self, samples: &[DiscreteMeasure]) -> Result<f64> {
        if samples.is_empty() {
            return Err(MdeError::EmptyInput);
        }
        let mut c = 0.0f64;
        for mu in samples {
            let v = self.eval(mu)?;
            c = c.max(v.max_speed() / (1.0 + mu.support_radius()));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(p: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(p, w).unwrap()
    }

    fn pm_one() -> DiscreteMeasure {
        m1(&[-1.0, 1.0], &[0.5, 0.5])
    }

    #[test]
    fn graph_zero_lifts_to_zero_velocity() {
        let mu = m1(&[-1.0, 0.5, 2.0], &[0.2, 0.3, 0.5]);
        let v = PvfSpec::graph("zero", GraphField::Zero).eval(&mu).unwrap();
        let d = v.disintegrate();
        assert_eq!(d.base, mu);
        assert!(d.fibers.iter().all(|f| *f == DiscreteMeasure::dirac(&[0.0])));
    }

    #[test]
    fn splitting_at_a_dirac() {
        let v = PvfSpec::splitting().eval(&DiscreteMeasure::dirac(&[0.3])).unwrap();
        let d = v.disintegrate();
        assert_eq!(d.base, DiscreteMeasure::dirac(&[0.3]));
        assert_eq!(d.fibers[0], pm_one());
    }

    #[test]
    fn splitting_on_two_atoms() {
        let mu = m1(&[0.0, 1.0], &[0.5, 0.5]);
        let md = median_data(&mu).unwrap();
        assert_eq!((md.split, md.eta, md.cdf_left), (1.0, 0.5, 0.5));
        let d = PvfSpec::splitting().eval(&mu).unwrap().disintegrate();
        assert_eq!(d.fiber_at(&[0.0]).unwrap(), &DiscreteMeasure::dirac(&[-1.0]));
        assert_eq!(d.fiber_at(&[1.0]).unwrap(), &DiscreteMeasure::dirac(&[1.0]));
    }

    #[test]
    fn median_data_examples() {
        let md = median_data(&DiscreteMeasure::dirac(&[0.0])).unwrap();
        assert_eq!((md.split, md.eta, md.mass_at_split, md.cdf_left), (0.0, 0.5, 1.0, 0.0));

        let t = 0.37;
        let md = median_data(&m1(&[-t, t], &[0.5, 0.5])).unwrap();
        assert_eq!((md.split, md.eta), (t, 0.5));

        let md = median_data(&m1(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], &[0.25; 4])).unwrap();
        assert_eq!(md.split, 2.0 / 3.0);
        assert!((md.eta - 0.25).abs() < 1e-15);

        assert!(median_data(&DiscreteMeasure::dirac(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn splitting_rejects_planar_measures() {
        let err = PvfSpec::splitting().eval(&DiscreteMeasure::dirac(&[0.0, 1.0])).unwrap_err();
        assert!(matches!(err, MdeError::DimMismatch { .. }));
    }

    #[test]
    fn barycentric_field_examples() {
        let w = PvfSpec::splitting()
            .barycentric_field(&DiscreteMeasure::dirac(&[2.0]))
            .unwrap();
        assert_eq!(w.velocity(0), &[0.0]);

        let spec = PvfSpec::constant_fiber("binomial", pm_one());
        let mu = m1(&[-3.0, 0.0, 4.0], &[0.25, 0.25, 0.5]);
        let w = spec.barycentric_field(&mu).unwrap();
        assert!((0..3).all(|i| w.velocity(i) == [0.0]));

        let w = PvfSpec::graph("peano", GraphField::Peano)
            .barycentric_field(&DiscreteMeasure::dirac(&[-1.0]))
            .unwrap();
        assert_eq!(w.velocity(0), &[2.0]);
        assert_eq!(w.at(&[-1.0], 1e-12), Some(&[2.0][..]));
    }

    #[test]
    fn sublinearity_examples() {
        let mu = m1(&[-1.0, 4.0], &[0.5, 0.5]);
        let zero = PvfSpec::graph("zero", GraphField::Zero);
        assert_eq!(zero.sublinearity_bound(std::slice::from_ref(&mu)).unwrap(), 0.0);

        let spec = PvfSpec::constant_fiber("binomial", pm_one());
        assert_eq!(spec.sublinearity_bound(&[DiscreteMeasure::dirac(&[0.0])]).unwrap(), 1.0);

        let c = PvfSpec::splitting()
            .sublinearity_bound(&[DiscreteMeasure::dirac(&[5.0])])
            .unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-15);
        assert!(zero.sublinearity_bound(&[]).is_err());
    }

    #[test]
    fn custom_pvf_is_dimension_checked() {
        let spec = PvfSpec::custom("bad", |_mu| {
            LiftedMeasure::from_pairs(&[(vec![0.0, 0.0], vec![0.0, 0.0])], &[1.0])
        });
        assert!(spec.eval(&DiscreteMeasure::dirac(&[0.0])).is_err());
    }
}
