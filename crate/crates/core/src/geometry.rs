//! Hessian metrics, cubic forms and alpha-connections of convex energies.
//!
//! Index placement is carried by [`CoordinateTag`]: arrays computed in the
//! primal coordinates of an energy have the index placement of its Hessian,
//! arrays in dual coordinates the opposite one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::convex::multi::{check_positive_definite, symmetric_eigenvalues, EIGENVALUE_FLOOR};
use crate::convex::{ConjugatePair, Energy};
use crate::error::{HtodaError, Result};
use crate::numeric::fd_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnergyTag {
    K,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateTag {
    Primal,
    Dual,
}

const SYMMETRY_TOL: f64 = 1e-12;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn nested(n: usize, flat: &[f64]) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| flat[(a * n + b) * n..(a * n + b + 1) * n].to_vec())
                .collect()
        })
        .collect()
}

/// Positive-definite symmetric metric at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComponents {
    pub g: DMatrix<f64>,
    pub coordinate_tag: CoordinateTag,
    pub energy_tag: EnergyTag,
    eigenvalues: Vec<f64>,
}

impl MetricComponents {
    pub fn new(g: DMatrix<f64>, energy_tag: EnergyTag, coordinate_tag: CoordinateTag) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(HtodaError::parameter("metric must be a non-empty square matrix"));
        }
        let scale = g.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(HtodaError::parameter(format!(
                        "metric is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eigenvalues = check_positive_definite(&g, "metric")?;
        Ok(MetricComponents {
            g,
            coordinate_tag,
            energy_tag,
            eigenvalues,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self
            .g
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| self.g.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(self.n(), self.n())));
        0.5 * (&inv + inv.transpose())
    }
}

/// Totally symmetric third-derivative array, row-major `c[(a*n + b)*n + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicComponents {
    pub n: usize,
    pub c: Vec<f64>,
    pub coordinate_tag: CoordinateTag,
    pub energy_tag: EnergyTag,
}

impl CubicComponents {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.c[(a * self.n + b) * self.n + c]
    }

    /// Largest difference between entries related by an index permutation.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = self.get(a, b, c);
                    for w in [self.get(a, c, b), self.get(b, a, c), self.get(b, c, a), self.get(c, a, b), self.get(c, b, a)] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub n: usize,
    pub alpha: f64,
    pub gamma: Vec<f64>,
    pub coordinate_tag: CoordinateTag,
}

impl ConnectionCoefficients {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.gamma[(a * self.n + b) * self.n + c]
    }
}

/// Hessian of `f` at `x`.
pub fn metric_at(
    f: &Energy,
    x: &[f64],
    energy_tag: EnergyTag,
    coordinate_tag: CoordinateTag,
) -> Result<MetricComponents> {
    MetricComponents::new(f.hessian(x)?, energy_tag, coordinate_tag)
}

/// Third derivatives of `f` at `x`.
pub fn cubic_at(
    f: &Energy,
    x: &[f64],
    energy_tag: EnergyTag,
    coordinate_tag: CoordinateTag,
) -> Result<CubicComponents> {
    Ok(CubicComponents {
        n: f.dim(),
        c: f.third_derivative(x)?,
        coordinate_tag,
        energy_tag,
    })
}

/// `((1 - alpha)/2) C`.
pub fn alpha_connection(cubic: &CubicComponents, alpha: f64) -> ConnectionCoefficients {
    let factor = 0.5 * (1.0 - alpha);
    ConnectionCoefficients {
        n: cubic.n,
        alpha,
        gamma: cubic.c.iter().map(|v| factor * v).collect(),
        coordinate_tag: cubic.coordinate_tag,
    }
}

/// Max-norm of `Gamma(alpha) + Gamma(-alpha) - d_a g^{bc}`, with the metric
/// derivative taken by central differences of `metric_field`.
pub fn connection_duality_residual<M>(
    cubic: &CubicComponents,
    metric_field: M,
    x: &[f64],
    alpha: f64,
) -> Result<f64>
where
    M: Fn(&[f64]) -> Result<MetricComponents>,
{
    let n = cubic.n;
    if x.len() != n {
        return Err(HtodaError::parameter(format!(
            "point has dimension {}, cubic form has {n}",
            x.len()
        )));
    }
    let plus = alpha_connection(cubic, alpha);
    let minus = alpha_connection(cubic, -alpha);
    let mut worst: f64 = 0.0;
    let mut xp = x.to_vec();
    for a in 0..n {
        let h = fd_step(x[a]);
        xp[a] = x[a] + h;
        let gp = metric_field(&xp)?.g;
        xp[a] = x[a] - h;
        let gm = metric_field(&xp)?.g;
        xp[a] = x[a];
        for b in 0..n {
            for c in 0..n {
                let dg = (gp[(b, c)] - gm[(b, c)]) / (2.0 * h);
                let lhs = plus.get(a, b, c) + minus.get(a, b, c);
                worst = worst.max((lhs - dg).abs());
            }
        }
    }
    Ok(worst)
}

/// `|h(x) * d(primal gradient)^{-1}/dy - 1|`: the primal Hessian times the
/// Jacobian of the inverse gradient map, which should be the identity.
pub fn basis_pairing_check(pair: &ConjugatePair, x: f64) -> Result<f64> {
    let h = pair.primal.d2(x)?;
    let jac = pair.dual.d2(pair.primal.d1(x)?)?;
    Ok((h * jac - 1.0).abs())
}

/// Multivariate variant of [`basis_pairing_check`].
pub fn basis_pairing_check_energy(f: &Energy, x: &[f64]) -> Result<f64> {
    let h = f.hessian(x)?;
    let y = f.gradient(x)?;
    let jac = f.conjugate()?.hessian(&y)?;
    let prod = h * jac;
    let n = prod.nrows();
    Ok((prod - DMatrix::identity(n, n)).amax())
}

/// Everything the CLI reports about an energy at a point.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub point: Vec<f64>,
    pub energy_tag: EnergyTag,
    pub coordinate_tag: CoordinateTag,
    pub metric: Vec<Vec<f64>>,
    pub inverse_metric: Vec<Vec<f64>>,
    pub cubic: Vec<Vec<Vec<f64>>>,
    pub gamma_alpha: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    pub eigenvalues: Vec<f64>,
}

pub fn geometry_report(
    f: &Energy,
    x: &[f64],
    alphas: &[f64],
    energy_tag: EnergyTag,
    coordinate_tag: CoordinateTag,
) -> Result<GeometryReport> {
    let metric = metric_at(f, x, energy_tag, coordinate_tag)?;
    let cubic = cubic_at(f, x, energy_tag, coordinate_tag)?;
    let n = cubic.n;
    let gamma_alpha = alphas
        .iter()
        .map(|&a| (format!("{a}"), nested(n, &alpha_connection(&cubic, a).gamma)))
        .collect();
    Ok(GeometryReport {
        point: x.to_vec(),
        energy_tag,
        coordinate_tag,
        metric: rows(&metric.g),
        inverse_metric: rows(&metric.inverse()),
        cubic: nested(n, &cubic.c),
        gamma_alpha,
        eigenvalues: metric.eigenvalues().to_vec(),
    })
}

/// Eigenvalues of a symmetric matrix without the positivity requirement,
/// with round-off zeros snapped to `0`.
pub fn spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    symmetric_eigenvalues(m)
        .into_iter()
        .map(|v| if v.abs() < EIGENVALUE_FLOOR { 0.0 } else { v })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{make_power_potential, make_toda_potential, SeparableConvexFunction};

    fn dual_energy(pair: &ConjugatePair, n: usize) -> Energy {
        Energy::Separable(SeparableConvexFunction::uniform(&pair.flipped(), n).unwrap())
    }

    #[test]
    fn toda_metric_at_origin() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let u = Energy::Separable(SeparableConvexFunction::uniform(&toda, 2).unwrap());
        let m = metric_at(&u, &[0.0, 0.0], EnergyTag::U, CoordinateTag::Primal).unwrap();
        assert_eq!(m.g, DMatrix::identity(2, 2));
    }

    #[test]
    fn toda_dual_cubic() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let c = cubic_at(&dual_energy(&toda, 1), &[0.0], EnergyTag::U, CoordinateTag::Dual).unwrap();
        assert_eq!(c.c, vec![1.0]);
    }

    #[test]
    fn power_dual_cubic() {
        let p = make_power_potential(1.5).unwrap();
        let c = cubic_at(&dual_energy(&p, 1), &[1.0], EnergyTag::U, CoordinateTag::Dual).unwrap();
        assert!((c.c[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn alpha_scaling() {
        let c = CubicComponents {
            n: 1,
            c: vec![3.0],
            coordinate_tag: CoordinateTag::Dual,
            energy_tag: EnergyTag::U,
        };
        assert_eq!(alpha_connection(&c, 1.0).gamma, vec![0.0]);
        assert_eq!(alpha_connection(&c, -1.0).gamma, vec![3.0]);
        assert_eq!(alpha_connection(&c, 0.0).gamma, vec![1.5]);
    }

    #[test]
    fn duality_residual_small() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let u = dual_energy(&toda, 1);
        let c = cubic_at(&u, &[0.0], EnergyTag::U, CoordinateTag::Dual).unwrap();
        let field = |y: &[f64]| metric_at(&u, y, EnergyTag::U, CoordinateTag::Dual);
        assert!(connection_duality_residual(&c, field, &[0.0], 0.5).unwrap() < 1e-6);
    }

    #[test]
    fn pairing() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        assert!(basis_pairing_check(&toda, 0.3).unwrap() < 1e-8);
    }

    #[test]
    fn report_json_shape() {
        let toda = make_toda_potential(1.0, 1.0).unwrap();
        let r = geometry_report(&dual_energy(&toda, 1), &[0.0], &[-1.0, 0.0, 1.0], EnergyTag::U, CoordinateTag::Dual).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["gamma_alpha"]["1"][0][0][0], 0.0);
        assert_eq!(v["gamma_alpha"]["-1"], v["cubic"]);
        assert_eq!(v["metric"][0][0], 1.0);
    }
}
