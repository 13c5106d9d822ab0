//! Finite positive energy measures μ = μ_ac + μ_s and compatible pairs (u, μ).
//!
//! The absolutely continuous part is a non-negative sampled density; the
//! singular part is a finite list of point masses.  Compatibility of a pair
//! means dμ_ac = (u² + uₓ²) dx at the shared nodes, the discrete membership
//! test for the solution space of conservative data.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// A point mass of the singular part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Endpoint convention for the cumulative distribution function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    /// μ((−∞, x))
    Open,
    /// μ((−∞, x])
    Closed,
}

/// Finite positive measure: non-negative density plus sorted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMeasure {
    ac_density: GridFunction,
    atoms: Vec<Atom>,
    /// cumulative trapezoid mass of the density up to each node
    cum: Vec<f64>,
}

impl EnergyMeasure {
    pub fn new(ac_density: GridFunction, atoms: Vec<Atom>) -> Result<Self> {
        if ac_density.values().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("negative ac density".into()));
        }
        for a in &atoms {
            if !(a.mass > 0.0) || !a.mass.is_finite() || !a.position.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom ({}, {}) must have finite position and positive mass",
                    a.position, a.mass
                )));
            }
        }
        for w in atoms.windows(2) {
            if !(w[1].position > w[0].position) {
                return Err(Error::InvalidInput(
                    "atoms must be sorted with distinct positions".into(),
                ));
            }
        }
        let nodes = ac_density.nodes();
        let dens = ac_density.values();
        let mut cum = vec![0.0; nodes.len()];
        for i in 0..nodes.len() - 1 {
            cum[i + 1] = cum[i] + 0.5 * (dens[i] + dens[i + 1]) * (nodes[i + 1] - nodes[i]);
        }
        let m = Self {
            ac_density,
            atoms,
            cum,
        };
        if !m.total_mass().is_finite() {
            return Err(Error::InvalidInput("total mass not finite".into()));
        }
        Ok(m)
    }

    /// The zero measure on the grid of `reference`.
    pub fn zero_on(reference: &GridFunction) -> Self {
        let nodes = reference.nodes().to_vec();
        let n = nodes.len();
        let g = GridFunction::new(nodes, vec![0.0; n], vec![0.0; n]).unwrap();
        Self::new(g, Vec::new()).unwrap()
    }

    pub fn ac_density(&self) -> &GridFunction {
        &self.ac_density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Trapezoid mass of the density plus the atom masses.
    pub fn total_mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0) + self.singular_mass()
    }

    /// Sum of the atom masses.
    pub fn singular_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Mass of the density on (−∞, x]: exact integral of the piecewise-linear
    /// interpolant (piecewise quadratic in x), constant outside the grid.
    fn ac_cdf(&self, x: f64) -> f64 {
        let nodes = self.ac_density.nodes();
        let dens = self.ac_density.values();
        if x <= nodes[0] {
            return 0.0;
        }
        if x >= *nodes.last().unwrap() {
            return *self.cum.last().unwrap();
        }
        let i = match nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.cum[i],
            Err(i) => i - 1,
        };
        let h = nodes[i + 1] - nodes[i];
        let t = x - nodes[i];
        self.cum[i] + dens[i] * t + 0.5 * (dens[i + 1] - dens[i]) * t * t / h
    }

    /// μ((−∞, x)) or μ((−∞, x]) depending on the endpoint convention.
    pub fn cdf(&self, x: f64, endpoint: Endpoint) -> f64 {
        let mut m = self.ac_cdf(x);
        for a in &self.atoms {
            let include = match endpoint {
                Endpoint::Open => a.position < x,
                Endpoint::Closed => a.position <= x,
            };
            if include {
                m += a.mass;
            } else if a.position >= x {
                break;
            }
        }
        m
    }

    /// The push-forward of μ under x ↦ −x: u(x,t) ↦ −u(−x,t) symmetry partner.
    pub fn reflected(&self) -> EnergyMeasure {
        let dens = self.ac_density.reflected();
        // density is a magnitude; undo the value negation of reflected()
        let nodes = dens.nodes().to_vec();
        let values: Vec<f64> = dens.values().iter().map(|v| -v).collect();
        let derivative = dens.derivative().to_vec();
        let g = GridFunction::new(nodes, values, derivative).unwrap();
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom {
                position: -a.position,
                mass: a.mass,
            })
            .collect();
        EnergyMeasure::new(g, atoms).unwrap()
    }
}

/// A compatible pair (u, μ): the ac density agrees with u² + uₓ² at the nodes
/// shared by both grids, within `compat_tol`.
#[derive(Debug, Clone)]
pub struct DataPair {
    pub u: GridFunction,
    pub mu: EnergyMeasure,
    pub compat_tol: f64,
}

impl DataPair {
    pub fn new(u: GridFunction, mu: EnergyMeasure, compat_tol: f64) -> Result<Self> {
        if compat_tol < 0.0 {
            return Err(Error::InvalidParameter("compat_tol must be >= 0".into()));
        }
        let (mut i, mut j) = (0usize, 0usize);
        let un = u.nodes();
        let mn = mu.ac_density().nodes();
        while i < un.len() && j < mn.len() {
            if un[i] == mn[j] {
                let expect = u.values()[i] * u.values()[i] + u.derivative()[i] * u.derivative()[i];
                let got = mu.ac_density().values()[j];
                if (got - expect).abs() > compat_tol {
                    return Err(Error::InvalidInput(format!(
                        "pair incompatible at x = {}: density {} vs u^2+ux^2 {}",
                        un[i], got, expect
                    )));
                }
                i += 1;
                j += 1;
            } else if un[i] < mn[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self { u, mu, compat_tol })
    }

    /// Build the pair (u, (u² + uₓ²) dx + atoms): compatible with tolerance 0
    /// by construction.
    pub fn from_velocity(u: GridFunction, atoms: Vec<Atom>) -> Result<Self> {
        let dens_vals: Vec<f64> = u
            .values()
            .iter()
            .zip(u.derivative())
            .map(|(v, d)| v * v + d * d)
            .collect();
        let dens = GridFunction::from_samples(u.nodes().to_vec(), dens_vals)?;
        let mu = EnergyMeasure::new(dens, atoms)?;
        Self::new(u, mu, 0.0)
    }

    /// Generalized energy Ẽ(u, μ) = μ(ℝ).
    pub fn tilde_e(&self) -> f64 {
        self.mu.total_mass()
    }

    /// Generalized momentum-type functional F̃(u, μ) = ∫ u dμ: trapezoid of
    /// u·density on the density grid plus Σ u(aᵢ) mᵢ.
    pub fn tilde_f(&self) -> f64 {
        let dens = self.mu.ac_density();
        let samples: Vec<f64> = dens
            .nodes()
            .iter()
            .zip(dens.values())
            .map(|(&x, &d)| self.u.value_at(x) * d)
            .collect();
        let ac = crate::grid::trapezoid(dens.nodes(), &samples);
        let s: f64 = self
            .mu
            .atoms()
            .iter()
            .map(|a| self.u.value_at(a.position) * a.mass)
            .sum();
        ac + s
    }

    pub fn reflected(&self) -> DataPair {
        DataPair {
            u: self.u.reflected(),
            mu: self.mu.reflected(),
            compat_tol: self.compat_tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn density_2exp() -> EnergyMeasure {
        // density 2 e^{-2|x|} on a kink-aligned grid
        let grid = crate::scenarios::kink_grid(18.0, 1e-3, &[0.0]);
        let g = GridFunction::from_closed_form(
            grid,
            |x| 2.0 * (-2.0 * x.abs()).exp(),
            |x| -4.0 * x.signum() * (-2.0 * x.abs()).exp(),
            &[crate::grid::Kink {
                x: 0.0,
                left_slope: 4.0,
                right_slope: -4.0,
            }],
        )
        .unwrap();
        EnergyMeasure::new(g, Vec::new()).unwrap()
    }

    #[test]
    fn cdf_of_exponential_density() {
        let mu = density_2exp();
        // int_{-inf}^0 2 e^{2s} ds = 1
        assert!((mu.cdf(0.0, Endpoint::Closed) - 1.0).abs() < 1e-4);
        assert!((mu.total_mass() - 2.0).abs() < 1e-4);
        // cdf at the rightmost node equals the total mass
        let xr = mu.ac_density().x_max();
        assert!((mu.cdf(xr, Endpoint::Closed) - mu.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn atom_endpoint_convention() {
        let base = GridFunction::from_samples(vec![-1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let mu = EnergyMeasure::new(
            base,
            vec![Atom {
                position: 0.0,
                mass: 1.0,
            }],
        )
        .unwrap();
        assert_eq!(mu.cdf(-1.0, Endpoint::Closed), 0.0);
        assert_eq!(mu.cdf(0.0, Endpoint::Closed), 1.0);
        assert_eq!(mu.cdf(0.0, Endpoint::Open), 0.0);
        assert_eq!(mu.singular_mass(), 1.0);
    }

    #[test]
    fn singular_mass_sums_atoms() {
        let base = GridFunction::from_samples(vec![-1.0, 3.0], vec![0.0, 0.0]).unwrap();
        let mu = EnergyMeasure::new(
            base,
            vec![
                Atom {
                    position: 0.0,
                    mass: 1.0,
                },
                Atom {
                    position: 2.0,
                    mass: 0.5,
                },
            ],
        )
        .unwrap();
        assert_eq!(mu.singular_mass(), 1.5);
        let pure = density_2exp();
        assert_eq!(pure.singular_mass(), 0.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        let base = GridFunction::from_samples(vec![-1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(EnergyMeasure::new(
            base.clone(),
            vec![Atom {
                position: 0.0,
                mass: 0.0
            }]
        )
        .is_err());
        assert!(EnergyMeasure::new(
            base,
            vec![
                Atom {
                    position: 0.0,
                    mass: 1.0
                },
                Atom {
                    position: 0.0,
                    mass: 1.0
                }
            ]
        )
        .is_err());
    }

    #[test]
    fn from_velocity_is_compatible_with_zero_tolerance() {
        let u = crate::scenarios::make_peakon(
            1.0,
            0.0,
            &crate::scenarios::ProfileGrid::with_step(15.0, 0.01),
        )
        .unwrap()
        .u;
        let pair = DataPair::from_velocity(u, Vec::new()).unwrap();
        assert_eq!(pair.compat_tol, 0.0);
    }

    #[test]
    fn cdf_is_monotone() {
        let mu = density_2exp();
        let mut prev = f64::NEG_INFINITY;
        for i in -40..=40 {
            let x = i as f64 * 0.5;
            let v = mu.cdf(x, Endpoint::Closed);
            assert!(v >= prev);
            prev = v;
        }
    }
}
