use std::borrow::Cow;

use num_complex::Complex64;

use super::fft;
use super::grid::GridSpec;
use crate::error::{invalid, Result, SnseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Debug)]
enum Data {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Real scalar field on the torus, held either as grid samples or as
/// (Hermitian-symmetric) Fourier coefficients.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    data: Data,
}

fn check_finite_real(values: &[f64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(SnseError::NonFinite { context, index }),
        None => Ok(()),
    }
}

fn check_finite_complex(values: &[Complex64], context: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        Some(index) => Err(SnseError::NonFinite { context, index }),
        None => Ok(()),
    }
}

fn check_len(grid: &GridSpec, found: usize, context: &'static str) -> Result<()> {
    if found != grid.len() {
        return Err(SnseError::Length {
            context,
            expected: grid.len(),
            found,
        });
    }
    Ok(())
}

impl ScalarField {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            data: Data::Physical(vec![0.0; grid.len()]),
        }
    }

    pub fn from_physical(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        check_len(grid, values.len(), "physical samples")?;
        Ok(Self {
            grid: grid.clone(),
            data: Data::Physical(values),
        })
    }

    pub fn from_spectral(grid: &GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(grid, coeffs.len(), "spectral coefficients")?;
        Ok(Self {
            grid: grid.clone(),
            data: Data::Spectral(coeffs),
        })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        Self {
            grid: grid.clone(),
            data: Data::Physical(values),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    /// Flips the representation. The requested direction must match the
    /// current one (forward from physical, inverse from spectral).
    pub fn transform(&self, direction: Direction) -> Result<Self> {
        let n = self.grid.n();
        match (&self.data, direction) {
            (Data::Physical(v), Direction::Forward) => {
                check_finite_real(v, "forward transform input")?;
                Ok(Self {
                    grid: self.grid.clone(),
                    data: Data::Spectral(fft::forward_real(n, v)),
                })
            }
            (Data::Spectral(c), Direction::Inverse) => {
                check_finite_complex(c, "inverse transform input")?;
                Ok(Self {
                    grid: self.grid.clone(),
                    data: Data::Physical(fft::inverse_real(n, c)),
                })
            }
            (Data::Physical(_), Direction::Inverse) => {
                Err(invalid("direction", "inverse transform of a physical field"))
            }
            (Data::Spectral(_), Direction::Forward) => {
                Err(invalid("direction", "forward transform of a spectral field"))
            }
        }
    }

    pub fn to_spectral(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            data: Data::Spectral(self.coefficients().into_owned()),
        }
    }

    pub fn to_physical(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            data: Data::Physical(self.values().into_owned()),
        }
    }

    /// Grid samples, transforming if needed.
    pub fn values(&self) -> Cow<'_, [f64]> {
        match &self.data {
            Data::Physical(v) => Cow::Borrowed(v),
            Data::Spectral(c) => Cow::Owned(fft::inverse_real(self.grid.n(), c)),
        }
    }

    /// Fourier coefficients, transforming if needed.
    pub fn coefficients(&self) -> Cow<'_, [Complex64]> {
        match &self.data {
            Data::Spectral(c) => Cow::Borrowed(c),
            Data::Physical(v) => Cow::Owned(fft::forward_real(self.grid.n(), v)),
        }
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        match self.data {
            Data::Spectral(c) => c,
            Data::Physical(v) => fft::forward_real(self.grid.n(), &v),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        match self.data {
            Data::Physical(v) => v,
            Data::Spectral(c) => fft::inverse_real(self.grid.n(), &c),
        }
    }

    /// Spatial average over the torus.
    pub fn mean(&self) -> f64 {
        match &self.data {
            Data::Spectral(c) => c[0].re,
            Data::Physical(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let data = match &self.data {
            Data::Physical(v) => Data::Physical(v.iter().map(|x| x * factor).collect()),
            Data::Spectral(c) => Data::Spectral(c.iter().map(|x| x * factor).collect()),
        };
        Self {
            grid: self.grid.clone(),
            data,
        }
    }

    /// `self + factor * other` in the representation of `self`.
    pub fn add_scaled(&self, other: &ScalarField, factor: f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let data = match &self.data {
            Data::Physical(v) => {
                let o = other.values();
                Data::Physical(v.iter().zip(o.iter()).map(|(a, b)| a + factor * b).collect())
            }
            Data::Spectral(c) => {
                let o = other.coefficients();
                Data::Spectral(c.iter().zip(o.iter()).map(|(a, b)| a + b * factor).collect())
            }
        };
        Ok(Self {
            grid: self.grid.clone(),
            data,
        })
    }
}

pub(crate) fn ensure_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(SnseError::GridMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(())
}

/// Three-component real vector field; all components share one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        ensure_same_grid(components[0].grid(), components[1].grid())?;
        ensure_same_grid(components[0].grid(), components[2].grid())?;
        Ok(Self { components })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            components: [ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)],
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut parts = [
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
            Vec::with_capacity(grid.len()),
        ];
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for j in 0..3 {
                parts[j].push(v[j]);
            }
        }
        Self::from_physical(grid, parts).expect("lengths match grid")
    }

    pub fn from_physical(grid: &GridSpec, parts: [Vec<f64>; 3]) -> Result<Self> {
        let [a, b, c] = parts;
        Ok(Self {
            components: [
                ScalarField::from_physical(grid, a)?,
                ScalarField::from_physical(grid, b)?,
                ScalarField::from_physical(grid, c)?,
            ],
        })
    }

    pub fn from_spectral(grid: &GridSpec, parts: [Vec<Complex64>; 3]) -> Result<Self> {
        let [a, b, c] = parts;
        Ok(Self {
            components: [
                ScalarField::from_spectral(grid, a)?,
                ScalarField::from_spectral(grid, b)?,
                ScalarField::from_spectral(grid, c)?,
            ],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn to_spectral(&self) -> Self {
        Self {
            components: self.components.clone().map(|c| c.to_spectral()),
        }
    }

    pub fn to_physical(&self) -> Self {
        Self {
            components: self.components.clone().map(|c| c.to_physical()),
        }
    }

    pub fn coefficients(&self) -> [Vec<Complex64>; 3] {
        [0, 1, 2].map(|j| self.components[j].coefficients().into_owned())
    }

    pub fn values(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|j| self.components[j].values().into_owned())
    }

    pub fn into_coefficients(self) -> [Vec<Complex64>; 3] {
        self.components.map(ScalarField::into_coefficients)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: [0, 1, 2].map(|j| self.components[j].scaled(factor)),
        }
    }

    /// `self + factor * other`, componentwise.
    pub fn add_scaled(&self, other: &VectorField, factor: f64) -> Result<Self> {
        let [a, b, c] = [0, 1, 2].map(|j| self.components[j].add_scaled(&other.components[j], factor));
        Ok(Self {
            components: [a?, b?, c?],
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    /// Largest pointwise absolute component value.
    pub fn sup_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.values().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
            .fold(0.0, f64::max)
    }
}
