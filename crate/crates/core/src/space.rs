//! The weighted space X_{m,γ}: the weight ρ_m(x) = |x|^{γ+2m}/(x_1⋯x_m), the
//! canonical singular profile ψ_0 = c_{m,γ}/ρ_m, symbolic initial-data
//! descriptors, weighted sup norms, and the dilations D_λ^σ and Γ_λ^σ.

use std::sync::Arc;

use crate::domain::{DomainSpec, Field, PointFn, SectorGrid};
use crate::error::{Error, Result};
use crate::solver::Trajectory;

/// ψ_0(x) = c_{m,γ} x_1⋯x_m |x|^{−γ−2m}, positive on the open sector and
/// homogeneous of degree −(γ+m).
pub fn psi0(x: &[f64], spec: &DomainSpec) -> Result<f64> {
    if !spec.contains(x) {
        return Err(Error::OutOfDomain(format!("{x:?} not strictly inside the sector")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(spec.c_m_gamma()
        * spec.dirichlet_product(x)
        * r2.powf(-(spec.gamma + 2.0 * spec.m as f64) / 2.0))
}

/// The weight ρ_m(x) = |x|^{γ+2m}/(x_1⋯x_m); satisfies ρ_m·ψ_0 = c_{m,γ}.
pub fn weight(x: &[f64], spec: &DomainSpec) -> Result<f64> {
    if !spec.contains(x) {
        return Err(Error::OutOfDomain(format!("{x:?} not strictly inside the sector")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(r2.powf((spec.gamma + 2.0 * spec.m as f64) / 2.0) / spec.dirichlet_product(x))
}

/// Which side of the truncation radius survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Inner,
    Outer,
}

/// Symbolic shapes for initial data. All are pointwise evaluable on the open
/// sector; all except `AntisymConstant` have finite weighted sup norm
/// (`AntisymConstant` is bounded only).
#[derive(Debug, Clone)]
pub enum Shape {
    /// The singular profile ψ_0 itself.
    Psi0,
    /// ψ_0 cut off at |x| = rho, keeping the inner or outer part.
    TruncatedPsi0 { rho: f64, keep: Keep },
    /// ψ_0 · (1 + a·sin(ω ln|x| + phase)): dilation-periodic modulation.
    LogPeriodicPsi0 { amp: f64, omega: f64, phase: f64 },
    /// The constant `level` on the sector (bounded, not in the weighted space).
    AntisymConstant { level: f64 },
    /// x_1⋯x_m |x|^{−γ′−2m} on {|x| > cutoff}, γ < γ′ < N: a faster-decaying
    /// tail whose dilations collapse to zero.
    GammaPrimeTail { gamma_prime: f64, cutoff: f64 },
    /// A sampled field, interpolated off-grid.
    Sampled(Field),
}

/// A symbolic profile with a scalar amplitude. Closed under the dilations
/// D_λ^σ, so scaling identities can be tested exactly.
#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub shape: Shape,
    pub amplitude: f64,
}

impl ProfileSpec {
    pub fn psi0() -> Self {
        ProfileSpec { shape: Shape::Psi0, amplitude: 1.0 }
    }

    pub fn truncated_psi0(rho: f64, keep: Keep) -> Self {
        ProfileSpec { shape: Shape::TruncatedPsi0 { rho, keep }, amplitude: 1.0 }
    }

    pub fn log_periodic(amp: f64, omega: f64) -> Self {
        ProfileSpec { shape: Shape::LogPeriodicPsi0 { amp, omega, phase: 0.0 }, amplitude: 1.0 }
    }

    pub fn antisym_constant(level: f64) -> Self {
        ProfileSpec { shape: Shape::AntisymConstant { level }, amplitude: 1.0 }
    }

    pub fn gamma_prime_tail(gamma_prime: f64) -> Self {
        ProfileSpec { shape: Shape::GammaPrimeTail { gamma_prime, cutoff: 1.0 }, amplitude: 1.0 }
    }

    pub fn sampled(f: Field) -> Self {
        ProfileSpec { shape: Shape::Sampled(f), amplitude: 1.0 }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.amplitude *= c;
        self
    }

    /// Bounded-only profiles sit outside the weighted space; their weighted
    /// sup norm over the unbounded sector is infinite.
    pub fn is_bounded_only(&self) -> bool {
        matches!(self.shape, Shape::AntisymConstant { .. })
    }

    /// Pointwise value at a point of the open sector.
    pub fn eval(&self, x: &[f64], spec: &DomainSpec) -> Result<f64> {
        let v = match &self.shape {
            Shape::Psi0 => psi0(x, spec)?,
            Shape::TruncatedPsi0 { rho, keep } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let inside = r < *rho;
                match (keep, inside) {
                    (Keep::Inner, true) | (Keep::Outer, false) => psi0(x, spec)?,
                    _ => 0.0,
                }
            }
            Shape::LogPeriodicPsi0 { amp, omega, phase } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                psi0(x, spec)? * (1.0 + amp * (omega * r.ln() + phase).sin())
            }
            Shape::AntisymConstant { level } => {
                if !spec.contains(x) {
                    return Err(Error::OutOfDomain(format!("{x:?}")));
                }
                *level
            }
            Shape::GammaPrimeTail { gamma_prime, cutoff } => {
                if !spec.contains(x) {
                    return Err(Error::OutOfDomain(format!("{x:?}")));
                }
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2.sqrt() > *cutoff {
                    spec.dirichlet_product(x)
                        * r2.powf(-(gamma_prime + 2.0 * spec.m as f64) / 2.0)
                } else {
                    0.0
                }
            }
            Shape::Sampled(f) => f.eval(x),
        };
        Ok(self.amplitude * v)
    }

    /// The dilation D_λ^σ f(x) = λ^σ f(λx), in closed form. Symbolic shapes
    /// absorb the scaling into their parameters; sampled fields are
    /// re-interpolated onto their own grid.
    pub fn dilate(&self, lambda: f64, sigma: f64, spec: &DomainSpec) -> Result<ProfileSpec> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidSpec(format!("dilation lambda = {lambda}")));
        }
        let deg = spec.degree();
        let shape;
        let factor;
        match &self.shape {
            Shape::Psi0 => {
                shape = Shape::Psi0;
                factor = lambda.powf(sigma - deg);
            }
            Shape::TruncatedPsi0 { rho, keep } => {
                shape = Shape::TruncatedPsi0 { rho: rho / lambda, keep: *keep };
                factor = lambda.powf(sigma - deg);
            }
            Shape::LogPeriodicPsi0 { amp, omega, phase } => {
                shape = Shape::LogPeriodicPsi0 {
                    amp: *amp,
                    omega: *omega,
                    phase: phase + omega * lambda.ln(),
                };
                factor = lambda.powf(sigma - deg);
            }
            Shape::AntisymConstant { level } => {
                shape = Shape::AntisymConstant { level: *level };
                factor = lambda.powf(sigma);
            }
            Shape::GammaPrimeTail { gamma_prime, cutoff } => {
                shape = Shape::GammaPrimeTail { gamma_prime: *gamma_prime, cutoff: cutoff / lambda };
                factor = lambda.powf(sigma - (gamma_prime + spec.m as f64));
            }
            Shape::Sampled(f) => {
                return Ok(ProfileSpec {
                    shape: Shape::Sampled(dilate_field(f, lambda, sigma)?),
                    amplitude: self.amplitude,
                });
            }
        }
        Ok(ProfileSpec { shape, amplitude: self.amplitude * factor })
    }

    /// Point-function view (for antisymmetric extension and friends).
    pub fn point_fn(&self, spec: &DomainSpec) -> PointFn {
        let p = self.clone();
        let spec = *spec;
        Arc::new(move |x: &[f64]| p.eval(x, &spec).unwrap_or(0.0))
    }

    /// Analytic bound for sup over {|x| ≥ r} of |ρ_m · profile|.
    /// Infinite for bounded-only profiles.
    pub fn weighted_tail_sup(&self, r: f64, spec: &DomainSpec) -> f64 {
        let c = spec.c_m_gamma();
        let a = self.amplitude.abs();
        match &self.shape {
            Shape::Psi0 => a * c,
            Shape::TruncatedPsi0 { rho, keep } => match keep {
                Keep::Outer => a * c,
                Keep::Inner => {
                    if r < *rho {
                        a * c
                    } else {
                        0.0
                    }
                }
            },
            Shape::LogPeriodicPsi0 { amp, .. } => a * c * (1.0 + amp.abs()),
            Shape::AntisymConstant { .. } => f64::INFINITY,
            Shape::GammaPrimeTail { gamma_prime, cutoff } => {
                let inner = r.max(*cutoff);
                a * inner.powf(spec.gamma - gamma_prime)
            }
            // No analytic tail for raw samples: the grid truncates them.
            Shape::Sampled(_) => 0.0,
        }
    }
}

/// Result of a weighted sup-norm measurement.
#[derive(Debug, Clone)]
pub struct XNormReport {
    /// Estimate of ‖ρ_m f‖_∞ (exact for symbolic shapes where possible).
    pub norm: f64,
    /// Grid point realizing the grid supremum.
    pub argmax: Vec<f64>,
    /// Analytic bound on the weighted sup beyond the grid radius.
    pub tail_bound: f64,
}

/// Evaluable input for [`xnorm`].
pub enum XNormInput<'a> {
    Field(&'a Field),
    Profile(&'a ProfileSpec, &'a SectorGrid),
}

/// Weighted sup norm ‖ρ_m f‖_∞: grid supremum plus an analytic tail bound
/// for symbolic shapes. For ψ_0 the result is exactly c_{m,γ}.
pub fn xnorm(input: XNormInput<'_>, spec: &DomainSpec) -> Result<XNormReport> {
    // Exact closed forms first.
    if let XNormInput::Profile(p, _) = &input {
        match p.shape {
            Shape::Psi0 => {
                return Ok(XNormReport {
                    norm: p.amplitude.abs() * spec.c_m_gamma(),
                    argmax: Vec::new(),
                    tail_bound: 0.0,
                })
            }
            Shape::LogPeriodicPsi0 { amp, .. } => {
                return Ok(XNormReport {
                    norm: p.amplitude.abs() * spec.c_m_gamma() * (1.0 + amp.abs()),
                    argmax: Vec::new(),
                    tail_bound: 0.0,
                })
            }
            _ => {}
        }
    }
    let (grid, value_at): (&SectorGrid, Box<dyn Fn(&[f64]) -> Result<f64>>) = match input {
        XNormInput::Field(f) => (f.grid(), {
            let f = f.clone();
            Box::new(move |x: &[f64]| Ok(f.eval(x)))
        }),
        XNormInput::Profile(p, g) => (g, {
            let p = p.clone();
            let spec = *spec;
            Box::new(move |x: &[f64]| p.eval(x, &spec))
        }),
    };
    let mut best = 0.0f64;
    let mut argmax = Vec::new();
    let mut x = Vec::new();
    let mut radius = 0.0f64;
    for idx in 0..grid.len() {
        grid.coords(idx, &mut x);
        let w = weight(&x, spec)?;
        let v = value_at(&x)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("profile value at {x:?}")));
        }
        let wv = (w * v).abs();
        if wv > best {
            best = wv;
            argmax = x.clone();
        }
        radius = radius.max(x.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let tail_bound = match input_tail(&input, radius, spec) {
        Some(t) => t,
        None => 0.0,
    };
    Ok(XNormReport { norm: best.max(tail_bound), argmax, tail_bound })
}

fn input_tail(input: &XNormInput<'_>, radius: f64, spec: &DomainSpec) -> Option<f64> {
    match input {
        XNormInput::Field(_) => None,
        XNormInput::Profile(p, _) => Some(p.weighted_tail_sup(radius, spec)),
    }
}

/// D_λ^σ on a sampled field: resample λ^σ f(λx) onto the field's own grid.
/// Target points that λ pushes outside the truncated grid evaluate to 0;
/// if every target lands outside, the dilation is reported as an error.
pub fn dilate_field(f: &Field, lambda: f64, sigma: f64) -> Result<Field> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidSpec(format!("dilation lambda = {lambda}")));
    }
    if lambda == 1.0 && sigma == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid().clone();
    let scale = lambda.powf(sigma);
    let mut values = Vec::with_capacity(grid.len());
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut n_outside = 0usize;
    for idx in 0..grid.len() {
        grid.coords(idx, &mut x);
        y.clear();
        y.extend(x.iter().map(|v| v * lambda));
        let (v, inside) = f.eval_checked(&y);
        if !inside {
            n_outside += 1;
        }
        values.push(scale * v);
    }
    if n_outside == grid.len() {
        return Err(Error::Quadrature(format!(
            "dilation by lambda = {lambda} pushed every sample off the grid"
        )));
    }
    Field::new(grid, values, f.time())
}

/// Γ_λ^σ u at time t: the spatial dilation D_λ^σ applied to the trajectory
/// snapshot at λ²t (interpolated in time between stored snapshots).
pub fn spacetime_rescale(traj: &Trajectory, lambda: f64, sigma: f64, t: f64) -> Result<Field> {
    let snap = traj.at(lambda * lambda * t)?;
    let mut out = dilate_field(&snap, lambda, sigma)?;
    out.set_time(t);
    Ok(out)
}
