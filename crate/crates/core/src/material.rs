//! Functionally graded material law and through-thickness section integration.
//!
//! The ceramic phase sits on the top surface `z = +h/2` and the metal phase on
//! the bottom surface `z = -h/2`; the ceramic volume fraction follows the power
//! law `Vc(z) = ((2z + h) / 2h)^n`. Constituent moduli and expansion
//! coefficients may depend on temperature through the cubic coefficient law
//! `P = P0 (P-1/T + 1 + P1 T + P2 T^2 + P3 T^3)`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::quadrature::graded_points;

/// Five coefficients `(P0, P-1, P1, P2, P3)` of the temperature law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemperatureCoefficients(pub [f64; 5]);

impl TemperatureCoefficients {
    pub fn constant(value: f64) -> Self {
        Self([value, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn eval(&self, temperature: f64) -> Result<f64> {
        property_at_temperature(self, temperature)
    }
}

/// `P0 (P-1 / T + 1 + P1 T + P2 T^2 + P3 T^3)`.
pub fn property_at_temperature(coeffs: &TemperatureCoefficients, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(PlateError::Domain(format!(
            "temperature must be positive, got {temperature} K"
        )));
    }
    let [p0, pm1, p1, p2, p3] = coeffs.0;
    let t = temperature;
    Ok(p0 * (pm1 / t + 1.0 + t * (p1 + t * (p2 + t * p3))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseProperties {
    #[serde(rename = "E_coeffs")]
    pub youngs_modulus_coeffs: TemperatureCoefficients,
    pub alpha_coeffs: TemperatureCoefficients,
    #[serde(rename = "rho")]
    pub density: f64,
    #[serde(rename = "kappa")]
    pub conductivity: f64,
    #[serde(rename = "nu")]
    pub poisson: f64,
}

impl PhaseProperties {
    /// Temperature-independent phase.
    pub fn constant(youngs_modulus: f64, poisson: f64, alpha: f64, density: f64, conductivity: f64) -> Self {
        Self {
            youngs_modulus_coeffs: TemperatureCoefficients::constant(youngs_modulus),
            alpha_coeffs: TemperatureCoefficients::constant(alpha),
            density,
            conductivity,
            poisson,
        }
    }

    pub fn youngs_modulus(&self, temperature: f64) -> Result<f64> {
        self.youngs_modulus_coeffs.eval(temperature)
    }

    pub fn alpha(&self, temperature: f64) -> Result<f64> {
        self.alpha_coeffs.eval(temperature)
    }

    pub fn moduli(&self, temperature: f64) -> Result<ModuliPair> {
        ModuliPair::from_young_poisson(self.youngs_modulus(temperature)?, self.poisson)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let e0 = self.youngs_modulus_coeffs.0[0];
        if !(e0 > 0.0) {
            return Err(PlateError::Domain(format!("{name}: E coefficient P0 must be positive")));
        }
        if !(self.density > 0.0) {
            return Err(PlateError::Domain(format!("{name}: density must be positive")));
        }
        if !(self.conductivity > 0.0) {
            return Err(PlateError::Domain(format!("{name}: conductivity must be positive")));
        }
        if !(self.poisson > 0.0 && self.poisson < 0.5) {
            return Err(PlateError::Domain(format!("{name}: Poisson ratio must lie in (0, 0.5)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Homogenization {
    #[default]
    #[serde(alias = "mori_tanaka")]
    MoriTanaka,
    #[serde(alias = "rule_of_mixtures")]
    RuleOfMixtures,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearCorrection {
    Constant(f64),
    EnergyEquivalence,
}

impl Default for ShearCorrection {
    fn default() -> Self {
        ShearCorrection::Constant(5.0 / 6.0)
    }
}

/// Two-phase graded plate: constituents, gradient index and thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgmDefinition {
    pub ceramic: PhaseProperties,
    pub metal: PhaseProperties,
    #[serde(rename = "n")]
    pub gradient_index: f64,
    #[serde(rename = "h")]
    pub thickness: f64,
    #[serde(default)]
    pub homogenization: Homogenization,
    #[serde(default)]
    pub shear_correction: ShearCorrection,
}

impl FgmDefinition {
    pub fn validate(&self) -> Result<()> {
        self.ceramic.validate("ceramic")?;
        self.metal.validate("metal")?;
        if !(self.gradient_index >= 0.0) || !self.gradient_index.is_finite() {
            return Err(PlateError::Domain("gradient index must be >= 0".into()));
        }
        if !(self.thickness > 0.0) {
            return Err(PlateError::Domain("thickness must be positive".into()));
        }
        if let ShearCorrection::Constant(k) = self.shear_correction {
            if !(k > 0.0 && k <= 1.0) {
                return Err(PlateError::Domain(format!("shear correction {k} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn with_gradient_index(mut self, n: f64) -> Self {
        self.gradient_index = n;
        self
    }

    pub fn with_thickness(mut self, h: f64) -> Self {
        self.thickness = h;
        self
    }

    /// Material properties at height `z` under the given thermal state.
    pub fn local_properties(&self, z: f64, thermal: &ThermalState) -> Result<LocalProperties> {
        let vc = volume_fraction(z, self)?;
        let temperature = temperature_profile(thermal, self, z)?;
        self.properties_at(vc, temperature)
    }

    /// Effective properties for a given ceramic fraction and temperature.
    pub fn properties_at(&self, vc: f64, temperature: f64) -> Result<LocalProperties> {
        let vm = 1.0 - vc;
        let (youngs_modulus, poisson) = match self.homogenization {
            Homogenization::MoriTanaka => {
                let eff = mori_tanaka(self.ceramic.moduli(temperature)?, self.metal.moduli(temperature)?, vc)?;
                effective_isotropic(eff)
            }
            Homogenization::RuleOfMixtures => {
                let ec = self.ceramic.youngs_modulus(temperature)?;
                let em = self.metal.youngs_modulus(temperature)?;
                (ec * vc + em * vm, self.ceramic.poisson * vc + self.metal.poisson * vm)
            }
        };
        let (conductivity, alpha, density) = effective_transport(self, vc, temperature)?;
        Ok(LocalProperties {
            temperature,
            ceramic_fraction: vc,
            youngs_modulus,
            poisson,
            alpha,
            density,
            conductivity,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalProperties {
    pub temperature: f64,
    pub ceramic_fraction: f64,
    pub youngs_modulus: f64,
    pub poisson: f64,
    pub alpha: f64,
    pub density: f64,
    pub conductivity: f64,
}

impl LocalProperties {
    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson))
    }
}

/// How the through-thickness temperature is obtained in gradient mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Six-term polynomial series solution of steady conduction.
    #[default]
    Series,
    /// Leading term of the series only (linear through the thickness).
    Linear,
    /// Quadrature of `1/kappa(z)`; solves the conduction equation to round-off.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMode {
    Uniform { temperature: f64 },
    Gradient { ceramic: f64, metal: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub mode: ThermalMode,
    #[serde(default = "default_reference_temperature")]
    pub reference_temperature: f64,
    #[serde(default)]
    pub profile: ProfileKind,
}

fn default_reference_temperature() -> f64 {
    300.0
}

impl Default for ThermalState {
    fn default() -> Self {
        Self::uniform(300.0)
    }
}

impl ThermalState {
    pub fn uniform(temperature: f64) -> Self {
        Self {
            mode: ThermalMode::Uniform { temperature },
            reference_temperature: default_reference_temperature(),
            profile: ProfileKind::Series,
        }
    }

    pub fn gradient(ceramic: f64, metal: f64) -> Self {
        Self {
            mode: ThermalMode::Gradient { ceramic, metal },
            reference_temperature: default_reference_temperature(),
            profile: ProfileKind::Series,
        }
    }

    pub fn with_reference(mut self, reference_temperature: f64) -> Self {
        self.reference_temperature = reference_temperature;
        self
    }

    pub fn with_profile(mut self, profile: ProfileKind) -> Self {
        self.profile = profile;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let temps = match self.mode {
            ThermalMode::Uniform { temperature } => vec![temperature],
            ThermalMode::Gradient { ceramic, metal } => vec![ceramic, metal],
        };
        for t in temps.into_iter().chain([self.reference_temperature]) {
            if !(t > 0.0) || !t.is_finite() {
                return Err(PlateError::Domain(format!("temperature must be positive, got {t} K")));
            }
        }
        Ok(())
    }

    /// Surface temperatures (ceramic, metal).
    pub fn surface_temperatures(&self) -> (f64, f64) {
        match self.mode {
            ThermalMode::Uniform { temperature } => (temperature, temperature),
            ThermalMode::Gradient { ceramic, metal } => (ceramic, metal),
        }
    }
}

/// Ceramic volume fraction at height `z`.
pub fn volume_fraction(z: f64, fgm: &FgmDefinition) -> Result<f64> {
    let h = fgm.thickness;
    let tol = 1e-12 * h;
    if z < -0.5 * h - tol || z > 0.5 * h + tol {
        return Err(PlateError::Domain(format!("z = {z} outside [-h/2, h/2] with h = {h}")));
    }
    let s = ((2.0 * z + h) / (2.0 * h)).clamp(0.0, 1.0);
    Ok(s.powf(fgm.gradient_index))
}

/// Bulk and shear moduli of an isotropic phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuliPair {
    pub bulk: f64,
    pub shear: f64,
}

impl ModuliPair {
    pub fn from_young_poisson(e: f64, nu: f64) -> Result<Self> {
        if !(e > 0.0) || !(nu > -1.0 && nu < 0.5) {
            return Err(PlateError::Domain(format!("invalid elastic constants E={e}, nu={nu}")));
        }
        Ok(Self {
            bulk: e / (3.0 * (1.0 - 2.0 * nu)),
            shear: e / (2.0 * (1.0 + nu)),
        })
    }
}

/// Mori-Tanaka estimate of the effective bulk and shear moduli.
pub fn mori_tanaka(ceramic: ModuliPair, metal: ModuliPair, vc: f64) -> Result<ModuliPair> {
    for (name, v) in [
        ("ceramic bulk", ceramic.bulk),
        ("ceramic shear", ceramic.shear),
        ("metal bulk", metal.bulk),
        ("metal shear", metal.shear),
    ] {
        if !(v > 0.0) {
            return Err(PlateError::Domain(format!("{name} modulus must be positive, got {v}")));
        }
    }
    if !(0.0..=1.0).contains(&vc) {
        return Err(PlateError::Domain(format!("volume fraction {vc} outside [0, 1]")));
    }
    let vm = 1.0 - vc;
    let (kc, gc, km, gm) = (ceramic.bulk, ceramic.shear, metal.bulk, metal.shear);
    let f1 = gm * (9.0 * km + 8.0 * gm) / (6.0 * (km + 2.0 * gm));
    let bulk = km + (kc - km) * vc / (1.0 + vm * 3.0 * (kc - km) / (3.0 * km + 4.0 * gm));
    let shear = gm + (gc - gm) * vc / (1.0 + vm * (gc - gm) / (gm + f1));
    Ok(ModuliPair { bulk, shear })
}

/// Young's modulus and Poisson ratio from bulk and shear moduli.
pub fn effective_isotropic(m: ModuliPair) -> (f64, f64) {
    let (k, g) = (m.bulk, m.shear);
    (9.0 * k * g / (3.0 * k + g), (3.0 * k - 2.0 * g) / (2.0 * (3.0 * k + g)))
}

/// Effective conductivity, expansion coefficient and density `(kappa, alpha, rho)`.
pub fn effective_transport(fgm: &FgmDefinition, vc: f64, temperature: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&vc) {
        return Err(PlateError::Domain(format!("volume fraction {vc} outside [0, 1]")));
    }
    let vm = 1.0 - vc;
    let (c, m) = (&fgm.ceramic, &fgm.metal);
    let ac = c.alpha(temperature)?;
    let am = m.alpha(temperature)?;
    let rho = c.density * vc + m.density * vm;
    match fgm.homogenization {
        Homogenization::RuleOfMixtures => Ok((
            c.conductivity * vc + m.conductivity * vm,
            ac * vc + am * vm,
            rho,
        )),
        Homogenization::MoriTanaka => {
            let (kc, km) = (c.conductivity, m.conductivity);
            let kappa = km + (kc - km) * vc / (1.0 + vm * (kc - km) / (3.0 * km));
            let mc = c.moduli(temperature)?;
            let mm = m.moduli(temperature)?;
            let denom = 1.0 / mc.bulk - 1.0 / mm.bulk;
            let alpha = if denom.abs() <= 1e-14 / mm.bulk {
                ac * vc + am * vm
            } else {
                let keff = mori_tanaka(mc, mm, vc)?.bulk;
                am + (ac - am) * (1.0 / keff - 1.0 / mm.bulk) / denom
            };
            Ok((kappa, alpha, rho))
        }
    }
}

const SERIES_TERMS: usize = 6;

/// Temperature at height `z`.
///
/// Gradient mode solves `-(kappa T')' = 0` with `T(h/2) = Tc`, `T(-h/2) = Tm` for the
/// power-law conductivity `kappa = kappa_m + (kappa_c - kappa_m) Vc`.
pub fn temperature_profile(thermal: &ThermalState, fgm: &FgmDefinition, z: f64) -> Result<f64> {
    let (tc, tm) = match thermal.mode {
        ThermalMode::Uniform { temperature } => return Ok(temperature),
        ThermalMode::Gradient { ceramic, metal } => (ceramic, metal),
    };
    let h = fgm.thickness;
    let tol = 1e-12 * h;
    if z < -0.5 * h - tol || z > 0.5 * h + tol {
        return Err(PlateError::Domain(format!("z = {z} outside [-h/2, h/2]")));
    }
    let s = ((2.0 * z + h) / (2.0 * h)).clamp(0.0, 1.0);
    let eta = match thermal.profile {
        ProfileKind::Linear => s,
        ProfileKind::Series => conduction_series(s, fgm)?,
        ProfileKind::Exact => conduction_exact(s, fgm),
    };
    Ok(tm + (tc - tm) * eta)
}

fn conduction_series(s: f64, fgm: &FgmDefinition) -> Result<f64> {
    let n = fgm.gradient_index;
    let ratio = (fgm.ceramic.conductivity - fgm.metal.conductivity) / fgm.metal.conductivity;
    let mut normalizer = 0.0;
    let mut sum = 0.0;
    let mut coeff = 1.0;
    for k in 0..SERIES_TERMS {
        let p = k as f64 * n + 1.0;
        normalizer += coeff / p;
        sum += coeff / p * s.powf(p);
        coeff *= -ratio;
    }
    if !(normalizer > 0.0) {
        return Err(PlateError::Numeric(format!(
            "conduction series normalizer {normalizer} is not positive"
        )));
    }
    Ok(sum / normalizer)
}

fn conduction_exact(s: f64, fgm: &FgmDefinition) -> f64 {
    let n = fgm.gradient_index;
    let (kc, km) = (fgm.ceramic.conductivity, fgm.metal.conductivity);
    let resistance = |upper: f64| -> f64 {
        if upper <= 0.0 {
            return 0.0;
        }
        graded_points(0.0, upper, 8, n)
            .into_iter()
            .map(|(x, w)| w / (km + (kc - km) * x.powf(n)))
            .sum()
    };
    resistance(s) / resistance(1.0)
}

/// Transverse shear correction factors `(upsilon_4, upsilon_5)`.
///
/// In energy-equivalence mode the factor is
/// `(int g dz)^2 / (int G dz * int g^2/G dz)` with the shear-stress shape
/// `g(z) = int_{-h/2}^{z} Q11(s) (s - z_n) ds` about the neutral surface
/// `z_n = int z Q11 dz / int Q11 dz`. A homogeneous section gives 5/6.
pub fn shear_correction_factors(fgm: &FgmDefinition, thermal: &ThermalState) -> Result<(f64, f64)> {
    match fgm.shear_correction {
        ShearCorrection::Constant(k) => Ok((k, k)),
        ShearCorrection::EnergyEquivalence => {
            let k = energy_equivalent_shear_factor(fgm, thermal)?;
            Ok((k, k))
        }
    }
}

fn energy_equivalent_shear_factor(fgm: &FgmDefinition, thermal: &ThermalState) -> Result<f64> {
    const INTERVALS: usize = 2000;
    let h = fgm.thickness;
    let dz = h / INTERVALS as f64;
    let (gx, gw) = crate::quadrature::gauss_legendre(4);

    let stiffness = |z: f64| -> Result<(f64, f64)> {
        let p = fgm.local_properties(z.clamp(-0.5 * h, 0.5 * h), thermal)?;
        Ok((p.youngs_modulus / (1.0 - p.poisson * p.poisson), p.shear_modulus()))
    };

    // neutral surface
    let mut int_q = 0.0;
    let mut int_zq = 0.0;
    for i in 0..INTERVALS {
        let mid = -0.5 * h + (i as f64 + 0.5) * dz;
        for (x, w) in gx.iter().zip(&gw) {
            let z = mid + 0.5 * dz * x;
            let (q, _) = stiffness(z)?;
            int_q += 0.5 * dz * w * q;
            int_zq += 0.5 * dz * w * z * q;
        }
    }
    if !(int_q > 0.0) {
        return Err(PlateError::Numeric("degenerate section: zero bending stiffness".into()));
    }
    let zn = int_zq / int_q;

    let mut g = vec![0.0; INTERVALS + 1];
    for i in 0..INTERVALS {
        let mid = -0.5 * h + (i as f64 + 0.5) * dz;
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let z = mid + 0.5 * dz * x;
            let (q, _) = stiffness(z)?;
            acc += 0.5 * dz * w * q * (z - zn);
        }
        g[i + 1] = g[i] + acc;
    }

    // Simpson on the node values
    let mut int_g = 0.0;
    let mut int_shear = 0.0;
    let mut int_g2_over_shear = 0.0;
    for (i, gi) in g.iter().enumerate() {
        let z = -0.5 * h + i as f64 * dz;
        let weight = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * dz
            / 3.0;
        let (_, shear) = stiffness(z)?;
        int_g += weight * gi;
        int_shear += weight * shear;
        int_g2_over_shear += weight * gi * gi / shear;
    }
    if !(int_shear > 0.0) || !(int_g2_over_shear > 0.0) {
        return Err(PlateError::Numeric("degenerate section: zero shear stiffness".into()));
    }
    Ok(int_g * int_g / (int_shear * int_g2_over_shear))
}

/// Everything integrated through the thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionStiffness {
    pub extensional: Matrix3<f64>,
    pub coupling: Matrix3<f64>,
    pub bending: Matrix3<f64>,
    pub shear: Matrix2<f64>,
    pub thermal_force: Vector3<f64>,
    pub thermal_moment: Vector3<f64>,
    /// `int rho dz`
    pub inertia_p: f64,
    /// `int z^2 rho dz`
    pub inertia_i: f64,
    pub thickness: f64,
    pub shear_factors: (f64, f64),
}

impl SectionStiffness {
    /// Homogeneous isotropic section without thermal load.
    pub fn isotropic(e: f64, nu: f64, h: f64, rho: f64, shear_factor: f64) -> Self {
        let q11 = e / (1.0 - nu * nu);
        let q = Matrix3::new(q11, nu * q11, 0.0, nu * q11, q11, 0.0, 0.0, 0.0, e / (2.0 * (1.0 + nu)));
        let g = e / (2.0 * (1.0 + nu));
        Self {
            extensional: q * h,
            coupling: Matrix3::zeros(),
            bending: q * (h * h * h / 12.0),
            shear: Matrix2::identity() * (shear_factor * g * h),
            thermal_force: Vector3::zeros(),
            thermal_moment: Vector3::zeros(),
            inertia_p: rho * h,
            inertia_i: rho * h * h * h / 12.0,
            thickness: h,
            shear_factors: (shear_factor, shear_factor),
        }
    }

    /// Copy with the transverse shear stiffness scaled by `factor`.
    pub fn with_shear_scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.shear *= factor;
        s
    }

    fn max_relative_difference(&self, other: &Self) -> f64 {
        fn rel<const R: usize, const C: usize>(
            a: &nalgebra::SMatrix<f64, R, C>,
            b: &nalgebra::SMatrix<f64, R, C>,
            scale: f64,
        ) -> f64 {
            if scale == 0.0 {
                return 0.0;
            }
            (a - b).amax() / scale
        }
        let abd_scale = self.extensional.amax();
        let bend_scale = self.bending.amax();
        let coupling_scale = (abd_scale * bend_scale).sqrt();
        let th_scale = self.thermal_force.amax().max(other.thermal_force.amax());
        let thm_scale = self.thermal_moment.amax().max(other.thermal_moment.amax());
        let vals = [
            rel(&self.extensional, &other.extensional, abd_scale),
            rel(&self.coupling, &other.coupling, coupling_scale),
            rel(&self.bending, &other.bending, bend_scale),
            rel(&self.shear, &other.shear, self.shear.amax()),
            rel(&self.thermal_force, &other.thermal_force, th_scale),
            rel(&self.thermal_moment, &other.thermal_moment, thm_scale.max(th_scale * self.thickness)),
            (self.inertia_p - other.inertia_p).abs() / self.inertia_p,
            (self.inertia_i - other.inertia_i).abs() / self.inertia_i,
        ];
        vals.into_iter().fold(0.0, f64::max)
    }
}

const MAX_PANELS: usize = 64;
const CONVERGENCE_TOL: f64 = 1e-8;

/// Integrates the section stiffness with composite 32-point Gauss-Legendre
/// quadrature, doubling the point count until successive results agree.
pub fn section_stiffness(fgm: &FgmDefinition, thermal: &ThermalState) -> Result<SectionStiffness> {
    fgm.validate()?;
    thermal.validate()?;
    let factors = shear_correction_factors(fgm, thermal)?;
    let mut panels = 1;
    let mut previous = integrate_section(fgm, thermal, factors, panels)?;
    loop {
        panels *= 2;
        let current = integrate_section(fgm, thermal, factors, panels)?;
        if current.max_relative_difference(&previous) <= CONVERGENCE_TOL {
            return Ok(current);
        }
        if panels >= MAX_PANELS {
            return Err(PlateError::Numeric(format!(
                "thickness quadrature did not converge with {} points",
                32 * panels
            )));
        }
        previous = current;
    }
}

fn integrate_section(
    fgm: &FgmDefinition,
    thermal: &ThermalState,
    factors: (f64, f64),
    panels: usize,
) -> Result<SectionStiffness> {
    let h = fgm.thickness;
    let t0 = thermal.reference_temperature;
    let mut a = Matrix3::zeros();
    let mut b = Matrix3::zeros();
    let mut d = Matrix3::zeros();
    let mut shear = 0.0;
    let mut nth = 0.0;
    let mut mth = 0.0;
    let mut p = 0.0;
    let mut inertia = 0.0;
    for (z, w) in graded_points(-0.5 * h, 0.5 * h, panels, fgm.gradient_index) {
        let props = fgm.local_properties(z, thermal)?;
        let (e, nu) = (props.youngs_modulus, props.poisson);
        let q11 = e / (1.0 - nu * nu);
        let q12 = nu * q11;
        let q66 = e / (2.0 * (1.0 + nu));
        let q = Matrix3::new(q11, q12, 0.0, q12, q11, 0.0, 0.0, 0.0, q66);
        a += q * w;
        b += q * (w * z);
        d += q * (w * z * z);
        shear += w * q66;
        let thermal_stress = (q11 + q12) * props.alpha * (props.temperature - t0);
        nth += w * thermal_stress;
        mth += w * z * thermal_stress;
        p += w * props.density;
        inertia += w * z * z * props.density;
    }
    Ok(SectionStiffness {
        extensional: a,
        coupling: b,
        bending: d,
        shear: Matrix2::new(factors.0 * shear, 0.0, 0.0, factors.1 * shear),
        thermal_force: Vector3::new(nth, nth, 0.0),
        thermal_moment: Vector3::new(mth, mth, 0.0),
        inertia_p: p,
        inertia_i: inertia,
        thickness: h,
        shear_factors: factors,
    })
}

/// Built-in constituent pairs.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 4] = ["Al/ZrO2", "Al/ZrO2-1", "Si3N4/SUS304", "Al/Al2O3"];

    fn aluminium() -> PhaseProperties {
        PhaseProperties::constant(70e9, 0.3, 23e-6, 2707.0, 204.0)
    }

    /// Aluminium / zirconia with `E_c = 151 GPa`.
    pub fn al_zro2() -> (PhaseProperties, PhaseProperties) {
        (PhaseProperties::constant(151e9, 0.3, 10e-6, 3000.0, 2.09), aluminium())
    }

    /// The "-1" zirconia variant of the static bending benchmark, `E_c = 200 GPa`.
    pub fn al_zro2_1() -> (PhaseProperties, PhaseProperties) {
        (PhaseProperties::constant(200e9, 0.3, 10e-6, 3000.0, 2.09), aluminium())
    }

    /// Silicon nitride / stainless steel with temperature-dependent E and alpha.
    pub fn si3n4_sus304() -> (PhaseProperties, PhaseProperties) {
        let ceramic = PhaseProperties {
            youngs_modulus_coeffs: TemperatureCoefficients([348.43e9, 0.0, -3.070e-4, 2.160e-7, -8.946e-11]),
            alpha_coeffs: TemperatureCoefficients([5.8723e-6, 0.0, 9.095e-4, 0.0, 0.0]),
            density: 2370.0,
            conductivity: 9.19,
            poisson: 0.28,
        };
        let metal = PhaseProperties {
            youngs_modulus_coeffs: TemperatureCoefficients([201.04e9, 0.0, 3.079e-4, -6.534e-7, 0.0]),
            alpha_coeffs: TemperatureCoefficients([12.330e-6, 0.0, 8.086e-4, 0.0, 0.0]),
            density: 8166.0,
            conductivity: 12.04,
            poisson: 0.28,
        };
        (ceramic, metal)
    }

    /// Aluminium / alumina.
    pub fn al_al2o3() -> (PhaseProperties, PhaseProperties) {
        (PhaseProperties::constant(380e9, 0.3, 7.4e-6, 3800.0, 10.4), aluminium())
    }

    pub fn phases(name: &str) -> Result<(PhaseProperties, PhaseProperties)> {
        match name {
            "Al/ZrO2" => Ok(al_zro2()),
            "Al/ZrO2-1" => Ok(al_zro2_1()),
            "Si3N4/SUS304" => Ok(si3n4_sus304()),
            "Al/Al2O3" => Ok(al_al2o3()),
            other => Err(PlateError::Config(format!(
                "unknown material preset {other:?}; known: {}",
                NAMES.join(", ")
            ))),
        }
    }

    pub fn fgm(name: &str, gradient_index: f64, thickness: f64) -> Result<FgmDefinition> {
        let (ceramic, metal) = phases(name)?;
        Ok(FgmDefinition {
            ceramic,
            metal,
            gradient_index,
            thickness,
            homogenization: Homogenization::MoriTanaka,
            shear_correction: ShearCorrection::default(),
        })
    }
}
