//! Physical parameters, energy grids and the per-energy spectral quantities
//! shared by every other module.
//!
//! Natural units with ħ = 1 throughout: `k = √(2mE)` and
//! `χ = √(2m(V0 − E))`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendrePanels, QuadratureRule};

/// Relative guard kept between grid nodes and the singular endpoints
/// `E = 0` (k → 0) and `E = V0` (χ → 0).
pub const ENERGY_GUARD: f64 = 1e-9;

/// Smallest node count accepted by [`build_energy_grid`].
pub const MIN_GRID_NODES: usize = 16;

/// Two equal rectangular barriers of height `V0` and width `a`, the second
/// one starting at `x = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSystem {
    mass: f64,
    height: f64,
    width: f64,
    offset: f64,
}

impl BarrierSystem {
    pub fn new(mass: f64, height: f64, width: f64, offset: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("m", format!("must be > 0, got {mass}")));
        }
        if !(height.is_finite() && height > 0.0) {
            return Err(Error::invalid("V0", format!("must be > 0, got {height}")));
        }
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::invalid("a", format!("must be >= 0, got {width}")));
        }
        if !(offset.is_finite() && offset >= width) {
            return Err(Error::invalid(
                "L",
                format!("must be >= a = {width}, got {offset}"),
            ));
        }
        Ok(Self {
            mass,
            height,
            width,
            offset,
        })
    }

    /// `2m = 1`, `V0 = 1`, `a = 5` and the given gap `d = L − a`.
    pub fn canonical(separation: f64) -> Result<Self> {
        Self::from_separation(0.5, 1.0, 5.0, separation)
    }

    pub fn from_separation(mass: f64, height: f64, width: f64, separation: f64) -> Result<Self> {
        if !(separation.is_finite() && separation >= 0.0) {
            return Err(Error::invalid(
                "d",
                format!("separation must be >= 0, got {separation}"),
            ));
        }
        Self::new(mass, height, width, width + separation)
    }

    /// Same barriers, different gap.
    pub fn with_separation(&self, separation: f64) -> Result<Self> {
        Self::from_separation(self.mass, self.height, self.width, separation)
    }

    pub fn with_width(&self, width: f64) -> Result<Self> {
        Self::from_separation(self.mass, self.height, width, self.separation())
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Free gap between the barriers, `L − a`.
    pub fn separation(&self) -> f64 {
        self.offset - self.width
    }

    /// Right edge of the second barrier, `L + a`.
    pub fn far_edge(&self) -> f64 {
        self.offset + self.width
    }

    /// Length unit `1/√(2mV0)`.
    pub fn length_unit(&self) -> f64 {
        1.0 / (2.0 * self.mass * self.height).sqrt()
    }

    pub fn wavenumber(&self, energy: f64) -> f64 {
        (2.0 * self.mass * energy).sqrt()
    }

    pub fn decay_constant(&self, energy: f64) -> f64 {
        (2.0 * self.mass * (self.height - energy)).sqrt()
    }

    pub fn check_energy(&self, energy: f64) -> Result<()> {
        if energy > 0.0 && energy < self.height {
            Ok(())
        } else {
            Err(Error::OutsideTunnelingRegime {
                energy,
                height: self.height,
            })
        }
    }

    pub(crate) fn guard(&self) -> f64 {
        ENERGY_GUARD * self.height
    }
}

/// Gaussian energy distribution of the incident packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    mean: f64,
    spread: f64,
}

impl PacketSpec {
    pub fn new(mean: f64, spread: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::invalid("E0", format!("must be > 0, got {mean}")));
        }
        if !(spread.is_finite() && spread > 0.0) {
            return Err(Error::invalid(
                "delta",
                format!("must be > 0, got {spread}"),
            ));
        }
        Ok(Self { mean, spread })
    }

    /// `E0 = V0/2`, `δ = V0/10`.
    pub fn canonical_for(sys: &BarrierSystem) -> Self {
        Self {
            mean: 0.5 * sys.height(),
            spread: 0.1 * sys.height(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn spread(&self) -> f64 {
        self.spread
    }

    /// Checks that the distribution sits inside `(0, V0)`.
    ///
    /// A one-sigma band leaking out of the tunneling regime is an error; a
    /// three-sigma band leaking out only produces the returned warning.
    pub fn check_support(&self, sys: &BarrierSystem) -> Result<Option<String>> {
        let inside = |sigmas: f64| {
            self.mean - sigmas * self.spread > 0.0
                && self.mean + sigmas * self.spread < sys.height()
        };
        if !inside(1.0) {
            return Err(Error::invalid(
                "E0",
                format!(
                    "[E0 - delta, E0 + delta] = [{}, {}] must lie inside (0, {})",
                    self.mean - self.spread,
                    self.mean + self.spread,
                    sys.height()
                ),
            ));
        }
        if !inside(3.0) {
            return Ok(Some(format!(
                "[E0 - 3 delta, E0 + 3 delta] = [{}, {}] leaves (0, {}); the clipped tails are not renormalized",
                self.mean - 3.0 * self.spread,
                self.mean + 3.0 * self.spread,
                sys.height()
            )));
        }
        Ok(None)
    }
}

/// `g(E) = exp(−(E − E0)²/2δ²) / (√(2π) δ)`.
pub fn gaussian_weight(energy: f64, spec: &PacketSpec) -> f64 {
    let z = (energy - spec.mean) / spec.spread;
    (-0.5 * z * z).exp() / ((TAU).sqrt() * spec.spread)
}

/// Per-energy building blocks of every closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPrimitives {
    pub energy: f64,
    pub k: f64,
    pub chi: f64,
    /// `(χ/k + k/χ) / 2`
    pub delta_plus: f64,
    /// `(χ/k − k/χ) / 2`
    pub delta_minus: f64,
    pub sinh_chi_a: f64,
    pub cosh_chi_a: f64,
    /// Modulus of `cosh χa + iΔ₋ sinh χa`.
    pub r: f64,
    /// `−arctan(Δ₋ tanh χa)`, so that `cosh χa + iΔ₋ sinh χa = r e^{−iφ}`.
    pub phi: f64,
}

impl SpectralPrimitives {
    /// `Δ₊ sinh χa / r`, the single-barrier reflection modulus `|R0|`.
    pub fn reflection_modulus(&self) -> f64 {
        if self.sinh_chi_a == 0.0 {
            0.0
        } else {
            self.delta_plus * self.sinh_chi_a / self.r
        }
    }

    /// `|R0|²`, the ratio of consecutive series terms.
    pub fn series_ratio(&self) -> f64 {
        let q = self.reflection_modulus();
        q * q
    }
}

pub fn spectral_primitives(energy: f64, sys: &BarrierSystem) -> Result<SpectralPrimitives> {
    sys.check_energy(energy)?;
    let k = sys.wavenumber(energy);
    let chi = sys.decay_constant(energy);
    let delta_plus = 0.5 * (chi / k + k / chi);
    let delta_minus = 0.5 * (chi / k - k / chi);
    let x = chi * sys.width();
    let sinh_chi_a = x.sinh();
    let cosh_chi_a = x.cosh();
    let s = delta_plus * sinh_chi_a;
    let r = (1.0 + s * s).sqrt();
    let phi = -(delta_minus * x.tanh()).atan();
    Ok(SpectralPrimitives {
        energy,
        k,
        chi,
        delta_plus,
        delta_minus,
        sinh_chi_a,
        cosh_chi_a,
        r,
        phi,
    })
}

/// Ordered quadrature nodes inside `(0, V0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl EnergyGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Samples `f` at the nodes, keeping the weights.
    pub fn sample<F>(&self, f: F) -> SpectralFunction
    where
        F: Fn(f64) -> f64,
    {
        SpectralFunction {
            nodes: self.nodes.clone(),
            values: self.nodes.iter().map(|&e| f(e)).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Fixed-order weighted sum `Σ wᵢ f(Eᵢ)`.
    pub fn integrate<F>(&self, f: F) -> f64
    where
        F: Fn(f64) -> f64,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(0.0, |acc, (&e, &w)| acc + w * f(e))
    }
}

/// Nodes needed to resolve an integrand whose phase sweeps `span` radians
/// across the grid: eight nodes per cycle.
pub fn required_nodes(phase_span: f64) -> usize {
    (8.0 * phase_span.abs() / (2.0 * PI)).ceil() as usize
}

/// Composite Gauss–Legendre grid over `E0 ± width·δ`, clipped to the
/// guarded interval `[ε, V0 − ε]`.
pub fn build_energy_grid(
    spec: &PacketSpec,
    sys: &BarrierSystem,
    n: usize,
    width: f64,
) -> Result<EnergyGrid> {
    build_energy_grid_with(&GaussLegendrePanels::default(), spec, sys, n, width)
}

pub fn build_energy_grid_with(
    rule: &dyn QuadratureRule,
    spec: &PacketSpec,
    sys: &BarrierSystem,
    n: usize,
    width: f64,
) -> Result<EnergyGrid> {
    if n < MIN_GRID_NODES {
        return Err(Error::invalid(
            "nodes",
            format!("need at least {MIN_GRID_NODES} nodes, got {n}"),
        ));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid("width", format!("must be > 0, got {width}")));
    }
    let guard = sys.guard();
    let lo = (spec.mean() - width * spec.spread()).max(guard);
    let hi = (spec.mean() + width * spec.spread()).min(sys.height() - guard);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::EmptyInterval);
    }
    let (nodes, weights) = rule.nodes_weights(lo, hi, n);
    Ok(EnergyGrid {
        nodes,
        weights,
        lo,
        hi,
    })
}

/// A real function sampled on known nodes with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralFunction {
    /// Samples on `n` equally spaced points of `[lo, hi]` with trapezoid
    /// weights.
    pub fn uniform<F>(lo: f64, hi: f64, n: usize, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        let (nodes, weights) = crate::quadrature::Trapezoid.nodes_weights(lo, hi, n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self {
            nodes,
            values,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            weights: self.weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn canonical() -> BarrierSystem {
        BarrierSystem::canonical(8.0).unwrap()
    }

    #[test]
    fn symmetric_point_primitives() {
        let p = spectral_primitives(0.5, &canonical()).unwrap();
        assert_abs_diff_eq!(p.k, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.chi, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta_minus, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.delta_plus, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.phi, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.r, (5.0 * 0.5f64.sqrt()).cosh(), max_relative = 1e-14);
    }

    #[test]
    fn zero_width_barrier_is_transparent() {
        let sys = BarrierSystem::new(0.5, 1.0, 0.0, 3.0).unwrap();
        for e in [0.1, 0.37, 0.9] {
            let p = spectral_primitives(e, &sys).unwrap();
            assert_eq!(p.r, 1.0);
            assert_eq!(p.phi, 0.0);
            assert_eq!(p.reflection_modulus(), 0.0);
        }
    }

    #[test]
    fn quarter_energy_matches_hand_evaluation() {
        // k = 1/2, χ = √3/2, Δ₊ = 2/√3, Δ₋ = 1/√3, χa = 5√3/2
        let p = spectral_primitives(0.25, &canonical()).unwrap();
        let s3 = 3f64.sqrt();
        let x = 2.5 * s3;
        assert_abs_diff_eq!(p.k, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.chi, 0.5 * s3, epsilon = 1e-15);
        assert_relative_eq!(p.delta_plus, 2.0 / s3, max_relative = 1e-14);
        assert_relative_eq!(p.delta_minus, 1.0 / s3, max_relative = 1e-14);
        let expected_r = (1.0 + 4.0 / 3.0 * x.sinh().powi(2)).sqrt();
        assert_relative_eq!(p.r, expected_r, max_relative = 1e-14);
        assert_relative_eq!(p.phi, -(x.tanh() / s3).atan(), max_relative = 1e-14);
        // frozen from a 50-digit evaluation of the same definitions
        assert_relative_eq!(p.r, 43.855825132041227, max_relative = 1e-12);
        assert_relative_eq!(p.phi, -0.523_448_671_534_831_7, max_relative = 1e-12);
    }

    #[test]
    fn outside_tunneling_regime_is_rejected() {
        let sys = canonical();
        for e in [0.0, -0.1, 1.0, 1.5] {
            assert!(matches!(
                spectral_primitives(e, &sys),
                Err(Error::OutsideTunnelingRegime { .. })
            ));
        }
    }

    #[test]
    fn invalid_systems_name_the_offending_parameter() {
        let name = |r: Result<BarrierSystem>| match r {
            Err(Error::InvalidParameter { name, .. }) => name,
            other => panic!("expected invalid parameter, got {other:?}"),
        };
        assert_eq!(name(BarrierSystem::new(0.0, 1.0, 1.0, 2.0)), "m");
        assert_eq!(name(BarrierSystem::new(0.5, -1.0, 1.0, 2.0)), "V0");
        assert_eq!(name(BarrierSystem::new(0.5, 1.0, -1.0, 2.0)), "a");
        assert_eq!(name(BarrierSystem::new(0.5, 1.0, 3.0, 2.0)), "L");
    }

    #[test]
    fn gaussian_weight_reference_points() {
        let spec = PacketSpec::new(0.5, 0.1).unwrap();
        let peak = 1.0 / (TAU.sqrt() * 0.1);
        assert_relative_eq!(gaussian_weight(0.5, &spec), peak, max_relative = 1e-15);
        assert_relative_eq!(
            gaussian_weight(0.5, &spec),
            10.0 / TAU.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gaussian_weight(0.6, &spec),
            peak * (-0.5f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn support_check_warns_then_errors() {
        let sys = canonical();
        assert_eq!(
            PacketSpec::new(0.5, 0.1).unwrap().check_support(&sys),
            Ok(None)
        );
        assert!(PacketSpec::new(0.2, 0.1)
            .unwrap()
            .check_support(&sys)
            .unwrap()
            .is_some());
        assert!(PacketSpec::new(0.05, 0.1)
            .unwrap()
            .check_support(&sys)
            .is_err());
    }

    #[test]
    fn grid_clipping() {
        let sys = canonical();
        let spec = PacketSpec::new(0.5, 0.1).unwrap();
        let wide = build_energy_grid(&spec, &sys, 64, 8.0).unwrap();
        assert_eq!(wide.lo, 1e-9);
        assert_eq!(wide.hi, 1.0 - 1e-9);
        let narrow = build_energy_grid(&spec, &sys, 64, 3.0).unwrap();
        assert_abs_diff_eq!(narrow.lo, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(narrow.hi, 0.8, epsilon = 1e-15);
        assert!(narrow.nodes.iter().all(|&e| e > 0.2 && e < 0.8));
    }

    #[test]
    fn grid_rejects_bad_configuration() {
        let sys = canonical();
        let spec = PacketSpec::new(0.5, 0.1).unwrap();
        assert!(build_energy_grid(&spec, &sys, 8, 8.0).is_err());
        let outside = PacketSpec::new(3.0, 0.1).unwrap();
        assert_eq!(
            build_energy_grid(&outside, &sys, 64, 2.0),
            Err(Error::EmptyInterval)
        );
    }

    #[test]
    fn gaussian_mass_on_grid_matches_error_function() {
        use statrs::function::erf::erf;
        let sys = canonical();
        let spec = PacketSpec::new(0.5, 0.1).unwrap();
        for width in [2.0, 3.0, 4.0, 6.0, 8.0] {
            let grid = build_energy_grid(&spec, &sys, 2048, width).unwrap();
            let mass = grid.integrate(|e| gaussian_weight(e, &spec));
            let z = |e: f64| (e - 0.5) / (0.1 * 2f64.sqrt());
            let expected = 0.5 * (erf(z(grid.hi)) - erf(z(grid.lo)));
            // statrs' erf is accurate to ~1e-12
            assert_abs_diff_eq!(mass, expected, epsilon = 1e-10);
            if width >= 6.0 {
                // clipped at E = 0, five sigmas below the mean
                assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn delta_identities(e in 1e-6f64..0.999_999, a in 0.0f64..12.0) {
            let sys = BarrierSystem::from_separation(0.5, 1.0, a, 1.0).unwrap();
            let p = spectral_primitives(e, &sys).unwrap();
            prop_assert!((p.delta_plus - p.delta_minus - p.k / p.chi).abs() <= 1e-12 * (p.k / p.chi).max(1.0));
            prop_assert!((p.delta_plus + p.delta_minus - p.chi / p.k).abs() <= 1e-12 * (p.chi / p.k).max(1.0));
            // difference-of-squares identity, relative to the size of the terms
            let scale = p.delta_plus * p.delta_plus;
            prop_assert!((p.delta_plus.powi(2) - p.delta_minus.powi(2) - 1.0).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn r_and_phi_match_complex_modulus(e in 1e-3f64..0.999, a in 0.0f64..12.0) {
            let sys = BarrierSystem::from_separation(0.5, 1.0, a, 1.0).unwrap();
            let p = spectral_primitives(e, &sys).unwrap();
            let z = num_complex::Complex64::new(p.cosh_chi_a, p.delta_minus * p.sinh_chi_a);
            prop_assert!((z.norm() - p.r).abs() <= 1e-12 * p.r);
            prop_assert!(p.r >= 1.0);
            prop_assert!(p.phi > -std::f64::consts::FRAC_PI_2 && p.phi < std::f64::consts::FRAC_PI_2);
            // r e^{-iφ} reproduces the complex number
            let rebuilt = num_complex::Complex64::from_polar(p.r, -p.phi);
            prop_assert!((rebuilt - z).norm() <= 1e-12 * p.r);
        }
    }

    #[test]
    fn phi_is_continuous_in_energy() {
        let sys = canonical();
        let mut prev = spectral_primitives(1e-6, &sys).unwrap().phi;
        for i in 1..=100_000 {
            let e = 1e-6 + (1.0 - 2e-6) * i as f64 / 100_000.0;
            let phi = spectral_primitives(e, &sys).unwrap().phi;
            assert!((phi - prev).abs() < 1e-2, "jump at E = {e}");
            prev = phi;
        }
    }
}
