//! Interchangeable quadrature rules for energy integrals.
//!
//! Rules are selected at runtime by name through [`rule_by_name`]; every
//! rule produces strictly increasing nodes with positive weights on a closed
//! interval.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes per Gauss–Legendre panel in the composite rule.
pub const DEFAULT_PANEL_ORDER: usize = 16;

pub trait QuadratureRule: Send + Sync {
    fn name(&self) -> &'static str;

    /// Nodes and weights covering `[lo, hi]` with at least `n` nodes.
    fn nodes_weights(&self, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>);
}

/// Composite Gauss–Legendre: equal-width panels, each carrying a fixed-order
/// rule. The total node count is rounded up to a whole number of panels.
#[derive(Debug, Clone)]
pub struct GaussLegendrePanels {
    order: usize,
    reference: Vec<(f64, f64)>,
}

impl GaussLegendrePanels {
    pub fn new(order: usize) -> Self {
        let order = order.max(1);
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order is positive"));
        let mut reference: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        reference.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { order, reference }
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl Default for GaussLegendrePanels {
    fn default() -> Self {
        Self::new(DEFAULT_PANEL_ORDER)
    }
}

impl QuadratureRule for GaussLegendrePanels {
    fn name(&self) -> &'static str {
        "gauss-legendre"
    }

    fn nodes_weights(&self, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = n.div_ceil(self.order).max(1);
        let width = (hi - lo) / panels as f64;
        let half = 0.5 * width;
        let mut nodes = Vec::with_capacity(panels * self.order);
        let mut weights = Vec::with_capacity(panels * self.order);
        for p in 0..panels {
            let left = lo + p as f64 * width;
            let mid = left + half;
            for &(x, w) in &self.reference {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        (nodes, weights)
    }
}

/// Composite trapezoid on `n` equally spaced nodes including both endpoints.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trapezoid;

impl QuadratureRule for Trapezoid {
    fn name(&self) -> &'static str {
        "trapezoid"
    }

    fn nodes_weights(&self, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let n = n.max(2);
        let h = (hi - lo) / (n - 1) as f64;
        let nodes = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
            .collect();
        let weights = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect();
        (nodes, weights)
    }
}

/// Names accepted by [`rule_by_name`].
pub const RULE_NAMES: [&str; 2] = ["gauss-legendre", "trapezoid"];

pub fn rule_by_name(name: &str) -> Result<Box<dyn QuadratureRule>> {
    match name {
        "gauss-legendre" | "gl" => Ok(Box::new(GaussLegendrePanels::default())),
        "trapezoid" => Ok(Box::new(Trapezoid)),
        other => Err(Error::Unknown {
            kind: "quadrature rule",
            name: other.to_string(),
        }),
    }
}

/// Integrate `f` over `[lo, hi]` with `n` nodes of the given rule.
pub fn integrate<F>(rule: &dyn QuadratureRule, lo: f64, hi: f64, n: usize, f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let (nodes, weights) = rule.nodes_weights(lo, hi, n);
    nodes
        .iter()
        .zip(&weights)
        .fold(0.0, |acc, (&x, &w)| acc + w * f(x))
}
