//! Design-space utilities: contact-angle minimization over the mounting
//! offsets, recovery of unpublished dimensions from reported anchor values,
//! and the canonical study bundle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::geometry::{contact_angle, solve_configuration, MechanismParams};
use crate::stability::bisect;
use crate::statics::{spring_clamped_forces, MassModel, SpringModel};

/// Search box for the mounting offsets [mm]. An axis with `min == max` is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub n: (f64, f64),
    /// Optional wheel-spacing range.
    pub wo: Option<(f64, f64)>,
    /// Grid nodes per free axis.
    pub grid_steps: usize,
    /// Stop refining once a sweep over all axes improves `|alpha|` by less than this [deg].
    pub tolerance_deg: f64,
}

impl Default for DesignBounds {
    fn default() -> Self {
        DesignBounds {
            a: (0.0, 60.0),
            b: (0.0, 40.0),
            n: (0.0, 40.0),
            wo: None,
            grid_steps: 21,
            tolerance_deg: 0.01,
        }
    }
}

impl DesignBounds {
    /// Bounds collapsed onto a single mounting point.
    pub fn point(a: f64, b: f64, n: f64) -> Self {
        DesignBounds {
            a: (a, a),
            b: (b, b),
            n: (n, n),
            ..DesignBounds::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut axes = vec![("a", self.a), ("b", self.b), ("n", self.n)];
        if let Some(wo) = self.wo {
            axes.push(("wo", wo));
        }
        for (name, (lo, hi)) in axes {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ModelError::invalid(
                    "bounds_order",
                    format!("{name} bounds [{lo}, {hi}] must satisfy min <= max"),
                ));
            }
        }
        if self.grid_steps < 2 {
            return Err(ModelError::invalid(
                "grid_resolution",
                "optimizer grid needs >= 2 steps",
            ));
        }
        if !(self.tolerance_deg > 0.0) {
            return Err(ModelError::invalid(
                "tolerance_positive",
                format!("tolerance must be > 0, got {}", self.tolerance_deg),
            ));
        }
        Ok(())
    }

    fn ranges(&self, template: &MechanismParams) -> [(f64, f64); 4] {
        [
            self.a,
            self.b,
            self.n,
            self.wo.unwrap_or((template.wo, template.wo)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignOptimum {
    pub a: f64,
    pub b: f64,
    pub n: f64,
    pub wo: f64,
    /// Contact angle at the returned point [rad].
    pub alpha: f64,
    /// Best contact angle found on the coarse grid [rad].
    pub grid_alpha: f64,
    pub evaluations: usize,
}

impl DesignOptimum {
    pub fn params(&self, template: &MechanismParams) -> MechanismParams {
        MechanismParams {
            wo: self.wo,
            ..template.with_mounting(self.a, self.b, self.n)
        }
    }
}

fn axis_nodes((lo, hi): (f64, f64), steps: usize) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn objective(template: &MechanismParams, x: &[f64; 4]) -> Option<f64> {
    let p = MechanismParams {
        wo: x[3],
        ..template.with_mounting(x[0], x[1], x[2])
    };
    contact_angle(&p).ok().map(f64::abs)
}

/// Minimizes `|alpha|` over the mounting box: exhaustive coarse grid, then
/// per-axis bisection refinement around the best node.
pub fn minimize_contact_angle(
    template: &MechanismParams,
    bounds: &DesignBounds,
) -> Result<DesignOptimum> {
    bounds.validate()?;
    let ranges = bounds.ranges(template);
    let nodes: Vec<Vec<f64>> = ranges
        .iter()
        .map(|&r| axis_nodes(r, bounds.grid_steps))
        .collect();

    let mut points = Vec::new();
    for &a in &nodes[0] {
        for &b in &nodes[1] {
            for &n in &nodes[2] {
                for &wo in &nodes[3] {
                    points.push([a, b, n, wo]);
                }
            }
        }
    }
    let values: Vec<Option<f64>> = points.par_iter().map(|x| objective(template, x)).collect();
    let mut evaluations = points.len();

    let (mut best, mut best_val) = points
        .iter()
        .zip(&values)
        .filter_map(|(x, v)| v.map(|v| (*x, v)))
        .fold(None, |acc: Option<([f64; 4], f64)>, (x, v)| match acc {
            Some((_, bv)) if bv <= v => acc,
            _ => Some((x, v)),
        })
        .ok_or_else(|| {
            ModelError::NoFeasiblePoint(
                "no reachable configuration inside the design bounds".into(),
            )
        })?;
    let grid_alpha = best_val;

    let spacing: Vec<f64> = ranges
        .iter()
        .map(|&(lo, hi)| (hi - lo) / (bounds.grid_steps - 1) as f64)
        .collect();
    let tolerance = bounds.tolerance_deg.to_radians();
    loop {
        let before = best_val;
        for axis in 0..4 {
            let (lo_bound, hi_bound) = ranges[axis];
            if lo_bound == hi_bound {
                continue;
            }
            let mut lo = (best[axis] - spacing[axis]).max(lo_bound);
            let mut hi = (best[axis] + spacing[axis]).min(hi_bound);
            while hi - lo > 1e-7 {
                let mut probe = |v: f64| {
                    let mut x = best;
                    x[axis] = v;
                    evaluations += 1;
                    objective(template, &x)
                };
                let centre = best[axis];
                let left = 0.5 * (lo + centre);
                let right = 0.5 * (centre + hi);
                match (probe(left), probe(right)) {
                    (Some(l), _) if l < best_val => {
                        hi = centre;
                        best[axis] = left;
                        best_val = l;
                    }
                    (_, Some(r)) if r < best_val => {
                        lo = centre;
                        best[axis] = right;
                        best_val = r;
                    }
                    _ => {
                        lo = left;
                        hi = right;
                    }
                }
            }
        }
        if before - best_val < tolerance {
            break;
        }
    }

    Ok(DesignOptimum {
        a: best[0],
        b: best[1],
        n: best[2],
        wo: best[3],
        alpha: best_val,
        grid_alpha,
        evaluations,
    })
}

/// Wheel spacing `Wo` [mm] at which the template reaches contact angle `target` [rad].
pub fn backsolve_wheel_spacing(template: &MechanismParams, target: f64) -> Result<f64> {
    // alpha falls monotonically as the spacing (and so the wall clearance) grows;
    // spacings that leave no room for the spherical wheel count as "below target"
    let excess = |wo: f64| -> Result<f64> {
        let p = MechanismParams { wo, ..*template };
        match contact_angle(&p) {
            Ok(alpha) => Ok(target - alpha),
            Err(ModelError::InvalidGeometry(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let lo = template.dp * 1e-9;
    let hi = template.dp * (1.0 - 1e-12);
    let at_lo = excess(lo)?;
    if at_lo > 0.0 {
        return Err(ModelError::Unachievable(format!(
            "target {:.6} deg exceeds the largest reachable angle {:.6} deg",
            target.to_degrees(),
            (target - at_lo).to_degrees()
        )));
    }
    if excess(hi)? < 0.0 {
        return Err(ModelError::Unachievable(format!(
            "target {:.6} deg is below every reachable angle",
            target.to_degrees()
        )));
    }
    let mut lo = lo;
    let mut hi = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * template.dp {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reported values the optimized-design mounting has to reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountingTarget {
    /// Contact angle [rad].
    pub alpha: f64,
    /// Share of the total normal force carried by the Link-2 wheels.
    pub fn2_share: f64,
}

/// Longitudinal offset `a` giving contact angle `target` at a fixed separation `n - b`.
pub fn offset_for_angle(template: &MechanismParams, n_minus_b: f64, target: f64) -> Result<f64> {
    let at = |a: f64| contact_angle(&template.with_separation(a, n_minus_b));
    let start = at(0.0)?;
    if target > start {
        return Err(ModelError::Unachievable(format!(
            "angle {:.6} deg exceeds the zero-offset angle {:.6} deg at n - b = {n_minus_b}",
            target.to_degrees(),
            start.to_degrees()
        )));
    }
    // the raw angle reaches zero exactly when a equals the spherical-centre offset
    let hs = solve_configuration(&template.with_separation(0.0, n_minus_b))?.hs;
    bisect(0.0, hs, |a| Ok(target - at(a)?))
}

/// Recovers a mounting `(a, n - b)` that reproduces both the target contact
/// angle and the target Link-2 normal-force share under `spring` clamping.
pub fn match_prototype_mounting(
    template: &MechanismParams,
    masses: &MassModel,
    spring: &SpringModel,
    target: &MountingTarget,
) -> Result<(f64, f64)> {
    let share_excess = |nb: f64| -> Result<f64> {
        let a = offset_for_angle(template, nb, target.alpha)?;
        let forces = spring_clamped_forces(&template.with_separation(a, nb), masses, spring)?;
        Ok(target.fn2_share - forces.shares()[2])
    };
    // Link-2 share falls as the spherical wheel moves towards the Link-1 wheels
    let lo = 0.0;
    // largest separation at which the target angle is still reachable, to within 1% of L1
    let step = 0.01 * template.l1;
    let mut hi = 0.6 * template.l1;
    while hi > lo && offset_for_angle(template, hi, target.alpha).is_err() {
        hi -= step;
    }
    let hi = hi.max(lo);
    let (at_lo, at_hi) = (share_excess(lo)?, share_excess(hi)?);
    if at_lo > 0.0 || at_hi < 0.0 {
        return Err(ModelError::Unachievable(format!(
            "Link-2 share {} not bracketed by n - b in [{lo}, {hi}]",
            target.fn2_share
        )));
    }
    let nb = bisect(lo, hi, share_excess)?;
    Ok((offset_for_angle(template, nb, target.alpha)?, nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapsed_bounds_return_baseline() {
        let p = MechanismParams::default();
        let opt = minimize_contact_angle(&p, &DesignBounds::point(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(opt.alpha, contact_angle(&p).unwrap());
        assert_eq!((opt.a, opt.b, opt.n), (0.0, 0.0, 0.0));
    }

    #[test]
    fn monotone_objective_lands_on_corner() {
        // with a = 0 the angle grows with n - b, so the best point has n at its minimum
        // and b at its maximum
        let p = MechanismParams::default();
        let bounds = DesignBounds {
            a: (0.0, 0.0),
            b: (0.0, 10.0),
            n: (0.0, 10.0),
            ..DesignBounds::default()
        };
        let opt = minimize_contact_angle(&p, &bounds).unwrap();
        assert_eq!((opt.b, opt.n), (10.0, 0.0));
    }

    #[test]
    fn never_worse_than_grid() {
        let p = MechanismParams::default();
        let opt = minimize_contact_angle(&p, &DesignBounds::default()).unwrap();
        assert!(opt.alpha <= opt.grid_alpha);
        assert!(opt.alpha.to_degrees() <= 2.0);
    }

    #[test]
    fn infeasible_box() {
        let p = MechanismParams {
            l2: 20.0,
            ..MechanismParams::default()
        };
        assert!(matches!(
            minimize_contact_angle(&p, &DesignBounds::point(0.0, 0.0, 0.0)),
            Err(ModelError::NoFeasiblePoint(_))
        ));
    }

    #[test]
    fn backsolve_round_trip_and_range() {
        let p = MechanismParams::default();
        let alpha = contact_angle(&MechanismParams { wo: 45.0, ..p }).unwrap();
        let wo = backsolve_wheel_spacing(&p, alpha).unwrap();
        assert!((wo - 45.0).abs() < 1e-6);
        assert!(matches!(
            backsolve_wheel_spacing(&p, 90f64.to_radians()),
            Err(ModelError::Unachievable(_))
        ));
    }

    #[test]
    fn offset_for_angle_hits_target() {
        let p = MechanismParams::default();
        let target = 1.6f64.to_radians();
        let a = offset_for_angle(&p, 25.0, target).unwrap();
        let alpha = contact_angle(&p.with_separation(a, 25.0)).unwrap();
        assert!((alpha - target).abs() < 1e-8);
    }
}
