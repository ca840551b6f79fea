//! Evidence of wandering behaviour: pairs `(x, z)` where `z` is reachable
//! from `x` at a level strictly below the level needed to come back.
//!
//! A certificate with `eps = L(x, z)` and `gap = L(z, x) - L(x, z)` says
//! that for every `eps'` in `(eps, eps + gap)` there is an `eps'`-link from
//! `x` to `z` and none from `z` to `x`. Certificates hold at the sampled
//! resolution only.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::{LevelMatrix, LinkWitness};

/// Gap threshold for tabulated systems, which carry no grid spacing.
pub const TABLE_MIN_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct WanderingCertificate {
    pub x: usize,
    pub z: usize,
    pub eps: f64,
    pub gap: f64,
    pub witness_forward: LinkWitness,
}

/// `4h` on grids, [`TABLE_MIN_GAP`] otherwise.
pub fn default_min_gap(matrix: &LevelMatrix) -> f64 {
    matrix.grid_spacing().map_or(TABLE_MIN_GAP, |h| 4.0 * h)
}

/// Every pair of covered samples with `L(z, x) - L(x, z) >= min_gap`,
/// ordered by gap descending, then `x`, then `z`.
pub fn find_wandering_certificates(matrix: &LevelMatrix, min_gap: f64) -> Result<Vec<WanderingCertificate>> {
    if !(min_gap > 0.0) {
        return Err(Error::InvalidSystem(format!("min_gap must be positive, got {min_gap}")));
    }
    let targets = matrix.targets();
    let mut out: Vec<WanderingCertificate> = targets
        .par_iter()
        .map(|&x| {
            let mut row = Vec::new();
            for &z in targets {
                let eps = matrix.level(x, z);
                let gap = matrix.level(z, x) - eps;
                // inf - inf is NaN and never passes
                if gap >= min_gap {
                    row.push(WanderingCertificate {
                        x,
                        z,
                        eps,
                        gap,
                        witness_forward: matrix.witness(x, z).expect("covered pair"),
                    });
                }
            }
            row
        })
        .flatten()
        .collect();
    out.sort_by(|a, b| {
        b.gap
            .total_cmp(&a.gap)
            .then(a.x.cmp(&b.x))
            .then(a.z.cmp(&b.z))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCertification {
    pub certified: bool,
    pub forward: f64,
    pub backward: f64,
    pub explanation: String,
}

/// Whether no `eps_prime`-link returns from `z` to `x`, given that one
/// leads from `x` to `z`.
pub fn certify_point(matrix: &LevelMatrix, x: usize, z: usize, eps_prime: f64) -> Result<PointCertification> {
    let forward = matrix.try_level(x, z)?;
    let backward = matrix.try_level(z, x)?;
    if !(eps_prime > forward) {
        return Err(Error::EpsPrimeTooSmall { eps_prime, forward });
    }
    let certified = backward > eps_prime;
    let w = matrix.window();
    let resolution = match matrix.grid_spacing() {
        Some(h) => format!("grid spacing {h}"),
        None => "tabulated samples".to_string(),
    };
    let explanation = format!(
        "L(x, z) = {forward}, L(z, x) = {backward}; {} {eps_prime} (steps {}..={}, {resolution})",
        if certified {
            "return level exceeds eps' ="
        } else {
            "return level within eps' ="
        },
        w.first,
        w.last,
    );
    Ok(PointCertification {
        certified,
        forward,
        backward,
        explanation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{level_matrix, MatrixOptions};
    use crate::space::CostSpace;
    use crate::system::{build_grid_system, Dynamics, MapSystem, DEFAULT_MAX_SAMPLES};

    fn table(map: Vec<usize>) -> LevelMatrix {
        let n = map.len();
        let costs = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        let space = CostSpace::from_matrix(n, costs, None).unwrap();
        let sys = MapSystem::tabulated("t", space, map, 2 * n).unwrap();
        level_matrix(&sys, None, &MatrixOptions::default()).unwrap()
    }

    #[test]
    fn cycles_have_no_certificates() {
        assert!(find_wandering_certificates(&table(vec![1, 2, 0]), 0.1).unwrap().is_empty());
    }

    #[test]
    fn two_point_system() {
        let m = table(vec![1, 1]);
        let certs = find_wandering_certificates(&m, TABLE_MIN_GAP).unwrap();
        assert_eq!(certs.len(), 1);
        assert_eq!((certs[0].x, certs[0].z, certs[0].eps, certs[0].gap), (0, 1, 0.0, 1.0));
        assert!(matches!(
            certify_point(&m, 1, 0, 0.5),
            Err(Error::EpsPrimeTooSmall { .. })
        ));
        assert!(!certify_point(&m, 1, 0, 1.5).unwrap().certified);
        assert!(certify_point(&m, 0, 1, 0.5).unwrap().certified);
    }

    #[test]
    fn doubling_map_certificate() {
        let sys = build_grid_system("f2", &[(-2.0, 2.0)], 0.01, 64, DEFAULT_MAX_SAMPLES).unwrap();
        let m = level_matrix(&sys, None, &MatrixOptions { window: None, spatial_index: true }).unwrap();
        let certs = find_wandering_certificates(&m, 0.3).unwrap();
        assert!(certs.windows(2).all(|w| w[0].gap >= w[1].gap));
        assert!(certs
            .iter()
            .any(|c| c.eps <= 0.02 && (c.gap - 2.0 / 3.0).abs() <= 0.03));
        let at = |v: f64| sys.space().nearest_sample(&[v]).unwrap();
        let c = certify_point(&m, at(0.0), at(1.0), 0.5).unwrap();
        assert!(c.certified, "{}", c.explanation);
    }

    #[test]
    fn identity_has_no_certificates() {
        let sys = build_grid_system("identity", &[(-1.0, 1.0)], 0.05, 8, DEFAULT_MAX_SAMPLES).unwrap();
        let m = level_matrix(&sys, None, &MatrixOptions::default()).unwrap();
        assert!(find_wandering_certificates(&m, default_min_gap(&m)).unwrap().is_empty());
    }
}
