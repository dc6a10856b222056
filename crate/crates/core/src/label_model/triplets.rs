//! Closed-form triplet systems for three conditionally independent LFs.

use crate::error::{invalid, Error, Result};

/// Moments with magnitude at or below this are treated as zero.
pub const EPS_FLOOR: f64 = 1e-6;

/// Negative discriminants down to `-DISCRIMINANT_TOL` are clamped to zero.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Magnitudes `(|a_a|, |a_b|, |a_c|)` of `E[g(lf) g(y)]` from the pairwise
/// moments `e_ab = a_a a_b / E[g(y)^2]`.
pub fn continuous_triplets(e_ab: f64, e_ac: f64, e_bc: f64, second_moment: f64) -> Result<(f64, f64, f64)> {
    if !(second_moment > 0.0) {
        return invalid(format!("second moment must be positive, got {second_moment}"));
    }
    for (name, e) in [("e_ab", e_ab), ("e_ac", e_ac), ("e_bc", e_bc)] {
        if !(e.abs() > EPS_FLOOR) {
            return Err(Error::DegenerateMoment(format!("|{name}| = {} is below the floor", e.abs())));
        }
    }
    let (ab, ac, bc) = (e_ab.abs(), e_ac.abs(), e_bc.abs());
    Ok((
        (ab * ac * second_moment / bc).sqrt(),
        (ab * bc * second_moment / ac).sqrt(),
        (ac * bc * second_moment / ab).sqrt(),
    ))
}

/// Class-conditional probabilities `(alpha_a, alpha_b, alpha_c)` with
/// `alpha = P(g(lf)_i = 1 | Y = y1)` under a two-point prior `P(Y = y1) = p`
/// where `g(y1)_i = 1` and `g(y2)_i = -1`.
///
/// Inputs are `o_xy = P(g(lf_x)_i = 1, g(lf_y)_i = 1)` and
/// `l_x = P(g(lf_x)_i = 1)`. Writing `alpha' = (l - p alpha) / (1 - p)` for the
/// second class, the joint probabilities satisfy
/// `(alpha_x - l_x)(alpha_y - l_y) = (o_xy - l_x l_y)(1 - p) / p =: kappa_xy`.
/// One unknown is obtained from a quadratic and the other two follow linearly.
/// The root with `alpha_a > l_a` is returned.
pub fn quadratic_triplets(
    o_ab: f64,
    o_ac: f64,
    o_bc: f64,
    l_a: f64,
    l_b: f64,
    l_c: f64,
    p: f64,
) -> Result<(f64, f64, f64)> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("class probability must lie in (0, 1), got {p}"));
    }
    for v in [o_ab, o_ac, o_bc, l_a, l_b, l_c] {
        if !(0.0..=1.0).contains(&v) {
            return invalid(format!("probability {v} outside [0, 1]"));
        }
    }
    let scale = (1.0 - p) / p;
    let k_ab = (o_ab - l_a * l_b) * scale;
    let k_ac = (o_ac - l_a * l_c) * scale;
    let k_bc = (o_bc - l_b * l_c) * scale;
    let l = [l_a, l_b, l_c];

    // Pivot on the unknown whose quadratic has the best-conditioned leading
    // coefficient: for unknown x with partners (y, z) the equation reads
    // k_yz x^2 - 2 k_yz l_x x + (k_yz l_x^2 - k_xy k_xz) = 0.
    let systems = [(0, k_bc, k_ab, k_ac), (1, k_ac, k_ab, k_bc), (2, k_ab, k_ac, k_bc)];
    let &(pivot, lead, k1, k2) = systems
        .iter()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .expect("three systems");
    if !(lead.abs() > EPS_FLOOR) {
        return Err(Error::DegenerateMoment("all pairwise covariances are below the floor".into()));
    }
    let b = -2.0 * lead * l[pivot];
    let c = lead * l[pivot] * l[pivot] - k1 * k2;
    let mut disc = b * b - 4.0 * lead * c;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_TOL {
            return Err(Error::InconsistentMoments(format!(
                "negative discriminant {disc} in the quadratic triplet system"
            )));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let candidates = [(-b + root) / (2.0 * lead), (-b - root) / (2.0 * lead)];
    let solve = |x: f64| -> [f64; 3] {
        let dx = x - l[pivot];
        let mut delta = [0.0; 3];
        delta[pivot] = dx;
        // The two remaining unknowns in index order.
        let others: Vec<usize> = (0..3).filter(|&k| k != pivot).collect();
        let kx = |o: usize| match (pivot.min(o), pivot.max(o)) {
            (0, 1) => k_ab,
            (0, 2) => k_ac,
            _ => k_bc,
        };
        for o in others {
            delta[o] = if dx == 0.0 { 0.0 } else { kx(o) / dx };
        }
        [l[0] + delta[0], l[1] + delta[1], l[2] + delta[2]]
    };
    let sols = candidates.map(solve);
    let in_unit = |s: &[f64; 3]| s.iter().all(|v| (0.0..=1.0).contains(v));
    let (d0, d1) = (sols[0][0] - l_a, sols[1][0] - l_a);
    let chosen = if d1 > d0 || (d1 == d0 && in_unit(&sols[1]) && !in_unit(&sols[0])) { sols[1] } else { sols[0] };
    Ok((chosen[0], chosen[1], chosen[2]))
}

/// `E[d(lf_a, y)]` from the pairwise mean distances of a triplet, assuming the
/// distances are additive through the latent label.
pub fn isotropic_accuracies(d_ab: f64, d_ac: f64, d_bc: f64) -> Result<f64> {
    if ![d_ab, d_ac, d_bc].iter().all(|d| d.is_finite()) {
        return invalid("isotropic triplet needs three finite pairwise distances");
    }
    Ok(0.5 * (d_ab + d_ac - d_bc))
}

/// Assigns signs to per-LF magnitudes from one coordinate's `m x m` moment
/// matrix (row-major).
///
/// The reference LF is `anchor` (taken as positive) or, without one, the LF
/// with the largest total absolute moment. Signs propagate along a maximum
/// spanning tree of `|moment|` with `sign(b) = sign(a) sign(e_ab)`. Without an
/// anchor the global sign is chosen so that the signed accuracies sum to a
/// nonnegative value. LFs not reachable through moments above [`EPS_FLOOR`]
/// keep a positive sign.
pub fn resolve_signs(magnitudes: &[f64], moments: &[f64], anchor: Option<usize>) -> Result<Vec<f64>> {
    let m = magnitudes.len();
    if m < 2 {
        return invalid("sign resolution needs at least two labeling functions");
    }
    if moments.len() != m * m {
        return invalid("moment matrix does not match the number of labeling functions");
    }
    if let Some(a) = anchor {
        if a >= m {
            return invalid(format!("anchor {a} out of range"));
        }
    }
    let off = |a: usize, b: usize| moments[a * m + b];
    let strong = |a: usize, b: usize| off(a, b).abs() > EPS_FLOOR;
    if !(0..m).any(|a| (0..m).any(|b| a != b && strong(a, b))) {
        return Err(Error::SignAmbiguous("every pairwise moment is below the floor".into()));
    }
    let reference = anchor.unwrap_or_else(|| {
        let mut best = 0;
        let mut best_mass = f64::NEG_INFINITY;
        for a in 0..m {
            let mass: f64 = (0..m).filter(|&b| b != a).map(|b| off(a, b).abs()).sum();
            if mass > best_mass {
                best = a;
                best_mass = mass;
            }
        }
        best
    });

    let mut sign = vec![0i8; m];
    sign[reference] = 1;
    loop {
        let mut edge: Option<(usize, usize, f64)> = None;
        for a in (0..m).filter(|&a| sign[a] != 0) {
            for b in (0..m).filter(|&b| sign[b] == 0 && strong(a, b)) {
                let w = off(a, b).abs();
                if edge.is_none_or(|(_, _, best)| w > best) {
                    edge = Some((a, b, w));
                }
            }
        }
        match edge {
            Some((a, b, _)) => sign[b] = if off(a, b) > 0.0 { sign[a] } else { -sign[a] },
            None => break,
        }
    }
    let mut out: Vec<f64> = magnitudes
        .iter()
        .zip(&sign)
        .map(|(&mag, &s)| if s < 0 { -mag } else { mag })
        .collect();
    if anchor.is_none() && out.iter().sum::<f64>() < 0.0 {
        out.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(out)
}
