//! Fixed quadrature rules on triangles and edges.
//!
//! Two triangle rules are provided: the 6-point rule exact for polynomials of
//! degree 4 (the default everywhere in assembly — the highest-degree assembly
//! integrand, `α_ε(φ)·ψ_i·ψ_j` with P1 `φ`, is quartic) and the 12-point rule
//! exact for degree 6, used by the error indicators whose squared residuals
//! reach degree 6 and beyond. Edge integrals use 3-point Gauss–Legendre,
//! exact for degree 5.
//!
//! Conventions: triangle points are barycentric coordinates `(λ0, λ1, λ2)`,
//! edge points are parameters `t ∈ (0, 1)` along the edge, and all weights sum
//! to 1, so `∫_T g ≈ |T|·Σ w_q g(x_q)` and `∫_F g ≈ |F|·Σ w_q g(x_q)`.

/// One triangle quadrature point: barycentric coordinates and weight.
#[derive(Debug, Clone, Copy)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// 6-point rule, exact for polynomials of total degree ≤ 4.
pub const TRI_DEGREE_4: [TriPoint; 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const W2: f64 = 0.109_951_743_655_322;
    [
        TriPoint { bary: [1.0 - 2.0 * A1, A1, A1], weight: W1 },
        TriPoint { bary: [A1, 1.0 - 2.0 * A1, A1], weight: W1 },
        TriPoint { bary: [A1, A1, 1.0 - 2.0 * A1], weight: W1 },
        TriPoint { bary: [1.0 - 2.0 * A2, A2, A2], weight: W2 },
        TriPoint { bary: [A2, 1.0 - 2.0 * A2, A2], weight: W2 },
        TriPoint { bary: [A2, A2, 1.0 - 2.0 * A2], weight: W2 },
    ]
};

/// 12-point rule, exact for polynomials of total degree ≤ 6.
pub const TRI_DEGREE_6: [TriPoint; 12] = {
    const A1: f64 = 0.249_286_745_170_910;
    const W1: f64 = 0.116_786_275_726_379;
    const A2: f64 = 0.063_089_014_491_502;
    const W2: f64 = 0.050_844_906_370_207;
    const B1: f64 = 0.310_352_451_033_784;
    const B2: f64 = 0.053_145_049_844_817;
    const B3: f64 = 1.0 - B1 - B2;
    const W3: f64 = 0.082_851_075_618_374;
    [
        TriPoint { bary: [1.0 - 2.0 * A1, A1, A1], weight: W1 },
        TriPoint { bary: [A1, 1.0 - 2.0 * A1, A1], weight: W1 },
        TriPoint { bary: [A1, A1, 1.0 - 2.0 * A1], weight: W1 },
        TriPoint { bary: [1.0 - 2.0 * A2, A2, A2], weight: W2 },
        TriPoint { bary: [A2, 1.0 - 2.0 * A2, A2], weight: W2 },
        TriPoint { bary: [A2, A2, 1.0 - 2.0 * A2], weight: W2 },
        TriPoint { bary: [B1, B2, B3], weight: W3 },
        TriPoint { bary: [B2, B3, B1], weight: W3 },
        TriPoint { bary: [B3, B1, B2], weight: W3 },
        TriPoint { bary: [B1, B3, B2], weight: W3 },
        TriPoint { bary: [B2, B1, B3], weight: W3 },
        TriPoint { bary: [B3, B2, B1], weight: W3 },
    ]
};

/// One edge quadrature point: parameter along the edge and weight.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub t: f64,
    pub weight: f64,
}

/// 3-point Gauss–Legendre rule on the unit interval, exact for degree ≤ 5.
pub const EDGE_DEGREE_5: [EdgePoint; 3] = {
    // sqrt(3/5) to full f64 precision
    const R: f64 = 0.774_596_669_241_483_4;
    [
        EdgePoint { t: 0.5 * (1.0 - R), weight: 5.0 / 18.0 },
        EdgePoint { t: 0.5, weight: 8.0 / 18.0 },
        EdgePoint { t: 0.5 * (1.0 + R), weight: 5.0 / 18.0 },
    ]
};

/// Integrates `g` over the triangle `(p0, p1, p2)` with the given rule.
/// `area` is the (positive) triangle area.
pub fn integrate_tri(
    rule: &[TriPoint],
    pts: &[[f64; 2]; 3],
    area: f64,
    mut g: impl FnMut([f64; 2], [f64; 3]) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for q in rule {
        let x = [
            q.bary[0] * pts[0][0] + q.bary[1] * pts[1][0] + q.bary[2] * pts[2][0],
            q.bary[0] * pts[0][1] + q.bary[1] * pts[1][1] + q.bary[2] * pts[2][1],
        ];
        acc += q.weight * g(x, q.bary);
    }
    area * acc
}

/// Integrates `g` along the segment from `a` to `b`.
pub fn integrate_edge(a: [f64; 2], b: [f64; 2], mut g: impl FnMut([f64; 2]) -> f64) -> f64 {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut acc = 0.0;
    for q in EDGE_DEGREE_5 {
        let x = [a[0] + q.t * (b[0] - a[0]), a[1] + q.t * (b[1] - a[1])];
        acc += q.weight * g(x);
    }
    len * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF_TRI: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    /// Exact value of ∫ x^m y^n over the unit right triangle: m! n! / (m+n+2)!.
    fn monomial_exact(m: u32, n: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>();
        fact(m) * fact(n) / fact(m + n + 2)
    }

    fn check_rule(rule: &[TriPoint], degree: u32) {
        for m in 0..=degree {
            for n in 0..=(degree - m) {
                let got = integrate_tri(rule, &REF_TRI, 0.5, |x, _| {
                    x[0].powi(m as i32) * x[1].powi(n as i32)
                });
                let want = monomial_exact(m, n);
                assert!(
                    (got - want).abs() <= 1e-15 + 1e-13 * want.abs(),
                    "x^{m} y^{n}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let s4: f64 = TRI_DEGREE_4.iter().map(|q| q.weight).sum();
        let s6: f64 = TRI_DEGREE_6.iter().map(|q| q.weight).sum();
        let se: f64 = EDGE_DEGREE_5.iter().map(|q| q.weight).sum();
        assert!((s4 - 1.0).abs() < 1e-14);
        assert!((s6 - 1.0).abs() < 1e-14);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_4_rule_is_exact_to_degree_4() {
        check_rule(&TRI_DEGREE_4, 4);
    }

    #[test]
    fn degree_6_rule_is_exact_to_degree_6() {
        check_rule(&TRI_DEGREE_6, 6);
    }

    #[test]
    fn edge_rule_is_exact_to_degree_5() {
        for k in 0..=5 {
            let got = integrate_edge([0.0, 0.0], [1.0, 0.0], |x| x[0].powi(k));
            let want = 1.0 / (k as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "t^{k}: got {got}, want {want}");
        }
        // Arbitrary segment: mean of a quadratic in y along x = 0.
        let got = integrate_edge([0.0, 0.25], [0.0, 0.5], |x| 4.0 * x[1] * (1.0 - x[1]));
        let mean = got / 0.25;
        assert!((mean - 0.916_666_666_666_667).abs() < 1e-12);
    }

    #[test]
    fn barycentric_coordinates_are_consistent() {
        // Quadrature of λ-products matches the closed form
        // ∫ λ0^a λ1^b λ2^c = 2|T|·a!b!c!/(a+b+c+2)!.
        let got = integrate_tri(&TRI_DEGREE_4, &REF_TRI, 0.5, |_, l| l[0] * l[1] * l[2] * l[2]);
        let want = 2.0 * 0.5 * (1.0 * 1.0 * 2.0) / 720.0;
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
    }
}
