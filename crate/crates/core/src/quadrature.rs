//! Fixed quadrature rules on triangles (barycentric points, weights summing
//! to one) and on edges (parameter in `[0, 1]`).

/// A point in barycentric coordinates with its weight relative to the area.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

const fn sym3(a: f64, w: f64) -> [QuadPoint; 3] {
    let b = 1.0 - 2.0 * a;
    [
        QuadPoint { bary: [b, a, a], weight: w },
        QuadPoint { bary: [a, b, a], weight: w },
        QuadPoint { bary: [a, a, b], weight: w },
    ]
}

const fn join6(x: [QuadPoint; 3], y: [QuadPoint; 3]) -> [QuadPoint; 6] {
    [x[0], x[1], x[2], y[0], y[1], y[2]]
}

/// Six-point symmetric rule, exact for polynomials of degree 4.
pub const TRIANGLE_DEG4: [QuadPoint; 6] = join6(
    sym3(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_70),
    sym3(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64),
);

/// Radon's seven-point rule, exact for polynomials of degree 5.
pub fn triangle_deg5() -> [QuadPoint; 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    let [p1, p2, p3] = sym3(a1, w1);
    let [p4, p5, p6] = sym3(a2, w2);
    [
        QuadPoint {
            bary: [1.0 / 3.0; 3],
            weight: 9.0 / 40.0,
        },
        p1,
        p2,
        p3,
        p4,
        p5,
        p6,
    ]
}

/// Three-point Gauss-Legendre rule on `[0, 1]` as `(t, weight)` pairs.
pub fn gauss3() -> [(f64, f64); 3] {
    let d = 0.15f64.sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
