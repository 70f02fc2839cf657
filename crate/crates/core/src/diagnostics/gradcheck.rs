//! Finite-difference check of the assembled energy gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{Assembly, EnergyParams};
use crate::mesh::TriMesh;
use crate::scalar::{Scalar, Vec2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub directions: usize,
}

/// Compares `<grad E(u), d>` with the central difference
/// `(E(u + h d) - E(u - h d)) / 2h` for `directions` random unit-scale `d`
/// at a random field `u`. No boundary condition is imposed, so every
/// nodal value is exercised.
pub fn gradient_check<T: Scalar>(
    mesh: &TriMesh<T>,
    p: &EnergyParams<T>,
    directions: usize,
    h: T,
    seed: u64,
) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_field = |n: usize| -> Vec<Vec2<T>> {
        (0..n)
            .map(|_| Vec2::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
            .collect()
    };
    let n = mesh.vertex_count();
    let asm = Assembly::new(mesh);
    let u = rand_field(n);
    let mut g = vec![Vec2::zero(); n];
    asm.evaluate(&u, p.eps, p.k, p.penalty, Some(&mut g));
    let mut worst = 0.0f64;
    let two = T::lit(2.0);
    for _ in 0..directions {
        let d = rand_field(n);
        let shifted = |sign: T| -> T {
            let v: Vec<_> = u.iter().zip(&d).map(|(a, b)| *a + *b * (h * sign)).collect();
            asm.evaluate(&v, p.eps, p.k, p.penalty, None).total
        };
        let fd = (shifted(T::one()) - shifted(-T::one())) / (two * h);
        let an: T = g.iter().zip(&d).map(|(a, b)| a.dot(*b)).sum();
        let scale = an.abs().max(fd.abs()).max(T::lit(1e-12));
        worst = worst.max(((an - fd).abs() / scale).to_f64_lossy());
    }
    GradientCheck {
        max_rel_error: worst,
        directions,
    }
}
