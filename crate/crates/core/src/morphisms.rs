//! Concrete images of the abstract system on the two classical companions:
//! the 3x3 quadric-preserving picture (hyperboloid motions) and the 2x2
//! real unimodular picture.
//!
//! Both maps are fixed on generators and extended linearly on the algebra;
//! the group-level maps are genuine homomorphisms compatible with the
//! exponential, so simulated trajectories can be pushed forward pointwise
//! and the images of algebra brackets match the brackets of images.

use serde::{Deserialize, Serialize};

use crate::algebra::{adjoint_action, AlgebraElement, GroupElement, K_X, K_Y, K_Z};
use crate::Error;

pub type Mat3 = [[f64; 3]; 3];
pub type Mat2 = [[f64; 2]; 2];

/// Generator images in the 3x3 picture.
pub const O_X: Mat3 = [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
pub const O_Y: Mat3 = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
pub const O_Z: Mat3 = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];

/// Generator images in the 2x2 real picture.
pub const L_X: Mat2 = [[-0.5, 0.0], [0.0, 0.5]];
pub const L_Y: Mat2 = [[0.0, -0.5], [-0.5, 0.0]];
pub const L_Z: Mat2 = [[0.0, -0.5], [0.5, 0.0]];

/// Signature matrix of the preserved quadratic form x^2 + y^2 - z^2.
pub const ETA: [f64; 3] = [1.0, 1.0, -1.0];

/// Linear extension of K_x, K_y, K_z -> O_x, O_y, O_z.
pub fn rho1_algebra(m: &AlgebraElement) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m.kx * O_X[i][j] + m.ky * O_Y[i][j] + m.kz * O_Z[i][j];
        }
    }
    out
}

/// Linear extension of K_x, K_y, K_z -> L_x, L_y, L_z.
pub fn rho2_algebra(m: &AlgebraElement) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = m.kx * L_X[i][j] + m.ky * L_Y[i][j] + m.kz * L_Z[i][j];
        }
    }
    out
}

/// Group element in the 3x3 picture; preserves the (+,+,-) form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct So21Element {
    pub r: Mat3,
}

impl So21Element {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = self.r[i][0] * p[0] + self.r[i][1] * p[1] + self.r[i][2] * p[2];
        }
        out
    }

    /// Max-entry defect of R^T eta R = eta.
    pub fn form_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.r[k][i] * ETA[k] * self.r[k][j];
                }
                let target = if i == j { ETA[i] } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Group element in the 2x2 real picture; determinant one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sl2rElement {
    pub m: Mat2,
}

impl Sl2rElement {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// Group-level map to the 3x3 picture. The raw adjoint matrix in the K
/// basis exponentiates -O_x, +O_y, -O_z on the generators; conjugating by
/// diag(-1, 1, -1) fixes the signs so the contract
/// rho1_group(exp(tM)) = exp(t rho1_algebra(M)) holds on the nose.
pub fn rho1_group(x: &GroupElement) -> Result<So21Element, Error> {
    x.validate(1e-6)?;
    let cols = [
        adjoint_action(x, &K_X),
        adjoint_action(x, &K_Y),
        adjoint_action(x, &K_Z),
    ];
    let ad = [
        [cols[0].kx, cols[1].kx, cols[2].kx],
        [cols[0].ky, cols[1].ky, cols[2].ky],
        [cols[0].kz, cols[1].kz, cols[2].kz],
    ];
    let d = [-1.0, 1.0, -1.0];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = d[i] * d[j] * ad[i][j];
        }
    }
    Ok(So21Element { r })
}

/// Group-level map to the 2x2 real picture, in closed form from the group
/// coordinates; rho2_group(exp(tM)) = exp(t rho2_algebra(M)).
pub fn rho2_group(x: &GroupElement) -> Result<Sl2rElement, Error> {
    x.validate(1e-6)?;
    Ok(Sl2rElement {
        m: [[x.x1 - x.x4, x.x3 + x.x2], [x.x3 - x.x2, x.x1 + x.x4]],
    })
}

fn quadric(p: [f64; 3]) -> f64 {
    p[0] * p[0] + p[1] * p[1] - p[2] * p[2]
}

/// Push a base point through a path of 3x3 group elements, checking that
/// every image stays on the starting hyperboloid sheet.
pub fn hyperboloid_orbit(path: &[So21Element], p0: [f64; 3]) -> Result<Vec<[f64; 3]>, Error> {
    if p0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("hyperboloid_orbit: non-finite base point".into()));
    }
    let q0 = quadric(p0);
    let two_sheet = (q0 + 1.0).abs() <= 1e-8;
    if !two_sheet && (q0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(
            "hyperboloid_orbit: base point must satisfy x^2 + y^2 - z^2 = 1 or -1".into(),
        ));
    }
    let mut out = Vec::with_capacity(path.len());
    for (i, g) in path.iter().enumerate() {
        let p = g.apply(p0);
        if (quadric(p) - q0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "hyperboloid_orbit: drift off the quadric at step {i}"
            )));
        }
        if two_sheet && p[2].signum() != p0[2].signum() {
            return Err(Error::Numerical(format!(
                "hyperboloid_orbit: sheet change at step {i}"
            )));
        }
        out.push(p);
    }
    Ok(out)
}
