use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Dual, Jet};

use super::metric::MetricSpec;

/// Frame index of `e₁ ∝ ∂_r`.
pub const RADIAL: usize = 0;
/// Frame index of `e₂ ∝ ∂_θ`.
pub const POLAR: usize = 1;
/// Frame index of `e₃ ∝ ∂_φ`.
pub const AZIMUTHAL: usize = 2;

/// Scale factors `hᵢ = √g_ii` of the diagonal coframe `eⁱ = hᵢ dxⁱ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FramePoint {
    pub h: [f64; 3],
    /// `dh[i] = (∂_r hᵢ, ∂_θ hᵢ)`.
    pub dh: [[f64; 2]; 3],
}

/// Coordinate Christoffel symbols `Γ^k_ij`, indexed `gamma[k][i][j]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChristoffelData {
    pub gamma: [[[f64; 3]; 3]; 3],
}

impl ChristoffelData {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }
}

/// Frame connection coefficients `C_mij = ⟨e_m, ∇_{e_i} e_j⟩`, indexed `c[m][i][j]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConnectionData {
    pub c: [[[f64; 3]; 3]; 3],
}

impl ConnectionData {
    pub fn get(&self, m: usize, i: usize, j: usize) -> f64 {
        self.c[m][i][j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvaturePoint {
    pub scalar: f64,
}

/// Everything the spinor layer needs at one point: metric jets, scale factors,
/// Christoffel symbols and connection coefficients, the latter two with gradients.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub r: f64,
    pub theta: f64,
    pub g: [Jet; 3],
    pub h: [Jet; 3],
    pub gamma: [[[Dual; 3]; 3]; 3],
    pub conn: [[[Dual; 3]; 3]; 3],
}

fn zero3() -> [[[Dual; 3]; 3]; 3] {
    [[[Dual::ZERO; 3]; 3]; 3]
}

impl PointGeometry {
    pub fn at(spec: &MetricSpec, r: f64, theta: f64) -> Result<Self> {
        let g = spec.components(r, theta)?;
        for (k, gk) in g.iter().enumerate() {
            if !(gk.v > 0.0) || !gk.is_finite() {
                return Err(Error::DomainError(format!(
                    "metric component {k} is {} at ({r}, {theta})",
                    gk.v
                )));
            }
        }
        let h = [g[0].sqrt(), g[1].sqrt(), g[2].sqrt()];

        // ∂_i g_jj as a dual; φ-derivatives vanish.
        let dg = |i: usize, j: usize| -> Dual {
            if i == AZIMUTHAL {
                Dual::ZERO
            } else {
                g[j].partial(i)
            }
        };
        let ginv = [g[0].to_dual().recip(), g[1].to_dual().recip(), g[2].to_dual().recip()];

        let mut gamma = zero3();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = Dual::ZERO;
                    if k == j {
                        s += dg(i, k);
                    }
                    if k == i {
                        s += dg(j, k);
                    }
                    if i == j {
                        s -= dg(k, i);
                    }
                    gamma[k][i][j] = 0.5 * ginv[k] * s;
                }
            }
        }

        let hd = [h[0].to_dual(), h[1].to_dual(), h[2].to_dual()];
        let dh = |i: usize, j: usize| -> Dual {
            if i == AZIMUTHAL {
                Dual::ZERO
            } else {
                h[j].partial(i)
            }
        };
        let mut conn = zero3();
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = hd[m] / hd[j] * gamma[m][i][j];
                    if m == j {
                        s -= dh(i, j) / hd[j];
                    }
                    conn[m][i][j] = s / hd[i];
                }
            }
        }

        Ok(PointGeometry {
            r,
            theta,
            g,
            h,
            gamma,
            conn,
        })
    }

    pub fn frame(&self) -> FramePoint {
        let mut out = FramePoint {
            h: [0.0; 3],
            dh: [[0.0; 2]; 3],
        };
        for i in 0..3 {
            out.h[i] = self.h[i].v;
            out.dh[i] = self.h[i].d;
        }
        out
    }

    pub fn christoffel(&self) -> ChristoffelData {
        ChristoffelData {
            gamma: self.gamma.map(|a| a.map(|b| b.map(|x| x.v))),
        }
    }

    pub fn connection(&self) -> ConnectionData {
        ConnectionData {
            c: self.conn.map(|a| a.map(|b| b.map(|x| x.v))),
        }
    }

    /// `C_mij` value.
    #[inline]
    pub fn c(&self, m: usize, i: usize, j: usize) -> f64 {
        self.conn[m][i][j].v
    }

    /// Scalar curvature from the contracted coordinate Riemann tensor.
    pub fn scalar_curvature(&self) -> f64 {
        let d = |x: Dual, k: usize| if k == AZIMUTHAL { 0.0 } else { x.d[k] };
        let gm = &self.gamma;
        let mut scalar = 0.0;
        for s in 0..3 {
            let mut ric = 0.0;
            for p in 0..3 {
                ric += d(gm[p][s][s], p) - d(gm[p][p][s], s);
                for l in 0..3 {
                    ric += gm[p][p][l].v * gm[l][s][s].v - gm[p][s][l].v * gm[l][p][s].v;
                }
            }
            scalar += ric / self.g[s].v;
        }
        scalar
    }

    /// `√det g`.
    pub fn volume_density(&self) -> f64 {
        self.h[0].v * self.h[1].v * self.h[2].v
    }
}

pub fn frame_point(spec: &MetricSpec, r: f64, theta: f64) -> Result<FramePoint> {
    Ok(PointGeometry::at(spec, r, theta)?.frame())
}

pub fn christoffel(spec: &MetricSpec, r: f64, theta: f64) -> Result<ChristoffelData> {
    Ok(PointGeometry::at(spec, r, theta)?.christoffel())
}

pub fn connection_coefficients(spec: &MetricSpec, r: f64, theta: f64) -> Result<ConnectionData> {
    Ok(PointGeometry::at(spec, r, theta)?.connection())
}

pub fn scalar_curvature(spec: &MetricSpec, r: f64, theta: f64) -> Result<CurvaturePoint> {
    Ok(CurvaturePoint {
        scalar: PointGeometry::at(spec, r, theta)?.scalar_curvature(),
    })
}
