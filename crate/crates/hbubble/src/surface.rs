//! Discrete surface maps and the explicit constructions: the stereographic
//! sphere parametrization, sphere bubbles and their translates, cone maps,
//! bubble truncations to the Dirichlet disk, and capped compact bubbles.

use crate::chart::Chart;
use crate::error::GeometryError;
use crate::vec3::{self, Vec3};
use std::f64::consts::PI;
use std::io::Write;

/// Inverse stereographic projection phi(z) = (mu x, mu y, 1 - mu),
/// mu = 2 / (1 + |z|^2). Maps the plane onto the unit sphere; the point at
/// infinity corresponds to (0, 0, 1).
pub fn stereographic(z: [f64; 2]) -> Vec3 {
    let mu = 2.0 / (1.0 + z[0] * z[0] + z[1] * z[1]);
    [mu * z[0], mu * z[1], 1.0 - mu]
}

/// Far-field value of phi.
pub const STEREOGRAPHIC_FAR: Vec3 = [0.0, 0.0, 1.0];

/// A discrete map from a chart into R^3.
#[derive(Debug, Clone)]
pub struct SurfaceMap {
    chart: Chart,
    values: Vec<Vec3>,
    far_field: Option<Vec3>,
}

/// Plane-Cartesian derivative fields of a map with the plane quadrature
/// measure. Shared center/pole nodes carry zero weight (their cells have
/// zero plane measure); all other weights are positive.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub ux: Vec<Vec3>,
    pub uy: Vec<Vec3>,
    pub weight: Vec<f64>,
}

impl GradientField {
    /// max over nodes of |grad u| = sqrt(|u_x|^2 + |u_y|^2).
    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.ux.iter().zip(&self.uy) {
            m = m.max((vec3::norm2(*a) + vec3::norm2(*b)).sqrt());
        }
        m
    }
}

impl SurfaceMap {
    pub fn new(
        chart: Chart,
        values: Vec<Vec3>,
        far_field: Option<Vec3>,
    ) -> Result<Self, GeometryError> {
        if values.len() != chart.node_count() {
            return Err(GeometryError::Parameter(format!(
                "value count {} does not match chart node count {}",
                values.len(),
                chart.node_count()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !vec3::is_finite(*v) {
                return Err(GeometryError::NonFinite(i));
            }
        }
        for idx in chart.boundary_nodes() {
            if values[idx] != [0.0, 0.0, 0.0] {
                return Err(GeometryError::BoundaryNotZero(idx));
            }
        }
        let far_field = match (&chart, far_field) {
            (Chart::Sphere(_), None) => Some(values[0]),
            (_, f) => f,
        };
        Ok(SurfaceMap {
            chart,
            values,
            far_field,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Vec<Vec3> {
        &mut self.values
    }

    pub fn far_field(&self) -> Option<Vec3> {
        self.far_field
    }

    pub fn set_far_field(&mut self, f: Option<Vec3>) {
        self.far_field = f;
    }

    /// Sample a plane-point function on every node. On the sphere chart the
    /// north pole takes the declared limit `far`.
    pub fn sample_analytic(
        chart: Chart,
        f: impl Fn([f64; 2]) -> Vec3,
        far: Option<Vec3>,
    ) -> Result<Self, GeometryError> {
        let n = chart.node_count();
        let mut values = vec![[0.0; 3]; n];
        for idx in 0..n {
            values[idx] = match chart.plane_point(idx) {
                Some(z) => f(z),
                None => far.ok_or(GeometryError::MissingFarField)?,
            };
        }
        Self::new(chart, values, far)
    }

    pub fn scaled(&self, s: f64) -> SurfaceMap {
        SurfaceMap {
            chart: self.chart,
            values: self.values.iter().map(|v| vec3::scale(*v, s)).collect(),
            far_field: self.far_field.map(|v| vec3::scale(v, s)),
        }
    }

    pub fn translated(&self, t: Vec3) -> SurfaceMap {
        SurfaceMap {
            chart: self.chart,
            values: self.values.iter().map(|v| vec3::add(*v, t)).collect(),
            far_field: self.far_field.map(|v| vec3::add(v, t)),
        }
    }

    /// Second-order finite-difference derivative fields with the chart's
    /// plane quadrature measure.
    pub fn differentiate(&self) -> GradientField {
        let (ux, uy) = self.chart.d_fields(&self.values);
        GradientField {
            ux,
            uy,
            weight: self.chart.weights(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| vec3::norm(*v)).fold(0.0, f64::max)
    }

    // ------------------------------------------------------- interpolation

    /// Bicubic (Catmull–Rom) interpolation of the map at a plane point.
    /// Returns `None` when the point lies outside the chart: outside the
    /// unit disk (where Dirichlet maps vanish) or outside the window.
    pub fn eval_at_plane(&self, z: [f64; 2]) -> Option<Vec3> {
        match &self.chart {
            Chart::Disk(d) => {
                let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
                if r > 1.0 + 1e-12 {
                    return None;
                }
                let theta = z[1].atan2(z[0]);
                let h_r = 1.0 / d.n_r as f64;
                let fr = (r / h_r).min(d.n_r as f64);
                let m = fr.floor() as isize;
                let t = fr - m as f64;
                let h_t = 2.0 * PI / d.n_theta as f64;
                let row_val = |ri: isize| -> Vec3 {
                    let (ring, ang) = if ri < 0 {
                        ((-ri) as usize, theta + PI)
                    } else {
                        (ri as usize, theta)
                    };
                    if ring == 0 {
                        return self.values[0];
                    }
                    if ring > d.n_r {
                        return [0.0; 3];
                    }
                    self.ring_interp_disk(ring, ang / h_t)
                };
                Some(catmull(
                    [row_val(m - 1), row_val(m), row_val(m + 1), row_val(m + 2)],
                    t,
                ))
            }
            Chart::Sphere(s) => {
                let rho = (z[0] * z[0] + z[1] * z[1]).sqrt();
                let theta = if rho == 0.0 { PI } else { 2.0 * (1.0 / rho).atan() };
                let phi = z[1].atan2(z[0]);
                let h_lat = PI / s.n_lat as f64;
                let h_lon = 2.0 * PI / s.n_lon as f64;
                let ftheta = (theta / h_lat).clamp(0.0, s.n_lat as f64);
                let m = ftheta.floor() as isize;
                let t = ftheta - m as f64;
                let row_val = |ri: isize| -> Vec3 {
                    let (row, ang) = if ri < 0 {
                        ((-ri) as usize, phi + PI)
                    } else if ri as usize > s.n_lat {
                        (2 * s.n_lat - ri as usize, phi + PI)
                    } else {
                        (ri as usize, phi)
                    };
                    if row == 0 {
                        return self.values[0];
                    }
                    if row == s.n_lat {
                        return self.values[1];
                    }
                    self.ring_interp_sphere(row, ang / h_lon)
                };
                Some(catmull(
                    [row_val(m - 1), row_val(m), row_val(m + 1), row_val(m + 2)],
                    t,
                ))
            }
            Chart::Window(w) => {
                let h = 2.0 * w.half_width / (w.n - 1) as f64;
                let fx = (z[0] + w.half_width) / h;
                let fy = (z[1] + w.half_width) / h;
                if fx < -1e-9 || fy < -1e-9 || fx > (w.n - 1) as f64 + 1e-9 || fy > (w.n - 1) as f64 + 1e-9
                {
                    return None;
                }
                let mx = fx.floor() as isize;
                let my = fy.floor() as isize;
                let tx = fx - mx as f64;
                let ty = fy - my as f64;
                let clampi = |i: isize| -> usize { i.clamp(0, (w.n - 1) as isize) as usize };
                let mut rows = [[0.0; 3]; 4];
                for (k, dy) in (-1..=2).enumerate() {
                    let iy = clampi(my + dy);
                    let mut cols = [[0.0; 3]; 4];
                    for (l, dx) in (-1..=2).enumerate() {
                        let ix = clampi(mx + dx);
                        cols[l] = self.values[iy * w.n + ix];
                    }
                    rows[k] = catmull(cols, tx);
                }
                Some(catmull(rows, ty))
            }
        }
    }

    fn ring_interp_disk(&self, ring: usize, fj: f64) -> Vec3 {
        let Chart::Disk(d) = self.chart else { unreachable!() };
        let n = d.n_theta as isize;
        let m = fj.floor() as isize;
        let t = fj - m as f64;
        let at = |j: isize| -> Vec3 {
            let jj = j.rem_euclid(n) as usize;
            self.values[self.chart.disk_idx(ring, jj)]
        };
        catmull([at(m - 1), at(m), at(m + 1), at(m + 2)], t)
    }

    fn ring_interp_sphere(&self, row: usize, fj: f64) -> Vec3 {
        let Chart::Sphere(s) = self.chart else { unreachable!() };
        let n = s.n_lon as isize;
        let m = fj.floor() as isize;
        let t = fj - m as f64;
        let at = |j: isize| -> Vec3 {
            let jj = j.rem_euclid(n) as usize;
            self.values[self.chart.sphere_idx(row, jj)]
        };
        catmull([at(m - 1), at(m), at(m + 1), at(m + 2)], t)
    }

    // ------------------------------------------------------------- export

    /// CSV dump: header `chart,i,j,x,y,u1,u2,u3`, LF newlines, floats with
    /// 17 significant digits. For the sphere chart (x, y) are the chart
    /// coordinates (colatitude, longitude).
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(b"chart,i,j,x,y,u1,u2,u3\n")?;
        let name = self.chart.name();
        for idx in 0..self.chart.node_count() {
            let (i, j) = self.chart.node_ij(idx);
            let (x, y) = self.chart.node_coords(idx);
            let v = self.values[idx];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                name,
                i,
                j,
                fmt17(x),
                fmt17(y),
                fmt17(v[0]),
                fmt17(v[1]),
                fmt17(v[2])
            )?;
        }
        Ok(())
    }

    /// Wavefront OBJ export of the image surface.
    pub fn write_obj(&self, mut w: impl Write) -> std::io::Result<()> {
        for v in &self.values {
            writeln!(w, "v {} {} {}", fmt17(v[0]), fmt17(v[1]), fmt17(v[2]))?;
        }
        let f1 = |i: usize| i + 1; // OBJ indices are 1-based
        match &self.chart {
            Chart::Disk(d) => {
                for j in 0..d.n_theta {
                    let jp = (j + 1) % d.n_theta;
                    writeln!(
                        w,
                        "f {} {} {}",
                        f1(0),
                        f1(self.chart.disk_idx(1, j)),
                        f1(self.chart.disk_idx(1, jp))
                    )?;
                }
                for i in 1..d.n_r {
                    for j in 0..d.n_theta {
                        let jp = (j + 1) % d.n_theta;
                        writeln!(
                            w,
                            "f {} {} {} {}",
                            f1(self.chart.disk_idx(i, j)),
                            f1(self.chart.disk_idx(i + 1, j)),
                            f1(self.chart.disk_idx(i + 1, jp)),
                            f1(self.chart.disk_idx(i, jp))
                        )?;
                    }
                }
            }
            Chart::Sphere(s) => {
                for j in 0..s.n_lon {
                    let jp = (j + 1) % s.n_lon;
                    writeln!(
                        w,
                        "f {} {} {}",
                        f1(0),
                        f1(self.chart.sphere_idx(1, j)),
                        f1(self.chart.sphere_idx(1, jp))
                    )?;
                    writeln!(
                        w,
                        "f {} {} {}",
                        f1(1),
                        f1(self.chart.sphere_idx(s.n_lat - 1, jp)),
                        f1(self.chart.sphere_idx(s.n_lat - 1, j))
                    )?;
                }
                for i in 1..s.n_lat - 1 {
                    for j in 0..s.n_lon {
                        let jp = (j + 1) % s.n_lon;
                        writeln!(
                            w,
                            "f {} {} {} {}",
                            f1(self.chart.sphere_idx(i, j)),
                            f1(self.chart.sphere_idx(i + 1, j)),
                            f1(self.chart.sphere_idx(i + 1, jp)),
                            f1(self.chart.sphere_idx(i, jp))
                        )?;
                    }
                }
            }
            Chart::Window(win) => {
                for iy in 0..win.n - 1 {
                    for ix in 0..win.n - 1 {
                        writeln!(
                            w,
                            "f {} {} {} {}",
                            f1(iy * win.n + ix),
                            f1(iy * win.n + ix + 1),
                            f1((iy + 1) * win.n + ix + 1),
                            f1((iy + 1) * win.n + ix)
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn catmull(p: [Vec3; 4], t: f64) -> Vec3 {
    let t2 = t * t;
    let t3 = t2 * t;
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = 0.5
            * (2.0 * p[1][c]
                + (-p[0][c] + p[2][c]) * t
                + (2.0 * p[0][c] - 5.0 * p[1][c] + 4.0 * p[2][c] - p[3][c]) * t2
                + (-p[0][c] + 3.0 * p[1][c] - 3.0 * p[2][c] + p[3][c]) * t3);
    }
    out
}

// ------------------------------------------------------------ constructions

/// The sphere bubble: phi / H0 on the sphere chart, a conformal
/// parametrization of the sphere of radius 1/|H0| centered at the origin.
pub fn make_sphere_bubble(h0: f64, n_lat: usize, n_lon: usize) -> Result<SurfaceMap, GeometryError> {
    if h0 == 0.0 {
        return Err(GeometryError::ZeroCurvature);
    }
    let chart = Chart::sphere(n_lat, n_lon)?;
    let n = chart.node_count();
    let mut values = vec![[0.0; 3]; n];
    for idx in 0..n {
        let (theta, phi) = chart.node_coords(idx);
        values[idx] = vec3::scale(
            [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
            1.0 / h0,
        );
    }
    SurfaceMap::new(chart, values, Some([0.0, 0.0, 1.0 / h0]))
}

/// Shift a sphere bubble down the x3 axis: omega^r = omega^0 - r e3.
pub fn translate_sphere(omega0: &SurfaceMap, r: f64) -> SurfaceMap {
    omega0.translated([0.0, 0.0, -r])
}

/// The cone map: phi inside |z| < delta, then the linear collapse
/// ((1-|z|)/(1-delta)) phi(delta z/|z|) out to the boundary. Delta is
/// snapped to the nearest grid ring so the slope kink lies on a node ring;
/// the snapped value is returned with the map.
pub fn make_cone_map(
    delta: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<(SurfaceMap, f64), GeometryError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GeometryError::Parameter(format!(
            "cone delta must lie in (0,1), got {delta}"
        )));
    }
    let chart = Chart::disk(n_r, n_theta)?;
    let ring = ((delta * n_r as f64).round() as usize).clamp(1, n_r - 1);
    let snapped = ring as f64 / n_r as f64;
    let n = chart.node_count();
    let mut values = vec![[0.0; 3]; n];
    for idx in 0..n {
        let (i, _) = chart.node_ij(idx);
        // decide the piece by the exact ring radius i/n_r
        let r = i as f64 / n_r as f64;
        let z = chart.plane_point(idx).unwrap();
        values[idx] = if i < ring {
            stereographic(z)
        } else if i == n_r {
            [0.0; 3]
        } else {
            let dir = [snapped * z[0] / r, snapped * z[1] / r];
            vec3::scale(stereographic(dir), (1.0 - r) / (1.0 - snapped))
        };
    }
    Ok((SurfaceMap::new(chart, values, None)?, snapped))
}

/// Half-angle of the cone sector parametrized by the cone map.
pub fn cone_half_angle(delta: f64) -> f64 {
    ((1.0 - delta * delta) / (1.0 + delta * delta)).acos()
}

/// Truncate a sphere-chart map to the Dirichlet disk with the four-piece
/// construction: the rescaled map omega(z/delta^5) inside |z| < delta^4,
/// two logarithmic interpolations through the far-field value, and zero
/// outside |z| >= delta.
pub fn truncate_bubble(
    omega: &SurfaceMap,
    delta: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<SurfaceMap, GeometryError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(GeometryError::Parameter(format!(
            "truncation delta must lie in (0,1), got {delta}"
        )));
    }
    if !matches!(omega.chart(), Chart::Sphere(_)) {
        return Err(GeometryError::ChartMismatch {
            expected: "sphere".into(),
            got: omega.chart().name().into(),
        });
    }
    let far = omega.far_field().ok_or(GeometryError::MissingFarField)?;
    let chart = Chart::disk(n_r, n_theta)?;
    let log_delta = delta.ln();
    let d2 = delta * delta;
    let d4 = d2 * d2;
    let d5 = d4 * delta;
    let n = chart.node_count();
    let mut values = vec![[0.0; 3]; n];
    for idx in 0..n {
        let (i, _) = chart.node_ij(idx);
        let r = i as f64 / n_r as f64;
        let z = chart.plane_point(idx).unwrap();
        values[idx] = if r >= delta {
            [0.0; 3]
        } else if r >= d2 {
            vec3::scale(far, r.ln() / log_delta - 1.0)
        } else if r >= d4 {
            let w = [z[0] / d5, z[1] / d5];
            let ov = omega.eval_at_plane(w).unwrap_or(far);
            let g = r.ln() / (2.0 * log_delta) - 1.0;
            vec3::add(vec3::scale(vec3::sub(ov, far), g), far)
        } else {
            let w = [z[0] / d5, z[1] / d5];
            omega.eval_at_plane(w).unwrap_or(far)
        };
    }
    SurfaceMap::new(chart, values, None)
}

/// A compact bubble competitor on the disk: the recentered sphere bubble
/// dilated to core scale `eps` and shut off by a C^1 radial cutoff,
/// u(z) = eta(|z|) (phi(z/eps) - e3) / h0 with eta = 1 on [0, a] and a
/// smoothstep down to 0 at |z| = 1. All scales stay grid-resolvable, unlike
/// the four-piece truncation's delta^5 core.
pub fn capped_bubble(
    h0: f64,
    eps: f64,
    inner_fraction: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<SurfaceMap, GeometryError> {
    if h0 == 0.0 {
        return Err(GeometryError::ZeroCurvature);
    }
    if !(eps > 0.0 && eps < 1.0) || !(inner_fraction > 0.0 && inner_fraction < 1.0) {
        return Err(GeometryError::Parameter(format!(
            "capped bubble needs eps, inner fraction in (0,1); got {eps}, {inner_fraction}"
        )));
    }
    let chart = Chart::disk(n_r, n_theta)?;
    let a = inner_fraction;
    let eta = |r: f64| -> f64 {
        if r <= a {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            let s = (r - a) / (1.0 - a);
            1.0 - (3.0 * s * s - 2.0 * s * s * s)
        }
    };
    let n = chart.node_count();
    let mut values = vec![[0.0; 3]; n];
    for idx in 0..n {
        let (i, _) = chart.node_ij(idx);
        let r = i as f64 / n_r as f64;
        let e = eta(r);
        if e == 0.0 {
            continue;
        }
        let z = chart.plane_point(idx).unwrap();
        let p = stereographic([z[0] / eps, z[1] / eps]);
        values[idx] = vec3::scale([p[0], p[1], p[2] - 1.0], e / h0);
    }
    SurfaceMap::new(chart, values, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::csum;

    #[test]
    fn stereographic_anchor_points() {
        let south = stereographic([0.0, 0.0]);
        assert_eq!(south, [0.0, 0.0, -1.0]);
        let eq = stereographic([1.0, 0.0]);
        assert!((eq[0] - 1.0).abs() < 1e-15 && eq[1].abs() < 1e-15 && eq[2].abs() < 1e-15);
        // |phi| = 1 to machine accuracy on random points.
        for k in 0..100 {
            let z = [0.3 * k as f64 - 15.0, 17.0 - 0.35 * k as f64];
            assert!((vec3::norm(stereographic(z)) - 1.0).abs() < 1e-14);
        }
        // large |z| approaches the far field (0,0,1)
        let far = stereographic([1e8, 0.0]);
        assert!(vec3::norm(vec3::sub(far, STEREOGRAPHIC_FAR)) < 1e-7);
    }

    #[test]
    fn sphere_bubble_nodes() {
        let m = make_sphere_bubble(2.0, 16, 16).unwrap();
        // south pole node is phi(0)/H0 = (0,0,-1/2)
        assert!(vec3::norm(vec3::sub(m.values()[1], [0.0, 0.0, -0.5])) < 1e-15);
        assert_eq!(m.far_field(), Some([0.0, 0.0, 0.5]));
        // all nodes on the radius-1/2 sphere
        for v in m.values() {
            assert!((vec3::norm(*v) - 0.5).abs() < 1e-14);
        }
        assert!(make_sphere_bubble(0.0, 16, 16).is_err());
    }

    #[test]
    fn translate_preserves_shape() {
        let m = make_sphere_bubble(1.0, 16, 16).unwrap();
        let t = translate_sphere(&m, 5.0);
        assert!(vec3::norm(vec3::sub(t.values()[1], [0.0, 0.0, -6.0])) < 1e-15);
        assert_eq!(t.far_field(), Some([0.0, 0.0, -4.0]));
        let t0 = translate_sphere(&m, 0.0);
        assert_eq!(t0.values(), m.values());
        // node-wise gradients are untouched by translation (up to the
        // rounding of (a+t)-(b+t) versus a-b)
        let g0 = m.differentiate();
        let g1 = t.differentiate();
        for i in 0..g0.ux.len() {
            assert!(vec3::norm(vec3::sub(g0.ux[i], g1.ux[i])) < 1e-12);
            assert!(vec3::norm(vec3::sub(g0.uy[i], g1.uy[i])) < 1e-12);
        }
    }

    #[test]
    fn cone_map_piecewise_values() {
        let (m, d) = make_cone_map(0.3, 40, 16).unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        // center is phi(0) = (0,0,-1)
        assert_eq!(m.values()[0], [0.0, 0.0, -1.0]);
        // boundary ring is exactly zero
        for idx in m.chart().boundary_nodes() {
            assert_eq!(m.values()[idx], [0.0; 3]);
        }
        // inside: phi exactly at nodes
        let z = m.chart().plane_point(m.chart().disk_idx(8, 3)).unwrap();
        assert!((z[0] * z[0] + z[1] * z[1]).sqrt() < 0.3);
        assert_eq!(m.values()[m.chart().disk_idx(8, 3)], stereographic(z));
        // outside: the two-piece formula
        let idx = m.chart().disk_idx(30, 5);
        let z = m.chart().plane_point(idx).unwrap();
        let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let dir = [0.3 * z[0] / r, 0.3 * z[1] / r];
        let expect = vec3::scale(stereographic(dir), (1.0 - r) / 0.7);
        assert!(vec3::norm(vec3::sub(m.values()[idx], expect)) < 1e-14);
        // half-angle formula and its delta -> 1 limit
        assert!((cone_half_angle(1.0 - 1e-9) - PI / 2.0).abs() < 1e-8);
        let c = cone_half_angle(0.3);
        assert!((c.cos() - (1.0 - 0.09) / (1.0 + 0.09)).abs() < 1e-15);
    }

    #[test]
    fn truncate_bubble_piecewise_values() {
        // delta = 0.5 on n_r = 160: rings at delta^4 = 0.0625 (ring 10),
        // delta^2 = 0.25 (ring 40), delta = 0.5 (ring 80).
        let omega = make_sphere_bubble(1.0, 64, 64).unwrap();
        let t = truncate_bubble(&omega, 0.5, 160, 16).unwrap();
        let chart = t.chart();
        // at |z| = delta: zero
        assert_eq!(t.values()[chart.disk_idx(80, 3)], [0.0; 3]);
        // at |z| = delta^2: exactly the far field
        let far = omega.far_field().unwrap();
        let v = t.values()[chart.disk_idx(40, 5)];
        assert!(vec3::norm(vec3::sub(v, far)) < 1e-12, "{v:?}");
        // sup-norm bounded by the bubble's sup-norm
        assert!(t.sup_norm() <= omega.sup_norm() + 1e-12);
        // boundary zero
        for idx in chart.boundary_nodes() {
            assert_eq!(t.values()[idx], [0.0; 3]);
        }
    }

    #[test]
    fn truncate_bubble_requires_sphere_chart() {
        let (cone, _) = make_cone_map(0.3, 20, 16).unwrap();
        assert!(matches!(
            truncate_bubble(&cone, 0.5, 160, 16),
            Err(GeometryError::ChartMismatch { .. })
        ));
    }

    #[test]
    fn sample_analytic_exact_on_nodes() {
        let chart = Chart::sphere(16, 16).unwrap();
        let m = SurfaceMap::sample_analytic(chart, stereographic, Some(STEREOGRAPHIC_FAR)).unwrap();
        for idx in 0..chart.node_count() {
            match chart.plane_point(idx) {
                Some(z) => assert_eq!(m.values()[idx], stereographic(z)),
                None => assert_eq!(m.values()[idx], STEREOGRAPHIC_FAR),
            }
        }
        let c = Chart::window(9, 1.0).unwrap();
        let m = SurfaceMap::sample_analytic(c, |_| [1.0, 2.0, 3.0], None).unwrap();
        assert!(m.values().iter().all(|v| *v == [1.0, 2.0, 3.0]));
    }

    #[test]
    fn dirichlet_zero_enforced_on_disk() {
        let chart = Chart::disk(8, 8).unwrap();
        let res = SurfaceMap::sample_analytic(chart, |_| [1.0, 0.0, 0.0], None);
        assert!(matches!(res, Err(GeometryError::BoundaryNotZero(_))));
    }

    #[test]
    fn interpolation_reproduces_nodes_and_smooth_fields() {
        let omega = make_sphere_bubble(1.0, 48, 48).unwrap();
        // node reproduction
        let chart = omega.chart();
        for idx in [2usize, 100, 500] {
            let z = chart.plane_point(idx).unwrap();
            let v = omega.eval_at_plane(z).unwrap();
            assert!(vec3::norm(vec3::sub(v, omega.values()[idx])) < 1e-12);
        }
        // off-node accuracy ~ h^3 or better for the smooth sphere map
        for z in [[0.3, 0.2], [1.5, -0.7], [0.05, 0.0]] {
            let v = omega.eval_at_plane(z).unwrap();
            assert!(vec3::norm(vec3::sub(v, stereographic(z))) < 5e-4, "{z:?}");
        }
    }

    #[test]
    fn csv_header_and_shape() {
        let m = make_sphere_bubble(1.0, 8, 8).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "chart,i,j,x,y,u1,u2,u3");
        assert_eq!(text.lines().count(), 1 + m.chart().node_count());
        assert!(!text.contains('\r'));
    }

    #[test]
    fn obj_export_counts() {
        let m = make_sphere_bubble(1.0, 8, 8).unwrap();
        let mut buf = Vec::new();
        m.write_obj(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let nv = text.lines().filter(|l| l.starts_with("v ")).count();
        assert_eq!(nv, m.chart().node_count());
        assert!(text.lines().any(|l| l.starts_with("f ")));
    }

    #[test]
    fn capped_bubble_is_compact_and_spherical_in_core() {
        let m = capped_bubble(1.0, 0.05, 0.5, 64, 16).unwrap();
        for idx in m.chart().boundary_nodes() {
            assert_eq!(m.values()[idx], [0.0; 3]);
        }
        // center value is the south pole of the recentered sphere
        assert!(vec3::norm(vec3::sub(m.values()[0], [0.0, 0.0, -2.0])) < 1e-14);
        // inside the core the image lies on the sphere |v + e3| = 1
        let idx = m.chart().disk_idx(4, 3);
        let v = m.values()[idx];
        assert!((vec3::norm(vec3::add(v, [0.0, 0.0, 1.0])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_nonnegative_everywhere() {
        let m = make_sphere_bubble(1.0, 16, 16).unwrap();
        let g = m.differentiate();
        assert!(g.weight.iter().all(|&w| w >= 0.0));
        assert!(csum(g.weight.iter().copied()).is_finite());
    }
}
