//! Discretization charts: a polar grid on the unit disk (Dirichlet
//! problems), a latitude–longitude grid on S^2 identified with the plane by
//! stereographic projection (whole-plane maps), and a uniform Cartesian
//! window (blow-up analysis).
//!
//! All functionals are computed in plane form: `weights()` returns the
//! plane-measure quadrature weight per node (zero at the shared center and
//! pole nodes, whose cells have zero measure in the respective rule), and
//! finite differences produce plane-Cartesian partials chain-ruled through
//! the chart.

use crate::error::GeometryError;
use crate::numeric::simpson_weights;
use crate::vec3::Vec3;
use std::f64::consts::PI;

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiskChart {
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereChart {
    pub n_lat: usize,
    pub n_lon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowChart {
    pub n: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    Disk(DiskChart),
    Sphere(SphereChart),
    Window(WindowChart),
}

impl Chart {
    pub fn disk(n_r: usize, n_theta: usize) -> Result<Chart, GeometryError> {
        if n_r < MIN_RESOLUTION || n_theta < MIN_RESOLUTION {
            return Err(GeometryError::Resolution(
                format!("{n_r}x{n_theta}"),
                format!("disk needs n_r, n_theta >= {MIN_RESOLUTION}"),
            ));
        }
        if n_theta % 2 != 0 {
            return Err(GeometryError::Resolution(
                format!("{n_r}x{n_theta}"),
                "n_theta must be even".into(),
            ));
        }
        Ok(Chart::Disk(DiskChart { n_r, n_theta }))
    }

    pub fn sphere(n_lat: usize, n_lon: usize) -> Result<Chart, GeometryError> {
        if n_lat < MIN_RESOLUTION || n_lon < MIN_RESOLUTION {
            return Err(GeometryError::Resolution(
                format!("{n_lat}x{n_lon}"),
                format!("sphere needs n_lat, n_lon >= {MIN_RESOLUTION}"),
            ));
        }
        if n_lon % 2 != 0 {
            return Err(GeometryError::Resolution(
                format!("{n_lat}x{n_lon}"),
                "n_lon must be even".into(),
            ));
        }
        Ok(Chart::Sphere(SphereChart { n_lat, n_lon }))
    }

    pub fn window(n: usize, half_width: f64) -> Result<Chart, GeometryError> {
        if n < MIN_RESOLUTION || half_width <= 0.0 {
            return Err(GeometryError::Resolution(
                format!("{n} @ {half_width}"),
                format!("window needs n >= {MIN_RESOLUTION} and positive half-width"),
            ));
        }
        Ok(Chart::Window(WindowChart { n, half_width }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::Disk(_) => "disk",
            Chart::Sphere(_) => "sphere",
            Chart::Window(_) => "window",
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Chart::Disk(d) => 1 + d.n_r * d.n_theta,
            Chart::Sphere(s) => 2 + (s.n_lat - 1) * s.n_lon,
            Chart::Window(w) => w.n * w.n,
        }
    }

    /// Grid indices (i, j) of a node, matching the CSV dump convention.
    pub fn node_ij(&self, idx: usize) -> (usize, usize) {
        match self {
            Chart::Disk(d) => {
                if idx == 0 {
                    (0, 0)
                } else {
                    let k = idx - 1;
                    (1 + k / d.n_theta, k % d.n_theta)
                }
            }
            Chart::Sphere(s) => {
                if idx == 0 {
                    (0, 0)
                } else if idx == 1 {
                    (s.n_lat, 0)
                } else {
                    let k = idx - 2;
                    (1 + k / s.n_lon, k % s.n_lon)
                }
            }
            Chart::Window(w) => (idx / w.n, idx % w.n),
        }
    }

    /// Chart coordinates of a node: (x, y) for disk and window,
    /// (colatitude, longitude) for the sphere chart.
    pub fn node_coords(&self, idx: usize) -> (f64, f64) {
        match self {
            Chart::Disk(d) => {
                let (i, j) = self.node_ij(idx);
                if i == 0 {
                    (0.0, 0.0)
                } else {
                    let r = i as f64 / d.n_r as f64;
                    let t = 2.0 * PI * j as f64 / d.n_theta as f64;
                    (r * t.cos(), r * t.sin())
                }
            }
            Chart::Sphere(s) => {
                let (i, j) = self.node_ij(idx);
                let theta = PI * i as f64 / s.n_lat as f64;
                let phi = 2.0 * PI * j as f64 / s.n_lon as f64;
                (theta, phi)
            }
            Chart::Window(w) => {
                let (iy, ix) = self.node_ij(idx);
                let h = 2.0 * w.half_width / (w.n - 1) as f64;
                (-w.half_width + ix as f64 * h, -w.half_width + iy as f64 * h)
            }
        }
    }

    /// Plane point of a node; `None` for the sphere chart's north pole
    /// (the point at infinity).
    pub fn plane_point(&self, idx: usize) -> Option<[f64; 2]> {
        match self {
            Chart::Disk(_) | Chart::Window(_) => {
                let (x, y) = self.node_coords(idx);
                Some([x, y])
            }
            Chart::Sphere(_) => {
                if idx == 0 {
                    return None;
                }
                let (theta, phi) = self.node_coords(idx);
                let rho = if idx == 1 { 0.0 } else { (theta / 2.0).tan().recip() };
                Some([rho * phi.cos(), rho * phi.sin()])
            }
        }
    }

    /// Plane-measure quadrature weights; trapezoid in the periodic
    /// direction, composite Simpson in the radial/latitude direction.
    /// Shared center/pole nodes carry zero weight.
    pub fn weights(&self) -> Vec<f64> {
        match self {
            Chart::Disk(d) => {
                let h_r = 1.0 / d.n_r as f64;
                let h_t = 2.0 * PI / d.n_theta as f64;
                let simp = simpson_weights(d.n_r, h_r);
                let mut w = vec![0.0; self.node_count()];
                for i in 1..=d.n_r {
                    let r = i as f64 * h_r;
                    let wi = simp[i] * r * h_t;
                    for j in 0..d.n_theta {
                        w[self.disk_idx(i, j)] = wi;
                    }
                }
                w
            }
            Chart::Sphere(s) => {
                // Spherical measure divided by the conformal factor mu^2
                // (mu = 1 - cos theta on the unit sphere) gives the plane
                // measure element of the stereographic chart.
                let h_lat = PI / s.n_lat as f64;
                let h_lon = 2.0 * PI / s.n_lon as f64;
                let simp = simpson_weights(s.n_lat, h_lat);
                let mut w = vec![0.0; self.node_count()];
                for i in 1..s.n_lat {
                    let theta = i as f64 * h_lat;
                    let mu = 1.0 - theta.cos();
                    let wi = simp[i] * theta.sin() * h_lon / (mu * mu);
                    for j in 0..s.n_lon {
                        w[self.sphere_idx(i, j)] = wi;
                    }
                }
                w
            }
            Chart::Window(win) => {
                let h = 2.0 * win.half_width / (win.n - 1) as f64;
                let simp = simpson_weights(win.n - 1, h);
                let mut w = vec![0.0; self.node_count()];
                for iy in 0..win.n {
                    for ix in 0..win.n {
                        w[iy * win.n + ix] = simp[iy] * simp[ix];
                    }
                }
                w
            }
        }
    }

    /// Spherical-measure weights on the sphere chart (sum to 4 pi);
    /// equal to `weights()` elsewhere.
    pub fn sigma_weights(&self) -> Vec<f64> {
        match self {
            Chart::Sphere(s) => {
                let h_lat = PI / s.n_lat as f64;
                let h_lon = 2.0 * PI / s.n_lon as f64;
                let simp = simpson_weights(s.n_lat, h_lat);
                let mut w = vec![0.0; self.node_count()];
                for i in 1..s.n_lat {
                    let theta = i as f64 * h_lat;
                    let wi = simp[i] * theta.sin() * h_lon;
                    for j in 0..s.n_lon {
                        w[self.sphere_idx(i, j)] = wi;
                    }
                }
                w
            }
            _ => self.weights(),
        }
    }

    /// Strictly positive lumped cell areas, used as the mass matrix of the
    /// L^2 gradient representer. (In plane measure; the sphere chart uses
    /// spherical cells so the far-field node stays well conditioned.)
    pub fn mass_weights(&self) -> Vec<f64> {
        match self {
            Chart::Disk(d) => {
                let h_r = 1.0 / d.n_r as f64;
                let h_t = 2.0 * PI / d.n_theta as f64;
                let mut w = vec![0.0; self.node_count()];
                w[0] = PI * (0.5 * h_r) * (0.5 * h_r);
                for i in 1..=d.n_r {
                    let r = i as f64 * h_r;
                    let wi = if i == d.n_r {
                        r * 0.5 * h_r * h_t
                    } else {
                        r * h_r * h_t
                    };
                    for j in 0..d.n_theta {
                        w[self.disk_idx(i, j)] = wi;
                    }
                }
                w
            }
            Chart::Sphere(s) => {
                let h_lat = PI / s.n_lat as f64;
                let h_lon = 2.0 * PI / s.n_lon as f64;
                let cap = 2.0 * PI * (1.0 - (0.5 * h_lat).cos());
                let mut w = vec![0.0; self.node_count()];
                w[0] = cap;
                w[1] = cap;
                for i in 1..s.n_lat {
                    let theta = i as f64 * h_lat;
                    let wi = theta.sin() * h_lat * h_lon;
                    for j in 0..s.n_lon {
                        w[self.sphere_idx(i, j)] = wi;
                    }
                }
                w
            }
            Chart::Window(win) => {
                let h = 2.0 * win.half_width / (win.n - 1) as f64;
                let mut w = vec![h * h; self.node_count()];
                for iy in 0..win.n {
                    for ix in 0..win.n {
                        let mut a = h * h;
                        if iy == 0 || iy == win.n - 1 {
                            a *= 0.5;
                        }
                        if ix == 0 || ix == win.n - 1 {
                            a *= 0.5;
                        }
                        w[iy * win.n + ix] = a;
                    }
                }
                w
            }
        }
    }

    #[inline]
    pub fn disk_idx(&self, i: usize, j: usize) -> usize {
        match self {
            Chart::Disk(d) => {
                if i == 0 {
                    0
                } else {
                    1 + (i - 1) * d.n_theta + (j % d.n_theta)
                }
            }
            _ => unreachable!("disk_idx on non-disk chart"),
        }
    }

    #[inline]
    pub fn sphere_idx(&self, i: usize, j: usize) -> usize {
        match self {
            Chart::Sphere(s) => {
                if i == 0 {
                    0
                } else if i == s.n_lat {
                    1
                } else {
                    2 + (i - 1) * s.n_lon + (j % s.n_lon)
                }
            }
            _ => unreachable!("sphere_idx on non-sphere chart"),
        }
    }

    /// Node indices of the disk boundary ring.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        match self {
            Chart::Disk(d) => (0..d.n_theta).map(|j| self.disk_idx(d.n_r, j)).collect(),
            _ => Vec::new(),
        }
    }

    /// Interior nodes at least `rings` rows away from boundary/poles/edges
    /// (and excluding the shared center/pole nodes themselves).
    pub fn interior_nodes(&self, rings: usize) -> Vec<usize> {
        let mut out = Vec::new();
        match self {
            Chart::Disk(d) => {
                for i in (1 + rings)..=(d.n_r.saturating_sub(rings + 1)) {
                    for j in 0..d.n_theta {
                        out.push(self.disk_idx(i, j));
                    }
                }
            }
            Chart::Sphere(s) => {
                for i in (1 + rings)..(s.n_lat - rings) {
                    for j in 0..s.n_lon {
                        out.push(self.sphere_idx(i, j));
                    }
                }
            }
            Chart::Window(w) => {
                for iy in (1 + rings)..(w.n.saturating_sub(rings + 1)) {
                    for ix in (1 + rings)..(w.n.saturating_sub(rings + 1)) {
                        out.push(iy * w.n + ix);
                    }
                }
            }
        }
        out
    }

    /// Plane-Cartesian partials of a node field by second-order finite
    /// differences in chart coordinates, chain-ruled through the chart.
    pub fn d_fields(&self, v: &[Vec3]) -> (Vec<Vec3>, Vec<Vec3>) {
        assert_eq!(v.len(), self.node_count());
        let n = v.len();
        let mut ux = vec![[0.0; 3]; n];
        let mut uy = vec![[0.0; 3]; n];
        match self {
            Chart::Disk(d) => self.d_fields_disk(*d, v, &mut ux, &mut uy),
            Chart::Sphere(s) => self.d_fields_sphere(*s, v, &mut ux, &mut uy),
            Chart::Window(w) => d_fields_window(*w, v, &mut ux, &mut uy),
        }
        (ux, uy)
    }

    fn d_fields_disk(&self, d: DiskChart, v: &[Vec3], ux: &mut [Vec3], uy: &mut [Vec3]) {
        let h_r = 1.0 / d.n_r as f64;
        let h_t = 2.0 * PI / d.n_theta as f64;
        for i in 1..=d.n_r {
            let r = i as f64 * h_r;
            for j in 0..d.n_theta {
                let idx = self.disk_idx(i, j);
                let t = h_t * j as f64;
                let (ct, st) = (t.cos(), t.sin());
                let jm = (j + d.n_theta - 1) % d.n_theta;
                let jp = (j + 1) % d.n_theta;
                for c in 0..3 {
                    let dr = if i == d.n_r {
                        // one-sided second order into the domain
                        (3.0 * v[idx][c] - 4.0 * v[self.disk_idx(i - 1, j)][c]
                            + v[self.disk_idx(i - 2, j)][c])
                            / (2.0 * h_r)
                    } else {
                        (v[self.disk_idx(i + 1, j)][c] - v[self.disk_idx(i - 1, j)][c])
                            / (2.0 * h_r)
                    };
                    let dt = (v[self.disk_idx(i, jp)][c] - v[self.disk_idx(i, jm)][c])
                        / (2.0 * h_t);
                    ux[idx][c] = dr * ct - dt * st / r;
                    uy[idx][c] = dr * st + dt * ct / r;
                }
            }
        }
        // Center: least-squares linear fit over ring 1 (exact for linear maps
        // by the first-harmonic projection).
        let inv = 2.0 / d.n_theta as f64;
        for c in 0..3 {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..d.n_theta {
                let t = h_t * j as f64;
                let dv = v[self.disk_idx(1, j)][c] - v[0][c];
                gx += dv * t.cos();
                gy += dv * t.sin();
            }
            ux[0][c] = inv * gx / h_r;
            uy[0][c] = inv * gy / h_r;
        }
    }

    fn d_fields_sphere(&self, s: SphereChart, v: &[Vec3], ux: &mut [Vec3], uy: &mut [Vec3]) {
        let h_lat = PI / s.n_lat as f64;
        let h_lon = 2.0 * PI / s.n_lon as f64;
        for i in 1..s.n_lat {
            let theta = i as f64 * h_lat;
            let rho = (0.5 * theta).tan().recip();
            let rho_p = -(1.0 + rho * rho) / 2.0;
            for j in 0..s.n_lon {
                let idx = self.sphere_idx(i, j);
                let phi = h_lon * j as f64;
                let (cp, sp) = (phi.cos(), phi.sin());
                let jm = (j + s.n_lon - 1) % s.n_lon;
                let jp = (j + 1) % s.n_lon;
                let up = self.sphere_idx(i - 1, j); // pole node when i == 1
                let dn = self.sphere_idx(i + 1, j); // pole node when i == n_lat-1
                for c in 0..3 {
                    let dt = (v[dn][c] - v[up][c]) / (2.0 * h_lat);
                    let dp = (v[self.sphere_idx(i, jp)][c] - v[self.sphere_idx(i, jm)][c])
                        / (2.0 * h_lon);
                    ux[idx][c] = cp * dt / rho_p - sp * dp / rho;
                    uy[idx][c] = sp * dt / rho_p + cp * dp / rho;
                }
            }
        }
        // South pole (plane origin): first-harmonic fit over the adjacent row.
        let rho1 = (0.5 * h_lat).tan();
        let inv = 2.0 / s.n_lon as f64;
        for c in 0..3 {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..s.n_lon {
                let phi = h_lon * j as f64;
                let dv = v[self.sphere_idx(s.n_lat - 1, j)][c] - v[1][c];
                gx += dv * phi.cos();
                gy += dv * phi.sin();
            }
            ux[1][c] = inv * gx / rho1;
            uy[1][c] = inv * gy / rho1;
        }
        // North pole is the point at infinity; finite-energy maps have
        // vanishing plane gradient there.
        ux[0] = [0.0; 3];
        uy[0] = [0.0; 3];
    }
}

fn d_fields_window(w: WindowChart, v: &[Vec3], ux: &mut [Vec3], uy: &mut [Vec3]) {
    let n = w.n;
    let h = 2.0 * w.half_width / (n - 1) as f64;
    let at = |iy: usize, ix: usize| iy * n + ix;
    for iy in 0..n {
        for ix in 0..n {
            let idx = at(iy, ix);
            for c in 0..3 {
                ux[idx][c] = if ix == 0 {
                    (-3.0 * v[at(iy, 0)][c] + 4.0 * v[at(iy, 1)][c] - v[at(iy, 2)][c]) / (2.0 * h)
                } else if ix == n - 1 {
                    (3.0 * v[at(iy, n - 1)][c] - 4.0 * v[at(iy, n - 2)][c] + v[at(iy, n - 3)][c])
                        / (2.0 * h)
                } else {
                    (v[at(iy, ix + 1)][c] - v[at(iy, ix - 1)][c]) / (2.0 * h)
                };
                uy[idx][c] = if iy == 0 {
                    (-3.0 * v[at(0, ix)][c] + 4.0 * v[at(1, ix)][c] - v[at(2, ix)][c]) / (2.0 * h)
                } else if iy == n - 1 {
                    (3.0 * v[at(n - 1, ix)][c] - 4.0 * v[at(n - 2, ix)][c] + v[at(n - 3, ix)][c])
                        / (2.0 * h)
                } else {
                    (v[at(iy + 1, ix)][c] - v[at(iy - 1, ix)][c]) / (2.0 * h)
                };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::csum;

    #[test]
    fn disk_weights_sum_to_area() {
        let c = Chart::disk(16, 24).unwrap();
        let total = csum(c.weights());
        assert!((total - PI).abs() < 1e-12, "{total}");
    }

    #[test]
    fn sphere_sigma_weights_sum_to_sphere_area() {
        // Composite Simpson on sin(theta): O(h^4) error.
        let c = Chart::sphere(32, 64).unwrap();
        let total = csum(c.sigma_weights());
        assert!((total - 4.0 * PI).abs() < 1e-5, "{total}");
        let c = Chart::sphere(128, 16).unwrap();
        let total = csum(c.sigma_weights());
        assert!((total - 4.0 * PI).abs() < 1e-7, "{total}");
    }

    #[test]
    fn window_weights_sum_to_area() {
        let c = Chart::window(33, 2.0).unwrap();
        let total = csum(c.weights());
        assert!((total - 16.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn mass_weights_positive() {
        for c in [
            Chart::disk(8, 8).unwrap(),
            Chart::sphere(8, 8).unwrap(),
            Chart::window(9, 1.0).unwrap(),
        ] {
            assert!(c.mass_weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn resolution_minima_enforced() {
        assert!(Chart::disk(4, 8).is_err());
        assert!(Chart::disk(8, 9).is_err());
        assert!(Chart::sphere(8, 10).is_ok());
        assert!(Chart::window(4, 1.0).is_err());
    }

    #[test]
    fn window_derivatives_exact_on_linear() {
        let c = Chart::window(17, 1.5).unwrap();
        let n = c.node_count();
        let mut v = vec![[0.0; 3]; n];
        for idx in 0..n {
            let (x, y) = c.node_coords(idx);
            v[idx] = [2.0 * x - y, 0.5 * x + 3.0 * y, 7.0];
        }
        let (ux, uy) = c.d_fields(&v);
        for idx in 0..n {
            assert!((ux[idx][0] - 2.0).abs() < 1e-12);
            assert!((ux[idx][1] - 0.5).abs() < 1e-12);
            assert!((uy[idx][0] + 1.0).abs() < 1e-12);
            assert!((uy[idx][1] - 3.0).abs() < 1e-12);
            assert!(ux[idx][2].abs() < 1e-12);
        }
    }

    #[test]
    fn disk_derivatives_exact_on_radial_linear() {
        // u = c (1 - r): linear in the radial chart coordinate.
        let c = Chart::disk(16, 16).unwrap();
        let n = c.node_count();
        let mut v = vec![[0.0; 3]; n];
        for idx in 0..n {
            let (x, y) = c.node_coords(idx);
            let r = (x * x + y * y).sqrt();
            v[idx] = [3.0 * (1.0 - r), 0.0, 0.0];
        }
        let (ux, uy) = c.d_fields(&v);
        for idx in 1..n {
            let (x, y) = c.node_coords(idx);
            let r = (x * x + y * y).sqrt();
            // grad of -3r is -3 (x/r, y/r)
            assert!((ux[idx][0] + 3.0 * x / r).abs() < 1e-11, "node {idx}");
            assert!((uy[idx][0] + 3.0 * y / r).abs() < 1e-11, "node {idx}");
        }
    }
}
