//! Prescribed-curvature fields H on R^3: construction from the expression
//! DSL, exact gradients, the segment integral m_H, sampled global scalars,
//! smooth truncation to constant-far-out fields, and radial bubble radii.

use crate::error::{ExprError, FieldError};
use crate::expr::{self, EvalCtx, Expr, ExprDisplay, ParsedExpr};
use crate::numeric::{bisect, gauss_legendre_01, halton_ball, halton_sphere, KahanSum};
use crate::vec3::{self, Vec3};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Default Gauss–Legendre order for the m_H segment integral.
pub const DEFAULT_MH_ORDER: usize = 16;

/// Builtin family classification of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Constant,
    Radial,
    ConstantFarOut,
    Expression,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Constant => "constant",
            FieldKind::Radial => "radial",
            FieldKind::ConstantFarOut => "constant-far-out",
            FieldKind::Expression => "expression",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Constant(f64),
    Expr {
        source: String,
        value: Expr,
        grad: [Expr; 3],
        params: Vec<String>,
        param_values: Vec<f64>,
        non_smooth: bool,
        radial_form: bool,
    },
    Truncated {
        inner: Arc<CurvatureField>,
        /// The paper's r_n: the cutoff starts here and the field is exactly
        /// the constant beyond r_n + 1.
        r_cut: f64,
        h_inf: f64,
    },
}

/// A scalar curvature field on R^3 with exact gradient.
///
/// Immutable after construction; all evaluations are pure, so values can be
/// shared freely across threads.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    backend: Backend,
    h_inf: Option<f64>,
    r0: Option<f64>,
    /// Radii where the field is only C^1 (quadratures split here).
    kinks: Vec<f64>,
}

// C1 cutoff: 1 on (-inf,0], smoothstep down on [0,1], 0 on [1,inf).
// chi(s) = 1 - (3s^2 - 2s^3); |chi'| <= 1.5.
fn chi(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - (3.0 * s * s - 2.0 * s * s * s)
    }
}

fn chi_prime(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        -6.0 * s * (1.0 - s)
    }
}

impl CurvatureField {
    pub fn constant(c: f64) -> Self {
        CurvatureField {
            backend: Backend::Constant(c),
            h_inf: Some(c),
            r0: Some(0.0),
            kinks: Vec::new(),
        }
    }

    /// Parse an expression with no free parameters (the `parse_field`
    /// operation). A free identifier is an unknown-identifier error with
    /// its byte offset.
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        Self::parse_with_params(text, &BTreeMap::new())
    }

    /// Parse an expression whose free identifiers are bound by `params`.
    pub fn parse_with_params(text: &str, params: &BTreeMap<String, f64>) -> Result<Self, FieldError> {
        let parsed = expr::parse(text)?;
        for (k, name) in parsed.params.iter().enumerate() {
            if !params.contains_key(name) {
                return Err(FieldError::Expr(ExprError::UnknownIdentifier {
                    offset: parsed.param_offsets[k],
                    name: name.clone(),
                }));
            }
        }
        let param_values: Vec<f64> = parsed.params.iter().map(|n| params[n]).collect();
        Ok(Self::from_parsed(text.to_string(), parsed, param_values))
    }

    /// Parse a radial profile h(r): an expression over `r` and parameters
    /// only.
    pub fn radial(text: &str) -> Result<Self, FieldError> {
        let f = Self::parse(text)?;
        match &f.backend {
            Backend::Expr { value, .. } if value.uses_cartesian_vars() => Err(
                FieldError::BadDefinition("radial field may only reference r".into()),
            ),
            _ => Ok(f),
        }
    }

    fn from_parsed(source: String, parsed: ParsedExpr, param_values: Vec<f64>) -> Self {
        // Constant expression: collapse to the constant backend.
        if !parsed.expr.uses_any_var() {
            let c = parsed.expr.eval(&EvalCtx::new([0.0; 3], &param_values));
            return Self::constant(c);
        }
        let mut non_smooth = false;
        let grad = [
            expr::differentiate(&parsed.expr, 0, &mut non_smooth),
            expr::differentiate(&parsed.expr, 1, &mut non_smooth),
            expr::differentiate(&parsed.expr, 2, &mut non_smooth),
        ];
        let radial_form = !parsed.expr.uses_cartesian_vars();
        CurvatureField {
            backend: Backend::Expr {
                source,
                value: parsed.expr,
                grad,
                params: parsed.params,
                param_values,
                non_smooth,
                radial_form,
            },
            h_inf: None,
            r0: None,
            kinks: Vec::new(),
        }
    }

    pub fn with_h_inf(mut self, v: f64) -> Self {
        self.h_inf = Some(v);
        self
    }

    pub fn with_r0(mut self, v: f64) -> Self {
        self.r0 = Some(v);
        self
    }

    pub fn kind(&self) -> FieldKind {
        match &self.backend {
            Backend::Constant(_) => FieldKind::Constant,
            Backend::Truncated { .. } => FieldKind::ConstantFarOut,
            Backend::Expr { radial_form, .. } => {
                if *radial_form {
                    FieldKind::Radial
                } else if self.r0.is_some() && self.h_inf.is_some() {
                    FieldKind::ConstantFarOut
                } else {
                    FieldKind::Expression
                }
            }
        }
    }

    pub fn h_inf(&self) -> Option<f64> {
        self.h_inf
    }

    pub fn r0(&self) -> Option<f64> {
        self.r0
    }

    /// (H0, R0) when the field is constant beyond some radius.
    pub fn constant_far_out(&self) -> Option<(f64, f64)> {
        match &self.backend {
            Backend::Constant(c) => Some((*c, 0.0)),
            Backend::Truncated { r_cut, h_inf, .. } => Some((*h_inf, r_cut + 1.0)),
            Backend::Expr { .. } => match (self.h_inf, self.r0) {
                (Some(h), Some(r)) => Some((h, r)),
                _ => None,
            },
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match &self.backend {
            Backend::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// True when the differentiation pass met a construct whose gradient is
    /// only one-sided somewhere (bare r powers, sqrt).
    pub fn one_sided_gradient(&self) -> bool {
        match &self.backend {
            Backend::Constant(_) => false,
            Backend::Expr { non_smooth, .. } => *non_smooth,
            Backend::Truncated { inner, .. } => inner.one_sided_gradient(),
        }
    }

    /// Kink radii where quadratures split.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Canonical one-line description (stable; used for hashing and echo).
    pub fn describe(&self) -> String {
        let base = match &self.backend {
            Backend::Constant(c) => format!("const:{c}"),
            Backend::Expr {
                source,
                params,
                param_values,
                ..
            } => {
                let mut s = format!("expr:{source}");
                for (n, v) in params.iter().zip(param_values) {
                    s.push_str(&format!("|{n}={v}"));
                }
                s
            }
            Backend::Truncated { inner, r_cut, .. } => {
                format!("trunc[r_n={r_cut}]({})", inner.describe())
            }
        };
        let mut s = base;
        if let Some(h) = self.h_inf {
            s.push_str(&format!("|h_inf={h}"));
        }
        if let Some(r) = self.r0 {
            s.push_str(&format!("|r0={r}"));
        }
        s
    }

    // ---------------------------------------------------------- evaluation

    /// H(u).
    pub fn eval(&self, u: Vec3) -> f64 {
        match &self.backend {
            Backend::Constant(c) => *c,
            Backend::Expr {
                value, param_values, ..
            } => value.eval(&EvalCtx::new(u, param_values)),
            Backend::Truncated { inner, r_cut, h_inf } => {
                let rho = vec3::norm(u);
                if rho >= r_cut + 1.0 {
                    return *h_inf;
                }
                let s = rho - r_cut;
                let centered = inner.eval(u) - h_inf;
                let hat = unit_or_e3(u, rho);
                let corr = correction_integral(inner, *h_inf, *r_cut, rho, hat, |h, t, dir| {
                    h.eval(vec3::scale(dir, t))
                });
                h_inf + chi(s) * centered + corr
            }
        }
    }

    /// Exact field gradient (AST differentiation; closed form for the
    /// truncation construction).
    pub fn grad(&self, u: Vec3) -> Vec3 {
        match &self.backend {
            Backend::Constant(_) => [0.0; 3],
            Backend::Expr {
                grad, param_values, ..
            } => {
                let ctx = EvalCtx::new(u, param_values);
                [grad[0].eval(&ctx), grad[1].eval(&ctx), grad[2].eval(&ctx)]
            }
            Backend::Truncated { inner, r_cut, h_inf } => {
                let rho = vec3::norm(u);
                if rho >= r_cut + 1.0 {
                    return [0.0; 3];
                }
                let gi = inner.grad(u);
                if rho == 0.0 {
                    return gi;
                }
                let hat = vec3::scale(u, 1.0 / rho);
                let s = rho - r_cut;
                let _ = h_inf;
                // The chi' term of the product rule cancels exactly against
                // the moving lower limit of the correction integral, leaving
                // the chi-damped gradient plus a tangential transport term.
                let mut g = vec3::scale(gi, chi(s));
                // Tangential transport of the correction integral.
                let lo = rho.max(*r_cut);
                let hi = r_cut + 1.0;
                if lo < hi {
                    let (nodes, weights) = gauss_legendre_01(DEFAULT_MH_ORDER);
                    let mut tx = KahanSum::new();
                    let mut ty = KahanSum::new();
                    let mut tz = KahanSum::new();
                    for (x, w) in nodes.iter().zip(weights) {
                        let t = lo + (hi - lo) * x;
                        let gv = inner.grad(vec3::scale(hat, t));
                        // project out the radial component
                        let radial = vec3::dot(gv, hat);
                        let tang = vec3::sub(gv, vec3::scale(hat, radial));
                        let coeff = w * chi_prime(t - r_cut) * t / rho;
                        tx.add(coeff * tang[0]);
                        ty.add(coeff * tang[1]);
                        tz.add(coeff * tang[2]);
                    }
                    let scale = hi - lo;
                    g = vec3::add(g, [scale * tx.value(), scale * ty.value(), scale * tz.value()]);
                }
                g
            }
        }
    }

    /// m_H(u) = int_0^1 H(su) s^2 ds by Gauss–Legendre of order `k`,
    /// composite-split at declared kink radii.
    pub fn m_h(&self, u: Vec3, k: usize) -> f64 {
        assert!(k >= 2, "quadrature order must be at least 2");
        match &self.backend {
            Backend::Constant(c) => c / 3.0,
            _ => self.segment_integral(u, k, |f, p| f.eval(p)),
        }
    }

    /// Gradient of m_H by differentiating under the integral:
    /// grad m_H(u) = int_0^1 grad H(su) s^3 ds.
    pub fn m_h_grad(&self, u: Vec3, k: usize) -> Vec3 {
        match &self.backend {
            Backend::Constant(_) => [0.0; 3],
            _ => {
                let gx = self.segment_integral_weighted(u, k, 3, |f, p| f.grad(p)[0]);
                let gy = self.segment_integral_weighted(u, k, 3, |f, p| f.grad(p)[1]);
                let gz = self.segment_integral_weighted(u, k, 3, |f, p| f.grad(p)[2]);
                [gx, gy, gz]
            }
        }
    }

    fn segment_integral(&self, u: Vec3, k: usize, f: impl Fn(&Self, Vec3) -> f64) -> f64 {
        self.segment_integral_weighted(u, k, 2, f)
    }

    /// int_0^1 f(su) s^pow ds with splits where s|u| crosses a kink radius.
    fn segment_integral_weighted(
        &self,
        u: Vec3,
        k: usize,
        pow: i32,
        f: impl Fn(&Self, Vec3) -> f64,
    ) -> f64 {
        let rho = vec3::norm(u);
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        if rho > 0.0 {
            for &kr in &self.kinks {
                let s = kr / rho;
                if s > 1e-14 && s < 1.0 - 1e-14 {
                    cuts.push(s);
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let (nodes, weights) = gauss_legendre_01(k);
        let mut acc = KahanSum::new();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = b - a;
            if len <= 0.0 {
                continue;
            }
            for (x, w) in nodes.iter().zip(weights) {
                let s = a + len * x;
                acc.add(len * w * f(self, vec3::scale(u, s)) * s.powi(pow));
            }
        }
        acc.value()
    }

    /// The paper's smooth truncation: a field equal to `h_inf` beyond
    /// r_n + 1 whose radial derivative is the chi-damped one of the input.
    pub fn truncate(&self, r_n: f64) -> Result<CurvatureField, FieldError> {
        if !(r_n > 0.0) {
            return Err(FieldError::BadParameter(format!(
                "truncation radius must be positive, got {r_n}"
            )));
        }
        let h_inf = self.h_inf.ok_or(FieldError::MissingHInf)?;
        // Truncating an exact constant is the identity.
        if let Backend::Constant(c) = self.backend {
            if c == h_inf {
                return Ok(self.clone());
            }
        }
        let mut kinks = self.kinks.clone();
        kinks.push(r_n);
        kinks.push(r_n + 1.0);
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kinks.dedup();
        Ok(CurvatureField {
            backend: Backend::Truncated {
                inner: Arc::new(self.clone()),
                r_cut: r_n,
                h_inf,
            },
            h_inf: Some(h_inf),
            r0: Some(r_n + 1.0),
            kinks,
        })
    }

    /// Verify by sampling that the field value depends on |u| only.
    pub fn check_radial(&self, radii: &[f64], tol: f64) -> Result<(), FieldError> {
        match &self.backend {
            Backend::Constant(_) => return Ok(()),
            Backend::Expr { radial_form, .. } if *radial_form => return Ok(()),
            Backend::Truncated { inner, .. } => {
                return inner.check_radial(radii, tol);
            }
            _ => {}
        }
        for &rho in radii {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for k in 0..32u64 {
                let p = halton_sphere(k, rho);
                let v = self.eval(p);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let spread = hi - lo;
            if spread > tol * (1.0 + hi.abs().max(lo.abs())) {
                return Err(FieldError::NotRadial { radius: rho, spread });
            }
        }
        Ok(())
    }

    /// Radial profile value h(rho) (in the direction e1).
    pub fn radial_value(&self, rho: f64) -> f64 {
        self.eval([rho, 0.0, 0.0])
    }
}

fn unit_or_e3(u: Vec3, rho: f64) -> Vec3 {
    if rho == 0.0 {
        [0.0, 0.0, 1.0]
    } else {
        vec3::scale(u, 1.0 / rho)
    }
}

/// int_{max(rho, r_cut)}^{r_cut + 1} chi'(t - r_cut) (H(t uhat) - h_inf) dt.
fn correction_integral(
    inner: &CurvatureField,
    h_inf: f64,
    r_cut: f64,
    rho: f64,
    hat: Vec3,
    eval: impl Fn(&CurvatureField, f64, Vec3) -> f64,
) -> f64 {
    let lo = rho.max(r_cut);
    let hi = r_cut + 1.0;
    if lo >= hi {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre_01(DEFAULT_MH_ORDER);
    let mut acc = KahanSum::new();
    for (x, w) in nodes.iter().zip(weights) {
        let t = lo + (hi - lo) * x;
        acc.add(w * chi_prime(t - r_cut) * (eval(inner, t, hat) - h_inf));
    }
    (hi - lo) * acc.value()
}

// ------------------------------------------------------- sampled scalars

/// Sampled estimates of the paper's global field scalars. These are lower
/// bounds of the true suprema over R^3, taken over a low-discrepancy sample
/// of the ball of radius `r_sample` (prefixes nest, so estimates are
/// monotone nondecreasing in `n_sample`).
#[derive(Debug, Clone)]
pub struct FieldScalars {
    /// sup |grad H(u) . u| |u| (sampled): the (h1) quantity M_H.
    pub m_h: f64,
    /// 2 sup |H(u) - 3 m_H(u)| |u| (sampled): the companion M-bar.
    pub m_bar: f64,
    /// sup |H| (sampled).
    pub sup_h: f64,
    pub r_sample: f64,
    pub n_sample: usize,
    /// Whether the sampled M_H < 1 (the (h1) gate).
    pub gate_m: bool,
    /// Whether the sampled M-bar < 1.
    pub gate_m_bar: bool,
}

/// Sample the global scalars over the ball of radius `r_sample` plus
/// boundary-sphere points. The gradient values met while computing each
/// m_H segment integral are folded into the M_H estimate, which keeps the
/// sampled inequality m_bar <= m_h exact.
pub fn estimate_scalars(field: &CurvatureField, r_sample: f64, n_sample: usize) -> FieldScalars {
    assert!(r_sample > 0.0 && n_sample >= 1);
    let mut m_h = 0.0f64;
    let mut m_bar = 0.0f64;
    let mut sup_h = 0.0f64;
    let (nodes, _) = gauss_legendre_01(DEFAULT_MH_ORDER);
    let mut visit = |u: Vec3| {
        let h = field.eval(u);
        sup_h = sup_h.max(h.abs());
        let radial = vec3::dot(field.grad(u), u).abs() * vec3::norm(u);
        m_h = m_h.max(radial);
        // Fold the segment nodes of m_H into the M_H sup as well.
        let rho = vec3::norm(u);
        if rho > 0.0 {
            for &s in nodes.iter() {
                let p = vec3::scale(u, s);
                let rad = vec3::dot(field.grad(p), p).abs() * (s * rho);
                m_h = m_h.max(rad);
            }
        }
        let m = field.m_h(u, DEFAULT_MH_ORDER);
        m_bar = m_bar.max(2.0 * (h - 3.0 * m).abs() * rho);
    };
    let n_boundary = n_sample / 2 + 1;
    for k in 0..n_sample as u64 {
        visit(halton_ball(k, r_sample));
    }
    for k in 0..n_boundary as u64 {
        visit(halton_sphere(k, r_sample));
    }
    FieldScalars {
        m_h,
        m_bar,
        sup_h,
        r_sample,
        n_sample,
        gate_m: m_h < 1.0,
        gate_m_bar: m_bar < 1.0,
    }
}

// --------------------------------------------------- radial bubble radii

/// One radius solving rho |H(rho)| = 1, with the bubble energy at it.
#[derive(Debug, Clone, Copy)]
pub struct RadialRoot {
    pub rho: f64,
    pub h_at_rho: f64,
    /// 4 pi / (3 H(rho)^2).
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct RadialBubbles {
    pub roots: Vec<RadialRoot>,
    /// Set when rho |H(rho)| - 1 vanishes over the whole interval
    /// (a continuum of radial bubbles, e.g. H = 1/rho).
    pub degenerate_interval: bool,
}

/// All roots of rho |H(rho)| = 1 in [lo, hi], bracketing on a uniform scan
/// then bisecting to relative tolerance 1e-10.
pub fn radial_bubble_radii(
    field: &CurvatureField,
    lo: f64,
    hi: f64,
) -> Result<RadialBubbles, FieldError> {
    assert!(lo > 0.0 && hi > lo);
    field.check_radial(&[lo, 0.5 * (lo + hi), hi], 1e-9)?;
    let g = |rho: f64| rho * field.radial_value(rho).abs() - 1.0;
    let n = 4096;
    let step = (hi - lo) / n as f64;
    let mut degenerate_hits = 0usize;
    let mut roots: Vec<RadialRoot> = Vec::new();
    let mut prev_x = lo;
    let mut prev_g = g(lo);
    for i in 1..=n {
        let x = lo + step * i as f64;
        let gx = g(x);
        if prev_g.abs() < 1e-9 {
            degenerate_hits += 1;
        }
        if (prev_g < 0.0) != (gx < 0.0) {
            let root = bisect(prev_x, x, 1e-10, g);
            let h = field.radial_value(root);
            if roots
                .last()
                .map(|r: &RadialRoot| (r.rho - root).abs() > 1e-8 * root.max(1.0))
                .unwrap_or(true)
            {
                roots.push(RadialRoot {
                    rho: root,
                    h_at_rho: h,
                    energy: 4.0 * std::f64::consts::PI / (3.0 * h * h),
                });
            }
        }
        prev_x = x;
        prev_g = gx;
    }
    let degenerate_interval = degenerate_hits >= (n * 9) / 10;
    if degenerate_interval {
        roots.clear();
    }
    Ok(RadialBubbles {
        roots,
        degenerate_interval,
    })
}

// -------------------------------------------------- field definition file

/// Parse a field definition file: `expr = "<string>"`, `params.<name> = v`,
/// optional `h_inf = v` and `r0 = v`. Lines starting with `#` are comments.
pub fn parse_field_file(text: &str) -> Result<CurvatureField, FieldError> {
    let mut expr_src: Option<String> = None;
    let mut params = BTreeMap::new();
    let mut h_inf: Option<f64> = None;
    let mut r0: Option<f64> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FieldError::BadDefinition(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key == "expr" {
            let unquoted = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .ok_or_else(|| {
                    FieldError::BadDefinition(format!(
                        "line {}: expr value must be double-quoted",
                        lineno + 1
                    ))
                })?;
            expr_src = Some(unquoted.to_string());
        } else if let Some(name) = key.strip_prefix("params.") {
            let v: f64 = value.parse().map_err(|_| {
                FieldError::BadDefinition(format!("line {}: bad float `{value}`", lineno + 1))
            })?;
            params.insert(name.trim().to_string(), v);
        } else if key == "h_inf" {
            h_inf = Some(value.parse().map_err(|_| {
                FieldError::BadDefinition(format!("line {}: bad float `{value}`", lineno + 1))
            })?);
        } else if key == "r0" {
            r0 = Some(value.parse().map_err(|_| {
                FieldError::BadDefinition(format!("line {}: bad float `{value}`", lineno + 1))
            })?);
        } else {
            return Err(FieldError::BadDefinition(format!(
                "line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
    }
    let src = expr_src.ok_or_else(|| FieldError::BadDefinition("missing `expr` entry".into()))?;
    let mut f = CurvatureField::parse_with_params(&src, &params)?;
    if let Some(h) = h_inf {
        f = f.with_h_inf(h);
    }
    if let Some(r) = r0 {
        f = f.with_r0(r);
    }
    Ok(f)
}

/// Inline field shorthand: `const:<v>`, `radial:<expr>`, `expr:<string>`.
pub fn parse_field_spec(spec: &str) -> Result<CurvatureField, FieldError> {
    if let Some(v) = spec.strip_prefix("const:") {
        let c: f64 = v
            .trim()
            .parse()
            .map_err(|_| FieldError::BadDefinition(format!("bad constant `{v}`")))?;
        Ok(CurvatureField::constant(c))
    } else if let Some(e) = spec.strip_prefix("radial:") {
        CurvatureField::radial(e)
    } else if let Some(e) = spec.strip_prefix("expr:") {
        CurvatureField::parse(e)
    } else {
        Err(FieldError::BadDefinition(format!(
            "field spec must start with const:, radial: or expr: (got `{spec}`)"
        )))
    }
}

/// Round-trip helper: pretty-print the AST of an expression field.
pub fn pretty_print(field: &CurvatureField) -> Option<String> {
    match &field.backend {
        Backend::Expr { value, params, .. } => Some(
            ExprDisplay {
                expr: value,
                params,
            }
            .to_string(),
        ),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_basics() {
        let f = CurvatureField::constant(1.0);
        assert_eq!(f.eval([3.0, -1.0, 0.5]), 1.0);
        assert_eq!(f.grad([3.0, -1.0, 0.5]), [0.0; 3]);
        assert_eq!(f.kind(), FieldKind::Constant);
        // m_H of a constant is exactly H/3 at any order.
        assert_eq!(f.m_h([0.2, 0.0, 0.0], 2), 1.0 / 3.0);
    }

    #[test]
    fn parse_field_examples() {
        // Oracle: plain scalar arithmetic.
        let f = CurvatureField::parse("1 + 0.5*tanh(r - 3)").unwrap();
        let expected = 1.0 + 0.5 * (-3.0f64).tanh();
        assert!((f.eval([0.0; 3]) - expected).abs() < 1e-15);
        assert_eq!(f.kind(), FieldKind::Radial);
        assert!(f.one_sided_gradient());

        let g = CurvatureField::parse("u1*u2").unwrap();
        assert_eq!(g.eval([1.0, 2.0, 0.0]), 2.0);
        assert_eq!(g.grad([1.0, 2.0, 0.0]), [2.0, 1.0, 0.0]);

        let c = CurvatureField::parse("1").unwrap();
        assert_eq!(c.kind(), FieldKind::Constant);
        assert_eq!(c.grad([5.0, 6.0, 7.0]), [0.0; 3]);
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        let err = CurvatureField::parse("1 + eps*sin(u3)").unwrap_err();
        match err {
            FieldError::Expr(ExprError::UnknownIdentifier { offset, name }) => {
                assert_eq!(name, "eps");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let fields = [
            CurvatureField::parse("1 + 0.5*tanh(r - 3)").unwrap(),
            CurvatureField::parse("u1*u2 + exp(-r^2)").unwrap(),
            CurvatureField::parse("sin(u3) / (1 + r^2) + atan(u1)").unwrap(),
        ];
        let h = 1e-5;
        for f in &fields {
            for _ in 0..50 {
                let u: Vec3 = [
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                ];
                let g = f.grad(u);
                for i in 0..3 {
                    let mut up = u;
                    let mut dn = u;
                    up[i] += h;
                    dn[i] -= h;
                    let fd = (f.eval(up) - f.eval(dn)) / (2.0 * h);
                    let scale = 1.0_f64.max(g[i].abs());
                    assert!(
                        (g[i] - fd).abs() / scale < 1e-6,
                        "field grad mismatch: {} vs {}",
                        g[i],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn grad_of_r_at_345() {
        // Chain-rule oracle: grad r = u / |u|.
        let f = CurvatureField::parse("r").unwrap();
        let g = f.grad([3.0, 0.0, 4.0]);
        assert!((g[0] - 0.6).abs() < 1e-15);
        assert!(g[1].abs() < 1e-15);
        assert!((g[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn m_h_closed_forms() {
        // H = |u|^2 at |u| = 1: integrand s^4, integral 1/5.
        let f = CurvatureField::parse("r^2").unwrap();
        assert!((f.m_h([1.0, 0.0, 0.0], 3) - 0.2).abs() < 1e-15);
        let z = CurvatureField::constant(0.0);
        assert_eq!(z.m_h([1.0, 2.0, 3.0], 2), 0.0);
        // |m_H| <= sup|H| / 3 by the integrand bound.
        let g = CurvatureField::parse("sin(u1) + cos(u2*u3)").unwrap();
        for k in 0..64u64 {
            let u = halton_ball(k, 4.0);
            assert!(g.m_h(u, 16).abs() <= 2.0 / 3.0 + 1e-12);
        }
    }

    #[test]
    fn div_identity_defect_small_at_order_32() {
        // div(m_H(u) u) = grad m_H . u + 3 m_H = H(u).
        let f = CurvatureField::parse("1 + 0.3*sin(u1)*cos(u2) + exp(-r^2)").unwrap();
        for k in 0..32u64 {
            let u = halton_ball(k, 3.0);
            let h = f.eval(u);
            let defect = vec3::dot(f.m_h_grad(u, 32), u) + 3.0 * f.m_h(u, 32) - h;
            assert!(
                defect.abs() <= 1e-8 * h.abs().max(1.0),
                "defect {defect:e} at {u:?}"
            );
        }
    }

    #[test]
    fn scalars_constant_field_vanish() {
        let s = estimate_scalars(&CurvatureField::constant(2.0), 5.0, 256);
        assert_eq!(s.m_h, 0.0);
        assert!(s.m_bar.abs() < 1e-12);
        assert_eq!(s.sup_h, 2.0);
        assert!(s.gate_m && s.gate_m_bar);
    }

    #[test]
    fn scalars_sampled_bound_and_dense_grid_crosscheck() {
        // H = 1 + eps*sin(u3): grad = (0, 0, eps cos u3);
        // |grad H . u| |u| <= eps |u|^2 <= eps R^2.
        let eps = 0.05;
        let mut params = BTreeMap::new();
        params.insert("eps".to_string(), eps);
        let f = CurvatureField::parse_with_params("1 + eps*sin(u3)", &params).unwrap();
        let r = 2.0;
        let s = estimate_scalars(&f, r, 512);
        assert!(s.m_h <= eps * r * r + 1e-12);
        // Dense-grid oracle: brute force over a lattice must not exceed the
        // analytic bound either, and the sampled sup must be a lower bound
        // of the dense sup plus slack.
        let mut dense = 0.0f64;
        let n = 24;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let u = [
                        -r + 2.0 * r * (i as f64 + 0.5) / n as f64,
                        -r + 2.0 * r * (j as f64 + 0.5) / n as f64,
                        -r + 2.0 * r * (k as f64 + 0.5) / n as f64,
                    ];
                    if vec3::norm(u) <= r {
                        dense = dense.max(vec3::dot(f.grad(u), u).abs() * vec3::norm(u));
                    }
                }
            }
        }
        assert!(dense <= eps * r * r + 1e-12);
        assert!(s.m_h >= 0.5 * dense, "sampled {} vs dense {}", s.m_h, dense);
    }

    #[test]
    fn scalars_m_bar_below_m_h() {
        let fields = [
            CurvatureField::parse("1 + 0.2*exp(-r^2)").unwrap(),
            CurvatureField::parse("2 + sin(u1)/(1+r^2)").unwrap(),
        ];
        for f in &fields {
            let s = estimate_scalars(f, 4.0, 512);
            assert!(s.m_bar <= s.m_h + 1e-9, "{} > {}", s.m_bar, s.m_h);
        }
    }

    #[test]
    fn scalars_monotone_in_sample_count() {
        let f = CurvatureField::parse("1 + 0.3*sin(u1*u2)").unwrap();
        let mut prev = 0.0;
        for n in [64usize, 128, 256, 512] {
            let s = estimate_scalars(&f, 3.0, n);
            assert!(s.m_h + 1e-15 >= prev);
            prev = s.m_h;
        }
    }

    #[test]
    fn truncation_of_constant_is_identity() {
        let f = CurvatureField::constant(3.0);
        let t = f.truncate(5.0).unwrap();
        for k in 0..32u64 {
            let u = halton_ball(k, 10.0);
            assert_eq!(t.eval(u), 3.0);
            assert_eq!(t.grad(u), [0.0; 3]);
        }
    }

    #[test]
    fn truncation_error_bound_and_exact_tail() {
        // H = h_inf + e^{-|u|}: sup_{|u| >= r_n} |H - h_inf| = e^{-r_n}.
        let f = CurvatureField::parse("1 + exp(-r)").unwrap().with_h_inf(1.0);
        for r_n in [5.0, 10.0] {
            let t = f.truncate(r_n).unwrap();
            let eps = (-r_n).exp();
            let mut sup_err = 0.0f64;
            for k in 0..2048u64 {
                let u = halton_ball(k, r_n + 3.0);
                sup_err = sup_err.max((t.eval(u) - f.eval(u)).abs());
            }
            assert!(sup_err <= 4.0 * eps, "sup err {sup_err:e} vs {:e}", 4.0 * eps);
            // Exactly the constant beyond r_n + 1.
            for k in 0..256u64 {
                let u = halton_sphere(k, r_n + 1.0 + 0.01 + (k as f64) * 0.01);
                assert_eq!(t.eval(u), 1.0);
            }
        }
    }

    #[test]
    fn truncation_preserves_radial_derivative_identity() {
        // grad H_n(u) . u = chi_n(|u|) grad H(u) . u
        let f = CurvatureField::parse("1 + exp(-r) + 0.1*sin(u3)/(1+r^2)")
            .unwrap()
            .with_h_inf(1.0);
        let r_n = 4.0;
        let t = f.truncate(r_n).unwrap();
        for k in 0..256u64 {
            let u = halton_ball(k, r_n + 2.0);
            let rho = vec3::norm(u);
            let lhs = vec3::dot(t.grad(u), u);
            let rhs = chi(rho - r_n) * vec3::dot(f.grad(u), u);
            assert!(
                (lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()),
                "at rho={rho}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn truncation_m_h_not_larger() {
        let f = CurvatureField::parse("1 + exp(-r)").unwrap().with_h_inf(1.0);
        let t = f.truncate(5.0).unwrap();
        let sf = estimate_scalars(&f, 8.0, 512);
        let st = estimate_scalars(&t, 8.0, 512);
        assert!(st.m_h <= sf.m_h + 1e-9);
    }

    #[test]
    fn truncation_pointwise_equal_inside_for_compact_fields() {
        // A field already constant beyond radius 3: the correction integral
        // vanishes identically, so H_n = H on |u| <= r_n - 1 to quadrature
        // accuracy.
        let f = CurvatureField::parse("1 + exp(-r^2)").unwrap().with_h_inf(1.0);
        let r_n = 6.0;
        let t = f.truncate(r_n).unwrap();
        for k in 0..512u64 {
            let u = halton_ball(k, r_n - 1.0);
            assert!(
                (t.eval(u) - f.eval(u)).abs() <= 1e-10,
                "mismatch at {:?}",
                u
            );
        }
    }

    #[test]
    fn radial_roots_basic() {
        // H = 1: rho = 1, energy 4 pi / 3.
        let b = radial_bubble_radii(&CurvatureField::constant(1.0), 0.1, 3.0).unwrap();
        assert_eq!(b.roots.len(), 1);
        assert!((b.roots[0].rho - 1.0).abs() < 1e-10);
        assert!((b.roots[0].energy - 4.0 * PI / 3.0).abs() < 1e-12);
        // H = 2: rho = 1/2 (arithmetic), energy pi / 3.
        let b = radial_bubble_radii(&CurvatureField::constant(2.0), 0.1, 3.0).unwrap();
        assert_eq!(b.roots.len(), 1);
        assert!((b.roots[0].rho - 0.5).abs() < 1e-10);
        assert!((b.roots[0].energy - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radial_roots_degenerate_continuum() {
        // H = 1/rho: rho |H| = 1 identically.
        let b = radial_bubble_radii(&CurvatureField::radial("1/r").unwrap(), 0.5, 2.0).unwrap();
        assert!(b.degenerate_interval);
    }

    #[test]
    fn radial_roots_reject_nonradial() {
        let err = radial_bubble_radii(&CurvatureField::parse("1 + u3").unwrap(), 0.5, 2.0);
        assert!(matches!(err, Err(FieldError::NotRadial { .. })));
    }

    #[test]
    fn field_file_round_trip() {
        let text = r#"
# a radial perturbation
expr = "1 + eps*exp(-r)"
params.eps = 0.25
h_inf = 1.0
r0 = 7.5
"#;
        let f = parse_field_file(text).unwrap();
        assert_eq!(f.h_inf(), Some(1.0));
        assert_eq!(f.r0(), Some(7.5));
        assert!((f.eval([0.0; 3]) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn field_spec_shorthand() {
        let c = parse_field_spec("const:2.5").unwrap();
        assert_eq!(c.constant_value(), Some(2.5));
        let r = parse_field_spec("radial:1/r").unwrap();
        assert!((r.eval([2.0, 0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!(parse_field_spec("radial:u1").is_err());
        let e = parse_field_spec("expr:u1*u2").unwrap();
        assert_eq!(e.eval([3.0, 2.0, 0.0]), 6.0);
        assert!(parse_field_spec("nope:1").is_err());
    }

    #[test]
    fn print_parse_round_trip_evaluates_identically() {
        use rand::{Rng, SeedableRng};
        let sources = [
            "1 + 0.5*tanh(r - 3)",
            "u1*u2 - u3/(1 + r^2)",
            "sin(u1)*cos(u2) + exp(-(r - 1)^2) - atan(u3)^3",
            "-(u1 + 2)*(u2 - 1) / (3 + sqrt(1 + r^2))",
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for src in sources {
            let f = CurvatureField::parse(src).unwrap();
            let printed = pretty_print(&f).unwrap();
            let g = CurvatureField::parse(&printed).unwrap();
            for _ in 0..1000 {
                let u: Vec3 = [
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                ];
                let a = f.eval(u);
                let b = g.eval(u);
                assert!(
                    a == b || (a - b).abs() < 1e-14 * a.abs().max(1.0),
                    "{src} -> {printed}: {a} vs {b}"
                );
            }
        }
    }
}
