//! Gauss-Legendre rules and cell quadrature with algebraic endpoint behaviour.

use std::sync::OnceLock;

/// Gauss-Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[m - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[m - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn gl16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Shared 8-point rule.
    pub fn gl8() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let h = b - a;
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(a + h * x)).sum::<f64>() * h
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_POWER: f64 = 4.0;

/// Power `q` of the substitution `x = a + h·u^q` used at an endpoint where the
/// integrand behaves like `(x − a)^e`.
pub fn substitution_power(e: f64) -> f64 {
    if e == 0.0 || (e > 0.0 && e.fract() == 0.0) {
        1.0
    } else if e < 0.0 {
        // the leading term becomes u², and smooth corrections stay smooth enough
        3.0 / (1.0 + e)
    } else {
        4.0
    }
}

/// Nodes and weights for `∫_a^b`, where the integrand behaves like
/// `(x − a)^{ea}` near `a` and `(b − x)^{eb}` near `b` (exponents `> −1`).
pub fn cell_rule(a: f64, b: f64, ea: f64, eb: f64, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(2 * gl.len());
    cell_rule_into(a, b, ea, eb, gl, &mut out);
    out
}

pub fn cell_rule_into(
    a: f64,
    b: f64,
    ea: f64,
    eb: f64,
    gl: &GaussLegendre,
    out: &mut Vec<(f64, f64)>,
) {
    // a large power puts nodes within rounding distance of a nonzero endpoint
    let qa = if a == 0.0 { substitution_power(ea) } else { substitution_power(ea).min(MAX_POWER) };
    let qb = substitution_power(eb).min(MAX_POWER);
    if qa != 1.0 && qb != 1.0 {
        let mid = 0.5 * (a + b);
        push_left(a, mid, qa, gl, out);
        push_right(mid, b, qb, gl, out);
    } else if qb != 1.0 {
        push_right(a, b, qb, gl, out);
    } else {
        push_left(a, b, qa, gl, out);
    }
}

fn push_left(a: f64, b: f64, q: f64, gl: &GaussLegendre, out: &mut Vec<(f64, f64)>) {
    let h = b - a;
    for (u, w) in gl.nodes.iter().zip(&gl.weights) {
        if q == 1.0 {
            out.push((a + h * u, h * w));
        } else {
            out.push((a + h * u.powf(q), h * q * u.powf(q - 1.0) * w));
        }
    }
}

fn push_right(a: f64, b: f64, q: f64, gl: &GaussLegendre, out: &mut Vec<(f64, f64)>) {
    let h = b - a;
    for (u, w) in gl.nodes.iter().zip(&gl.weights) {
        out.push((b - h * u.powf(q), h * q * u.powf(q - 1.0) * w));
    }
}

pub fn integrate_cell<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    ea: f64,
    eb: f64,
    gl: &GaussLegendre,
) -> f64 {
    cell_rule(a, b, ea, eb, gl).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Composite rule over `panels` equal panels; the endpoint exponents apply to
/// the first and last panel only.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    ea: f64,
    eb: f64,
    panels: usize,
    gl: &GaussLegendre,
) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut buf = Vec::with_capacity(2 * gl.len());
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let hi = if p + 1 == panels { b } else { lo + h };
        let el = if p == 0 { ea } else { 0.0 };
        let er = if p + 1 == panels { eb } else { 0.0 };
        buf.clear();
        cell_rule_into(lo, hi, el, er, gl, &mut buf);
        acc += buf.iter().map(|&(x, w)| w * f(x)).sum::<f64>();
    }
    acc
}
