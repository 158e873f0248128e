//! Zero-energy scattering: scattering length, bound-state count and tuning
//! of the inner wall to a target scattering length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{PotentialCurve, RadialPotential};
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOptions {
    /// Outer end of the integration, a₀. The fit uses [r_end/10, r_end].
    pub r_end: f64,
    /// Initial (finest) Numerov step, a₀.
    pub base_step: f64,
    /// Convergence of a_sc under step halving, relative.
    pub rel_tol: f64,
    pub max_halvings: u32,
    /// Steps never exceed this fraction of r.
    pub growth: f64,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self { r_end: 2.0e5, base_step: 4e-3, rel_tol: 1e-9, max_halvings: 8, growth: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub a_sc: f64,
    /// Nodes of the zero-energy solution, equal to the number of s-wave bound states.
    pub nodes: u32,
    /// Inner end of the fit window, a₀.
    pub r_match: f64,
    /// RMS deviation of the fit, in a₀.
    pub fit_error: f64,
    /// Base step at convergence.
    pub step: f64,
}

struct Pass {
    a: f64,
    nodes: u32,
    r_match: f64,
    fit_error: f64,
}

fn integrate(pot: &dyn RadialPotential, mu: f64, h0: f64, opt: &ScatteringOptions) -> Result<Pass> {
    let r_start = pot.inner_radius().max(0.0);
    let f = |r: f64| 2.0 * mu * pot.value(r);
    // Attraction scale: deepest sampled well.
    let span = pot.range().max(r_start + 1.0);
    let fscale = (0..=2000).map(|i| -f(r_start + (span - r_start) * i as f64 / 2000.0)).fold(0.0_f64, f64::max);
    let r_grow = pot.range().max(r_start);
    let desired = |r: f64, fr: f64| -> f64 {
        if r < r_grow {
            return h0;
        }
        let by_pot = if fr != 0.0 { h0 * (fscale / fr.abs()).sqrt() } else { f64::INFINITY };
        h0.max(by_pot.min(opt.growth * r)).min(0.05 * opt.r_end)
    };

    let fit_start = 0.1 * opt.r_end;
    let tail = (f(fit_start) * fit_start * fit_start).abs();
    if tail > 1e-4 {
        return Err(Error::domain(format!(
            "potential not negligible at r = {fit_start:.3e} a0 (|2 mu V| r^2 = {tail:.2e}); increase r_end"
        )));
    }

    let mut segs: Vec<f64> = pot.discontinuities().into_iter().filter(|&b| b > r_start && b < opt.r_end).collect();
    segs.push(opt.r_end);

    let mut tracker = Tracker { umax: 0.0, sign: 0.0, nodes: 0, fit: Vec::new(), fit_start };
    let (mut r0, mut u0, mut up0) = (r_start, 0.0, 1.0);
    for (k, &seg_end) in segs.iter().enumerate() {
        let last = k + 1 == segs.len();
        let len = seg_end - r0;
        if len <= 0.0 {
            continue;
        }
        // Inner segments end exactly on the breakpoint and use its inner-side value.
        let edge = seg_end - 1e-9 * seg_end.max(1.0);
        let fseg = |x: f64| if !last && x >= edge { f(edge) } else { f(x) };
        let mut h = if last { h0.min(len) } else { len / (len / h0).ceil() };
        let (u1, _) = rk4(&fseg, r0, u0, up0, h, 32);
        // Nodes at the current spacing, oldest first.
        let mut hist: Vec<(f64, f64, f64)> = vec![(r0, u0, fseg(r0)), (r0 + h, u1, fseg(r0 + h))];
        tracker.record(r0 + h, u1);
        // Summed form: w = (1 - c f) u, dw carries w_{n+1} - w_n so that the
        // nearly linear solution does not lose digits to cancellation.
        let mut c = h * h / 12.0;
        let wof = |p: &(f64, f64, f64), c: f64| (1.0 - c * p.2) * p.1;
        let mut dw = wof(&hist[1], c) - wof(&hist[0], c);
        // Abscissae from an integer count to avoid drift over many steps.
        let (mut base, mut k) = (r0, 1u64);
        loop {
            let cur = hist[hist.len() - 1];
            if (last && cur.0 >= seg_end) || (!last && seg_end - cur.0 <= 0.5 * h) {
                break;
            }
            if last && hist.len() >= 3 && 2.0 * h <= desired(cur.0, cur.2) {
                let back = hist[hist.len() - 3];
                hist.clear();
                hist.push(back);
                hist.push(cur);
                h *= 2.0;
                c = h * h / 12.0;
                dw = wof(&cur, c) - wof(&back, c);
                base = cur.0;
                k = 0;
            }
            k += 1;
            let rn = base + k as f64 * h;
            let fnext = fseg(rn);
            dw += h * h * cur.2 * cur.1;
            let wn = wof(&cur, c) + dw;
            let un = wn / (1.0 - c * fnext);
            if hist.len() >= 6 {
                hist.remove(0);
            }
            hist.push((rn, un, fnext));
            tracker.record(rn, un);
            if un.abs() > 1e150 {
                let s = 1e-150;
                for p in hist.iter_mut() {
                    p.1 *= s;
                }
                dw *= s;
                tracker.rescale(s);
            }
        }
        if !last {
            // Carry u and u' across the breakpoint; u' from a five-point backward difference.
            let n = hist.len();
            if n < 5 {
                return Err(Error::Scattering("segment too short for the derivative stencil".into()));
            }
            let u: Vec<f64> = hist[n - 5..].iter().map(|p| p.1).collect();
            up0 = (25.0 * u[4] - 48.0 * u[3] + 36.0 * u[2] - 16.0 * u[1] + 3.0 * u[0]) / (12.0 * h);
            r0 = seg_end;
            u0 = u[4];
        }
    }
    if tracker.fit.len() < 8 {
        return Err(Error::Scattering("too few points in the fit window".into()));
    }
    let (a_coef, b_coef, err) = fit_line(&tracker.fit, opt.r_end);
    if a_coef == 0.0 {
        return Err(Error::Scattering("zero-energy solution has vanishing slope".into()));
    }
    let a = -b_coef / a_coef;
    let mut nodes = tracker.nodes;
    if a > opt.r_end {
        nodes += 1;
    }
    Ok(Pass { a, nodes, r_match: fit_start, fit_error: err / a_coef.abs() })
}

/// Node counting with hysteresis and collection of the fit window.
struct Tracker {
    umax: f64,
    sign: f64,
    nodes: u32,
    fit: Vec<(f64, f64)>,
    fit_start: f64,
}

impl Tracker {
    fn record(&mut self, r: f64, u: f64) {
        self.umax = self.umax.max(u.abs());
        if u.abs() > 1e-12 * self.umax {
            let s = u.signum();
            if self.sign != 0.0 && s != self.sign {
                self.nodes += 1;
            }
            self.sign = s;
        }
        if r >= self.fit_start {
            self.fit.push((r, u));
        }
    }

    fn rescale(&mut self, s: f64) {
        self.umax *= s;
        for p in self.fit.iter_mut() {
            p.1 *= s;
        }
    }
}

fn rk4(f: &impl Fn(f64) -> f64, r0: f64, u0: f64, up0: f64, h: f64, sub: usize) -> (f64, f64) {
    let dh = h / sub as f64;
    let (mut r, mut u, mut p) = (r0, u0, up0);
    for _ in 0..sub {
        let k1u = p;
        let k1p = f(r) * u;
        let k2u = p + 0.5 * dh * k1p;
        let k2p = f(r + 0.5 * dh) * (u + 0.5 * dh * k1u);
        let k3u = p + 0.5 * dh * k2p;
        let k3p = f(r + 0.5 * dh) * (u + 0.5 * dh * k2u);
        let k4u = p + dh * k3p;
        let k4p = f(r + dh) * (u + dh * k3u);
        u += dh / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        p += dh / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        r += dh;
    }
    (u, p)
}

/// Least-squares fit u ≈ A r + B + C r⁻³ on the outer window; returns (A, B, rms).
/// Uses a QR factorisation (twice-iterated Gram-Schmidt) of the design matrix.
fn fit_line(pts: &[(f64, f64)], r_end: f64) -> (f64, f64, f64) {
    let n = pts.len();
    let umax = pts.iter().fold(0.0_f64, |m, p| m.max(p.1.abs()));
    let cols: [Vec<f64>; 3] = [
        pts.iter().map(|p| p.0 / r_end).collect(),
        vec![1.0; n],
        pts.iter().map(|p| (r_end / p.0).powi(3) * 1e-3).collect(),
    ];
    let y: Vec<f64> = pts.iter().map(|p| p.1 / umax).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut r = [[0.0; 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[i][j] += c;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= c * qk;
                }
            }
        }
        let nv = dot(&v, &v).sqrt();
        r[j][j] = nv;
        q.push(v.iter().map(|x| x / nv).collect());
    }
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, &y)).collect();
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = ((i + 1)..3).map(|j| r[i][j] * x[j]).sum();
        x[i] = (qty[i] - s) / r[i][i];
    }
    let ss: f64 = (0..n)
        .map(|k| {
            let d = y[k] - (x[0] * cols[0][k] + x[1] * cols[1][k] + x[2] * cols[2][k]);
            d * d
        })
        .sum();
    (x[0] / r_end * umax, x[1] * umax, (ss / n as f64).sqrt() * umax)
}

/// Scattering length by outward Numerov integration at zero energy, halving
/// the base step until a_sc is converged.
pub fn extract_scattering_length(pot: &dyn RadialPotential, mu: f64, opt: &ScatteringOptions) -> Result<ScatteringResult> {
    if !(mu > 0.0) {
        return Err(Error::domain("reduced mass must be positive"));
    }
    let mut h = opt.base_step;
    let mut last = integrate(pot, mu, h, opt)?;
    // Length floor: the dispersion length (2 mu |V| r^6)^(1/4) probed in the tail.
    let rt = 10.0 * pot.range().max(1.0);
    let beta = (2.0 * mu * pot.value(rt).abs()).powf(0.25) * rt.powf(1.5);
    let floor = pot.range().max(beta).max(1.0);
    for _ in 0..opt.max_halvings {
        h *= 0.5;
        let next = integrate(pot, mu, h, opt)?;
        let change = (next.a - last.a).abs();
        // Near a pole the phase, not a itself, converges: compare β/a there.
        let scale = next.a.abs().max(floor) * (next.a.abs() / floor).max(1.0);
        let converged = change <= opt.rel_tol * scale && next.nodes == last.nodes;
        last = next;
        if converged {
            return Ok(ScatteringResult {
                a_sc: last.a,
                nodes: last.nodes,
                r_match: last.r_match,
                fit_error: last.fit_error,
                step: h,
            });
        }
    }
    Err(Error::Scattering(format!("a_sc not converged after {} step halvings (last {})", opt.max_halvings, last.a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    /// |a − target| / max(|target|, length_scale) must fall below this.
    pub rel_tol: f64,
    /// Usually the oscillator length a_ho.
    pub length_scale: f64,
    /// Allow the search to continue into a neighbouring branch.
    pub allow_branch_change: bool,
    pub initial_step: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-6, length_scale: 1.0, allow_branch_change: false, initial_step: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct Tuned {
    pub shift: f64,
    pub curve: PotentialCurve,
    pub result: ScatteringResult,
}

/// Finds the inner-wall shift s (relative to the unshifted curve) that gives
/// the requested scattering length.
pub fn tune_to_scattering_length(
    curve: &PotentialCurve,
    mu: f64,
    target: f64,
    sopt: &ScatteringOptions,
    topt: &TuneOptions,
) -> Result<Tuned> {
    let base = curve.shift_inner_wall(0.0)?;
    let eval = |s: f64| -> Result<(PotentialCurve, ScatteringResult)> {
        let c = base.shift_inner_wall(s)?;
        let r = extract_scattering_length(&c, mu, sopt)?;
        Ok((c, r))
    };
    let scale = target.abs().max(topt.length_scale);
    let tol = topt.rel_tol * scale;
    let (c0, r0) = eval(0.0)?;
    if (r0.a_sc - target).abs() <= tol {
        return Ok(Tuned { shift: 0.0, curve: c0, result: r0 });
    }
    let (wa, wb) = base.default_window();
    let s_limit = 0.95 * crate::potentials::WallShift::max_shift(wa, wb);
    // a_sc increases with s within a branch.
    let dir = if target > r0.a_sc { 1.0 } else { -1.0 };
    let above = |a: f64| dir * (a - target) >= 0.0;

    let mut s_lo = 0.0;
    let mut n_lo = r0.nodes;
    let mut step = topt.initial_step;
    let mut pole: Option<f64> = None;
    let s_hi = loop {
        let s = (s_lo + dir * step).clamp(-s_limit, s_limit);
        if s == s_lo {
            return match pole {
                Some(p) => Err(Error::Branch { pole_shift: p }),
                None => Err(Error::domain(format!("target a_sc = {target} not reachable within |s| < {s_limit:.4} a0"))),
            };
        }
        let (_, r) = eval(s)?;
        if r.nodes != n_lo {
            // Pole between s_lo and s: narrow down by node count.
            let (mut a, mut b) = (s_lo, s);
            let mut found = None;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let (_, rm) = eval(m)?;
                if rm.nodes == n_lo {
                    if above(rm.a_sc) {
                        found = Some(m);
                        break;
                    }
                    a = m;
                } else {
                    b = m;
                }
                if (b - a).abs() < 1e-14 * b.abs().max(1e-3) {
                    break;
                }
            }
            match found {
                Some(m) => {
                    s_lo = a;
                    break m;
                }
                None => {
                    pole = Some(0.5 * (a + b));
                    if !topt.allow_branch_change {
                        return Err(Error::Branch { pole_shift: 0.5 * (a + b) });
                    }
                    s_lo = b;
                    n_lo = eval(b)?.1.nodes;
                    step = topt.initial_step;
                    continue;
                }
            }
        }
        if above(r.a_sc) {
            break s;
        }
        s_lo = s;
        step *= 2.0;
    };

    let g = |s: f64| -> Result<f64> {
        let (_, r) = eval(s)?;
        Ok((r.a_sc / scale).atan() - (target / scale).atan())
    };
    let mut s = brent(g, s_lo, s_hi, 1e-15, 200)?;
    let (mut c, mut r) = eval(s)?;
    // Polish with secant steps if Brent's x-tolerance left a residual.
    for _ in 0..20 {
        if (r.a_sc - target).abs() <= tol {
            break;
        }
        let ds = 1e-9 * (s_hi - s_lo).abs().max(1e-9);
        let (_, r2) = eval(s + ds)?;
        let slope = (r2.a_sc - r.a_sc) / ds;
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        s -= (r.a_sc - target) / slope;
        let e = eval(s)?;
        c = e.0;
        r = e.1;
    }
    if (r.a_sc - target).abs() > tol {
        return Err(Error::Scattering(format!("tuning stalled at a_sc = {} (target {target})", r.a_sc)));
    }
    Ok(Tuned { shift: s, curve: c, result: r })
}
