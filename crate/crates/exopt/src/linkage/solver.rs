//! Loop-closure residuals, damped Newton solver, sweeps and virtual-work torques.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Constraint, Joint, MechanismConfig, Quantity, Segment};
use super::LinkageError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
enum Pt {
    Ground(usize),
    Free(usize),
}

#[derive(Debug, Clone, Copy)]
enum Q<T> {
    Const(T),
    Link(usize),
    Var(usize),
}

#[derive(Debug, Clone)]
enum Row<T> {
    Distance { a: Pt, b: Pt, len: Q<T> },
    Offset { point: Pt, base: Pt, from: Pt, to: Pt, len: Q<T>, cos: T, sin: T },
    Line { point: Pt, origin: Pt, dir: [T; 2], param: usize },
    Finger { point: Pt, segment: Segment, along: Q<T>, normal: Q<T> },
    Rack { param: usize, joint: Joint, radius: Q<T>, offset: Q<T> },
}

/// Compiled mechanism: unknown layout, ground coordinates and residual rows.
#[derive(Debug, Clone)]
pub struct Mechanism<T> {
    pub config: MechanismConfig,
    ground: Vec<[T; 2]>,
    rows: Vec<Row<T>>,
    point_names: Vec<String>,
    param_names: Vec<String>,
    n: usize,
    actuator: Option<(Pt, Pt)>,
    sliders: Vec<usize>,
    tol: T,
}

/// One solved posture. `x` holds free point coordinates followed by free params.
#[derive(Debug, Clone, PartialEq)]
pub struct PostureSolution<T> {
    pub x: Vec<T>,
    pub theta_mcp: T,
    pub theta_pip: T,
    pub residual: T,
}

/// Named view of a posture for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostureReport {
    pub points: BTreeMap<String, [f64; 2]>,
    pub params: BTreeMap<String, f64>,
    pub actuator_length: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub steps: usize,
    pub mcp_max_deg: f64,
    pub pip_max_deg: f64,
    /// Actuator force in N.
    pub force: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { steps: 100, mcp_max_deg: 80.0, pip_max_deg: 90.0, force: 1.0 }
    }
}

impl SweepSpec {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }

    /// Joint angles (rad) at step k; both joints advance proportionally.
    pub fn angles<T: Real>(&self, k: usize) -> (T, T) {
        let f = if self.steps > 1 { k as f64 / (self.steps - 1) as f64 } else { 0.0 };
        (T::c((self.mcp_max_deg * f).to_radians()), T::c((self.pip_max_deg * f).to_radians()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionResult<T> {
    /// Per-step torques (Nm) for the configured actuator force.
    pub tau_mcp: Vec<T>,
    pub tau_pip: Vec<T>,
    /// Sweep aggregates: trapezoid-weighted mean of per-step torque magnitudes.
    pub tau_mcp_mean: T,
    pub tau_pip_mean: T,
    /// Actuator length |OA| per step (mm).
    pub actuator: Vec<T>,
    /// Actuator excursion max − min over the sweep (mm).
    pub lx: T,
    pub slider_min: Vec<T>,
    pub slider_max: Vec<T>,
}

fn rot<T: Real>(v: [T; 2], c: T, s: T) -> [T; 2] {
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    a: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(n: usize, mut a: Vec<T>) -> Option<Self> {
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let akj = a[k * n + j];
                        a[i * n + j] -= f * akj;
                    }
                }
            }
        }
        Some(Self { n, a, piv })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.a[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.a[i * n + j] * x[j];
            }
            x[i] = s / self.a[i * n + i];
        }
        x
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

impl<T: Real> Mechanism<T> {
    pub fn new(config: MechanismConfig) -> Result<Self, LinkageError> {
        let point_names: Vec<String> = config.points.keys().cloned().collect();
        let param_names: Vec<String> = config.params.keys().cloned().collect();
        let ground_names: Vec<String> = config.ground.keys().cloned().collect();
        let ground: Vec<[T; 2]> = config.ground.values().map(|p| [T::c(p[0]), T::c(p[1])]).collect();
        let np = point_names.len();
        let n = 2 * np + param_names.len();

        let pt = |name: &str| -> Result<Pt, LinkageError> {
            if let Some(i) = point_names.iter().position(|p| p == name) {
                Ok(Pt::Free(2 * i))
            } else if let Some(i) = ground_names.iter().position(|p| p == name) {
                Ok(Pt::Ground(i))
            } else {
                Err(LinkageError::Config(format!("unknown point {name}")))
            }
        };
        let param = |name: &str| -> Result<usize, LinkageError> {
            param_names
                .iter()
                .position(|p| p == name)
                .map(|i| 2 * np + i)
                .ok_or_else(|| LinkageError::Config(format!("unknown param {name}")))
        };
        let qty = |q: &Quantity| -> Result<Q<T>, LinkageError> {
            match q {
                Quantity::Value(v) => Ok(Q::Const(T::c(*v))),
                Quantity::Name(name) => {
                    if let Ok(i) = param(name) {
                        Ok(Q::Var(i))
                    } else if let Some(i) = config.links.iter().position(|l| l == name) {
                        Ok(Q::Link(i))
                    } else if let Some(v) = config.fixed.get(name) {
                        Ok(Q::Const(T::c(*v)))
                    } else {
                        Err(LinkageError::Config(format!("unknown quantity {name}")))
                    }
                }
            }
        };

        let mut rows = Vec::with_capacity(config.constraints.len());
        let mut equations = 0;
        for c in &config.constraints {
            let row = match c {
                Constraint::Distance { a, b, length } => {
                    equations += 1;
                    Row::Distance { a: pt(a)?, b: pt(b)?, len: qty(length)? }
                }
                Constraint::Offset { point, base, from, to, length, angle_deg } => {
                    equations += 2;
                    let ang = angle_deg.to_radians();
                    Row::Offset {
                        point: pt(point)?,
                        base: pt(base)?,
                        from: pt(from)?,
                        to: pt(to)?,
                        len: qty(length)?,
                        cos: T::c(ang.cos()),
                        sin: T::c(ang.sin()),
                    }
                }
                Constraint::Line { point, origin, direction, param: p } => {
                    equations += 2;
                    let l = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
                    if !(l > 0.0) {
                        return Err(LinkageError::Config("zero line direction".into()));
                    }
                    Row::Line {
                        point: pt(point)?,
                        origin: pt(origin)?,
                        dir: [T::c(direction[0] / l), T::c(direction[1] / l)],
                        param: param(p)?,
                    }
                }
                Constraint::Finger { point, segment, along, normal } => {
                    equations += 2;
                    Row::Finger { point: pt(point)?, segment: *segment, along: qty(along)?, normal: qty(normal)? }
                }
                Constraint::Rack { param: p, joint, radius, offset } => {
                    equations += 1;
                    Row::Rack { param: param(p)?, joint: *joint, radius: qty(radius)?, offset: qty(offset)? }
                }
            };
            rows.push(row);
        }
        if equations != n {
            return Err(LinkageError::Config(format!("{equations} equations for {n} unknowns")));
        }
        let actuator = match &config.actuator {
            Some([a, b]) => Some((pt(a)?, pt(b)?)),
            None => None,
        };
        let sliders = config.sliders.iter().map(|s| param(s)).collect::<Result<Vec<_>, _>>()?;
        // Accept residuals near the round-off floor of the working precision.
        let scale = config
            .ground
            .values()
            .flat_map(|p| p.iter().map(|v| v.abs()))
            .chain(config.points.values().flat_map(|p| p.iter().map(|v| v.abs())))
            .fold(1.0f64, f64::max);
        let tol = T::c(config.solver.tolerance).max(T::epsilon() * T::c(64.0 * scale));
        Ok(Self { config, ground, rows, point_names, param_names, n, actuator, sliders, tol })
    }

    pub fn unknowns(&self) -> usize {
        self.n
    }

    pub fn tolerance(&self) -> T {
        self.tol
    }

    /// Initial guess taken from the configured reference assembly.
    pub fn reference_guess(&self) -> Vec<T> {
        let mut x = Vec::with_capacity(self.n);
        for p in self.config.points.values() {
            x.push(T::c(p[0]));
            x.push(T::c(p[1]));
        }
        x.extend(self.config.params.values().map(|v| T::c(*v)));
        x
    }

    #[inline]
    fn p(&self, x: &[T], p: Pt) -> [T; 2] {
        match p {
            Pt::Ground(i) => self.ground[i],
            Pt::Free(i) => [x[i], x[i + 1]],
        }
    }

    #[inline]
    fn q(&self, x: &[T], links: &[T], q: Q<T>) -> T {
        match q {
            Q::Const(v) => v,
            Q::Link(i) => links[i],
            Q::Var(i) => x[i],
        }
    }

    fn segment_frame(&self, segment: Segment, tm: T, tp: T) -> ([T; 2], [T; 2], [T; 2]) {
        let f = &self.config.finger;
        let rest = T::c(f.rest_angle_deg.to_radians());
        let s = T::c(f.flexion_sign);
        let mcp = [T::c(f.mcp[0]), T::c(f.mcp[1])];
        let phi1 = rest + s * tm;
        let u1 = [phi1.cos(), phi1.sin()];
        match segment {
            Segment::Proximal => (mcp, u1, [-u1[1], u1[0]]),
            Segment::Middle => {
                let lp = T::c(f.proximal);
                let phi2 = rest + s * (tm + tp);
                let u2 = [phi2.cos(), phi2.sin()];
                ([mcp[0] + lp * u1[0], mcp[1] + lp * u1[1]], u2, [-u2[1], u2[0]])
            }
        }
    }

    /// Loop-closure residual vector.
    pub fn residual(&self, x: &[T], links: &[T], tm: T, tp: T) -> Vec<T> {
        let mut r = Vec::with_capacity(self.n);
        for row in &self.rows {
            match *row {
                Row::Distance { a, b, len } => {
                    let (pa, pb) = (self.p(x, a), self.p(x, b));
                    r.push(norm(&[pa[0] - pb[0], pa[1] - pb[1]]) - self.q(x, links, len));
                }
                Row::Offset { point, base, from, to, len, cos, sin } => {
                    let (pp, pb, pf, pt) = (self.p(x, point), self.p(x, base), self.p(x, from), self.p(x, to));
                    let d = [pt[0] - pf[0], pt[1] - pf[1]];
                    let rho = norm(&d);
                    let e = rot([d[0] / rho, d[1] / rho], cos, sin);
                    let l = self.q(x, links, len);
                    r.push(pp[0] - pb[0] - l * e[0]);
                    r.push(pp[1] - pb[1] - l * e[1]);
                }
                Row::Line { point, origin, dir, param } => {
                    let (pp, po) = (self.p(x, point), self.p(x, origin));
                    r.push(pp[0] - po[0] - x[param] * dir[0]);
                    r.push(pp[1] - po[1] - x[param] * dir[1]);
                }
                Row::Finger { point, segment, along, normal } => {
                    let pp = self.p(x, point);
                    let (o, u, nv) = self.segment_frame(segment, tm, tp);
                    let (s, h) = (self.q(x, links, along), self.q(x, links, normal));
                    r.push(pp[0] - o[0] - s * u[0] - h * nv[0]);
                    r.push(pp[1] - o[1] - s * u[1] - h * nv[1]);
                }
                Row::Rack { param, joint, radius, offset } => {
                    let th = match joint {
                        Joint::Mcp => tm,
                        Joint::Pip => tp,
                    };
                    r.push(x[param] - self.q(x, links, offset) - self.q(x, links, radius) * th);
                }
            }
        }
        r
    }

    /// Analytic Jacobian of the residual with respect to the unknowns (row-major).
    pub fn jacobian(&self, x: &[T], links: &[T], tm: T, tp: T) -> Vec<T> {
        let n = self.n;
        let mut jac = vec![T::zero(); n * n];
        let mut row = 0;
        let mut add = |jac: &mut Vec<T>, r: usize, col: usize, v: T| jac[r * n + col] += v;
        let add_pt = |jac: &mut Vec<T>, r: usize, p: Pt, m: [[T; 2]; 2], add: &mut dyn FnMut(&mut Vec<T>, usize, usize, T)| {
            if let Pt::Free(i) = p {
                for a in 0..2 {
                    for b in 0..2 {
                        add(jac, r + a, i + b, m[a][b]);
                    }
                }
            }
        };
        let add_q = |jac: &mut Vec<T>, r: usize, q: Q<T>, v: [T; 2], rows: usize, add: &mut dyn FnMut(&mut Vec<T>, usize, usize, T)| {
            if let Q::Var(i) = q {
                for a in 0..rows {
                    add(jac, r + a, i, v[a]);
                }
            }
        };
        let one = T::one();
        let zero = T::zero();
        let eye = [[one, zero], [zero, one]];
        let neg_eye = [[-one, zero], [zero, -one]];
        for rw in &self.rows {
            match *rw {
                Row::Distance { a, b, len } => {
                    let (pa, pb) = (self.p(x, a), self.p(x, b));
                    let d = [pa[0] - pb[0], pa[1] - pb[1]];
                    let l = norm(&d);
                    let g = if l > zero { [d[0] / l, d[1] / l] } else { [zero, zero] };
                    if let Pt::Free(i) = a {
                        add(&mut jac, row, i, g[0]);
                        add(&mut jac, row, i + 1, g[1]);
                    }
                    if let Pt::Free(i) = b {
                        add(&mut jac, row, i, -g[0]);
                        add(&mut jac, row, i + 1, -g[1]);
                    }
                    add_q(&mut jac, row, len, [-one, zero], 1, &mut add);
                    row += 1;
                }
                Row::Offset { point, base, from, to, len, cos, sin } => {
                    let (pf, pt) = (self.p(x, from), self.p(x, to));
                    let d = [pt[0] - pf[0], pt[1] - pf[1]];
                    let rho = norm(&d);
                    let u = [d[0] / rho, d[1] / rho];
                    let l = self.q(x, links, len);
                    // d(unit)/d(d) = (I − u uᵀ)/ρ, then rotate and scale by −l
                    let p = [[one - u[0] * u[0], -u[0] * u[1]], [-u[1] * u[0], one - u[1] * u[1]]];
                    let rp = [
                        [cos * p[0][0] - sin * p[1][0], cos * p[0][1] - sin * p[1][1]],
                        [sin * p[0][0] + cos * p[1][0], sin * p[0][1] + cos * p[1][1]],
                    ];
                    let k = -l / rho;
                    let dto = [[k * rp[0][0], k * rp[0][1]], [k * rp[1][0], k * rp[1][1]]];
                    let dfrom = [[-dto[0][0], -dto[0][1]], [-dto[1][0], -dto[1][1]]];
                    add_pt(&mut jac, row, point, eye, &mut add);
                    add_pt(&mut jac, row, base, neg_eye, &mut add);
                    add_pt(&mut jac, row, to, dto, &mut add);
                    add_pt(&mut jac, row, from, dfrom, &mut add);
                    let e = rot(u, cos, sin);
                    add_q(&mut jac, row, len, [-e[0], -e[1]], 2, &mut add);
                    row += 2;
                }
                Row::Line { point, origin, dir, param } => {
                    add_pt(&mut jac, row, point, eye, &mut add);
                    add_pt(&mut jac, row, origin, neg_eye, &mut add);
                    add(&mut jac, row, param, -dir[0]);
                    add(&mut jac, row + 1, param, -dir[1]);
                    row += 2;
                }
                Row::Finger { point, segment, along, normal } => {
                    let (_, u, nv) = self.segment_frame(segment, tm, tp);
                    add_pt(&mut jac, row, point, eye, &mut add);
                    add_q(&mut jac, row, along, [-u[0], -u[1]], 2, &mut add);
                    add_q(&mut jac, row, normal, [-nv[0], -nv[1]], 2, &mut add);
                    row += 2;
                }
                Row::Rack { param, joint, radius, offset } => {
                    let th = match joint {
                        Joint::Mcp => tm,
                        Joint::Pip => tp,
                    };
                    add(&mut jac, row, param, one);
                    add_q(&mut jac, row, offset, [-one, zero], 1, &mut add);
                    add_q(&mut jac, row, radius, [-th, zero], 1, &mut add);
                    row += 1;
                }
            }
        }
        jac
    }

    /// Damped Newton iteration from `guess` to the configured tolerance.
    pub fn newton(&self, guess: &[T], links: &[T], tm: T, tp: T) -> Result<(Vec<T>, T), LinkageError> {
        let mut x = guess.to_vec();
        let mut r = self.residual(&x, links, tm, tp);
        let mut nr = norm(&r);
        for _ in 0..self.config.solver.max_iterations {
            if nr <= self.tol {
                return Ok((x, nr));
            }
            if !nr.is_finite() {
                break;
            }
            let lu = Lu::factor(self.n, self.jacobian(&x, links, tm, tp))
                .ok_or(LinkageError::NonConvergent { residual: nr.as_f64() })?;
            let neg: Vec<T> = r.iter().map(|v| -*v).collect();
            let dx = lu.solve(&neg);
            let mut t = T::one();
            loop {
                let xn: Vec<T> = x.iter().zip(&dx).map(|(a, b)| *a + t * *b).collect();
                let rn = self.residual(&xn, links, tm, tp);
                let nn = norm(&rn);
                if nn.is_finite() && nn < nr * (T::one() - T::c(1e-4) * t) {
                    x = xn;
                    r = rn;
                    nr = nn;
                    break;
                }
                t = t / T::c(2.0);
                if t < T::c(1e-6) {
                    return Err(LinkageError::NonConvergent { residual: nr.as_f64() });
                }
            }
        }
        if nr <= self.tol {
            Ok((x, nr))
        } else {
            Err(LinkageError::NonConvergent { residual: nr.as_f64() })
        }
    }

    /// Solves a posture warm-started from `guess`, rejecting jumps larger than
    /// the configured continuity threshold.
    pub fn solve_posture(
        &self,
        links: &[T],
        tm: T,
        tp: T,
        guess: &PostureSolution<T>,
    ) -> Result<PostureSolution<T>, LinkageError> {
        let (x, residual) = self.newton(&guess.x, links, tm, tp)?;
        let jump = self.max_jump(&x, &guess.x);
        if jump > T::c(self.config.solver.max_step) {
            return Err(LinkageError::BranchFlip { jump: jump.as_f64() });
        }
        Ok(PostureSolution { x, theta_mcp: tm, theta_pip: tp, residual })
    }

    fn max_jump(&self, a: &[T], b: &[T]) -> T {
        a.iter().zip(b).fold(T::zero(), |m, (p, q)| m.max((*p - *q).abs()))
    }

    /// Solves the reference assembly at the open posture.
    pub fn reference_solution(&self) -> Result<PostureSolution<T>, LinkageError> {
        let links: Vec<T> = self.config.reference_links()?.into_iter().map(T::c).collect();
        let (x, residual) = self.newton(&self.reference_guess(), &links, T::zero(), T::zero())?;
        Ok(PostureSolution { x, theta_mcp: T::zero(), theta_pip: T::zero(), residual })
    }

    /// Moves from a solved assembly to new link values by length continuation at the open posture.
    pub fn assemble(
        &self,
        from: &PostureSolution<T>,
        from_links: &[T],
        to_links: &[T],
    ) -> Result<PostureSolution<T>, LinkageError> {
        let steps = self.config.solver.continuation_steps.max(1);
        let mut x = from.x.clone();
        let mut residual = from.residual;
        for k in 1..=steps {
            let f = T::c(k as f64 / steps as f64);
            let links: Vec<T> = from_links.iter().zip(to_links).map(|(a, b)| *a + (*b - *a) * f).collect();
            let (xn, r) = self.newton(&x, &links, T::zero(), T::zero())?;
            x = xn;
            residual = r;
        }
        Ok(PostureSolution { x, theta_mcp: T::zero(), theta_pip: T::zero(), residual })
    }

    pub fn actuator_length(&self, x: &[T]) -> Option<T> {
        self.actuator.map(|(a, b)| {
            let (pa, pb) = (self.p(x, a), self.p(x, b));
            norm(&[pa[0] - pb[0], pa[1] - pb[1]])
        })
    }

    pub fn point(&self, sol: &PostureSolution<T>, name: &str) -> Option<[T; 2]> {
        if let Some(i) = self.point_names.iter().position(|p| p == name) {
            return Some([sol.x[2 * i], sol.x[2 * i + 1]]);
        }
        self.config.ground.keys().position(|p| p == name).map(|i| self.ground[i])
    }

    pub fn param(&self, sol: &PostureSolution<T>, name: &str) -> Option<T> {
        self.param_names.iter().position(|p| p == name).map(|i| sol.x[2 * self.point_names.len() + i])
    }

    pub fn report(&self, sol: &PostureSolution<T>) -> PostureReport {
        let mut points: BTreeMap<String, [f64; 2]> =
            self.config.ground.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (i, name) in self.point_names.iter().enumerate() {
            points.insert(name.clone(), [sol.x[2 * i].as_f64(), sol.x[2 * i + 1].as_f64()]);
        }
        let params = self
            .param_names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), sol.x[2 * self.point_names.len() + i].as_f64()))
            .collect();
        PostureReport {
            points,
            params,
            actuator_length: self.actuator_length(&sol.x).map(|v| v.as_f64()),
            residual: sol.residual.as_f64(),
        }
    }

    /// Re-solves a perturbed posture with chord iterations on a fixed factorization.
    fn chord(&self, lu: &Lu<T>, x0: &[T], links: &[T], tm: T, tp: T) -> Result<Vec<T>, LinkageError> {
        let mut x = x0.to_vec();
        let target = self.tol * T::c(1e-2);
        let mut last = T::infinity();
        for _ in 0..30 {
            let r = self.residual(&x, links, tm, tp);
            let nr = norm(&r);
            if nr <= target || (nr >= last && nr <= self.tol) {
                return Ok(x);
            }
            if !(nr < last) && last.is_finite() {
                break;
            }
            last = nr;
            let dx = lu.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi -= d;
            }
        }
        self.newton(&x, links, tm, tp).map(|(x, _)| x)
    }

    /// Actuator-length derivatives (mm/rad) with respect to θ_MCP and θ_PIP at a
    /// solved posture, by central finite differences.
    pub fn actuator_gradient(&self, sol: &PostureSolution<T>, links: &[T]) -> Result<(T, T), LinkageError> {
        let (tm, tp) = (sol.theta_mcp, sol.theta_pip);
        let lu = Lu::factor(self.n, self.jacobian(&sol.x, links, tm, tp))
            .ok_or(LinkageError::NonConvergent { residual: sol.residual.as_f64() })?;
        let h = T::epsilon().cbrt();
        let len = |x: &[T]| self.actuator_length(x).ok_or(LinkageError::Config("no actuator configured".into()));
        let mut d = [T::zero(); 2];
        for (k, (dm, dp)) in [(h, T::zero()), (T::zero(), h)].into_iter().enumerate() {
            let plus = self.chord(&lu, &sol.x, links, tm + dm, tp + dp)?;
            let minus = self.chord(&lu, &sol.x, links, tm - dm, tp - dp)?;
            d[k] = (len(&plus)? - len(&minus)?) / (T::c(2.0) * h);
        }
        Ok((d[0], d[1]))
    }

    /// Solves every sweep posture in order, warm-starting each step from a
    /// linear extrapolation of the previous two.
    pub fn sweep_postures(
        &self,
        links: &[T],
        sweep: &SweepSpec,
        start: &PostureSolution<T>,
    ) -> Result<Vec<PostureSolution<T>>, LinkageError> {
        if sweep.steps < 2 {
            return Err(LinkageError::Config("sweep needs at least 2 steps".into()));
        }
        let mut out: Vec<PostureSolution<T>> = Vec::with_capacity(sweep.steps);
        for k in 0..sweep.steps {
            let (tm, tp) = sweep.angles::<T>(k);
            let base = out.last().unwrap_or(start);
            let guess: Vec<T> = match out.len() {
                n if n >= 2 => base.x.iter().zip(&out[n - 2].x).map(|(a, b)| *a + *a - *b).collect(),
                _ => base.x.clone(),
            };
            let (x, residual) = self.newton(&guess, links, tm, tp).map_err(|e| e.at_step(k))?;
            let jump = self.max_jump(&x, &base.x);
            if jump > T::c(self.config.solver.max_step) {
                return Err(LinkageError::BranchFlip { jump: jump.as_f64() }.at_step(k));
            }
            out.push(PostureSolution { x, theta_mcp: tm, theta_pip: tp, residual });
        }
        Ok(out)
    }

    /// Sweeps the finger from open to closed starting at an assembled open posture.
    pub fn sweep_transmission(
        &self,
        links: &[T],
        sweep: &SweepSpec,
        start: &PostureSolution<T>,
    ) -> Result<TransmissionResult<T>, LinkageError> {
        let postures = self.sweep_postures(links, sweep, start)?;
        let force = T::c(sweep.force / 1000.0);
        let mut tau_mcp = Vec::with_capacity(sweep.steps);
        let mut tau_pip = Vec::with_capacity(sweep.steps);
        let mut actuator = Vec::with_capacity(sweep.steps);
        let mut smin = vec![T::infinity(); self.sliders.len()];
        let mut smax = vec![T::neg_infinity(); self.sliders.len()];
        for (k, sol) in postures.iter().enumerate() {
            let (gm, gp) = self.actuator_gradient(sol, links).map_err(|e| e.at_step(k))?;
            tau_mcp.push(force * gm);
            tau_pip.push(force * gp);
            actuator.push(self.actuator_length(&sol.x).ok_or(LinkageError::Config("no actuator configured".into()))?);
            for (s, &i) in self.sliders.iter().enumerate() {
                smin[s] = smin[s].min(sol.x[i]);
                smax[s] = smax[s].max(sol.x[i]);
            }
        }
        // Trapezoid weights: the mean over the joint-angle interval rather than over samples.
        let last = sweep.steps - 1;
        let mean_abs = |v: &[T]| {
            let inner = v[1..last].iter().fold(T::zero(), |a, x| a + x.abs());
            (inner + (v[0].abs() + v[last].abs()) / T::c(2.0)) / T::c(last as f64)
        };
        let amax = actuator.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let amin = actuator.iter().fold(T::infinity(), |a, &b| a.min(b));
        Ok(TransmissionResult {
            tau_mcp_mean: mean_abs(&tau_mcp),
            tau_pip_mean: mean_abs(&tau_pip),
            tau_mcp,
            tau_pip,
            actuator,
            lx: amax - amin,
            slider_min: smin,
            slider_max: smax,
        })
    }
}
